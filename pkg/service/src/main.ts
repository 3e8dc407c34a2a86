import { parseArgs } from "node:util";
import { AddressInfo } from "node:net";
import { resolveEngines } from "./engines";
import { DEFAULT_CONFIG, ServiceConfig } from "./schema";
import { createServer } from "./server";

function configFromArgv(argv: string[]): ServiceConfig {
  const { values } = parseArgs({
    args: argv,
    options: {
      port: { type: "string", default: String(DEFAULT_CONFIG.port) },
      "qg-model": { type: "string", default: DEFAULT_CONFIG.qgModel },
      "qa-model": { type: "string", default: DEFAULT_CONFIG.qaModel },
      "np-model": { type: "string", default: DEFAULT_CONFIG.npModel },
      "max-batch": { type: "string", default: String(DEFAULT_CONFIG.maxBatch) },
      device: { type: "string", default: DEFAULT_CONFIG.device },
    },
  });
  return {
    port: Number(values.port),
    qgModel: values["qg-model"] as string,
    qaModel: values["qa-model"] as string,
    npModel: values["np-model"] as string,
    maxBatch: Number(values["max-batch"]),
    device: values.device as string,
  };
}

function main(): void {
  let config: ServiceConfig;
  try {
    config = configFromArgv(process.argv.slice(2));
  } catch (err) {
    console.error((err as Error).message);
    process.exit(1);
  }
  let engines;
  try {
    engines = resolveEngines(config);
  } catch (err) {
    console.error((err as Error).message);
    process.exit(1);
  }
  const server = createServer(engines);
  server.listen(config.port, "127.0.0.1", () => {
    const address = server.address() as AddressInfo;
    console.log(`qg-service listening on http://127.0.0.1:${address.port}`);
    console.log(
      `models qg=${config.qgModel} qa=${config.qaModel} np=${config.npModel} ` +
        `batch=${config.maxBatch} device=${config.device}`,
    );
  });
  const shutdown = () => {
    server.close(() => process.exit(0));
  };
  process.on("SIGINT", shutdown);
  process.on("SIGTERM", shutdown);
}

main();
