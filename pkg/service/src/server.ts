import http from "node:http";
import { Engines } from "./engines";
import { answerRequest, generateRequest, nounPhrasesRequest } from "./schema";
import { ZodSchema } from "zod";

const BODY_LIMIT = 1024 * 1024;

function sendJson(res: http.ServerResponse, status: number, payload: unknown): void {
  const body = JSON.stringify(payload);
  res.writeHead(status, {
    "content-type": "application/json; charset=utf-8",
    "content-length": Buffer.byteLength(body),
  });
  res.end(body);
}

function readBody(req: http.IncomingMessage): Promise<string> {
  return new Promise((resolve, reject) => {
    const chunks: Buffer[] = [];
    let size = 0;
    req.on("data", (chunk: Buffer) => {
      size += chunk.length;
      if (size > BODY_LIMIT) {
        reject(new Error("request body too large"));
        req.destroy();
        return;
      }
      chunks.push(chunk);
    });
    req.on("end", () => resolve(Buffer.concat(chunks).toString("utf-8")));
    req.on("error", reject);
  });
}

function parseWith<T>(schema: ZodSchema<T>, raw: string): T {
  let decoded: unknown;
  try {
    decoded = JSON.parse(raw);
  } catch (err) {
    throw new BadRequest(`invalid JSON: ${(err as Error).message}`);
  }
  const result = schema.safeParse(decoded);
  if (!result.success) {
    const issue = result.error.issues[0];
    const where = issue.path.length ? issue.path.join(".") : "body";
    throw new BadRequest(`${where}: ${issue.message}`);
  }
  return result.data;
}

class BadRequest extends Error {}

export function createServer(engines: Engines): http.Server {
  return http.createServer(async (req, res) => {
    const url = req.url ?? "/";
    try {
      if (req.method === "GET" && url === "/healthz") {
        sendJson(res, 200, { status: "ok" });
        return;
      }
      if (url === "/v1/generate" || url === "/v1/answer" || url === "/v1/nounphrases") {
        if (req.method !== "POST") {
          sendJson(res, 405, { error: "method not allowed" });
          return;
        }
        const raw = await readBody(req);
        if (url === "/v1/generate") {
          const body = parseWith(generateRequest, raw);
          sendJson(res, 200, { question: engines.generate(body.context, body.answer) });
        } else if (url === "/v1/answer") {
          const body = parseWith(answerRequest, raw);
          sendJson(res, 200, { answer: engines.answer(body.context, body.question) });
        } else {
          const body = parseWith(nounPhrasesRequest, raw);
          sendJson(res, 200, { spans: engines.nounPhrases(body.sentence) });
        }
        return;
      }
      sendJson(res, 404, { error: "not found" });
    } catch (err) {
      if (err instanceof BadRequest) {
        sendJson(res, 400, { error: err.message });
        return;
      }
      console.error(err);
      sendJson(res, 500, { error: "internal error" });
    }
  });
}
