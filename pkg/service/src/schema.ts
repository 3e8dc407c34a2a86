import { z } from "zod";

export const generateRequest = z.object({
  context: z.string(),
  answer: z.string(),
});

export const answerRequest = z.object({
  context: z.string(),
  question: z.string(),
});

export const nounPhrasesRequest = z.object({
  sentence: z.string(),
});

export type GenerateRequest = z.infer<typeof generateRequest>;
export type AnswerRequest = z.infer<typeof answerRequest>;
export type NounPhrasesRequest = z.infer<typeof nounPhrasesRequest>;

export interface NpSpan {
  start: number;
  end: number;
  text: string;
}

export interface ServiceConfig {
  qgModel: string;
  qaModel: string;
  npModel: string;
  port: number;
  maxBatch: number;
  device: string;
}

export const DEFAULT_CONFIG: ServiceConfig = {
  qgModel: "rule-qg-v1",
  qaModel: "rule-qa-v1",
  npModel: "rule-np-v1",
  port: 8040,
  maxBatch: 16,
  device: "cpu",
};

export function validateConfig(config: ServiceConfig): void {
  if (!Number.isInteger(config.port) || config.port < 0 || config.port > 65535) {
    throw new Error(`invalid port ${config.port}`);
  }
  if (!Number.isInteger(config.maxBatch) || config.maxBatch < 1) {
    throw new Error(`max batch size must be >= 1, got ${config.maxBatch}`);
  }
}
