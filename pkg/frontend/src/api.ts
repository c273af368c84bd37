// Typed client for the annotation service HTTP API. The fetch implementation
// is injectable so tests can run against a scripted service.

import type { AnnotationTask } from "./state.js";

export class ApiError extends Error {
  constructor(
    message: string,
    public readonly status: number,
  ) {
    super(message);
  }
}

export interface ServiceApi {
  nextTask(annotatorId: string): Promise<AnnotationTask | null>;
  submitRating(annotatorId: string, taskId: string, q1: number, q2: number): Promise<void>;
  skipTask(annotatorId: string, taskId: string, reason: string): Promise<void>;
  exportCsv(): Promise<string>;
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function errorDetail(resp: Response): Promise<string> {
  try {
    const body = (await resp.json()) as { detail?: unknown };
    if (typeof body.detail === "string") return body.detail;
    return JSON.stringify(body.detail ?? body);
  } catch {
    return resp.statusText;
  }
}

export class HttpServiceApi implements ServiceApi {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  async nextTask(annotatorId: string): Promise<AnnotationTask | null> {
    const resp = await this.fetchImpl(
      `${this.baseUrl}/api/annotator/${encodeURIComponent(annotatorId)}/next`,
    );
    if (resp.status === 204) return null;
    if (!resp.ok) throw new ApiError(await errorDetail(resp), resp.status);
    return (await resp.json()) as AnnotationTask;
  }

  async submitRating(
    annotatorId: string,
    taskId: string,
    q1: number,
    q2: number,
  ): Promise<void> {
    const resp = await this.fetchImpl(`${this.baseUrl}/api/ratings`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ annotator_id: annotatorId, task_id: taskId, q1, q2 }),
    });
    if (!resp.ok) throw new ApiError(await errorDetail(resp), resp.status);
  }

  async skipTask(annotatorId: string, taskId: string, reason: string): Promise<void> {
    const resp = await this.fetchImpl(`${this.baseUrl}/api/skip`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ annotator_id: annotatorId, task_id: taskId, reason }),
    });
    if (!resp.ok) throw new ApiError(await errorDetail(resp), resp.status);
  }

  async exportCsv(): Promise<string> {
    const resp = await this.fetchImpl(`${this.baseUrl}/api/export.csv`);
    if (!resp.ok) throw new ApiError(await errorDetail(resp), resp.status);
    return await resp.text();
  }
}
