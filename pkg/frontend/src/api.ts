/**
 * Thin client for the session HTTP API. Every dashboard action maps to
 * exactly one request here; nothing is synthesized client-side.
 */

import type {
  Annotation,
  OperatorCommand,
  SessionRow,
  Snapshot,
  StreamDelta,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
    this.name = "ApiError";
  }
}

async function readJson<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let detail = response.statusText;
    try {
      const body = (await response.json()) as { detail?: string };
      if (typeof body.detail === "string") detail = body.detail;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiError(response.status, detail);
  }
  return (await response.json()) as T;
}

export class ApiClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchImpl: typeof fetch = fetch,
  ) {}

  async getSessions(): Promise<SessionRow[]> {
    return readJson(await this.fetchImpl(`${this.baseUrl}/sessions`));
  }

  async getSnapshot(options: { session?: string; tick?: number } = {}): Promise<Snapshot> {
    const params = new URLSearchParams();
    if (options.session !== undefined) params.set("session", options.session);
    if (options.tick !== undefined) params.set("tick", String(options.tick));
    const query = params.size > 0 ? `?${params}` : "";
    return readJson(await this.fetchImpl(`${this.baseUrl}/snapshot${query}`));
  }

  async postCommand(command: OperatorCommand): Promise<Record<string, unknown>> {
    const response = await this.fetchImpl(`${this.baseUrl}/command`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(command),
    });
    return readJson(response);
  }

  async getAnnotations(options: { session?: string; subject?: string } = {}): Promise<Annotation[]> {
    const params = new URLSearchParams();
    if (options.session !== undefined) params.set("session", options.session);
    if (options.subject !== undefined) params.set("subject", options.subject);
    const query = params.size > 0 ? `?${params}` : "";
    return readJson(await this.fetchImpl(`${this.baseUrl}/annotations${query}`));
  }

  async postAnnotation(body: {
    subject: string;
    text: string;
    session?: string;
    author?: string;
  }): Promise<Record<string, unknown>> {
    const response = await this.fetchImpl(`${this.baseUrl}/annotations`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    return readJson(response);
  }

  async getReportCsv(options: {
    from: number;
    to: number;
    threshold?: number;
    session?: string;
  }): Promise<string> {
    const params = new URLSearchParams({
      from: String(options.from),
      to: String(options.to),
    });
    if (options.threshold !== undefined) params.set("threshold", String(options.threshold));
    if (options.session !== undefined) params.set("session", options.session);
    const response = await this.fetchImpl(`${this.baseUrl}/report?${params}`);
    if (!response.ok) throw new ApiError(response.status, await response.text());
    return response.text();
  }

  /**
   * Subscribe to GET /stream and yield deltas in arrival order. The server
   * sends records strictly ordered by seq; ordering enforcement (and the
   * refetch-on-gap policy) lives in the ViewModel, not here.
   */
  async *streamDeltas(options: {
    session?: string;
    fromSeq?: number;
    signal?: AbortSignal;
  } = {}): AsyncGenerator<StreamDelta> {
    const params = new URLSearchParams();
    if (options.session !== undefined) params.set("session", options.session);
    if (options.fromSeq !== undefined) params.set("from_seq", String(options.fromSeq));
    const query = params.size > 0 ? `?${params}` : "";
    const response = await this.fetchImpl(`${this.baseUrl}/stream${query}`, {
      signal: options.signal ?? null,
    });
    if (!response.ok || response.body === null) {
      throw new ApiError(response.status, "stream unavailable");
    }
    yield* parseSseStream(response.body, options.signal);
  }
}

/**
 * Parse a server-sent-event byte stream into deltas. Each event block is
 * "id: <seq>\nevent: <kind>\ndata: <canonical record JSON>\n\n"; the data
 * line already carries seq/tick/kind/data, so it is the single source.
 */
export async function* parseSseStream(
  body: ReadableStream<Uint8Array>,
  signal?: AbortSignal,
): AsyncGenerator<StreamDelta> {
  const reader = body.getReader();
  const decoder = new TextDecoder();
  let buffer = "";
  try {
    for (;;) {
      if (signal?.aborted) return;
      const { done, value } = await reader.read();
      if (done) break;
      buffer += decoder.decode(value, { stream: true });
      let boundary: number;
      while ((boundary = buffer.indexOf("\n\n")) >= 0) {
        const block = buffer.slice(0, boundary);
        buffer = buffer.slice(boundary + 2);
        const delta = parseSseBlock(block);
        if (delta !== null) yield delta;
      }
    }
  } finally {
    reader.releaseLock();
  }
}

function parseSseBlock(block: string): StreamDelta | null {
  for (const line of block.split("\n")) {
    if (line.startsWith("data:")) {
      return JSON.parse(line.slice(5).trim()) as StreamDelta;
    }
  }
  return null;
}
