/** HTTP client for the pose service, plus the debounced preview pipeline. */

import { PoseDocument, documentToJson, serializeDocument } from "./pose.js";
import { DeformMode, FactorSource } from "./state.js";

export class ApiError extends Error {
  constructor(
    readonly code: string,
    message: string,
    readonly status: number,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export type FetchFn = (url: string, init?: RequestInit) => Promise<Response>;

interface DeformBody {
  person: Record<string, unknown>;
  art?: unknown;
  tau_a?: number[];
  naive?: boolean;
}

function deformPayload(
  doc: PoseDocument,
  source: FactorSource,
  mode: DeformMode,
): DeformBody {
  // Documents ride along as embedded JSON objects, not strings.
  const body: DeformBody = { person: documentToJson(doc) };
  if (source.kind === "pose") {
    body.art = JSON.parse(source.text);
  } else if (source.kind === "numbers") {
    body.tau_a = source.tau;
  }
  if (mode === "naive") body.naive = true;
  return body;
}

async function readError(res: Response): Promise<ApiError> {
  let code = "internal";
  let message = `service responded ${res.status}`;
  try {
    const body = (await res.json()) as { error?: { code?: string; message?: string } };
    if (body.error) {
      if (typeof body.error.code === "string") code = body.error.code;
      if (typeof body.error.message === "string") message = body.error.message;
    }
  } catch {
    // keep the status-line fallback
  }
  return new ApiError(code, message, res.status);
}

export class ServiceClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchFn = (url, init) => fetch(url, init),
  ) {}

  private async post(path: string, body: unknown): Promise<string> {
    let res: Response;
    try {
      res = await this.fetchFn(this.baseUrl + path, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(body),
      });
    } catch (e) {
      throw new ApiError("unreachable", (e as Error).message, 0);
    }
    if (!res.ok) throw await readError(res);
    return res.text();
  }

  async health(): Promise<{ version: string; kinds: string[] }> {
    let res: Response;
    try {
      res = await this.fetchFn(this.baseUrl + "/api/health");
    } catch (e) {
      throw new ApiError("unreachable", (e as Error).message, 0);
    }
    if (!res.ok) throw await readError(res);
    return (await res.json()) as { version: string; kinds: string[] };
  }

  /**
   * Returns the raw response text. Exported files must be exactly what
   * the service produced, so no parse/re-serialize cycle here.
   */
  async deform(
    doc: PoseDocument,
    source: FactorSource,
    mode: DeformMode,
  ): Promise<string> {
    return this.post("/api/deform", deformPayload(doc, source, mode));
  }

  /** The request body is the pose document itself. */
  async complete(doc: PoseDocument): Promise<string> {
    let res: Response;
    try {
      res = await this.fetchFn(this.baseUrl + "/api/complete", {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: serializeDocument(doc),
      });
    } catch (e) {
      throw new ApiError("unreachable", (e as Error).message, 0);
    }
    if (!res.ok) throw await readError(res);
    return res.text();
  }
}

export interface PreviewCallbacks {
  /** Fresh deformed document text from the service. */
  onResult: (text: string) => void;
  /** The service answered with an error envelope. */
  onError: (err: ApiError) => void;
  /** Could not refresh; whatever is on screen is stale. */
  onStale: () => void;
}

type Scheduler = {
  set: (fn: () => void, ms: number) => ReturnType<typeof setTimeout>;
  clear: (id: ReturnType<typeof setTimeout>) => void;
};

const realTimers: Scheduler = {
  set: (fn, ms) => setTimeout(fn, ms),
  clear: (id) => clearTimeout(id),
};

export const PREVIEW_DEBOUNCE_MS = 100;

/**
 * Debounces preview requests during a drag and drops answers that were
 * overtaken by a newer request, so the overlay never flickers backwards.
 */
export class DebouncedPreview {
  private timer: ReturnType<typeof setTimeout> | null = null;
  private generation = 0;
  private inFlight = false;
  private queued: (() => Promise<string>) | null = null;

  constructor(
    private readonly callbacks: PreviewCallbacks,
    private readonly timers: Scheduler = realTimers,
  ) {}

  /** Schedule `request` after the debounce window, replacing any pending one. */
  schedule(request: () => Promise<string>): void {
    if (this.timer !== null) this.timers.clear(this.timer);
    this.timer = this.timers.set(() => {
      this.timer = null;
      this.fire(request);
    }, PREVIEW_DEBOUNCE_MS);
  }

  /** Skip the debounce window (mode toggles, drag end). */
  flush(request: () => Promise<string>): void {
    if (this.timer !== null) {
      this.timers.clear(this.timer);
      this.timer = null;
    }
    this.fire(request);
  }

  private fire(request: () => Promise<string>): void {
    if (this.inFlight) {
      // One request on the wire at a time; remember only the newest.
      this.queued = request;
      return;
    }
    const gen = ++this.generation;
    this.inFlight = true;
    request().then(
      (text) => this.settle(gen, () => this.callbacks.onResult(text)),
      (err) =>
        this.settle(gen, () => {
          if (err instanceof ApiError && err.status > 0) {
            this.callbacks.onError(err);
          } else {
            this.callbacks.onStale();
          }
        }),
    );
  }

  private settle(gen: number, deliver: () => void): void {
    this.inFlight = false;
    const next = this.queued;
    this.queued = null;
    if (next !== null) {
      // A newer request superseded this answer; fire it and drop ours.
      this.fire(next);
      return;
    }
    if (gen === this.generation) deliver();
  }
}
