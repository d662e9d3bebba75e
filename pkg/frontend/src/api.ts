/**
 * Typed client for the advisor service HTTP API.
 *
 * Every number the dashboard shows originates from one of these responses;
 * the client never post-processes values beyond JSON parsing.
 */

export interface Forecast {
  arm: string;
  m: number;
  mean: number;
  quantiles: Record<string, number>;
  n_draws: number;
}

export interface ArmStat {
  name: string;
  observed: number;
  distinct: number;
}

export interface CurvePoint {
  seq: number;
  distinct: number;
}

export interface SessionInfo {
  id: string;
  arms: string[];
  config: Record<string, unknown>;
  n_events: number;
  ess: number;
  n_particles: number;
  created: number;
  updated: number;
  stats: {
    arms: ArmStat[];
    curve: CurvePoint[];
  };
}

export interface CreateResult {
  id: string;
  arms: string[];
  forecasts: Forecast[];
}

export interface Recommendation {
  mode: "incidence" | "delayed";
  m: number;
  arm?: string;
  allocation?: Record<string, number>;
  expected_new: Record<string, number>;
  rng_key: number[];
}

export interface ObserveResult {
  seq: number;
  ess: number;
  forecasts: Forecast[];
  diagnostics?: {
    ess_first_stage: number;
    ess_second_stage: number;
    jitter: number;
  };
}

export interface SessionEvent {
  seq: number;
  ts: number;
  kind: "created" | "recommended" | "observed";
  [key: string]: unknown;
}

/** Error body {code, message} from the service, or a transport failure. */
export class ApiError extends Error {
  constructor(
    message: string,
    public readonly code: string,
    public readonly status: number,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export class AdvisorClient {
  constructor(
    private readonly baseUrl: string,
    private readonly token?: string,
  ) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = { "content-type": "application/json" };
    if (this.token) headers["authorization"] = `Bearer ${this.token}`;
    let resp: Response;
    try {
      resp = await fetch(this.baseUrl + path, {
        method,
        headers,
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (err) {
      throw new ApiError(`cannot reach ${this.baseUrl}: ${String(err)}`, "unreachable", 0);
    }
    if (!resp.ok) {
      let code = "error";
      let message = `${resp.status} ${resp.statusText}`;
      try {
        const doc = await resp.json();
        if (typeof doc.code === "string") code = doc.code;
        if (typeof doc.message === "string") message = doc.message;
      } catch {
        // non-JSON error body; keep the status line
      }
      throw new ApiError(message, code, resp.status);
    }
    return (await resp.json()) as T;
  }

  healthz(): Promise<{ status: string }> {
    return this.request("GET", "/healthz");
  }

  createSession(
    arms: string[],
    counts: Record<string, Record<string, number>>,
    sessionId?: string,
    config?: Record<string, unknown>,
  ): Promise<CreateResult> {
    const body: Record<string, unknown> = { arms, counts };
    if (sessionId) body["session_id"] = sessionId;
    if (config) body["config"] = config;
    return this.request("POST", "/sessions", body);
  }

  getSession(id: string): Promise<SessionInfo> {
    return this.request("GET", `/sessions/${id}`);
  }

  recommend(id: string, mode: "incidence" | "delayed", m: number): Promise<Recommendation> {
    return this.request("POST", `/sessions/${id}/recommend`, { mode, M: m });
  }

  observe(id: string, arm: string, counts: Record<string, number>): Promise<ObserveResult> {
    return this.request("POST", `/sessions/${id}/observations`, { arm, counts });
  }

  forecast(id: string, m?: number): Promise<{ forecasts: Forecast[] }> {
    const query = m === undefined ? "" : `?M=${m}`;
    return this.request("GET", `/sessions/${id}/forecast${query}`);
  }

  history(id: string): Promise<{ events: SessionEvent[] }> {
    return this.request("GET", `/sessions/${id}/history`);
  }
}
