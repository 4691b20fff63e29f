/**
 * Typed client for the diagnosis service JSON API.
 *
 * Every method returns parsed payloads plus the raw response text, so tests
 * and the what-if pane can compare responses byte for byte.
 */

export interface FindingSuggestion {
  id: number;
  phrase: string;
  name: string;
}

export interface SuggestedTest {
  finding_id: number;
  name: string;
  weight: number;
}

export interface DifferentialEntry {
  disorder_id: number;
  name: string;
  category: string;
  posterior: number;
  processes: number[];
  suggested_tests: SuggestedTest[];
}

export interface CaseEcho {
  positive: number[];
  negative: number[];
  demographics: {
    age: number | null;
    sex: string | null;
    nationality: string | null;
  };
}

export interface Diagnostics {
  bound: number;
  exact_set: number[];
  iterations: number;
  k: number;
  fingerprint: string;
}

export interface DiagnosisResponse {
  differential: DifferentialEntry[];
  case: CaseEcho;
  diagnostics: Diagnostics;
}

export interface HealthInfo {
  status: string;
  fingerprint: string;
  disorders: number;
  findings: number;
  links: number;
  backend: string;
}

export interface Demographics {
  age?: number | null;
  sex?: string | null;
  nationality?: string | null;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
    readonly detail: string = "",
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function parseError(response: Response): Promise<ApiError> {
  let message = response.statusText || `HTTP ${response.status}`;
  let detail = "";
  try {
    const body = (await response.json()) as { message?: string; detail?: string };
    message = body.message ?? message;
    detail = body.detail ?? "";
  } catch {
    // non-JSON error body; keep the status text
  }
  return new ApiError(response.status, message, detail);
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  private async get(path: string): Promise<{ raw: string; status: number }> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`);
    if (!response.ok) throw await parseError(response);
    return { raw: await response.text(), status: response.status };
  }

  async health(): Promise<HealthInfo> {
    const { raw } = await this.get("/api/health");
    return JSON.parse(raw) as HealthInfo;
  }

  /** Empty prefixes never hit the network; the UI treats them as "no query". */
  async searchFindings(prefix: string): Promise<FindingSuggestion[]> {
    if (!prefix.trim()) return [];
    const { raw } = await this.get(`/api/findings?q=${encodeURIComponent(prefix)}`);
    return (JSON.parse(raw) as { results: FindingSuggestion[] }).results;
  }

  async concept(id: number): Promise<Record<string, unknown>> {
    const { raw } = await this.get(`/api/concepts/${id}`);
    return JSON.parse(raw) as Record<string, unknown>;
  }

  /** POST a diagnosis request; returns the parsed payload plus raw bytes. */
  async diagnose(
    positive: number[],
    negative: number[],
    demographics: Demographics = {},
    signal?: AbortSignal,
  ): Promise<{ response: DiagnosisResponse; raw: string }> {
    const body: Record<string, unknown> = {
      positive: [...positive].sort((a, b) => a - b),
      negative: [...negative].sort((a, b) => a - b),
    };
    if (demographics.age != null) body.age = demographics.age;
    if (demographics.sex) body.sex = demographics.sex;
    if (demographics.nationality) body.nationality = demographics.nationality;
    return this.post("/api/diagnose", JSON.stringify(body), "application/json", signal);
  }

  /** Submit a raw payload (e.g. exported case XML) for diagnosis. */
  async post(
    path: string,
    payload: string,
    contentType: string,
    signal?: AbortSignal,
  ): Promise<{ response: DiagnosisResponse; raw: string }> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, {
      method: "POST",
      headers: { "Content-Type": contentType },
      body: payload,
      signal,
    });
    if (!response.ok) throw await parseError(response);
    const raw = await response.text();
    return { response: JSON.parse(raw) as DiagnosisResponse, raw };
  }
}
