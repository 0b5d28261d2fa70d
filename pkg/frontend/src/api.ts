import type {
  ConfusionData,
  DataStream,
  DatasetData,
  Envelope,
  FormSpec,
  JobData,
  LoginData,
  PluginDescriptor,
  QuestionnaireSummary,
  ScoreRow,
  SeriesData,
} from "./types";

const API = "/api/v1";

export class ApiError extends Error {
  status: number;
  code: string;
  line?: number;
  issues?: { item: string; reason: string }[];

  constructor(status: number, body: { code: string; message: string; line?: number; issues?: { item: string; reason: string }[] }) {
    super(body.message);
    this.status = status;
    this.code = body.code;
    this.line = body.line;
    this.issues = body.issues;
  }
}

type Query = Record<string, string | number | undefined>;

/** Thin client over the JSON envelope API. Attaches the bearer token to every
 * call, funnels 401s into one handler, and drops stale responses when a view
 * fires overlapping requests. */
export class ApiClient {
  token: string | null = null;
  private base: string;
  private onUnauthorized: () => void;
  private seqs = new Map<string, number>();

  constructor(base = "", onUnauthorized: () => void = () => {}) {
    this.base = base;
    this.onUnauthorized = onUnauthorized;
  }

  private async request<T>(
    method: string,
    path: string,
    opts: { query?: Query; json?: unknown; text?: string } = {},
  ): Promise<T> {
    let url = this.base + path;
    if (opts.query) {
      const qs = new URLSearchParams();
      for (const [k, v] of Object.entries(opts.query)) {
        if (v !== undefined) qs.set(k, String(v));
      }
      url += `?${qs.toString()}`;
    }
    const headers: Record<string, string> = {};
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    let body: string | undefined;
    if (opts.json !== undefined) {
      headers["Content-Type"] = "application/json";
      body = JSON.stringify(opts.json);
    } else if (opts.text !== undefined) {
      headers["Content-Type"] = "text/plain;charset=utf-8";
      body = opts.text;
    }
    const response = await fetch(url, { method, headers, body });
    const doc = (await response.json()) as Envelope<T>;
    if (!doc.ok) {
      if (response.status === 401) {
        this.token = null;
        this.onUnauthorized();
      }
      throw new ApiError(response.status, doc.error);
    }
    return doc.data;
  }

  /** Run a request for a view slot; resolves null when a newer request for
   * the same slot started before this one finished. */
  async latest<T>(slot: string, run: () => Promise<T>): Promise<T | null> {
    const seq = (this.seqs.get(slot) ?? 0) + 1;
    this.seqs.set(slot, seq);
    const result = await run();
    return this.seqs.get(slot) === seq ? result : null;
  }

  async login(username: string, password: string): Promise<LoginData> {
    const data = await this.request<LoginData>("POST", `${API}/auth/login`, {
      json: { username, password },
    });
    this.token = data.token;
    return data;
  }

  async logout(): Promise<void> {
    try {
      await this.request("POST", `${API}/auth/logout`);
    } finally {
      this.token = null;
    }
  }

  portfolio(): Promise<PluginDescriptor[]> {
    return this.request("GET", `${API}/portfolio`);
  }

  vizData(pluginId: string, params: Query): Promise<DataStream> {
    return this.request("GET", `${API}/viz/${encodeURIComponent(pluginId)}/data`, { query: params });
  }

  series(subject: string, channel: string, t0: number, t1: number): Promise<SeriesData> {
    return this.request("GET", `${API}/series`, { query: { subject, channel, t0, t1 } });
  }

  questionnaires(): Promise<QuestionnaireSummary[]> {
    return this.request("GET", `${API}/questionnaires`);
  }

  form(qid: string): Promise<FormSpec> {
    return this.request("GET", `${API}/questionnaires/${encodeURIComponent(qid)}/form`);
  }

  submitResponse(
    qid: string,
    subject: string,
    answers: Record<string, number | string>,
  ): Promise<{ stored: boolean; score: { total: number; n_scored: number } | null }> {
    return this.request("POST", `${API}/questionnaires/${encodeURIComponent(qid)}/responses`, {
      json: { subject, answers, answered_at: Date.now() },
    });
  }

  scores(qid: string, subject: string): Promise<ScoreRow[]> {
    return this.request("GET", `${API}/questionnaires/${encodeURIComponent(qid)}/scores`, {
      query: { subject },
    });
  }

  uploadDataset(csv: string, task = "classification"): Promise<DatasetData> {
    return this.request("POST", `${API}/ml/datasets`, { query: { task }, text: csv });
  }

  train(spec: Record<string, unknown>): Promise<{ job_id: string; state: string }> {
    return this.request("POST", `${API}/ml/train`, { json: spec });
  }

  job(jobId: string): Promise<JobData> {
    return this.request("GET", `${API}/ml/jobs/${encodeURIComponent(jobId)}`);
  }

  confusion(jobId: string): Promise<ConfusionData> {
    return this.request("GET", `${API}/ml/jobs/${encodeURIComponent(jobId)}/confusion`);
  }
}
