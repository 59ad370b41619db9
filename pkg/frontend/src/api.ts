/** Typed client for the termset HTTP service.
 *
 * Every request the UI makes goes through this module; the UI renders the
 * returned payloads verbatim and never recomputes scores or orderings.
 */

export interface ProjectSummary {
  id: string;
  name: string;
}

export interface CorpusInfo {
  format: string;
  documents: number;
  sentences: number;
  parsed: boolean;
  tagged: boolean;
}

export interface ProjectInfo {
  id: string;
  name: string;
  corpus: CorpusInfo | null;
  trained_contexts: string[];
  has_mlp: boolean;
  group_count: number;
  session_count: number;
}

export interface Member {
  surface: string;
  frequency: number;
}

export interface Group {
  id: number;
  canonical: string;
  frequency: number;
  members: Member[];
}

export interface GroupsPage {
  total: number;
  offset: number;
  limit: number;
  groups: Group[];
}

export interface Snippet {
  text: string;
  highlights: [number, number][];
}

export interface SnippetsPayload {
  group_id: number;
  canonical: string;
  snippets: Snippet[];
}

export interface SessionItem {
  group_id: number;
  canonical: string;
  certainty: number;
  seed: boolean;
  completed: boolean;
  features: number[];
}

export interface SessionPayload {
  category: string;
  session_id: string;
  scorer: string;
  items: SessionItem[];
}

export interface SessionSummary {
  id: string;
  category: string;
  seed_ids: number[];
  validated: number;
}

export type JobState = "queued" | "running" | "done" | "failed";

export interface Job {
  id: string;
  kind: string;
  state: JobState;
  progress: number;
  message: string;
}

export interface SaveResult {
  category: string;
  rows: number;
  file: string;
}

export interface TrainOptions {
  contexts?: string[];
  train_config?: Record<string, number | string>;
  group_config?: Record<string, number | boolean>;
}

/** Service error with the {code, message, field?} body decoded. */
export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number,
    readonly code: string,
    readonly field?: string,
  ) {
    super(message);
    this.name = "ApiError";
  }

  /** True when the service itself could not be reached. */
  get unreachable(): boolean {
    return this.status === 0;
  }
}

async function decodeError(res: Response): Promise<ApiError> {
  let body: { message?: string; code?: string; field?: string } = {};
  try {
    body = await res.json();
  } catch {
    // non-JSON error body; fall back to the status line
  }
  return new ApiError(
    body.message ?? `request failed (${res.status})`,
    res.status,
    body.code ?? "error",
    body.field,
  );
}

export class Client {
  constructor(readonly base = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let res: Response;
    try {
      res = await fetch(this.base + path, init);
    } catch {
      throw new ApiError("service unreachable", 0, "unreachable");
    }
    if (!res.ok) throw await decodeError(res);
    return res.json() as Promise<T>;
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  status(): Promise<{ service: string; version: string }> {
    return this.request("/status");
  }

  listProjects(): Promise<{ projects: ProjectSummary[] }> {
    return this.request("/projects");
  }

  createProject(name: string): Promise<ProjectSummary> {
    return this.post("/projects", { name });
  }

  getProject(pid: string): Promise<ProjectInfo> {
    return this.request(`/projects/${pid}`);
  }

  uploadCorpus(
    pid: string,
    data: string | Blob,
    format: "text" | "conllu" = "text",
  ): Promise<Job> {
    return this.request(`/projects/${pid}/corpus`, {
      method: "POST",
      headers: { "content-type": "text/plain", "x-corpus-format": format },
      body: data,
    });
  }

  train(pid: string, options: TrainOptions = {}): Promise<Job> {
    return this.post(`/projects/${pid}/train`, options);
  }

  listJobs(pid: string): Promise<{ jobs: Job[] }> {
    return this.request(`/projects/${pid}/jobs`);
  }

  getJob(pid: string, jid: string): Promise<Job> {
    return this.request(`/projects/${pid}/jobs/${jid}`);
  }

  groups(
    pid: string,
    opts: { filter?: string; offset?: number; limit?: number } = {},
  ): Promise<GroupsPage> {
    const params = new URLSearchParams();
    if (opts.filter) params.set("filter", opts.filter);
    if (opts.offset !== undefined) params.set("offset", String(opts.offset));
    if (opts.limit !== undefined) params.set("limit", String(opts.limit));
    const query = params.toString();
    return this.request(`/projects/${pid}/groups${query ? "?" + query : ""}`);
  }

  snippets(pid: string, gid: number): Promise<SnippetsPayload> {
    return this.request(`/projects/${pid}/groups/${gid}/snippets`);
  }

  expand(
    pid: string,
    category: string,
    seedIds: number[],
    k = 50,
  ): Promise<SessionPayload> {
    return this.post(`/projects/${pid}/expand`, {
      category,
      seed_ids: seedIds,
      k,
    });
  }

  listSessions(pid: string): Promise<{ sessions: SessionSummary[] }> {
    return this.request(`/projects/${pid}/sessions`);
  }

  getSession(pid: string, sid: string): Promise<SessionPayload> {
    return this.request(`/projects/${pid}/sessions/${sid}`);
  }

  validate(
    pid: string,
    sid: string,
    groupId: number,
    completed: boolean,
  ): Promise<SessionPayload> {
    return this.post(`/projects/${pid}/sessions/${sid}/validate`, {
      group_id: groupId,
      completed,
    });
  }

  reexpand(
    pid: string,
    sid: string,
    acceptedIds: number[],
  ): Promise<SessionPayload> {
    return this.post(`/projects/${pid}/sessions/${sid}/reexpand`, {
      accepted_ids: acceptedIds,
    });
  }

  saveSession(pid: string, sid: string): Promise<SaveResult> {
    return this.post(`/projects/${pid}/sessions/${sid}/save`, {});
  }

  exportCsvUrl(pid: string, sid: string): string {
    return `${this.base}/projects/${pid}/sessions/${sid}/export.csv`;
  }

  async exportCsv(pid: string, sid: string): Promise<string> {
    let res: Response;
    try {
      res = await fetch(this.exportCsvUrl(pid, sid));
    } catch {
      throw new ApiError("service unreachable", 0, "unreachable");
    }
    if (!res.ok) throw await decodeError(res);
    return res.text();
  }
}
