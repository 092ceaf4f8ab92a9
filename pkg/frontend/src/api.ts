// Typed client for the localization service. All project state lives on the
// server; this client never caches record data beyond the current call.

export interface ProjectSummary {
  id: string;
  name: string;
  frame_count: number;
  annotation_count: number;
  poi_count: number;
  mesh_url: string;
}

export interface FrameInfo {
  frame_id: string;
  timestamp_sec: number;
  width: number;
  height: number;
  has_pose: boolean;
  image_url: string;
}

export interface PromptDto {
  u: number;
  v: number;
  polarity: 'positive' | 'negative';
}

export interface FrameBox {
  u_min: number;
  v_min: number;
  u_max: number;
  v_max: number;
  area: number;
}

export interface SessionInfo {
  id: string;
  project_id: string;
  frame_id: string;
  label: string;
  description: string;
  state: string;
  prompts: PromptDto[];
  mask_rle: number[] | null;
  width: number | null;
  height: number | null;
  frame_boxes?: Record<string, FrameBox>;
}

export interface BoxDto {
  center: number[];
  axes: number[]; // row-major 3x3, columns are the box axes
  half_extents: number[];
}

export interface PoiDto {
  id: string;
  label: string;
  description: string;
  frame_ids: string[];
  box: BoxDto | null;
  support_count: number;
  status: 'pending' | 'cast' | 'failed';
  failure_reason: string | null;
  cluster_sizes: number[];
}

export interface JobInfo {
  id: string;
  kind: 'propagate' | 'localize';
  project_id: string;
  session_id: string;
  state: 'queued' | 'running' | 'done' | 'failed';
  failure_reason: string | null;
  created_at: string;
  started_at: string | null;
  finished_at: string | null;
  duration_sec: number | null;
  progress: number;
  next_job_id: string | null;
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private base: string = '',
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchFn(this.base + path, init);
    if (!resp.ok) {
      let detail = resp.statusText;
      try {
        const body = await resp.json();
        detail = body.detail ?? detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(resp.status, detail);
    }
    return (await resp.json()) as T;
  }

  private post<T>(path: string, body?: unknown): Promise<T> {
    return this.request<T>(path, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
  }

  listProjects(): Promise<ProjectSummary[]> {
    return this.request('/projects');
  }

  listFrames(projectId: string): Promise<FrameInfo[]> {
    return this.request(`/projects/${projectId}/frames`);
  }

  listSessions(projectId: string): Promise<SessionInfo[]> {
    return this.request(`/projects/${projectId}/sessions`);
  }

  getSession(sessionId: string): Promise<SessionInfo> {
    return this.request(`/sessions/${sessionId}`);
  }

  listPois(projectId: string): Promise<PoiDto[]> {
    return this.request(`/projects/${projectId}/pois`);
  }

  listJobs(projectId: string): Promise<JobInfo[]> {
    return this.request(`/projects/${projectId}/jobs`);
  }

  getJob(jobId: string): Promise<JobInfo> {
    return this.request(`/jobs/${jobId}`);
  }

  createSession(projectId: string, frameId: string, label: string, description = ''): Promise<SessionInfo> {
    return this.post(`/projects/${projectId}/sessions`, {
      frame_id: frameId,
      label,
      description,
    });
  }

  addPrompt(sessionId: string, u: number, v: number, polarity: 'positive' | 'negative'): Promise<SessionInfo> {
    return this.post(`/sessions/${sessionId}/prompts`, { u, v, polarity });
  }

  clearSession(sessionId: string): Promise<SessionInfo> {
    return this.post(`/sessions/${sessionId}/clear`);
  }

  confirmSession(sessionId: string): Promise<{ job_id: string }> {
    return this.post(`/sessions/${sessionId}/confirm`);
  }

  deleteSession(sessionId: string): Promise<{ deleted: string }> {
    return this.request(`/sessions/${sessionId}`, { method: 'DELETE' });
  }

  fileUrl(relative: string): string {
    return this.base + relative;
  }
}
