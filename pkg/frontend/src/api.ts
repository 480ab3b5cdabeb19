// Typed client for the task service. Every call here maps 1:1 onto a
// documented endpoint; nothing else is ever requested.

export interface TaskRow {
  task_id: string;
  category: string;
  submitted_at: string;
  state: string;
}

export interface TaskDetail extends TaskRow {
  safety: string;
  result_ready: boolean;
  error: string | null;
}

export interface LoginResult {
  token: string;
  expires_at: string;
}

export interface DiagnosisResult {
  label: { index: number; name: string };
  scores: number[];
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

export class ApiClient {
  token: string | null = null;

  constructor(
    private baseUrl: string,
    private onUnauthorized: () => void = () => {},
  ) {}

  async register(username: string, password: string): Promise<{ user_id: number }> {
    return this.requestJson("POST", "/api/register", {
      json: { username, password },
      skipAuth: true,
    });
  }

  async login(username: string, password: string): Promise<LoginResult> {
    const result = await this.requestJson<LoginResult>("POST", "/api/login", {
      json: { username, password },
      skipAuth: true,
    });
    this.token = result.token;
    return result;
  }

  async listTasks(): Promise<TaskRow[]> {
    return this.requestJson("GET", "/api/tasks", {});
  }

  async taskDetail(taskId: string): Promise<TaskDetail> {
    return this.requestJson("GET", `/api/tasks/${encodeURIComponent(taskId)}`, {});
  }

  async submitTask(category: string, file: Blob, filename: string): Promise<{ task_id: string }> {
    const form = new FormData();
    form.append("category", category);
    // Always send a named File so the upload carries its filename.
    const named = file instanceof File ? file : new File([file], filename);
    form.append("file", named, named.name);
    return this.requestJson("POST", "/api/tasks", { form });
  }

  async fetchResult(taskId: string): Promise<Uint8Array> {
    const response = await this.request(
      "GET",
      `/api/tasks/${encodeURIComponent(taskId)}/result`,
      {},
    );
    return new Uint8Array(await response.arrayBuffer());
  }

  private async request(
    method: string,
    path: string,
    opts: { json?: unknown; form?: FormData; skipAuth?: boolean },
  ): Promise<Response> {
    const headers = new Headers();
    if (!opts.skipAuth && this.token) {
      headers.set("Authorization", `Bearer ${this.token}`);
    }
    let body: BodyInit | undefined;
    if (opts.json !== undefined) {
      headers.set("Content-Type", "application/json");
      body = JSON.stringify(opts.json);
    } else if (opts.form) {
      body = opts.form; // browser sets the multipart boundary
    }
    const response = await fetch(`${this.baseUrl}${path}`, { method, headers, body });
    if (!response.ok) {
      let code = "http_error";
      let message = `HTTP ${response.status}`;
      try {
        const payload = await response.json();
        if (payload && typeof payload.error === "string") {
          code = payload.error;
          message = payload.message ?? message;
        }
      } catch {
        // non-JSON error body; keep the generic message
      }
      if (response.status === 401) {
        this.token = null;
        this.onUnauthorized();
      }
      throw new ApiError(response.status, code, message);
    }
    return response;
  }

  private async requestJson<T>(
    method: string,
    path: string,
    opts: { json?: unknown; form?: FormData; skipAuth?: boolean },
  ): Promise<T> {
    const response = await this.request(method, path, opts);
    if (response.status === 204) {
      return undefined as T;
    }
    return (await response.json()) as T;
  }
}
