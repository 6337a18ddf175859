// REST client for the session API. fetch is injectable for tests.

export interface CreateSessionBody {
  prompt: string;
  creativity?: string;
  interactive?: boolean;
  ref_image_b64?: string;
}

export interface FeedbackBody {
  text?: string;
  accept?: boolean;
  regenerate?: boolean;
  mask_b64?: string;
}

const B64_ALPHABET = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

/** Environment-independent base64 (browser btoa chokes on large buffers anyway). */
export function toBase64(bytes: Uint8Array): string {
  let out = "";
  for (let i = 0; i < bytes.length; i += 3) {
    const b0 = bytes[i];
    const b1 = i + 1 < bytes.length ? bytes[i + 1] : 0;
    const b2 = i + 2 < bytes.length ? bytes[i + 2] : 0;
    out += B64_ALPHABET[b0 >> 2];
    out += B64_ALPHABET[((b0 & 3) << 4) | (b1 >> 4)];
    out += i + 1 < bytes.length ? B64_ALPHABET[((b1 & 15) << 2) | (b2 >> 6)] : "=";
    out += i + 2 < bytes.length ? B64_ALPHABET[b2 & 63] : "=";
  }
  return out;
}

export class ApiError extends Error {
  constructor(public status: number, public detail: string) {
    super(`HTTP ${status}: ${detail}`);
  }
}

export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private fetchImpl: typeof fetch = fetch,
  ) {}

  private async request(path: string, init?: RequestInit): Promise<unknown> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = (await response.json()) as { detail?: unknown };
        if (body.detail !== undefined) detail = JSON.stringify(body.detail);
      } catch {
        // keep statusText
      }
      throw new ApiError(response.status, detail);
    }
    return response.json();
  }

  private post(path: string, body: unknown): Promise<unknown> {
    return this.request(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  async createSession(body: CreateSessionBody): Promise<string> {
    const out = (await this.post("/api/sessions", body)) as { session_id: string };
    return out.session_id;
  }

  getSession(id: string): Promise<any> {
    return this.request(`/api/sessions/${id}`);
  }

  listSessions(): Promise<any[]> {
    return this.request("/api/sessions") as Promise<any[]>;
  }

  postClarifications(id: string, answers: { element: string; answer: string }[]): Promise<unknown> {
    return this.post(`/api/sessions/${id}/clarifications`, { answers });
  }

  postFeedback(id: string, body: FeedbackBody): Promise<unknown> {
    return this.post(`/api/sessions/${id}/feedback`, body);
  }

  artifactUrl(hash: string): string {
    return `${this.baseUrl}/api/artifacts/${hash}`;
  }

  eventsUrl(id: string): string {
    return `${this.baseUrl}/api/sessions/${id}/events`;
  }

  async fetchArtifact(hash: string): Promise<Uint8Array> {
    const response = await this.fetchImpl(this.artifactUrl(hash));
    if (!response.ok) throw new ApiError(response.status, "artifact not found");
    return new Uint8Array(await response.arrayBuffer());
  }
}
