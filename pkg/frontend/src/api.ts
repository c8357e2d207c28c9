/** Typed client for the partsketch session service (see docs/api.md). */

export interface ViewPayload {
  direction: [number, number, number];
  up: [number, number, number];
}

export interface SessionInfo {
  session_id: string;
  class: string;
  lambda1: number;
  lambda2: number;
  view: ViewPayload;
  canvas_size: number;
  shadow_url: string;
}

export interface GalleryEntry {
  part_id: string;
  score: number;
  breakdown: { sketch: number; detail: number; overall: number };
  origin: "retrieved" | "suggested";
  thumb_url: string;
}

export interface GalleryResponse {
  gallery_token: string;
  entries: GalleryEntry[];
}

export interface PlacedPartInfo {
  part_id: string;
  category: string;
  transform: number[];
  fallback: boolean;
  mirrored_from: string | null;
}

export interface SelectResponse {
  placed: PlacedPartInfo[];
  selected: string;
  mirrored: string | null;
  open_slots: string[];
  suggestions: string[];
  model_url: string;
}

export interface StrokePayload {
  polylines: [number, number][][];
  canvas: { width: number; height: number };
  category: string;
}

async function asJson<T>(resp: Response): Promise<T> {
  if (!resp.ok) {
    let message = `${resp.status}`;
    try {
      const body = await resp.json();
      if (body && body.error) message = body.error;
    } catch {
      /* non-JSON error body */
    }
    throw new Error(message);
  }
  return (await resp.json()) as T;
}

export class ApiClient {
  constructor(readonly base: string = "") {}

  async classes(): Promise<{ classes: string[]; categories: string[] }> {
    return asJson(await fetch(`${this.base}/classes`));
  }

  async createSession(cls: string, lambda1?: number, lambda2?: number): Promise<SessionInfo> {
    return asJson(
      await fetch(`${this.base}/sessions`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ class: cls, lambda1, lambda2 }),
      }),
    );
  }

  async submitStrokes(sessionId: string, payload: StrokePayload): Promise<GalleryResponse> {
    return asJson(
      await fetch(`${this.base}/sessions/${sessionId}/strokes`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(payload),
      }),
    );
  }

  async selectPart(sessionId: string, partId: string, token: string): Promise<SelectResponse> {
    return asJson(
      await fetch(`${this.base}/sessions/${sessionId}/select`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ part_id: partId, gallery_token: token }),
      }),
    );
  }

  async setView(sessionId: string, direction: [number, number, number]): Promise<{ view: ViewPayload }> {
    return asJson(
      await fetch(`${this.base}/sessions/${sessionId}/view`, {
        method: "PUT",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ direction }),
      }),
    );
  }

  shadowUrl(sessionId: string): string {
    return `${this.base}/sessions/${sessionId}/shadow?t=${Date.now()}`;
  }

  async fetchModel(sessionId: string): Promise<string> {
    const resp = await fetch(`${this.base}/sessions/${sessionId}/model`);
    if (!resp.ok) throw new Error(`model fetch failed: ${resp.status}`);
    return resp.text();
  }
}
