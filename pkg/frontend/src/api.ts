/**
 * Typed client for the registration session API.
 *
 * Every number the viewer displays comes from these endpoints; the client
 * performs no geometry of its own. Cloud payloads are requested in the
 * compact binary framing (count, float32 xyz, color flag, rgb bytes) with a
 * JSON fallback.
 */

import { parseCloudFrame, type CloudData } from "./framing";

export type CloudName = "source" | "target";
export type EstimateMode = "rigid" | "similarity";

export interface PairRecord {
  id: number;
  source_point: [number, number, number];
  target_point: [number, number, number];
}

export interface EstimateResult {
  matrix: number[][];
  mode: EstimateMode;
  rmse: number;
  residuals: number[];
  pair_ids: number[];
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly payload: { error?: string; message?: string } & Record<string, unknown>,
  ) {
    super(payload.message ?? payload.error ?? `HTTP ${status}`);
  }

  get kind(): string {
    return this.payload.error ?? "http-error";
  }
}

async function fail(resp: Response): Promise<never> {
  let payload: Record<string, unknown> = {};
  try {
    payload = await resp.json();
  } catch {
    /* non-JSON error body */
  }
  throw new ApiError(resp.status, payload);
}

export class SessionApi {
  constructor(readonly base: string = "") {}

  private url(path: string): string {
    return this.base + path;
  }

  async getCloud(which: CloudName, lod: number): Promise<CloudData> {
    const resp = await fetch(this.url(`/api/clouds/${which}?lod=${lod}`), {
      headers: { accept: "application/octet-stream" },
    });
    if (!resp.ok) return fail(resp);
    const type = resp.headers.get("content-type") ?? "";
    if (type.includes("octet-stream")) {
      return parseCloudFrame(await resp.arrayBuffer());
    }
    return cloudFromJson(await resp.json());
  }

  async listPairs(): Promise<PairRecord[]> {
    const resp = await fetch(this.url("/api/pairs"));
    if (!resp.ok) return fail(resp);
    return (await resp.json()).pairs as PairRecord[];
  }

  async addPair(
    source: [number, number, number],
    target: [number, number, number],
  ): Promise<number> {
    const resp = await fetch(this.url("/api/pairs"), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ source_point: source, target_point: target }),
    });
    if (!resp.ok) return fail(resp);
    return (await resp.json()).id as number;
  }

  async deletePair(id: number): Promise<void> {
    const resp = await fetch(this.url(`/api/pairs/${id}`), { method: "DELETE" });
    if (!resp.ok) return fail(resp);
  }

  async estimate(mode: EstimateMode): Promise<EstimateResult> {
    const resp = await fetch(this.url("/api/estimate"), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ mode }),
    });
    if (!resp.ok) return fail(resp);
    return (await resp.json()) as EstimateResult;
  }

  async preview(lod: number): Promise<CloudData> {
    const resp = await fetch(this.url(`/api/preview?lod=${lod}`), {
      headers: { accept: "application/octet-stream" },
    });
    if (!resp.ok) return fail(resp);
    const type = resp.headers.get("content-type") ?? "";
    if (type.includes("octet-stream")) {
      return parseCloudFrame(await resp.arrayBuffer());
    }
    return cloudFromJson(await resp.json());
  }

  async exportTransform(path: string): Promise<string> {
    const resp = await fetch(this.url("/api/export"), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ path }),
    });
    if (!resp.ok) return fail(resp);
    return (await resp.json()).path as string;
  }
}

export function cloudFromJson(body: {
  count: number;
  points: number[][];
  colors: number[][] | null;
}): CloudData {
  const points = new Float32Array(body.count * 3);
  for (let i = 0; i < body.count; i++) {
    points[3 * i] = body.points[i][0];
    points[3 * i + 1] = body.points[i][1];
    points[3 * i + 2] = body.points[i][2];
  }
  let colors: Uint8Array | null = null;
  if (body.colors) {
    colors = new Uint8Array(body.count * 3);
    for (let i = 0; i < body.count; i++) {
      colors[3 * i] = body.colors[i][0];
      colors[3 * i + 1] = body.colors[i][1];
      colors[3 * i + 2] = body.colors[i][2];
    }
  }
  return { count: body.count, points, colors };
}
