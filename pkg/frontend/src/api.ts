import type {
  Adjustments,
  DanceRecord,
  FramesDoc,
  Movement,
  RefineResponse,
} from "./types";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: { path?: string; message: string }[],
  ) {
    super(detail.map((d) => (d.path ? `${d.path}: ${d.message}` : d.message)).join("; "));
  }
}

async function parseError(response: Response): Promise<ApiError> {
  let detail: { path?: string; message: string }[] = [
    { message: `HTTP ${response.status}` },
  ];
  try {
    const body = await response.json();
    if (typeof body.detail === "string") {
      detail = [{ message: body.detail }];
    } else if (Array.isArray(body.detail)) {
      detail = body.detail;
    }
  } catch {
    // keep the generic detail
  }
  return new ApiError(response.status, detail);
}

/** Thin typed client over the documented endpoints; no other server access. */
export class StudioApi {
  constructor(
    readonly baseUrl: string = "",
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  private async getJson<T>(path: string): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path);
    if (!response.ok) throw await parseError(response);
    return (await response.json()) as T;
  }

  private async postJson<T>(path: string, body: unknown): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!response.ok) throw await parseError(response);
    return (await response.json()) as T;
  }

  movements(): Promise<Movement[]> {
    return this.getJson("/api/movements");
  }

  planSchema(): Promise<Record<string, unknown>> {
    return this.getJson("/api/schema/plan");
  }

  async createDance(prompt: string): Promise<string> {
    const body = await this.postJson<{ dance_id: string }>("/api/dances", {
      prompt,
    });
    return body.dance_id;
  }

  dance(danceId: string): Promise<DanceRecord> {
    return this.getJson(`/api/dances/${danceId}`);
  }

  frames(danceId: string, version?: string): Promise<FramesDoc> {
    const query = version ? `&version=${encodeURIComponent(version)}` : "";
    return this.getJson(
      `/api/dances/${danceId}/performance?format=frames-json${query}`,
    );
  }

  refine(
    danceId: string,
    selectionIndex: number,
    adjustments: Adjustments,
  ): Promise<RefineResponse> {
    return this.postJson(`/api/dances/${danceId}/refine`, {
      selection_index: selectionIndex,
      adjustments,
    });
  }
}
