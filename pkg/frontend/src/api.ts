/**
 * Typed client for the demandflow REST API.
 *
 * Every number shown anywhere in the UI comes out of these response
 * objects untouched; rendering code may scale geometry from them but
 * must never derive a displayed value itself.
 */

export interface SeriesPoint {
    date: string;
    value: number;
}

export interface AuxSegment {
    start: string;
    end: string;
    mean: number;
}

/** Auxiliary analysis line: per-segment means at one granularity. */
export interface AuxBlock {
    granularity: string;
    segments: AuxSegment[];
    line: SeriesPoint[];
}

export interface RatioBlock {
    kind: string;
    points: SeriesPoint[];
}

export interface SeriesResponse {
    series: {
        total: SeriesPoint[];
        peak: SeriesPoint[];
        valley: SeriesPoint[];
    };
    aux?: AuxBlock;
    ratio?: RatioBlock;
}

export interface HexCellJson {
    lon: number;
    lat: number;
    x: number;
    y: number;
    demand: number;
    household_count: number;
}

export interface HexbinResponse {
    start: string;
    end: string;
    band: string;
    size: number;
    total_demand: number;
    cells: HexCellJson[];
}

export interface MeterStats {
    start: string;
    end: string;
    total: number;
    peak: number;
    valley: number;
    mean_daily: number;
    household_count: number;
}

export interface RejectedRow {
    line: number;
    reason: string;
}

export interface IngestReport {
    accepted_count: number;
    rejected: RejectedRow[];
    warnings: string[];
    total_rows: number;
}

export interface DatasetSummary {
    record_count: number;
    household_count: number;
    start: string;
    end: string;
}

export interface UploadResponse {
    dataset_id: string;
    report: IngestReport;
    summary: DatasetSummary;
}

export type TaskState = "pending" | "running" | "done" | "failed";

export interface TaskHandle {
    id: string;
    dataset_id: string;
    state: TaskState;
    submitted_at: string;
    completed_at: string | null;
    error: string | null;
}

/** Mini-grid of window changes attached to finished index entries. */
export interface TaskBadge {
    label: string;
    windows_x: number;
    windows_y: number;
    signed_change: number[];
    abs_change: number[];
}

export interface TaskIndexEntry extends TaskHandle {
    badges?: TaskBadge[];
}

export interface GridJson {
    nx: number;
    ny: number;
    x0: number;
    y0: number;
    dx: number;
    dy: number;
}

export interface PeriodJson {
    start: string;
    end: string;
    band: string;
}

export interface ScalarFieldJson {
    grid: GridJson;
    scale_kwh: number;
    values: number[];
}

export interface VelocityFieldJson {
    grid: GridJson;
    u: number[];
    v: number[];
}

export interface WindowJson {
    i: number;
    j: number;
    extent: [number, number, number, number];
    signed_change: number;
    abs_change: number;
}

export interface ArrowFeature {
    type: "Feature";
    geometry: {
        type: "LineString";
        coordinates: [[number, number], [number, number]];
    };
    properties: { magnitude: number };
}

export interface ArrowCollection {
    type: "FeatureCollection";
    features: ArrowFeature[];
}

export interface ShiftPairJson {
    label: string;
    period_a: PeriodJson;
    period_b: PeriodJson;
    phi: ScalarFieldJson;
    nu: VelocityFieldJson;
    windows: WindowJson[];
    arrows: ArrowCollection;
}

export interface ShiftResultJson {
    windows_x: number;
    windows_y: number;
    pairs: ShiftPairJson[];
}

export interface TaskRequest {
    kind: string;
    start?: string;
    end?: string;
    band?: string;
    split_count?: number;
    periods?: { start: string; end: string; band?: string }[];
    grid_cells?: number;
    bandwidth?: string | number;
}

export class ApiError extends Error {
    readonly status: number;

    constructor(status: number, message: string) {
        super(message);
        this.status = status;
    }
}

type FetchFn = (url: string, init?: RequestInit) => Promise<Response>;

async function readError(response: Response): Promise<string> {
    const text = await response.text().catch(() => "");
    try {
        const body = JSON.parse(text);
        if (body && typeof body.error === "string") return body.error;
    } catch {
        // not JSON; fall through to the raw text
    }
    return text || `request failed with status ${response.status}`;
}

export class ApiClient {
    readonly baseUrl: string;
    private fetchFn: FetchFn;

    constructor(baseUrl: string, fetchFn?: FetchFn) {
        this.baseUrl = baseUrl.replace(/\/$/, "");
        this.fetchFn = fetchFn ?? ((url, init) => fetch(url, init));
    }

    private async getJson<T>(path: string, signal?: AbortSignal): Promise<T> {
        const response = await this.fetchFn(this.baseUrl + path, { signal });
        if (!response.ok) throw new ApiError(response.status, await readError(response));
        return (await response.json()) as T;
    }

    /**
     * Upload a consumption CSV. The multipart body is assembled by hand so
     * the same code path works in browsers and in headless test DOMs.
     */
    async uploadDataset(filename: string, csvText: string): Promise<UploadResponse> {
        const boundary = "----demandflow" + Math.random().toString(16).slice(2);
        const body =
            `--${boundary}\r\n` +
            `Content-Disposition: form-data; name="file"; filename="${filename}"\r\n` +
            `Content-Type: text/csv\r\n\r\n` +
            csvText +
            `\r\n--${boundary}--\r\n`;
        const response = await this.fetchFn(this.baseUrl + "/api/datasets", {
            method: "POST",
            headers: { "Content-Type": `multipart/form-data; boundary=${boundary}` },
            body,
        });
        if (!response.ok) throw new ApiError(response.status, await readError(response));
        return (await response.json()) as UploadResponse;
    }

    series(
        datasetId: string,
        opts: { granularity?: string; ratio?: string } = {},
        signal?: AbortSignal,
    ): Promise<SeriesResponse> {
        const params = new URLSearchParams();
        if (opts.granularity) params.set("granularity", opts.granularity);
        if (opts.ratio) params.set("ratio", opts.ratio);
        const query = params.toString();
        return this.getJson(`/api/datasets/${datasetId}/series${query ? "?" + query : ""}`, signal);
    }

    hexbin(
        datasetId: string,
        opts: { hexSize: number; start?: string; end?: string; band?: string },
        signal?: AbortSignal,
    ): Promise<HexbinResponse> {
        const params = new URLSearchParams({ size: String(opts.hexSize) });
        if (opts.start) params.set("start", opts.start);
        if (opts.end) params.set("end", opts.end);
        if (opts.band) params.set("band", opts.band);
        return this.getJson(`/api/datasets/${datasetId}/hexbin?${params}`, signal);
    }

    meter(
        datasetId: string,
        opts: { start: string; end: string },
        signal?: AbortSignal,
    ): Promise<MeterStats> {
        const params = new URLSearchParams({ start: opts.start, end: opts.end });
        return this.getJson(`/api/datasets/${datasetId}/meter?${params}`, signal);
    }

    async submitTask(datasetId: string, request: TaskRequest): Promise<TaskHandle> {
        const response = await this.fetchFn(`${this.baseUrl}/api/datasets/${datasetId}/tasks`, {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify(request),
        });
        if (!response.ok) throw new ApiError(response.status, await readError(response));
        return (await response.json()) as TaskHandle;
    }

    taskIndex(signal?: AbortSignal): Promise<{ tasks: TaskIndexEntry[] }> {
        return this.getJson("/api/tasks", signal);
    }

    taskHandle(taskId: string, signal?: AbortSignal): Promise<TaskHandle> {
        return this.getJson(`/api/tasks/${taskId}`, signal);
    }

    taskResult(taskId: string, signal?: AbortSignal): Promise<ShiftResultJson> {
        return this.getJson(`/api/tasks/${taskId}/result`, signal);
    }
}

/**
 * Latest-wins request gating: starting a request under a key aborts the
 * previous in-flight request under the same key. A superseded request
 * resolves to undefined instead of surfacing its abort error.
 */
export class RequestGate {
    private controllers = new Map<string, AbortController>();

    async run<T>(key: string, work: (signal: AbortSignal) => Promise<T>): Promise<T | undefined> {
        this.controllers.get(key)?.abort();
        const controller = new AbortController();
        this.controllers.set(key, controller);
        try {
            const value = await work(controller.signal);
            if (controller.signal.aborted) return undefined;
            return value;
        } catch (error) {
            if (controller.signal.aborted) return undefined;
            throw error;
        } finally {
            if (this.controllers.get(key) === controller) this.controllers.delete(key);
        }
    }

    /** Abort several views in one step so they invalidate together. */
    abort(...keys: string[]): void {
        for (const key of keys) {
            this.controllers.get(key)?.abort();
            this.controllers.delete(key);
        }
    }

    abortAll(): void {
        this.abort(...this.controllers.keys());
    }
}
