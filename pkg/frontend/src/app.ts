import { ApiClient, ApiError, RequestGate } from "./api";
import type { AuxBlock, RatioBlock, SeriesResponse, TaskRequest } from "./api";
import { el } from "./dom";
import { GeoView } from "./geoView";
import { MeterPanel } from "./meterPanel";
import { ShiftIndex } from "./shiftIndex";
import { ControlPanel, TaskDraft } from "./streamGraph";
import { Granularity, TimePeriod, ViewStateStore } from "./state";

const DEFAULT_HEX_SIZE_M = 400;
const DEFAULT_POLL_INTERVAL_MS = 1000;

export interface AppOptions {
    pollIntervalMs?: number;
}

/**
 * Wires the four views to shared state: the control panel brushes periods
 * and launches tasks, the meter and geo views follow the brush, the index
 * polls the task queue and loads results into the geo view. Each view's
 * fetches go through one latest-wins gate key, so a stale response can
 * never land after the state that superseded it.
 */
export class App {
    readonly store = new ViewStateStore();
    private gate = new RequestGate();
    private controlPanel: ControlPanel;
    private geoView: GeoView;
    private shiftIndex: ShiftIndex;
    private meterPanel: MeterPanel;
    private uploadStatus: HTMLElement;
    private taskStatus: HTMLElement;
    private fileInput: HTMLInputElement;
    private pollTimer: ReturnType<typeof setInterval> | null = null;

    private baseSeries: SeriesResponse | null = null;
    private auxBlocks = new Map<Granularity, AuxBlock>();
    private ratioBlock: RatioBlock | null = null;

    constructor(
        root: HTMLElement,
        private api: ApiClient,
        options: AppOptions = {},
    ) {
        const header = el("header");
        header.appendChild(el("h1", undefined, "demandflow"));
        const uploadBox = el("div", "upload-box");
        this.fileInput = el("input");
        this.fileInput.type = "file";
        this.fileInput.accept = ".csv,text/csv";
        this.fileInput.setAttribute("data-role", "csv-input");
        const uploadBtn = el("button", undefined, "Upload CSV");
        uploadBtn.setAttribute("data-role", "upload-btn");
        uploadBtn.addEventListener("click", () => void this.upload());
        this.uploadStatus = el("span", "status");
        this.uploadStatus.setAttribute("data-role", "upload-status");
        this.uploadStatus.textContent = "no dataset loaded";
        uploadBox.appendChild(this.fileInput);
        uploadBox.appendChild(uploadBtn);
        uploadBox.appendChild(this.uploadStatus);
        header.appendChild(uploadBox);
        root.appendChild(header);

        const main = el("main");
        const left = el("section", "column-left");
        const controlBox = el("div", "panel control-panel");
        controlBox.setAttribute("data-role", "control-panel");
        const meterBox = el("div", "panel meter-panel");
        meterBox.setAttribute("data-role", "meter-panel");
        left.appendChild(controlBox);
        left.appendChild(meterBox);
        const right = el("section", "column-right");
        const geoBox = el("div", "panel geo-panel");
        geoBox.setAttribute("data-role", "geo-view");
        const indexBox = el("div", "panel index-panel");
        indexBox.setAttribute("data-role", "shift-index");
        right.appendChild(geoBox);
        right.appendChild(indexBox);
        main.appendChild(left);
        main.appendChild(right);
        root.appendChild(main);

        this.taskStatus = el("div", "status task-status");
        this.taskStatus.setAttribute("data-role", "task-status");
        left.appendChild(this.taskStatus);

        this.controlPanel = new ControlPanel(controlBox, {
            brushCommitted: (period) => this.store.brush(period),
            auxToggled: (granularity, active) => {
                if (this.store.activeAuxLines.has(granularity) !== active) {
                    this.store.toggleAuxLine(granularity);
                }
            },
            ratioChanged: (kind) => this.store.setRatio(kind),
            multiPeriodToggled: (on) => this.store.setMultiPeriod(on),
            clearBrushesRequested: () => this.store.clearBrushes(),
            submitRequested: (draft) => void this.submitTask(draft),
        });
        this.meterPanel = new MeterPanel(meterBox);
        this.geoView = new GeoView(geoBox);
        this.shiftIndex = new ShiftIndex(indexBox, {
            taskSelected: (taskId) => this.store.selectTask(taskId),
        });

        this.store.subscribe((changed) => this.onStateChange(changed));
        const interval = options.pollIntervalMs ?? DEFAULT_POLL_INTERVAL_MS;
        this.pollTimer = setInterval(() => void this.pollTasks(), interval);
    }

    dispose(): void {
        if (this.pollTimer !== null) clearInterval(this.pollTimer);
        this.pollTimer = null;
        this.gate.abortAll();
    }

    private setStatus(node: HTMLElement, text: string, isError = false): void {
        node.textContent = text;
        node.classList.toggle("error", isError);
    }

    private async upload(): Promise<void> {
        const file = this.fileInput.files?.[0];
        if (!file) {
            this.setStatus(this.uploadStatus, "choose a CSV file first", true);
            return;
        }
        this.setStatus(this.uploadStatus, "uploading...");
        try {
            const text = await file.text();
            const response = await this.api.uploadDataset(file.name, text);
            this.store.setDataset({ id: response.dataset_id, summary: response.summary });
            const { accepted_count, total_rows } = response.report;
            this.setStatus(
                this.uploadStatus,
                `${response.dataset_id}: ${accepted_count}/${total_rows} rows, ` +
                    `${response.summary.start} .. ${response.summary.end}`,
            );
            this.uploadStatus.setAttribute("data-dataset-id", response.dataset_id);
        } catch (error) {
            this.setStatus(this.uploadStatus, describe(error), true);
        }
    }

    private onStateChange(changed: Set<string>): void {
        if (changed.has("dataset")) {
            this.baseSeries = null;
            this.auxBlocks.clear();
            this.ratioBlock = null;
            this.geoView.setResult(null);
            void this.refreshSeries();
            void this.refreshAux();
            void this.refreshRatio();
        }
        if (changed.has("brushes")) {
            // meter and hexbin invalidate together: abort both, then refetch
            this.gate.abort("meter", "hexbin");
            void this.refreshBrushViews();
            this.controlPanel.setBrushes(this.store.brushedPeriods);
        }
        if (changed.has("aux")) void this.refreshAux();
        if (changed.has("ratio")) void this.refreshRatio();
        if (changed.has("task")) void this.loadSelectedResult();
    }

    private datasetId(): string | null {
        return this.store.dataset?.id ?? null;
    }

    private pushPanelData(): void {
        this.controlPanel.setData({
            series: this.baseSeries,
            auxBlocks: [...this.store.activeAuxLines]
                .map((granularity) => this.auxBlocks.get(granularity))
                .filter((block): block is AuxBlock => block !== undefined),
            ratio: this.ratioBlock,
        });
        this.controlPanel.setBrushes(this.store.brushedPeriods);
    }

    private async refreshSeries(): Promise<void> {
        const did = this.datasetId();
        if (!did) {
            this.baseSeries = null;
            this.pushPanelData();
            this.meterPanel.render(null);
            this.geoView.setHexbin(null);
            return;
        }
        try {
            const series = await this.gate.run("series", (signal) =>
                this.api.series(did, {}, signal),
            );
            if (series === undefined) return;
            this.baseSeries = series;
            this.pushPanelData();
            await this.refreshBrushViews();
        } catch (error) {
            this.setStatus(this.taskStatus, describe(error), true);
        }
    }

    private async refreshAux(): Promise<void> {
        const did = this.datasetId();
        if (!did) return;
        const wanted = [...this.store.activeAuxLines];
        for (const granularity of wanted) {
            if (this.auxBlocks.has(granularity)) continue;
            try {
                const response = await this.gate.run(`aux:${granularity}`, (signal) =>
                    this.api.series(did, { granularity }, signal),
                );
                if (response?.aux) this.auxBlocks.set(granularity, response.aux);
            } catch (error) {
                this.setStatus(this.taskStatus, describe(error), true);
            }
        }
        this.pushPanelData();
    }

    private async refreshRatio(): Promise<void> {
        const did = this.datasetId();
        if (!did) return;
        const kind = this.store.activeRatio;
        if (!kind) {
            this.ratioBlock = null;
            this.pushPanelData();
            return;
        }
        try {
            const response = await this.gate.run("ratio", (signal) =>
                this.api.series(did, { ratio: kind }, signal),
            );
            if (response === undefined) return;
            this.ratioBlock = response.ratio ?? null;
            this.pushPanelData();
        } catch (error) {
            this.setStatus(this.taskStatus, describe(error), true);
        }
    }

    /** The brushed period drives meter and hexbin as one step. */
    private async refreshBrushViews(): Promise<void> {
        const did = this.datasetId();
        if (!did) return;
        const brushes = this.store.brushedPeriods;
        const period: TimePeriod | null =
            brushes.length > 0 ? brushes[brushes.length - 1] : null;
        if (!period) {
            this.meterPanel.render(null);
        }
        try {
            const hexbinPromise = this.gate.run("hexbin", (signal) =>
                this.api.hexbin(
                    did,
                    {
                        hexSize: DEFAULT_HEX_SIZE_M,
                        start: period?.start,
                        end: period?.end,
                    },
                    signal,
                ),
            );
            const meterPromise = period
                ? this.gate.run("meter", (signal) =>
                      this.api.meter(did, period, signal),
                  )
                : Promise.resolve(undefined);
            const [hexbin, meter] = await Promise.all([hexbinPromise, meterPromise]);
            if (hexbin !== undefined) this.geoView.setHexbin(hexbin);
            if (meter !== undefined) this.meterPanel.render(meter);
        } catch (error) {
            this.setStatus(this.taskStatus, describe(error), true);
        }
    }

    private async submitTask(draft: TaskDraft): Promise<void> {
        const did = this.datasetId();
        if (!did) {
            this.setStatus(this.taskStatus, "upload a dataset first", true);
            return;
        }
        const brushes = this.store.brushedPeriods;
        if (brushes.length === 0) {
            this.setStatus(this.taskStatus, "brush a period first", true);
            return;
        }
        const body: TaskRequest = { kind: draft.kind };
        if (draft.kind === "multi_period") {
            if (brushes.length < 2) {
                this.setStatus(this.taskStatus, "multi_period needs at least two brushes", true);
                return;
            }
            body.periods = brushes.map((b) => ({ start: b.start, end: b.end }));
        } else {
            const base = brushes[brushes.length - 1];
            body.start = base.start;
            body.end = base.end;
            if (draft.kind === "regular_split") body.split_count = draft.splitCount;
        }
        try {
            const handle = await this.api.submitTask(did, body);
            this.setStatus(this.taskStatus, `${handle.id} ${handle.state}`);
            await this.pollTasks();
        } catch (error) {
            this.setStatus(this.taskStatus, describe(error), true);
        }
    }

    private async pollTasks(): Promise<void> {
        try {
            const index = await this.gate.run("task-index", (signal) =>
                this.api.taskIndex(signal),
            );
            if (index === undefined) return;
            this.shiftIndex.render(index.tasks);
            this.shiftIndex.setSelected(this.store.selectedTask);
        } catch {
            // transient poll failures resolve themselves on the next tick
        }
    }

    private async loadSelectedResult(): Promise<void> {
        const taskId = this.store.selectedTask;
        this.shiftIndex.setSelected(taskId);
        if (!taskId) {
            this.geoView.setResult(null);
            return;
        }
        try {
            const result = await this.gate.run("result", (signal) =>
                this.api.taskResult(taskId, signal),
            );
            if (result === undefined) return;
            this.geoView.setResult(result);
        } catch (error) {
            this.setStatus(this.taskStatus, describe(error), true);
        }
    }
}

function describe(error: unknown): string {
    if (error instanceof ApiError) return `error ${error.status}: ${error.message}`;
    if (error instanceof Error) return error.message;
    return String(error);
}

export function createApp(root: HTMLElement, api: ApiClient, options: AppOptions = {}): App {
    return new App(root, api, options);
}

// Browser entry point: mount on #app against the service that serves the page
// (override with ?api=http://host:port).
if (typeof document !== "undefined") {
    const mount = document.getElementById("app");
    if (mount) {
        const override = new URLSearchParams(window.location.search).get("api");
        const api = new ApiClient(override ?? window.location.origin);
        createApp(mount, api);
    }
}
