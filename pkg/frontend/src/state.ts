import type { DatasetSummary } from "./api";

export interface TimePeriod {
    start: string;
    end: string;
}

export type Granularity = "yearly" | "quarterly" | "monthly";
export type RatioKind = "peak_to_valley" | "peak_to_total";

export interface DatasetInfo {
    id: string;
    summary: DatasetSummary;
}

export interface Viewport {
    x: number;
    y: number;
    scale: number;
}

export type StateKey =
    | "dataset"
    | "brushes"
    | "aux"
    | "ratio"
    | "task"
    | "viewport"
    | "multi";

export type StateListener = (changed: Set<StateKey>) => void;

/**
 * Clamp a period into the dataset's date range. ISO date strings order
 * lexicographically, so plain string comparison is enough. A brush that
 * misses the range entirely collapses onto the nearest boundary day.
 */
export function clampPeriod(period: TimePeriod, range: TimePeriod): TimePeriod {
    if (period.end < range.start) return { start: range.start, end: range.start };
    if (period.start > range.end) return { start: range.end, end: range.end };
    return {
        start: period.start < range.start ? range.start : period.start,
        end: period.end > range.end ? range.end : period.end,
    };
}

/**
 * Shared view state. Mutators enforce the invariants (brushes stay inside
 * the dataset range, one selected task at most) and notify subscribers
 * with the set of keys that changed, so dependent views can refresh in a
 * single coordinated step.
 */
export class ViewStateStore {
    dataset: DatasetInfo | null = null;
    brushedPeriods: TimePeriod[] = [];
    activeAuxLines = new Set<Granularity>();
    activeRatio: RatioKind | null = null;
    selectedTask: string | null = null;
    viewport: Viewport = { x: 0, y: 0, scale: 1 };
    multiPeriod = false;

    private listeners = new Set<StateListener>();

    subscribe(listener: StateListener): () => void {
        this.listeners.add(listener);
        return () => this.listeners.delete(listener);
    }

    private emit(...keys: StateKey[]): void {
        const changed = new Set(keys);
        for (const listener of this.listeners) listener(changed);
    }

    setDataset(info: DatasetInfo | null): void {
        this.dataset = info;
        this.brushedPeriods = [];
        this.selectedTask = null;
        this.emit("dataset", "brushes", "task");
    }

    private range(): TimePeriod | null {
        if (!this.dataset) return null;
        return { start: this.dataset.summary.start, end: this.dataset.summary.end };
    }

    /** Commit a brush; in multi-period mode brushes accumulate in order. */
    brush(period: TimePeriod): void {
        const range = this.range();
        if (!range) return;
        const clamped = clampPeriod(period, range);
        if (this.multiPeriod) {
            this.brushedPeriods = [...this.brushedPeriods, clamped];
        } else {
            this.brushedPeriods = [clamped];
        }
        this.emit("brushes");
    }

    clearBrushes(): void {
        if (this.brushedPeriods.length === 0) return;
        this.brushedPeriods = [];
        this.emit("brushes");
    }

    setMultiPeriod(on: boolean): void {
        if (this.multiPeriod === on) return;
        this.multiPeriod = on;
        this.emit("multi");
    }

    toggleAuxLine(granularity: Granularity): void {
        if (this.activeAuxLines.has(granularity)) {
            this.activeAuxLines.delete(granularity);
        } else {
            this.activeAuxLines.add(granularity);
        }
        this.emit("aux");
    }

    setRatio(kind: RatioKind | null): void {
        if (this.activeRatio === kind) return;
        this.activeRatio = kind;
        this.emit("ratio");
    }

    /** Selecting a task replaces any previous selection. */
    selectTask(taskId: string | null): void {
        if (this.selectedTask === taskId) return;
        this.selectedTask = taskId;
        this.emit("task");
    }

    setViewport(viewport: Viewport): void {
        this.viewport = viewport;
        this.emit("viewport");
    }
}
