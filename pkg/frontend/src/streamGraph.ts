import { area, curveMonotoneX, curveStepAfter, line } from "d3";

import type { AuxBlock, RatioBlock, SeriesResponse } from "./api";
import { el, svgEl, clear } from "./dom";
import { linearScale } from "./scales";
import type { Granularity, RatioKind, TimePeriod } from "./state";

export interface TaskDraft {
    kind: string;
    splitCount: number;
}

export interface ControlPanelDelegate {
    brushCommitted(period: TimePeriod): void;
    auxToggled(granularity: Granularity, active: boolean): void;
    ratioChanged(kind: RatioKind | null): void;
    multiPeriodToggled(on: boolean): void;
    clearBrushesRequested(): void;
    submitRequested(draft: TaskDraft): void;
}

export interface ControlPanelData {
    series: SeriesResponse | null;
    auxBlocks: AuxBlock[];
    ratio: RatioBlock | null;
}

const W = 720;
const H = 220;
const ML = 48;
const MR = 48;
const MT = 12;
const MB = 26;

const GRANULARITIES: Granularity[] = ["yearly", "quarterly", "monthly"];
const RATIO_KINDS: RatioKind[] = ["peak_to_valley", "peak_to_total"];
const AUX_DASHES: Record<string, string> = {
    yearly: "14 5",
    quarterly: "8 4",
    monthly: "3 3",
};

/**
 * Stream graph of daily peak and valley consumption with brushable time
 * axis, toggleable per-granularity mean lines, and an optional ratio line
 * on the right axis. Emits brush periods and task drafts to the delegate;
 * all data fetching stays outside.
 */
export class ControlPanel {
    private svg: SVGSVGElement;
    private chartLayer: SVGGElement;
    private brushLayer: SVGGElement;
    private chipRow: HTMLElement;
    private splitInput: HTMLInputElement;
    private kindSelect: HTMLSelectElement;

    private data: ControlPanelData = { series: null, auxBlocks: [], ratio: null };
    private brushes: TimePeriod[] = [];
    private dates: string[] = [];
    private dragOrigin: number | null = null;
    private dragRect: SVGRectElement | null = null;

    constructor(container: HTMLElement, private delegate: ControlPanelDelegate) {
        container.appendChild(this.buildToggles());

        this.svg = svgEl("svg", {
            width: W,
            height: H,
            viewBox: `0 0 ${W} ${H}`,
            class: "stream-graph",
        });
        this.chartLayer = svgEl("g");
        this.brushLayer = svgEl("g");
        this.svg.appendChild(this.chartLayer);
        this.svg.appendChild(this.brushLayer);
        this.svg.appendChild(this.buildOverlay());
        container.appendChild(this.svg);

        this.chipRow = el("div", "brush-chips");
        container.appendChild(this.chipRow);

        const taskBar = el("div", "task-bar");
        this.kindSelect = el("select");
        this.kindSelect.setAttribute("data-role", "task-kind");
        for (const kind of ["peak_valley", "regular_split", "multi_period"]) {
            const option = el("option", undefined, kind);
            option.value = kind;
            this.kindSelect.appendChild(option);
        }
        this.splitInput = el("input");
        this.splitInput.type = "number";
        this.splitInput.min = "2";
        this.splitInput.value = "2";
        this.splitInput.setAttribute("data-role", "split-count");
        const submit = el("button", "submit-task", "Run shift task");
        submit.setAttribute("data-role", "submit-task");
        submit.addEventListener("click", () => {
            this.delegate.submitRequested({
                kind: this.kindSelect.value,
                splitCount: Number(this.splitInput.value) || 2,
            });
        });
        taskBar.appendChild(el("span", "label", "Shift task:"));
        taskBar.appendChild(this.kindSelect);
        taskBar.appendChild(el("span", "label", "splits"));
        taskBar.appendChild(this.splitInput);
        taskBar.appendChild(submit);
        container.appendChild(taskBar);
    }

    private buildToggles(): HTMLElement {
        const row = el("div", "panel-toggles");
        row.appendChild(el("span", "label", "Aux lines:"));
        for (const granularity of GRANULARITIES) {
            const wrap = el("label", "toggle", granularity);
            const box = el("input");
            box.type = "checkbox";
            box.setAttribute("data-role", "aux-toggle");
            box.setAttribute("data-granularity", granularity);
            box.addEventListener("change", () =>
                this.delegate.auxToggled(granularity, box.checked),
            );
            wrap.prepend(box);
            row.appendChild(wrap);
        }

        const ratioSelect = el("select");
        ratioSelect.setAttribute("data-role", "ratio-select");
        const none = el("option", undefined, "no ratio");
        none.value = "";
        ratioSelect.appendChild(none);
        for (const kind of RATIO_KINDS) {
            const option = el("option", undefined, kind);
            option.value = kind;
            ratioSelect.appendChild(option);
        }
        ratioSelect.addEventListener("change", () => {
            this.delegate.ratioChanged((ratioSelect.value || null) as RatioKind | null);
        });
        row.appendChild(ratioSelect);

        const multiWrap = el("label", "toggle", "multi-period");
        const multiBox = el("input");
        multiBox.type = "checkbox";
        multiBox.setAttribute("data-role", "multi-toggle");
        multiBox.addEventListener("change", () =>
            this.delegate.multiPeriodToggled(multiBox.checked),
        );
        multiWrap.prepend(multiBox);
        row.appendChild(multiWrap);

        const clearBtn = el("button", undefined, "clear brushes");
        clearBtn.setAttribute("data-role", "clear-brushes");
        clearBtn.addEventListener("click", () => this.delegate.clearBrushesRequested());
        row.appendChild(clearBtn);
        return row;
    }

    private buildOverlay(): SVGRectElement {
        const overlay = svgEl("rect", {
            x: ML,
            y: MT,
            width: W - ML - MR,
            height: H - MT - MB,
            fill: "transparent",
            class: "brush-overlay",
            "data-role": "brush-overlay",
        });
        overlay.addEventListener("mousedown", (ev) => this.dragStart(ev as MouseEvent));
        // move and release are window-level so fast drags cannot escape
        window.addEventListener("mousemove", (ev) => this.dragMove(ev));
        window.addEventListener("mouseup", () => this.dragEnd());
        return overlay;
    }

    setData(data: ControlPanelData): void {
        this.data = data;
        this.dates = data.series ? data.series.series.total.map((p) => p.date) : [];
        this.redraw();
    }

    setBrushes(brushes: TimePeriod[]): void {
        this.brushes = brushes;
        this.drawBrushes();
        this.drawChips();
    }

    // pixel <-> date mapping along the plot area

    private plotX(): (index: number) => number {
        const n = Math.max(this.dates.length - 1, 1);
        return linearScale(0, n, ML, W - MR);
    }

    private dateAtPx(px: number): string {
        const n = this.dates.length;
        const clamped = Math.min(Math.max(px, ML), W - MR);
        const t = (clamped - ML) / (W - ML - MR);
        const index = Math.min(n - 1, Math.max(0, Math.round(t * (n - 1))));
        return this.dates[index];
    }

    private indexOfDate(date: string): number {
        const exact = this.dates.indexOf(date);
        if (exact >= 0) return exact;
        // aux segment boundaries always exist in the series, but guard anyway
        let best = 0;
        while (best < this.dates.length - 1 && this.dates[best] < date) best += 1;
        return best;
    }

    private redraw(): void {
        clear(this.chartLayer);
        const series = this.data.series;
        if (!series || series.series.total.length === 0) {
            this.drawBrushes();
            return;
        }
        const { total, peak, valley } = series.series;
        const x = this.plotX();
        const maxTotal = Math.max(...total.map((p) => p.value), 1e-9);
        const y = linearScale(0, maxTotal, H - MB, MT);

        type Band = { x: number; y0: number; y1: number };
        const valleyBand: Band[] = valley.map((p, i) => ({
            x: x(i),
            y0: y(0),
            y1: y(p.value),
        }));
        const peakBand: Band[] = peak.map((p, i) => ({
            x: x(i),
            y0: y(valley[i].value),
            y1: y(valley[i].value + p.value),
        }));
        const bandArea = area<Band>()
            .x((d) => d.x)
            .y0((d) => d.y0)
            .y1((d) => d.y1)
            .curve(curveMonotoneX);

        for (const [name, band] of [
            ["valley", valleyBand],
            ["peak", peakBand],
        ] as const) {
            const path = svgEl("path", {
                d: bandArea(band) ?? "",
                class: `band band-${name}`,
                "data-band": name,
            });
            this.chartLayer.appendChild(path);
        }

        for (const block of this.data.auxBlocks) {
            const auxLine = line<{ date: string; value: number }>()
                .x((p) => x(this.indexOfDate(p.date)))
                .y((p) => y(p.value))
                .curve(curveStepAfter);
            const path = svgEl("path", {
                d: auxLine(block.line) ?? "",
                class: "aux-line",
                "data-granularity": block.granularity,
                "data-means": JSON.stringify(block.segments.map((s) => s.mean)),
                "stroke-dasharray": AUX_DASHES[block.granularity] ?? "4 4",
            });
            this.chartLayer.appendChild(path);
        }

        if (this.data.ratio && this.data.ratio.points.length > 0) {
            const points = this.data.ratio.points;
            const maxRatio = Math.max(...points.map((p) => p.value), 1e-9);
            const yr = linearScale(0, maxRatio, H - MB, MT);
            const ratioLine = line<{ date: string; value: number }>()
                .x((p) => x(this.indexOfDate(p.date)))
                .y((p) => yr(p.value));
            const path = svgEl("path", {
                d: ratioLine(points) ?? "",
                class: "ratio-line",
                "data-kind": this.data.ratio.kind,
            });
            this.chartLayer.appendChild(path);
            const axisLabel = svgEl("text", {
                x: W - MR + 6,
                y: MT + 10,
                class: "axis-label",
            });
            axisLabel.textContent = this.data.ratio.kind;
            this.chartLayer.appendChild(axisLabel);
        }

        this.drawAxes(maxTotal);
        this.drawBrushes();
    }

    private drawAxes(maxTotal: number): void {
        if (this.dates.length === 0) return;
        const first = svgEl("text", { x: ML, y: H - 8, class: "axis-label" });
        first.textContent = this.dates[0];
        const last = svgEl("text", {
            x: W - MR,
            y: H - 8,
            class: "axis-label",
            "text-anchor": "end",
        });
        last.textContent = this.dates[this.dates.length - 1];
        const top = svgEl("text", { x: 4, y: MT + 10, class: "axis-label" });
        top.textContent = `${maxTotal} kWh`;
        this.chartLayer.appendChild(first);
        this.chartLayer.appendChild(last);
        this.chartLayer.appendChild(top);
    }

    private drawBrushes(): void {
        clear(this.brushLayer);
        if (this.dates.length === 0) return;
        const x = this.plotX();
        this.brushes.forEach((period, order) => {
            const x0 = x(this.indexOfDate(period.start));
            const x1 = x(this.indexOfDate(period.end));
            const rect = svgEl("rect", {
                x: Math.min(x0, x1),
                y: MT,
                width: Math.max(Math.abs(x1 - x0), 2),
                height: H - MT - MB,
                class: "brush-rect",
                "data-order": order,
            });
            this.brushLayer.appendChild(rect);
        });
    }

    private drawChips(): void {
        clear(this.chipRow);
        this.brushes.forEach((period, order) => {
            const chip = el("span", "brush-chip", `${period.start} .. ${period.end}`);
            chip.setAttribute("data-role", "brush-chip");
            chip.setAttribute("data-order", String(order));
            this.chipRow.appendChild(chip);
        });
    }

    private svgX(ev: MouseEvent): number {
        return ev.clientX - this.svg.getBoundingClientRect().left;
    }

    private dragStart(ev: MouseEvent): void {
        if (this.dates.length === 0) return;
        this.dragOrigin = this.svgX(ev);
        this.dragRect = svgEl("rect", {
            x: this.dragOrigin,
            y: MT,
            width: 1,
            height: H - MT - MB,
            class: "brush-active",
        });
        this.brushLayer.appendChild(this.dragRect);
    }

    private dragMove(ev: MouseEvent): void {
        if (this.dragOrigin === null || !this.dragRect) return;
        const px = this.svgX(ev);
        this.dragRect.setAttribute("x", String(Math.min(px, this.dragOrigin)));
        this.dragRect.setAttribute("width", String(Math.abs(px - this.dragOrigin)));
    }

    private dragEnd(): void {
        if (this.dragOrigin === null || !this.dragRect) return;
        const x0 = Number(this.dragRect.getAttribute("x"));
        const x1 = x0 + Number(this.dragRect.getAttribute("width"));
        this.dragRect.remove();
        const origin = this.dragOrigin;
        this.dragOrigin = null;
        this.dragRect = null;
        if (this.dates.length === 0) return;
        const start = this.dateAtPx(Math.min(x0, origin));
        const end = this.dateAtPx(Math.max(x1, origin));
        this.delegate.brushCommitted(
            start <= end ? { start, end } : { start: end, end: start },
        );
    }
}
