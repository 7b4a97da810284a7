import type { MeterStats } from "./api";
import { el, clear, displayNumber } from "./dom";

interface GaugeSpec {
    key: "total" | "peak" | "valley" | "mean_daily";
    label: string;
}

const GAUGES: GaugeSpec[] = [
    { key: "total", label: "total" },
    { key: "peak", label: "peak" },
    { key: "valley", label: "valley" },
    { key: "mean_daily", label: "mean daily" },
];

/** Gauge strip for the brushed period; zeroed until a brush exists. */
export class MeterPanel {
    private body: HTMLElement;

    constructor(container: HTMLElement) {
        container.appendChild(el("h2", "panel-title", "Period meter"));
        this.body = el("div", "meter-body");
        container.appendChild(this.body);
        this.render(null);
    }

    render(stats: MeterStats | null): void {
        clear(this.body);
        const reference = stats ? Math.max(stats.total, 1e-9) : 1;
        for (const gauge of GAUGES) {
            const value = stats ? stats[gauge.key] : 0;
            const row = el("div", "gauge");
            row.appendChild(el("span", "gauge-label", gauge.label));
            const track = el("div", "gauge-track");
            const fill = el("div", "gauge-fill");
            fill.style.width = `${Math.min(100, (value / reference) * 100)}%`;
            track.appendChild(fill);
            row.appendChild(track);
            const num = el("span", "gauge-value", displayNumber(value));
            num.setAttribute("data-role", `meter-${gauge.key}`);
            row.appendChild(num);
            row.appendChild(el("span", "gauge-unit", "kWh"));
            this.body.appendChild(row);
        }
        const households = el("div", "gauge");
        households.appendChild(el("span", "gauge-label", "households"));
        const count = el(
            "span",
            "gauge-value",
            stats ? String(stats.household_count) : "0",
        );
        count.setAttribute("data-role", "meter-households");
        households.appendChild(count);
        this.body.appendChild(households);

        const span = el("div", "meter-span");
        span.setAttribute("data-role", "meter-span");
        span.textContent = stats ? `${stats.start} .. ${stats.end}` : "no period brushed";
        this.body.appendChild(span);
    }
}
