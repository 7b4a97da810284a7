import type {
    ArrowFeature,
    HexbinResponse,
    ShiftPairJson,
    ShiftResultJson,
    WindowJson,
} from "./api";
import { el, svgEl, clear, displayNumber } from "./dom";
import { colorForChange, depthColor, GAIN_COLOR, LOSS_COLOR, MID_COLOR } from "./scales";

const W = 640;
const H = 460;
const MARGIN = 30;
const HEX_MAX_HEIGHT_PX = 56;

// Tangent-plane scale used by the service for its x/y columns.
const EARTH_RADIUS_M = 6371000.0;
const RAD = Math.PI / 180;

interface Projection {
    originLon: number;
    originLat: number;
}

interface Fit {
    sx: (x: number) => number;
    sy: (y: number) => number;
}

export interface GeoViewDelegate {
    windowSelected?(window: WindowJson): void;
}

function shade(rgb: string, factor: number): string {
    const m = rgb.match(/rgb\((\d+),\s*(\d+),\s*(\d+)\)/);
    if (!m) return rgb;
    const [r, g, b] = [m[1], m[2], m[3]].map((c) => Math.round(Number(c) * factor));
    return `rgb(${r}, ${g}, ${b})`;
}

/**
 * Map panel: extruded demand hexagons, demand-shift window frames, flow
 * arrows, and the kWh legend. Draws in the service's tangent-plane meter
 * coordinates; arrow endpoints arrive as lon/lat and are projected back
 * with the plane recovered from any hexbin cell that carries both forms.
 */
export class GeoView {
    private svg: SVGSVGElement;
    private hexLayer: SVGGElement;
    private windowLayer: SVGGElement;
    private arrowLayer: SVGGElement;
    private legendBox: HTMLElement;
    private detailBox: HTMLElement;
    private pairSelect: HTMLSelectElement;

    private hexbin: HexbinResponse | null = null;
    private result: ShiftResultJson | null = null;
    private pairIndex = 0;
    private projection: Projection | null = null;
    private selectedWindow: SVGRectElement | null = null;

    constructor(container: HTMLElement, private delegate: GeoViewDelegate = {}) {
        const head = el("div", "geo-head");
        this.pairSelect = el("select", "pair-select");
        this.pairSelect.setAttribute("data-role", "pair-select");
        this.pairSelect.style.display = "none";
        this.pairSelect.addEventListener("change", () => {
            this.pairIndex = Number(this.pairSelect.value);
            this.redraw();
        });
        head.appendChild(this.pairSelect);
        container.appendChild(head);

        this.svg = svgEl("svg", {
            width: W,
            height: H,
            viewBox: `0 0 ${W} ${H}`,
            class: "geo-view",
        });
        const defs = svgEl("defs");
        const marker = svgEl("marker", {
            id: "arrowhead",
            markerWidth: 7,
            markerHeight: 6,
            refX: 6,
            refY: 3,
            orient: "auto",
        });
        marker.appendChild(svgEl("path", { d: "M0,0 L7,3 L0,6 Z", fill: "#222" }));
        defs.appendChild(marker);
        this.svg.appendChild(defs);
        this.hexLayer = svgEl("g", { class: "layer-hex" });
        this.windowLayer = svgEl("g", { class: "layer-windows" });
        this.arrowLayer = svgEl("g", { class: "layer-arrows" });
        this.svg.appendChild(this.hexLayer);
        this.svg.appendChild(this.windowLayer);
        this.svg.appendChild(this.arrowLayer);
        container.appendChild(this.svg);

        this.legendBox = el("div", "geo-legend");
        container.appendChild(this.legendBox);
        this.detailBox = el("div", "window-detail");
        this.detailBox.setAttribute("data-role", "window-detail");
        this.detailBox.textContent = "select a window";
        container.appendChild(this.detailBox);
    }

    setHexbin(hexbin: HexbinResponse | null): void {
        this.hexbin = hexbin;
        this.projection = hexbin && hexbin.cells.length > 0 ? recoverPlane(hexbin.cells[0]) : null;
        this.redraw();
    }

    setResult(result: ShiftResultJson | null): void {
        this.result = result;
        this.pairIndex = 0;
        if (result && result.pairs.length > 1) {
            this.pairSelect.style.display = "";
            clear(this.pairSelect);
            result.pairs.forEach((pair, index) => {
                const option = el("option", undefined, pair.label);
                option.value = String(index);
                this.pairSelect.appendChild(option);
            });
        } else {
            this.pairSelect.style.display = "none";
        }
        this.redraw();
    }

    private currentPair(): ShiftPairJson | null {
        if (!this.result || this.result.pairs.length === 0) return null;
        return this.result.pairs[Math.min(this.pairIndex, this.result.pairs.length - 1)];
    }

    private fit(): Fit | null {
        let minX = Infinity;
        let maxX = -Infinity;
        let minY = Infinity;
        let maxY = -Infinity;
        const grow = (x: number, y: number) => {
            if (x < minX) minX = x;
            if (x > maxX) maxX = x;
            if (y < minY) minY = y;
            if (y > maxY) maxY = y;
        };
        if (this.hexbin) {
            for (const cell of this.hexbin.cells) {
                grow(cell.x - this.hexbin.size, cell.y - this.hexbin.size);
                grow(cell.x + this.hexbin.size, cell.y + this.hexbin.size);
            }
        }
        const pair = this.currentPair();
        if (pair) {
            for (const win of pair.windows) {
                grow(win.extent[0], win.extent[1]);
                grow(win.extent[2], win.extent[3]);
            }
        }
        if (!Number.isFinite(minX) || maxX === minX || maxY === minY) return null;
        const scale = Math.min(
            (W - 2 * MARGIN) / (maxX - minX),
            (H - 2 * MARGIN - HEX_MAX_HEIGHT_PX) / (maxY - minY),
        );
        const offX = (W - (maxX - minX) * scale) / 2;
        const baseY = H - MARGIN;
        return {
            sx: (x) => offX + (x - minX) * scale,
            sy: (y) => baseY - (y - minY) * scale,
        };
    }

    private redraw(): void {
        clear(this.hexLayer);
        clear(this.windowLayer);
        clear(this.arrowLayer);
        this.selectedWindow = null;
        const fit = this.fit();
        if (!fit) {
            this.legendBox.textContent = "";
            return;
        }
        if (this.hexbin) this.drawHexagons(this.hexbin, fit);
        const pair = this.currentPair();
        if (pair) {
            this.drawWindows(pair, fit);
            this.drawArrows(pair.arrows.features, fit);
            this.drawLegend(pair.windows);
        } else {
            this.legendBox.textContent = "";
        }
    }

    private drawHexagons(hexbin: HexbinResponse, fit: Fit): void {
        const maxDemand = Math.max(...hexbin.cells.map((c) => c.demand), 0);
        const maxCount = Math.max(...hexbin.cells.map((c) => c.household_count), 1);
        const cells = [...hexbin.cells].sort((a, b) => fit.sy(a.y) - fit.sy(b.y));
        for (const cell of cells) {
            const verts: [number, number][] = [];
            for (let k = 0; k < 6; k++) {
                const angle = (30 + 60 * k) * RAD;
                verts.push([
                    fit.sx(cell.x + hexbin.size * Math.cos(angle)),
                    fit.sy(cell.y + hexbin.size * Math.sin(angle)),
                ]);
            }
            const height = maxDemand > 0 ? (cell.demand / maxDemand) * HEX_MAX_HEIGHT_PX : 0;
            const fill = depthColor(cell.household_count / maxCount);
            const centerY = fit.sy(cell.y);
            const group = svgEl("g", { class: "hex" });
            group.setAttribute("data-demand", displayNumber(cell.demand));
            group.setAttribute("data-count", String(cell.household_count));
            group.setAttribute("data-height", String(height));
            // visible side faces are the edges facing the viewer (screen-low)
            for (let k = 0; k < 6; k++) {
                const a = verts[k];
                const b = verts[(k + 1) % 6];
                if ((a[1] + b[1]) / 2 <= centerY) continue;
                const quad = svgEl("polygon", {
                    points: pointsAttr([
                        a,
                        b,
                        [b[0], b[1] - height],
                        [a[0], a[1] - height],
                    ]),
                    fill: shade(fill, 0.68),
                    class: "hex-side",
                });
                group.appendChild(quad);
            }
            const top = svgEl("polygon", {
                points: pointsAttr(verts.map(([vx, vy]) => [vx, vy - height])),
                fill,
                stroke: shade(fill, 0.55),
                "stroke-width": 0.6,
                class: "hex-top",
            });
            const title = svgEl("title");
            title.textContent = `${displayNumber(cell.demand)} kWh, ${cell.household_count} households`;
            top.appendChild(title);
            group.appendChild(top);
            this.hexLayer.appendChild(group);
        }
    }

    private drawWindows(pair: ShiftPairJson, fit: Fit): void {
        const maxAbs = Math.max(...pair.windows.map((w) => w.abs_change), 0);
        for (const win of pair.windows) {
            const [x0, y0, x1, y1] = win.extent;
            const left = fit.sx(x0);
            const topPx = fit.sy(y1);
            const rect = svgEl("rect", {
                x: left,
                y: topPx,
                width: fit.sx(x1) - left,
                height: fit.sy(y0) - topPx,
                class: "shift-window",
                fill: "none",
                stroke: colorForChange(win.signed_change, maxAbs),
                "stroke-width": 1.4,
            });
            rect.setAttribute("data-i", String(win.i));
            rect.setAttribute("data-j", String(win.j));
            rect.setAttribute("data-signed", displayNumber(win.signed_change));
            rect.setAttribute("data-abs", displayNumber(win.abs_change));
            rect.addEventListener("click", () => this.selectWindow(rect, win));
            this.windowLayer.appendChild(rect);
        }
    }

    private selectWindow(rect: SVGRectElement, win: WindowJson): void {
        if (this.selectedWindow) {
            this.selectedWindow.classList.remove("selected");
            this.selectedWindow.setAttribute("stroke-width", "1.4");
        }
        this.selectedWindow = rect;
        rect.classList.add("selected");
        rect.setAttribute("stroke-width", "3.2");
        clear(this.detailBox);
        this.detailBox.appendChild(
            el("span", "detail-label", `window (${win.i}, ${win.j}) signed `),
        );
        const signed = el("span", "detail-value", displayNumber(win.signed_change));
        signed.setAttribute("data-role", "window-signed");
        this.detailBox.appendChild(signed);
        this.detailBox.appendChild(el("span", "detail-label", " kWh, absolute "));
        const abs = el("span", "detail-value", displayNumber(win.abs_change));
        abs.setAttribute("data-role", "window-abs");
        this.detailBox.appendChild(abs);
        this.detailBox.appendChild(el("span", "detail-label", " kWh"));
        this.delegate.windowSelected?.(win);
    }

    private drawArrows(features: ArrowFeature[], fit: Fit): void {
        if (!this.projection) return;
        for (const feature of features) {
            const [tail, head] = feature.geometry.coordinates;
            const [tx, ty] = lonLatToMeters(tail[0], tail[1], this.projection);
            const [hx, hy] = lonLatToMeters(head[0], head[1], this.projection);
            const lineEl = svgEl("line", {
                x1: fit.sx(tx),
                y1: fit.sy(ty),
                x2: fit.sx(hx),
                y2: fit.sy(hy),
                class: "flow-arrow",
                stroke: "#222",
                "stroke-width": 1.5,
                "marker-end": "url(#arrowhead)",
            });
            lineEl.setAttribute("data-magnitude", displayNumber(feature.properties.magnitude));
            this.arrowLayer.appendChild(lineEl);
        }
    }

    private drawLegend(windows: WindowJson[]): void {
        clear(this.legendBox);
        if (windows.length === 0) return;
        const absValues = windows.map((w) => w.abs_change);
        const minAbs = Math.min(...absValues);
        const maxAbs = Math.max(...absValues);

        const bar = svgEl("svg", { width: 220, height: 14, class: "legend-bar" });
        const defs = svgEl("defs");
        const gradient = svgEl("linearGradient", { id: "kwh-ramp" });
        for (const [offset, color] of [
            ["0%", LOSS_COLOR],
            ["50%", MID_COLOR],
            ["100%", GAIN_COLOR],
        ] as const) {
            gradient.appendChild(svgEl("stop", { offset, "stop-color": color }));
        }
        defs.appendChild(gradient);
        bar.appendChild(defs);
        bar.appendChild(
            svgEl("rect", { x: 0, y: 0, width: 220, height: 14, fill: "url(#kwh-ramp)" }),
        );

        const minLabel = el("span", "legend-label", displayNumber(minAbs));
        minLabel.setAttribute("data-role", "legend-min");
        const maxLabel = el("span", "legend-label", displayNumber(maxAbs));
        maxLabel.setAttribute("data-role", "legend-max");

        this.legendBox.appendChild(el("span", "legend-title", "|window change| kWh: "));
        this.legendBox.appendChild(minLabel);
        this.legendBox.appendChild(bar);
        this.legendBox.appendChild(maxLabel);
    }
}

function pointsAttr(points: [number, number][]): string {
    return points.map(([x, y]) => `${x},${y}`).join(" ");
}

/** Recover the tangent plane origin from a cell carrying both coordinate forms. */
export function recoverPlane(cell: {
    lon: number;
    lat: number;
    x: number;
    y: number;
}): Projection {
    const originLat = cell.lat - (cell.y / EARTH_RADIUS_M) / RAD;
    const originLon =
        cell.lon - (cell.x / (EARTH_RADIUS_M * Math.cos(originLat * RAD))) / RAD;
    return { originLon, originLat };
}

export function lonLatToMeters(
    lon: number,
    lat: number,
    projection: Projection,
): [number, number] {
    const x =
        EARTH_RADIUS_M * Math.cos(projection.originLat * RAD) * (lon - projection.originLon) * RAD;
    const y = EARTH_RADIUS_M * (lat - projection.originLat) * RAD;
    return [x, y];
}
