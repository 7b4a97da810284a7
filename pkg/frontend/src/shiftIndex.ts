import type { TaskBadge, TaskIndexEntry } from "./api";
import { el, svgEl, clear } from "./dom";
import { colorForChange } from "./scales";

const BADGE_CELL_PX = 9;

export interface ShiftIndexDelegate {
    taskSelected(taskId: string): void;
}

/**
 * Scrollable visual index of shift tasks. Finished entries show their
 * badge mini-grids and load into the geo view on click; queued entries
 * spin until the next poll says otherwise, failures carry the error as
 * a tooltip.
 */
export class ShiftIndex {
    private listBox: HTMLElement;
    private selectedId: string | null = null;

    constructor(container: HTMLElement, private delegate: ShiftIndexDelegate) {
        container.appendChild(el("h2", "panel-title", "Demand-shift index"));
        this.listBox = el("div", "task-list");
        this.listBox.setAttribute("data-role", "task-list");
        container.appendChild(this.listBox);
    }

    setSelected(taskId: string | null): void {
        this.selectedId = taskId;
        for (const row of this.listBox.querySelectorAll(".task-row")) {
            row.classList.toggle("selected", row.getAttribute("data-id") === taskId);
        }
    }

    render(entries: TaskIndexEntry[]): void {
        clear(this.listBox);
        for (const entry of entries) {
            this.listBox.appendChild(this.renderRow(entry));
        }
    }

    private renderRow(entry: TaskIndexEntry): HTMLElement {
        const row = el("div", "task-row");
        row.setAttribute("data-id", entry.id);
        row.setAttribute("data-state", entry.state);
        if (entry.id === this.selectedId) row.classList.add("selected");

        const head = el("div", "task-row-head");
        head.appendChild(el("span", "task-id", entry.id));
        const chip = el("span", `chip chip-${entry.state}`);
        if (entry.state === "pending" || entry.state === "running") {
            chip.classList.add("spinner");
            chip.textContent = entry.state;
        } else if (entry.state === "failed") {
            chip.textContent = "failed";
            chip.title = entry.error ?? "task failed";
        } else {
            chip.textContent = "done";
        }
        head.appendChild(chip);
        row.appendChild(head);

        if (entry.state === "done" && entry.badges) {
            const badgeRow = el("div", "badge-row");
            for (const badge of entry.badges) {
                badgeRow.appendChild(renderBadge(badge));
            }
            row.appendChild(badgeRow);
            row.classList.add("clickable");
            row.addEventListener("click", () => {
                this.setSelected(entry.id);
                this.delegate.taskSelected(entry.id);
            });
        }
        return row;
    }
}

/** Solid mini-grid of window changes; cell color encodes signed change. */
export function renderBadge(badge: TaskBadge): SVGSVGElement {
    const { windows_x: wx, windows_y: wy } = badge;
    const svg = svgEl("svg", {
        width: wx * BADGE_CELL_PX,
        height: wy * BADGE_CELL_PX,
        class: "badge",
        "data-role": "badge",
    });
    const title = svgEl("title");
    title.textContent = badge.label;
    svg.appendChild(title);
    const maxAbs = Math.max(...badge.abs_change, 0);
    for (let k = 0; k < badge.signed_change.length; k++) {
        const i = Math.floor(k / wy);
        const j = k % wy;
        const cell = svgEl("rect", {
            x: i * BADGE_CELL_PX,
            y: (wy - 1 - j) * BADGE_CELL_PX,
            width: BADGE_CELL_PX,
            height: BADGE_CELL_PX,
            fill: colorForChange(badge.signed_change[k], maxAbs),
            class: "badge-cell",
            "data-k": k,
        });
        svg.appendChild(cell);
    }
    return svg;
}
