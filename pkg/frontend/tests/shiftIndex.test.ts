import { beforeEach, describe, expect, it } from "vitest";

import type { TaskBadge, TaskIndexEntry } from "../src/api";
import { renderBadge, ShiftIndex } from "../src/shiftIndex";
import { distanceFromMid } from "./scales.test";

function entry(overrides: Partial<TaskIndexEntry>): TaskIndexEntry {
    return {
        id: "task-0001",
        dataset_id: "abc",
        state: "pending",
        submitted_at: "2024-01-05T10:00:00+00:00",
        completed_at: null,
        error: null,
        ...overrides,
    };
}

const BADGE: TaskBadge = {
    label: "peak vs valley",
    windows_x: 2,
    windows_y: 2,
    signed_change: [-4, 0.5, 1, -0.25],
    abs_change: [4, 0.5, 1, 0.25],
};

describe("ShiftIndex", () => {
    let container: HTMLElement;
    let selected: string[];
    let index: ShiftIndex;

    beforeEach(() => {
        document.body.innerHTML = "";
        container = document.createElement("div");
        document.body.appendChild(container);
        selected = [];
        index = new ShiftIndex(container, { taskSelected: (id) => selected.push(id) });
    });

    it("spins while a task is queued or running", () => {
        index.render([entry({ state: "pending" }), entry({ id: "task-0002", state: "running" })]);
        const rows = container.querySelectorAll(".task-row");
        expect(rows).toHaveLength(2);
        expect(rows[0].querySelector(".chip")!.classList.contains("spinner")).toBe(true);
        expect(rows[1].querySelector(".chip")!.textContent).toBe("running");
        expect(container.querySelectorAll('[data-role="badge"]')).toHaveLength(0);
    });

    it("carries the failure reason as a tooltip", () => {
        index.render([entry({ state: "failed", error: "start is after end" })]);
        const chip = container.querySelector<HTMLElement>(".chip-failed")!;
        expect(chip.textContent).toBe("failed");
        expect(chip.title).toBe("start is after end");
    });

    it("shows badge mini-grids on finished tasks and loads them on click", () => {
        index.render([entry({ state: "done", badges: [BADGE] })]);
        const row = container.querySelector<HTMLElement>(".task-row")!;
        expect(row.getAttribute("data-state")).toBe("done");
        expect(row.querySelectorAll('[data-role="badge"]')).toHaveLength(1);
        expect(row.querySelectorAll(".badge-cell")).toHaveLength(4);
        row.click();
        expect(selected).toEqual(["task-0001"]);
        expect(row.classList.contains("selected")).toBe(true);
    });

    it("keeps the selection highlight across re-renders", () => {
        index.render([entry({ state: "done", badges: [BADGE] })]);
        index.setSelected("task-0001");
        index.render([entry({ state: "done", badges: [BADGE] })]);
        expect(container.querySelector(".task-row")!.classList.contains("selected")).toBe(true);
        index.setSelected(null);
        expect(container.querySelector(".task-row")!.classList.contains("selected")).toBe(false);
    });
});

describe("renderBadge", () => {
    it("lays cells out in window order, north up", () => {
        const svg = renderBadge(BADGE);
        expect(svg.getAttribute("width")).toBe("18");
        expect(svg.getAttribute("height")).toBe("18");
        const cells = svg.querySelectorAll(".badge-cell");
        expect(cells).toHaveLength(4);
        // k=0 is window (0, 0): left column, bottom row of the mini-grid
        expect(cells[0].getAttribute("x")).toBe("0");
        expect(cells[0].getAttribute("y")).toBe("9");
        // k=1 is window (0, 1): left column, top row
        expect(cells[1].getAttribute("x")).toBe("0");
        expect(cells[1].getAttribute("y")).toBe("0");
        // k=2 is window (1, 0): right column, bottom row
        expect(cells[2].getAttribute("x")).toBe("9");
        expect(cells[2].getAttribute("y")).toBe("9");
    });

    it("ranks cell color strength with the change magnitude", () => {
        const svg = renderBadge(BADGE);
        const cells = [...svg.querySelectorAll(".badge-cell")];
        const strength = cells.map((c) => distanceFromMid(c.getAttribute("fill")!));
        // |signed| per k: 4, 0.5, 1, 0.25 -> strongest first cell, weakest last
        expect(strength[0]).toBeGreaterThan(strength[2]);
        expect(strength[2]).toBeGreaterThan(strength[1]);
        expect(strength[1]).toBeGreaterThan(strength[3]);
    });

    it("names the comparison in the badge tooltip", () => {
        const svg = renderBadge(BADGE);
        expect(svg.querySelector("title")!.textContent).toBe("peak vs valley");
    });
});
