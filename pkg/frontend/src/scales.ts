import { interpolateRgb } from "d3";

// Diverging map for signed kWh change, anchored at zero: losses cool,
// gains warm. These hues are a design choice, nothing more.
export const LOSS_COLOR = "#2166ac";
export const MID_COLOR = "#f7f7f7";
export const GAIN_COLOR = "#b2182b";

// Household-count depth ramp for hexagon fills.
export const DEPTH_LIGHT = "#e8f0e4";
export const DEPTH_DARK = "#1d4220";

const lossSide = interpolateRgb(MID_COLOR, LOSS_COLOR);
const gainSide = interpolateRgb(MID_COLOR, GAIN_COLOR);
const depthRamp = interpolateRgb(DEPTH_LIGHT, DEPTH_DARK);

function clamp01(t: number): number {
    return t < 0 ? 0 : t > 1 ? 1 : t;
}

/** Diverging color for t in [-1, 1]; t = 0 maps to the neutral midpoint. */
export function divergingColor(t: number): string {
    if (!Number.isFinite(t) || t === 0) return lossSide(0);
    return t < 0 ? lossSide(clamp01(-t)) : gainSide(clamp01(t));
}

/** Color for a signed change scaled against the largest magnitude in view. */
export function colorForChange(signed: number, maxAbs: number): string {
    if (maxAbs <= 0) return divergingColor(0);
    return divergingColor(signed / maxAbs);
}

/** Sequential fill encoding household count depth, t in [0, 1]. */
export function depthColor(t: number): string {
    return depthRamp(clamp01(t));
}

/** Plain linear map; no clamping, callers clamp where it matters. */
export function linearScale(
    d0: number,
    d1: number,
    r0: number,
    r1: number,
): (value: number) => number {
    const span = d1 - d0;
    if (span === 0) return () => (r0 + r1) / 2;
    return (value) => r0 + ((value - d0) / span) * (r1 - r0);
}
