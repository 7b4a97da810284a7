const SVG_NS = "http://www.w3.org/2000/svg";

export function el<K extends keyof HTMLElementTagNameMap>(
    tag: K,
    className?: string,
    text?: string,
): HTMLElementTagNameMap[K] {
    const node = document.createElement(tag);
    if (className) node.className = className;
    if (text !== undefined) node.textContent = text;
    return node;
}

export function svgEl<K extends keyof SVGElementTagNameMap>(
    tag: K,
    attrs: Record<string, string | number> = {},
): SVGElementTagNameMap[K] {
    const node = document.createElementNS(SVG_NS, tag);
    for (const [name, value] of Object.entries(attrs)) {
        node.setAttribute(name, String(value));
    }
    return node;
}

export function clear(node: Element): void {
    while (node.firstChild) node.removeChild(node.firstChild);
}

/**
 * Render a number exactly as it arrived in the response JSON: the shortest
 * round-trip decimal form, no rounding, no units baked in. Keeping every
 * displayed figure on this one path is what makes the screen trustworthy.
 */
export function displayNumber(value: number): string {
    return String(value);
}
