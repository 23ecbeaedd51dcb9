/**
 * Pure pixel helpers for the viewer canvas: label tinting, selection
 * highlighting, confidence colormap with its legend stops.
 *
 * Everything here transforms plain arrays so it is testable off-browser; the
 * canvas glue in main.ts only copies results into ImageData.
 */

export type Rgb = [number, number, number];

const PALETTE: Rgb[] = [
  [66, 133, 244],
  [219, 68, 55],
  [244, 180, 0],
  [15, 157, 88],
  [171, 71, 188],
  [0, 172, 193],
  [255, 112, 67],
  [124, 179, 66],
];

export function colorForLabel(label: number): Rgb {
  const base = PALETTE[label % PALETTE.length] ?? PALETTE[0]!;
  // labels beyond the palette get deterministic darkened variants
  const round = Math.floor(label / PALETTE.length);
  const factor = 1 / (1 + 0.35 * round);
  return [
    Math.round(base[0] * factor),
    Math.round(base[1] * factor),
    Math.round(base[2] * factor),
  ];
}

/**
 * Tint label pixels into an RGBA buffer; selected labels render at full
 * opacity, others faded.
 */
export function renderLabelOverlay(
  labels: Uint8Array | Uint8ClampedArray | number[],
  width: number,
  height: number,
  selected: ReadonlySet<number>,
): Uint8ClampedArray {
  if (labels.length !== width * height) {
    throw new Error(`labels length ${labels.length} != ${width}x${height}`);
  }
  const out = new Uint8ClampedArray(width * height * 4);
  for (let i = 0; i < labels.length; i += 1) {
    const label = labels[i] ?? 0;
    const [r, g, b] = colorForLabel(label);
    const o = i * 4;
    out[o] = r;
    out[o + 1] = g;
    out[o + 2] = b;
    out[o + 3] = selected.size === 0 || selected.has(label) ? 230 : 70;
  }
  return out;
}

/** Blue (cold, 0) to red (hot, 1) colormap used for confidence rendering. */
export function confidenceColor(value: number): Rgb {
  const v = Math.min(1, Math.max(0, value));
  // piecewise blue -> cyan -> yellow -> red
  if (v < 1 / 3) {
    const t = v * 3;
    return [0, Math.round(t * 255), 255];
  }
  if (v < 2 / 3) {
    const t = (v - 1 / 3) * 3;
    return [Math.round(t * 255), 255, Math.round((1 - t) * 255)];
  }
  const t = (v - 2 / 3) * 3;
  return [255, Math.round((1 - t) * 255), 0];
}

export interface LegendStop {
  value: number;
  color: Rgb;
}

/** Evenly spaced stops for the confidence color-scale legend. */
export function legendStops(count = 5): LegendStop[] {
  if (count < 2) throw new Error("legend needs at least 2 stops");
  const stops: LegendStop[] = [];
  for (let k = 0; k < count; k += 1) {
    const value = k / (count - 1);
    stops.push({ value, color: confidenceColor(value) });
  }
  return stops;
}

/** 4-connectivity boundary of the selected labels within a label grid. */
export function selectionBoundary(
  labels: Uint8Array | Uint8ClampedArray | number[],
  width: number,
  height: number,
  selected: ReadonlySet<number>,
): Uint8Array {
  const inside = (x: number, y: number): boolean => {
    if (x < 0 || y < 0 || x >= width || y >= height) return false;
    return selected.has(labels[y * width + x] ?? -1);
  };
  const out = new Uint8Array(width * height);
  for (let y = 0; y < height; y += 1) {
    for (let x = 0; x < width; x += 1) {
      if (!inside(x, y)) continue;
      const onEdge =
        !inside(x - 1, y) || !inside(x + 1, y) || !inside(x, y - 1) || !inside(x, y + 1);
      out[y * width + x] = onEdge ? 1 : 0;
    }
  }
  return out;
}
