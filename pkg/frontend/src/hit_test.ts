/**
 * Region hit-testing by sampling the label-mask image under the cursor.
 *
 * The label mask is served as a lossless grayscale PNG whose pixel value IS
 * the label id, so no separate geometry channel is needed. The browser side
 * wraps decoded ImageData; tests inject plain arrays.
 */

export interface PixelReader {
  readonly width: number;
  readonly height: number;
  /** label id at mask pixel (x, y), or null when unreadable */
  labelAt(x: number, y: number): number | null;
}

/** Map display-space cursor coordinates onto mask pixels (nearest pixel). */
export function regionAtCursor(
  reader: PixelReader,
  cursorX: number,
  cursorY: number,
  displayWidth: number,
  displayHeight: number,
): number | null {
  if (displayWidth <= 0 || displayHeight <= 0) return null;
  if (cursorX < 0 || cursorY < 0 || cursorX >= displayWidth || cursorY >= displayHeight) {
    return null;
  }
  const x = Math.floor((cursorX / displayWidth) * reader.width);
  const y = Math.floor((cursorY / displayHeight) * reader.height);
  if (x < 0 || y < 0 || x >= reader.width || y >= reader.height) return null;
  return reader.labelAt(x, y);
}

/** PixelReader over RGBA image data (e.g. canvas ImageData of the mask PNG). */
export class RgbaLabelReader implements PixelReader {
  constructor(
    readonly width: number,
    readonly height: number,
    private readonly rgba: Uint8ClampedArray | Uint8Array,
  ) {
    if (rgba.length !== width * height * 4) {
      throw new Error(`rgba length ${rgba.length} != ${width}x${height}x4`);
    }
  }

  labelAt(x: number, y: number): number | null {
    if (x < 0 || y < 0 || x >= this.width || y >= this.height) return null;
    const value = this.rgba[(y * this.width + x) * 4];
    return value === undefined ? null : value;
  }
}
