/** Stroke capture buffer.
 *
 * Points are stored normalized to [0, 1] so a canvas resize preserves
 * the drawing; serialization emits the service wire format (pixel
 * coordinates in canvas space) bit-exactly as documented.
 */

import type { StrokePayload } from "./api.js";

export type Point = [number, number];

export class CanvasStrokeBuffer {
  private polylines: Point[][] = [];
  private active: Point[] | null = null;

  constructor(
    public canvasSize: number,
    public penWidth: number = 2,
  ) {}

  get isEmpty(): boolean {
    return this.polylines.length === 0 && (this.active?.length ?? 0) === 0;
  }

  /** All polylines in canvas pixels (finished plus in-progress). */
  pixelPolylines(): Point[][] {
    const out = this.polylines.map((line) =>
      line.map(([x, y]): Point => [x * this.canvasSize, y * this.canvasSize]),
    );
    if (this.active && this.active.length > 0) {
      out.push(this.active.map(([x, y]): Point => [x * this.canvasSize, y * this.canvasSize]));
    }
    return out;
  }

  beginStroke(xPx: number, yPx: number): void {
    this.active = [this.normalize(xPx, yPx)];
  }

  extendStroke(xPx: number, yPx: number): void {
    if (!this.active) return;
    this.active.push(this.normalize(xPx, yPx));
  }

  endStroke(): void {
    if (this.active && this.active.length > 0) {
      this.polylines.push(this.active);
    }
    this.active = null;
  }

  /** Removes the last finished polyline. */
  undo(): void {
    this.polylines.pop();
  }

  clear(): void {
    this.polylines = [];
    this.active = null;
  }

  /** Normalized coordinates survive a canvas resize unchanged. */
  resize(newSize: number): void {
    this.canvasSize = newSize;
  }

  private normalize(xPx: number, yPx: number): Point {
    const clamp = (v: number) => Math.min(1, Math.max(0, v));
    return [clamp(xPx / this.canvasSize), clamp(yPx / this.canvasSize)];
  }

  /** Service payload: ordered (x, y) pixel pairs plus the canvas size. */
  toPayload(category: string): StrokePayload {
    return {
      polylines: this.pixelPolylines(),
      canvas: { width: this.canvasSize, height: this.canvasSize },
      category,
    };
  }

  serialize(category: string): string {
    return JSON.stringify(this.toPayload(category));
  }

  /** Inverse of `serialize`; used by the round-trip fidelity test. */
  static parsePayload(text: string): StrokePayload {
    const data = JSON.parse(text) as StrokePayload;
    if (!Array.isArray(data.polylines)) throw new Error("polylines missing");
    if (!data.canvas || typeof data.canvas.width !== "number") {
      throw new Error("canvas size missing");
    }
    return data;
  }
}
