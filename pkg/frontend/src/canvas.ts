/** Sketch canvas: faint shadow underlay with live red strokes on top. */

import { CanvasStrokeBuffer } from "./strokes.js";

export class SketchCanvas {
  readonly buffer: CanvasStrokeBuffer;
  private ctx: CanvasRenderingContext2D;
  private shadow: HTMLImageElement | null = null;

  constructor(
    readonly canvas: HTMLCanvasElement,
    size: number,
    private onStrokeFinished: () => void = () => {},
  ) {
    this.canvas.width = size;
    this.canvas.height = size;
    this.buffer = new CanvasStrokeBuffer(size);
    const ctx = canvas.getContext("2d");
    if (!ctx) throw new Error("2d context unavailable");
    this.ctx = ctx;
    this.bindPointerEvents();
    this.redraw();
  }

  private bindPointerEvents(): void {
    let drawing = false;
    const pos = (ev: PointerEvent): [number, number] => {
      const rect = this.canvas.getBoundingClientRect();
      const scale = this.canvas.width / rect.width;
      return [(ev.clientX - rect.left) * scale, (ev.clientY - rect.top) * scale];
    };
    this.canvas.addEventListener("pointerdown", (ev) => {
      drawing = true;
      this.canvas.setPointerCapture(ev.pointerId);
      const [x, y] = pos(ev);
      this.buffer.beginStroke(x, y);
      this.redraw();
    });
    this.canvas.addEventListener("pointermove", (ev) => {
      if (!drawing) return;
      const [x, y] = pos(ev);
      this.buffer.extendStroke(x, y);
      this.redraw();
    });
    const finish = () => {
      if (!drawing) return;
      drawing = false;
      this.buffer.endStroke();
      this.redraw();
      this.onStrokeFinished();
    };
    this.canvas.addEventListener("pointerup", finish);
    this.canvas.addEventListener("pointerleave", finish);
  }

  async setShadow(url: string): Promise<void> {
    const img = new Image();
    img.src = url;
    await img.decode();
    this.shadow = img;
    this.redraw();
  }

  undo(): void {
    this.buffer.undo();
    this.redraw();
  }

  clear(): void {
    this.buffer.clear();
    this.redraw();
  }

  redraw(): void {
    const { width, height } = this.canvas;
    this.ctx.fillStyle = "#ffffff";
    this.ctx.fillRect(0, 0, width, height);
    if (this.shadow) {
      this.ctx.globalAlpha = 0.9;
      this.ctx.drawImage(this.shadow, 0, 0, width, height);
      this.ctx.globalAlpha = 1.0;
    }
    this.ctx.strokeStyle = "#cc2222";
    this.ctx.lineWidth = this.buffer.penWidth;
    this.ctx.lineCap = "round";
    this.ctx.lineJoin = "round";
    for (const line of this.buffer.pixelPolylines()) {
      if (line.length === 0) continue;
      this.ctx.beginPath();
      this.ctx.moveTo(line[0][0], line[0][1]);
      for (const [x, y] of line.slice(1)) this.ctx.lineTo(x, y);
      if (line.length === 1) this.ctx.lineTo(line[0][0] + 0.5, line[0][1] + 0.5);
      this.ctx.stroke();
    }
  }
}
