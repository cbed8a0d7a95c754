// Session statistics: a bounded history of trainer stats messages plus
// sparkline geometry for the dashboard canvases.

import type { StatsMsg } from "./protocol.js";

export interface SparklinePoint {
  x: number; // 0..1
  y: number; // 0..1, already flipped for screen space
}

export class StatsTracker {
  private history: StatsMsg[] = [];

  constructor(private capacity = 200) {}

  push(msg: StatsMsg): void {
    this.history.push(msg);
    if (this.history.length > this.capacity) {
      this.history.splice(0, this.history.length - this.capacity);
    }
  }

  get count(): number {
    return this.history.length;
  }

  latest(): StatsMsg | null {
    return this.history.length ? this.history[this.history.length - 1] : null;
  }

  sparkline(field: "roa" | "return"): SparklinePoint[] {
    const values = this.history.map((m) => (field === "roa" ? m.roa : m.return));
    if (values.length === 0) return [];
    const lo = Math.min(...values);
    const hi = Math.max(...values);
    const span = hi - lo || 1;
    const denom = Math.max(values.length - 1, 1);
    return values.map((v, i) => ({
      x: i / denom,
      y: 1 - (v - lo) / span,
    }));
  }
}

export function paintSparkline(
  ctx: CanvasRenderingContext2D,
  points: SparklinePoint[],
  color: string,
): void {
  const { width, height } = ctx.canvas;
  ctx.clearRect(0, 0, width, height);
  if (points.length === 0) {
    ctx.fillStyle = "#9ca3af";
    ctx.font = "12px sans-serif";
    ctx.fillText("waiting for stats...", 8, height / 2);
    return;
  }
  ctx.strokeStyle = color;
  ctx.lineWidth = 1.5;
  ctx.beginPath();
  points.forEach((p, i) => {
    const px = 4 + p.x * (width - 8);
    const py = 4 + p.y * (height - 8);
    if (i === 0) ctx.moveTo(px, py);
    else ctx.lineTo(px, py);
  });
  ctx.stroke();
}
