import type { Clip } from "./viewmodel.js";

/**
 * Subset of CanvasRenderingContext2D the renderer uses; tests substitute a
 * recording implementation, the browser passes the real context.
 */
export interface Draw2D {
  clearRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  stroke(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  fill(): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  fillStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
}

export interface RenderOptions {
  width: number;
  height: number;
  /** meters-to-pixels scale */
  scale: number;
  grid: boolean;
}

const DEFAULTS: RenderOptions = { width: 640, height: 400, scale: 90, grid: true };

/**
 * Orthographic 2D skeleton renderer (the no-GPU fallback mode). An oblique
 * projection keeps depth visible: x' = x + 0.45 z, y' = y + 0.22 z. Bones are
 * drawn from the parent array; boundary markers tick the timeline strip at the
 * bottom at each call junction. Never mutates the clip data.
 */
export class SkeletonRenderer {
  readonly options: RenderOptions;

  constructor(
    private readonly ctx: Draw2D,
    options: Partial<RenderOptions> = {},
  ) {
    this.options = { ...DEFAULTS, ...options };
  }

  private project(p: number[]): [number, number] {
    const { width, height, scale } = this.options;
    const px = p[0] + 0.45 * p[2];
    const py = p[1] + 0.22 * p[2];
    return [width / 2 + px * scale, height * 0.78 - py * scale];
  }

  drawFrame(clip: Clip, frameIndex: number, cursor?: number): void {
    const { width, height } = this.options;
    const ctx = this.ctx;
    ctx.clearRect(0, 0, width, height);
    if (this.options.grid) this.drawGrid();
    const frame = clip.frames[Math.min(frameIndex, clip.frames.length - 1)];

    ctx.strokeStyle = "#2f6fdb";
    ctx.lineWidth = 3;
    for (let j = 1; j < clip.parent.length; j++) {
      const p = clip.parent[j];
      if (p === j) continue;
      const [x0, y0] = this.project(frame[p]);
      const [x1, y1] = this.project(frame[j]);
      ctx.beginPath();
      ctx.moveTo(x0, y0);
      ctx.lineTo(x1, y1);
      ctx.stroke();
    }
    ctx.fillStyle = "#1b3f80";
    for (const joint of frame) {
      const [x, y] = this.project(joint);
      ctx.beginPath();
      ctx.arc(x, y, 4, 0, Math.PI * 2);
      ctx.fill();
    }
    this.drawTimeline(clip, cursor ?? frameIndex);
  }

  private drawGrid(): void {
    const { width, height, scale } = this.options;
    const ctx = this.ctx;
    ctx.strokeStyle = "#d7dde6";
    ctx.lineWidth = 1;
    const groundY = height * 0.78;
    for (let i = -6; i <= 6; i++) {
      ctx.beginPath();
      ctx.moveTo(width / 2 + i * scale * 0.5, groundY - 40);
      ctx.lineTo(width / 2 + i * scale * 0.5, groundY + 20);
      ctx.stroke();
    }
    ctx.beginPath();
    ctx.moveTo(0, groundY);
    ctx.lineTo(width, groundY);
    ctx.stroke();
  }

  /** Timeline strip with per-call boundary markers and the playback cursor. */
  private drawTimeline(clip: Clip, cursor: number): void {
    const { width, height } = this.options;
    const ctx = this.ctx;
    const y = height - 16;
    ctx.fillStyle = "#e8ecf2";
    ctx.fillRect(16, y, width - 32, 8);
    ctx.fillStyle = "#c2402a";
    for (const b of clip.boundaryFrames) {
      const frac = b / clip.frames.length;
      ctx.fillRect(16 + frac * (width - 32) - 1, y - 3, 2, 14);
    }
    ctx.fillStyle = "#2f6fdb";
    const frac = Math.min(cursor / Math.max(clip.frames.length - 1, 1), 1);
    ctx.fillRect(16 + frac * (width - 32) - 2, y - 2, 4, 12);
  }
}
