import { describe, expect, it } from "vitest";

import { SkeletonRenderer, type Draw2D } from "../src/renderer.js";
import type { Clip } from "../src/viewmodel.js";

class RecordingDraw implements Draw2D {
  ops: { op: string; args: number[] }[] = [];
  strokeStyle = "";
  fillStyle = "";
  lineWidth = 1;

  private log(op: string, ...args: number[]): void {
    this.ops.push({ op: `${op}@${this.fillStyle || this.strokeStyle}`, args });
  }

  clearRect(...a: [number, number, number, number]) { this.log("clearRect", ...a); }
  beginPath() { this.log("beginPath"); }
  moveTo(...a: [number, number]) { this.log("moveTo", ...a); }
  lineTo(...a: [number, number]) { this.log("lineTo", ...a); }
  stroke() { this.log("stroke"); }
  arc(...a: [number, number, number, number, number]) { this.log("arc", ...a); }
  fill() { this.log("fill"); }
  fillRect(...a: [number, number, number, number]) { this.log("fillRect", ...a); }
}

function clip(frames: number, boundaries: number[]): Clip {
  const parent = [0, 0, 1, 2, 1, 1, 0, 0];
  const data: number[][][] = [];
  for (let f = 0; f < frames; f++) {
    data.push(parent.map((_, j) => [0.05 * j, 1 - 0.02 * j, 0.01 * f]));
  }
  return {
    motionId: "m",
    fps: 20,
    frames: data,
    parent,
    jointNames: parent.map((_, i) => `j${i}`),
    boundaryFrames: boundaries,
    placementApplied: false,
    sources: [],
  };
}

describe("skeleton renderer", () => {
  it("draws one bone per non-root joint from the parent array", () => {
    const draw = new RecordingDraw();
    const renderer = new SkeletonRenderer(draw, { grid: false });
    const c = clip(10, []);
    renderer.drawFrame(c, 0);
    const bones = draw.ops.filter((o) => o.op.startsWith("lineTo@#2f6fdb"));
    expect(bones).toHaveLength(c.parent.length - 1);
    const joints = draw.ops.filter((o) => o.op.startsWith("arc@"));
    expect(joints).toHaveLength(c.parent.length);
  });

  it("draws one marker per boundary plus the cursor on the timeline", () => {
    const draw = new RecordingDraw();
    const renderer = new SkeletonRenderer(draw, { grid: false });
    renderer.drawFrame(clip(30, [10, 20]), 0);
    const markers = draw.ops.filter((o) => o.op.startsWith("fillRect@#c2402a"));
    expect(markers).toHaveLength(2);
    const cursor = draw.ops.filter((o) => o.op.startsWith("fillRect@#2f6fdb"));
    expect(cursor).toHaveLength(1);
  });

  it("never mutates clip data", () => {
    const draw = new RecordingDraw();
    const renderer = new SkeletonRenderer(draw, {});
    const c = clip(5, [2]);
    const snapshot = JSON.stringify(c.frames);
    renderer.drawFrame(c, 3);
    expect(JSON.stringify(c.frames)).toBe(snapshot);
  });

  it("scrub target frame is the one drawn", () => {
    const draw = new RecordingDraw();
    const renderer = new SkeletonRenderer(draw, { grid: false, scale: 100, width: 640, height: 400 });
    const c = clip(12, []);
    renderer.drawFrame(c, 7);
    // root joint arc x equals the projection of frame 7's root
    const arcs = draw.ops.filter((o) => o.op.startsWith("arc@"));
    const [x] = arcs[0].args;
    const p = c.frames[7][0];
    expect(x).toBeCloseTo(640 / 2 + (p[0] + 0.45 * p[2]) * 100, 6);
  });
});
