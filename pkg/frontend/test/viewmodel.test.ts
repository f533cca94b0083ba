import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { MotionStudioViewModel } from "../src/viewmodel.js";
import { FixtureServer } from "./fixture_server.js";

const TURNS = ["walk forward then wave", "describe that motion", "crouch, turn left, then wave"];

describe("scripted three-turn session against the fixture server", () => {
  const server = new FixtureServer();
  let vm: MotionStudioViewModel;

  beforeAll(async () => {
    await server.start();
    vm = new MotionStudioViewModel(new ApiClient(server.baseUrl));
    await vm.init();
    for (const text of TURNS) {
      await vm.sendTurn(text);
      expect(vm.lastError).toBeNull();
    }
  });

  afterAll(async () => {
    await server.stop();
  });

  it("renders one plan summary per turn, with every call argument in order", () => {
    const agentMessages = vm.messages.filter((m) => m.role === "agent");
    expect(agentMessages).toHaveLength(3);
    expect(agentMessages[0].planSummary).toEqual([
      "1. generate: a person walks forward",
      "2. generate: a person waves",
    ]);
    expect(agentMessages[1].planSummary).toEqual(["1. caption: - (motion fix-m0000)"]);
    expect(agentMessages[2].planSummary).toHaveLength(3);
    expect(agentMessages[1].captions).toEqual(["a person walks forward and then waves"]);
  });

  it("fetches and plays every clip", () => {
    expect([...vm.clips.keys()]).toEqual(["fix-m0000", "fix-m0001"]);
    for (const clipId of vm.clips.keys()) {
      vm.select(clipId);
      vm.play();
      expect(vm.playback.playing).toBe(true);
      const before = vm.playback.cursor;
      vm.step(100); // 100 ms at 20 fps -> 2 frames
      expect(vm.playback.cursor).toBeGreaterThan(before);
      vm.pause();
    }
  });

  it("shows call-boundary markers equal to calls minus one", () => {
    const agentMessages = vm.messages.filter((m) => m.role === "agent");
    const clip0 = vm.clips.get("fix-m0000")!;
    const clip1 = vm.clips.get("fix-m0001")!;
    expect(clip0.boundaryFrames).toHaveLength(agentMessages[0].planSummary.length - 1);
    expect(clip1.boundaryFrames).toHaveLength(agentMessages[2].planSummary.length - 1);
  });

  it("auto-selects the newest clip after a turn", () => {
    expect(vm.clips.has("fix-m0001")).toBe(true);
  });

  it("reload from server state reproduces the identical view", async () => {
    const fresh = new MotionStudioViewModel(new ApiClient(server.baseUrl));
    await fresh.init("fixture-session");
    expect(fresh.messages).toEqual(vm.messages);
    expect([...fresh.clips.keys()]).toEqual([...vm.clips.keys()]);
    for (const [id, clip] of vm.clips) {
      expect(fresh.clips.get(id)).toEqual(clip);
    }
  });

  it("playback wraps when looping and clamps otherwise", () => {
    vm.select("fix-m0000");
    const t = vm.clips.get("fix-m0000")!.frames.length;
    vm.setLoop(true);
    vm.play();
    vm.scrub(t - 1);
    vm.step(1000);
    expect(vm.playback.cursor).toBeLessThan(t);
    expect(vm.playback.playing).toBe(true);

    vm.setLoop(false);
    vm.scrub(t - 1);
    vm.step(1000);
    expect(vm.playback.cursor).toBe(t - 1);
    expect(vm.playback.playing).toBe(false);
  });

  it("scrubbing lands on the exact frame", () => {
    vm.select("fix-m0001");
    vm.scrub(17);
    expect(vm.currentFrameIndex()).toBe(17);
    const clip = vm.currentClip()!;
    expect(clip.frames[vm.currentFrameIndex()]).toBe(clip.frames[17]);
  });
});

describe("transport failures", () => {
  it("surfaces an error and stays retriable", async () => {
    const server = new FixtureServer();
    await server.start();
    try {
      const vm = new MotionStudioViewModel(new ApiClient(server.baseUrl));
      await vm.init();
      const before = vm.messages.length;
      await vm.sendTurn("FAIL");
      expect(vm.lastError).toContain("planner endpoint unreachable");
      expect(vm.pending).toBe(false);
      expect(vm.messages).toHaveLength(before);
      await vm.sendTurn("walk forward then wave"); // retriable after the failure
      expect(vm.lastError).toBeNull();
      expect(vm.messages.length).toBe(before + 2);
    } finally {
      await server.stop();
    }
  });

  it("unreachable host maps to a typed error", async () => {
    const vm = new MotionStudioViewModel(new ApiClient("http://127.0.0.1:1"));
    await expect(vm.init()).rejects.toThrow(/unreachable/);
  });
});
