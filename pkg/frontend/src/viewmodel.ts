import { ApiClient } from "./api.js";
import type { JointsDoc, PlanDoc, SessionTurn, TurnResponse } from "./types.js";

export interface ChatMessage {
  role: "user" | "agent";
  text: string;
  /** one line per agent call, in plan order */
  planSummary: string[];
  captions: string[];
  motionIds: string[];
}

export interface Clip {
  motionId: string;
  fps: number;
  frames: number[][][];
  parent: number[];
  jointNames: string[];
  boundaryFrames: number[];
  placementApplied: boolean;
  sources: string[];
}

export interface PlaybackState {
  clipId: string | null;
  cursor: number; // frame index in [0, T)
  playing: boolean;
  speed: number;
  loop: boolean;
}

function summarize(plan: PlanDoc): string[] {
  return plan.calls.map((c, i) => {
    const extra =
      c.task === "caption"
        ? ` (motion ${c.motion_ref})`
        : c.placement
          ? ` (second person at theta=${c.placement[0].toFixed(2)}, x=${c.placement[1]}, z=${c.placement[2]})`
          : c.motion_ref
            ? ` (extends ${c.motion_ref})`
            : "";
    return `${i + 1}. ${c.task}: ${c.argument || "-"}${extra}`;
  });
}

/**
 * UI state for one conversation. The server is the source of truth: reloading
 * through `loadFromServer` rebuilds the identical message list and clip set.
 * Clips are cached by motion id and never invalidated (motions are immutable
 * server-side). At most one turn is in flight at a time.
 */
export class MotionStudioViewModel {
  messages: ChatMessage[] = [];
  clips = new Map<string, Clip>();
  playback: PlaybackState = { clipId: null, cursor: 0, playing: false, speed: 1, loop: true };
  pending = false;
  lastError: string | null = null;
  sessionId: string | null = null;

  constructor(private readonly api: ApiClient) {}

  async init(sessionId?: string): Promise<void> {
    if (sessionId) {
      this.sessionId = sessionId;
      await this.loadFromServer();
    } else {
      const created = await this.api.createSession();
      this.sessionId = created.session_id;
    }
  }

  /** Rebuild the full view from server state (page reload path). */
  async loadFromServer(): Promise<void> {
    if (!this.sessionId) throw new Error("no session");
    const doc = await this.api.getSession(this.sessionId);
    this.messages = [];
    this.clips = new Map();
    for (const turn of doc.turns) {
      this.messages.push(this.userMessage(turn.user_text));
      this.messages.push(this.agentMessage(turn.plan, turn.response_text, turn.captions, turn.motion_ids));
      for (const mid of turn.motion_ids) await this.ensureClip(mid);
    }
    const last = this.newestClipId();
    this.playback = { clipId: last, cursor: 0, playing: false, speed: 1, loop: true };
  }

  async sendTurn(text: string): Promise<void> {
    if (!this.sessionId) throw new Error("no session");
    if (this.pending) return; // send stays disabled while a turn is in flight
    this.pending = true;
    this.lastError = null;
    let resp: TurnResponse;
    try {
      resp = await this.api.sendTurn(this.sessionId, text);
    } catch (err) {
      // turn failed before reaching the transcript: keep it retriable
      this.lastError = err instanceof Error ? err.message : String(err);
      this.pending = false;
      return;
    }
    this.messages.push(this.userMessage(text));
    this.messages.push(this.agentMessage(resp.plan, resp.response_text, resp.captions, resp.motion_ids));
    try {
      for (const mid of resp.motion_ids) await this.ensureClip(mid);
      if (resp.motion_ids.length > 0) this.select(resp.motion_ids[resp.motion_ids.length - 1]);
    } finally {
      this.pending = false;
    }
  }

  private userMessage(text: string): ChatMessage {
    return { role: "user", text, planSummary: [], captions: [], motionIds: [] };
  }

  private agentMessage(
    plan: PlanDoc,
    response: string | null,
    captions: string[],
    motionIds: string[],
  ): ChatMessage {
    return {
      role: "agent",
      text: response ?? "",
      planSummary: summarize(plan),
      captions: [...captions],
      motionIds: [...motionIds],
    };
  }

  private async ensureClip(motionId: string): Promise<Clip> {
    const cached = this.clips.get(motionId);
    if (cached) return cached;
    const doc: JointsDoc = await this.api.getJoints(motionId);
    const clip: Clip = {
      motionId,
      fps: doc.fps,
      frames: doc.joints,
      parent: doc.parent,
      jointNames: doc.joint_names,
      boundaryFrames: doc.boundary_frames,
      placementApplied: doc.placement_applied,
      sources: doc.sources,
    };
    this.clips.set(motionId, clip);
    return clip;
  }

  newestClipId(): string | null {
    let last: string | null = null;
    for (const key of this.clips.keys()) last = key;
    return last;
  }

  currentClip(): Clip | null {
    return this.playback.clipId ? (this.clips.get(this.playback.clipId) ?? null) : null;
  }

  select(clipId: string): void {
    if (!this.clips.has(clipId)) throw new Error(`unknown clip ${clipId}`);
    this.playback = { ...this.playback, clipId, cursor: 0 };
  }

  play(): void {
    if (this.currentClip()) this.playback.playing = true;
  }

  pause(): void {
    this.playback.playing = false;
  }

  setSpeed(speed: number): void {
    this.playback.speed = Math.max(0.1, speed);
  }

  setLoop(loop: boolean): void {
    this.playback.loop = loop;
  }

  scrub(frame: number): void {
    const clip = this.currentClip();
    if (!clip) return;
    const t = clip.frames.length;
    this.playback.cursor = Math.min(Math.max(0, Math.floor(frame)), t - 1);
  }

  /** Advance playback by wall-clock milliseconds; wraps at the end when looping. */
  step(dtMs: number): void {
    const clip = this.currentClip();
    if (!clip || !this.playback.playing) return;
    const t = clip.frames.length;
    let cursor = this.playback.cursor + (dtMs / 1000) * clip.fps * this.playback.speed;
    if (cursor >= t) {
      if (this.playback.loop) {
        cursor = cursor % t;
      } else {
        cursor = t - 1;
        this.playback.playing = false;
      }
    }
    this.playback.cursor = cursor;
  }

  /** Integer frame to draw for the current cursor. */
  currentFrameIndex(): number {
    const clip = this.currentClip();
    if (!clip) return 0;
    return Math.min(Math.floor(this.playback.cursor), clip.frames.length - 1);
  }
}
