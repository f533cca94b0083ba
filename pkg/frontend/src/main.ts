import { ApiClient } from "./api.js";
import { SkeletonRenderer } from "./renderer.js";
import { MotionStudioViewModel } from "./viewmodel.js";

const API_BASE = (window as unknown as { MOTION_AGENT_API?: string }).MOTION_AGENT_API ?? "http://127.0.0.1:8080";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

async function boot(): Promise<void> {
  const vm = new MotionStudioViewModel(new ApiClient(API_BASE));
  const params = new URLSearchParams(window.location.search);
  await vm.init(params.get("session") ?? undefined);
  if (vm.sessionId) {
    params.set("session", vm.sessionId);
    history.replaceState(null, "", `?${params.toString()}`);
  }

  const canvas = el<HTMLCanvasElement>("viewer");
  const ctx = canvas.getContext("2d");
  if (!ctx) throw new Error("2d canvas unavailable");
  const renderer = new SkeletonRenderer(ctx, { width: canvas.width, height: canvas.height });

  const messagesDiv = el<HTMLDivElement>("messages");
  const input = el<HTMLInputElement>("turn-input");
  const sendBtn = el<HTMLButtonElement>("send");
  const playBtn = el<HTMLButtonElement>("play");
  const scrubber = el<HTMLInputElement>("scrubber");
  const speedSel = el<HTMLSelectElement>("speed");
  const loopBox = el<HTMLInputElement>("loop");
  const clipSel = el<HTMLSelectElement>("clips");
  const errorDiv = el<HTMLDivElement>("error");

  function renderMessages(): void {
    messagesDiv.innerHTML = "";
    for (const msg of vm.messages) {
      const row = document.createElement("div");
      row.className = `msg ${msg.role}`;
      const who = document.createElement("b");
      who.textContent = msg.role === "user" ? "you" : "agent";
      row.appendChild(who);
      if (msg.text) row.appendChild(document.createTextNode(` ${msg.text}`));
      if (msg.planSummary.length) {
        const ul = document.createElement("ul");
        for (const line of msg.planSummary) {
          const li = document.createElement("li");
          li.textContent = line;
          ul.appendChild(li);
        }
        row.appendChild(ul);
      }
      for (const caption of msg.captions) {
        const p = document.createElement("p");
        p.className = "caption";
        p.textContent = `caption: ${caption}`;
        row.appendChild(p);
      }
      messagesDiv.appendChild(row);
    }
    messagesDiv.scrollTop = messagesDiv.scrollHeight;
  }

  function renderClipList(): void {
    clipSel.innerHTML = "";
    for (const id of vm.clips.keys()) {
      const opt = document.createElement("option");
      opt.value = id;
      opt.textContent = id;
      if (id === vm.playback.clipId) opt.selected = true;
      clipSel.appendChild(opt);
    }
  }

  function sync(): void {
    renderMessages();
    renderClipList();
    errorDiv.textContent = vm.lastError ?? "";
    sendBtn.disabled = vm.pending;
    const clip = vm.currentClip();
    scrubber.max = clip ? String(clip.frames.length - 1) : "0";
    playBtn.textContent = vm.playback.playing ? "pause" : "play";
  }

  sendBtn.addEventListener("click", async () => {
    const text = input.value.trim();
    if (!text) return;
    await vm.sendTurn(text);
    if (!vm.lastError) input.value = "";
    sync();
  });
  input.addEventListener("keydown", (ev) => {
    if (ev.key === "Enter") sendBtn.click();
  });
  playBtn.addEventListener("click", () => {
    vm.playback.playing ? vm.pause() : vm.play();
    sync();
  });
  scrubber.addEventListener("input", () => vm.scrub(Number(scrubber.value)));
  speedSel.addEventListener("change", () => vm.setSpeed(Number(speedSel.value)));
  loopBox.addEventListener("change", () => vm.setLoop(loopBox.checked));
  clipSel.addEventListener("change", () => {
    vm.select(clipSel.value);
    sync();
  });

  let last = performance.now();
  function frame(now: number): void {
    vm.step(now - last);
    last = now;
    const clip = vm.currentClip();
    if (clip) {
      renderer.drawFrame(clip, vm.currentFrameIndex(), vm.playback.cursor);
      scrubber.value = String(vm.currentFrameIndex());
    }
    requestAnimationFrame(frame);
  }
  requestAnimationFrame(frame);
  sync();
}

boot().catch((err) => {
  const div = document.getElementById("error");
  if (div) div.textContent = String(err);
});
