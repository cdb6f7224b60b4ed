import { StudioApi, ApiError } from "./api";
import { highlightCard, renderCards } from "./cards";
import { AdjustmentControls } from "./controls";
import { pollDance } from "./poll";
import { PerformancePlayer } from "./player";
import { adjustmentRanges } from "./schema";
import { segmentAt } from "./segments";
import { controlsEnabled, initialSession, reduce, type SessionState } from "./session";
import { Timeline } from "./timeline";
import type { DanceRecord, FramesDoc, Movement } from "./types";

const api = new StudioApi(import.meta.env.VITE_API_BASE ?? "");

const el = {
  form: document.getElementById("prompt-form") as HTMLFormElement,
  prompt: document.getElementById("prompt-input") as HTMLTextAreaElement,
  submit: document.getElementById("prompt-submit") as HTMLButtonElement,
  banner: document.getElementById("banner") as HTMLDivElement,
  interpretation: document.getElementById("interpretation") as HTMLParagraphElement,
  cards: document.getElementById("cards") as HTMLDivElement,
  stage: document.getElementById("stage") as HTMLDivElement,
  timeline: document.getElementById("timeline") as HTMLDivElement,
  controls: document.getElementById("controls") as HTMLDivElement,
  applyRefine: document.getElementById("apply-refine") as HTMLButtonElement,
  versions: document.getElementById("versions") as HTMLUListElement,
};

let state: SessionState = initialSession();
let frames: FramesDoc | null = null;
let movements = new Map<string, Movement>();
let player: PerformancePlayer | null = null;
let timeline: Timeline | null = null;
let controls: AdjustmentControls | null = null;
let lastTick = performance.now();

function dispatch(event: Parameters<typeof reduce>[1]): void {
  state = reduce(state, event);
  render();
}

function showBanner(message: string | null): void {
  el.banner.textContent = message ?? "";
  el.banner.classList.toggle("visible", message !== null);
}

function render(): void {
  showBanner(state.error);
  el.submit.disabled = state.record?.status === "generating";
  const ready = controlsEnabled(state);
  controls?.setEnabled(ready);
  el.applyRefine.disabled = !ready || state.pendingAdjustments === null;
  if (state.record?.plan) {
    el.interpretation.textContent = state.record.plan.interpretation;
  }
  if (frames && timeline) {
    timeline.update(state.playback.time, state.playback.playing);
    highlightCard(el.cards, timeline.activeIndex(state.playback.time));
    player?.showTime(state.playback.time);
  }
  el.versions.innerHTML = "";
  for (const version of state.record?.performances ?? []) {
    const item = document.createElement("li");
    item.textContent = version.id.slice(0, 12);
    if (version.id === state.record?.current_performance) {
      item.classList.add("active");
    }
    el.versions.appendChild(item);
  }
}

async function loadPerformance(): Promise<void> {
  if (!state.danceId) return;
  frames = await api.frames(state.danceId);
  dispatch({ type: "performance-loaded", duration: frames.duration });
  if (!player) player = new PerformancePlayer(el.stage);
  player.load(frames);
  timeline?.setSegments(frames.segments, frames.duration);
  controls?.setJointOptions(frames.joints.map((j) => j.id));
  render();
}

async function showDance(record: DanceRecord): Promise<void> {
  dispatch({ type: "record", record });
  if (record.status === "failed") return;
  if (record.plan) {
    renderCards(el.cards, record.plan, movements, (index) => {
      const seg = frames ? segmentAt(frames.segments, index) : null;
      dispatch({ type: "select-segment", index, seekTo: seg?.start });
      if (record.plan) {
        controls?.setFrom(record.plan.selections[index].adjustments);
      }
    });
  }
  await loadPerformance();
  window.location.hash = record.dance_id;
}

async function generate(promptText: string): Promise<void> {
  if (!promptText.trim()) {
    dispatch({ type: "error", message: "Enter a story prompt first." });
    return;
  }
  try {
    const danceId = await api.createDance(promptText);
    dispatch({ type: "generation-started", danceId });
    showBanner("Generating...");
    const record = await pollDance(() => api.dance(danceId));
    await showDance(record);
  } catch (error) {
    dispatch({ type: "error", message: describeError(error) });
  }
}

function describeError(error: unknown): string {
  if (error instanceof ApiError) return error.message;
  return error instanceof Error ? error.message : String(error);
}

async function applyRefine(): Promise<void> {
  if (!state.danceId || state.pendingAdjustments === null) return;
  dispatch({ type: "refine-started" });
  try {
    await api.refine(state.danceId, state.selectedSegment, state.pendingAdjustments);
    const record = await api.dance(state.danceId);
    dispatch({ type: "refine-finished", record });
    await loadPerformance();
  } catch (error) {
    dispatch({ type: "error", message: describeError(error) });
  }
}

function animate(): void {
  const now = performance.now();
  const dt = (now - lastTick) / 1000;
  lastTick = now;
  if (state.playback.playing) dispatch({ type: "tick", dt });
  requestAnimationFrame(animate);
}

async function boot(): Promise<void> {
  const [schema, movementList] = await Promise.all([
    api.planSchema(),
    api.movements(),
  ]);
  movements = new Map(movementList.map((m) => [m.id, m]));
  const ranges = adjustmentRanges(schema);
  controls = new AdjustmentControls(el.controls, ranges, [], () => {
    if (controls) {
      dispatch({ type: "edit-adjustments", adjustments: controls.adjustments() });
    }
  });
  timeline = new Timeline(el.timeline, {
    onSeek: (time) => dispatch({ type: "seek", time }),
    onPlayPause: () =>
      dispatch({ type: state.playback.playing ? "pause" : "play" }),
    onSpeed: (speed) => dispatch({ type: "set-speed", speed }),
  });
  el.form.addEventListener("submit", (event) => {
    event.preventDefault();
    void generate(el.prompt.value);
  });
  el.applyRefine.addEventListener("click", () => void applyRefine());

  // Reload support: rebuild the whole view from the record in the URL hash.
  const fromHash = window.location.hash.slice(1);
  if (fromHash) {
    try {
      await showDance(await api.dance(fromHash));
    } catch {
      window.location.hash = "";
    }
  }
  requestAnimationFrame(animate);
}

void boot();
