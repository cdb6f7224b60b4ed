import type { Adjustments, DanceRecord } from "./types";

/**
 * Studio session state: a pure reducer so the view is always a function of
 * (server record + local session), and a reload can rebuild the same view
 * from GET /api/dances/{id}.
 */

export interface PlaybackState {
  time: number;
  playing: boolean;
  speed: number;
  duration: number;
}

export interface SessionState {
  danceId: string | null;
  record: DanceRecord | null;
  selectedSegment: number;
  pendingAdjustments: Adjustments | null;
  playback: PlaybackState;
  refining: boolean;
  error: string | null;
}

export type SessionEvent =
  | { type: "reset" }
  | { type: "generation-started"; danceId: string }
  | { type: "record"; record: DanceRecord }
  | { type: "performance-loaded"; duration: number }
  | { type: "select-segment"; index: number; seekTo?: number }
  | { type: "edit-adjustments"; adjustments: Adjustments }
  | { type: "refine-started" }
  | { type: "refine-finished"; record: DanceRecord }
  | { type: "play" }
  | { type: "pause" }
  | { type: "seek"; time: number }
  | { type: "tick"; dt: number }
  | { type: "set-speed"; speed: number }
  | { type: "error"; message: string };

export function initialSession(): SessionState {
  return {
    danceId: null,
    record: null,
    selectedSegment: 0,
    pendingAdjustments: null,
    playback: { time: 0, playing: false, speed: 1, duration: 0 },
    refining: false,
    error: null,
  };
}

function clampTime(time: number, duration: number): number {
  return Math.min(Math.max(time, 0), duration);
}

export function reduce(state: SessionState, event: SessionEvent): SessionState {
  switch (event.type) {
    case "reset":
      return initialSession();
    case "generation-started":
      return {
        ...initialSession(),
        danceId: event.danceId,
      };
    case "record": {
      const error = event.record.status === "failed" ? event.record.error : null;
      return {
        ...state,
        danceId: event.record.dance_id,
        record: event.record,
        error,
      };
    }
    case "performance-loaded":
      return {
        ...state,
        playback: {
          ...state.playback,
          duration: event.duration,
          time: clampTime(state.playback.time, event.duration),
        },
      };
    case "select-segment": {
      const next: SessionState = {
        ...state,
        selectedSegment: event.index,
        pendingAdjustments: null,
      };
      if (event.seekTo !== undefined) {
        next.playback = {
          ...state.playback,
          time: clampTime(event.seekTo, state.playback.duration),
        };
      }
      return next;
    }
    case "edit-adjustments":
      return { ...state, pendingAdjustments: event.adjustments };
    case "refine-started":
      return { ...state, refining: true, error: null };
    case "refine-finished":
      // Keep playback position so the effect of the edit is immediately
      // visible at the same moment of the dance.
      return {
        ...state,
        record: event.record,
        refining: false,
        pendingAdjustments: null,
      };
    case "play":
      return { ...state, playback: { ...state.playback, playing: true } };
    case "pause":
      return { ...state, playback: { ...state.playback, playing: false } };
    case "seek":
      return {
        ...state,
        playback: {
          ...state.playback,
          time: clampTime(event.time, state.playback.duration),
        },
      };
    case "tick": {
      if (!state.playback.playing) return state;
      const advanced = state.playback.time + event.dt * state.playback.speed;
      const atEnd = advanced >= state.playback.duration;
      return {
        ...state,
        playback: {
          ...state.playback,
          time: atEnd ? 0 : clampTime(advanced, state.playback.duration),
        },
      };
    }
    case "set-speed":
      return { ...state, playback: { ...state.playback, speed: event.speed } };
    case "error":
      return { ...state, refining: false, error: event.message };
    default:
      return state;
  }
}

/** Controls lock while a refine is in flight or the dance is not ready. */
export function controlsEnabled(state: SessionState): boolean {
  return !state.refining && state.record?.status === "ready";
}
