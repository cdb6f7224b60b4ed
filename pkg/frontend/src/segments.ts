import type { SegmentInfo } from "./types";

/**
 * Segment owning a playback time. Consecutive segments overlap inside the
 * crossfade window; there the incoming segment wins once the blend is past
 * its midpoint, which matches what the viewer perceives.
 */
export function activeSegmentIndex(segments: SegmentInfo[], time: number): number {
  if (segments.length === 0) return -1;
  const containing = segments.filter((s) => time >= s.start && time <= s.end);
  if (containing.length === 0) {
    if (time < segments[0].start) return segments[0].index;
    return segments[segments.length - 1].index;
  }
  if (containing.length === 1) return containing[0].index;
  const earlier = containing[0];
  const later = containing[containing.length - 1];
  const midpoint = (later.start + Math.min(earlier.end, later.end)) / 2;
  return time >= midpoint ? later.index : earlier.index;
}

export function segmentAt(segments: SegmentInfo[], index: number): SegmentInfo | null {
  return segments.find((s) => s.index === index) ?? null;
}
