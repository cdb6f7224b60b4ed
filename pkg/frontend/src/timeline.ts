import { activeSegmentIndex } from "./segments";
import type { SegmentInfo } from "./types";

export interface TimelineCallbacks {
  onSeek: (time: number) => void;
  onPlayPause: () => void;
  onSpeed: (speed: number) => void;
}

/** Scrubber plus proportional segment blocks; highlights the active one. */
export class Timeline {
  private readonly scrubber: HTMLInputElement;
  private readonly blocks: HTMLDivElement;
  private readonly playButton: HTMLButtonElement;
  private readonly clock: HTMLSpanElement;
  private segments: SegmentInfo[] = [];
  private duration = 0;

  constructor(container: HTMLElement, callbacks: TimelineCallbacks) {
    this.blocks = document.createElement("div");
    this.blocks.className = "timeline-blocks";
    container.appendChild(this.blocks);

    const row = document.createElement("div");
    row.className = "timeline-row";
    container.appendChild(row);

    this.playButton = document.createElement("button");
    this.playButton.textContent = "Play";
    this.playButton.addEventListener("click", callbacks.onPlayPause);
    row.appendChild(this.playButton);

    this.scrubber = document.createElement("input");
    this.scrubber.type = "range";
    this.scrubber.min = "0";
    this.scrubber.max = "1";
    this.scrubber.step = "0.001";
    this.scrubber.value = "0";
    this.scrubber.addEventListener("input", () => {
      callbacks.onSeek(parseFloat(this.scrubber.value) * this.duration);
    });
    row.appendChild(this.scrubber);

    this.clock = document.createElement("span");
    this.clock.className = "clock";
    this.clock.textContent = "0.00s";
    row.appendChild(this.clock);

    const speed = document.createElement("select");
    for (const value of [0.5, 1, 2]) {
      const option = document.createElement("option");
      option.value = String(value);
      option.textContent = `${value}x`;
      if (value === 1) option.selected = true;
      speed.appendChild(option);
    }
    speed.addEventListener("change", () =>
      callbacks.onSpeed(parseFloat(speed.value)),
    );
    row.appendChild(speed);
  }

  setSegments(segments: SegmentInfo[], duration: number): void {
    this.segments = segments;
    this.duration = duration;
    this.blocks.innerHTML = "";
    for (const seg of segments) {
      const block = document.createElement("div");
      block.className = "timeline-block";
      block.dataset.index = String(seg.index);
      block.style.left = `${(seg.start / duration) * 100}%`;
      block.style.width = `${((seg.end - seg.start) / duration) * 100}%`;
      block.title = seg.movement_id;
      this.blocks.appendChild(block);
    }
  }

  update(time: number, playing: boolean): void {
    if (this.duration > 0) this.scrubber.value = String(time / this.duration);
    this.playButton.textContent = playing ? "Pause" : "Play";
    this.clock.textContent = `${time.toFixed(2)}s`;
    const active = activeSegmentIndex(this.segments, time);
    this.blocks.querySelectorAll<HTMLDivElement>(".timeline-block").forEach((el) => {
      el.classList.toggle("active", el.dataset.index === String(active));
    });
  }

  activeIndex(time: number): number {
    return activeSegmentIndex(this.segments, time);
  }
}
