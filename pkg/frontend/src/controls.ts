import type { AdjustmentRanges } from "./schema";
import { clampToRange } from "./schema";
import type { Adjustments } from "./types";

export interface ControlValues {
  energyLower: number;
  energyUpper: number;
  circles: number;
  axisJoint: string;
  axisIntensity: number;
  synchronous: number;
  externalSpaces: number;
  shifting: number;
}

/**
 * Six-element editing panel. Slider bounds come from the published plan
 * schema, so out-of-range values cannot even be expressed.
 */
export class AdjustmentControls {
  private readonly inputs = new Map<string, HTMLInputElement>();
  private readonly axisSelect: HTMLSelectElement;
  private readonly ranges: AdjustmentRanges;

  constructor(
    container: HTMLElement,
    ranges: AdjustmentRanges,
    jointIds: string[],
    private readonly onChange: () => void,
  ) {
    this.ranges = ranges;
    const sliders: [string, string, number, { min: number; max: number }][] = [
      ["energyLower", "Energy (lower body)", ranges.energy.neutral, ranges.energy],
      ["energyUpper", "Energy (arms)", ranges.energy.neutral, ranges.energy],
      ["circles", "Circles & curves", ranges.circles_curves.neutral, ranges.circles_curves],
      ["axisIntensity", "Axis point intensity", ranges.axis_point_intensity.neutral,
       ranges.axis_point_intensity],
      ["synchronous", "Synchronous limbs", ranges.synchronous_limbs.neutral,
       ranges.synchronous_limbs],
      ["externalSpaces", "External body spaces", ranges.external_body_spaces.neutral,
       ranges.external_body_spaces],
      ["shifting", "Shifting relations", ranges.shifting_relations.neutral,
       ranges.shifting_relations],
    ];
    for (const [key, label, neutral, bounds] of sliders) {
      const wrap = document.createElement("label");
      wrap.className = "slider";
      const caption = document.createElement("span");
      caption.textContent = label;
      wrap.appendChild(caption);
      const input = document.createElement("input");
      input.type = "range";
      input.min = String(bounds.min);
      input.max = String(bounds.max);
      input.step = "0.05";
      input.value = String(neutral);
      const value = document.createElement("span");
      value.className = "slider-value";
      value.textContent = Number(neutral).toFixed(2);
      input.addEventListener("input", () => {
        value.textContent = Number(input.value).toFixed(2);
        this.onChange();
      });
      wrap.appendChild(input);
      wrap.appendChild(value);
      container.appendChild(wrap);
      this.inputs.set(key, input);
    }

    const axisWrap = document.createElement("label");
    axisWrap.className = "slider";
    const axisCaption = document.createElement("span");
    axisCaption.textContent = "Axis point joint";
    axisWrap.appendChild(axisCaption);
    this.axisSelect = document.createElement("select");
    for (const joint of jointIds) {
      const option = document.createElement("option");
      option.value = joint;
      option.textContent = joint;
      this.axisSelect.appendChild(option);
    }
    this.axisSelect.addEventListener("change", () => this.onChange());
    axisWrap.appendChild(this.axisSelect);
    container.appendChild(axisWrap);
  }

  private value(key: string): number {
    return parseFloat(this.inputs.get(key)!.value);
  }

  /** Joint ids arrive with the first performance load. */
  setJointOptions(jointIds: string[]): void {
    const current = this.axisSelect.value;
    this.axisSelect.innerHTML = "";
    for (const joint of jointIds) {
      const option = document.createElement("option");
      option.value = joint;
      option.textContent = joint;
      this.axisSelect.appendChild(option);
    }
    if (jointIds.includes(current)) this.axisSelect.value = current;
  }

  setEnabled(enabled: boolean): void {
    for (const input of this.inputs.values()) input.disabled = !enabled;
    this.axisSelect.disabled = !enabled;
  }

  /** Reflect a selection's stored adjustments into the controls. */
  setFrom(adjustments: Adjustments): void {
    const energy = adjustments.energy ?? {};
    const lower = energy.left_leg ?? energy.right_leg ?? this.ranges.energy.neutral;
    const upper = energy.left_arm ?? energy.right_arm ?? this.ranges.energy.neutral;
    this.set("energyLower", lower);
    this.set("energyUpper", upper);
    this.set("circles", adjustments.circles_curves ?? 0);
    this.set("axisIntensity", adjustments.axis_point?.intensity ?? 0);
    if (adjustments.axis_point) this.axisSelect.value = adjustments.axis_point.joint;
    this.set("synchronous", adjustments.synchronous_limbs ?? 0);
    this.set("externalSpaces", adjustments.external_body_spaces ?? 1);
    this.set("shifting", adjustments.shifting_relations ?? 0);
  }

  private set(key: string, value: number): void {
    const input = this.inputs.get(key)!;
    input.value = String(value);
    (input.nextElementSibling as HTMLElement).textContent = value.toFixed(2);
  }

  /** Current panel state as a minimal adjustments object (neutral = {}). */
  adjustments(): Adjustments {
    const out: Adjustments = {};
    const r = this.ranges;
    const lower = clampToRange(this.value("energyLower"), r.energy);
    const upper = clampToRange(this.value("energyUpper"), r.energy);
    const energy: Record<string, number> = {};
    if (lower !== r.energy.neutral) {
      energy.left_leg = lower;
      energy.right_leg = lower;
    }
    if (upper !== r.energy.neutral) {
      energy.left_arm = upper;
      energy.right_arm = upper;
    }
    if (Object.keys(energy).length) out.energy = energy;
    const circles = clampToRange(this.value("circles"), r.circles_curves);
    if (circles !== r.circles_curves.neutral) out.circles_curves = circles;
    const intensity = clampToRange(this.value("axisIntensity"), r.axis_point_intensity);
    if (intensity !== r.axis_point_intensity.neutral) {
      out.axis_point = { joint: this.axisSelect.value, intensity };
    }
    const synchronous = clampToRange(this.value("synchronous"), r.synchronous_limbs);
    if (synchronous !== r.synchronous_limbs.neutral) out.synchronous_limbs = synchronous;
    const spaces = clampToRange(this.value("externalSpaces"), r.external_body_spaces);
    if (spaces !== r.external_body_spaces.neutral) out.external_body_spaces = spaces;
    const shifting = clampToRange(this.value("shifting"), r.shifting_relations);
    if (shifting !== r.shifting_relations.neutral) out.shifting_relations = shifting;
    return out;
  }
}
