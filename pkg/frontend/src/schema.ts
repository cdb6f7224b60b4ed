/** Slider ranges pulled from the published plan schema, so the controls can
 * never drift from what the server enforces. */

export interface Range {
  min: number;
  max: number;
  neutral: number;
}

export interface AdjustmentRanges {
  energy: Range;
  circles_curves: Range;
  axis_point_intensity: Range;
  synchronous_limbs: Range;
  external_body_spaces: Range;
  shifting_relations: Range;
  regions: string[];
}

const NEUTRALS: Record<string, number> = {
  energy: 1,
  circles_curves: 0,
  axis_point_intensity: 0,
  synchronous_limbs: 0,
  external_body_spaces: 1,
  shifting_relations: 0,
};

type SchemaNode = Record<string, any>;

function numberRange(node: SchemaNode | undefined, name: string): Range {
  if (!node || typeof node.minimum !== "number" || typeof node.maximum !== "number") {
    throw new Error(`plan schema is missing bounds for ${name}`);
  }
  return { min: node.minimum, max: node.maximum, neutral: NEUTRALS[name] };
}

export function adjustmentRanges(planSchema: SchemaNode): AdjustmentRanges {
  const adjustments: SchemaNode =
    planSchema.properties?.selections?.items?.properties?.adjustments?.properties;
  if (!adjustments) throw new Error("plan schema has no adjustments section");
  const energyRegions: SchemaNode = adjustments.energy?.properties ?? {};
  const regionNames = Object.keys(energyRegions);
  const firstRegion = energyRegions[regionNames[0]];
  return {
    energy: numberRange(firstRegion, "energy"),
    circles_curves: numberRange(adjustments.circles_curves, "circles_curves"),
    axis_point_intensity: numberRange(
      adjustments.axis_point?.properties?.intensity,
      "axis_point_intensity",
    ),
    synchronous_limbs: numberRange(adjustments.synchronous_limbs, "synchronous_limbs"),
    external_body_spaces: numberRange(
      adjustments.external_body_spaces,
      "external_body_spaces",
    ),
    shifting_relations: numberRange(
      adjustments.shifting_relations,
      "shifting_relations",
    ),
    regions: regionNames,
  };
}

export function clampToRange(value: number, range: Range): number {
  if (Number.isNaN(value)) return range.neutral;
  return Math.min(Math.max(value, range.min), range.max);
}
