import type { FramesDoc } from "./types";

/**
 * Forward kinematics over frames-json rows.
 *
 * Frame layout: [tx, ty, tz, then w,x,y,z per joint in joints[] order].
 * Joint rotations are local and replace the rest rotation; rest translations
 * come from joints[].translation.
 */

export type Vec3 = [number, number, number];
export type Quat = [number, number, number, number]; // w, x, y, z

export function quatMultiply(a: Quat, b: Quat): Quat {
  const [aw, ax, ay, az] = a;
  const [bw, bx, by, bz] = b;
  return [
    aw * bw - ax * bx - ay * by - az * bz,
    aw * bx + ax * bw + ay * bz - az * by,
    aw * by - ax * bz + ay * bw + az * bx,
    aw * bz + ax * by - ay * bx + az * bw,
  ];
}

export function quatRotate(q: Quat, v: Vec3): Vec3 {
  const [w, x, y, z] = q;
  // t = 2 * cross(u, v); v' = v + w*t + cross(u, t)
  const tx = 2 * (y * v[2] - z * v[1]);
  const ty = 2 * (z * v[0] - x * v[2]);
  const tz = 2 * (x * v[1] - y * v[0]);
  return [
    v[0] + w * tx + (y * tz - z * ty),
    v[1] + w * ty + (z * tx - x * tz),
    v[2] + w * tz + (x * ty - y * tx),
  ];
}

export function frameQuat(doc: FramesDoc, frameIndex: number, jointIndex: number): Quat {
  const row = doc.frames[frameIndex];
  const base = 3 + jointIndex * 4;
  return [row[base], row[base + 1], row[base + 2], row[base + 3]];
}

/** World positions for every joint at one frame, in joints[] order. */
export function worldPositions(doc: FramesDoc, frameIndex: number): Vec3[] {
  const row = doc.frames[frameIndex];
  const rotations: Quat[] = [];
  const positions: Vec3[] = [];
  doc.joints.forEach((joint, i) => {
    const local = frameQuat(doc, frameIndex, i);
    if (joint.parent === null) {
      rotations.push(local);
      positions.push([row[0], row[1], row[2]]);
    } else {
      const pr = rotations[joint.parent];
      const pp = positions[joint.parent];
      const offset = quatRotate(pr, joint.translation);
      rotations.push(quatMultiply(pr, local));
      positions.push([pp[0] + offset[0], pp[1] + offset[1], pp[2] + offset[2]]);
    }
  });
  return positions;
}

export function frameIndexForTime(doc: FramesDoc, time: number): number {
  const index = Math.round(time * doc.rate);
  return Math.min(Math.max(index, 0), doc.frames.length - 1);
}
