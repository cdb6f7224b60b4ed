import * as THREE from "three";

import { frameIndexForTime, worldPositions } from "./fk";
import type { FramesDoc } from "./types";

/**
 * Bone-puppet renderer: a sphere per joint and a line skeleton, driven by
 * forward kinematics over frames-json. Deliberately mesh-free so it works
 * for any rig the service ships.
 */
export class PerformancePlayer {
  private readonly scene = new THREE.Scene();
  private readonly camera: THREE.PerspectiveCamera;
  private readonly renderer: THREE.WebGLRenderer;
  private joints: THREE.Mesh[] = [];
  private bones: THREE.LineSegments | null = null;
  private doc: FramesDoc | null = null;

  constructor(container: HTMLElement) {
    const width = container.clientWidth || 640;
    const height = container.clientHeight || 420;
    this.camera = new THREE.PerspectiveCamera(45, width / height, 0.05, 50);
    this.camera.position.set(0.0, 1.3, 3.2);
    this.camera.lookAt(0, 0.9, 0);
    this.renderer = new THREE.WebGLRenderer({ antialias: true });
    this.renderer.setSize(width, height);
    this.renderer.setPixelRatio(window.devicePixelRatio);
    this.scene.background = new THREE.Color(0x10141a);
    container.appendChild(this.renderer.domElement);

    const floor = new THREE.GridHelper(4, 16, 0x2c3844, 0x1c242e);
    this.scene.add(floor);
    this.scene.add(new THREE.AmbientLight(0xffffff, 0.7));
    const key = new THREE.DirectionalLight(0xffffff, 1.1);
    key.position.set(2, 4, 3);
    this.scene.add(key);
  }

  load(doc: FramesDoc): void {
    this.doc = doc;
    for (const mesh of this.joints) this.scene.remove(mesh);
    if (this.bones) this.scene.remove(this.bones);
    this.joints = doc.joints.map((joint) => {
      const radius = joint.parent === null ? 0.035 : 0.022;
      const mesh = new THREE.Mesh(
        new THREE.SphereGeometry(radius, 12, 12),
        new THREE.MeshStandardMaterial({ color: 0xf0b429 }),
      );
      this.scene.add(mesh);
      return mesh;
    });
    const boneCount = doc.joints.filter((j) => j.parent !== null).length;
    const geometry = new THREE.BufferGeometry();
    geometry.setAttribute(
      "position",
      new THREE.BufferAttribute(new Float32Array(boneCount * 6), 3),
    );
    this.bones = new THREE.LineSegments(
      geometry,
      new THREE.LineBasicMaterial({ color: 0x7fb4d8 }),
    );
    this.scene.add(this.bones);
    this.showTime(0);
  }

  /** Pose the puppet at a playback time and render. */
  showTime(time: number): void {
    if (!this.doc) return;
    const frame = frameIndexForTime(this.doc, time);
    const positions = worldPositions(this.doc, frame);
    positions.forEach((p, i) => this.joints[i].position.set(p[0], p[1], p[2]));
    if (this.bones) {
      const attr = this.bones.geometry.getAttribute("position") as THREE.BufferAttribute;
      let cursor = 0;
      this.doc.joints.forEach((joint, i) => {
        if (joint.parent === null) return;
        const a = positions[joint.parent];
        const b = positions[i];
        attr.set([...a, ...b], cursor);
        cursor += 6;
      });
      attr.needsUpdate = true;
    }
    this.renderer.render(this.scene, this.camera);
  }
}
