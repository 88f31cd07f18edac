/**
 * 3D scene model: capsule meshes for the robot and the human, the
 * witness segment of the minimum distance, EEF and goal markers. Pure
 * three.js object math — the WebGL renderer is attached in main.ts, so
 * everything here also runs headless.
 */

import * as THREE from "three";
import type { CapsulePayload, StateFrame, Vec3 } from "./protocol";

export const MODE_COLORS: Record<string, number> = {
  CA_TRACK: 0x3fa7d6,  // tracking: blue
  CA_HOLD: 0xf5a623,   // goal held: amber
  WORK: 0xd64550,      // avoidance off: red
};

const HUMAN_COLOR = 0x59c27a;
const WITNESS_OK = 0x8899aa;
const WITNESS_WARN = 0xff4444;

const UP = new THREE.Vector3(0, 1, 0);

/** Cylinder + two end spheres posed from world endpoints and a radius. */
export class CapsuleObject {
  readonly group = new THREE.Group();
  readonly material: THREE.MeshStandardMaterial;
  private readonly body: THREE.Mesh;
  private readonly capA: THREE.Mesh;
  private readonly capB: THREE.Mesh;

  constructor(readonly id: string, color: number) {
    this.material = new THREE.MeshStandardMaterial({ color, roughness: 0.6 });
    this.body = new THREE.Mesh(new THREE.CylinderGeometry(1, 1, 1, 24, 1, true), this.material);
    this.capA = new THREE.Mesh(new THREE.SphereGeometry(1, 18, 12), this.material);
    this.capB = new THREE.Mesh(new THREE.SphereGeometry(1, 18, 12), this.material);
    this.group.add(this.body, this.capA, this.capB);
    this.group.userData.capsuleId = id;
  }

  setPose(a: Vec3, b: Vec3, radius: number): void {
    const va = new THREE.Vector3(...a);
    const vb = new THREE.Vector3(...b);
    const axis = vb.clone().sub(va);
    const length = axis.length();
    const mid = va.clone().add(vb).multiplyScalar(0.5);

    this.body.position.copy(mid);
    this.body.scale.set(radius, Math.max(length, 1e-9), radius);
    if (length > 1e-9) {
      this.body.quaternion.setFromUnitVectors(UP, axis.normalize());
    } else {
      this.body.quaternion.identity();
    }
    this.capA.position.copy(va);
    this.capA.scale.setScalar(radius);
    this.capB.position.copy(vb);
    this.capB.scale.setScalar(radius);
  }

  get raycastTargets(): THREE.Object3D[] {
    return [this.body, this.capA, this.capB];
  }
}

export class SceneModel {
  readonly root = new THREE.Group();
  readonly robot = new Map<string, CapsuleObject>();
  readonly human = new Map<string, CapsuleObject>();
  readonly witness: THREE.Line;
  readonly witnessMaterial: THREE.LineBasicMaterial;
  readonly eefMarker: THREE.Mesh;
  readonly goalMarker: THREE.Mesh;
  lastFrameT: number | null = null;

  constructor(robotCapsules: CapsulePayload[], humanCapsules: CapsulePayload[]) {
    for (const c of robotCapsules) {
      const obj = new CapsuleObject(c.id, MODE_COLORS.CA_TRACK ?? 0x3fa7d6);
      obj.setPose(c.a, c.b, c.r);
      this.robot.set(c.id, obj);
      this.root.add(obj.group);
    }
    for (const c of humanCapsules) {
      const obj = new CapsuleObject(c.id, HUMAN_COLOR);
      obj.setPose(c.a, c.b, c.r);
      this.human.set(c.id, obj);
      this.root.add(obj.group);
    }
    this.witnessMaterial = new THREE.LineBasicMaterial({ color: WITNESS_OK });
    const geom = new THREE.BufferGeometry().setFromPoints([
      new THREE.Vector3(), new THREE.Vector3()]);
    this.witness = new THREE.Line(geom, this.witnessMaterial);
    this.witness.visible = false;
    this.root.add(this.witness);

    this.eefMarker = new THREE.Mesh(
      new THREE.SphereGeometry(0.015, 12, 8),
      new THREE.MeshBasicMaterial({ color: 0xffffff }));
    this.goalMarker = new THREE.Mesh(
      new THREE.SphereGeometry(0.015, 12, 8),
      new THREE.MeshBasicMaterial({ color: 0xffe84d }));
    this.root.add(this.eefMarker, this.goalMarker);
  }

  /** Apply a received frame; warnBelow sets the witness-line alert color. */
  applyFrame(frame: StateFrame, warnBelow: number): void {
    for (const c of frame.robot_capsules) {
      const obj = this.robot.get(c.id);
      if (obj) {
        obj.setPose(c.a, c.b, c.r);
        obj.material.color.setHex(MODE_COLORS[frame.mode] ?? 0x888888);
      }
    }
    for (const c of frame.human_capsules) {
      this.human.get(c.id)?.setPose(c.a, c.b, c.r);
    }
    this.eefMarker.position.set(...frame.p_e);
    this.goalMarker.position.set(...frame.p_g);

    if (frame.r1 && frame.r2 && frame.d_min !== null) {
      const pts = this.witness.geometry.getAttribute("position") as THREE.BufferAttribute;
      pts.setXYZ(0, ...frame.r1);
      pts.setXYZ(1, ...frame.r2);
      pts.needsUpdate = true;
      this.witness.visible = true;
      this.witnessMaterial.color.setHex(frame.d_min < warnBelow ? WITNESS_WARN : WITNESS_OK);
    } else {
      this.witness.visible = false;
    }
    this.lastFrameT = frame.t;
  }

  humanRaycastTargets(): THREE.Object3D[] {
    const out: THREE.Object3D[] = [];
    for (const obj of this.human.values()) out.push(...obj.raycastTargets);
    return out;
  }

  humanPose(id: string): { a: THREE.Vector3; b: THREE.Vector3 } | null {
    const obj = this.human.get(id);
    if (!obj) return null;
    const caps = obj.raycastTargets;
    return {
      a: (caps[1] as THREE.Mesh).position.clone(),
      b: (caps[2] as THREE.Mesh).position.clone(),
    };
  }
}
