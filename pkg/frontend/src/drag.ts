/**
 * Pointer-drag steering of human capsules: a press picks a capsule, moves
 * intersect a horizontal plane at the grab height (matching the walking-
 * human scenarios) and emit rate-limited set_human_target commands that
 * translate the capsule, preserving its shape. Release stops the stream.
 */

import * as THREE from "three";
import type { CommandPayload, Vec3 } from "./protocol";
import { RateLimiter } from "./rate";
import { SceneModel } from "./scene";

export const MAX_COMMANDS_PER_SECOND = 25;

export interface PointerSample {
  /** normalized device coordinates, x/y in [-1, 1] */
  ndc: { x: number; y: number };
  timeMs: number;
}

export class DragController {
  private readonly raycaster = new THREE.Raycaster();
  private readonly limiter = new RateLimiter(MAX_COMMANDS_PER_SECOND);
  private readonly plane = new THREE.Plane();
  private active: {
    capsuleId: string;
    grabOffsetA: THREE.Vector3;
    grabOffsetB: THREE.Vector3;
  } | null = null;

  constructor(
    private readonly camera: THREE.Camera,
    private readonly scene: SceneModel,
    private readonly emit: (cmd: CommandPayload) => void,
    private readonly maxSpeed = 1.0,
  ) {}

  get dragging(): string | null {
    return this.active ? this.active.capsuleId : null;
  }

  pointerDown(sample: PointerSample): boolean {
    this.scene.root.updateMatrixWorld(true);  // raycast against current poses
    this.raycaster.setFromCamera(
      new THREE.Vector2(sample.ndc.x, sample.ndc.y), this.camera);
    const hits = this.raycaster.intersectObjects(this.scene.humanRaycastTargets(), false);
    const first = hits[0];
    if (!first) return false;
    let node: THREE.Object3D | null = first.object;
    while (node && !node.userData.capsuleId) node = node.parent;
    if (!node) return false;
    const capsuleId = node.userData.capsuleId as string;
    const pose = this.scene.humanPose(capsuleId);
    if (!pose) return false;

    // horizontal drag plane through the grab point
    this.plane.set(new THREE.Vector3(0, 0, 1), -first.point.z);
    this.active = {
      capsuleId,
      grabOffsetA: pose.a.clone().sub(first.point),
      grabOffsetB: pose.b.clone().sub(first.point),
    };
    this.limiter.reset();
    return true;
  }

  pointerMove(sample: PointerSample): CommandPayload | null {
    if (!this.active) return null;
    if (!this.limiter.allow(sample.timeMs)) return null;
    this.raycaster.setFromCamera(
      new THREE.Vector2(sample.ndc.x, sample.ndc.y), this.camera);
    const point = new THREE.Vector3();
    if (!this.raycaster.ray.intersectPlane(this.plane, point)) return null;

    const a = point.clone().add(this.active.grabOffsetA);
    const b = point.clone().add(this.active.grabOffsetB);
    const cmd: CommandPayload = {
      action: "set_human_target",
      capsule_id: this.active.capsuleId,
      a: [a.x, a.y, a.z] as Vec3,
      b: [b.x, b.y, b.z] as Vec3,
      max_speed: this.maxSpeed,
    };
    this.emit(cmd);
    return cmd;
  }

  pointerUp(): void {
    this.active = null;
  }
}
