// Camera rigs for the review viewport: perspective orbit, bird view, and a
// strictly top-down orthographic mode used as the floor plan.

import * as THREE from 'three';
import type { BoxDto } from './api.js';
import { boxMatrix } from './boxes.js';

export interface Bounds {
  min: THREE.Vector3;
  max: THREE.Vector3;
}

export function meshBounds(object: THREE.Object3D): Bounds {
  const box = new THREE.Box3().setFromObject(object);
  return { min: box.min.clone(), max: box.max.clone() };
}

export function makeOrbitCamera(aspect: number): THREE.PerspectiveCamera {
  return new THREE.PerspectiveCamera(55, aspect, 0.01, 1000);
}

/** Pose framing the whole scene from an elevated three-quarter angle. */
export function birdView(bounds: Bounds): { position: THREE.Vector3; target: THREE.Vector3 } {
  const center = bounds.min.clone().add(bounds.max).multiplyScalar(0.5);
  const size = bounds.max.clone().sub(bounds.min);
  const radius = Math.max(size.x, size.y, size.z);
  const position = center.clone().add(new THREE.Vector3(radius * 0.9, -radius * 0.9, radius * 0.9));
  return { position, target: center };
}

/**
 * Floor-plan camera: orthographic, locked straight down. Orthographic
 * projection has no perspective terms by construction, which the review
 * tests assert on the projection matrix itself.
 */
export function makeTopOrthographic(bounds: Bounds, aspect: number): THREE.OrthographicCamera {
  const center = bounds.min.clone().add(bounds.max).multiplyScalar(0.5);
  const size = bounds.max.clone().sub(bounds.min);
  let halfW = Math.max(size.x, 0.001) * 0.55;
  let halfH = Math.max(size.y, 0.001) * 0.55;
  if (halfW / halfH > aspect) {
    halfH = halfW / aspect;
  } else {
    halfW = halfH * aspect;
  }
  const camera = new THREE.OrthographicCamera(-halfW, halfW, halfH, -halfH, 0.01, size.z + 100);
  camera.position.set(center.x, center.y, bounds.max.z + 1);
  camera.up.set(0, 1, 0);
  camera.lookAt(center.x, center.y, bounds.min.z);
  camera.updateProjectionMatrix();
  camera.updateMatrixWorld();
  return camera;
}

/** Pose that frames one POI box in a perspective viewport ("View" button). */
export function focusOnBox(
  box: BoxDto,
  fovDegrees = 55,
): { position: THREE.Vector3; target: THREE.Vector3 } {
  const center = new THREE.Vector3(box.center[0], box.center[1], box.center[2]);
  const radius = Math.hypot(box.half_extents[0], box.half_extents[1], box.half_extents[2]);
  const distance = (radius * 1.8) / Math.tan((fovDegrees * Math.PI) / 360);
  const m = boxMatrix(box);
  const dir = new THREE.Vector3(1, -1, 0.8).normalize();
  dir.transformDirection(m); // approach along a box-relative diagonal
  const position = center.clone().add(dir.multiplyScalar(Math.max(distance, radius * 2)));
  return { position, target: center };
}

/** True when a projection matrix carries no perspective coupling at all. */
export function hasZeroPerspectiveTerms(matrix: THREE.Matrix4): boolean {
  const e = matrix.elements; // column-major
  return e[3] === 0 && e[7] === 0 && e[11] === 0 && e[15] === 1;
}
