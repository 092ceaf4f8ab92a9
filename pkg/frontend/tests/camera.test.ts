// S2: the floor-plan camera is orthographic and locked straight down.

import * as THREE from 'three';
import { describe, expect, it } from 'vitest';
import { birdView, hasZeroPerspectiveTerms, makeOrbitCamera, makeTopOrthographic } from '../src/camera.js';

const bounds = { min: new THREE.Vector3(0, 0, 0), max: new THREE.Vector3(10, 8, 3) };

describe('top orthographic floor plan', () => {
  it('has zero perspective terms in its projection matrix', () => {
    const camera = makeTopOrthographic(bounds, 1.5);
    expect(camera).toBeInstanceOf(THREE.OrthographicCamera);
    expect(hasZeroPerspectiveTerms(camera.projectionMatrix)).toBe(true);
    // a perspective camera shows the difference
    const perspective = makeOrbitCamera(1.5);
    perspective.updateProjectionMatrix();
    expect(hasZeroPerspectiveTerms(perspective.projectionMatrix)).toBe(false);
  });

  it('looks straight down the z axis', () => {
    const camera = makeTopOrthographic(bounds, 1.5);
    const direction = new THREE.Vector3();
    camera.getWorldDirection(direction);
    expect(direction.x).toBeCloseTo(0, 9);
    expect(direction.y).toBeCloseTo(0, 9);
    expect(direction.z).toBeCloseTo(-1, 9);
  });

  it('covers the whole floor extent', () => {
    const camera = makeTopOrthographic(bounds, 10 / 8);
    expect(camera.right - camera.left).toBeGreaterThanOrEqual(10);
    expect(camera.top - camera.bottom).toBeGreaterThanOrEqual(8);
  });
});

describe('bird view reset', () => {
  it('targets the scene center from above', () => {
    const { position, target } = birdView(bounds);
    expect(target.toArray()).toEqual([5, 4, 1.5]);
    expect(position.z).toBeGreaterThan(bounds.max.z);
  });
});
