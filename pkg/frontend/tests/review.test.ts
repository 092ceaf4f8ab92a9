// S2: the review scene loads the fixture project's mesh and draws exactly
// one box object per cast POI.

import { readFileSync } from 'node:fs';
import { dirname, join } from 'node:path';
import { fileURLToPath } from 'node:url';
import * as THREE from 'three';
import { describe, expect, it } from 'vitest';
import type { PoiDto } from '../src/api.js';
import { buildPoiGroup } from '../src/boxes.js';
import { meshBounds } from '../src/camera.js';
import { parseProjectMesh } from '../src/meshload.js';

const here = dirname(fileURLToPath(import.meta.url));

function fixtureMesh(): THREE.Mesh {
  const bytes = readFileSync(join(here, 'fixtures', 'mesh.ply'));
  return parseProjectMesh(bytes.buffer.slice(bytes.byteOffset, bytes.byteOffset + bytes.byteLength));
}

function poi(id: string, status: PoiDto['status'], withBox = true): PoiDto {
  return {
    id,
    label: 'box',
    description: '',
    frame_ids: [],
    box: withBox
      ? { center: [7.5, 4, 0.5], axes: [1, 0, 0, 0, 1, 0, 0, 0, 1], half_extents: [0.5, 0.5, 0.5] }
      : null,
    support_count: withBox ? 100 : 0,
    status,
    failure_reason: status === 'failed' ? 'no_contact' : null,
    cluster_sizes: [],
  };
}

describe('review scene', () => {
  it('parses the fixture project mesh (binary PLY from the service)', () => {
    const mesh = fixtureMesh();
    const position = mesh.geometry.getAttribute('position');
    expect(position.count).toBeGreaterThan(100);
    const bounds = meshBounds(mesh);
    // the standard fixture room is 10 x 8 x 3 scene units
    expect(bounds.max.x - bounds.min.x).toBeCloseTo(10, 3);
    expect(bounds.max.y - bounds.min.y).toBeCloseTo(8, 3);
    expect(bounds.max.z - bounds.min.z).toBeCloseTo(3, 3);
  });

  it('renders one box object per cast POI and none for failures', () => {
    const group = buildPoiGroup([
      poi('a', 'cast'),
      poi('b', 'cast'),
      poi('c', 'failed', false),
      poi('d', 'pending', false),
    ]);
    expect(group.children).toHaveLength(2);
    const ids = group.children.map((c) => c.userData.poiId).sort();
    expect(ids).toEqual(['a', 'b']);
  });

  it('positions the box at the POI center with the right extents', () => {
    const group = buildPoiGroup([poi('a', 'cast')]);
    const object = group.children[0];
    const box = new THREE.Box3().setFromObject(object);
    expect(box.min.toArray().map((v) => Math.round(v * 1e6) / 1e6)).toEqual([7, 3.5, 0]);
    expect(box.max.toArray().map((v) => Math.round(v * 1e6) / 1e6)).toEqual([8, 4.5, 1]);
  });
});
