// POI boxes as three.js objects: a translucent body plus edge lines per
// instance, carrying the poi id for hover/focus interactions.

import * as THREE from 'three';
import type { BoxDto, PoiDto } from './api.js';

export const BOX_COLOR = 0x2e9e5b;
export const HIGHLIGHT_COLOR = 0xff8c00;

export function boxMatrix(box: BoxDto): THREE.Matrix4 {
  const a = box.axes; // row-major; columns are the box axes
  const m = new THREE.Matrix4();
  m.set(
    a[0], a[1], a[2], box.center[0],
    a[3], a[4], a[5], box.center[1],
    a[6], a[7], a[8], box.center[2],
    0, 0, 0, 1,
  );
  return m;
}

export function makeBoxObject(poi: PoiDto): THREE.Group {
  if (!poi.box) throw new Error(`poi ${poi.id} has no box`);
  const [hx, hy, hz] = poi.box.half_extents;
  const geometry = new THREE.BoxGeometry(2 * hx, 2 * hy, 2 * hz);
  const body = new THREE.Mesh(
    geometry,
    new THREE.MeshBasicMaterial({ color: BOX_COLOR, transparent: true, opacity: 0.25, depthWrite: false }),
  );
  const edges = new THREE.LineSegments(
    new THREE.EdgesGeometry(geometry),
    new THREE.LineBasicMaterial({ color: BOX_COLOR }),
  );
  const group = new THREE.Group();
  group.add(body);
  group.add(edges);
  group.applyMatrix4(boxMatrix(poi.box));
  group.userData.poiId = poi.id;
  group.userData.label = poi.label;
  return group;
}

/** One object per cast POI; pending/failed instances draw nothing. */
export function buildPoiGroup(pois: PoiDto[]): THREE.Group {
  const root = new THREE.Group();
  root.name = 'pois';
  for (const poi of pois) {
    if (poi.status === 'cast' && poi.box) {
      root.add(makeBoxObject(poi));
    }
  }
  return root;
}

export function setHighlight(root: THREE.Group, poiId: string | null): void {
  for (const child of root.children) {
    const active = child.userData.poiId === poiId;
    child.traverse((node) => {
      const material = (node as THREE.Mesh).material as THREE.MeshBasicMaterial | THREE.LineBasicMaterial | undefined;
      if (material && 'color' in material) {
        material.color.setHex(active ? HIGHLIGHT_COLOR : BOX_COLOR);
      }
    });
  }
}

export function findBox(root: THREE.Group, poiId: string): THREE.Object3D | null {
  return root.children.find((c) => c.userData.poiId === poiId) ?? null;
}
