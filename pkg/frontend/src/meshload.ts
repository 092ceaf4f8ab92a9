// Project mesh loading for the review viewport.

import * as THREE from 'three';
import { PLYLoader } from 'three/examples/jsm/loaders/PLYLoader.js';

const loader = new PLYLoader();

export function parseProjectMesh(buffer: ArrayBuffer): THREE.Mesh {
  const geometry = loader.parse(buffer);
  geometry.computeVertexNormals();
  const material = new THREE.MeshStandardMaterial({
    color: 0xb8bcc2,
    flatShading: true,
    side: THREE.DoubleSide,
  });
  const mesh = new THREE.Mesh(geometry, material);
  mesh.name = 'project-mesh';
  return mesh;
}

export async function fetchProjectMesh(url: string): Promise<THREE.Mesh> {
  const resp = await fetch(url);
  if (!resp.ok) {
    throw new Error(`mesh fetch failed: ${resp.status}`);
  }
  return parseProjectMesh(await resp.arrayBuffer());
}
