// Review screen: space list, 3D viewport with the project mesh and POI
// boxes, facility list with hover highlight and View-to-focus, bird view
// reset, and the top-down orthographic floor plan.

import * as THREE from 'three';
import { OrbitControls } from 'three/examples/jsm/controls/OrbitControls.js';
import { ApiClient } from './api.js';
import type { PoiDto, ProjectSummary } from './api.js';
import { buildPoiGroup, findBox, setHighlight } from './boxes.js';
import { birdView, focusOnBox, makeOrbitCamera, makeTopOrthographic, meshBounds } from './camera.js';
import { fetchProjectMesh } from './meshload.js';
import * as state from './state.js';

export class ReviewScreen {
  private view = state.initialState();
  private scene = new THREE.Scene();
  private renderer: THREE.WebGLRenderer;
  private camera: THREE.PerspectiveCamera;
  private orthoCamera: THREE.OrthographicCamera | null = null;
  private controls: OrbitControls;
  private poiGroup: THREE.Group = new THREE.Group();
  private meshObject: THREE.Object3D | null = null;
  private pois: PoiDto[] = [];
  private running = true;

  constructor(
    private api: ApiClient,
    private root: HTMLElement,
  ) {
    this.root.innerHTML = `
      <div class="review-layout">
        <aside class="panel spaces-panel"><h3>Spaces</h3><ul id="spaces"></ul></aside>
        <main class="viewport-wrap">
          <canvas id="viewport"></canvas>
          <div class="viewport-buttons">
            <button id="bird-view">Bird view</button>
            <button id="plan-view">Floor plan</button>
          </div>
          <div id="viewport-status"></div>
        </main>
        <aside class="panel facilities-panel"><h3>Facilities</h3><ul id="facilities"></ul></aside>
      </div>
    `;
    const canvas = this.root.querySelector('#viewport') as HTMLCanvasElement;
    this.renderer = new THREE.WebGLRenderer({ canvas, antialias: true });
    this.camera = makeOrbitCamera(1.6);
    this.controls = new OrbitControls(this.camera, canvas);
    this.scene.background = new THREE.Color(0x10131a);
    this.scene.add(new THREE.AmbientLight(0xffffff, 0.7));
    const sun = new THREE.DirectionalLight(0xffffff, 1.2);
    sun.position.set(5, -8, 10);
    this.scene.add(sun);
    this.root.querySelector('#bird-view')!.addEventListener('click', () => this.goBirdView());
    this.root.querySelector('#plan-view')!.addEventListener('click', () => this.goFloorPlan());
    this.animate();
  }

  private status(text: string): void {
    (this.root.querySelector('#viewport-status') as HTMLElement).textContent = text;
  }

  async start(): Promise<void> {
    const projects = await this.api.listProjects();
    const list = this.root.querySelector('#spaces') as HTMLUListElement;
    list.innerHTML = '';
    for (const project of projects) {
      const item = document.createElement('li');
      item.textContent = `${project.name} (${project.poi_count} facilities)`;
      item.addEventListener('click', () => void this.openProject(project));
      list.appendChild(item);
    }
    if (projects.length) await this.openProject(projects[0]);
  }

  async openProject(project: ProjectSummary): Promise<void> {
    this.view = { ...this.view, activeProject: project.id, selectedPoi: null, cameraMode: 'orbit' };
    if (this.meshObject) this.scene.remove(this.meshObject);
    this.scene.remove(this.poiGroup);
    this.meshObject = null;
    try {
      this.meshObject = await fetchProjectMesh(this.api.fileUrl(project.mesh_url));
      this.scene.add(this.meshObject);
      this.status('');
    } catch (err) {
      // the facility list must stay usable even when the mesh fails
      this.status(`mesh failed to load: ${String(err)}`);
    }
    this.pois = await this.api.listPois(project.id);
    this.poiGroup = buildPoiGroup(this.pois);
    this.scene.add(this.poiGroup);
    this.renderFacilityList();
    this.goBirdView();
  }

  private renderFacilityList(): void {
    const list = this.root.querySelector('#facilities') as HTMLUListElement;
    list.innerHTML = '';
    for (const poi of this.pois) {
      const item = document.createElement('li');
      const name = document.createElement('span');
      name.textContent = `${poi.label}${poi.status !== 'cast' ? ` (${poi.status})` : ''}`;
      item.appendChild(name);
      if (poi.status === 'cast' && poi.box) {
        const view = document.createElement('button');
        view.textContent = 'View';
        view.addEventListener('click', () => this.focusPoi(poi));
        item.appendChild(view);
      }
      item.addEventListener('mouseenter', () => this.hoverPoi(poi.id));
      item.addEventListener('mouseleave', () => this.hoverPoi(null));
      list.appendChild(item);
    }
  }

  hoverPoi(poiId: string | null): void {
    this.view = state.selectPoi(this.view, poiId);
    setHighlight(this.poiGroup, poiId);
  }

  focusPoi(poi: PoiDto): void {
    if (!poi.box) return;
    this.view = { ...state.selectPoi(this.view, poi.id), cameraMode: 'orbit' };
    setHighlight(this.poiGroup, poi.id);
    const { position, target } = focusOnBox(poi.box, this.camera.fov);
    this.camera.position.copy(position);
    this.controls.target.copy(target);
    this.controls.update();
    const obj = findBox(this.poiGroup, poi.id);
    if (obj) this.camera.lookAt(obj.position);
  }

  goBirdView(): void {
    if (!this.meshObject) return;
    this.view = state.setCameraMode(this.view, 'birdView');
    const { position, target } = birdView(meshBounds(this.meshObject));
    this.camera.up.set(0, 0, 1);
    this.camera.position.copy(position);
    this.controls.target.copy(target);
    this.controls.update();
  }

  goFloorPlan(): void {
    if (!this.meshObject) return;
    this.view = state.setCameraMode(this.view, 'topOrthographic');
    const canvas = this.renderer.domElement;
    const aspect = canvas.clientWidth / Math.max(canvas.clientHeight, 1);
    this.orthoCamera = makeTopOrthographic(meshBounds(this.meshObject), aspect || 1.6);
  }

  private activeCamera(): THREE.Camera {
    return this.view.cameraMode === 'topOrthographic' && this.orthoCamera
      ? this.orthoCamera
      : this.camera;
  }

  stop(): void {
    this.running = false;
    this.renderer.dispose();
  }

  private animate = (): void => {
    if (!this.running) return;
    requestAnimationFrame(this.animate);
    if (this.view.cameraMode !== 'topOrthographic') this.controls.update();
    this.renderer.render(this.scene, this.activeCamera());
  };
}
