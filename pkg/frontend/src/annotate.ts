// Annotation screen: frames panel, click-to-mask canvas, type panel with
// preset and custom labels, results panel with job progress, summary view.

import { ApiClient, ApiError } from './api.js';
import type { FrameInfo, JobInfo, SessionInfo } from './api.js';
import { clickPolarity, overlayPixels } from './overlay.js';
import { decodeRle } from './rle.js';
import * as state from './state.js';

export const PRESET_LABELS = ['door', 'elevator', 'ramp', 'stairs'];
const POLL_INTERVAL_MS = 1500;

export class AnnotateScreen {
  private view = state.initialState();
  private frames: FrameInfo[] = [];
  private mask: Uint8Array | null = null;
  private poll: number | null = null;

  private canvas: HTMLCanvasElement;
  private ctx: CanvasRenderingContext2D;
  private frameImage = new Image();

  constructor(
    private api: ApiClient,
    private root: HTMLElement,
    private projectId: string,
  ) {
    this.root.innerHTML = `
      <div class="annotate-layout">
        <aside class="panel results-panel"><h3>Annotations</h3><ul id="results"></ul>
          <div id="summary" class="summary"></div>
          <button id="finish">Finish Annotation</button></aside>
        <main class="canvas-wrap"><canvas id="canvas"></canvas></main>
        <aside class="panel tools-panel">
          <h3>Type</h3>
          <div id="labels"></div>
          <input id="custom-label" placeholder="custom type" />
          <input id="description" placeholder="description (optional)" />
          <h3>Actions</h3>
          <button id="new-instance">New Instance</button>
          <button id="clear-points">Clear Points</button>
          <button id="remove-instance">Remove Instance</button>
          <button id="confirm">Confirm Annotation</button>
          <div id="status" class="status"></div>
        </aside>
      </div>
      <footer class="panel frames-panel"><ul id="frames"></ul></footer>
    `;
    this.canvas = this.root.querySelector('#canvas') as HTMLCanvasElement;
    this.ctx = this.canvas.getContext('2d')!;
    this.bind();
  }

  private el<T extends HTMLElement>(selector: string): T {
    return this.root.querySelector(selector) as T;
  }

  private status(text: string): void {
    this.el('#status').textContent = text;
  }

  async start(): Promise<void> {
    this.frames = await this.api.listFrames(this.projectId);
    const list = this.el<HTMLUListElement>('#frames');
    list.innerHTML = '';
    for (const frame of this.frames) {
      const item = document.createElement('li');
      const img = document.createElement('img');
      img.loading = 'lazy';
      img.src = this.api.fileUrl(frame.image_url);
      img.title = `${frame.frame_id} @ ${frame.timestamp_sec.toFixed(1)}s`;
      item.appendChild(img);
      const marker = document.createElement('div');
      marker.className = 'thumb-box';
      marker.style.display = 'none';
      item.appendChild(marker);
      item.addEventListener('click', () => void this.selectFrame(frame.frame_id));
      item.dataset.frameId = frame.frame_id;
      list.appendChild(item);
    }
    const labels = this.el('#labels');
    labels.innerHTML = '';
    for (const preset of PRESET_LABELS) {
      const b = document.createElement('button');
      b.textContent = preset;
      b.className = 'label-btn';
      b.addEventListener('click', () => {
        this.el<HTMLInputElement>('#custom-label').value = preset;
      });
      labels.appendChild(b);
    }
    if (this.frames.length) await this.selectFrame(this.frames[0].frame_id);
    await this.refreshResults();
    this.poll = window.setInterval(() => void this.refreshResults(), POLL_INTERVAL_MS);
  }

  stop(): void {
    if (this.poll !== null) window.clearInterval(this.poll);
  }

  private async selectFrame(frameId: string): Promise<void> {
    if (state.hasUnsavedDraft(this.view)) {
      const discard = window.confirm('Discard the unconfirmed annotation on this frame?');
      if (!discard) return;
    }
    this.view = state.switchFrame(this.view, frameId);
    this.mask = null;
    const frame = this.frames.find((f) => f.frame_id === frameId)!;
    await new Promise<void>((resolve, reject) => {
      this.frameImage.onload = () => resolve();
      this.frameImage.onerror = () => reject(new Error('frame image failed to load'));
      this.frameImage.src = this.api.fileUrl(frame.image_url);
    });
    this.canvas.width = frame.width;
    this.canvas.height = frame.height;
    this.redraw();
    for (const item of this.el<HTMLUListElement>('#frames').children) {
      (item as HTMLElement).classList.toggle('active', (item as HTMLElement).dataset.frameId === frameId);
    }
  }

  private redraw(): void {
    this.ctx.drawImage(this.frameImage, 0, 0);
    const overlay = this.view.maskOverlay;
    if (overlay) {
      const pixels = overlayPixels(overlay.counts, overlay.width, overlay.height);
      const image = new ImageData(pixels, overlay.width, overlay.height);
      void createImageBitmap(image).then((bitmap) => {
        this.ctx.drawImage(bitmap, 0, 0);
        this.drawPrompts();
      });
    } else {
      this.drawPrompts();
    }
  }

  private drawPrompts(): void {
    for (const prompt of this.view.draftPrompts) {
      this.ctx.beginPath();
      this.ctx.arc(prompt.u, prompt.v, 4, 0, Math.PI * 2);
      this.ctx.fillStyle = prompt.polarity === 'positive' ? '#19c37d' : '#e53c3c';
      this.ctx.fill();
      this.ctx.strokeStyle = '#ffffff';
      this.ctx.stroke();
    }
  }

  private bind(): void {
    this.canvas.addEventListener('click', (ev) => void this.onCanvasClick(ev));
    this.el('#new-instance').addEventListener('click', () => void this.newInstance());
    this.el('#clear-points').addEventListener('click', () => void this.clearPoints());
    this.el('#remove-instance').addEventListener('click', () => void this.removeInstance());
    this.el('#confirm').addEventListener('click', () => void this.confirm());
    this.el('#finish').addEventListener('click', () => void this.showSummary());
  }

  private canvasPoint(ev: MouseEvent): { u: number; v: number } {
    const rect = this.canvas.getBoundingClientRect();
    const u = ((ev.clientX - rect.left) / rect.width) * this.canvas.width;
    const v = ((ev.clientY - rect.top) / rect.height) * this.canvas.height;
    return { u, v };
  }

  private async newInstance(): Promise<void> {
    const label = this.el<HTMLInputElement>('#custom-label').value.trim();
    if (!label) {
      this.status('pick or type an object type first');
      return;
    }
    const frameId = this.view.activeFrame;
    if (!frameId) return;
    const description = this.el<HTMLInputElement>('#description').value.trim();
    const session = await this.api.createSession(this.projectId, frameId, label, description);
    this.view = state.startSession(this.view, session.id, frameId);
    this.status(`annotating "${label}" — click the object`);
    this.redraw();
  }

  private async onCanvasClick(ev: MouseEvent): Promise<void> {
    if (!this.view.activeSession) {
      this.status('create an instance first (pick a type, then New Instance)');
      return;
    }
    const { u, v } = this.canvasPoint(ev);
    const polarity = clickPolarity(this.mask, this.canvas.width, u, v);
    try {
      const session = await this.api.addPrompt(this.view.activeSession, u, v, polarity);
      this.applySession(session);
    } catch (err) {
      this.status(err instanceof ApiError ? `segmentation failed: ${err.message}` : String(err));
    }
  }

  private applySession(session: SessionInfo): void {
    const mask =
      session.mask_rle && session.width && session.height
        ? { counts: session.mask_rle, width: session.width, height: session.height }
        : null;
    this.mask = mask ? decodeRle(mask.counts, mask.width, mask.height) : null;
    this.view = state.applyPromptResult(this.view, session.prompts, mask);
    this.redraw();
  }

  private async clearPoints(): Promise<void> {
    const sessionId = this.view.activeSession;
    if (!sessionId) return;
    this.view = state.clearPrompts(this.view); // optimistic: clearing is local-safe
    this.mask = null;
    this.redraw();
    await this.api.clearSession(sessionId);
  }

  private async removeInstance(): Promise<void> {
    if (!this.view.activeSession) return;
    await this.api.deleteSession(this.view.activeSession);
    this.view = state.clearPrompts({ ...this.view, activeSession: null });
    this.mask = null;
    this.redraw();
    await this.refreshResults();
  }

  private async confirm(): Promise<void> {
    if (!this.view.activeSession) return;
    try {
      const { job_id } = await this.api.confirmSession(this.view.activeSession);
      this.status(`processing (job ${job_id})`);
      this.view = { ...this.view, activeSession: null, draftPrompts: [], maskOverlay: null };
      this.mask = null;
      this.redraw();
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        this.status('nothing to confirm: the mask is empty');
      } else {
        this.status(String(err));
      }
    }
    await this.refreshResults();
  }

  private async refreshResults(): Promise<void> {
    const [sessions, jobs, pois] = await Promise.all([
      this.api.listSessions(this.projectId),
      this.api.listJobs(this.projectId),
      this.api.listPois(this.projectId),
    ]);
    const byId = new Map(pois.map((p) => [p.id, p]));
    const jobsBySession = new Map<string, JobInfo[]>();
    for (const job of jobs) {
      const list = jobsBySession.get(job.session_id) ?? [];
      list.push(job);
      jobsBySession.set(job.session_id, list);
    }
    const list = this.el<HTMLUListElement>('#results');
    list.innerHTML = '';
    for (const session of sessions) {
      const item = document.createElement('li');
      const poi = byId.get(session.id);
      const jobList = jobsBySession.get(session.id) ?? [];
      const running = jobList.find((j) => j.state === 'queued' || j.state === 'running');
      let detail: string;
      if (poi && poi.status === 'cast') {
        detail = `localized (${poi.support_count} pts)`;
      } else if (poi && poi.status === 'failed') {
        detail = `failed: ${poi.failure_reason}`;
      } else if (running) {
        detail = `${running.kind} ${running.state}…`;
      } else {
        detail = session.state;
      }
      item.textContent = `${session.label} — ${detail}`;
      item.title = 'show propagated masks on the frame strip';
      item.addEventListener('click', () => void this.showPropagation(session.id));
      list.appendChild(item);
    }
    this.renderSummary(sessions, jobs);
  }

  /** Propagated masks drawn as 2D boxes over the frame thumbnails. */
  private async showPropagation(sessionId: string): Promise<void> {
    const session = await this.api.getSession(sessionId);
    const boxes = session.frame_boxes ?? {};
    for (const item of this.el<HTMLUListElement>('#frames').children) {
      const el = item as HTMLElement;
      const marker = el.querySelector('.thumb-box') as HTMLElement;
      const img = el.querySelector('img') as HTMLImageElement;
      const frame = this.frames.find((f) => f.frame_id === el.dataset.frameId);
      const box = frame ? boxes[frame.frame_id] : undefined;
      if (!frame || !box) {
        marker.style.display = 'none';
        continue;
      }
      const sx = img.clientWidth / frame.width;
      const sy = img.clientHeight / frame.height;
      marker.style.display = 'block';
      marker.style.left = `${box.u_min * sx}px`;
      marker.style.top = `${box.v_min * sy}px`;
      marker.style.width = `${(box.u_max - box.u_min) * sx}px`;
      marker.style.height = `${(box.v_max - box.v_min) * sy}px`;
    }
  }

  private renderSummary(sessions: SessionInfo[], jobs: JobInfo[]): void {
    const mean = (kind: string): number | null => {
      const done = jobs.filter((j) => j.kind === kind && j.duration_sec !== null);
      if (!done.length) return null;
      return done.reduce((a, j) => a + (j.duration_sec ?? 0), 0) / done.length;
    };
    const seg = mean('propagate');
    const cast = mean('localize');
    const fmt = (v: number | null) => (v === null ? '–' : `${v.toFixed(2)}s`);
    this.el('#summary').innerHTML =
      `<div>Total annotations: <b>${sessions.length}</b></div>` +
      `<div>Avg segmentation time: <b>${fmt(seg)}</b></div>` +
      `<div>Avg casting time: <b>${fmt(cast)}</b></div>`;
  }

  private async showSummary(): Promise<void> {
    await this.refreshResults();
    this.el('#summary').classList.add('highlight');
  }
}
