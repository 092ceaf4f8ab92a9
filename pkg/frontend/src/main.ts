// Entry point: a tiny hash router between the annotation and review
// screens. Only the active project id lives in the URL; everything else is
// reconstructed from the service on load.

import { AnnotateScreen } from './annotate.js';
import { ApiClient } from './api.js';
import { ReviewScreen } from './review.js';

const API_BASE = (window as unknown as { POICAST_API?: string }).POICAST_API ?? '';

function parseHash(): { screen: 'annotate' | 'review'; project: string | null } {
  const hash = window.location.hash.replace(/^#\/?/, '');
  const [screen, project] = hash.split('/');
  return {
    screen: screen === 'annotate' ? 'annotate' : 'review',
    project: project || null,
  };
}

let active: { stop?: () => void } | null = null;

async function route(): Promise<void> {
  active?.stop?.();
  const api = new ApiClient(API_BASE);
  const root = document.getElementById('app')!;
  const { screen, project } = parseHash();
  const nav = document.getElementById('nav')!;
  nav.innerHTML = `
    <a href="#/review" class="${screen === 'review' ? 'active' : ''}">Review</a>
    <a href="#/annotate${project ? '/' + project : ''}" class="${screen === 'annotate' ? 'active' : ''}">Annotate</a>
  `;
  if (screen === 'annotate') {
    let projectId = project;
    if (!projectId) {
      const projects = await api.listProjects();
      projectId = projects[0]?.id ?? null;
    }
    if (!projectId) {
      root.textContent = 'No projects served.';
      return;
    }
    const annotate = new AnnotateScreen(api, root, projectId);
    active = annotate;
    await annotate.start();
  } else {
    const review = new ReviewScreen(api, root);
    active = review;
    await review.start();
  }
}

window.addEventListener('hashchange', () => void route());
void route();
