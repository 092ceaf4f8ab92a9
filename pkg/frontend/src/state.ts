// Annotation view state. Nothing here persists: on reload everything is
// reconstructed from the API, only the active project id rides in the URL.

import type { PromptDto } from './api.js';

export type CameraMode = 'orbit' | 'birdView' | 'topOrthographic';

export interface MaskState {
  counts: number[];
  width: number;
  height: number;
}

export interface ViewState {
  activeProject: string | null;
  activeFrame: string | null;
  activeSession: string | null;
  draftPrompts: PromptDto[];
  maskOverlay: MaskState | null;
  selectedPoi: string | null;
  cameraMode: CameraMode;
}

export function initialState(): ViewState {
  return {
    activeProject: null,
    activeFrame: null,
    activeSession: null,
    draftPrompts: [],
    maskOverlay: null,
    selectedPoi: null,
    cameraMode: 'orbit',
  };
}

/** True when switching away would silently lose un-confirmed work. */
export function hasUnsavedDraft(state: ViewState): boolean {
  return state.activeSession !== null && state.draftPrompts.length > 0;
}

/** Frame switches always drop the draft; callers confirm with the user first. */
export function switchFrame(state: ViewState, frameId: string): ViewState {
  return {
    ...state,
    activeFrame: frameId,
    activeSession: null,
    draftPrompts: [],
    maskOverlay: null,
  };
}

export function startSession(state: ViewState, sessionId: string, frameId: string): ViewState {
  return {
    ...state,
    activeFrame: frameId,
    activeSession: sessionId,
    draftPrompts: [],
    maskOverlay: null,
  };
}

export function applyPromptResult(
  state: ViewState,
  prompts: PromptDto[],
  mask: MaskState | null,
): ViewState {
  return { ...state, draftPrompts: [...prompts], maskOverlay: mask };
}

/** Clear Points: local optimistic reset; the server is told separately. */
export function clearPrompts(state: ViewState): ViewState {
  return { ...state, draftPrompts: [], maskOverlay: null };
}

export function selectPoi(state: ViewState, poiId: string | null): ViewState {
  return { ...state, selectedPoi: poiId };
}

export function setCameraMode(state: ViewState, mode: CameraMode): ViewState {
  return { ...state, cameraMode: mode };
}
