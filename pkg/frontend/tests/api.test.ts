// The client against a stubbed service: request shapes, error mapping, and
// the data flows behind the facility hover/View interactions.

import { describe, expect, it } from 'vitest';
import { ApiClient, ApiError, type PoiDto } from '../src/api.js';
import { buildPoiGroup, findBox, setHighlight } from '../src/boxes.js';
import { focusOnBox } from '../src/camera.js';

type Handler = (url: string, init?: RequestInit) => { status: number; body: unknown };

function stubClient(handler: Handler): { client: ApiClient; calls: { url: string; init?: RequestInit }[] } {
  const calls: { url: string; init?: RequestInit }[] = [];
  const fetchFn = async (url: string, init?: RequestInit): Promise<Response> => {
    calls.push({ url, init });
    const { status, body } = handler(url, init);
    return new Response(JSON.stringify(body), {
      status,
      headers: { 'Content-Type': 'application/json' },
    });
  };
  return { client: new ApiClient('', fetchFn), calls };
}

const castPoi: PoiDto = {
  id: 'poi-1',
  label: 'door',
  description: '',
  frame_ids: ['f0'],
  box: {
    center: [1, 2, 0.5],
    axes: [1, 0, 0, 0, 1, 0, 0, 0, 1],
    half_extents: [0.5, 0.4, 1.0],
  },
  support_count: 40,
  status: 'cast',
  failure_reason: null,
  cluster_sizes: [40],
};

const failedPoi: PoiDto = { ...castPoi, id: 'poi-2', box: null, status: 'failed', failure_reason: 'no_contact' };

describe('api client', () => {
  it('sends prompts with explicit polarity', async () => {
    const { client, calls } = stubClient(() => ({
      status: 200,
      body: { id: 's1', prompts: [], mask_rle: null, width: null, height: null },
    }));
    await client.addPrompt('s1', 12, 34, 'negative');
    expect(calls[0].url).toBe('/sessions/s1/prompts');
    expect(JSON.parse(String(calls[0].init?.body))).toEqual({ u: 12, v: 34, polarity: 'negative' });
  });

  it('maps error statuses to ApiError with the service detail', async () => {
    const { client } = stubClient(() => ({ status: 409, body: { detail: 'session mask is empty' } }));
    await expect(client.confirmSession('s1')).rejects.toThrowError(ApiError);
    await expect(client.confirmSession('s1')).rejects.toThrow(/mask is empty/);
  });

  it('fetches pois for the facility list', async () => {
    const { client } = stubClient((url) => {
      expect(url).toBe('/projects/p1/pois');
      return { status: 200, body: [castPoi, failedPoi] };
    });
    const pois = await client.listPois('p1');
    expect(pois).toHaveLength(2);
    expect(pois[0].status).toBe('cast');
  });
});

describe('facility hover and View behaviors', () => {
  it('hover highlights exactly the hovered box', () => {
    const group = buildPoiGroup([castPoi, { ...castPoi, id: 'poi-3' }]);
    setHighlight(group, 'poi-1');
    const box1 = findBox(group, 'poi-1')!;
    const box3 = findBox(group, 'poi-3')!;
    const colorOf = (obj: typeof box1) => {
      let hex = 0;
      obj.traverse((node) => {
        const material = (node as { material?: { color?: { getHex(): number } } }).material;
        if (material?.color) hex = material.color.getHex();
      });
      return hex;
    };
    expect(colorOf(box1)).toBe(0xff8c00);
    expect(colorOf(box3)).toBe(0x2e9e5b);
    setHighlight(group, null); // mouse-out restores the base color
    expect(colorOf(box1)).toBe(0x2e9e5b);
  });

  it('View focuses the camera pose on the box center', () => {
    const { position, target } = focusOnBox(castPoi.box!);
    expect(target.toArray()).toEqual([1, 2, 0.5]);
    const distance = position.distanceTo(target);
    const radius = Math.hypot(0.5, 0.4, 1.0);
    expect(distance).toBeGreaterThan(radius); // outside the box
    expect(distance).toBeLessThan(radius * 8); // but framing it, not lost in space
  });
});
