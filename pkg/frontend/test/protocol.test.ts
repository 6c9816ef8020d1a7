import { describe, expect, it } from 'vitest';
import { channelCommand, graspCommand, parseServerMessage, poseCommand,
         viaPointCommand } from '../src/protocol.js';

const snapshot = {
  type: 'snapshot', seq: 4, t: 1.25,
  q: [0.1, -0.2, 0.3],
  ee: { position: [0.4, 0.1, 0], rotvec: [0, 0, 0.2] },
  x_d: { position: [0.42, 0.1, 0], rotvec: [0, 0, 0.2] },
  wrench_fb: [1, 0, 0, 0, 0, 0],
  phase: [0, 1, 0, 0, 0, 0],
  master_offset: [0, 0, 0, 0, 0, 0],
  grasp: true,
  channel: { delay: 0.25, rate: 20, drop: 0 },
  energy: { spring: 0.1, kinetic: 0.02, injected: 0.3 },
  master_age: 0.1,
};

const hello = {
  type: 'hello', version: '0.1.0',
  link_lengths: [0.3, 0.3, 0.2], base: [0, 0, 0],
  workspace_center: [0.45, 0.15, 0],
  f_max: [15, 15, 15, 2, 2, 2], x_b: [0.05, 0.05, 0.05, 0.0873, 0.0873, 0.0873],
  snapshot_rate: 60, dt: 0.001, walls: [{ x: 0.55, axis: 'x', material: 'wood' }],
};

describe('parseServerMessage', () => {
  it('accepts a valid snapshot', () => {
    const msg = parseServerMessage(JSON.stringify(snapshot));
    expect(msg?.type).toBe('snapshot');
    if (msg?.type === 'snapshot') {
      expect(msg.seq).toBe(4);
      expect(msg.grasp).toBe(true);
    }
  });

  it('accepts a valid hello', () => {
    const msg = parseServerMessage(JSON.stringify(hello));
    expect(msg?.type).toBe('hello');
  });

  it('accepts an error message', () => {
    const msg = parseServerMessage(JSON.stringify(
      { type: 'error', code: 'session-busy', message: 'taken' }));
    expect(msg?.type).toBe('error');
  });

  it('rejects malformed json', () => {
    expect(parseServerMessage('{oops')).toBeNull();
  });

  it('rejects wrong field shapes', () => {
    const bad = { ...snapshot, wrench_fb: [1, 2, 3] };
    expect(parseServerMessage(JSON.stringify(bad))).toBeNull();
    const bad2 = { ...snapshot, phase: 'divergence' };
    expect(parseServerMessage(JSON.stringify(bad2))).toBeNull();
  });

  it('rejects unknown types', () => {
    expect(parseServerMessage(JSON.stringify({ type: 'telemetry' }))).toBeNull();
  });
});

describe('command builders', () => {
  it('pose command carries the offset and timestamp', () => {
    const raw = JSON.parse(poseCommand([0.01, 0, 0, 0, 0, 0], 2.5));
    expect(raw.type).toBe('pose');
    expect(raw.payload.offset[0]).toBeCloseTo(0.01);
    expect(raw.client_t).toBe(2.5);
  });

  it('grasp/channel/viapoint commands are well formed', () => {
    expect(JSON.parse(graspCommand(true, 0)).payload.engaged).toBe(true);
    const ch = JSON.parse(channelCommand({ delay: 0.5, rate: 20, drop: 0.1 }, 0));
    expect(ch.payload).toEqual({ delay: 0.5, rate: 20, drop: 0.1 });
    const via = JSON.parse(viaPointCommand([0.4, 0.2, 0], 1.5, 0));
    expect(via.payload.position).toEqual([0.4, 0.2, 0]);
    expect(via.payload.travel_time).toBe(1.5);
  });
});
