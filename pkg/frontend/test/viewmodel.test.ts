import { describe, expect, it } from 'vitest';
import { Snapshot } from '../src/protocol.js';
import { applyServerMessage, COMMAND_INTERVAL_MS, DragCoalescer,
         initialViewModel, isStale, OfflineBuffer, recenterOffset,
         STALE_AFTER_MS } from '../src/viewmodel.js';

function snap(seq: number): Snapshot {
  return {
    type: 'snapshot', seq, t: seq * 0.016,
    q: [0, 0, 0],
    ee: { position: [0.4, 0.1, 0], rotvec: [0, 0, 0] },
    x_d: { position: [0.4, 0.1, 0], rotvec: [0, 0, 0] },
    wrench_fb: [0, 0, 0, 0, 0, 0],
    phase: [0, 0, 0, 0, 0, 0],
    master_offset: [0, 0, 0, 0, 0, 0],
    grasp: false,
    channel: { delay: 0, rate: 1000, drop: 0 },
    energy: { spring: 0, kinetic: 0, injected: 0 },
    master_age: 0,
  };
}

describe('view model', () => {
  it('tracks only the newest snapshot', () => {
    const vm = initialViewModel();
    applyServerMessage(vm, snap(5), 100);
    applyServerMessage(vm, snap(3), 120); // late reordered frame: ignored
    expect(vm.snapshot?.seq).toBe(5);
    applyServerMessage(vm, snap(6), 140);
    expect(vm.snapshot?.seq).toBe(6);
    expect(vm.lastSnapshotAtMs).toBe(140);
  });

  it('echoes grasp and channel state from the snapshot', () => {
    const vm = initialViewModel();
    const s = snap(1);
    s.grasp = true;
    s.channel = { delay: 0.5, rate: 20, drop: 0.1 };
    applyServerMessage(vm, s, 0);
    expect(vm.grasp).toBe(true);
    expect(vm.sliders.rate).toBe(20);
  });

  it('flags staleness after the timeout', () => {
    const vm = initialViewModel();
    applyServerMessage(vm, snap(1), 1000);
    expect(isStale(vm, 1000 + STALE_AFTER_MS - 1)).toBe(false);
    expect(isStale(vm, 1000 + STALE_AFTER_MS + 1)).toBe(true);
  });

  it('stores protocol errors', () => {
    const vm = initialViewModel();
    applyServerMessage(vm, { type: 'error', code: 'x', message: 'y' }, 0);
    expect(vm.lastError).toContain('x');
  });
});

describe('drag coalescing', () => {
  it('emits at most one command per interval, keeping the latest', () => {
    const c = new DragCoalescer();
    c.update([1, 0, 0, 0, 0, 0]);
    expect(c.flush(0)).toEqual([1, 0, 0, 0, 0, 0]);
    c.update([2, 0, 0, 0, 0, 0]);
    c.update([3, 0, 0, 0, 0, 0]);
    expect(c.flush(1)).toBeNull(); // inside the rate limit window
    expect(c.flush(COMMAND_INTERVAL_MS + 1)).toEqual([3, 0, 0, 0, 0, 0]);
    expect(c.flush(2 * COMMAND_INTERVAL_MS + 2)).toBeNull(); // nothing pending
  });

  it('sustains no more than 60 emissions per simulated second', () => {
    const c = new DragCoalescer();
    let sent = 0;
    for (let ms = 0; ms < 1000; ms += 2) {
      c.update([ms, 0, 0, 0, 0, 0]);
      if (c.flush(ms) !== null) sent++;
    }
    expect(sent).toBeLessThanOrEqual(61);
    expect(sent).toBeGreaterThanOrEqual(55);
  });
});

describe('spring return', () => {
  it('decays exponentially and reports settled', () => {
    const off = [0.08, -0.04, 0, 0, 0, 0];
    const early = recenterOffset(off, 0)!;
    expect(early[0]).toBeCloseTo(0.08);
    const mid = recenterOffset(off, 80)!;
    expect(mid[0]).toBeCloseTo(0.08 / Math.E, 5);
    expect(recenterOffset(off, 3000)).toBeNull();
  });
});

describe('offline buffer', () => {
  it('drops entries older than the window', () => {
    const b = new OfflineBuffer();
    b.push('a', 0);
    b.push('b', 400);
    expect(b.drain(600)).toEqual(['b']); // 'a' aged out at 500 ms
  });

  it('drains in order and empties', () => {
    const b = new OfflineBuffer();
    b.push('a', 0);
    b.push('b', 10);
    expect(b.drain(20)).toEqual(['a', 'b']);
    expect(b.size).toBe(0);
  });
});
