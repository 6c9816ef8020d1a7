// UI state and command shaping. Pure logic, no DOM: rendering reads this,
// pointer/socket handlers mutate it through the functions below.

import { ChannelSettings, Hello, ServerMessage, Snapshot } from './protocol.js';

export const STALE_AFTER_MS = 1000;
export const COMMAND_INTERVAL_MS = 1000 / 60; // coalesce drags to <= 60 Hz
export const OFFLINE_BUFFER_MS = 500;
export const RECENTER_TAU_MS = 80;

export interface ViewModel {
  hello: Hello | null;
  snapshot: Snapshot | null;
  lastSnapshotAtMs: number;
  connected: boolean;
  lastError: string | null;
  sliders: ChannelSettings;
  grasp: boolean;
  viaTravelTime: number;
}

export function initialViewModel(): ViewModel {
  return {
    hello: null,
    snapshot: null,
    lastSnapshotAtMs: -Infinity,
    connected: false,
    lastError: null,
    sliders: { delay: 0, rate: 1000, drop: 0 },
    grasp: false,
    viaTravelTime: 2.0,
  };
}

export function applyServerMessage(vm: ViewModel, msg: ServerMessage,
                                   nowMs: number): void {
  if (msg.type === 'hello') {
    vm.hello = msg;
  } else if (msg.type === 'snapshot') {
    // render state always tracks the newest received snapshot
    if (vm.snapshot === null || msg.seq >= vm.snapshot.seq) {
      vm.snapshot = msg;
      vm.lastSnapshotAtMs = nowMs;
      vm.grasp = msg.grasp;
      vm.sliders = msg.channel;
    }
  } else {
    vm.lastError = `${msg.code}: ${msg.message}`;
  }
}

export function isStale(vm: ViewModel, nowMs: number): boolean {
  return nowMs - vm.lastSnapshotAtMs > STALE_AFTER_MS;
}

/** Coalesces high-rate drag updates into at most one command per interval. */
export class DragCoalescer {
  private pending: number[] | null = null;
  private lastEmitMs = -Infinity;

  update(offset: number[]): void {
    this.pending = offset.slice();
  }

  /** Latest offset if the rate limiter allows sending now, else null. */
  flush(nowMs: number): number[] | null {
    if (this.pending === null) return null;
    if (nowMs - this.lastEmitMs < COMMAND_INTERVAL_MS) return null;
    this.lastEmitMs = nowMs;
    const out = this.pending;
    this.pending = null;
    return out;
  }
}

/** Exponential spring-return of the master offset after a drag release. */
export function recenterOffset(offsetAtRelease: number[], elapsedMs: number):
    number[] | null {
  const k = Math.exp(-elapsedMs / RECENTER_TAU_MS);
  const out = offsetAtRelease.map((v) => v * k);
  if (out.every((v) => Math.abs(v) < 1e-4)) return null; // settled: stop sending
  return out;
}

interface BufferedCommand {
  text: string;
  atMs: number;
}

/** Holds commands while disconnected; stale entries are dropped. */
export class OfflineBuffer {
  private items: BufferedCommand[] = [];

  push(text: string, nowMs: number): void {
    this.items.push({ text, atMs: nowMs });
    this.prune(nowMs);
  }

  prune(nowMs: number): void {
    this.items = this.items.filter((c) => nowMs - c.atMs <= OFFLINE_BUFFER_MS);
  }

  drain(nowMs: number): string[] {
    this.prune(nowMs);
    const out = this.items.map((c) => c.text);
    this.items = [];
    return out;
  }

  get dropped(): boolean {
    return this.items.length === 0;
  }

  get size(): number {
    return this.items.length;
  }
}
