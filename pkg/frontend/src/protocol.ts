// Wire types for the session protocol. The UI never simulates anything:
// snapshots in, commands out, nothing else.

export interface PoseMsg {
  position: number[];
  rotvec: number[];
}

export interface ChannelSettings {
  delay: number;
  rate: number;
  drop: number;
}

export interface Snapshot {
  type: 'snapshot';
  seq: number;
  t: number;
  q: number[];
  ee: PoseMsg;
  x_d: PoseMsg;
  wrench_fb: number[];
  phase: number[];
  master_offset: number[];
  grasp: boolean;
  channel: ChannelSettings;
  energy: { spring: number; kinetic: number; injected: number };
  master_age: number;
}

export interface Hello {
  type: 'hello';
  version: string;
  link_lengths: number[];
  base: number[];
  workspace_center: number[];
  f_max: number[];
  x_b: number[];
  snapshot_rate: number;
  dt: number;
  walls: { x: number; axis: string; material: string }[];
}

export interface ErrorMsg {
  type: 'error';
  code: string;
  message: string;
}

export type ServerMessage = Snapshot | Hello | ErrorMsg;

function isNumberArray(v: unknown, n?: number): v is number[] {
  return Array.isArray(v) && (n === undefined || v.length === n) &&
    v.every((x) => typeof x === 'number' && Number.isFinite(x));
}

function isPose(v: unknown): v is PoseMsg {
  const p = v as PoseMsg;
  return !!p && isNumberArray(p.position, 3) && isNumberArray(p.rotvec, 3);
}

export function parseServerMessage(text: string): ServerMessage | null {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch {
    return null;
  }
  const msg = raw as { type?: string };
  if (!msg || typeof msg.type !== 'string') return null;
  if (msg.type === 'error') {
    const e = raw as ErrorMsg;
    return typeof e.code === 'string' && typeof e.message === 'string' ? e : null;
  }
  if (msg.type === 'hello') {
    const h = raw as Hello;
    return isNumberArray(h.link_lengths) && isNumberArray(h.base, 3) &&
      isNumberArray(h.workspace_center, 3) &&
      isNumberArray(h.f_max, 6) && isNumberArray(h.x_b, 6) &&
      typeof h.snapshot_rate === 'number' && typeof h.dt === 'number'
      ? h : null;
  }
  if (msg.type === 'snapshot') {
    const s = raw as Snapshot;
    return typeof s.seq === 'number' && typeof s.t === 'number' &&
      isNumberArray(s.q) && isPose(s.ee) && isPose(s.x_d) &&
      isNumberArray(s.wrench_fb, 6) && isNumberArray(s.phase, 6) &&
      isNumberArray(s.master_offset, 6) && typeof s.grasp === 'boolean'
      ? s : null;
  }
  return null;
}

export function poseCommand(offset: number[], clientT: number): string {
  return JSON.stringify({ type: 'pose', payload: { offset }, client_t: clientT });
}

export function graspCommand(engaged: boolean, clientT: number): string {
  return JSON.stringify({ type: 'grasp', payload: { engaged }, client_t: clientT });
}

export function channelCommand(s: ChannelSettings, clientT: number): string {
  return JSON.stringify({
    type: 'channel',
    payload: { delay: s.delay, rate: s.rate, drop: s.drop },
    client_t: clientT,
  });
}

export function viaPointCommand(position: number[], travelTime: number,
                                clientT: number): string {
  return JSON.stringify({
    type: 'viapoint',
    payload: { position, rotvec: [0, 0, 0], travel_time: travelTime },
    client_t: clientT,
  });
}
