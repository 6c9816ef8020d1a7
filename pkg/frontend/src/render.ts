// Canvas drawing. Reads the view model, never mutates it.

import { armPoints, fitView, forceArrow, phaseName, View, worldToCanvas } from './scene.js';
import { isStale, ViewModel } from './viewmodel.js';

const ARM_COLOR = '#355f8d';
const JOINT_COLOR = '#22354c';
const TARGET_COLOR = '#d08a2e';
const FORCE_COLOR = '#b5413c';
const FORCE_SAT_COLOR = '#ff2e1f';
const MASTER_COLOR = '#3c9d6c';

export function computeView(vm: ViewModel, width: number, height: number): View {
  const hello = vm.hello;
  if (!hello) return fitView([0, 0], 1.0, width, height);
  const reach = hello.link_lengths.reduce((a, b) => a + b, 0);
  return fitView(hello.base, reach, width, height);
}

/** World position of the master ghost: workspace center plus offset. */
export function masterGhost(vm: ViewModel): [number, number] | null {
  if (!vm.hello || !vm.snapshot) return null;
  const c = vm.hello.workspace_center;
  const off = vm.snapshot.master_offset;
  return [c[0] + off[0], c[1] + off[1]];
}

export function drawScene(ctx: CanvasRenderingContext2D, vm: ViewModel,
                          nowMs: number): void {
  const { width, height } = ctx.canvas;
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = '#fafaf7';
  ctx.fillRect(0, 0, width, height);
  const view = computeView(vm, width, height);
  const hello = vm.hello;
  const snap = vm.snapshot;

  if (hello) {
    for (const wall of hello.walls) {
      const [x0, y0] = worldToCanvas([wall.x, -2], view);
      const [, y1] = worldToCanvas([wall.x, 2], view);
      ctx.fillStyle = '#e7ded2';
      ctx.fillRect(x0, y1, width - x0, y0 - y1);
      ctx.strokeStyle = '#a89d8c';
      ctx.beginPath();
      ctx.moveTo(x0, y0);
      ctx.lineTo(x0, y1);
      ctx.stroke();
      ctx.fillStyle = '#8d8271';
      ctx.font = '11px sans-serif';
      ctx.fillText(wall.material, x0 + 8, 30);
    }
  }

  if (hello && snap) {
    const pts = armPoints(snap.q, hello.link_lengths, hello.base).map(
      (p) => worldToCanvas(p, view));
    ctx.strokeStyle = ARM_COLOR;
    ctx.lineWidth = 6;
    ctx.lineCap = 'round';
    ctx.beginPath();
    ctx.moveTo(pts[0][0], pts[0][1]);
    for (const p of pts.slice(1)) ctx.lineTo(p[0], p[1]);
    ctx.stroke();
    for (const p of pts) {
      ctx.fillStyle = JOINT_COLOR;
      ctx.beginPath();
      ctx.arc(p[0], p[1], 5, 0, 2 * Math.PI);
      ctx.fill();
    }

    // desired pose marker
    const xd = worldToCanvas([snap.x_d.position[0], snap.x_d.position[1]], view);
    ctx.strokeStyle = TARGET_COLOR;
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.arc(xd[0], xd[1], 9, 0, 2 * Math.PI);
    ctx.stroke();
    ctx.beginPath();
    ctx.moveTo(xd[0] - 12, xd[1]);
    ctx.lineTo(xd[0] + 12, xd[1]);
    ctx.moveTo(xd[0], xd[1] - 12);
    ctx.lineTo(xd[0], xd[1] + 12);
    ctx.stroke();

    // feedback force at the tool, full arrow length at the ceiling
    const tip = pts[pts.length - 1];
    const arrow = forceArrow(snap.wrench_fb, hello.f_max[0], 80);
    if (arrow) {
      ctx.strokeStyle = arrow.saturated ? FORCE_SAT_COLOR : FORCE_COLOR;
      ctx.lineWidth = arrow.saturated ? 4 : 2.5;
      ctx.beginPath();
      ctx.moveTo(tip[0], tip[1]);
      ctx.lineTo(tip[0] + arrow.dx, tip[1] + arrow.dy);
      ctx.stroke();
      ctx.fillStyle = ctx.strokeStyle;
      ctx.font = '12px sans-serif';
      ctx.fillText(`${arrow.magnitude.toFixed(1)} N${arrow.saturated ? ' (sat)' : ''}`,
                   tip[0] + arrow.dx + 6, tip[1] + arrow.dy);
    }

    // master ghost in replica coordinates
    const ghost = masterGhost(vm);
    if (ghost) {
      const g = worldToCanvas(ghost, view);
      ctx.strokeStyle = MASTER_COLOR;
      ctx.setLineDash([4, 3]);
      ctx.lineWidth = 2;
      ctx.beginPath();
      ctx.arc(g[0], g[1], 7, 0, 2 * Math.PI);
      ctx.stroke();
      ctx.setLineDash([]);
    }

    // per-DoF phase strip and status line
    ctx.font = '11px monospace';
    const labels = ['x', 'y', 'z', 'rx', 'ry', 'rz'];
    for (let i = 0; i < 6; i++) {
      ctx.fillStyle = snap.phase[i] === 1 ? '#7a4cc9' : '#777';
      ctx.fillText(`${labels[i]}:${phaseName(snap.phase[i])}`, 10 + i * 62, 16);
    }
    ctx.fillStyle = '#555';
    ctx.fillText(`t=${snap.t.toFixed(2)}s  grasp=${snap.grasp ? 'ON' : 'off'}  ` +
                 `E_k=${snap.energy.kinetic.toFixed(3)}J  ` +
                 `delay=${snap.channel.delay.toFixed(2)}s ` +
                 `rate=${snap.channel.rate.toFixed(0)}Hz ` +
                 `drop=${snap.channel.drop.toFixed(2)}`, 10, height - 10);
  }

  if (isStale(vm, nowMs)) {
    ctx.fillStyle = 'rgba(30,30,30,0.75)';
    ctx.fillRect(0, height / 2 - 24, width, 48);
    ctx.fillStyle = '#fff';
    ctx.font = '18px sans-serif';
    ctx.textAlign = 'center';
    ctx.fillText(vm.connected ? 'no recent snapshots' : 'disconnected',
                 width / 2, height / 2 + 6);
    ctx.textAlign = 'left';
  }
}
