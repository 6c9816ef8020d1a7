// Entry point: wires the socket, pointer input, sliders, and the render loop.

import { channelCommand, graspCommand, parseServerMessage, poseCommand,
         viaPointCommand } from './protocol.js';
import { computeView, drawScene } from './render.js';
import { canvasToWorld } from './scene.js';
import { applyServerMessage, DragCoalescer, initialViewModel, OfflineBuffer,
         recenterOffset } from './viewmodel.js';
import { connect, sessionUrl } from './ws.js';

const vm = initialViewModel();
const coalescer = new DragCoalescer();
const buffer = new OfflineBuffer();

let dragging = false;
let releaseAt: number | null = null;
let releaseOffset: number[] = [0, 0, 0, 0, 0, 0];
let viaMode = false;

const canvas = document.getElementById('scene') as HTMLCanvasElement;
const ctx = canvas.getContext('2d')!;

const socket = connect(sessionUrl(), {
  onMessage: (text) => {
    const msg = parseServerMessage(text);
    if (msg) applyServerMessage(vm, msg, performance.now());
  },
  onOpen: () => {
    vm.connected = true;
    for (const text of buffer.drain(performance.now())) socket.send(text);
  },
  onClose: () => {
    vm.connected = false;
  },
});

function sendOrBuffer(text: string): void {
  if (!socket.send(text)) buffer.push(text, performance.now());
}

function clientT(): number {
  return performance.now() / 1000;
}

function pointerOffset(ev: PointerEvent): number[] {
  const rect = canvas.getBoundingClientRect();
  const view = computeView(vm, canvas.width, canvas.height);
  const world = canvasToWorld([ev.clientX - rect.left, ev.clientY - rect.top], view);
  const c = vm.hello ? vm.hello.workspace_center : [0, 0, 0];
  return [world[0] - c[0], world[1] - c[1], 0, 0, 0, 0];
}

canvas.addEventListener('pointerdown', (ev) => {
  if (!vm.hello) return;
  if (viaMode) {
    const rect = canvas.getBoundingClientRect();
    const view = computeView(vm, canvas.width, canvas.height);
    const world = canvasToWorld([ev.clientX - rect.left, ev.clientY - rect.top], view);
    sendOrBuffer(viaPointCommand([world[0], world[1], 0], vm.viaTravelTime, clientT()));
    return;
  }
  dragging = true;
  releaseAt = null;
  canvas.setPointerCapture(ev.pointerId);
  coalescer.update(pointerOffset(ev));
});

canvas.addEventListener('pointermove', (ev) => {
  if (dragging) coalescer.update(pointerOffset(ev));
});

canvas.addEventListener('pointerup', (ev) => {
  if (!dragging) return;
  dragging = false;
  releaseOffset = pointerOffset(ev);
  releaseAt = performance.now();
});

function bindSlider(id: string, label: string, fn: (v: number) => void): void {
  const el = document.getElementById(id) as HTMLInputElement;
  const out = document.getElementById(id + '-value')!;
  el.addEventListener('input', () => {
    out.textContent = `${label} ${el.value}`;
    fn(parseFloat(el.value));
  });
}

function sendChannel(): void {
  sendOrBuffer(channelCommand(vm.sliders, clientT()));
}

bindSlider('delay', 'delay (s):', (v) => {
  vm.sliders = { ...vm.sliders, delay: v };
  sendChannel();
});
bindSlider('rate', 'rate (Hz):', (v) => {
  vm.sliders = { ...vm.sliders, rate: v };
  sendChannel();
});
bindSlider('drop', 'drop:', (v) => {
  vm.sliders = { ...vm.sliders, drop: v };
  sendChannel();
});

const graspBtn = document.getElementById('grasp') as HTMLButtonElement;
graspBtn.addEventListener('click', () => {
  sendOrBuffer(graspCommand(!vm.grasp, clientT()));
});

const viaBtn = document.getElementById('via-mode') as HTMLInputElement;
viaBtn.addEventListener('change', () => {
  viaMode = viaBtn.checked;
});

// command pump: coalesced drags while pressed, spring-return after release
setInterval(() => {
  const now = performance.now();
  if (releaseAt !== null && !dragging && !vm.grasp) {
    const off = recenterOffset(releaseOffset, now - releaseAt);
    if (off === null) {
      releaseAt = null;
      coalescer.update([0, 0, 0, 0, 0, 0]);
    } else {
      coalescer.update(off);
    }
  }
  const offset = coalescer.flush(now);
  if (offset !== null) sendOrBuffer(poseCommand(offset, clientT()));
}, 8);

function frame(): void {
  graspBtn.textContent = vm.grasp ? 'release grasp' : 'engage grasp';
  drawScene(ctx, vm, performance.now());
  requestAnimationFrame(frame);
}

requestAnimationFrame(frame);
