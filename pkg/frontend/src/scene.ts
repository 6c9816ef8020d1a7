// Pure scene geometry: planar chain layout, world/canvas mapping, and the
// force-arrow scaling. Everything here is unit-testable without a canvas.

export interface View {
  pxPerMeter: number;
  originPx: [number, number]; // canvas pixel of world (0, 0)
}

export function worldToCanvas(p: [number, number], view: View): [number, number] {
  // canvas y grows downward
  return [view.originPx[0] + p[0] * view.pxPerMeter,
          view.originPx[1] - p[1] * view.pxPerMeter];
}

export function canvasToWorld(px: [number, number], view: View): [number, number] {
  return [(px[0] - view.originPx[0]) / view.pxPerMeter,
          (view.originPx[1] - px[1]) / view.pxPerMeter];
}

/** Joint positions of the planar chain, base first, tool tip last. */
export function armPoints(q: number[], lengths: number[],
                          base: number[]): [number, number][] {
  const pts: [number, number][] = [[base[0], base[1]]];
  let angle = 0;
  let x = base[0];
  let y = base[1];
  for (let i = 0; i < lengths.length; i++) {
    angle += q[i];
    x += lengths[i] * Math.cos(angle);
    y += lengths[i] * Math.sin(angle);
    pts.push([x, y]);
  }
  return pts;
}

export interface ForceArrow {
  dx: number;          // canvas px
  dy: number;
  saturated: boolean;
  magnitude: number;   // N
}

/** Arrow for the linear feedback force, full length at the force ceiling. */
export function forceArrow(wrench: number[], fMax: number,
                           maxLenPx: number): ForceArrow | null {
  const fx = wrench[0];
  const fy = wrench[1];
  const mag = Math.hypot(fx, fy);
  if (mag < 1e-6) return null;
  const frac = Math.min(mag / fMax, 1.0);
  const len = frac * maxLenPx;
  return {
    dx: (fx / mag) * len,
    dy: -(fy / mag) * len,
    saturated: mag >= fMax * 0.999,
    magnitude: mag,
  };
}

export const PHASE_NAMES = ['Div', 'Conv'];

export function phaseName(phase: number): string {
  return PHASE_NAMES[phase] ?? '?';
}

/** Fit the workspace (reach circle around the base) into the canvas. */
export function fitView(base: number[], reach: number, widthPx: number,
                        heightPx: number, marginPx = 40): View {
  const span = 2 * reach;
  const pxPerMeter = Math.min((widthPx - 2 * marginPx) / span,
                              (heightPx - 2 * marginPx) / span);
  return {
    pxPerMeter,
    originPx: [widthPx / 2 - base[0] * pxPerMeter,
               heightPx / 2 + (base[1] + reach * 0.2) * pxPerMeter],
  };
}
