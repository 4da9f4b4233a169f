/** Orbit camera state and the pure update rule driven by mouse input. */

export interface OrbitState {
  yaw: number            // radians
  pitch: number          // radians, clamped short of the poles
  radius: number         // world units, > 0
  target: [number, number, number]
  fov: number            // radians
}

export const DEFAULT_ORBIT: OrbitState = {
  yaw: 0,
  pitch: 0,
  radius: 3,
  target: [0, 0, 0],
  fov: Math.PI / 3,
}

const KX = 0.01          // yaw radians per pixel of horizontal drag
const KY = 0.01          // pitch radians per pixel of vertical drag
const KW = 0.001         // log-radius per wheel unit
const PITCH_EPS = 1e-3
const PITCH_MAX = Math.PI / 2 - PITCH_EPS

export interface Drag {
  dx: number
  dy: number
}

/**
 * Apply one batch of pointer input: yaw/pitch pan plus exponential zoom.
 * Returns a new state; the input state is never mutated.
 */
export function orbitUpdate(state: OrbitState, drag: Drag, wheel: number): OrbitState {
  const pitch = Math.min(PITCH_MAX, Math.max(-PITCH_MAX, state.pitch + KY * drag.dy))
  return {
    ...state,
    target: [...state.target],
    yaw: state.yaw + KX * drag.dx,
    pitch,
    radius: state.radius * Math.exp(KW * wheel),
  }
}

/** Wheel delta whose zoom factor is exactly `factor` (e.g. 2 doubles radius). */
export function wheelForZoomFactor(factor: number): number {
  return Math.log(factor) / KW
}
