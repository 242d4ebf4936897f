/** Wire types and helpers for the teleoperation bridge protocol.
 *
 * Every message is a JSON envelope `{v, type, seq, payload}`. The server
 * greets each client with `hello` (role, scenario metadata, command
 * limits, workspace extents), then streams `state` snapshots; commands
 * are answered with `ack` or `error`.
 */

export const PROTOCOL_VERSION = 1;

export interface Envelope<T = unknown> {
  v: number;
  type: string;
  seq: number;
  payload: T;
}

export interface Limits {
  max_force: number;
  max_moment: number;
}

export interface Workspace {
  x_min: number;
  x_max: number;
  z_min: number;
  z_max: number;
}

export interface ScenarioInfo {
  name: string;
  description: string;
  n_modules: number;
  payload_mass: number;
  duration: number;
  inner_hz: number;
}

export type Role = "controller" | "observer";

export interface HelloPayload {
  role: Role;
  scenario: ScenarioInfo;
  limits: Limits;
  workspace: Workspace;
  snapshot_hz: number;
}

export interface PlanarWrench {
  fx: number;
  fz: number;
  my: number;
}

export interface ModuleState {
  anchor: [number, number];
  attachment: [number, number];
  commanded: number;
  applied: number;
}

export interface StateSnapshot {
  time: number;
  tick: number;
  paused: boolean;
  done: boolean;
  pose: { x: number; z: number; theta: number };
  twist: { vx: number; vz: number; omega: number };
  modules: ModuleState[];
  w_des: PlanarWrench;
  w_ext_estimate: PlanarWrench;
  mode: string;
}

export interface AckPayload {
  applied_at_tick: number;
  clamped: boolean;
  command_seq?: number;
}

export interface ErrorPayload {
  message: string;
  command_seq?: number;
}

export interface ClampedWrench extends PlanarWrench {
  clamped: boolean;
}

/** Rescaling to exactly the limit can round a hair above it and make
 * the server flag a clamp the client already performed; staying this
 * far inside is invisible (2e-10 N at 200 N) and keeps the two sides
 * in agreement. */
const CLAMP_MARGIN = 1e-12;

/** Shrink a wrench onto the advertised limits: the force vector is
 * rescaled (direction preserved) and the moment saturated. */
export function clampWrench(
  fx: number,
  fz: number,
  my: number,
  limits: Limits,
): ClampedWrench {
  let clamped = false;
  const mag = Math.hypot(fx, fz);
  if (mag > limits.max_force) {
    const s = (limits.max_force * (1 - CLAMP_MARGIN)) / mag;
    fx *= s;
    fz *= s;
    clamped = true;
  }
  if (Math.abs(my) > limits.max_moment) {
    my = Math.sign(my) * limits.max_moment;
    clamped = true;
  }
  // `+ 0` turns the negative zero a screen-axis flip can produce into
  // plain zero so payloads serialize predictably.
  return { fx: fx + 0, fz: fz + 0, my: my + 0, clamped };
}

export function forceMagnitude(w: PlanarWrench): number {
  return Math.hypot(w.fx, w.fz);
}
