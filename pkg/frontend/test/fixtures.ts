/** Wire-shaped message builders shared by the unit tests. */

import {
  Envelope,
  HelloPayload,
  PROTOCOL_VERSION,
  StateSnapshot,
} from "../src/protocol.js";

export function makeHello(
  overrides: Partial<HelloPayload> = {},
): Envelope<HelloPayload> {
  return {
    v: PROTOCOL_VERSION,
    type: "hello",
    seq: 1,
    payload: {
      role: "controller",
      scenario: {
        name: "teleop",
        description: "",
        n_modules: 4,
        payload_mass: 27.2,
        duration: 60,
        inner_hz: 1000,
      },
      limits: { max_force: 200, max_moment: 50 },
      workspace: { x_min: 0, x_max: 4, z_min: 0, z_max: 2.5 },
      snapshot_hz: 30,
      ...overrides,
    },
  };
}

let stateSeq = 1;

export function makeSnapshot(
  overrides: Partial<StateSnapshot> = {},
): Envelope<StateSnapshot> {
  stateSeq += 1;
  return {
    v: PROTOCOL_VERSION,
    type: "state",
    seq: stateSeq,
    payload: {
      time: 1.0,
      tick: 1000,
      paused: false,
      done: false,
      pose: { x: 2, z: 1, theta: 0 },
      twist: { vx: 0, vz: 0, omega: 0 },
      modules: [
        { anchor: [0, 2.5], attachment: [2, 1], commanded: 120, applied: 119 },
        { anchor: [4, 2.5], attachment: [2, 1], commanded: 120, applied: 121 },
        { anchor: [0, 2.2], attachment: [2, 1], commanded: 80, applied: 80 },
        { anchor: [4, 2.2], attachment: [2, 1], commanded: 80, applied: 80 },
      ],
      w_des: { fx: 0, fz: 266.8, my: 0 },
      w_ext_estimate: { fx: 0, fz: 0, my: 0 },
      mode: "teleop",
      ...overrides,
    },
  };
}
