/** Pure view-state transitions: every interaction flows through here, so a
 * recorded action log replays to the same state (and hence the same request
 * sequence). No numerics beyond picking fields. */

import { Manifest, ViewState } from "./types.js";

export type Action =
  | { kind: "select-chain"; chainId: string }
  | { kind: "set-axes"; x: string; y: string }
  | { kind: "toggle-burnin" }
  | { kind: "set-stride"; stride: number }
  | { kind: "select-sample"; index: number }
  | { kind: "pin-selected" }
  | { kind: "clear-pins" };

export function reduce(state: ViewState, action: Action, manifest?: Manifest): ViewState {
  switch (action.kind) {
    case "select-chain":
      return { ...state, chainId: action.chainId, selectedIndex: null, pinned: [] };
    case "set-axes": {
      if (action.x === action.y) {
        throw new Error("x and y parameters must differ");
      }
      if (manifest) {
        for (const name of [action.x, action.y]) {
          if (!manifest.continuous.some((p) => p.name === name)) {
            throw new Error(`unknown parameter name '${name}'`);
          }
        }
      }
      return { ...state, xParam: action.x, yParam: action.y };
    }
    case "toggle-burnin":
      return { ...state, skipBurnIn: !state.skipBurnIn, selectedIndex: null };
    case "set-stride": {
      if (!Number.isInteger(action.stride) || action.stride < 1) {
        throw new Error("stride must be a positive integer");
      }
      return { ...state, stride: action.stride, selectedIndex: null };
    }
    case "select-sample":
      return { ...state, selectedIndex: action.index };
    case "pin-selected": {
      if (state.selectedIndex === null) return state;
      if (state.pinned.includes(state.selectedIndex)) return state;
      const pinned = [...state.pinned, state.selectedIndex].slice(-3);
      return { ...state, pinned };
    }
    case "clear-pins":
      return { ...state, pinned: [] };
  }
}

export function defaultAxes(manifest: Manifest): [string, string] {
  const names = manifest.continuous.map((p) => p.name);
  if (names.length < 2) {
    throw new Error("need at least two continuous parameters to plot");
  }
  return [names[0], names[1]];
}
