/** Shared shapes of the service API payloads and the client view state. */

export interface SampleRecord {
  t: number;
  theta_c: number[];
  theta_d: number[];
  nlp: number;
  accepted: boolean;
}

export interface ChainMeta {
  id: string;
  samples: number;
  burn_in: number;
  model: string;
  manifest_hash: string;
  min_nlp: number | null;
}

export interface ContinuousParamInfo {
  name: string;
  role: string;
  prior_mean: number;
  prior_std: number;
  low: number;
  high: number;
}

export interface Manifest {
  model: string;
  continuous: ContinuousParamInfo[];
  discrete: { name: string; cardinality: number; pmf: number[] }[];
  burn_in: number;
  resolution: number;
}

export interface ViewState {
  chainId: string | null;
  xParam: string;
  yParam: string;
  skipBurnIn: boolean;
  stride: number;
  selectedIndex: number | null;
  pinned: number[]; // sample indices in the comparison strip
}

export function initialViewState(): ViewState {
  return {
    chainId: null,
    xParam: "",
    yParam: "",
    skipBurnIn: true,
    stride: 1,
    selectedIndex: null,
    pinned: [],
  };
}
