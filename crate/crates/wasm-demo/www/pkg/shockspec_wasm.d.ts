/* tslint:disable */
/* eslint-disable */
/**
 * SRS of a half-sine pulse of `duration_ms` and peak `amplitude`.
 */
export function half_sine_srs(duration_ms: number, amplitude: number, zeta: number, pad_scale: number): SrsPlot;
export function synthetic_shock(seed: bigint, stream: bigint, pad_scale: number): SrsPlot;
export function sds_fit(seed: bigint, stream: bigint, atoms: number, max_evals: number): FitPlot;
/**
 * Target spectrum, fitted spectrum and the rendered model.
 */
export class FitPlot {
  private constructor();
  free(): void;
  readonly evaluations: number;
  readonly loss: number;
  readonly fitted: SrsPlot;
  readonly target: SrsPlot;
}
/**
 * A time history together with its spectrum.
 */
export class SrsPlot {
  private constructor();
  free(): void;
  readonly sample_rate_hz: number;
  readonly values: Float64Array;
  readonly samples: Float64Array;
  readonly freqs_hz: Float64Array;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
  readonly memory: WebAssembly.Memory;
  readonly __wbg_fitplot_free: (a: number, b: number) => void;
  readonly __wbg_srsplot_free: (a: number, b: number) => void;
  readonly fitplot_evaluations: (a: number) => number;
  readonly fitplot_fitted: (a: number) => number;
  readonly fitplot_loss: (a: number) => number;
  readonly fitplot_target: (a: number) => number;
  readonly half_sine_srs: (a: number, b: number, c: number, d: number) => [number, number, number];
  readonly sds_fit: (a: bigint, b: bigint, c: number, d: number) => [number, number, number];
  readonly srsplot_freqs_hz: (a: number) => [number, number];
  readonly srsplot_sample_rate_hz: (a: number) => number;
  readonly srsplot_samples: (a: number) => [number, number];
  readonly srsplot_values: (a: number) => [number, number];
  readonly synthetic_shock: (a: bigint, b: bigint, c: number) => [number, number, number];
  readonly __wbindgen_export_0: WebAssembly.Table;
  readonly __externref_table_dealloc: (a: number) => void;
  readonly __wbindgen_free: (a: number, b: number, c: number) => void;
  readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;
/**
* Instantiates the given `module`, which can either be bytes or
* a precompiled `WebAssembly.Module`.
*
* @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
*
* @returns {InitOutput}
*/
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
* If `module_or_path` is {RequestInfo} or {URL}, makes a request and
* for everything else, calls `WebAssembly.instantiate` directly.
*
* @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
*
* @returns {Promise<InitOutput>}
*/
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
