/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_fitplot_free: (a: number, b: number) => void;
export const __wbg_srsplot_free: (a: number, b: number) => void;
export const fitplot_evaluations: (a: number) => number;
export const fitplot_fitted: (a: number) => number;
export const fitplot_loss: (a: number) => number;
export const fitplot_target: (a: number) => number;
export const half_sine_srs: (a: number, b: number, c: number, d: number) => [number, number, number];
export const sds_fit: (a: bigint, b: bigint, c: number, d: number) => [number, number, number];
export const srsplot_freqs_hz: (a: number) => [number, number];
export const srsplot_sample_rate_hz: (a: number) => number;
export const srsplot_samples: (a: number) => [number, number];
export const srsplot_values: (a: number) => [number, number];
export const synthetic_shock: (a: bigint, b: bigint, c: number) => [number, number, number];
export const __wbindgen_export_0: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
