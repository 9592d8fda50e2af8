/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const bayes_factor_2x2: (a: number, b: number, c: number) => [number, number, number];
export const lmm_inflation_for_angle: (a: number) => [number, number, number];
export const sine_factors: (a: number, b: number) => [number, number, number, number];
export const sine_inflation_sweep: (a: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
