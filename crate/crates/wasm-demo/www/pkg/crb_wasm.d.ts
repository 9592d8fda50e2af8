/* tslint:disable */
/* eslint-disable */

export function bayes_factor_2x2(a: number, b: number, c: number): number;

export function lmm_inflation_for_angle(theta: number): number;

export function sine_factors(a: number, b: number): Float64Array;

/**
 * `points` samples of `(phase, factor(A), factor(B))` at unit amplitude,
 * flattened, with the phase running over `[0, 2π)`.
 */
export function sine_inflation_sweep(points: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly bayes_factor_2x2: (a: number, b: number, c: number) => [number, number, number];
    readonly lmm_inflation_for_angle: (a: number) => [number, number, number];
    readonly sine_factors: (a: number, b: number) => [number, number, number, number];
    readonly sine_inflation_sweep: (a: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
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
