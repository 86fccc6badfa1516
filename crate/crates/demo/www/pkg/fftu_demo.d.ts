/* tslint:disable */
/* eslint-disable */

export class Spectrum {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Real part of the input, row-major.
     */
    input(): Float64Array;
    /**
     * `log(1 + |Y|)` with the zero frequency moved to the centre.
     */
    log_magnitude(): Float64Array;
    n(): number;
    /**
     * Relative L2 distance from the sequential transform.
     */
    residual(): number;
    /**
     * Trace summary as JSON.
     */
    summary(): string;
}

export function bsp_cost(shape: string, grid: string, g: number, l: number): string;

export function owner_map(rows: number, cols: number, strategy: string, p_rows: number, p_cols: number): Uint32Array;

export function spectrum(kind: string, n: number, p_rows: number, p_cols: number): Spectrum;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_spectrum_free: (a: number, b: number) => void;
    readonly bsp_cost: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly owner_map: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly spectrum: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
    readonly spectrum_input: (a: number) => [number, number];
    readonly spectrum_log_magnitude: (a: number) => [number, number];
    readonly spectrum_n: (a: number) => number;
    readonly spectrum_residual: (a: number) => number;
    readonly spectrum_summary: (a: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
