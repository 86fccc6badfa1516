/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_spectrum_free: (a: number, b: number) => void;
export const bsp_cost: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
export const owner_map: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
export const spectrum: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
export const spectrum_input: (a: number) => [number, number];
export const spectrum_log_magnitude: (a: number) => [number, number];
export const spectrum_n: (a: number) => number;
export const spectrum_residual: (a: number) => number;
export const spectrum_summary: (a: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
