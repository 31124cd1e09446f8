/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_familyview_free: (a: number, b: number) => void;
export const builtin_params: (a: number, b: number) => [number, number, number, number];
export const circle: (a: number, b: number) => [number, number, number, number];
export const explore: (a: number, b: number) => [number, number, number];
export const familyview_max_abs_a: (a: number) => number;
export const familyview_max_t6: (a: number) => number;
export const familyview_nodes: (a: number) => [number, number];
export const familyview_t5: (a: number) => number;
export const familyview_t6: (a: number) => number;
export const familyview_t6_curve: (a: number) => [number, number];
export const familyview_t7: (a: number) => number;
export const familyview_theta: (a: number) => [number, number];
export const familyview_variation: (a: number) => number;
export const familyview_weights: (a: number) => [number, number];
export const stability_boundary: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
