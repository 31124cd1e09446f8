/* tslint:disable */
/* eslint-disable */

/**
 * Summary of one family member, flattened for JavaScript.
 */
export class FamilyView {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    readonly max_abs_a: number;
    readonly max_t6: number;
    readonly nodes: Float64Array;
    readonly t5: number;
    readonly t6: number;
    readonly t6_curve: Float64Array;
    readonly t7: number;
    readonly theta: Float64Array;
    readonly variation: number;
    readonly weights: Float64Array;
}

/**
 * Parameters of a builtin family member, for seeding the page's inputs.
 */
export function builtin_params(name: string): Float64Array;

/**
 * Circle test at h = π/2: `θ, x, y, err_x, err_y` per tick, then the endpoint error.
 */
export function circle(source: string): Float64Array;

export function explore(params: Float64Array): FamilyView;

/**
 * Boundary of `|R(k z)| = 1` with `k = s − 1` when `equal_cost`, else 1.
 * Polylines are concatenated as `re, im` pairs separated by a `NaN, NaN` pair.
 */
export function stability_boundary(source: string, equal_cost: boolean, window: Float64Array, resolution: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_familyview_free: (a: number, b: number) => void;
    readonly builtin_params: (a: number, b: number) => [number, number, number, number];
    readonly circle: (a: number, b: number) => [number, number, number, number];
    readonly explore: (a: number, b: number) => [number, number, number];
    readonly familyview_max_abs_a: (a: number) => number;
    readonly familyview_max_t6: (a: number) => number;
    readonly familyview_nodes: (a: number) => [number, number];
    readonly familyview_t5: (a: number) => number;
    readonly familyview_t6: (a: number) => number;
    readonly familyview_t6_curve: (a: number) => [number, number];
    readonly familyview_t7: (a: number) => number;
    readonly familyview_theta: (a: number) => [number, number];
    readonly familyview_variation: (a: number) => number;
    readonly familyview_weights: (a: number) => [number, number];
    readonly stability_boundary: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
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
