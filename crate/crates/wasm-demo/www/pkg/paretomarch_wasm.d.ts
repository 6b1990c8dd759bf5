/* tslint:disable */
/* eslint-disable */

export class Demo {
    free(): void;
    [Symbol.dispose](): void;
    budget_bound(): number;
    /**
     * `[b0, J0, b1, J1, …]`.
     */
    front(x: number, y: number): Float64Array;
    heatmap(b: number): Uint8Array;
    n(): number;
    constructor(name: string, n: number, slices: number);
    /**
     * `[x, y]` of the scenario's default start.
     */
    start(): Float64Array;
    /**
     * `[primary, spent, complete, x0, y0, x1, y1, …]`.
     */
    trace(x: number, y: number, b: number): Float64Array;
}

/**
 * Single-budget built-in scenarios, one per line.
 */
export function scenario_names(): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_demo_free: (a: number, b: number) => void;
    readonly demo_budget_bound: (a: number) => number;
    readonly demo_front: (a: number, b: number, c: number) => [number, number, number, number];
    readonly demo_heatmap: (a: number, b: number) => [number, number];
    readonly demo_n: (a: number) => number;
    readonly demo_new: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly demo_start: (a: number) => [number, number];
    readonly demo_trace: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly scenario_names: () => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
