/* tslint:disable */
/* eslint-disable */

/**
 * Navier Green function of Δ^m on the ball of rational radius `radius`.
 */
export function green_profile(m: number, radius: string, nodes: number): string;

/**
 * Mean-value check on one seeded Almansi polynomial, centred at a seeded
 * lattice point, over the ball of radius 1.
 */
export function pizzetti_demo(m: number, n: number, degree: number, seed: number): string;

/**
 * Shoot from `u(0) = log 2` with the given even derivatives (`d4` is
 * ignored for m = 2) and classify the result.
 */
export function shoot_explorer(m: number, d2: number, d4: number, r_end: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly green_profile: (a: number, b: number, c: number, d: number) => [number, number];
    readonly pizzetti_demo: (a: number, b: number, c: number, d: number) => [number, number];
    readonly shoot_explorer: (a: number, b: number, c: number, d: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
