/* tslint:disable */
/* eslint-disable */

/**
 * `e, f, g` of a prime in `Q(√d..., ζ_{2^{level+2}})`, or its real subfield.
 */
export function split(prime: number, radicands: string, level: number, real: boolean): string;

/**
 * Fundamental system of units of `Q(√d1, ..., √dk)`, radicands comma separated.
 */
export function unit_group(radicands: string): string;

/**
 * Condition class, unit group, class numbers and Iwasawa prediction for a pair.
 */
export function verify_pair(p: number, q: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly split: (a: number, b: number, c: number, d: number, e: number) => [number, number];
    readonly unit_group: (a: number, b: number) => [number, number];
    readonly verify_pair: (a: number, b: number) => [number, number];
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
