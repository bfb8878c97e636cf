/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const digest_pair: (a: number, b: number) => [number, number];
export const ecb_blocks: (a: number, b: number, c: number, d: number) => [number, number];
export const example: (a: number, b: number) => [number, number];
export const example_names: () => [number, number];
export const grade: (a: number, b: number, c: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
