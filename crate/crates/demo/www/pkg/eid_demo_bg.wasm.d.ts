/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const dt_gradient_curve: (a: number, b: number, c: number) => [number, number, number, number];
export const ifp_osp_gain: (a: number, b: number) => [number, number, number];
export const region_boundary: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const region_contains: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
export const region_intercepts: (a: number, b: number, c: number) => [number, number, number, number];
export const smib_circle: (a: number, b: number, c: number, d: number) => [number, number, number];
export const smib_trajectory: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
