/* tslint:disable */
/* eslint-disable */

/**
 * Rows `(α, γ)` for the discrete gradient step on `(0, alpha_max]`.
 */
export function dt_gradient_curve(mu: number, alpha_max: number, points: number): Float64Array;

export function ifp_osp_gain(a: number, b: number): number;

/**
 * Rows `(ν, ρ feedthrough bound, ρ drift bound, ρ_max)` for `ν ∈ [0, j)`.
 */
export function region_boundary(mu: number, g: number, j: number, points: number): Float64Array;

export function region_contains(mu: number, g: number, j: number, nu: number, rho: number): boolean;

/**
 * `[ν-intercept, ρ-intercept, ρ cap]`
 */
export function region_intercepts(mu: number, g: number, j: number): Float64Array;

/**
 * Largest certified ε for the sector `[lo, hi]`, or NaN when the loop
 * transformation cannot be certified.
 */
export function smib_circle(damping: number, p_m: number, lo: number, hi: number): number;

/**
 * Rows `(t, θ − θ̄, ω)` for the swing equation with the frequency fed back
 * through a saturation of level `sat`, started at `θ̄ + dtheta`, `ω = omega0`.
 */
export function smib_trajectory(damping: number, p_m: number, sat: number, dtheta: number, omega0: number, t_end: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly dt_gradient_curve: (a: number, b: number, c: number) => [number, number, number, number];
    readonly ifp_osp_gain: (a: number, b: number) => [number, number, number];
    readonly region_boundary: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly region_contains: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
    readonly region_intercepts: (a: number, b: number, c: number) => [number, number, number, number];
    readonly smib_circle: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly smib_trajectory: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
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
