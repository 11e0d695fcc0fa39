"""Experiment kinds: seeded, deterministic, and table-producing.

Each kind turns an ExperimentConfig into a ResultTable whose rows depend
only on the config (seed included), never on wall clock, thread timing, or
row completion order. Randomness flows through a counter-based splitter:
every draw gets its own SeedSequence keyed by (namespace, indices...), so
enlarging N_list or trial counts never perturbs rows that already existed.

Numerical-invariant violations raised by the underlying modules are caught
and recorded as a structured error entry in the table metadata; the CLI
maps that entry to a dedicated exit code.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .config import ExperimentConfig, config_hash, validate_config
from .dynamics import (
    ExactPropagator,
    MeanFieldSystem,
    bbgky_residual,
    epsilon_term,
    gronwall_envelope,
    integrate_hartree,
)
from .errors import BoundViolation, ChaoticityError, ConfigInvalid
from .metrics import (
    chaos_distance,
    chaos_report,
    corollary_bound,
    empirical_variance,
    factorization_error,
)
from .states import (
    DensityOperator,
    DiscreteMixtureSpec,
    mixture_of_products,
    product_state,
    random_density,
    random_hermitian,
    validate,
)
from .tensor import TensorShape, partial_trace, tensor_power
from .version import __version__

# seed-splitter namespaces; frozen constants, part of the reproducibility contract
NS_SYSTEM = 1
NS_STATE = 2
NS_MIXTURE = 3
NS_WEIGHTS = 4
NS_OBSERVABLE = 5

SCHEMAS = {
    "chaos_sweep": (
        "N", "k", "chaos_distance", "max_C_kN", "corollary_bound",
        "corollary_bound_unsquared", "bound_satisfied", "max_e_N",
    ),
    "propagation": (
        "N", "n", "t", "E_norm", "eps_norm", "eps_bound", "gronwall_bound", "gronwall_ok",
    ),
    "bbgky_verify": (
        "N", "n", "t", "fd_h", "residual_h", "residual_half_h", "ratio",
        "eps_norm", "eps_bound",
    ),
    "hartree_convergence": (
        "level", "step", "delta_to_finer", "ratio", "trace_drift", "min_eig",
    ),
    "bound_audit": (
        "N", "k", "rep", "C_kN", "bound", "bound_unsquared", "satisfied", "margin",
    ),
}


@dataclass
class ResultTable:
    """Schema, rows, and the audit-trail metadata of one experiment run."""

    schema: tuple[str, ...]
    rows: list[tuple]
    metadata: dict = field(default_factory=dict)


def subseed(master: int, *key: int) -> np.random.SeedSequence:
    """Independent stream for (namespace, indices...); order-insensitive reuse."""
    return np.random.SeedSequence(entropy=master, spawn_key=tuple(int(x) for x in key))


def _draw_observable(rng: np.random.Generator, d: int, norm_cap: float) -> np.ndarray:
    """Complex (generally non-Hermitian) matrix with operator norm <= cap."""
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    nrm = linalg.operator_norm(g)
    if nrm > norm_cap:
        g = g * (norm_cap / nrm) if nrm > 0 else np.zeros_like(g)
    return g


def _draw_mixture(config: ExperimentConfig, *key: int):
    """(rho_bar, spec): seeded component states and simplex weights."""
    locals_ = [
        random_density(config.d, subseed(config.seed, NS_MIXTURE, *key, i))
        for i in range(config.components)
    ]
    rng = np.random.default_rng(subseed(config.seed, NS_WEIGHTS, *key))
    w = rng.random(config.components) + 1e-9
    w /= w.sum()
    bar = sum(wi * s.matrix for wi, s in zip(w, locals_))
    rho_bar = validate(bar, TensorShape(config.d, 1))
    return rho_bar, DiscreteMixtureSpec.iid(w, locals_)


def _draw_system(config: ExperimentConfig) -> MeanFieldSystem:
    a = random_hermitian(config.d, subseed(config.seed, NS_SYSTEM, 0), config.a_norm_cap)
    v = random_hermitian(config.d**2, subseed(config.seed, NS_SYSTEM, 1), config.v_norm_cap)
    return MeanFieldSystem(config.d, a, v)


def _draw_initial(config: ExperimentConfig) -> DensityOperator:
    return random_density(config.d, subseed(config.seed, NS_STATE, 0))


def _over_N(config: ExperimentConfig, parallel: int, worker):
    """Run worker(N) per N, concurrently when asked, output order fixed."""
    if parallel <= 1 or len(config.N_list) == 1:
        chunks = [worker(n) for n in config.N_list]
    else:
        with ThreadPoolExecutor(max_workers=min(parallel, len(config.N_list))) as pool:
            chunks = list(pool.map(worker, config.N_list))
    return [row for chunk in chunks for row in chunk]


def _run_chaos_sweep(config: ExperimentConfig, parallel: int):
    rho_bar, spec = _draw_mixture(config)

    def worker(n_sites: int):
        rho_n = mixture_of_products(spec, n_sites, max_total_dim=config.max_total_dim)
        rows = []
        for k in config.k_list:
            rep = chaos_report(rho_n, rho_bar, k)
            rows.append((
                n_sites,
                k,
                rep.chaos_distance,
                max(c for _, c in rep.c_values),
                rep.corollary_bound,
                rep.corollary_bound_unsquared,
                rep.bound_satisfied,
                max(e for _, e in rep.e_values),
            ))
        return rows

    rows = _over_N(config, parallel, worker)
    rows.sort(key=lambda r: (r[0], r[1]))
    return rows


def _grid_index(grid: np.ndarray, t: float) -> int:
    i = int(np.argmin(np.abs(grid - t)))
    if abs(grid[i] - t) > 1e-9:
        raise ConfigInvalid(f"time {t} missing from the trajectory grid")
    return i


def _marginal_matrix(m: np.ndarray, shape: TensorShape, n: int) -> np.ndarray:
    if n == shape.sites:
        return m
    return partial_trace(m, shape, tuple(range(n + 1, shape.sites + 1)))


def _run_propagation(config: ExperimentConfig, parallel: int):
    sys = _draw_system(config)
    rho0 = _draw_initial(config)
    t_end = max(config.times)
    drift_tol = config.tol_value("drift", 1e-7)
    trajectory = integrate_hartree(
        rho0, sys, 0.0, t_end, config.step, config.save_every, drift_tol
    )
    v_norm = sys.interaction_norm()
    orders = sorted(set(config.k_list))

    def worker(n_sites: int):
        prop = ExactPropagator(sys, n_sites, config.max_total_dim)
        rho_n0 = product_state(rho0, n_sites, config.max_total_dim)
        shape = rho_n0.shape
        evolved = {t: prop.evolve(rho_n0, t) for t in config.times}

        e_grid: dict[int, np.ndarray] = {}
        envelopes: dict[int, np.ndarray] = {}
        grid = trajectory.times
        if config.gronwall:
            raw = prop.evolve_grid(rho_n0, grid)
            need = sorted(set(orders) | {n + 1 for n in orders if n + 1 <= n_sites})
            for n in need:
                e_grid[n] = np.array([
                    linalg.trace_norm(
                        _marginal_matrix(m, shape, n)
                        - tensor_power(state.matrix, n, config.max_total_dim)
                    )
                    for m, state in zip(raw, trajectory.states)
                ])
            for n in orders:
                if n + 1 <= n_sites:
                    envelopes[n] = gronwall_envelope(grid, e_grid[n + 1], n, n_sites, v_norm)

        rows = []
        for n in orders:
            for t in config.times:
                if config.gronwall:
                    i = _grid_index(grid, t)
                    e_val = float(e_grid[n][i])
                else:
                    e_val = chaos_distance(evolved[t], trajectory.state_at(t), n)
                if n <= n_sites - 1:
                    eps = epsilon_term(evolved[t], sys, n)
                    eps_norm, eps_bound = eps.norm, eps.bound
                else:
                    eps_norm = eps_bound = None
                if config.gronwall and n in envelopes:
                    bound = float(envelopes[n][_grid_index(grid, t)])
                    ok = bool(e_val <= 1.05 * bound + 1e-12)
                else:
                    bound = None
                    ok = None
                rows.append((n_sites, n, float(t), e_val, eps_norm, eps_bound, bound, ok))
        return rows

    rows = _over_N(config, parallel, worker)
    rows.sort(key=lambda r: (r[0], r[1], r[2]))
    return rows


def _run_bbgky_verify(config: ExperimentConfig, parallel: int):
    sys = _draw_system(config)
    rho0 = _draw_initial(config)
    residual_gate = config.tol_value("residual", float("inf"))

    def worker(n_sites: int):
        prop = ExactPropagator(sys, n_sites, config.max_total_dim)
        rho_n0 = product_state(rho0, n_sites, config.max_total_dim)
        rows = []
        for n in config.k_list:
            if n > n_sites - 1:
                continue
            for t in config.times:
                r1 = bbgky_residual(rho_n0, sys, n, t, config.fd_h, prop)
                r2 = bbgky_residual(rho_n0, sys, n, t, config.fd_h / 2.0, prop)
                ratio = (
                    r1.residual_trace_norm / r2.residual_trace_norm
                    if r2.residual_trace_norm > 0.0
                    else None
                )
                if r1.residual_trace_norm > residual_gate:
                    raise BoundViolation(
                        f"finite-difference residual {r1.residual_trace_norm:.6e} "
                        f"exceeds tol.residual = {residual_gate:.6e} at N={n_sites}, n={n}, t={t}"
                    )
                rows.append((
                    n_sites, n, float(t), config.fd_h,
                    r1.residual_trace_norm, r2.residual_trace_norm, ratio,
                    r1.epsilon_norm, r1.epsilon_bound,
                ))
        return rows

    rows = _over_N(config, parallel, worker)
    rows.sort(key=lambda r: (r[0], r[1], r[2]))
    return rows


def _run_hartree_convergence(config: ExperimentConfig, parallel: int):
    sys = _draw_system(config)
    rho0 = _draw_initial(config)
    t_end = max(config.times)
    drift_tol = config.tol_value("drift", 1e-7)
    endpoints = []
    steps = [config.step / (2**lvl) for lvl in range(3)]
    for s in steps:
        traj = integrate_hartree(rho0, sys, 0.0, t_end, s, save_every=10**9, drift_tol=drift_tol)
        endpoints.append(traj.states[-1].matrix)
    deltas = [
        linalg.trace_norm(endpoints[0] - endpoints[1]),
        linalg.trace_norm(endpoints[1] - endpoints[2]),
    ]
    ratio = deltas[0] / deltas[1] if deltas[1] > 0 else None
    rows = []
    for lvl, (s, end) in enumerate(zip(steps, endpoints)):
        eigs = np.linalg.eigvalsh(end)
        rows.append((
            lvl,
            s,
            deltas[lvl] if lvl < 2 else None,
            ratio if lvl == 0 else None,
            abs(float(np.trace(end).real) - 1.0),
            float(eigs.min()),
        ))
    return rows


def _run_bound_audit(config: ExperimentConfig, parallel: int):
    combos = len(config.N_list) * len(config.k_list)
    reps = -(-config.trials // combos)

    def worker(n_sites: int):
        rows = []
        for k in config.k_list:
            for rep in range(reps):
                rho_bar, spec = _draw_mixture(config, n_sites, k, rep)
                rho_n = mixture_of_products(spec, n_sites, max_total_dim=config.max_total_dim)
                rng = np.random.default_rng(
                    subseed(config.seed, NS_OBSERVABLE, n_sites, k, rep)
                )
                obs = [_draw_observable(rng, config.d, config.a_norm_cap) for _ in range(k)]
                c_val = factorization_error(rho_n, rho_bar, obs)
                e_vals = [
                    max(empirical_variance(rho_n, rho_bar, a.conj().T), 0.0) for a in obs
                ]
                b_sq = corollary_bound(rho_bar, obs, e_vals, n_sites, squared=True)
                b_un = corollary_bound(rho_bar, obs, e_vals, n_sites, squared=False)
                rows.append((
                    n_sites, k, rep, c_val, b_sq, b_un,
                    bool(c_val <= b_sq + 1e-9), b_sq - c_val,
                ))
        return rows

    rows = _over_N(config, parallel, worker)
    rows.sort(key=lambda r: (r[0], r[1], r[2]))
    return rows


_RUNNERS = {
    "chaos_sweep": _run_chaos_sweep,
    "propagation": _run_propagation,
    "bbgky_verify": _run_bbgky_verify,
    "hartree_convergence": _run_hartree_convergence,
    "bound_audit": _run_bound_audit,
}


def run_experiment(config: ExperimentConfig, parallel: int = 1) -> ResultTable:
    """Execute one experiment; never raises for numerical violations.

    ConfigInvalid propagates (caller contract problem). Everything the
    numerical layer raises is recorded under metadata["error"] and the
    table is returned with whatever determinism allows: no rows.
    """
    validate_config(config)
    schema = SCHEMAS[config.kind]
    metadata = {
        "kind": config.kind,
        "config_hash": config_hash(config),
        "seed": config.seed,
        "tool_version": __version__,
    }
    start = time.perf_counter()
    rows: list[tuple] = []
    try:
        rows = _RUNNERS[config.kind](config, max(1, parallel))
    except ConfigInvalid:
        raise
    except ChaoticityError as exc:
        metadata["error"] = {"type": type(exc).__name__, "message": str(exc)}
    metadata["wall_time_s"] = time.perf_counter() - start
    for row in rows:
        if len(row) != len(schema):
            raise AssertionError(f"row arity {len(row)} != schema arity {len(schema)}")
    return ResultTable(schema=schema, rows=rows, metadata=metadata)
