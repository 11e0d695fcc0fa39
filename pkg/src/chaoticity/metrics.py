"""Chaoticity metrics for N-site density operators.

How close is rho_N to the tensor power of a one-site state rho? Four views
of the same question, each exact (no sampling):

* chaos_distance    tr |rho_N^(k) - rho^(ox k)|, trace-norm distance of the
                    k-site marginal to the product.
* empirical_variance e_N(A) = tr(|X_N(A) - tr(A rho) 1|^2 rho_N), the
                    variance of the site-averaged observable X_N(A).
* factorization_error C_{k,N}(A_1..A_k) = |tr((A_1 ox ... ox A_k) rho_N^(k))
                    - prod_j tr(rho A_j)|.
* corollary_bound   the closeness-rate ceiling combining sqrt(e_N) terms with
                    a combinatorial sampling defect 2 prod ||A_i|| (1 - prod_m
                    (1 - m/N)); C_{k,N} stays below it on symmetric states.

The bound is evaluated in its printed squared-factor form and, because the
underlying Cauchy-Schwarz step suggests unsquared factors were intended, the
unsquared variant is computed alongside; reports carry both.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import BadSiteIndex, BoundViolation, DimensionMismatch
from .states import DensityOperator, validate
from .tensor import TensorShape, empirical_observable, kron_all, partial_trace, tensor_power

# e values in [-E_CLAMP, 0) are reported as 0 (flagged); below -E_ERROR is a bug.
E_CLAMP = 1e-10
E_ERROR = 1e-8
BOUND_SLACK = 1e-9


def marginal(rho_N: DensityOperator, k: int) -> DensityOperator:
    """First-k-sites marginal: trace out sites k+1..N."""
    n = rho_N.sites
    if not 1 <= k <= n:
        raise BadSiteIndex(f"marginal order {k} outside 1..{n}")
    traced = range(k + 1, n + 1)
    m = partial_trace(rho_N.matrix, rho_N.shape, traced)
    return validate(m, rho_N.shape.reduced(k))


def chaos_distance(rho_N: DensityOperator, rho: DensityOperator, k: int) -> float:
    """tr |rho_N^(k) - rho^(ox k)|."""
    if rho.sites != 1:
        raise DimensionMismatch("reference state must live on one site")
    if rho.d != rho_N.d:
        raise DimensionMismatch(f"local dimensions differ: {rho.d} vs {rho_N.d}")
    marg = marginal(rho_N, k)
    ref = tensor_power(rho.matrix, k, rho_N.shape.max_total_dim)
    return linalg.trace_norm(marg.matrix - ref)


def empirical_variance(rho_N: DensityOperator, rho: DensityOperator, a: np.ndarray) -> float:
    """e_N(A) = tr(|X_N(A) - tr(A rho) 1|^2 rho_N).

    Expands the modulus square explicitly as B†B with B = X_N(A) - tr(A rho) 1
    and contracts tr(B†B rho_N) = <B, B rho_N>; no sampling anywhere. The
    value is real up to roundoff; a real part below -1e-8 means a kernel bug.
    """
    a = np.asarray(a, dtype=np.complex128)
    if rho.sites != 1 or a.shape != (rho_N.d, rho_N.d):
        raise DimensionMismatch("observable and reference state must be one-site objects")
    c = linalg.trace_product(a, rho.matrix)
    x = empirical_observable(a, rho_N.shape)
    b = x - c * np.eye(rho_N.shape.total_dim)
    val = complex(np.vdot(b, b @ rho_N.matrix))
    if val.real < -E_ERROR:
        raise BoundViolation(f"empirical variance {val.real:.3e} < -{E_ERROR:.1e}")
    return float(val.real)


def _product_expectation(marg_k: DensityOperator, observables, rho: DensityOperator) -> tuple[complex, complex]:
    """(joint expectation against the k-marginal, product of one-site ones)."""
    joint_obs = kron_all([np.asarray(a, dtype=np.complex128) for a in observables],
                         marg_k.shape.max_total_dim)
    joint = linalg.trace_product(joint_obs, marg_k.matrix)
    prod = 1.0 + 0.0j
    for a in observables:
        prod *= linalg.trace_product(np.asarray(a, dtype=np.complex128), rho.matrix)
    return joint, prod


def factorization_error(rho_N: DensityOperator, rho: DensityOperator, observables) -> float:
    """C_{k,N} = |tr((A_1 ox ... ox A_k) rho_N^(k)) - prod_j tr(rho A_j)|.

    Contracted against the k-site marginal; tracing the identity padding
    first is exactly the full-space contraction, at O(d^2k) instead of
    O(d^2N) cost.
    """
    observables = list(observables)
    k = len(observables)
    if k < 1:
        raise ValueError("need at least one observable")
    if k > rho_N.sites:
        raise BadSiteIndex(f"k = {k} exceeds N = {rho_N.sites}")
    marg = marginal(rho_N, k)
    joint, prod = _product_expectation(marg, observables, rho)
    return abs(joint - prod)


def combinatorial_factor(k: int, n_sites: int) -> float:
    """prod_{m=0}^{k-1} (1 - m/N): the injective-sampling fraction."""
    out = 1.0
    for m in range(k):
        out *= 1.0 - m / n_sites
    return out


def corollary_bound(
    rho: DensityOperator,
    observables,
    e_values,
    n_sites: int,
    squared: bool = True,
) -> float:
    """Closeness-rate ceiling for the factorization error of k observables.

    e_values[l] must be the empirical variance of the adjoint of
    observables[l] against the N-site state under test (l = 0..k-1).
    squared=True evaluates the printed form with squared expectation/norm
    weights; squared=False the unsquared variant. Callers report both.
    """
    observables = [np.asarray(a, dtype=np.complex128) for a in observables]
    k = len(observables)
    if k > n_sites:
        raise BadSiteIndex(f"k = {k} exceeds N = {n_sites}")
    if len(e_values) != k:
        raise DimensionMismatch(f"need {k} e-values, got {len(e_values)}")
    norms = [linalg.operator_norm(a) for a in observables]
    exps = [abs(linalg.trace_product(rho.matrix, a)) for a in observables]
    total = 0.0
    for l in range(k):
        w = 1.0
        for j in range(l):
            w *= exps[j] ** 2 if squared else exps[j]
        for j in range(l + 1, k):
            w *= norms[j] ** 2 if squared else norms[j]
        total += np.sqrt(max(float(e_values[l]), 0.0)) * w
    norm_prod = 1.0
    for nrm in norms:
        norm_prod *= nrm
    tail = 2.0 * norm_prod * (1.0 - combinatorial_factor(k, n_sites))
    return total + tail


def weyl_basis(d: int, count: int | None = None) -> list[np.ndarray]:
    """Shift/clock unitaries X^a Z^b in lexicographic (a, b) order.

    d*d unitaries spanning the operator space; the identity comes first.
    count truncates the list.
    """
    omega = np.exp(2j * np.pi / d)
    shift = np.roll(np.eye(d, dtype=np.complex128), 1, axis=0)
    clock = np.diag(omega ** np.arange(d))
    basis = []
    xa = np.eye(d, dtype=np.complex128)
    for _ in range(d):
        zb = np.eye(d, dtype=np.complex128)
        for _ in range(d):
            basis.append(xa @ zb)
            zb = zb @ clock
        xa = xa @ shift
    return basis[:count] if count is not None else basis


def weyl_labels(d: int, count: int | None = None) -> list[str]:
    labels = [f"W({a},{b})" for a in range(d) for b in range(d)]
    return labels[:count] if count is not None else labels


@dataclass(frozen=True)
class ChaosReport:
    """Everything the metrics say about one (rho_N, rho, k) triple."""

    k: int
    N: int
    chaos_distance: float
    e_values: tuple[tuple[str, float], ...]
    c_values: tuple[tuple[str, float], ...]
    corollary_bound: float
    corollary_bound_unsquared: float
    bound_satisfied: bool
    clamped_labels: tuple[str, ...]


def _tuple_label(labels, index_tuple) -> str:
    return "x".join(labels[i] for i in index_tuple)


def chaos_report(
    rho_N: DensityOperator,
    rho: DensityOperator,
    k: int,
    observables=None,
    labels=None,
    max_observables: int | None = None,
    max_tuples: int = 8,
) -> ChaosReport:
    """Aggregate the metrics for one k against an observable set.

    Defaults to the Weyl basis (truncated by max_observables). Factorization
    errors are computed for k-tuples drawn from the set in lexicographic
    order, truncated to max_tuples; each tuple's error is compared with its
    own rate bound, and bound_satisfied requires every tested tuple to pass.
    The reported corollary_bound fields belong to the tuple with the largest
    factorization error.
    """
    d = rho_N.d
    if observables is None:
        observables = weyl_basis(d, max_observables)
        labels = weyl_labels(d, max_observables)
    else:
        observables = [np.asarray(a, dtype=np.complex128) for a in observables]
        if labels is None:
            labels = [f"A{i}" for i in range(len(observables))]
    if len(labels) != len(observables):
        raise DimensionMismatch("labels and observables differ in length")

    dist = chaos_distance(rho_N, rho, k)
    marg = marginal(rho_N, k)

    e_values = []
    e_adjoint = []
    clamped = []
    for lbl, a in zip(labels, observables):
        raw = empirical_variance(rho_N, rho, a)
        val = raw
        if raw < 0.0:
            clamped.append(lbl)
            if raw >= -E_CLAMP:
                val = 0.0
        e_values.append((lbl, val))
        if linalg.is_hermitian(a):
            e_adjoint.append(max(raw, 0.0))
        else:
            e_adjoint.append(max(empirical_variance(rho_N, rho, a.conj().T), 0.0))

    m = len(observables)
    index_tuples = []
    for flat in range(min(max_tuples, m**k)):
        idx = []
        rem = flat
        for _ in range(k):
            idx.append(rem % m)
            rem //= m
        index_tuples.append(tuple(reversed(idx)))

    c_values = []
    worst_c = -1.0
    worst_bounds = (0.0, 0.0)
    all_ok = True
    for idx in index_tuples:
        obs = [observables[i] for i in idx]
        joint, prod = _product_expectation(marg, obs, rho)
        c = abs(joint - prod)
        e_vals = [e_adjoint[i] for i in idx]
        b_sq = corollary_bound(rho, obs, e_vals, rho_N.sites, squared=True)
        b_un = corollary_bound(rho, obs, e_vals, rho_N.sites, squared=False)
        c_values.append((_tuple_label(labels, idx), c))
        if c > b_sq + BOUND_SLACK:
            all_ok = False
        if c > worst_c:
            worst_c = c
            worst_bounds = (b_sq, b_un)

    return ChaosReport(
        k=k,
        N=rho_N.sites,
        chaos_distance=dist,
        e_values=tuple(e_values),
        c_values=tuple(c_values),
        corollary_bound=worst_bounds[0],
        corollary_bound_unsquared=worst_bounds[1],
        bound_satisfied=all_ok,
        clamped_labels=tuple(clamped),
    )
