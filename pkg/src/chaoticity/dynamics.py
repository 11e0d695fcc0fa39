"""Mean-field dynamics on N sites and its one-site nonlinear limit.

The N-body generator is H_N = sum_j A_j + (1/N) sum_{i != j} V_ij (ordered
pairs), evolved exactly by conjugation with e^{-itH_N} from one cached
eigendecomposition. The limiting one-site equation

    d rho / dt = -i ( [A, rho] + tr_2 [V_12 + V_21, rho ox rho] )

is integrated with classical fixed-step RK4 under a step cap an order of
magnitude below the 1/(4 ||V||) stability scale of the flow's Lipschitz
constant. The residual checkers quantify how well the evolved marginals
satisfy the coupled hierarchy of equations relating consecutive marginal
orders, and epsilon_term measures the defect between the N-body hierarchy
and its limit, which carries the 5 n^2 ||V|| / N ceiling that drives the
propagation estimates.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import linalg
from .errors import (
    BoundViolation,
    DensityDriftExceeded,
    DimensionMismatch,
    NotHermitian,
    NotPSD,
    StepTooLarge,
    TraceNotOne,
)
from .metrics import marginal
from .states import DensityOperator, validate
from .tensor import (
    DEFAULT_MAX_TOTAL_DIM,
    Permutation,
    TensorShape,
    embed_one_body,
    embed_two_body,
    partial_trace,
    permutation_unitary,
    tensor_power,
)

# Absolute ceiling on the RK4 step; the dynamic cap below can only lower it.
DEFAULT_STEP_CAP = 0.025
# Stored trajectory states must stay densities at this drift tolerance.
TRAJECTORY_TOL = 1e-7
EPSILON_SLACK = 1e-9


@dataclass(frozen=True, eq=False)
class MeanFieldSystem:
    """One-body term a (d x d) and pair interaction v (d^2 x d^2), both Hermitian."""

    d: int
    a: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        a = linalg.require_hermitian(self.a, what="one-body term")
        v = linalg.require_hermitian(self.v, what="pair interaction")
        if a.shape != (self.d, self.d):
            raise DimensionMismatch(f"one-body term shape {a.shape}, expected ({self.d}, {self.d})")
        if v.shape != (self.d**2, self.d**2):
            raise DimensionMismatch(
                f"pair interaction shape {v.shape}, expected ({self.d**2}, {self.d**2})"
            )
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "v", v)

    def interaction_norm(self) -> float:
        return linalg.operator_norm(self.v)


def step_cap(sys: MeanFieldSystem) -> float:
    """Largest admissible RK4 step: 10x margin under the 1/(4||V||) scale."""
    return min(DEFAULT_STEP_CAP, 1.0 / (40.0 * max(sys.interaction_norm(), 1.0)))


def build_hamiltonian(
    sys: MeanFieldSystem, n_sites: int, max_total_dim: int = DEFAULT_MAX_TOTAL_DIM
) -> np.ndarray:
    """H_N = sum_j A_j + (1/N) sum over ordered pairs i != j of V_ij."""
    shape = TensorShape(sys.d, n_sites, max_total_dim)
    h = np.zeros((shape.total_dim, shape.total_dim), dtype=np.complex128)
    for j in range(1, n_sites + 1):
        h += embed_one_body(sys.a, j, shape)
    if n_sites >= 2:
        coupling = np.zeros_like(h)
        for i in range(1, n_sites + 1):
            for j in range(1, n_sites + 1):
                if i != j:
                    coupling += embed_two_body(sys.v, i, j, shape)
        h += coupling / n_sites
    return h


def build_reduced_hamiltonian(
    sys: MeanFieldSystem, n: int, n_sites: int, max_total_dim: int = DEFAULT_MAX_TOTAL_DIM
) -> np.ndarray:
    """First-n-sites generator with the full-system 1/N pair coupling.

    Note the coupling stays 1/N even though only n sites appear.
    """
    if not 1 <= n <= n_sites:
        raise ValueError(f"marginal order {n} outside 1..{n_sites}")
    shape = TensorShape(sys.d, n, max_total_dim)
    h = np.zeros((shape.total_dim, shape.total_dim), dtype=np.complex128)
    for j in range(1, n + 1):
        h += embed_one_body(sys.a, j, shape)
    if n >= 2:
        coupling = np.zeros_like(h)
        for i in range(1, n + 1):
            for j in range(1, n + 1):
                if i != j:
                    coupling += embed_two_body(sys.v, i, j, shape)
        h += coupling / n_sites
    return h


class ExactPropagator:
    """Evolves N-site states under H_N from one cached eigendecomposition.

    rho(t) = e^{-itH} rho(0) e^{itH} with e^{-itH} = U e^{-it Lambda} U†;
    the eigendecomposition is computed once and shared across all times.
    Immutable after construction, so safe to share between threads.
    """

    def __init__(self, sys: MeanFieldSystem, n_sites: int,
                 max_total_dim: int = DEFAULT_MAX_TOTAL_DIM):
        self.sys = sys
        self.shape = TensorShape(sys.d, n_sites, max_total_dim)
        h = build_hamiltonian(sys, n_sites, max_total_dim)
        self.eigenvalues, self.eigenvectors = linalg.herm_eigen(h)

    def unitary(self, t: float) -> np.ndarray:
        """e^{-itH}."""
        phases = np.exp(-1j * t * self.eigenvalues)
        u = self.eigenvectors
        return (u * phases) @ u.conj().T

    def evolve_matrix(self, m: np.ndarray, t: float) -> np.ndarray:
        if t == 0.0:
            return np.array(m, copy=True)
        e = self.unitary(t)
        return e @ m @ e.conj().T

    def evolve(self, rho: DensityOperator, t: float) -> DensityOperator:
        if rho.shape.total_dim != self.shape.total_dim or rho.d != self.shape.d:
            raise DimensionMismatch(f"state shape {rho.shape} does not match {self.shape}")
        return validate(self.evolve_matrix(rho.matrix, t), rho.shape)

    def evolve_grid(self, rho: DensityOperator, times) -> list[np.ndarray]:
        """Raw evolved matrices at many times, two matmuls per time.

        Works in the eigenbasis: rho(t) = U (rho~ o P_t) U† with
        rho~ = U† rho U and P_t[a,b] = e^{-it(l_a - l_b)}. States are not
        re-validated here; marginal() validates whatever is consumed.
        """
        u = self.eigenvectors
        rho_eig = u.conj().T @ rho.matrix @ u
        out = []
        for t in times:
            pt = np.exp(-1j * t * self.eigenvalues)
            out.append((u * pt) @ (rho_eig * pt.conj()[None, :]) @ u.conj().T)
        return out


def evolve_exact(rho: DensityOperator, sys: MeanFieldSystem, t: float) -> DensityOperator:
    """One-shot exact evolution; sweeps should hold an ExactPropagator."""
    return ExactPropagator(sys, rho.sites, rho.shape.max_total_dim).evolve(rho, t)


def _swap_conjugated(v: np.ndarray, d: int) -> np.ndarray:
    """V with its two factors exchanged: S V S with S the two-site swap."""
    s = permutation_unitary(Permutation((2, 1)), TensorShape(d, 2, max(d * d, 4)))
    return s @ v @ s


@dataclass(frozen=True, eq=False)
class HartreeTrajectory:
    """Stored states of one integration run, on the save grid."""

    times: np.ndarray
    states: tuple[DensityOperator, ...]
    step_size: float
    method: str = "rk4"

    def state_at(self, t: float, tol: float = 1e-9) -> DensityOperator:
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > tol:
            raise ValueError(
                f"t = {t} not on the stored grid (nearest {self.times[i]}, spacing tol {tol})"
            )
        return self.states[i]


def _hartree_rhs_matrix(m: np.ndarray, sys: MeanFieldSystem, w_pair: np.ndarray) -> np.ndarray:
    d = sys.d
    comm_a = sys.a @ m - m @ sys.a
    pair = np.kron(m, m)
    comm_v = w_pair @ pair - pair @ w_pair
    reduced = partial_trace(comm_v, TensorShape(d, 2, max(d * d, 4)), (2,))
    return -1j * (comm_a + reduced)


def hartree_rhs(rho: DensityOperator, sys: MeanFieldSystem) -> np.ndarray:
    """d rho / dt = -i([A, rho] + tr_2[V_12 + V_21, rho ox rho]).

    Hermitian and traceless by the commutator structure.
    """
    if rho.sites != 1:
        raise DimensionMismatch("the nonlinear flow lives on one site")
    if rho.d != sys.d:
        raise DimensionMismatch(f"state d = {rho.d}, system d = {sys.d}")
    w = sys.v + _swap_conjugated(sys.v, sys.d)
    return _hartree_rhs_matrix(rho.matrix, sys, w)


def integrate_hartree(
    rho0: DensityOperator,
    sys: MeanFieldSystem,
    t0: float,
    t1: float,
    step: float,
    save_every: int = 1,
    drift_tol: float = TRAJECTORY_TOL,
) -> HartreeTrajectory:
    """Classical fixed-step RK4 from t0 to t1.

    Every save_every-th state (plus both endpoints) is stored, re-validated
    at drift_tol; validation failure raises DensityDriftExceeded. The final
    partial step is shortened so the endpoint lands on t1 exactly.
    """
    if rho0.sites != 1:
        raise DimensionMismatch("the nonlinear flow lives on one site")
    if step <= 0:
        raise ValueError(f"step must be positive, got {step}")
    if t1 < t0:
        raise ValueError(f"t1 = {t1} precedes t0 = {t0}")
    if save_every < 1:
        raise ValueError(f"save_every must be >= 1, got {save_every}")
    cap = step_cap(sys)
    if step > cap * (1.0 + 1e-12):
        raise StepTooLarge(f"step {step} exceeds cap {cap:.6g} = min(1/40, 1/(40 max(||V||, 1)))")

    w = sys.v + _swap_conjugated(sys.v, sys.d)

    def rk4(m: np.ndarray, dt: float) -> np.ndarray:
        k1 = _hartree_rhs_matrix(m, sys, w)
        k2 = _hartree_rhs_matrix(m + 0.5 * dt * k1, sys, w)
        k3 = _hartree_rhs_matrix(m + 0.5 * dt * k2, sys, w)
        k4 = _hartree_rhs_matrix(m + dt * k3, sys, w)
        return m + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    def checked(m: np.ndarray, t: float) -> DensityOperator:
        try:
            return validate(m, rho0.shape, herm_tol=drift_tol, psd_tol=drift_tol,
                            trace_tol=drift_tol)
        except (NotHermitian, NotPSD, TraceNotOne) as exc:
            raise DensityDriftExceeded(f"state at t = {t:.6g} drifted: {exc}") from exc

    times = [t0]
    states = [rho0]
    m = rho0.matrix
    t = t0
    k = 0
    while t < t1 - 1e-15:
        dt = min(step, t1 - t)
        m = rk4(m, dt)
        k += 1
        t = t0 + k * step if dt == step else t1
        if t >= t1 - 1e-15:
            t = t1
        if k % save_every == 0 or t == t1:
            times.append(t)
            states.append(checked(m, t))
    return HartreeTrajectory(np.array(times, dtype=float), tuple(states), float(step))


class EpsilonTerm(NamedTuple):
    matrix: np.ndarray
    norm: float
    bound: float


def epsilon_term(rho_N: DensityOperator, sys: MeanFieldSystem, n: int) -> EpsilonTerm:
    """Defect between the N-body marginal flow and its limiting form at order n.

    eps_n = (1/N) sum_{i != j <= n} [V_ij, rho_N^(n)]
            - (n/N) sum_{j <= n} tr_{n+1} [V_{j,n+1} + V_{n+1,j}, rho_N^(n+1)]

    Its trace norm must stay below 5 n^2 ||V|| / N; a violation signals an
    implementation bug, not bad input.
    """
    n_sites = rho_N.sites
    if not 1 <= n <= n_sites - 1:
        raise ValueError(f"order n = {n} needs 1 <= n <= N-1 = {n_sites - 1}")
    if rho_N.d != sys.d:
        raise DimensionMismatch(f"state d = {rho_N.d}, system d = {sys.d}")

    m_n = marginal(rho_N, n).matrix
    m_np1 = marginal(rho_N, n + 1).matrix
    shape_n = rho_N.shape.reduced(n)
    shape_np1 = rho_N.shape.reduced(n + 1)

    eps = np.zeros_like(m_n)
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            if i != j:
                vij = embed_two_body(sys.v, i, j, shape_n)
                eps += vij @ m_n - m_n @ vij
    eps /= n_sites

    for j in range(1, n + 1):
        w = embed_two_body(sys.v, j, n + 1, shape_np1) + embed_two_body(
            sys.v, n + 1, j, shape_np1
        )
        comm = w @ m_np1 - m_np1 @ w
        eps -= (n / n_sites) * partial_trace(comm, shape_np1, (n + 1,))

    norm = linalg.trace_norm(eps)
    bound = 5.0 * n * n * sys.interaction_norm() / n_sites
    if norm > bound + EPSILON_SLACK:
        raise BoundViolation(
            f"epsilon norm {norm:.6e} exceeds 5 n^2 ||V|| / N = {bound:.6e} at n = {n}"
        )
    return EpsilonTerm(eps, norm, bound)


@dataclass(frozen=True)
class HierarchyResidual:
    n: int
    t: float
    residual_trace_norm: float
    epsilon_norm: float
    epsilon_bound: float


def _marginal_flow_rhs(
    sys: MeanFieldSystem, m_n: np.ndarray, m_np1: np.ndarray, n: int, n_sites: int,
    max_total_dim: int,
) -> np.ndarray:
    """[H_{n,N}, rho^(n)] + ((N-n)/N) sum_j tr_{n+1}[V_{j,n+1}+V_{n+1,j}, rho^(n+1)]."""
    h_n = build_reduced_hamiltonian(sys, n, n_sites, max_total_dim)
    rhs = h_n @ m_n - m_n @ h_n
    shape_np1 = TensorShape(sys.d, n + 1, max_total_dim)
    acc = np.zeros_like(m_n)
    for j in range(1, n + 1):
        w = embed_two_body(sys.v, j, n + 1, shape_np1) + embed_two_body(
            sys.v, n + 1, j, shape_np1
        )
        comm = w @ m_np1 - m_np1 @ w
        acc += partial_trace(comm, shape_np1, (n + 1,))
    rhs += ((n_sites - n) / n_sites) * acc
    return rhs


def bbgky_residual(
    rho0: DensityOperator,
    sys: MeanFieldSystem,
    n: int,
    t: float,
    h: float,
    propagator: ExactPropagator | None = None,
) -> HierarchyResidual:
    """Central-difference check of the coupled marginal-flow equations.

    residual = || (rho^(n)(t+h) - rho^(n)(t-h)) / 2h - (-i) RHS(t) ||_1,
    O(h^2) for the smooth exact flow. The epsilon defect at (n, t) rides
    along in the result.
    """
    if h <= 0:
        raise ValueError(f"h must be positive, got {h}")
    n_sites = rho0.sites
    if not 1 <= n <= n_sites - 1:
        raise ValueError(f"order n = {n} needs 1 <= n <= N-1 = {n_sites - 1}")
    prop = propagator if propagator is not None else ExactPropagator(
        sys, n_sites, rho0.shape.max_total_dim
    )
    r_plus = prop.evolve(rho0, t + h)
    r_minus = prop.evolve(rho0, t - h)
    r_mid = prop.evolve(rho0, t)

    lhs = (marginal(r_plus, n).matrix - marginal(r_minus, n).matrix) / (2.0 * h)
    rhs = _marginal_flow_rhs(
        sys, marginal(r_mid, n).matrix, marginal(r_mid, n + 1).matrix, n, n_sites,
        rho0.shape.max_total_dim,
    )
    residual = linalg.trace_norm(lhs - (-1j) * rhs)
    eps = epsilon_term(r_mid, sys, n)
    return HierarchyResidual(
        n=n, t=t, residual_trace_norm=residual, epsilon_norm=eps.norm, epsilon_bound=eps.bound
    )


def tensor_hierarchy_residual(
    trajectory: HartreeTrajectory, sys: MeanFieldSystem, n: int, t: float, h: float
) -> float:
    """Central-difference check that rho(t)^(ox n) obeys the limiting hierarchy.

    residual = || (rho(t+h)^n - rho(t-h)^n) / 2h
                 + i (sum_j [A_j, rho^n] + sum_j tr_{n+1}[V_{j,n+1}+V_{n+1,j}, rho^(n+1)]) ||_1

    expected O(h^2) + O(step^4). Trajectory states are looked up on the
    stored grid; t-h, t, t+h must all be grid points.
    """
    if h <= 0:
        raise ValueError(f"h must be positive, got {h}")
    r_minus = trajectory.state_at(t - h)
    r_mid = trajectory.state_at(t)
    r_plus = trajectory.state_at(t + h)
    d = r_mid.d
    budget = max(d ** (n + 1) * d ** (n + 1), DEFAULT_MAX_TOTAL_DIM)
    shape_n = TensorShape(d, n, budget) if n > 1 else TensorShape(d, 1, budget)
    shape_np1 = TensorShape(d, n + 1, budget)

    pow_mid_n = tensor_power(r_mid.matrix, n, budget)
    lhs = (tensor_power(r_plus.matrix, n, budget) - tensor_power(r_minus.matrix, n, budget)) / (
        2.0 * h
    )
    rhs = np.zeros_like(pow_mid_n)
    for j in range(1, n + 1):
        aj = embed_one_body(sys.a, j, shape_n)
        rhs += aj @ pow_mid_n - pow_mid_n @ aj
    pow_mid_np1 = tensor_power(r_mid.matrix, n + 1, budget)
    for j in range(1, n + 1):
        w = embed_two_body(sys.v, j, n + 1, shape_np1) + embed_two_body(
            sys.v, n + 1, j, shape_np1
        )
        comm = w @ pow_mid_np1 - pow_mid_np1 @ w
        rhs += partial_trace(comm, shape_np1, (n + 1,))
    return linalg.trace_norm(lhs + 1j * rhs)


def gronwall_envelope(
    times: np.ndarray,
    e_next_norms: np.ndarray,
    n: int,
    n_sites: int,
    v_norm: float,
    e0: float = 0.0,
) -> np.ndarray:
    """Right side of the one-step marginal-error bound on a time grid.

    envelope(t_i) = e0 + 5 n^2 v (t_i - t_0) / N + 4 n v * integral of the
    order-(n+1) error norms up to t_i, by cumulative trapezoid.
    """
    times = np.asarray(times, dtype=float)
    e_next = np.asarray(e_next_norms, dtype=float)
    if times.shape != e_next.shape:
        raise DimensionMismatch("times and error norms must align")
    if times.size == 0:
        return np.array([])
    dt = np.diff(times)
    chunks = 0.5 * (e_next[1:] + e_next[:-1]) * dt
    integral = np.concatenate([[0.0], np.cumsum(chunks)])
    return e0 + 5.0 * n * n * v_norm * (times - times[0]) / n_sites + 4.0 * n * v_norm * integral
