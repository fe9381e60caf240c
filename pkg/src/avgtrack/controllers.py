"""The three edge-based control laws (static, modified, adaptive), the
boundary-layer nonlinearity and its discontinuous counterpart, the
Riccati-based gain design, and the ultimate-bound radii.

Conventions adopted throughout:
  * The second coupling strength and the adaptive bound constant use the
    f0*(N-1)*sqrt(N) form required by the convergence analysis; the weaker
    f0*(N-1) variant is not sufficient.
  * Auto-designed gains sit exactly at their smallest admissible values,
    c1 = 1/(2*lambda2) and c2 = f0*(N-1)*sqrt(N).
  * The adaptive law's direction term enters the control without an extra
    input-matrix factor, matching the closed-loop error dynamics; the
    filter integration applies B once.
  * The boundary layer is always evaluated at the calling agent's own
    clock, so edge antisymmetry (and hence exact average preservation)
    holds once the clocks are synchronized.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DesignError
from .graph import Topology, is_connected, lambda2
from .matkernel import as_matrix, solve_care, sym_eigen
from .signals import InputFamily, Plant

_GAIN_ATOL = 1e-12


def boundary_layer(w, t_local: float, eps: float, phi: float) -> np.ndarray:
    """Continuous direction term w / (||w|| + eps * exp(-phi * t_local)).

    The result norm is strictly below 1 for eps > 0. eps = 0 is accepted as
    the degenerate discontinuous limit (then identical to ``signum_dir``).
    """
    if eps < 0.0 or phi < 0.0:
        raise ValueError("eps and phi must be nonnegative")
    v = np.asarray(w, dtype=float)
    denom = np.linalg.norm(v) + eps * np.exp(-phi * t_local)
    if denom == 0.0:
        return np.zeros_like(v)
    return v / denom


def signum_dir(w) -> np.ndarray:
    """Unit direction w / ||w||, with 0 mapped to 0."""
    v = np.asarray(w, dtype=float)
    nrm = np.linalg.norm(v)
    if nrm == 0.0:
        return np.zeros_like(v)
    return v / nrm


@dataclass(frozen=True)
class GainSet:
    """Designed gains for one plant/topology/input-family combination.

    With K = -B^T P the quadratic-form matrix satisfies
    Gamma = P B B^T P = K^T K; that identity is enforced at construction,
    as are the lower bounds c1 >= 1/(2*lambda2) and c2 >= f0*(N-1)*sqrt(N).
    """

    p_mat: np.ndarray
    k_mat: np.ndarray
    gamma_mat: np.ndarray
    c1: float
    c2: float
    lam2: float
    f0: float
    gamma_rate: float
    eps: float
    phi: float
    agent_count: int

    def __post_init__(self):
        object.__setattr__(self, "p_mat", as_matrix(self.p_mat))
        object.__setattr__(self, "k_mat", as_matrix(self.k_mat))
        object.__setattr__(self, "gamma_mat", as_matrix(self.gamma_mat))
        expected_gamma = self.k_mat.T @ self.k_mat
        scale = max(1.0, float(np.abs(expected_gamma).max()))
        if np.abs(self.gamma_mat - expected_gamma).max() > 1e-12 * scale:
            raise ValueError("gamma_mat must equal k_mat^T @ k_mat")
        if self.eps < 0.0 or self.phi < 0.0:
            raise ValueError("eps and phi must be nonnegative")
        if self.lam2 <= 0.0 or self.gamma_rate <= 0.0:
            raise ValueError("lambda2 and gamma_rate must be positive")
        if self.f0 < 0.0:
            raise ValueError("f0 must be nonnegative")
        if self.c1 < self.c1_floor - _GAIN_ATOL:
            raise DesignError(
                f"c1 = {self.c1} below the admissible floor 1/(2*lambda2) = {self.c1_floor}"
            )
        if self.c2 < self.c2_floor - _GAIN_ATOL:
            raise DesignError(
                f"c2 = {self.c2} below the admissible floor f0*(N-1)*sqrt(N) = {self.c2_floor}"
            )

    @property
    def c1_floor(self) -> float:
        """Smallest admissible first coupling strength, 1/(2*lambda2); also
        the adaptive analysis constant alpha-bar."""
        return 1.0 / (2.0 * self.lam2)

    @property
    def c2_floor(self) -> float:
        """Smallest admissible second coupling strength, f0*(N-1)*sqrt(N);
        also the adaptive analysis constant beta-bar."""
        return self.f0 * (self.agent_count - 1) * np.sqrt(self.agent_count)

    @property
    def p_min_eig(self) -> float:
        return float(sym_eigen(self.p_mat).values[0])


@dataclass(frozen=True)
class AdaptiveParams:
    """Adaptation-rate (mu, nu) and leakage (theta, chi) constants, with the
    combined decay rate rho = max(mu*theta, nu*chi)."""

    mu: float
    nu: float
    theta: float
    chi: float
    rho: float

    def __post_init__(self):
        if min(self.mu, self.nu, self.theta, self.chi) <= 0.0:
            raise ValueError("mu, nu, theta, chi must all be positive")


def design_adaptive_params(
    gains: GainSet, mu: float, nu: float, theta: float, chi: float, strict: bool = False
) -> AdaptiveParams:
    """Bundle adaptive constants and compute rho = max(mu*theta, nu*chi).

    With strict=True the combination is rejected unless rho < gamma_rate,
    the feasibility condition for the exponential tracking bound.
    """
    params = AdaptiveParams(mu=mu, nu=nu, theta=theta, chi=chi, rho=max(mu * theta, nu * chi))
    if strict and params.rho >= gains.gamma_rate:
        raise DesignError(
            f"infeasible adaptive design: rho = {params.rho} >= gamma = {gains.gamma_rate}"
        )
    return params


def design_gains(
    plant: Plant,
    topology: Topology,
    family: InputFamily,
    q,
    eps: float,
    phi: float,
    c1: float | None = None,
    c2: float | None = None,
) -> GainSet:
    """Full gain design: Riccati solve, feedback gain, coupling strengths.

    Steps: check connectivity and stabilizability, solve the Riccati
    equation for P, set K = -B^T P and Gamma = P B B^T P, then pick
    c1 = 1/(2*lambda2) and c2 = f0*(N-1)*sqrt(N) unless explicit values are
    supplied (which must still clear those floors).

    Raises DesignError naming the failed assumption.
    """
    if not is_connected(topology):
        raise DesignError("communication graph must be connected")
    if family.agent_count != topology.vertex_count:
        raise ValueError("input family and topology disagree on the agent count")
    if family.input_dim != plant.input_dim:
        raise ValueError("input family and plant disagree on the input dimension")

    q_mat = as_matrix(q, rows=plant.state_dim, cols=plant.state_dim)
    p_mat = solve_care(plant.a, plant.b, q_mat)  # validates stabilizability and Q > 0
    k_mat = -plant.b.T @ p_mat
    gamma_mat = p_mat @ plant.b @ plant.b.T @ p_mat

    lam2 = lambda2(topology)
    f0 = family.bound()
    n_agents = topology.vertex_count
    gamma_rate = float(sym_eigen(q_mat).values[0] / sym_eigen(p_mat).values[-1])

    return GainSet(
        p_mat=p_mat,
        k_mat=k_mat,
        gamma_mat=gamma_mat,
        c1=1.0 / (2.0 * lam2) if c1 is None else float(c1),
        c2=f0 * (n_agents - 1) * np.sqrt(n_agents) if c2 is None else float(c2),
        lam2=lam2,
        f0=f0,
        gamma_rate=gamma_rate,
        eps=eps,
        phi=phi,
        agent_count=n_agents,
    )


def _direction(w, t_local: float, gains: GainSet, discontinuous: bool) -> np.ndarray:
    if discontinuous:
        return signum_dir(w)
    return boundary_layer(w, t_local, gains.eps, gains.phi)


def static_control(
    i: int,
    x_all,
    gains: GainSet,
    t_local: float,
    topology: Topology,
    discontinuous: bool = False,
):
    """Static-gain law for agent i:
    u_i = c1 * sum_j K (x_i - x_j) + c2 * sum_j h(K (x_i - x_j), t_i).

    Returns (u_i, per-edge terms), the latter mapping each neighbor j to its
    additive contribution to u_i. Only neighbor-relative states enter.
    """
    x = np.asarray(x_all, dtype=float)
    k = gains.k_mat
    u = np.zeros(k.shape[0])
    per_edge: dict[int, np.ndarray] = {}
    for j in topology.neighbors(i):
        w = k @ (x[i] - x[j])
        term = gains.c1 * w + gains.c2 * _direction(w, t_local, gains, discontinuous)
        per_edge[j] = term
        u += term
    return u, per_edge


def modified_control(
    i: int,
    x_all,
    gains: GainSet,
    t_local: float,
    topology: Topology,
    discontinuous: bool = False,
) -> np.ndarray:
    """Modified law: u_i = K x_i + c2 * sum_j h(K (x_i - x_j), t_i).

    The absolute-state feedback term removes the zero-initial-filter-state
    requirement (the filter sum then decays under the Hurwitz A + B K).
    """
    x = np.asarray(x_all, dtype=float)
    k = gains.k_mat
    u = k @ x[i]
    for j in topology.neighbors(i):
        w = k @ (x[i] - x[j])
        u = u + gains.c2 * _direction(w, t_local, gains, discontinuous)
    return u


def adaptive_control(
    i: int,
    x_all,
    gains: GainSet,
    adapt: AdaptiveParams,
    alpha,
    beta,
    t_local: float,
    topology: Topology,
    discontinuous: bool = False,
):
    """Adaptive law for agent i with per-edge coupling strengths.

    u_i = sum_j alpha_e * K (x_i - x_j) + sum_j beta_e * h(K (x_i - x_j), t_i)

    alpha and beta are indexed by the undirected edge (one shared state per
    edge, which keeps alpha_ij = alpha_ji exact). Returns (u_i, alpha_dot,
    beta_dot) where the rate dicts map edge index -> derivative:

      alpha_dot_e = mu * (-theta * alpha_e + (x_i - x_j)^T Gamma (x_i - x_j))
      beta_dot_e  = nu * (-chi * beta_e + ||w||^2 / (||w|| + eps * e^{-phi t}))

    with w = K (x_i - x_j). The boundary layer uses the calling agent's
    clock; across a shared edge the two endpoints' rates coincide once the
    clocks agree.
    """
    x = np.asarray(x_all, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    k = gains.k_mat
    u = np.zeros(k.shape[0])
    alpha_dot: dict[int, float] = {}
    beta_dot: dict[int, float] = {}
    for e, (a, b) in enumerate(topology.edges):
        if i == a:
            j = b
        elif i == b:
            j = a
        else:
            continue
        d = x[i] - x[j]
        w = k @ d
        u += alpha[e] * w + beta[e] * _direction(w, t_local, gains, discontinuous)
        nrm = np.linalg.norm(w)
        if discontinuous:
            beta_source = nrm
        else:
            layer = nrm + gains.eps * np.exp(-gains.phi * t_local)
            beta_source = nrm**2 / layer if layer > 0.0 else 0.0
        alpha_dot[e] = adapt.mu * (-adapt.theta * alpha[e] + float(d @ gains.gamma_mat @ d))
        beta_dot[e] = adapt.nu * (-adapt.chi * beta[e] + beta_source)
    return u, alpha_dot, beta_dot


@dataclass(frozen=True)
class OmegaRadii:
    """Ultimate-bound radii: omega0 for the static law with phi = 0, omega2
    and the V2 level bound omega1_level for the adaptive law."""

    omega0: float
    omega2: float | None = None
    omega1_level: float | None = None


def omega_radii(
    gains: GainSet, adapt: AdaptiveParams | None, topology: Topology
) -> OmegaRadii:
    """Evaluate the bounded-set radii for the given design.

    omega0      = sqrt(c2 * sum|N_i| * eps / (gamma * lam_min(P)))
    omega2      = sqrt(sum|N_i| * (theta*abar^2 + chi*bbar^2)
                       / (2 * lam_min(P) * (gamma - rho)))       [needs rho < gamma]
    omega1_level = (1/delta) * sum|N_i| * (theta*abar^2 + chi*bbar^2) / 2,
                   delta = min(gamma, mu*theta, nu*chi)

    with abar = 1/(2*lambda2) and bbar = f0*(N-1)*sqrt(N). omega1_level
    bounds the V2 level set, not a state-space norm.
    """
    degree_sum = float(np.sum(topology.neighbor_counts()))
    p_min = gains.p_min_eig
    omega0 = float(np.sqrt(gains.c2 * degree_sum * gains.eps / (gains.gamma_rate * p_min)))
    if adapt is None:
        return OmegaRadii(omega0=omega0)

    if adapt.rho >= gains.gamma_rate:
        raise DesignError(
            f"omega2 undefined: rho = {adapt.rho} >= gamma = {gains.gamma_rate}"
        )
    abar = gains.c1_floor
    bbar = gains.c2_floor
    leak = adapt.theta * abar**2 + adapt.chi * bbar**2
    omega2 = float(
        np.sqrt(degree_sum * leak / (2.0 * p_min * (gains.gamma_rate - adapt.rho)))
    )
    delta = min(gains.gamma_rate, adapt.mu * adapt.theta, adapt.nu * adapt.chi)
    omega1_level = float(degree_sum * leak / (2.0 * delta))
    return OmegaRadii(omega0=omega0, omega2=omega2, omega1_level=omega1_level)
