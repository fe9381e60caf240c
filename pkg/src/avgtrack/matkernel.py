"""Dense real-matrix kernel: symmetric eigendecomposition, Lyapunov solves,
stabilizability test, and the continuous algebraic Riccati equation solver
used by the gain design.

Everything here is a pure function of its inputs and sized for small dense
problems (n up to a few tens).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DesignError, NumericalError

# Rank decisions treat singular values below RANK_RTOL * sigma_max as zero.
RANK_RTOL = 1e-10

# Cyclic Jacobi sweep cap and off-diagonal stopping threshold (relative to
# the Frobenius norm of the input).
_JACOBI_MAX_SWEEPS = 100
_JACOBI_OFF_RTOL = 1e-12

_SYMMETRY_RTOL = 1e-12


def as_matrix(values, rows: int | None = None, cols: int | None = None) -> np.ndarray:
    """Validate and return a 2-D float64 array with all entries finite."""
    m = np.asarray(values, dtype=float)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got ndim={m.ndim}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix entries must be finite")
    if rows is not None and m.shape[0] != rows:
        raise ValueError(f"expected {rows} rows, got {m.shape[0]}")
    if cols is not None and m.shape[1] != cols:
        raise ValueError(f"expected {cols} columns, got {m.shape[1]}")
    return m


def _require_symmetric(s: np.ndarray, what: str) -> np.ndarray:
    if s.shape[0] != s.shape[1]:
        raise ValueError(f"{what} must be square, got shape {s.shape}")
    scale = np.linalg.norm(s)
    if np.linalg.norm(s - s.T) > _SYMMETRY_RTOL * max(scale, 1e-300):
        raise ValueError(f"{what} must be symmetric")
    return 0.5 * (s + s.T)


@dataclass(frozen=True)
class Eigen:
    """Symmetric eigendecomposition: ascending eigenvalues and an orthonormal
    column basis with S @ vectors[:, k] = values[k] * vectors[:, k]."""

    values: np.ndarray
    vectors: np.ndarray


def sym_eigen(s) -> Eigen:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Raises ValueError for non-square or asymmetric input and NumericalError
    if the off-diagonal mass has not vanished after the sweep cap.
    """
    a = _require_symmetric(as_matrix(s), "sym_eigen input")
    n = a.shape[0]
    v = np.eye(n)
    if n == 1:
        return Eigen(values=a.diagonal().copy(), vectors=v)

    threshold = _JACOBI_OFF_RTOL * max(np.linalg.norm(a), 1e-300)

    def off(m):
        o = m - np.diag(m.diagonal())
        return np.linalg.norm(o)

    converged = False
    for _ in range(_JACOBI_MAX_SWEEPS):
        if off(a) <= threshold:
            converged = True
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= threshold / (n * n):
                    continue
                app, aqq = a[p, p], a[q, q]
                tau = (aqq - app) / (2.0 * apq)
                t = np.sign(tau) / (abs(tau) + np.hypot(1.0, tau)) if tau != 0 else 1.0
                c = 1.0 / np.hypot(1.0, t)
                sn = t * c
                # symmetric two-sided update; exact zero in the (p, q) slot
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                new_p = c * col_p - sn * col_q
                new_q = sn * col_p + c * col_q
                a[:, p] = new_p
                a[p, :] = new_p
                a[:, q] = new_q
                a[q, :] = new_q
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = 0.0
                a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - sn * vq
                v[:, q] = sn * vp + c * vq
    else:
        converged = off(a) <= threshold
    if not converged:
        raise NumericalError(
            f"Jacobi eigendecomposition did not converge in {_JACOBI_MAX_SWEEPS} sweeps"
        )

    values = a.diagonal().copy()
    order = np.argsort(values, kind="stable")
    return Eigen(values=values[order], vectors=v[:, order])


def eigvals_general(a) -> np.ndarray:
    """Eigenvalues of a general (possibly asymmetric) real matrix."""
    return np.linalg.eigvals(as_matrix(a))


def is_hurwitz(a, margin: float = 0.0) -> bool:
    """True when every eigenvalue of ``a`` has real part < -margin."""
    return bool(np.max(eigvals_general(a).real) < -margin)


def solve_lyapunov(f, w) -> np.ndarray:
    """Solve F^T X + X F + W = 0 for symmetric X, given Hurwitz F.

    The n^2 x n^2 Kronecker-vectorized system is solved densely, which is
    fine at the problem sizes in scope.
    """
    fm = as_matrix(f)
    wm = _require_symmetric(as_matrix(w), "Lyapunov right-hand side")
    n = fm.shape[0]
    if fm.shape[0] != fm.shape[1]:
        raise ValueError("F must be square")
    if wm.shape[0] != n:
        raise ValueError("F and W dimensions differ")
    if not is_hurwitz(fm):
        raise DesignError("Lyapunov equation requires a Hurwitz coefficient matrix")

    eye = np.eye(n)
    system = np.kron(eye, fm.T) + np.kron(fm.T, eye)
    try:
        x_vec = np.linalg.solve(system, -wm.flatten(order="F"))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"singular vectorized Lyapunov system: {exc}") from exc
    x = x_vec.reshape((n, n), order="F")
    return 0.5 * (x + x.T)


def is_stabilizable(a, b) -> bool:
    """PBH stabilizability test: rank [A - lambda*I, B] = n for every
    eigenvalue lambda of A with nonnegative real part.

    The PBH matrix is evaluated in complex arithmetic; ``pbh_rank_real``
    provides the equivalent real stacked form for cross-checking.
    """
    am = as_matrix(a)
    n = am.shape[0]
    if am.shape[0] != am.shape[1]:
        raise ValueError("A must be square")
    bm = as_matrix(b, rows=n)

    for lam in eigvals_general(am):
        if lam.real < 0.0:
            continue
        pbh = np.hstack([am - lam * np.eye(n), bm]).astype(complex)
        sigma = np.linalg.svd(pbh, compute_uv=False)
        if np.sum(sigma > RANK_RTOL * sigma[0]) < n:
            return False
    return True


def pbh_rank_real(a, b, sigma_re: float, omega_im: float) -> int:
    """Rank of the real stacked PBH form [ (A-sI)^2 + w^2 I, B, (A-sI)B ]
    for the conjugate eigenvalue pair s +- j*w. Agrees with the complex
    PBH rank decision; kept for validation."""
    am = as_matrix(a)
    n = am.shape[0]
    bm = as_matrix(b, rows=n)
    shifted = am - sigma_re * np.eye(n)
    stacked = np.hstack([shifted @ shifted + omega_im**2 * np.eye(n), bm, shifted @ bm])
    sv = np.linalg.svd(stacked, compute_uv=False)
    return int(np.sum(sv > RANK_RTOL * sv[0]))


def _care_residual(p, a, b, q) -> np.ndarray:
    return p @ a + a.T @ p - p @ b @ b.T @ p + q


def _dre_seed(a, b, q, max_steps: int = 20000) -> np.ndarray:
    """Integrate dP/dt = PA + A^T P - P B B^T P + Q from P(0) = Q until the
    gain stabilizes A, for use as a Newton-Kleinman starting point."""
    bbt = b @ b.T

    def rhs(p):
        return p @ a + a.T @ p - p @ bbt @ p + q

    scale = max(1.0, np.linalg.norm(a), np.linalg.norm(q))
    dt = 0.05 / scale
    for _ in range(4):  # retry with a smaller step on blow-up
        p = q.copy()
        ok = True
        for step in range(max_steps):
            k1 = rhs(p)
            k2 = rhs(p + 0.5 * dt * k1)
            k3 = rhs(p + 0.5 * dt * k2)
            k4 = rhs(p + dt * k3)
            p = p + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            p = 0.5 * (p + p.T)
            if not np.all(np.isfinite(p)):
                ok = False
                break
            if step % 10 == 9 and is_hurwitz(a - bbt @ p):
                return p
        if ok and is_hurwitz(a - bbt @ p):
            return p
        dt *= 0.1
    raise NumericalError("differential Riccati seeding failed to stabilize the plant")


def solve_care(a, b, q, max_iter: int = 60) -> np.ndarray:
    """Stabilizing solution of P A + A^T P - P B B^T P + Q = 0.

    Newton-Kleinman iteration, each step a dense Lyapunov solve. When A is
    already Hurwitz the iteration starts from the zero gain; otherwise a
    forward integration of the differential Riccati equation supplies a
    stabilizing seed that Newton-Kleinman then polishes.

    Args:
        a: plant matrix, n x n.
        b: input matrix, n x p.
        q: symmetric positive-definite state weight.

    Returns:
        Symmetric positive-definite P with A - B B^T P Hurwitz.

    Raises:
        DesignError: unstabilizable pair or Q not positive definite.
        NumericalError: iteration failure.
    """
    am = as_matrix(a)
    n = am.shape[0]
    if am.shape[0] != am.shape[1]:
        raise ValueError("A must be square")
    bm = as_matrix(b, rows=n)
    qm = _require_symmetric(as_matrix(q, rows=n, cols=n), "Q")
    if sym_eigen(qm).values[0] <= 0.0:
        raise DesignError("Q must be positive definite")
    if not is_stabilizable(am, bm):
        raise DesignError("(A, B) is not stabilizable")

    bbt = bm @ bm.T
    p = np.zeros((n, n)) if is_hurwitz(am) else _dre_seed(am, bm, qm)

    best_p, best_res = None, np.inf
    prev_res = np.inf
    for _ in range(max_iter):
        f = am - bbt @ p
        w = qm + p @ bbt @ p
        try:
            p_next = solve_lyapunov(f, 0.5 * (w + w.T))
        except DesignError as exc:  # iterate lost stabilizing property
            raise NumericalError(f"Riccati iterate became unstable: {exc}") from exc
        p_next = 0.5 * (p_next + p_next.T)
        residual = np.linalg.norm(_care_residual(p_next, am, bm, qm))
        p = p_next
        if residual < best_res:
            best_p, best_res = p_next, residual
        scale = max(1.0, np.linalg.norm(p))
        if residual <= 1e-13 * scale:
            break
        if residual >= 0.5 * prev_res and residual <= 1e-9 * scale:
            break  # quadratic phase exhausted; at the round-off floor
        prev_res = residual
    if best_p is None or best_res > 1e-7 * max(1.0, np.linalg.norm(best_p)):
        raise NumericalError(f"Riccati iteration did not converge in {max_iter} steps")
    p = best_p

    if sym_eigen(p).values[0] <= 0.0:
        raise NumericalError("Riccati solution is not positive definite")
    if not is_hurwitz(am - bbt @ p):
        raise NumericalError("Riccati solution does not stabilize the plant")
    return p
