"""Dense linear-algebra kernels for closed-form compensation.

Everything runs in float64 regardless of the caller's storage dtype;
conditioning of the calibration Gram matrices degrades quickly at
moderate dimensions, so intermediates are never kept in float32.

Kernels: symmetric eigendecomposition, SVD, the ridge system solve
X (G + lambda I) = R, and the regularized Sylvester solve
G_q M G_k + lambda M = R via joint diagonalization.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    NoConvergence,
    NonPositiveLambda,
    NonSquare,
    NotSymmetric,
    SingularSystem,
)

# lambda == 0 solves are allowed only on systems better conditioned than this
COND_LIMIT = 1e12


def _as_f64(a) -> np.ndarray:
    return np.ascontiguousarray(np.asarray(a, dtype=np.float64))


@dataclass(frozen=True)
class SymEig:
    """Eigendecomposition A = U diag(w) U^T with w sorted descending."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns are eigenvectors, orthogonal


@dataclass(frozen=True)
class Svd:
    """Factorization A = U diag(s) V^T, singular values descending."""

    u: np.ndarray
    singular_values: np.ndarray
    v: np.ndarray

    def rank(self, rel_tol: float = 1e-10) -> int:
        s = self.singular_values
        if s.size == 0 or s[0] == 0.0:
            return 0
        return int(np.count_nonzero(s > rel_tol * s[0]))


def sym_eig(a) -> SymEig:
    """Eigendecomposition of a symmetric matrix, eigenvalues descending.

    Raises NonSquare / NotSymmetric if the input is not symmetric within
    1e-9 relative tolerance, NoConvergence if the QR iteration fails.
    """
    a = _as_f64(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NonSquare(f"expected a square matrix, got shape {a.shape}")
    scale = np.max(np.abs(a)) if a.size else 0.0
    if scale > 0 and np.max(np.abs(a - a.T)) > 1e-9 * scale:
        raise NotSymmetric("matrix is not symmetric within 1e-9 relative tolerance")
    try:
        w, u = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from exc
    order = np.argsort(w, kind="stable")[::-1]
    return SymEig(eigenvalues=w[order], eigenvectors=np.ascontiguousarray(u[:, order]))


def svd(a) -> Svd:
    """Full SVD with U, V returned so that A = U diag(s) V^T."""
    a = _as_f64(a)
    if not np.all(np.isfinite(a)):
        raise DimensionMismatch("svd input must have finite entries")
    try:
        u, s, vh = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from exc
    return Svd(u=u, singular_values=s, v=np.ascontiguousarray(vh.T))


def solve_ridge(gram, rhs, lam: float) -> np.ndarray:
    """Solve X (gram + lambda I) = rhs for X.

    gram is symmetric PSD (s x s), rhs is (k x s).  With lambda == 0 the
    system must be safely invertible (condition estimate below 1e12),
    otherwise SingularSystem is raised.
    """
    gram = _as_f64(gram)
    rhs = np.atleast_2d(_as_f64(rhs))
    if gram.ndim != 2 or gram.shape[0] != gram.shape[1]:
        raise NonSquare(f"gram must be square, got {gram.shape}")
    if rhs.shape[1] != gram.shape[0]:
        raise DimensionMismatch(
            f"rhs has {rhs.shape[1]} columns, gram is {gram.shape[0]}x{gram.shape[0]}"
        )
    if lam < 0:
        raise NonPositiveLambda("lambda must be nonnegative")
    n = gram.shape[0]
    if n == 0:
        return np.zeros_like(rhs)
    system = gram + lam * np.eye(n)
    if lam == 0.0:
        cond = np.linalg.cond(system)
        if not np.isfinite(cond) or cond > COND_LIMIT:
            raise SingularSystem(
                f"gram condition estimate {cond:.3e} exceeds {COND_LIMIT:.0e} at lambda=0"
            )
    try:
        # X A = R  <=>  A^T X^T = R^T; A is symmetric
        x = np.linalg.solve(system, rhs.T).T
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from exc
    return x


def solve_sylvester_ridge(g_q, g_k, rhs, lam: float) -> np.ndarray:
    """Solve G_q M G_k + lambda M = rhs for M by joint diagonalization.

    With G_q = U D_q U^T and G_k = V D_k V^T the solution is

        M = U ( (U^T rhs V) / (d_i e_j + lambda) ) V^T,

    elementwise over the eigenvalue outer sum.  Tiny negative eigenvalues
    of the (numerically) PSD Grams are clamped to zero so no denominator
    can fall below lambda.
    """
    g_q = _as_f64(g_q)
    g_k = _as_f64(g_k)
    rhs = _as_f64(rhs)
    if g_q.ndim != 2 or g_q.shape[0] != g_q.shape[1]:
        raise DimensionMismatch(f"g_q must be square, got {g_q.shape}")
    if g_k.ndim != 2 or g_k.shape[0] != g_k.shape[1]:
        raise DimensionMismatch(f"g_k must be square, got {g_k.shape}")
    p, r = g_q.shape[0], g_k.shape[0]
    if rhs.shape != (p, r):
        raise DimensionMismatch(f"rhs must be {p}x{r}, got {rhs.shape}")
    if not lam > 0:
        raise NonPositiveLambda("sylvester ridge requires lambda > 0")
    if p == 0 or r == 0:
        return np.zeros((p, r))
    eq = sym_eig(g_q)
    ek = sym_eig(g_k)
    dq = np.maximum(eq.eigenvalues, 0.0)
    dk = np.maximum(ek.eigenvalues, 0.0)
    u, v = eq.eigenvectors, ek.eigenvectors
    denom = np.outer(dq, dk) + lam
    core = (u.T @ rhs @ v) / denom
    return u @ core @ v.T
