"""Dense matrix kernels: real Schur form, eigendecomposition, SVD, PSD
factorization, and Bartels-Stewart style Lyapunov/Sylvester solvers.

The Sylvester/Lyapunov solvers reduce the coefficients to real Schur form
(LAPACK via scipy) and back-substitute block-columnwise over the 1x1/2x2
quasi-triangular diagonal blocks, staying in real arithmetic throughout.
A second execution path (``method="shifted"``) Schur-factors only the
small coefficient and solves shifted linear systems with the large one,
which is the layout used when the large coefficient is sparse.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from ._kernels import solve_qtri_sylvester
from .errors import (
    DimensionMismatch,
    NoConvergence,
    NotHurwitz,
    NotPSD,
    SpectrumOverlap,
)

__all__ = [
    "SchurForm",
    "SolveReport",
    "eig",
    "psd_factor",
    "real_schur",
    "solve_lyapunov",
    "solve_sylvester",
    "svd",
]


@dataclass(frozen=True)
class SchurForm:
    """Real Schur decomposition A = Q T Q^T.

    Q is orthogonal and T quasi-upper-triangular with 1x1/2x2 diagonal
    blocks; eigenvalues are readable off the diagonal blocks.
    """

    Q: np.ndarray
    T: np.ndarray

    def eigenvalues(self):
        """Eigenvalues extracted from the diagonal blocks of T."""
        return _qtri_eigenvalues(self.T)


@dataclass(frozen=True)
class SolveReport:
    """Solution of a matrix equation with its recomputed residual.

    ``relative_residual`` is the Frobenius residual scaled by
    ``|A| |X| + |B| |X| + |C|``; it is recomputed from the returned
    solution, not taken from solver internals.
    """

    solution: np.ndarray
    residual_norm: float
    relative_residual: float


def _as_square(M, name):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {M.shape}")
    if M.size and not np.all(np.isfinite(M)):
        raise ValueError(f"{name} contains non-finite entries")
    return M


def _qtri_eigenvalues(T):
    n = T.shape[0]
    vals = []
    i = 0
    while i < n:
        if i + 1 < n and T[i + 1, i] != 0.0:
            blk = T[i : i + 2, i : i + 2]
            tr = blk[0, 0] + blk[1, 1]
            det = blk[0, 0] * blk[1, 1] - blk[0, 1] * blk[1, 0]
            disc = tr * tr / 4.0 - det
            root = np.sqrt(complex(disc))
            vals.extend([tr / 2.0 + root, tr / 2.0 - root])
            i += 2
        else:
            vals.append(complex(T[i, i]))
            i += 1
    return np.array(vals, dtype=complex)


def _sort_eigs(w):
    order = np.lexsort((w.imag, np.abs(w.imag), w.real))
    return order


def real_schur(A):
    """Real Schur form of A.

    Raises NoConvergence when the underlying QR iteration fails.
    """
    A = _as_square(A, "A")
    if A.shape[0] == 0:
        return SchurForm(Q=np.zeros((0, 0)), T=np.zeros((0, 0)))
    try:
        T, Q = sla.schur(A, output="real")
    except sla.LinAlgError as exc:  # pragma: no cover - LAPACK rarely fails
        raise NoConvergence(f"Schur iteration failed: {exc}") from exc
    return SchurForm(Q=Q, T=T)


def eig(A):
    """Eigenvalues and right eigenvectors, sorted by (real, |imag|).

    Returns (w, V) with A @ V = V @ diag(w) and conjugate pairs adjacent
    (negative imaginary part first).
    """
    A = _as_square(A, "A")
    if A.shape[0] == 0:
        return np.zeros(0, dtype=complex), np.zeros((0, 0), dtype=complex)
    try:
        w, V = np.linalg.eig(A)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise NoConvergence(f"eigendecomposition failed: {exc}") from exc
    order = _sort_eigs(w)
    return w[order], V[:, order]


def svd(M):
    """Thin SVD: returns (U, s, V) with M = U @ diag(s) @ V.T."""
    M = np.asarray(M, dtype=float)
    if M.size and not np.all(np.isfinite(M)):
        raise ValueError("svd input contains non-finite entries")
    try:
        U, s, Vt = np.linalg.svd(M, full_matrices=False)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise NoConvergence(f"SVD failed: {exc}") from exc
    return U, s, Vt.T


def psd_factor(S, tol=1e-12):
    """Factor a symmetric PSD matrix as S ~ U @ U.T with U of full rank.

    The numerical rank is the eigenvalue count above ``tol * lambda_max``.
    Raises NotPSD when an eigenvalue falls below ``-tol * ||S||``.
    """
    S = _as_square(S, "S")
    n = S.shape[0]
    if n == 0:
        return np.zeros((0, 0))
    S = (S + S.T) / 2.0
    lam, V = np.linalg.eigh(S)
    lmax = lam[-1] if lam.size else 0.0
    scale = max(abs(lam[0]), abs(lmax)) if lam.size else 0.0
    if lam.size and lam[0] < -tol * scale:
        raise NotPSD(f"minimum eigenvalue {lam[0]:.3e} below -tol*||S||")
    if lmax <= 0.0:
        return np.zeros((n, 0))
    keep = lam > tol * lmax
    # descending eigenvalue order for a deterministic factor
    idx = np.nonzero(keep)[0][::-1]
    return V[:, idx] * np.sqrt(lam[idx])


def _separation(eig_a, eig_b):
    if eig_a.size == 0 or eig_b.size == 0:
        return np.inf
    return np.min(np.abs(eig_a[:, None] + eig_b[None, :]))


def _residual_report(X, a_norm, b_norm, c_norm, resid):
    rnorm = float(np.linalg.norm(resid))
    denom = a_norm * np.linalg.norm(X) + b_norm * np.linalg.norm(X) + c_norm
    rel = rnorm / denom if denom > 0 else rnorm
    return SolveReport(solution=X, residual_norm=rnorm, relative_residual=float(rel))


def solve_sylvester(A, B, C, method="schur", sep_tol=1e-12):
    """Solve A @ X + X @ B + C = 0.

    Parameters
    ----------
    A : (n, n) array
    B : (k, k) array
    C : (n, k) array
    method : {"schur", "shifted"}
        "schur" reduces both coefficients to real Schur form and
        back-substitutes.  "shifted" Schur-factors only B and solves
        shifted linear systems with A, the layout appropriate when A is
        large and B small; both paths agree to solver accuracy.
    sep_tol : float
        Spectra of A and -B must be separated by
        ``sep_tol * (||A|| + ||B||)``.

    Returns
    -------
    SolveReport

    Raises
    ------
    SpectrumOverlap
        When the separation test fails (e.g. a reduction iterate with a
        pole mirroring a plant pole).
    """
    A = _as_square(A, "A")
    B = _as_square(B, "B")
    C = np.asarray(C, dtype=float)
    n, k = A.shape[0], B.shape[0]
    if C.shape != (n, k):
        raise DimensionMismatch(f"C must be {(n, k)}, got {C.shape}")
    if n == 0 or k == 0:
        return SolveReport(np.zeros((n, k)), 0.0, 0.0)

    a_norm = np.linalg.norm(A)
    b_norm = np.linalg.norm(B)
    c_norm = np.linalg.norm(C)

    sb = real_schur(B)
    eig_b = sb.eigenvalues()
    if method == "schur":
        sa = real_schur(A)
        eig_a = sa.eigenvalues()
    else:
        eig_a = np.linalg.eigvals(A)
    sep = _separation(eig_a, eig_b)
    if sep <= sep_tol * (a_norm + b_norm):
        raise SpectrumOverlap(
            f"spectra of A and -B separated by only {sep:.3e}"
        )

    if method == "schur":
        F = sa.Q.T @ C @ sb.Q
        Y = solve_qtri_sylvester(
            np.ascontiguousarray(sa.T),
            np.ascontiguousarray(sb.T),
            np.ascontiguousarray(F),
        )
        X = sa.Q @ Y @ sb.Q.T
    elif method == "shifted":
        X = _solve_shifted(A, sb, C)
    else:
        raise ValueError(f"unknown method {method!r}")

    resid = A @ X + X @ B + C
    return _residual_report(X, a_norm, b_norm, c_norm, resid)


def _solve_shifted(A, sb, C):
    """Sylvester solve that factors only B; A enters via shifted solves."""
    n = A.shape[0]
    TB, QB = sb.T, sb.Q
    F = C @ QB
    k = TB.shape[0]
    Y = np.zeros((n, k))
    I = np.eye(n)
    j = 0
    while j < k:
        two = j + 1 < k and TB[j + 1, j] != 0.0
        js = 2 if two else 1
        rhs = -(F[:, j : j + js] + Y[:, :j] @ TB[:j, j : j + js])
        S = TB[j : j + js, j : j + js]
        if not two:
            Y[:, j : j + 1] = np.linalg.solve(A + S[0, 0] * I, rhs)
        else:
            lam, W = np.linalg.eig(S)
            Z = np.empty((n, 2), dtype=complex)
            RW = rhs @ W
            for c in range(2):
                Z[:, c] = np.linalg.solve(A + lam[c] * I, RW[:, c])
            Y[:, j : j + 2] = (Z @ np.linalg.inv(W)).real
        j += js
    return Y @ QB.T


def solve_lyapunov(A, Qsym, sep_tol=1e-12):
    """Solve A @ X + X @ A.T + Qsym = 0 for Hurwitz A, symmetric Qsym.

    The solution is explicitly symmetrized.  Raises NotHurwitz when A has
    an eigenvalue with nonnegative real part.
    """
    A = _as_square(A, "A")
    Qsym = _as_square(Qsym, "Qsym")
    n = A.shape[0]
    if Qsym.shape[0] != n:
        raise DimensionMismatch(f"Qsym must be {(n, n)}, got {Qsym.shape}")
    if n == 0:
        return SolveReport(np.zeros((0, 0)), 0.0, 0.0)

    sa = real_schur(A)
    eig_a = sa.eigenvalues()
    if np.max(eig_a.real) >= 0.0:
        raise NotHurwitz(
            f"spectral abscissa {np.max(eig_a.real):.3e} is not negative"
        )
    sep = _separation(eig_a, eig_a)
    a_norm = np.linalg.norm(A)
    if sep <= sep_tol * 2 * a_norm:  # pragma: no cover - excluded by Hurwitz
        raise SpectrumOverlap(f"eigenvalue separation {sep:.3e} too small")

    T, Q = sa.T, sa.Q
    F = Q.T @ Qsym @ Q
    Y = solve_qtri_sylvester(
        np.ascontiguousarray(T),
        np.ascontiguousarray(T.T),
        np.ascontiguousarray(F),
        tb_lower=True,
    )
    X = Q @ Y @ Q.T
    X = (X + X.T) / 2.0
    resid = A @ X + X @ A.T + Qsym
    return _residual_report(X, a_norm, a_norm, np.linalg.norm(Qsym), resid)
