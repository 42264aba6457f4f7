"""System norms and frequency-response data: H2 via both gramian trace
formulas, H-infinity via a scan-and-refine peak search, and singular
value sweeps."""

from dataclasses import dataclass

import numpy as np

from . import matdense
from .errors import (
    DimensionMismatch,
    NonzeroFeedthrough,
    NumericalInconsistency,
    UnstableSystem,
)
from .statespace import eval_tf

__all__ = ["SigmaData", "h2_norm", "hinf_norm", "sigma_sweep"]

# feedthrough below this Frobenius norm is treated as structurally zero
FEEDTHROUGH_DUST = 1e-14


def _require_stable(sys, op):
    if not sys.is_stable(margin=0.0):
        raise UnstableSystem(
            f"{op} requires a stable system "
            f"(spectral abscissa {sys.spectral_abscissa():.3e})"
        )


def h2_norm(sys, agree_tol=1e-8):
    """H2 norm computed from the controllability gramian.

    Both trace formulas tr(C P C^T) and tr(B^T Q B) are evaluated and must
    agree to ``agree_tol`` relative; disagreement indicates a broken
    gramian solve and raises NumericalInconsistency.
    """
    _require_stable(sys, "h2_norm")
    if np.linalg.norm(sys.D) > FEEDTHROUGH_DUST:
        raise NonzeroFeedthrough(
            f"||D|| = {np.linalg.norm(sys.D):.3e}; H2 norm is infinite"
        )
    if sys.n == 0:
        return 0.0
    P = matdense.solve_lyapunov(sys.A, sys.B @ sys.B.T).solution
    Q = matdense.solve_lyapunov(sys.A.T, sys.C.T @ sys.C).solution
    val_c = float(np.trace(sys.C @ P @ sys.C.T))
    val_o = float(np.trace(sys.B.T @ Q @ sys.B))
    scale = max(abs(val_c), abs(val_o), 1e-300)
    if abs(val_c - val_o) > agree_tol * scale:
        raise NumericalInconsistency(
            f"gramian trace formulas disagree: {val_c:.12e} vs {val_o:.12e}"
        )
    return float(np.sqrt(max(val_c, 0.0)))


def _sigma_max(sys, omega):
    G = eval_tf(sys, 1j * omega)
    return float(np.linalg.norm(G, 2))


def _golden_refine(f, lo, hi, rel_tol, max_iter=200):
    """Golden-section maximization of f over log-spaced [lo, hi]."""
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = np.log(lo), np.log(hi)
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(np.exp(c)), f(np.exp(d))
    for _ in range(max_iter):
        if b - a < 0.1 * np.sqrt(rel_tol):
            break
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(np.exp(c))
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(np.exp(d))
    if fc > fd:
        return np.exp(c), fc
    return np.exp(d), fd


def hinf_norm(sys, rel_tol=1e-6):
    """Peak of sigma_max(G(j omega)) over [0, inf] and the attaining
    frequency.

    A 256-point log grid over [1e-4, 1e4] scaled by the spectral radius
    brackets candidate peaks; each bracket is refined by golden-section
    search.  The endpoint values at omega = 0 and omega = inf
    (sigma_max(D)) compete with the refined interior peaks.
    """
    _require_stable(sys, "hinf_norm")
    d_gain = float(np.linalg.norm(sys.D, 2)) if sys.D.size else 0.0
    if sys.n == 0:
        return d_gain, 0.0
    rho = float(np.max(np.abs(np.linalg.eigvals(sys.A))))
    if rho == 0.0:
        rho = 1.0
    grid = np.logspace(np.log10(1e-4 * rho), np.log10(1e4 * rho), 256)
    vals = np.array([_sigma_max(sys, w) for w in grid])

    best_val = _sigma_max(sys, 0.0)
    best_w = 0.0
    if d_gain > best_val:
        best_val, best_w = d_gain, np.inf

    f = lambda w: _sigma_max(sys, w)
    interior = np.nonzero(
        (vals[1:-1] >= vals[:-2]) & (vals[1:-1] >= vals[2:])
    )[0] + 1
    # also refine around the global grid maximum in case it sits at an edge
    candidates = set(interior.tolist()) | {int(np.argmax(vals))}
    for i in candidates:
        lo = grid[max(i - 1, 0)]
        hi = grid[min(i + 1, len(grid) - 1)]
        w_pk, v_pk = _golden_refine(f, lo, hi, rel_tol)
        if v_pk > best_val:
            best_val, best_w = v_pk, w_pk
    return best_val, best_w


@dataclass(frozen=True)
class SigmaData:
    """Frequency grid with per-frequency singular values of G(j omega).

    ``frequencies`` is strictly ascending; each row of
    ``singular_values`` is nonincreasing.
    """

    frequencies: np.ndarray  # (nf,)
    singular_values: np.ndarray  # (nf, min(p, m))

    def __post_init__(self):
        freqs = np.asarray(self.frequencies, dtype=float)
        svs = np.atleast_2d(np.asarray(self.singular_values, dtype=float))
        if freqs.ndim != 1 or svs.shape[0] != freqs.size:
            raise DimensionMismatch("frequency/singular-value lengths differ")
        if freqs.size > 1 and not np.all(np.diff(freqs) > 0):
            raise ValueError("frequencies must be strictly ascending")
        if svs.shape[1] > 1 and np.any(np.diff(svs, axis=1) > 1e-12):
            raise ValueError("singular values must be nonincreasing per row")
        object.__setattr__(self, "frequencies", freqs)
        object.__setattr__(self, "singular_values", svs)

    def to_csv(self, path_or_buf):
        header = "omega," + ",".join(
            f"sigma_{i + 1}" for i in range(self.singular_values.shape[1])
        )
        lines = [header]
        for w, row in zip(self.frequencies, self.singular_values):
            lines.append(",".join(f"{x:.12g}" for x in (w, *row)))
        text = "\n".join(lines) + "\n"
        if isinstance(path_or_buf, (str, bytes)) or hasattr(path_or_buf, "__fspath__"):
            with open(path_or_buf, "w") as fh:
                fh.write(text)
        else:
            path_or_buf.write(text)

    @classmethod
    def from_csv(cls, path_or_buf):
        if isinstance(path_or_buf, (str, bytes)) or hasattr(path_or_buf, "__fspath__"):
            with open(path_or_buf) as fh:
                text = fh.read()
        else:
            text = path_or_buf.read()
        rows = [line.split(",") for line in text.strip().splitlines()]
        data = np.array([[float(x) for x in row] for row in rows[1:]])
        return cls(frequencies=data[:, 0], singular_values=data[:, 1:])


def sigma_sweep(sys, omega_lo, omega_hi, n_points):
    """Singular values of G(j omega) on a log-spaced grid."""
    if not (0 < omega_lo < omega_hi):
        raise ValueError(f"need 0 < omega_lo < omega_hi, got [{omega_lo}, {omega_hi}]")
    if n_points < 2:
        raise ValueError("n_points must be at least 2")
    grid = np.logspace(np.log10(omega_lo), np.log10(omega_hi), n_points)
    svs = []
    for w in grid:
        G = eval_tf(sys, 1j * w)
        svs.append(np.linalg.svd(G, compute_uv=False))
    return SigmaData(frequencies=grid, singular_values=np.array(svs))
