"""Reduction algorithms: the fixed-point oblique-projection method
(FWHMOR), the iterative tangential interpolation method (FWITIA),
frequency-weighted balanced truncation (FWBT), and its approximate
variant on low-rank gramians (A-FWBT), plus the biorthogonal
Gram-Schmidt kernel and the convergence machinery shared by the
iterative methods."""

import time
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from . import matdense
from .errors import (
    DimensionMismatch,
    PivotBreakdown,
    RankDeficient,
    RankTooLow,
    SingularCorrection,
    UnstableIterateWarning,
)
from .statespace import StateSpace, _augmented_f_g, eval_tf, pole_residue

__all__ = [
    "ConvergenceHistory",
    "FwhmorOptions",
    "FwitiaConfig",
    "ReductionResult",
    "afwbt",
    "biorth_gs",
    "check_convergence",
    "fwbt",
    "fwhmor",
    "fwitia",
    "fwitia_config_from_rom",
    "interp_deviation",
    "slow_pole_truncation",
]

MAX_CONSECUTIVE_UNSTABLE = 5


@dataclass(frozen=True)
class FwhmorOptions:
    """Options shared by the iterative reducers.

    Convergence is declared when the relative pole change stays at or
    below ``pole_tol`` for ``stall_window`` consecutive iterations (the
    change of iteration 1 is +inf by convention).  The secondary criteria
    track stagnation of the error-trace surrogates e1/e2 or of the
    stationarity norm instead of the poles.
    """

    max_iters: int = 200
    pole_tol: float = 1e-2
    stall_window: int = 3
    use_e_stop: bool = False
    use_xbar_stop: bool = False
    record_history: bool = True

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.pole_tol <= 0:
            raise ValueError("pole_tol must be positive")
        if self.stall_window < 1:
            raise ValueError("stall_window must be at least 1")


@dataclass
class ConvergenceHistory:
    """Per-iteration records of an iterative reduction run.

    ``pole_change[0]`` is +inf (no predecessor).  ``e1``/``e2`` and
    ``xbar_norm`` are evaluated at the iterate entering each iteration
    and are NaN whenever that iterate is not Hurwitz.
    """

    poles: list = field(default_factory=list)
    pole_change: list = field(default_factory=list)
    e1: list = field(default_factory=list)
    e2: list = field(default_factory=list)
    xbar_norm: list = field(default_factory=list)
    seconds: list = field(default_factory=list)

    def __len__(self):
        return len(self.poles)

    def append(self, poles, pole_change, e1, e2, xbar_norm, seconds):
        self.poles.append(np.asarray(poles, dtype=complex))
        self.pole_change.append(float(pole_change))
        self.e1.append(float(e1))
        self.e2.append(float(e2))
        self.xbar_norm.append(float(xbar_norm))
        self.seconds.append(float(seconds))

    def to_csv(self, path_or_buf):
        lines = ["iteration,pole_change,e1,e2,xbar_norm,seconds,poles"]
        for k in range(len(self)):
            pole_str = ";".join(
                f"{z.real:.12g}{z.imag:+.12g}j" for z in self.poles[k]
            )
            lines.append(
                f"{k + 1},{self.pole_change[k]:.12g},{self.e1[k]:.12g},"
                f"{self.e2[k]:.12g},{self.xbar_norm[k]:.12g},"
                f"{self.seconds[k]:.12g},{pole_str}"
            )
        text = "\n".join(lines) + "\n"
        if isinstance(path_or_buf, (str, bytes)) or hasattr(path_or_buf, "__fspath__"):
            with open(path_or_buf, "w") as fh:
                fh.write(text)
        else:
            path_or_buf.write(text)


@dataclass(frozen=True)
class FwitiaConfig:
    """Interpolation data: shift points and tangential directions.

    Shifts must be closed under conjugation and lie in the open right
    half-plane; directions of conjugate shifts must be conjugate.
    """

    sigma: np.ndarray  # (r,) complex
    b: np.ndarray  # (r, m) complex
    c: np.ndarray  # (r, p) complex

    def __post_init__(self):
        sigma = np.asarray(self.sigma, dtype=complex)
        b = np.atleast_2d(np.asarray(self.b, dtype=complex))
        c = np.atleast_2d(np.asarray(self.c, dtype=complex))
        if b.shape[0] != sigma.size or c.shape[0] != sigma.size:
            raise DimensionMismatch("direction counts must match shift count")
        if np.any(sigma.real <= 0):
            raise ValueError("shift points must lie in the open right half-plane")
        if not _conjugate_closed(sigma):
            raise ValueError("shift points must be closed under conjugation")
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)

    @property
    def r(self):
        return self.sigma.size


def _conjugate_closed(vals, tol=1e-8):
    vals = np.asarray(vals, dtype=complex)
    scale = max(np.max(np.abs(vals)), 1.0) if vals.size else 1.0
    for v in vals:
        if abs(v.imag) <= tol * scale:
            continue
        if np.min(np.abs(vals - np.conj(v))) > tol * scale:
            return False
    return True


@dataclass
class ReductionResult:
    """Outcome of one reduction run."""

    rom: StateSpace
    V: np.ndarray
    W: np.ndarray
    history: ConvergenceHistory
    converged: bool
    method: str
    phat: np.ndarray = None
    qhat: np.ndarray = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def iterations(self):
        return len(self.history)


def biorth_gs(P12, Q12):
    """Biorthogonal Gram-Schmidt on the column pairs of (P12, -Q12).

    Column i starts from P12[:, i] (and -Q12[:, i]) and is swept by the
    rank-one updates of the previously fixed pairs, then normalized and
    rescaled so that W^T V = I exactly.  Spans are preserved:
    span(V) = span(P12) and span(W) = span(Q12).
    """
    P12 = np.asarray(P12, dtype=float)
    Q12 = np.asarray(Q12, dtype=float)
    if P12.shape != Q12.shape:
        raise DimensionMismatch(f"shape mismatch {P12.shape} vs {Q12.shape}")
    n, r = P12.shape
    if r > n:
        raise RankDeficient(f"more columns ({r}) than rows ({n})")
    V = np.zeros((n, r))
    W = np.zeros((n, r))
    scale_v = np.linalg.norm(P12)
    scale_w = np.linalg.norm(Q12)
    for i in range(r):
        v = P12[:, i].copy()
        w = -Q12[:, i].copy()
        for k in range(i):
            v -= V[:, k] * (W[:, k] @ v)
            w -= W[:, k] * (V[:, k] @ w)
        nv, nw = np.linalg.norm(v), np.linalg.norm(w)
        if nv <= 1e-13 * max(scale_v, 1e-300) or nw <= 1e-13 * max(scale_w, 1e-300):
            raise RankDeficient(f"column {i} is dependent on previous columns")
        v /= nv
        w /= nw
        pivot = w @ v
        if abs(pivot) <= 1e-13:
            raise PivotBreakdown(
                f"near-orthogonal pair at column {i} (w^T v = {pivot:.3e})"
            )
        v /= pivot
        V[:, i] = v
        W[:, i] = w
    return V, W


def _greedy_pole_change(new, old):
    """Max relative pole change under greedy nearest-neighbor pairing."""
    new = np.asarray(new, dtype=complex)
    old = np.asarray(old, dtype=complex)
    if new.size != old.size or new.size == 0:
        return np.inf
    dist = np.abs(new[:, None] - old[None, :])
    pairs = []
    used_n, used_o = set(), set()
    order = np.dstack(np.unravel_index(np.argsort(dist, axis=None), dist.shape))[0]
    for i, j in order:
        if i in used_n or j in used_o:
            continue
        used_n.add(int(i))
        used_o.add(int(j))
        pairs.append((int(i), int(j)))
        if len(pairs) == new.size:
            break
    return max(
        abs(new[i] - old[j]) / max(abs(old[j]), 1e-300) for i, j in pairs
    )


def _stalled(values, tol, window):
    """True when the last ``window`` entries are all at or below tol."""
    if len(values) < window:
        return False
    tail = values[-window:]
    return all(np.isfinite(v) and v <= tol for v in tail)


def check_convergence(history, opts):
    """Convergence test on a recorded history.

    The primary criterion is stagnation of the relative pole change: the
    last ``stall_window`` changes all at or below ``pole_tol`` (an exact
    repeat of the previous pole set converges immediately).  The
    secondary criteria, when enabled, apply the same stagnation window to
    the relative changes of e1 and e2, or of the stationarity norm.
    """
    if len(history) == 0:
        raise ValueError("history is empty")
    if len(history) < 2:
        return False
    if history.pole_change[-1] == 0.0:
        return True
    if _stalled(history.pole_change, opts.pole_tol, opts.stall_window):
        return True
    if opts.use_e_stop:
        e1_changes = _relative_changes(history.e1)
        e2_changes = _relative_changes(history.e2)
        if _stalled(e1_changes, opts.pole_tol, opts.stall_window) and _stalled(
            e2_changes, opts.pole_tol, opts.stall_window
        ):
            return True
    if opts.use_xbar_stop:
        xb_changes = _relative_changes(history.xbar_norm)
        if _stalled(xb_changes, opts.pole_tol, opts.stall_window):
            return True
    return False


def _relative_changes(values):
    out = [np.inf]
    for prev, cur in zip(values[:-1], values[1:]):
        if not (np.isfinite(prev) and np.isfinite(cur)):
            out.append(np.inf)
        else:
            out.append(abs(cur - prev) / max(abs(prev), 1e-300))
    return out


def slow_pole_truncation(sys, r):
    """Initial reduced model from the r slowest-decaying poles.

    Projects onto the leading invariant subspace of an ordered real Schur
    form (eigenvalues sorted by descending real part).  A cheap,
    deterministic default initial guess.
    """
    if not (0 < r < sys.n):
        raise ValueError(f"need 0 < r < {sys.n}, got {r}")
    eigs = np.linalg.eigvals(sys.A)
    thr = np.sort(eigs.real)[-r]
    T, Q, sdim = sla.schur(
        sys.A, output="real", sort=lambda re, im: re >= thr - 1e-12
    )
    V = Q[:, :r]
    return StateSpace(V.T @ sys.A @ V, V.T @ sys.B, sys.C @ V, sys.D)


def _weight_data(prob):
    """Weight gramians and plant cross gramians used by every method."""
    wi, wo = prob.input_weight, prob.output_weight
    H = prob.plant
    Pi = matdense.solve_lyapunov(wi.A, wi.B @ wi.B.T).solution
    Qo = matdense.solve_lyapunov(wo.A.T, wo.C.T @ wo.C).solution
    ui = wi.C @ Pi + wi.D @ wi.B.T  # m x ni input-side driver
    uo = wo.B.T @ Qo + wo.D.T @ wo.C  # p x no output-side driver
    P13 = matdense.solve_sylvester(H.A, wi.A.T, H.B @ ui).solution
    Q14 = matdense.solve_sylvester(H.A.T, wo.A, H.C.T @ uo).solution
    return Pi, Qo, ui, uo, P13, Q14


def _rom_cross_gramians(rom, prob, ui, uo, eq_names=("rom-input", "rom-output")):
    """Cross gramians coupling the reduced model to the weights."""
    wi, wo = prob.input_weight, prob.output_weight
    try:
        P23 = matdense.solve_sylvester(rom.A, wi.A.T, rom.B @ ui).solution
    except Exception as exc:
        raise type(exc)(f"{eq_names[0]} equation: {exc}") from exc
    try:
        Q24 = matdense.solve_sylvester(rom.A.T, wo.A, -rom.C.T @ uo).solution
    except Exception as exc:
        raise type(exc)(f"{eq_names[1]} equation: {exc}") from exc
    return P23, Q24


def _rom_small_gramians(rom, prob, P23, Q24):
    """Reduced-model gramian blocks (requires a Hurwitz reduced model)."""
    wi, wo = prob.input_weight, prob.output_weight
    Pt = matdense.solve_lyapunov(
        rom.A,
        rom.B @ wi.C @ P23.T + P23 @ wi.C.T @ rom.B.T
        + rom.B @ wi.D @ wi.D.T @ rom.B.T,
    ).solution
    Qt = matdense.solve_lyapunov(
        rom.A.T,
        -rom.C.T @ wo.B.T @ Q24.T - Q24 @ wo.B @ rom.C
        + rom.C.T @ wo.D.T @ wo.D @ rom.C,
    ).solution
    return Pt, Qt


def fwhmor(prob, init=None, opts=None):
    """Fixed-point oblique-projection reduction.

    Each iteration solves the four cross-gramian Sylvester equations at
    the current iterate, biorthogonalizes (P12, -Q12), and projects.  On
    convergence the reduced model is a numerical fixed point of that map
    and nearly stationary for the weighted H2 error.  Returns a
    ReductionResult carrying the low-rank gramian approximations; a run
    that exhausts ``max_iters`` returns ``converged=False`` with the full
    history rather than raising.
    """
    opts = opts or FwhmorOptions()
    H = prob.plant
    rom = init if init is not None else slow_pole_truncation(H, prob.r)
    if rom.n != prob.r:
        raise DimensionMismatch(f"initial guess order {rom.n} != target {prob.r}")
    if rom.m != H.m or rom.p != H.p:
        raise DimensionMismatch("initial guess I/O dimensions do not match plant")
    if not np.array_equal(rom.D, H.D):
        rom = StateSpace(rom.A, rom.B, rom.C, H.D)

    Pi, Qo, ui, uo, P13, Q14 = _weight_data(prob)
    wi, wo = prob.input_weight, prob.output_weight

    history = ConvergenceHistory()
    prev_poles = np.linalg.eigvals(rom.A)
    converged = False
    n_unstable = 0
    abort_reason = None
    V = W = None

    for _ in range(opts.max_iters):
        tic = time.perf_counter()
        P23, Q24 = _rom_cross_gramians(rom, prob, ui, uo)
        P12 = matdense.solve_sylvester(
            H.A, rom.A.T,
            H.B @ wi.C @ P23.T + P13 @ wi.C.T @ rom.B.T
            + H.B @ wi.D @ wi.D.T @ rom.B.T,
        ).solution
        Q12 = matdense.solve_sylvester(
            H.A.T, rom.A,
            H.C.T @ wo.B.T @ Q24.T - Q14 @ wo.B @ rom.C
            - H.C.T @ wo.D.T @ wo.D @ rom.C,
        ).solution

        # surrogate metrics of the iterate entering this iteration
        e1 = e2 = xbar = np.nan
        if rom.is_stable(margin=0.0):
            Pt, Qt = _rom_small_gramians(rom, prob, P23, Q24)
            e1 = np.trace(2.0 * H.C @ P12 @ rom.C.T - rom.C @ Pt @ rom.C.T)
            e2 = np.trace(-2.0 * H.B.T @ Q12 @ rom.B - rom.B.T @ Qt @ rom.B)
            xbar = np.linalg.norm(Q12.T @ P12 + Qt @ Pt, 2)

        V, W = biorth_gs(P12, Q12)
        rom = StateSpace(W.T @ H.A @ V, W.T @ H.B, H.C @ V, H.D)
        poles = np.linalg.eigvals(rom.A)
        change = _greedy_pole_change(poles, prev_poles) if len(history) else np.inf
        prev_poles = poles
        history.append(poles, change, e1, e2, xbar, time.perf_counter() - tic)

        if not rom.is_stable(margin=0.0):
            n_unstable += 1
            warnings.warn(
                f"iteration {len(history)}: projected iterate is not Hurwitz",
                UnstableIterateWarning,
                stacklevel=2,
            )
            if n_unstable >= MAX_CONSECUTIVE_UNSTABLE:
                abort_reason = (
                    f"{MAX_CONSECUTIVE_UNSTABLE} consecutive unstable iterates"
                )
                break
        else:
            n_unstable = 0

        if check_convergence(history, opts):
            converged = True
            break

    phat = qhat = None
    if rom.is_stable(margin=0.0):
        P23, Q24 = _rom_cross_gramians(rom, prob, ui, uo)
        Pt, Qt = _rom_small_gramians(rom, prob, P23, Q24)
        phat = V @ Pt @ V.T
        qhat = W @ Qt @ W.T
        phat = (phat + phat.T) / 2.0
        qhat = (qhat + qhat.T) / 2.0

    diagnostics = {"rom_stable": rom.is_stable(margin=0.0)}
    if abort_reason:
        diagnostics["abort_reason"] = abort_reason
    return ReductionResult(
        rom=rom, V=V, W=W, history=history, converged=converged,
        method="FWHMOR", phat=phat, qhat=qhat, diagnostics=diagnostics,
    )


def fwitia_config_from_rom(rom, siso_unit_directions=True):
    """Interpolation data mirroring a reduced model: shifts are the
    mirrored poles, directions the residue vectors (ones for SISO)."""
    pr = pole_residue(rom)
    sigma = -pr.poles
    if siso_unit_directions and rom.m == 1 and rom.p == 1:
        b = np.ones((rom.n, 1), dtype=complex)
        c = np.ones((rom.n, 1), dtype=complex)
    else:
        b = pr.right_residues
        c = pr.left_residues
    return FwitiaConfig(sigma=sigma, b=b, c=c)


def _realify_columns(sigma, X, tol=1e-10):
    """Turn conjugate-pair Krylov columns into a real basis.

    Conjugate shift pairs contribute [Re x, Im x]; real shifts contribute
    the (real) column itself.
    """
    cols = []
    used = np.zeros(sigma.size, dtype=bool)
    scale = max(np.max(np.abs(sigma)), 1.0)
    for i, s in enumerate(sigma):
        if used[i]:
            continue
        used[i] = True
        if abs(s.imag) <= tol * scale:
            cols.append(X[:, i].real)
        else:
            cols.append(X[:, i].real)
            cols.append(X[:, i].imag)
            j_candidates = np.nonzero(~used)[0]
            if j_candidates.size:
                j = j_candidates[np.argmin(np.abs(sigma[j_candidates] - np.conj(s)))]
                if abs(sigma[j] - np.conj(s)) <= tol * scale * 10:
                    used[j] = True
    return np.column_stack(cols)


def fwitia(prob, cfg0=None, opts=None, mode="biorth"):
    """Iterative tangential interpolation reduction.

    Per iteration the shifted systems of the two augmented realizations
    are solved along the current directions, the leading state blocks are
    realified and orthonormalized, and the reduced model is projected.
    Shifts and directions are then refreshed from the reduced model's
    pole-residue form.  ``mode="correction"`` enforces W^T V = I through
    the correction factor W (V^T W)^-1; the default biorthogonal mode is
    numerically more robust.
    """
    opts = opts or FwhmorOptions()
    if mode not in ("biorth", "correction"):
        raise ValueError(f"unknown mode {mode!r}")
    H = prob.plant
    if cfg0 is None:
        cfg0 = fwitia_config_from_rom(slow_pole_truncation(H, prob.r))
    r = cfg0.r

    Pi, Qo, ui, uo, P13, Q14 = _weight_data(prob)
    F_sys, G_sys = _augmented_f_g(
        H, prob.input_weight, prob.output_weight, Pi, Qo, P13, Q14
    )
    n, ni, no = H.n, prob.input_weight.n, prob.output_weight.n

    sigma = cfg0.sigma.copy()
    bdir = cfg0.b.copy()
    cdir = cfg0.c.copy()

    history = ConvergenceHistory()
    converged = False
    prev_poles = None
    rom = None
    V = W = None

    If = np.eye(n + ni)
    Ig = np.eye(n + no)
    for _ in range(opts.max_iters):
        tic = time.perf_counter()
        Xf = np.empty((n + ni, r), dtype=complex)
        Xg = np.empty((n + no, r), dtype=complex)
        for i in range(r):
            Xf[:, i] = np.linalg.solve(sigma[i] * If - F_sys.A, F_sys.B @ bdir[i])
            Xg[:, i] = np.linalg.solve(
                sigma[i] * Ig - G_sys.A.T, G_sys.C.T @ cdir[i]
            )
        Va = _realify_columns(sigma, Xf[:n, :])
        Wa = _realify_columns(sigma, Xg[:n, :])
        if Va.shape[1] != r or Wa.shape[1] != r:
            raise RankDeficient("shift set could not be paired into a real basis")
        if np.linalg.matrix_rank(Va) < r or np.linalg.matrix_rank(Wa) < r:
            raise RankDeficient("interpolation basis lost rank")
        if mode == "correction":
            V = sla.orth(Va)
            W = sla.orth(Wa)
            M = V.T @ W
            if np.linalg.cond(M) > 1e13:
                raise SingularCorrection(
                    "V^T W is numerically singular; use mode='biorth'"
                )
            W = W @ np.linalg.inv(M)
        else:
            V, W = biorth_gs(sla.orth(Va), -sla.orth(Wa))
        rom = StateSpace(W.T @ H.A @ V, W.T @ H.B, H.C @ V, H.D)

        pr = pole_residue(rom)
        poles = pr.poles
        change = (
            _greedy_pole_change(poles, prev_poles) if prev_poles is not None else np.inf
        )
        prev_poles = poles
        history.append(poles, change, np.nan, np.nan, np.nan,
                       time.perf_counter() - tic)

        if check_convergence(history, opts):
            converged = True
            break

        sigma = -poles
        if H.m == 1 and H.p == 1:
            bdir = np.ones((r, 1), dtype=complex)
            cdir = np.ones((r, 1), dtype=complex)
        else:
            bdir = pr.right_residues
            cdir = pr.left_residues

    phat = qhat = None
    diagnostics = {"rom_stable": rom.is_stable(margin=0.0)}
    if rom.is_stable(margin=0.0):
        P23, Q24 = _rom_cross_gramians(rom, prob, ui, uo)
        Pt, Qt = _rom_small_gramians(rom, prob, P23, Q24)
        phat = V @ Pt @ V.T
        qhat = W @ Qt @ W.T
        phat = (phat + phat.T) / 2.0
        qhat = (qhat + qhat.T) / 2.0
        diagnostics.update(interp_deviation(prob, rom, _precomputed=(Pi, Qo, ui, uo, P13, Q14)))
    return ReductionResult(
        rom=rom, V=V, W=W, history=history, converged=converged,
        method="FWITIA", phat=phat, qhat=qhat, diagnostics=diagnostics,
    )


def interp_deviation(prob, rom, _precomputed=None):
    """Tangential interpolation residuals of a reduced model.

    Evaluates the mismatch of the augmented systems of plant and reduced
    model at the mirrored reduced poles, along the reduced residue
    directions.  Returns per-pole norms and their maxima.
    """
    if _precomputed is None:
        Pi, Qo, ui, uo, P13, Q14 = _weight_data(prob)
    else:
        Pi, Qo, ui, uo, P13, Q14 = _precomputed
    H = prob.plant
    F_sys, G_sys = _augmented_f_g(
        H, prob.input_weight, prob.output_weight, Pi, Qo, P13, Q14
    )
    P23, Q24 = _rom_cross_gramians(rom, prob, ui, uo)
    Ft_sys, Gt_sys = _augmented_f_g(
        rom, prob.input_weight, prob.output_weight, Pi, Qo, P23, -Q24
    )
    pr = pole_residue(rom)
    f_norms, g_norms = [], []
    for lam, r_i, l_i in zip(pr.poles, pr.right_residues, pr.left_residues):
        s = -lam
        dF = eval_tf(F_sys, s) - eval_tf(Ft_sys, s)
        dG = eval_tf(G_sys, s) - eval_tf(Gt_sys, s)
        f_norms.append(float(np.linalg.norm(dF @ r_i)))
        g_norms.append(float(np.linalg.norm(l_i @ dG)))
    return {
        "interp_F_norms": f_norms,
        "interp_G_norms": g_norms,
        "interp_F_max": max(f_norms),
        "interp_G_max": max(g_norms),
    }


def _balanced_projection(P, Q, r, rank_tol=1e-12):
    """Contragredient projection matrices from a gramian pair."""
    U = matdense.psd_factor(P, tol=rank_tol)
    L = matdense.psd_factor(Q, tol=rank_tol)
    Z, sv, Y = matdense.svd(L.T @ U)
    n_ok = int(np.sum(sv > rank_tol * (sv[0] if sv.size else 0.0)))
    if n_ok < r:
        raise RankTooLow(
            f"only {n_ok} singular values above threshold, need {r}"
        )
    if r < sv.size and sv[r - 1] - sv[r] <= 1e-12 * sv[0]:
        warnings.warn(
            f"tied singular values at the truncation boundary "
            f"({sv[r - 1]:.6e} vs {sv[r]:.6e}); keeping the first {r} by index",
            UserWarning,
            stacklevel=3,
        )
    scale = 1.0 / np.sqrt(sv[:r])
    V = U @ Y[:, :r] * scale
    W = L @ Z[:, :r] * scale
    return V, W, sv


def fwbt(prob, r=None):
    """Frequency-weighted balanced truncation.

    Solves the weighted gramian equations on the plant (the weight
    influence enters through the cross gramians), balances the pair, and
    truncates.  One-shot: the result is always marked converged; reduced
    stability is not guaranteed and is reported in the diagnostics.
    """
    r = prob.r if r is None else int(r)
    H, wi, wo = prob.plant, prob.input_weight, prob.output_weight
    _, _, ui, uo, P13, Q14 = _weight_data(prob)
    P = matdense.solve_lyapunov(
        H.A,
        H.B @ wi.C @ P13.T + P13 @ wi.C.T @ H.B.T + H.B @ wi.D @ wi.D.T @ H.B.T,
    ).solution
    Q = matdense.solve_lyapunov(
        H.A.T,
        H.C.T @ wo.B.T @ Q14.T + Q14 @ wo.B @ H.C + H.C.T @ wo.D.T @ wo.D @ H.C,
    ).solution
    return _truncate(prob, P, Q, r, method="FWBT")


def afwbt(prob, r, phat, qhat):
    """Balanced truncation on externally supplied low-rank gramians.

    Same pipeline as the weighted balanced truncation but on the
    low-rank approximations produced by a converged fixed-point run.
    Raises RankTooLow when r exceeds their numerical rank.
    """
    phat = np.asarray(phat, dtype=float)
    qhat = np.asarray(qhat, dtype=float)
    n = prob.plant.n
    if phat.shape != (n, n) or qhat.shape != (n, n):
        raise DimensionMismatch("gramian approximations must be n x n")
    return _truncate(prob, phat, qhat, int(r), method="A-FWBT")


def _truncate(prob, P, Q, r, method):
    H = prob.plant
    tic = time.perf_counter()
    V, W, sv = _balanced_projection(P, Q, r)
    rom = StateSpace(W.T @ H.A @ V, W.T @ H.B, H.C @ V, H.D)
    history = ConvergenceHistory()
    history.append(np.linalg.eigvals(rom.A), 0.0, np.nan, np.nan, np.nan,
                   time.perf_counter() - tic)
    return ReductionResult(
        rom=rom, V=V, W=W, history=history, converged=True, method=method,
        diagnostics={
            "rom_stable": rom.is_stable(margin=0.0),
            "weighted_singular_values": sv.tolist(),
        },
    )
