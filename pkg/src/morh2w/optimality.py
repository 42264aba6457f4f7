"""First-order optimality diagnostics for the weighted reduction problem:
the block partition of the weighted-error gramians, the deviation
quantities entering the stationarity conditions, the additive error
splits, the low-rank gramian residuals, and finite-difference oracles
for the gradient formulas.

Sign conventions.  With the deviation matrices defined below, the total
derivatives of the squared weighted H2 error are

    d/dA~ = 2 (Xbar + X),
    d/dB~ = 2 (Ybar Di Di^T + Y),
    d/dC~ = -2 (Do^T Do Zbar + Z),

each verified against central differences in the test suite.  Zbar keeps
the customary orientation C P12 - C~ P~, which is why the C-gradient
carries the leading minus sign.
"""

from dataclasses import dataclass

import numpy as np

from . import matdense
from .errors import DimensionMismatch, NotHurwitz, PerturbationUnstable
from .statespace import StateSpace, weighted_error_realization

__all__ = [
    "GramianPartition",
    "OptimalityReport",
    "deviation_report",
    "fd_gradient",
    "hat_gramians",
    "weighted_gramians",
]


@dataclass(frozen=True)
class GramianPartition:
    """Blocks of the weighted-error gramians, sliced on (n, r, n_i, n_o).

    ``P``/``Q`` are the plant blocks, ``Pt``/``Qt`` the reduced-model
    blocks (the "tilde" blocks), ``Pi``/``Qi`` the input-weight blocks
    and ``Po``/``Qo`` the output-weight blocks; the off-diagonal names
    follow the block positions of the (plant, rom, input weight, output
    weight) ordering.
    """

    dims: tuple  # (n, r, ni, no)
    P: np.ndarray
    P12: np.ndarray
    P13: np.ndarray
    P14: np.ndarray
    Pt: np.ndarray
    P23: np.ndarray
    P24: np.ndarray
    Pi: np.ndarray
    P34: np.ndarray
    Po: np.ndarray
    Q: np.ndarray
    Q12: np.ndarray
    Q13: np.ndarray
    Q14: np.ndarray
    Qt: np.ndarray
    Q23: np.ndarray
    Q24: np.ndarray
    Qi: np.ndarray
    Q34: np.ndarray
    Qo: np.ndarray

    def assemble(self):
        """Reassemble the full symmetric gramians (for residual checks)."""
        n, r, ni, no = self.dims
        N = n + r + ni + no
        Pw = np.zeros((N, N))
        Qw = np.zeros((N, N))
        off = np.cumsum([0, n, r, ni, no])

        def put(M, i, j, blk):
            M[off[i]:off[i + 1], off[j]:off[j + 1]] = blk
            if i != j:
                M[off[j]:off[j + 1], off[i]:off[i + 1]] = blk.T

        put(Pw, 0, 0, self.P); put(Pw, 0, 1, self.P12)
        put(Pw, 0, 2, self.P13); put(Pw, 0, 3, self.P14)
        put(Pw, 1, 1, self.Pt); put(Pw, 1, 2, self.P23); put(Pw, 1, 3, self.P24)
        put(Pw, 2, 2, self.Pi); put(Pw, 2, 3, self.P34)
        put(Pw, 3, 3, self.Po)
        put(Qw, 0, 0, self.Q); put(Qw, 0, 1, self.Q12)
        put(Qw, 0, 2, self.Q13); put(Qw, 0, 3, self.Q14)
        put(Qw, 1, 1, self.Qt); put(Qw, 1, 2, self.Q23); put(Qw, 1, 3, self.Q24)
        put(Qw, 2, 2, self.Qi); put(Qw, 2, 3, self.Q34)
        put(Qw, 3, 3, self.Qo)
        return Pw, Qw


def _slice_partition(dims, Pw, Qw):
    n, r, ni, no = dims
    off = np.cumsum([0, n, r, ni, no])

    def blk(M, i, j):
        return M[off[i]:off[i + 1], off[j]:off[j + 1]].copy()

    return GramianPartition(
        dims=dims,
        P=blk(Pw, 0, 0), P12=blk(Pw, 0, 1), P13=blk(Pw, 0, 2), P14=blk(Pw, 0, 3),
        Pt=blk(Pw, 1, 1), P23=blk(Pw, 1, 2), P24=blk(Pw, 1, 3),
        Pi=blk(Pw, 2, 2), P34=blk(Pw, 2, 3), Po=blk(Pw, 3, 3),
        Q=blk(Qw, 0, 0), Q12=blk(Qw, 0, 1), Q13=blk(Qw, 0, 2), Q14=blk(Qw, 0, 3),
        Qt=blk(Qw, 1, 1), Q23=blk(Qw, 1, 2), Q24=blk(Qw, 1, 3),
        Qi=blk(Qw, 2, 2), Q34=blk(Qw, 2, 3), Qo=blk(Qw, 3, 3),
    )


def _check_blocks_stable(prob, Hr):
    names = {
        "plant": prob.plant,
        "rom": Hr,
        "input_weight": prob.input_weight,
        "output_weight": prob.output_weight,
    }
    for name, sys in names.items():
        if not sys.is_stable(margin=0.0):
            raise NotHurwitz(
                f"{name} block is not Hurwitz "
                f"(spectral abscissa {sys.spectral_abscissa():.3e})"
            )


def weighted_gramians(prob, Hr, method="full"):
    """Gramian partition of the weighted error system for a reduced model.

    ``method="full"`` solves the two Lyapunov equations on the assembled
    weighted realization and slices blocks (the reference path);
    ``method="blocks"`` assembles the same partition block-by-block from
    the coupled Sylvester equations.  Both paths agree to solver accuracy
    and that agreement is itself under test.
    """
    _check_blocks_stable(prob, Hr)
    if method == "full":
        sysw = weighted_error_realization(prob, Hr)
        Pw = matdense.solve_lyapunov(sysw.A, sysw.B @ sysw.B.T).solution
        Qw = matdense.solve_lyapunov(sysw.A.T, sysw.C.T @ sysw.C).solution
        return _slice_partition(prob.dims[:1] + (Hr.n,) + prob.dims[2:], Pw, Qw)
    if method == "blocks":
        return _blockwise_gramians(prob, Hr)
    raise ValueError(f"unknown method {method!r}")


def _sylv(A, B, C):
    return matdense.solve_sylvester(A, B, C).solution


def _lyap(A, Q):
    return matdense.solve_lyapunov(A, Q).solution


def _blockwise_gramians(prob, Hr):
    """Partition assembled from the individual block equations."""
    H, wi, wo = prob.plant, prob.input_weight, prob.output_weight
    A, B, C = H.A, H.B, H.C
    At, Bt, Ct = Hr.A, Hr.B, Hr.C
    Ai, Bi, Ci, Di = wi.A, wi.B, wi.C, wi.D
    Ao, Bo, Co, Do = wo.A, wo.B, wo.C, wo.D

    Pi = _lyap(Ai, Bi @ Bi.T)
    Qo = _lyap(Ao.T, Co.T @ Co)
    P13 = _sylv(A, Ai.T, B @ (Ci @ Pi + Di @ Bi.T))
    Q14 = _sylv(A.T, Ao, C.T @ (Bo.T @ Qo + Do.T @ Co))
    P23 = _sylv(At, Ai.T, Bt @ (Ci @ Pi + Di @ Bi.T))
    Q24 = _sylv(At.T, Ao, -Ct.T @ (Bo.T @ Qo + Do.T @ Co))
    P12 = _sylv(A, At.T, B @ Ci @ P23.T + P13 @ Ci.T @ Bt.T + B @ Di @ Di.T @ Bt.T)
    Q12 = _sylv(A.T, At, C.T @ Bo.T @ Q24.T - Q14 @ Bo @ Ct - C.T @ Do.T @ Do @ Ct)
    Pt = _lyap(At, Bt @ Ci @ P23.T + P23 @ Ci.T @ Bt.T + Bt @ Di @ Di.T @ Bt.T)
    Qt = _lyap(At.T, -Ct.T @ Bo.T @ Q24.T - Q24 @ Bo @ Ct + Ct.T @ Do.T @ Do @ Ct)
    P = _lyap(A, B @ Ci @ P13.T + P13 @ Ci.T @ B.T + B @ Di @ Di.T @ B.T)
    Q = _lyap(A.T, C.T @ Bo.T @ Q14.T + Q14 @ Bo @ C + C.T @ Do.T @ Do @ C)
    P34 = _sylv(Ai, Ao.T, (P13.T @ C.T - P23.T @ Ct.T) @ Bo.T)
    P24 = _sylv(At, Ao.T, Bt @ Ci @ P34 + (P12.T @ C.T - Pt @ Ct.T) @ Bo.T)
    P14 = _sylv(A, Ao.T, B @ Ci @ P34 + (P @ C.T - P12 @ Ct.T) @ Bo.T)
    Po = _lyap(Ao, Bo @ (C @ P14 - Ct @ P24) + (P14.T @ C.T - P24.T @ Ct.T) @ Bo.T)
    Q34 = _sylv(Ai.T, Ao, Ci.T @ (B.T @ Q14 + Bt.T @ Q24))
    Q23 = _sylv(At.T, Ai, -Ct.T @ Bo.T @ Q34.T + (Qt @ Bt + Q12.T @ B) @ Ci)
    Q13 = _sylv(A.T, Ai, C.T @ Bo.T @ Q34.T + (Q @ B + Q12 @ Bt) @ Ci)
    Qi = _lyap(Ai.T, Ci.T @ (B.T @ Q13 + Bt.T @ Q23) + (Q13.T @ B + Q23.T @ Bt) @ Ci)

    return GramianPartition(
        dims=(H.n, Hr.n, wi.n, wo.n),
        P=P, P12=P12, P13=P13, P14=P14, Pt=Pt, P23=P23, P24=P24,
        Pi=Pi, P34=P34, Po=Po,
        Q=Q, Q12=Q12, Q13=Q13, Q14=Q14, Qt=Qt, Q23=Q23, Q24=Q24,
        Qi=Qi, Q34=Q34, Qo=Qo,
    )


@dataclass(frozen=True)
class OptimalityReport:
    """Deviation quantities, error splits and low-rank residuals for one
    (plant, reduced model, weights, V, W) tuple.

    ``dev_*`` are spectral norms of the stationarity deviations,
    ``gal_*`` the Petrov-Galerkin cross-gramian deviations, ``fit_*``
    the low-rank gramian fit errors, and J1..J4 the additive splits with
    J1 + J2 = J3 + J4 = squared weighted H2 error.  ``*_fro`` fields
    carry the Frobenius versions of the spectral-norm quantities.
    """

    Xbar: np.ndarray
    X: np.ndarray
    Ybar: np.ndarray
    Y: np.ndarray
    Zbar: np.ndarray
    Z: np.ndarray
    grad_A: np.ndarray
    grad_B: np.ndarray
    grad_C: np.ndarray
    J1: float
    J2: float
    J3: float
    J4: float
    dev_A: float
    dev_B: float
    dev_C: float
    gal_P: float
    gal_Q: float
    fit_P: float
    fit_Q: float
    R1_norm: float
    R2_norm: float
    dev_A_fro: float
    dev_B_fro: float
    dev_C_fro: float
    gal_P_fro: float
    gal_Q_fro: float
    fit_P_fro: float
    fit_Q_fro: float

    _SCALAR_FIELDS = (
        "J1", "J2", "J3", "J4",
        "dev_A", "dev_B", "dev_C",
        "gal_P", "gal_Q", "fit_P", "fit_Q",
        "R1_norm", "R2_norm",
        "dev_A_fro", "dev_B_fro", "dev_C_fro",
        "gal_P_fro", "gal_Q_fro", "fit_P_fro", "fit_Q_fro",
    )

    @classmethod
    def csv_header(cls):
        return ",".join(cls._SCALAR_FIELDS)

    def csv_row(self):
        return ",".join(f"{getattr(self, f):.12g}" for f in self._SCALAR_FIELDS)


def hat_gramians(partition, V, W):
    """Low-rank gramian approximations V Pt V^T and W Qt W^T."""
    Phat = V @ partition.Pt @ V.T
    Qhat = W @ partition.Qt @ W.T
    return (Phat + Phat.T) / 2.0, (Qhat + Qhat.T) / 2.0


def deviation_report(prob, Hr, V=None, W=None, partition=None):
    """Full optimality report for a reduced model.

    V and W are the projection matrices when the model is
    projection-based; without them the Petrov-Galerkin and low-rank
    fit quantities are reported as NaN.  The report is descriptive: no
    consistency between Hr and (V, W) is enforced.
    """
    if partition is None:
        partition = weighted_gramians(prob, Hr)
    g = partition
    H, wi, wo = prob.plant, prob.input_weight, prob.output_weight
    B, C = H.B, H.C
    Bt, Ct = Hr.B, Hr.C
    Ci, Bi, Di = wi.C, wi.B, wi.D
    Co, Bo, Do = wo.C, wo.B, wo.D

    Xbar = g.Q12.T @ g.P12 + g.Qt @ g.Pt
    Ybar = g.Q12.T @ B + g.Qt @ Bt
    Zbar = C @ g.P12 - Ct @ g.Pt
    X = g.Q23 @ g.P23.T + g.Q24 @ g.P24.T
    Y = (g.Q12.T @ g.P13 + g.Qt @ g.P23 + g.Q23 @ g.Pi + g.Q24 @ g.P34.T) @ Ci.T \
        + g.Q23 @ Bi @ Di.T
    Z = Bo.T @ (g.Q14.T @ g.P12 + g.Q24.T @ g.Pt + g.Q34.T @ g.P23.T
                + g.Qo @ g.P24.T) + Do.T @ Co @ g.P24.T

    grad_A = 2.0 * (Xbar + X)
    grad_B = 2.0 * (Ybar @ Di @ Di.T + Y)
    grad_C = -2.0 * (Do.T @ Do @ Zbar + Z)

    J1 = float(np.trace(Do @ C @ g.P @ C.T @ Do.T + Do @ Ct @ g.Pt @ Ct.T @ Do.T
                        - 2.0 * Do @ C @ g.P12 @ Ct.T @ Do.T))
    J2 = float(np.trace(Co @ g.Po @ Co.T + 2.0 * Do @ C @ g.P14 @ Co.T
                        - 2.0 * Do @ Ct @ g.P24 @ Co.T))
    J3 = float(np.trace(Di.T @ B.T @ g.Q @ B @ Di + Di.T @ Bt.T @ g.Qt @ Bt @ Di
                        + 2.0 * Di.T @ B.T @ g.Q12 @ Bt @ Di))
    J4 = float(np.trace(Bi.T @ g.Qi @ Bi + 2.0 * Di.T @ B.T @ g.Q13 @ Bi
                        + 2.0 * Di.T @ Bt.T @ g.Q23 @ Bi))

    dev_A_mat = Xbar + X
    dev_B_mat = Ybar @ Di @ Di.T + Y
    dev_C_mat = Do.T @ Do @ Zbar + Z

    if V is not None and W is not None:
        V = np.asarray(V, dtype=float)
        W = np.asarray(W, dtype=float)
        if V.shape != (H.n, Hr.n) or W.shape != (H.n, Hr.n):
            raise DimensionMismatch(
                f"V, W must be {(H.n, Hr.n)}, got {V.shape} and {W.shape}"
            )
        gal_P_mat = g.P13 - V @ g.P23
        gal_Q_mat = g.Q14 + W @ g.Q24
        Phat, Qhat = hat_gramians(g, V, W)
        fit_P_mat = g.P - Phat
        fit_Q_mat = g.Q - Qhat
        R1 = H.A @ Phat + Phat @ H.A.T + B @ Ci @ g.P13.T + g.P13 @ Ci.T @ B.T \
            + B @ Di @ Di.T @ B.T
        R2 = H.A.T @ Qhat + Qhat @ H.A + C.T @ Bo.T @ g.Q14.T + g.Q14 @ Bo @ C \
            + C.T @ Do.T @ Do @ C
        gal_P = _norm2(gal_P_mat)
        gal_Q = _norm2(gal_Q_mat)
        fit_P = _norm2(fit_P_mat)
        fit_Q = _norm2(fit_Q_mat)
        R1_norm = _norm2(R1)
        R2_norm = _norm2(R2)
        gal_P_fro = float(np.linalg.norm(gal_P_mat))
        gal_Q_fro = float(np.linalg.norm(gal_Q_mat))
        fit_P_fro = float(np.linalg.norm(fit_P_mat))
        fit_Q_fro = float(np.linalg.norm(fit_Q_mat))
    else:
        gal_P = gal_Q = fit_P = fit_Q = R1_norm = R2_norm = float("nan")
        gal_P_fro = gal_Q_fro = fit_P_fro = fit_Q_fro = float("nan")

    return OptimalityReport(
        Xbar=Xbar, X=X, Ybar=Ybar, Y=Y, Zbar=Zbar, Z=Z,
        grad_A=grad_A, grad_B=grad_B, grad_C=grad_C,
        J1=J1, J2=J2, J3=J3, J4=J4,
        dev_A=_norm2(dev_A_mat), dev_B=_norm2(dev_B_mat), dev_C=_norm2(dev_C_mat),
        gal_P=gal_P, gal_Q=gal_Q, fit_P=fit_P, fit_Q=fit_Q,
        R1_norm=R1_norm, R2_norm=R2_norm,
        dev_A_fro=float(np.linalg.norm(dev_A_mat)),
        dev_B_fro=float(np.linalg.norm(dev_B_mat)),
        dev_C_fro=float(np.linalg.norm(dev_C_mat)),
        gal_P_fro=gal_P_fro, gal_Q_fro=gal_Q_fro,
        fit_P_fro=fit_P_fro, fit_Q_fro=fit_Q_fro,
    )


def _norm2(M):
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M, 2))


def weighted_h2_sq(prob, Hr):
    """Squared H2 norm of the weighted error (trace formula)."""
    _check_blocks_stable(prob, Hr)
    sysw = weighted_error_realization(prob, Hr)
    Pw = matdense.solve_lyapunov(sysw.A, sysw.B @ sysw.B.T).solution
    return float(np.trace(sysw.C @ Pw @ sysw.C.T))


def fd_gradient(prob, Hr, which, h=None):
    """Central-difference gradient of the squared weighted H2 error with
    respect to one reduced-model matrix.

    ``which`` is one of "A", "B", "C".  Test oracle only: each matrix
    entry costs two full gramian solves.  Raises PerturbationUnstable
    when a perturbed iterate leaves the stability region.
    """
    mats = {"A": Hr.A, "B": Hr.B, "C": Hr.C}
    if which not in mats:
        raise ValueError(f"which must be one of {sorted(mats)}, got {which!r}")
    M0 = mats[which]
    if h is None:
        h = 1e-5 * (1.0 + np.linalg.norm(M0))

    def rebuilt(Mp):
        parts = {k: (Mp if k == which else v) for k, v in mats.items()}
        return StateSpace(parts["A"], parts["B"], parts["C"], Hr.D)

    grad = np.zeros_like(M0)
    for idx in np.ndindex(M0.shape):
        vals = []
        for sgn in (+1.0, -1.0):
            Mp = M0.copy()
            Mp[idx] += sgn * h
            sys_p = rebuilt(Mp)
            if which == "A" and not sys_p.is_stable(margin=0.0):
                raise PerturbationUnstable(
                    f"perturbation of A at {idx} destabilized the iterate"
                )
            vals.append(weighted_h2_sq(prob, sys_p))
        grad[idx] = (vals[0] - vals[1]) / (2.0 * h)
    return grad
