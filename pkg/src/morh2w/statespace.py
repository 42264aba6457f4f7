"""State-space realizations and the realization algebra used by the
reduction algorithms: error systems, weighted error systems, the
augmented input/output-side systems, and pole-residue decompositions."""

from dataclasses import dataclass, field

import numpy as np

from . import matdense
from .errors import DefectiveMatrix, DimensionMismatch, SingularShift, UnstableSystem

__all__ = [
    "PoleResidue",
    "StateSpace",
    "WeightedProblem",
    "augmented_F_G",
    "error_system",
    "eval_tf",
    "identity_weight",
    "pole_residue",
    "weighted_error_realization",
]

STABILITY_MARGIN = -1e-10


def _mat(M, name, dtype=float):
    M = np.atleast_2d(np.asarray(M, dtype=dtype))
    if M.size and not np.all(np.isfinite(M)):
        raise ValueError(f"{name} contains non-finite entries")
    return M


@dataclass(frozen=True, eq=False)
class StateSpace:
    """Real realization (A, B, C, D) of C (sI - A)^-1 B + D.

    Immutable after construction; arrays are copied and marked read-only.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray = None

    def __post_init__(self):
        A = _mat(self.A, "A")
        B = _mat(self.B, "B")
        C = _mat(self.C, "C")
        n = A.shape[0]
        if A.shape != (n, n):
            raise DimensionMismatch(f"A must be square, got {A.shape}")
        if B.shape[0] != n:
            raise DimensionMismatch(f"B has {B.shape[0]} rows, expected {n}")
        if C.shape[1] != n:
            raise DimensionMismatch(f"C has {C.shape[1]} cols, expected {n}")
        D = self.D
        if D is None:
            D = np.zeros((C.shape[0], B.shape[1]))
        D = _mat(D, "D")
        if D.shape != (C.shape[0], B.shape[1]):
            raise DimensionMismatch(
                f"D must be {(C.shape[0], B.shape[1])}, got {D.shape}"
            )
        for name, M in (("A", A), ("B", B), ("C", C), ("D", D)):
            M = M.copy()
            M.setflags(write=False)
            object.__setattr__(self, name, M)

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.B.shape[1]

    @property
    def p(self):
        return self.C.shape[0]

    def spectral_abscissa(self):
        """Largest real part over the eigenvalues of A (-inf if n = 0)."""
        if self.n == 0:
            return -np.inf
        return float(np.max(np.linalg.eigvals(self.A).real))

    def is_stable(self, margin=STABILITY_MARGIN):
        return self.spectral_abscissa() < margin

    def poles(self):
        w, _ = matdense.eig(self.A)
        return w

    def __repr__(self):
        return f"StateSpace(n={self.n}, m={self.m}, p={self.p})"


def identity_weight(size):
    """Identity weight as a 0-state system with D = I.

    All block formulas degenerate to empty weight blocks rather than
    needing a special case.
    """
    return StateSpace(
        A=np.zeros((0, 0)),
        B=np.zeros((0, size)),
        C=np.zeros((size, 0)),
        D=np.eye(size),
    )


@dataclass(frozen=True, eq=False)
class WeightedProblem:
    """One weighted reduction task: plant, both weights, target order.

    The input weight must be square m x m, the output weight p x p, and
    all three systems asymptotically stable (spectral abscissa below
    -1e-10): every gramian equation downstream assumes Hurwitz matrices.
    """

    plant: StateSpace
    input_weight: StateSpace
    output_weight: StateSpace
    r: int

    def __post_init__(self):
        plant, wi, wo = self.plant, self.input_weight, self.output_weight
        if wi.m != wi.p or wi.m != plant.m:
            raise DimensionMismatch(
                f"input weight must be {plant.m}x{plant.m} I/O, "
                f"got {wi.p}x{wi.m}"
            )
        if wo.m != wo.p or wo.p != plant.p:
            raise DimensionMismatch(
                f"output weight must be {plant.p}x{plant.p} I/O, "
                f"got {wo.p}x{wo.m}"
            )
        if not (isinstance(self.r, (int, np.integer)) and 0 < self.r < plant.n):
            raise ValueError(f"target order r={self.r} must satisfy 0 < r < {plant.n}")
        for name, sys in (("plant", plant), ("input_weight", wi), ("output_weight", wo)):
            if not sys.is_stable():
                raise UnstableSystem(
                    f"{name} has spectral abscissa {sys.spectral_abscissa():.3e}"
                )

    @property
    def dims(self):
        """(n, r, n_i, n_o) block sizes of the weighted error realization."""
        return (self.plant.n, self.r, self.input_weight.n, self.output_weight.n)


def eval_tf(sys, s):
    """Evaluate the transfer function C (sI - A)^-1 B + D at a point.

    One dense complex solve; raises SingularShift when sI - A is
    numerically singular (condition estimate above 1e14).
    """
    s = complex(s)
    if sys.n == 0:
        return sys.D.astype(complex)
    M = s * np.eye(sys.n) - sys.A
    if np.linalg.cond(M) > 1e14:
        raise SingularShift(f"shift {s} is (close to) an eigenvalue of A")
    return sys.C @ np.linalg.solve(M, sys.B.astype(complex)) + sys.D


def error_system(H, Hr):
    """Difference system H - Hr as one realization of order n + r.

    Both systems must share I/O dimensions and feedthrough (the reduced
    model inherits the plant feedthrough), so the error is strictly
    proper.
    """
    if H.m != Hr.m or H.p != Hr.p:
        raise DimensionMismatch(
            f"I/O mismatch: ({H.p}x{H.m}) vs ({Hr.p}x{Hr.m})"
        )
    if not np.array_equal(H.D, Hr.D):
        raise DimensionMismatch("feedthrough matrices differ")
    n, r = H.n, Hr.n
    A = np.zeros((n + r, n + r))
    A[:n, :n] = H.A
    A[n:, n:] = Hr.A
    B = np.vstack([H.B, Hr.B])
    C = np.hstack([H.C, -Hr.C])
    return StateSpace(A, B, C, np.zeros((H.p, H.m)))


def weighted_error_realization(prob, Hr):
    """Realization of Wo (H - Hr) Wi with the fixed block layout
    (plant, reduced model, input weight, output weight).

    The feedthrough is structurally zero and the block offsets
    (n, r, n_i, n_o) are what the gramian partition slices on.
    """
    H, wi, wo = prob.plant, prob.input_weight, prob.output_weight
    if Hr.m != H.m or Hr.p != H.p:
        raise DimensionMismatch(
            f"reduced model I/O ({Hr.p}x{Hr.m}) does not match plant"
        )
    n, r, ni, no = H.n, Hr.n, wi.n, wo.n
    N = n + r + ni + no
    A = np.zeros((N, N))
    o1, o2, o3 = n, n + r, n + r + ni
    A[:n, :n] = H.A
    A[:n, o2:o3] = H.B @ wi.C
    A[o1:o2, o1:o2] = Hr.A
    A[o1:o2, o2:o3] = Hr.B @ wi.C
    A[o2:o3, o2:o3] = wi.A
    A[o3:, :n] = wo.B @ H.C
    A[o3:, o1:o2] = -wo.B @ Hr.C
    A[o3:, o3:] = wo.A
    B = np.zeros((N, wi.m))
    B[:n] = H.B @ wi.D
    B[o1:o2] = Hr.B @ wi.D
    B[o2:o3] = wi.B
    C = np.zeros((wo.p, N))
    C[:, :n] = wo.D @ H.C
    C[:, o1:o2] = -wo.D @ Hr.C
    C[:, o3:] = wo.C
    return StateSpace(A, B, C, np.zeros((wo.p, wi.m)))


def _augmented_f_g(plant, wi, wo, Pi_gram, Qo_gram, P13, Q14):
    """Input/output-side augmented realizations for a given first system.

    Used both for the full plant and (with the reduced-model cross
    gramians) for the reduced model.
    """
    n, ni, no = plant.n, wi.n, wo.n
    Af = np.zeros((n + ni, n + ni))
    Af[:n, :n] = plant.A
    Af[:n, n:] = plant.B @ wi.C
    Af[n:, n:] = wi.A
    Bf = np.vstack(
        [P13 @ wi.C.T + plant.B @ wi.D @ wi.D.T, Pi_gram @ wi.C.T + wi.B @ wi.D.T]
    )
    Cf = np.hstack([plant.C, plant.D @ wi.C])
    F = StateSpace(Af, Bf, Cf, np.zeros((plant.p, plant.m)))

    Ag = np.zeros((n + no, n + no))
    Ag[:n, :n] = plant.A
    Ag[n:, :n] = wo.B @ plant.C
    Ag[n:, n:] = wo.A
    Bg = np.vstack([plant.B, wo.B @ plant.D])
    Cg = np.vstack(
        [Q14 @ wo.B + plant.C.T @ wo.D.T @ wo.D, Qo_gram @ wo.B + wo.C.T @ wo.D]
    ).T
    G = StateSpace(Ag, Bg, Cg, np.zeros((plant.p, plant.m)))
    return F, G


def augmented_F_G(prob, Pi_gram, Qo_gram, P13, Q14):
    """Augmented systems driving the tangential interpolation conditions.

    ``Pi_gram``/``Qo_gram`` are the weight gramians and ``P13``/``Q14``
    the plant-weight cross gramians.  The state matrices are block
    triangular, so the spectra are the unions of the plant and weight
    spectra.
    """
    n, ni, no = prob.plant.n, prob.input_weight.n, prob.output_weight.n
    Pi_gram = _mat(Pi_gram, "Pi_gram") if ni else np.zeros((0, 0))
    Qo_gram = _mat(Qo_gram, "Qo_gram") if no else np.zeros((0, 0))
    P13 = np.asarray(P13, dtype=float).reshape(n, ni)
    Q14 = np.asarray(Q14, dtype=float).reshape(n, no)
    if Pi_gram.shape != (ni, ni) or Qo_gram.shape != (no, no):
        raise DimensionMismatch("weight gramian shapes do not match weights")
    if ni and not np.allclose(Pi_gram, Pi_gram.T, atol=1e-10 * max(1, np.linalg.norm(Pi_gram))):
        raise ValueError("Pi_gram is not symmetric")
    if no and not np.allclose(Qo_gram, Qo_gram.T, atol=1e-10 * max(1, np.linalg.norm(Qo_gram))):
        raise ValueError("Qo_gram is not symmetric")
    return _augmented_f_g(
        prob.plant, prob.input_weight, prob.output_weight, Pi_gram, Qo_gram, P13, Q14
    )


@dataclass(frozen=True, eq=False)
class PoleResidue:
    """Pole-residue form sum_i l_i r_i^T / (s - lambda_i) + D.

    Poles are sorted by (real part, |imag|) with conjugate pairs
    adjacent; residues of conjugate poles are conjugate.  R is the
    spectral factor with A = R diag(poles) R^-1.
    """

    poles: np.ndarray  # (r,) complex
    right_residues: np.ndarray  # (r, m) complex, row i = r_i
    left_residues: np.ndarray  # (r, p) complex, row i = l_i
    R: np.ndarray  # (r, r) complex
    D: np.ndarray = field(default=None)

    def reconstruct(self, s):
        """Transfer-function value rebuilt from the pole-residue data."""
        s = complex(s)
        val = np.zeros((self.left_residues.shape[1], self.right_residues.shape[1]),
                       dtype=complex)
        for lam, r_i, l_i in zip(self.poles, self.right_residues, self.left_residues):
            val += np.outer(l_i, r_i) / (s - lam)
        if self.D is not None:
            val = val + self.D
        return val


def pole_residue(sys, gap_tol=1e-10):
    """Pole-residue decomposition of a system with simple poles.

    Raises DefectiveMatrix when the minimum eigenvalue gap falls below
    ``gap_tol * ||A||`` (the spectral factorization would be unreliable).
    """
    w, V = matdense.eig(sys.A)
    r = sys.n
    if r > 1:
        gaps = np.abs(w[:, None] - w[None, :]) + np.diag(np.full(r, np.inf))
        a_norm = np.linalg.norm(sys.A, 2)
        if np.min(gaps) <= gap_tol * max(a_norm, 1e-300):
            raise DefectiveMatrix(
                f"minimum eigenvalue gap {np.min(gaps):.3e} below threshold"
            )
    right = np.linalg.solve(V, sys.B.astype(complex))  # (r, m), row i = r_i^T
    left = (sys.C @ V).T  # (r, p), row i = l_i^T
    return PoleResidue(poles=w, right_residues=right, left_residues=left,
                       R=V, D=sys.D.copy())
