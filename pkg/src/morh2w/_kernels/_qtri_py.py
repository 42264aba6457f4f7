"""Pure-numpy back-substitution kernel for quasi-triangular Sylvester
equations.  Reference implementation; the Cython twin in ``_qtri_cy.pyx``
implements the same contract."""

import numpy as np


def diag_blocks(T):
    """Partition a real Schur form into 1x1/2x2 diagonal blocks.

    Returns a list of (start, size) pairs.  The subdiagonal of a real Schur
    form is exactly zero outside 2x2 bumps, so a nonzero test suffices.
    """
    n = T.shape[0]
    blocks = []
    i = 0
    while i < n:
        if i + 1 < n and T[i + 1, i] != 0.0:
            blocks.append((i, 2))
            i += 2
        else:
            blocks.append((i, 1))
            i += 1
    return blocks


def _solve_block(TAii, TBjj, rhs):
    """Solve TAii @ X + X @ TBjj = rhs for a block of size (1|2, 1|2)."""
    sa, sb = TAii.shape[0], TBjj.shape[0]
    if sa == 1 and sb == 1:
        den = TAii[0, 0] + TBjj[0, 0]
        if den == 0.0:
            raise ZeroDivisionError("singular 1x1 Sylvester block")
        return rhs / den
    if sb == 1:
        return np.linalg.solve(TAii + TBjj[0, 0] * np.eye(sa), rhs)
    if sa == 1:
        return np.linalg.solve(TBjj.T + TAii[0, 0] * np.eye(sb), rhs.T).T
    K = np.kron(np.eye(sb), TAii) + np.kron(TBjj.T, np.eye(sa))
    return np.linalg.solve(K, rhs.reshape(-1, order="F")).reshape(sa, sb, order="F")


def solve_qtri_sylvester(TA, TB, F, tb_lower=False):
    """Solve TA @ Y + Y @ TB + F = 0 with TA, TB quasi-triangular.

    TA must be upper quasi-triangular (real Schur form).  TB is upper
    quasi-triangular, or lower quasi-triangular when ``tb_lower`` is set
    (the Lyapunov case TB = TA^T).  Column blocks of Y are eliminated in
    dependency order; within each column block the rows of TA are swept
    bottom-up, solving one small dense system per diagonal block pair.
    """
    na, nb = TA.shape[0], TB.shape[0]
    Y = np.zeros((na, nb))
    if na == 0 or nb == 0:
        return Y
    ablocks = diag_blocks(TA)
    bblocks = diag_blocks(TB.T if tb_lower else TB)
    if tb_lower:
        bblocks = list(reversed(bblocks))
    for (c0, cs) in bblocks:
        c1 = c0 + cs
        if tb_lower:
            G = -(F[:, c0:c1] + Y[:, c1:] @ TB[c1:, c0:c1])
        else:
            G = -(F[:, c0:c1] + Y[:, :c0] @ TB[:c0, c0:c1])
        TBjj = TB[c0:c1, c0:c1]
        for (r0, rs) in reversed(ablocks):
            r1 = r0 + rs
            rhs = G[r0:r1] - TA[r0:r1, r1:] @ Y[r1:, c0:c1]
            Y[r0:r1, c0:c1] = _solve_block(TA[r0:r1, r0:r1], TBjj, rhs)
    return Y
