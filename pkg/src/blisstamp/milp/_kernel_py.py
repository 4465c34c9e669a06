"""Pure NumPy implementations of the simplex hot loops.

Import-time fallback for the compiled `_pivot_kernel` extension. Both
backends implement the same three operations with identical rounding (the
extension is compiled without FP contraction), so they are interchangeable.

Status codes shared with the engine: 0 = basic, 1 = at lower, 2 = at upper.
"""

from __future__ import annotations

import numpy as np

BASIC, AT_LO, AT_UP = 0, 1, 2


def leaving_row(xval, lb, ub, basis, ftol, bland):
    """Most bound-violated basic row.

    Returns ``(row, delta)`` where ``delta`` is the signed step to the
    violated bound, or ``(-1, 0.0)`` when the basis is primal feasible.
    Ties break toward the smallest row index; in Bland mode the first
    violated row wins outright.
    """
    if basis.size == 0:
        return -1, 0.0
    vb = xval[basis]
    lo = lb[basis]
    up = ub[basis]
    viol_lo = lo - vb
    viol_up = vb - up
    if bland:
        # Bland's rule: smallest *variable* index among the violated basics
        hits = np.nonzero((viol_lo > ftol) | (viol_up > ftol))[0]
        if len(hits) == 0:
            return -1, 0.0
        r = int(hits[np.argmin(basis[hits])])
    else:
        viol = np.maximum(viol_lo, viol_up)
        r = int(np.argmax(viol))
        if viol[r] <= ftol:
            return -1, 0.0
    delta = viol_lo[r] if viol_lo[r] >= viol_up[r] else -viol_up[r]
    return r, float(delta)


def ratio_test(trow, d, status, sigma, ptol, bland):
    """Dual ratio test on the leaving row.

    Eligible nonbasic columns are those whose movement pushes the leaving
    variable toward its violated bound; among them, the smallest
    |d_j| / |trow_j| preserves dual feasibility. A second pass picks the
    largest |pivot| within a relative whisker of the best ratio (ties to
    the smallest index), which keeps the tableau well conditioned. Returns
    the entering column, or -1 when none exists (LP infeasible).
    """
    a = sigma * trow
    elig_lo = (status == AT_LO) & (a < -ptol)
    elig_up = (status == AT_UP) & (a > ptol)
    if bland:
        hits = np.nonzero(elig_lo | elig_up)[0]
        return int(hits[0]) if len(hits) else -1
    elig = elig_lo | elig_up
    if not np.any(elig):
        return -1
    dsafe = np.where(elig_lo, np.maximum(d, 0.0), np.maximum(-d, 0.0))
    absa = np.abs(a)
    # Harris pass 1: most permissive step that keeps every reduced cost
    # within the dual tolerance of its sign condition
    tau = 1e-9
    theta = np.min(np.where(elig, (dsafe + tau) / np.where(elig, absa, 1.0), np.inf))
    # pass 2: largest |pivot| among candidates not exceeding theta
    ok = elig & (dsafe <= theta * absa)
    cand = np.where(ok, absa, -1.0)
    return int(np.argmax(cand))


def bfrt(trow, d, status, lb, ub, sigma, delta, ptol, tau=1e-9, pivot_floor=1e-7):
    """Bound-flipping dual ratio test (shared by both backends).

    Walks the eligible breakpoints in (ratio, index) order. Candidates whose
    full range cannot absorb the remaining violation are flipped to their
    other bound (their reduced cost legitimately changes sign afterwards);
    the first candidate that can absorb the rest is the entering pivot.
    Returns ``(q, flips)``; ``q = -1`` means the row cannot be repaired (LP
    infeasible) and no flips should be applied.
    """
    a = sigma * trow
    elig_lo = (status == AT_LO) & (a < -ptol)
    elig_up = (status == AT_UP) & (a > ptol)
    elig = elig_lo | elig_up
    idx = np.nonzero(elig)[0]
    if idx.size == 0:
        return -1, idx
    absa = np.abs(a[idx])
    dsafe = np.where(elig_lo[idx], np.maximum(d[idx], 0.0), np.maximum(-d[idx], 0.0))
    ratio = (dsafe + tau) / absa
    order = np.lexsort((idx, ratio))
    width = ub[idx] - lb[idx]
    capacity = abs(delta)
    flips = []
    for pos in order:
        j = int(idx[pos])
        aj = absa[pos]
        wj = width[pos]
        absorbs = not np.isfinite(wj) or aj * wj >= capacity - 1e-12
        if absorbs or aj < pivot_floor:
            if aj >= pivot_floor:
                return j, np.asarray(flips, dtype=np.int64)
            if np.isfinite(wj) and not absorbs:
                flips.append(j)
                capacity -= aj * wj
            # tiny pivot with infinite range (or absorbing): unusable, skip
            continue
        flips.append(j)
        capacity -= aj * wj
    return -1, np.empty(0, dtype=np.int64)


def rank1_update(T, colq, trow_new, r, buf):
    """T <- T - colq * trow_new, then overwrite row r with the scaled row.

    The buffer avoids a fresh m*(n+m) allocation per pivot; the multiply
    and subtract stay separate so the compiled twin (built without FMA
    contraction) produces bit-identical tableaus.
    """
    np.multiply(colq[:, None], trow_new[None, :], out=buf)
    np.subtract(T, buf, out=T)
    T[r, :] = trow_new
