"""Bounded-variable dual simplex on a dense tableau.

Design notes:

* Computational form is ``[A | -I] @ [x; s] = 0`` with the logical variable
  of each row carrying the row bounds derived from its sense. The all-logical
  basis is always available, and with every structural variable held at a
  finite bound chosen by the sign of its cost, the start is dual feasible.
  Infinite structural bounds are replaced by +-BIG_BOUND; an optimum resting
  on such an artificial bound with a nonzero reduced cost means the true LP
  is unbounded.
* Branch-and-bound restarts reuse the current basis after bound changes:
  nonbasic variables snap to their moved bound and flip sides when the
  reduced-cost sign demands it (binary bounds are always finite, so a flip
  target always exists), after which the dual loop restores optimality.
* The tableau is dense and updated by rank-1 pivots (the hot kernel, see
  ``backend``); the basis is refactorized from scratch periodically and
  whenever a conclusion (infeasibility, tiny pivot) needs confirming.
* Determinism: largest-violation leaving row and smallest-ratio entering
  column, ties to the smallest index; Bland's smallest-index rule kicks in
  after a run of degenerate pivots and is retired once the objective moves.
"""

from __future__ import annotations

import numpy as np

from ._kernel_py import AT_LO, AT_UP, BASIC, bfrt
from .backend import kernel as default_kernel
from .model import NumericalBreakdown

LP_OPTIMAL = "optimal"
LP_INFEASIBLE = "infeasible"
LP_UNBOUNDED = "unbounded"

BIG_BOUND = 1e7

_FEAS_TOL = 4e-8
_DUAL_TOL = 1e-9
# entering-pivot floor: rows are equilibrated to |A| <= 1, so entries below
# this are treated as structural zeros (pivoting on them poisons the basis)
_RATIO_TOL = 1e-7
_PIVOT_TOL = 1e-11
_DEGEN_RUN = 500
_REFACTOR_EVERY = 600
_TABLEAU_LIMIT = 1e10


class DualSimplex:
    """One LP instance; bounds may be tightened/relaxed between re-solves."""

    def __init__(self, A, c, var_lb, var_ub, row_lb, row_ub, kernel=None):
        A = np.ascontiguousarray(A, dtype=float)
        self.m, self.n = A.shape
        m, n = self.m, self.n
        self.ncols = n + m
        self.kernel = kernel if kernel is not None else default_kernel

        self.A_ext = np.concatenate([A, -np.eye(m)], axis=1)
        self.c_full = np.concatenate([np.asarray(c, dtype=float), np.zeros(m)])

        lb = np.concatenate([np.asarray(var_lb, dtype=float), np.asarray(row_lb, dtype=float)])
        ub = np.concatenate([np.asarray(var_ub, dtype=float), np.asarray(row_ub, dtype=float)])
        self.artificial_lo = np.zeros(self.ncols, dtype=bool)
        self.artificial_hi = np.zeros(self.ncols, dtype=bool)
        self.artificial_lo[:n] = np.isneginf(lb[:n])
        self.artificial_hi[:n] = np.isposinf(ub[:n])
        lb[:n][self.artificial_lo[:n]] = -BIG_BOUND
        ub[:n][self.artificial_hi[:n]] = BIG_BOUND
        self.lb = lb
        self.ub = ub

        self.T = np.empty((m, self.ncols))
        self.buf = np.empty((m, self.ncols))
        self.basis = np.empty(m, dtype=np.int64)
        self.status = np.empty(self.ncols, dtype=np.int8)
        self.xval = np.empty(self.ncols)
        self.d = np.empty(self.ncols)
        # working costs = true costs + anti-degeneracy shifts (see
        # _perturb_costs); objective() always reports true costs
        self.c_work = self.c_full.copy()
        self._perturbed = False
        self.total_pivots = 0
        self._pivots_at_refactor = 0
        self._basis_resets = 0

    # ----- setup -----

    def reset_basis(self) -> None:
        """All-logical basis with structurals at their cost-preferred bound."""
        n, m = self.n, self.m
        self.basis[:] = n + np.arange(m)
        self.T[:, :n] = -self.A_ext[:, :n]
        self.T[:, n:] = np.eye(m)
        self.status[n:] = BASIC
        c = self.c_full[:n]
        at_up = c < 0
        # zero-cost artificial lowers prefer the real upper bound
        at_up |= (c == 0) & self.artificial_lo[:n] & ~self.artificial_hi[:n]
        self.status[:n] = np.where(at_up, AT_UP, AT_LO)
        self.xval[:n] = np.where(at_up, self.ub[:n], self.lb[:n])
        self.xval[n:] = self.A_ext[:, :n] @ self.xval[:n]
        self.c_work[:] = self.c_full
        self._perturbed = False
        self.d[:] = self.c_work
        self.d[self.basis] = 0.0

    def _refactorize(self) -> None:
        B = self.A_ext[:, self.basis]
        try:
            self.T[:] = np.linalg.solve(B, self.A_ext)
            y = np.linalg.solve(B.T, self.c_work[self.basis])
        except np.linalg.LinAlgError:
            # the pivot chain drifted into a singular basis: restart from the
            # always-invertible all-logical basis under the current bounds
            self._basis_resets += 1
            if self._basis_resets > 3:
                raise NumericalBreakdown("repeated singular bases; giving up")
            self.reset_basis()
            self._pivots_at_refactor = self.total_pivots
            return
        if self.m and np.max(np.abs(self.T)) > _TABLEAU_LIMIT:
            # basis technically invertible but hopelessly conditioned
            self._basis_resets += 1
            if self._basis_resets > 3:
                raise NumericalBreakdown("repeated ill-conditioned bases; giving up")
            self.reset_basis()
            self._pivots_at_refactor = self.total_pivots
            return
        self.d[:] = self.c_work - self.A_ext.T @ y
        self.d[self.basis] = 0.0
        v = self.xval.copy()
        v[self.basis] = 0.0
        self.xval[self.basis] = -(self.T @ v)
        self._pivots_at_refactor = self.total_pivots

    # ----- pivoting -----

    def _pivot(self, r: int, q: int, delta: float) -> float:
        piv = self.T[r, q]
        theta = -delta / piv
        # clamp the multiplier to the dual-feasible sign: a tolerance-level
        # wrong-signed d[q] must not push every other reduced cost the wrong
        # way (equivalent to a tiny implicit cost shift, wiped at refactor)
        dq = self.d[q]
        if self.status[q] == AT_LO:
            dq = dq if dq > 0.0 else 0.0
        else:
            dq = dq if dq < 0.0 else 0.0
        colq = self.T[:, q].copy()
        self.xval[self.basis] -= colq * theta
        self.xval[q] += theta
        p = self.basis[r]
        self.status[p] = AT_LO if delta > 0 else AT_UP
        self.xval[p] = self.lb[p] if delta > 0 else self.ub[p]
        self.status[q] = BASIC
        self.basis[r] = q
        trow_new = self.T[r] / piv
        self.kernel.rank1_update(self.T, colq, trow_new, r, self.buf)
        self.d -= dq * trow_new
        self.d[q] = 0.0
        self.total_pivots += 1
        return dq * theta

    def _apply_flips(self, flips) -> float:
        """Move nonbasic variables across their box (bound-flipping step);
        returns the objective change the flips caused."""
        lo = self.status[flips] == AT_LO
        dx = np.where(lo, self.ub[flips] - self.lb[flips],
                      self.lb[flips] - self.ub[flips])
        self.xval[self.basis] -= self.T[:, flips] @ dx
        self.xval[flips] += dx
        self.status[flips] = np.where(lo, AT_UP, AT_LO)
        return float(self.d[flips] @ dx)

    def _perturb_costs(self) -> None:
        """Break dual-degenerate plateaus with deterministic cost shifts.

        Every nonbasic variable's working cost moves away from its sign
        boundary by a pseudo-random amount keyed to the variable index. The
        basic costs stay put, so the duals y are unchanged and d updates in
        place. Shifts vanish at the exact-cleanup stage of the loop.
        """
        j = np.arange(self.ncols, dtype=np.uint64)
        u = ((j * np.uint64(2654435761)) % np.uint64(2 ** 32)).astype(float) / 2.0 ** 32
        xi = 1e-7 * (1.0 + np.abs(self.c_work)) * (0.5 + 0.5 * u)
        at_lo = self.status == AT_LO
        at_up = self.status == AT_UP
        self.c_work[at_lo] += xi[at_lo]
        self.d[at_lo] += xi[at_lo]
        self.c_work[at_up] -= xi[at_up]
        self.d[at_up] -= xi[at_up]
        self._perturbed = True

    def _clear_perturbation(self) -> None:
        self.c_work[:] = self.c_full
        self._perturbed = False
        self._refactorize()
        self._dual_repair()

    def _dual_loop(self) -> str:
        iters = 0
        degen_run = 0
        bland = False
        perturb_rounds = 0
        confirmed = False  # refactorized since the last suspicious finding
        self._basis_resets = 0
        cap = 20000 + 10 * self.m
        while True:
            r, delta = self.kernel.leaving_row(self.xval, self.lb, self.ub,
                                               self.basis, _FEAS_TOL, bland)
            if r < 0:
                if self._perturbed:
                    # reached an optimum of the shifted costs: drop the
                    # shifts, repair, and keep going with true costs
                    self._clear_perturbation()
                    degen_run = 0
                    confirmed = True
                    continue
                return LP_OPTIMAL
            sigma = 1.0 if delta > 0 else -1.0
            if bland:
                q = self.kernel.ratio_test(np.ascontiguousarray(self.T[r]), self.d,
                                           self.status, sigma, _RATIO_TOL, True)
                flips = None
            else:
                q, flips = bfrt(np.ascontiguousarray(self.T[r]), self.d, self.status,
                                self.lb, self.ub, sigma, delta, _RATIO_TOL)
            if q < 0:
                if not confirmed:
                    self._refactorize()
                    confirmed = True
                    continue
                if self._perturbed:
                    self._clear_perturbation()
                    continue
                return LP_INFEASIBLE
            flip_progress = 0.0
            skip_pivot = False
            if flips is not None and len(flips):
                flip_progress = self._apply_flips(flips)
                p = self.basis[r]
                v = self.xval[p]
                delta = (self.lb[p] - v) if delta > 0 else (self.ub[p] - v)
                if (delta > 0) != (sigma > 0) or abs(delta) <= _FEAS_TOL:
                    skip_pivot = True  # flips alone repaired the row
            if skip_pivot:
                progress = flip_progress
            else:
                piv = self.T[r, q]
                if abs(piv) < _PIVOT_TOL:
                    if not confirmed:
                        self._refactorize()
                        confirmed = True
                        continue
                    raise NumericalBreakdown(
                        f"pivot magnitude {abs(piv):.3e} below {_PIVOT_TOL}")
                confirmed = False
                progress = self._pivot(r, q, delta) + flip_progress
            # every iteration (flip-only included) feeds the anti-cycling
            # bookkeeping; Bland mode is sticky for the rest of this loop
            iters += 1
            if abs(progress) <= 1e-8:
                degen_run += 1
                if degen_run == 150 and perturb_rounds < 3 and not self._perturbed:
                    self._perturb_costs()
                    perturb_rounds += 1
                    degen_run = 0
                elif degen_run >= _DEGEN_RUN:
                    bland = True
            else:
                degen_run = 0
            if iters % 64 == 0 and self.m:
                worst = float(np.max(np.abs(self.xval[self.basis])))
                if worst > 1e9:
                    self._refactorize()
            if self.total_pivots - self._pivots_at_refactor >= _REFACTOR_EVERY:
                self._refactorize()
            if iters > cap:
                if not bland:
                    bland = True
                elif iters > 2 * cap:
                    raise NumericalBreakdown(f"dual simplex exceeded {2 * cap} iterations")

    # ----- public API -----

    def solve_from_scratch(self) -> str:
        self.reset_basis()
        status = self._dual_loop()
        if status == LP_OPTIMAL and self._rests_on_artificial_bound():
            return LP_UNBOUNDED
        return status

    def reoptimize(self) -> str:
        status = self._dual_loop()
        if status == LP_OPTIMAL and self._rests_on_artificial_bound():
            return LP_UNBOUNDED
        return status

    def change_var_bounds(self, changes) -> None:
        """Tighten/relax structural bounds; keeps dual feasibility via flips.

        Every changed variable must end up with a finite bound on the side
        it rests on (true for binaries, the only variables branch-and-bound
        touches).
        """
        for j, lo, hi in changes:
            self.lb[j] = lo
            self.ub[j] = hi
            if self.status[j] == BASIC:
                continue
            old = self.xval[j]
            st = self.status[j]
            val = lo if st == AT_LO else hi
            if st == AT_LO and self.d[j] < -_DUAL_TOL and np.isfinite(hi):
                st, val = AT_UP, hi
            elif st == AT_UP and self.d[j] > _DUAL_TOL and np.isfinite(lo):
                st, val = AT_LO, lo
            if not np.isfinite(val):
                raise NumericalBreakdown(f"variable {j} left resting on an infinite bound")
            self.status[j] = st
            dlt = val - old
            if dlt != 0.0:
                self.xval[self.basis] -= self.T[:, j] * dlt
                self.xval[j] = val

    def snapshot(self) -> tuple[np.ndarray, np.ndarray]:
        """Basis identity for later ``restore`` (cheap: two array copies)."""
        return self.basis.copy(), self.status.copy()

    def restore(self, snap: tuple[np.ndarray, np.ndarray]) -> None:
        """Adopt a previously snapshotted basis under the *current* bounds.

        Nonbasic variables snap to their bound, the tableau and reduced costs
        are refactorized exactly, and dual feasibility is repaired by bound
        flips. Call after ``change_var_bounds``.
        """
        basis, status = snap
        self.basis[:] = basis
        self.status[:] = status
        at_lo = self.status == AT_LO
        at_up = self.status == AT_UP
        self.xval[at_lo] = self.lb[at_lo]
        self.xval[at_up] = self.ub[at_up]
        self._refactorize()
        self._dual_repair()

    def _dual_repair(self) -> None:
        """Flip nonbasic variables whose reduced-cost sign is infeasible.

        Only variables with a finite opposite bound can flip; the rest keep
        their (tolerance-level) violation for the ratio test to clamp.
        """
        flip_up = (self.status == AT_LO) & (self.d < -_DUAL_TOL) & np.isfinite(self.ub)
        flip_lo = (self.status == AT_UP) & (self.d > _DUAL_TOL) & np.isfinite(self.lb)
        for j in np.nonzero(flip_up | flip_lo)[0]:
            if flip_up[j]:
                new_status, val = AT_UP, self.ub[j]
            else:
                new_status, val = AT_LO, self.lb[j]
            dlt = val - self.xval[j]
            self.status[j] = new_status
            if dlt != 0.0:
                self.xval[self.basis] -= self.T[:, j] * dlt
                self.xval[j] = val

    def values(self) -> np.ndarray:
        return self.xval[: self.n].copy()

    def objective(self) -> float:
        return float(self.c_full[: self.n] @ self.xval[: self.n])

    def dual_objective(self) -> float:
        """sum over nonbasic j of d_j * x_j; equals the primal objective at
        an optimum (rhs is zero in this computational form)."""
        nb = self.status != BASIC
        return float(self.d[nb] @ self.xval[nb])

    def max_primal_residual(self) -> float:
        """Drift check: row activities recomputed from structural values."""
        if self.m == 0:
            return 0.0
        act = self.A_ext[:, : self.n] @ self.xval[: self.n]
        return float(np.max(np.abs(act - self.xval[self.n:])))

    def _rests_on_artificial_bound(self) -> bool:
        # A positive reduced cost at an artificial lower bound means the true
        # (unbounded-below) variable still wants to decrease: unbounded LP.
        lo_rest = (self.status == AT_LO) & self.artificial_lo & (self.d > _DUAL_TOL)
        hi_rest = (self.status == AT_UP) & self.artificial_hi & (self.d < -_DUAL_TOL)
        if bool(np.any(lo_rest | hi_rest)):
            return True
        vb = self.xval[self.basis]
        near_hi = vb >= BIG_BOUND * (1.0 - 1e-9)
        near_lo = vb <= -BIG_BOUND * (1.0 - 1e-9)
        idx = self.basis
        return bool(np.any(near_hi & self.artificial_hi[idx])
                    or np.any(near_lo & self.artificial_lo[idx]))
