"""Two-phase (oil-water) IMPES engine with dissolved gas via gas content.

Formulation: per-cell reference-volume accumulations

    A_f = V_bulk * phi_ref * s_f * exp((c_r - c_f) * (p - p_ref))

advance exactly by face fluxes and well terms,

    A_f(t+dt) = A_f(t) + dt * (flux divergence + injection - production),

and the pressure field is the root of the volume constraint
sum_f A_f / e_f(p) = V_bulk * phi_ref (i.e. s_o + s_w = 1). The constraint
is solved per sub-step by Newton-Picard iterations over a symmetrized
SPD Jacobian (CG + Jacobi), with upstream mobilities frozen at the
sub-step start. Saturations then follow from the accumulations directly,
so per-phase mass balance holds to roundoff by construction and the
rates module reproduces well totals exactly.

Fluxes use two-point transmissibilities, harmonic layer permeability in
z, upstream-weighted Corey mobilities and phase-density gravity. Wells:
Peaceman index producers (flowing only where p > bhp) and a
rate-controlled water injector distributed over its perforations by
total mobility. No-flow boundaries everywhere else.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import LinearOperator, cg, splu

from ..core.errors import CflError, ConvergenceError, InvariantError
from ..core.types import Control, RateRecord, ReservoirState
from .props import (
    DARCY_CONST,
    GRAVITY_BAR,
    RockFluidProps,
    SimGrid,
    WellSpec,
    peaceman_wi,
    validate_wells,
)

MAX_SUBSTEPS = 64
MAX_DSAT_PER_SUBSTEP = 0.1
SAT_SLACK = 1e-9
PICARD_TOL = 1e-12
PICARD_MAX = 30
CG_TOL = 1e-8
CG_MAXITER = 2000


class _CflViolation(Exception):
    pass


@dataclass
class StepDiagnostics:
    substeps: int = 0
    picard_iterations: int = 0
    cg_iterations: int = 0
    max_dsw: float = 0.0
    produced_oil_ref: float = 0.0  # m3 at p_ref over the step
    produced_wat_ref: float = 0.0
    injected_wat_ref: float = 0.0


class UnitSim:
    """Simulator for one development unit (fixed grid, props and wells)."""

    def __init__(
        self,
        grid: SimGrid,
        props: RockFluidProps,
        wells: Sequence[WellSpec],
        p_ref: float,
        verbose: bool = False,
    ):
        if props.perm_layers.size != grid.nz:
            raise InvariantError("perm_layers length must equal nz")
        validate_wells(wells, grid)
        self.grid = grid
        self.props = props
        self.wells = list(wells)
        self.p_ref = float(p_ref)
        self.verbose = verbose

        nx, ny, nz = grid.shape
        self.n = grid.n_cells
        self.vphi = grid.cell_volume * props.phi_ref
        perm = props.perm_layers

        # Face transmissibilities (geometric part incl. unit constant).
        self.tx = np.broadcast_to(
            DARCY_CONST * perm * grid.dy * grid.dz / grid.dx, (nx - 1, ny, nz)
        ).copy() if nx > 1 else np.zeros((0, ny, nz))
        self.ty = np.broadcast_to(
            DARCY_CONST * perm * grid.dx * grid.dz / grid.dy, (nx, ny - 1, nz)
        ).copy() if ny > 1 else np.zeros((nx, 0, nz))
        if nz > 1:
            kh = 2.0 * perm[:-1] * perm[1:] / (perm[:-1] + perm[1:])
            self.tz = np.broadcast_to(
                DARCY_CONST * kh * grid.dx * grid.dy / grid.dz, (nx, ny, nz - 1)
            ).copy()
        else:
            self.tz = np.zeros((nx, ny, 0))

        self.depth = np.broadcast_to(grid.layer_depths(), grid.shape).copy()

        # Sparse-pattern bookkeeping (COO duplicates sum on conversion).
        idx3 = np.arange(self.n).reshape(grid.shape)
        rows, cols = [np.arange(self.n)], [np.arange(self.n)]  # storage diag
        self._face_pairs = []
        for axis, n_faces in ((0, self.tx.size), (1, self.ty.size), (2, self.tz.size)):
            if n_faces == 0:
                self._face_pairs.append((None, None))
                continue
            sl_lo = [slice(None)] * 3
            sl_hi = [slice(None)] * 3
            sl_lo[axis] = slice(None, -1)
            sl_hi[axis] = slice(1, None)
            fi = idx3[tuple(sl_lo)].ravel()
            fj = idx3[tuple(sl_hi)].ravel()
            self._face_pairs.append((fi, fj))
            rows.extend([fi, fj, fi, fj])
            cols.extend([fj, fi, fi, fj])
        self._prod_cells = np.array([], dtype=np.int64)
        self._prod_wi = np.array([])
        self._inj_cells = np.array([], dtype=np.int64)
        self._inj_wi = np.array([])
        for w in self.wells:
            cells = w.cells(grid)
            flat = np.array([idx3[c] for c in cells], dtype=np.int64)
            layer_perm = np.array(
                [perm[c[2]] for c in cells] if w.orientation == "vertical"
                else [perm[w.layer]] * len(cells)
            )
            wi = np.array(
                [peaceman_wi(grid, km, w.orientation) for km in layer_perm]
            )
            if w.kind == "producer":
                self._prod_cells, self._prod_wi = flat, wi
            else:
                self._inj_cells, self._inj_wi = flat, wi
        if self._prod_cells.size:
            rows.append(self._prod_cells)
            cols.append(self._prod_cells)
        self._rows = np.concatenate(rows)
        self._cols = np.concatenate(cols)

    # -- initial state -----------------------------------------------------

    def init_state(self, p_init: float, p_sat: float, woc_depth: float) -> ReservoirState:
        """Equilibrium state: zone-consistent hydrostatics, Corey endpoints.

        Pressure integrates the mobile phase density of each zone (oil
        above the water-oil contact, water below) from p_init at the
        reservoir top, which makes the state an exact discrete steady
        state of the flux scheme. Fails if any cell pressure falls to or
        below the saturation pressure (free gas at equilibrium).
        """
        g = self.grid
        pr = self.props
        depths = g.layer_depths()
        woc = float(woc_depth)

        def head(d: float) -> float:
            oil_span = max(0.0, min(d, woc) - g.depth_top)
            wat_span = max(0.0, d - max(woc, g.depth_top))
            return GRAVITY_BAR * (pr.rho_o * oil_span + pr.rho_w * wat_span)

        p_layer = p_init + np.array([head(d) for d in depths])
        if np.any(p_layer <= p_sat):
            raise InvariantError(
                "free gas at equilibrium unsupported: pressure reaches "
                f"p_sat={p_sat} bar within the column"
            )
        s_w_layer = np.where(depths > woc, 1.0 - pr.corey.s_or, pr.corey.s_wc)
        p = np.broadcast_to(p_layer, g.shape).copy()
        s_w = np.broadcast_to(s_w_layer, g.shape).copy()
        return ReservoirState(
            pressure=p, s_oil=1.0 - s_w, s_wat=s_w, time_index=0
        )

    # -- one dt step with automatic sub-stepping -----------------------------

    def step(
        self, state: ReservoirState, control: Control, dt_days: float
    ) -> tuple[ReservoirState, RateRecord, StepDiagnostics]:
        if dt_days <= 0:
            raise InvariantError("dt must be > 0")
        diag = StepDiagnostics()
        p = np.array(state.pressure, dtype=np.float64)
        s_w = np.array(state.s_wat, dtype=np.float64)
        s_o = np.array(state.s_oil, dtype=np.float64)
        remaining = dt_days
        sub = dt_days
        floor = dt_days / MAX_SUBSTEPS
        while remaining > 1e-12 * dt_days:
            sub_eff = min(sub, remaining)
            try:
                p, s_w, s_o = self._advance(p, s_w, s_o, control, sub_eff, diag)
            except _CflViolation as v:
                sub = sub / 2.0
                if sub < floor * (1.0 - 1e-9):
                    raise CflError(
                        f"saturation update unstable at dt/{MAX_SUBSTEPS}: {v}"
                    ) from None
                continue
            remaining -= sub_eff
            diag.substeps += 1
        new_state = ReservoirState(
            pressure=p, s_oil=s_o, s_wat=s_w, time_index=state.time_index + 1
        )
        pr = self.props
        oil_ref_rate = diag.produced_oil_ref / dt_days
        rec = RateRecord(
            oil=oil_ref_rate / pr.b_o_ref,
            water=diag.produced_wat_ref / dt_days / pr.b_w_ref,
            gas=pr.gamma * oil_ref_rate,
        )
        return new_state, rec, diag

    def _advance(self, p0, s_w0, s_o0, control: Control, dt, diag: StepDiagnostics):
        """One explicit-saturation sub-step; raises _CflViolation to retry."""
        pr = self.props
        vphi = self.vphi
        a_o = pr.c_r - pr.c_o
        a_w = pr.c_r - pr.c_w

        e_o0 = np.exp(a_o * (p0 - self.p_ref))
        e_w0 = np.exp(a_w * (p0 - self.p_ref))
        acc_o0 = vphi * s_o0 * e_o0
        acc_w0 = vphi * s_w0 * e_w0

        # Frozen upstream mobilities from the sub-step start.
        krw = pr.corey.krw(s_w0)
        kro = pr.corey.kro(s_w0)
        lam_o = kro / pr.mu_o
        lam_w = krw / pr.mu_w
        pot_o0 = p0 - pr.rho_o * GRAVITY_BAR * self.depth
        pot_w0 = p0 - pr.rho_w * GRAVITY_BAR * self.depth
        face_lam = []  # per axis: (lam_o_face, lam_w_face)
        for axis in range(3):
            fl = []
            for lam, pot in ((lam_o, pot_o0), (lam_w, pot_w0)):
                lo = [slice(None)] * 3
                hi = [slice(None)] * 3
                lo[axis] = slice(None, -1)
                hi[axis] = slice(1, None)
                dpot = pot[tuple(lo)] - pot[tuple(hi)]
                fl.append(np.where(dpot > 0, lam[tuple(lo)], lam[tuple(hi)]))
            face_lam.append(fl)

        # Producer mobilities at perforations (cell is the upstream side).
        prod_lam_o = lam_o.ravel()[self._prod_cells]
        prod_lam_w = lam_w.ravel()[self._prod_cells]
        bhp = control.bhp_prod
        # Injector split by total mobility (fixed over the sub-step).
        inj_rate = control.inj_rate_wat
        if self._inj_cells.size and inj_rate > 0:
            lam_t = (lam_o + lam_w).ravel()[self._inj_cells]
            weights = self._inj_wi * lam_t
            tot = weights.sum()
            if tot <= 0:
                weights = np.full(len(weights), 1.0 / len(weights))
            else:
                weights = weights / tot
            q_inj_cells = inj_rate * weights
        else:
            q_inj_cells = None

        gdepth_o = pr.rho_o * GRAVITY_BAR * self.depth
        gdepth_w = pr.rho_w * GRAVITY_BAR * self.depth
        trans = (self.tx, self.ty, self.tz)

        p = p0.copy()
        acc_o_new = acc_w_new = None
        q_prod_o = q_prod_w = None
        converged = False
        solver = None  # (matrix, LU preconditioner), frozen per sub-step
        active_key = None
        for it in range(PICARD_MAX):
            diag.picard_iterations += 1
            e_o = np.exp(a_o * (p - self.p_ref))
            e_w = np.exp(a_w * (p - self.p_ref))
            pot_o = p - gdepth_o
            pot_w = p - gdepth_w
            div_o = np.zeros_like(p)
            div_w = np.zeros_like(p)
            cond_o_faces, cond_w_faces = [], []
            for axis in range(3):
                T = trans[axis]
                if T.size == 0:
                    cond_o_faces.append(None)
                    cond_w_faces.append(None)
                    continue
                lo = [slice(None)] * 3
                hi = [slice(None)] * 3
                lo[axis] = slice(None, -1)
                hi[axis] = slice(1, None)
                lo, hi = tuple(lo), tuple(hi)
                co = T * face_lam[axis][0]
                cw = T * face_lam[axis][1]
                fo = co * (pot_o[lo] - pot_o[hi])
                fw = cw * (pot_w[lo] - pot_w[hi])
                div_o[lo] -= fo
                div_o[hi] += fo
                div_w[lo] -= fw
                div_w[hi] += fw
                cond_o_faces.append(co)
                cond_w_faces.append(cw)
            q_prod_o = np.zeros(0)
            q_prod_w = np.zeros(0)
            active = np.zeros(0, dtype=bool)
            src_o = np.zeros_like(p)
            src_w = np.zeros_like(p)
            if self._prod_cells.size:
                p_perf = p.ravel()[self._prod_cells]
                active = p_perf > bhp
                drawdown = np.where(active, p_perf - bhp, 0.0)
                q_prod_o = self._prod_wi * prod_lam_o * drawdown
                q_prod_w = self._prod_wi * prod_lam_w * drawdown
                np.add.at(src_o.ravel(), self._prod_cells, -q_prod_o)
                np.add.at(src_w.ravel(), self._prod_cells, -q_prod_w)
            if q_inj_cells is not None:
                np.add.at(src_w.ravel(), self._inj_cells, q_inj_cells)

            acc_o_new = acc_o0 + dt * (div_o + src_o)
            acc_w_new = acc_w0 + dt * (div_w + src_w)
            resid = vphi - (acc_o_new / e_o + acc_w_new / e_w)
            if np.max(np.abs(resid)) <= PICARD_TOL * vphi:
                converged = True
                break

            # Symmetrized Newton system: storage diagonal plus face/well
            # conductances scaled by face-averaged volume factors. The
            # Jacobian is frozen over the sub-step (modified Newton) and
            # refactored only when the producer active set flips; its LU
            # factors precondition CG, which then converges in a few
            # iterations regardless of transmissibility contrast.
            key = active.tobytes() if active.size else b""
            if solver is None or key != active_key:
                diag_store = a_o * acc_o0 / e_o + a_w * acc_w0 / e_w
                vals = [diag_store.ravel()]
                for axis in range(3):
                    co, cw = cond_o_faces[axis], cond_w_faces[axis]
                    if co is None:
                        continue
                    lo = [slice(None)] * 3
                    hi = [slice(None)] * 3
                    lo[axis] = slice(None, -1)
                    hi[axis] = slice(1, None)
                    lo, hi = tuple(lo), tuple(hi)
                    eo_face = 0.5 * (e_o[lo] + e_o[hi])
                    ew_face = 0.5 * (e_w[lo] + e_w[hi])
                    g_face = dt * (co / eo_face + cw / ew_face)
                    gf = g_face.ravel()
                    vals.extend([-gf, -gf, gf, gf])
                if self._prod_cells.size:
                    e_o_perf = e_o.ravel()[self._prod_cells]
                    e_w_perf = e_w.ravel()[self._prod_cells]
                    g_well = dt * active * self._prod_wi * (
                        prod_lam_o / e_o_perf + prod_lam_w / e_w_perf
                    )
                    vals.append(g_well)
                matrix = sparse.coo_matrix(
                    (np.concatenate(vals), (self._rows, self._cols)),
                    shape=(self.n, self.n),
                ).tocsr()
                lu = splu(matrix.tocsc())
                precond = LinearOperator(
                    matrix.shape, matvec=lu.solve, dtype=np.float64
                )
                solver = (matrix, precond)
                active_key = key
            matrix, precond = solver
            iters = [0]

            def count(_xk):
                iters[0] += 1

            delta, info = cg(
                matrix,
                resid.ravel(),
                rtol=CG_TOL,
                atol=0.0,
                maxiter=CG_MAXITER,
                M=precond,
                callback=count,
            )
            diag.cg_iterations += iters[0]
            if info != 0:
                raise ConvergenceError(
                    f"pressure CG failed (info={info}) after {iters[0]} iterations",
                    iterations=iters[0],
                )
            # The volume-constraint Jacobian is the negative of the
            # assembled SPD matrix, so the Newton update is subtractive.
            p = p - delta.reshape(p.shape)
        if not converged:
            raise ConvergenceError(
                f"pressure iteration stalled after {PICARD_MAX} Newton updates",
                iterations=PICARD_MAX,
            )

        e_o = np.exp(a_o * (p - self.p_ref))
        e_w = np.exp(a_w * (p - self.p_ref))
        s_w = acc_w_new / (vphi * e_w)
        s_o = acc_o_new / (vphi * e_o)
        dsw_max = float(np.max(np.abs(s_w - s_w0)))
        if dsw_max > MAX_DSAT_PER_SUBSTEP:
            raise _CflViolation(f"max dS_w {dsw_max:.3f}")
        # Residual-saturation endpoints are relperm endpoints, not hard
        # bounds: compression legitimately moves saturations past them by
        # O(c dp). Only the physical [0, 1] range is enforced here.
        if (
            np.any(s_w < -SAT_SLACK)
            or np.any(s_w > 1.0 + SAT_SLACK)
            or np.any(s_o < -SAT_SLACK)
            or np.any(s_o > 1.0 + SAT_SLACK)
        ):
            raise _CflViolation("saturation left [0, 1]")
        diag.max_dsw = max(diag.max_dsw, dsw_max)
        diag.produced_oil_ref += dt * float(q_prod_o.sum())
        diag.produced_wat_ref += dt * float(q_prod_w.sum())
        if q_inj_cells is not None:
            diag.injected_wat_ref += dt * float(q_inj_cells.sum())
        return p, s_w, s_o


def simulate_unit(
    sim: UnitSim,
    controls: Sequence[Control],
    dt_days: float,
    p_init: float,
    p_sat: float,
    woc_depth: float,
    stop_oil_rate: float,
    max_steps: Optional[int] = None,
    verbose: bool = False,
) -> tuple[list[ReservoirState], list[RateRecord], list[StepDiagnostics]]:
    """Run until the horizon or until surface oil rate drops below the
    shut-in threshold; the sub-threshold step itself is discarded."""
    import sys

    state = sim.init_state(p_init, p_sat, woc_depth)
    states = [state]
    rates: list[RateRecord] = []
    diags: list[StepDiagnostics] = []
    horizon = len(controls) if max_steps is None else min(len(controls), max_steps)
    for t in range(horizon):
        new_state, rec, diag = sim.step(state, controls[t], dt_days)
        if verbose:
            print(
                f"step {t}: picard={diag.picard_iterations} cg={diag.cg_iterations}"
                f" substeps={diag.substeps} oil={rec.oil:.3f} m3/d",
                file=sys.stderr,
            )
        if rec.oil < stop_oil_rate:
            break
        state = new_state
        states.append(new_state)
        rates.append(rec)
        diags.append(diag)
    return states, rates, diags
