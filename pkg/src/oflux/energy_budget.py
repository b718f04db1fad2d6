"""Weak-solution residual, commutator remainder and the mollified energy budget.

Tensor pairings follow the transport structure of the momentum equation: for a
product F = a ⊗ b and a gradient tensor G_ij = d_i v_j the pairing is
F_ij G_ji = a_i b_j d_j v_i, so the second factor is the advecting field.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels
from .errors import DomainError, ShapeError
from .field_core import (FULL, HALF_PLUS, Region, TensorField, TimeSeries, VectorField,
                         divergence, inner_product, integrate, lp_norm, time_derivative,
                         time_weights, vector_gradient)
from .fitting import loglog_fit
from .mollifier import (MollKernel, _k_range, grad_mollify, make_kernel, mollify,
                        quadrature_samples, widen)
from .reflectex import extend, reflect, zero_extend

__all__ = ["weak_residual", "commutator_r", "budget", "BudgetReport", "BudgetRow",
           "lipschitz_in_time_check", "pair_transposed", "DIV_TOL"]

DIV_TOL = 1e-6


def pair_transposed(F: TensorField, G: TensorField, region: Region = FULL) -> float:
    """int sum_ij F_ij G_ji over region."""
    if F.grid != G.grid:
        raise ShapeError("tensors live on different grids")
    return inner_product(F, G.transpose(), region)


def _grad_pairing(a: np.ndarray, b: np.ndarray, G: np.ndarray) -> np.ndarray:
    # sum_ij a_i b_j G_ji, pointwise
    out = np.zeros(a.shape[1:])
    for i in range(3):
        if not np.any(a[i]):
            continue
        for j in range(3):
            if np.any(b[j]):
                out += a[i] * b[j] * G[j, i]
    return out


def _check_admissible(psi: TimeSeries) -> None:
    grid = psi.grid
    k0 = grid.k0
    upper = np.arange(grid.nz) >= k0
    upper[-1] = False
    for s in psi.snapshots:
        div = divergence(s)
        scale = float(np.abs(vector_gradient(s)).max()) or 1.0
        worst = float(np.abs(div[..., upper]).max()) / scale
        if worst > DIV_TOL:
            raise DomainError(f"test field is not divergence free: relative defect {worst:.3e} at t = {s.time}")
        normal = float(np.abs(s.comps[2, :, :, k0]).max())
        if normal > DIV_TOL * (float(np.abs(s.comps).max()) or 1.0):
            raise DomainError(f"test field has normal component {normal:.3e} on x3 = 0 at t = {s.time}")


def _weak_functional(u: TimeSeries, psi: TimeSeries) -> float:
    """<u(t), psi(t)> - <u(0), psi(0)> - int <u, d_t psi> - int <u ⊗ u : grad psi>, all over D+."""
    w = time_weights(u.times)
    snaps = [zero_extend(s) for s in u.snapshots]
    dpsi = time_derivative([p.comps for p in psi.snapshots], psi.times)
    total = inner_product(snaps[-1], psi.snapshots[-1], HALF_PLUS) \
        - inner_product(snaps[0], psi.snapshots[0], HALF_PLUS)
    grid = u.grid
    for wk, s, p, dp in zip(w, snaps, psi.snapshots, dpsi):
        total -= wk * inner_product(s, VectorField(grid, dp, p.support), HALF_PLUS)
        G = vector_gradient(p)
        total -= wk * integrate(_grad_pairing(s.comps, s.comps, G), grid, HALF_PLUS, (s.support,))
    return total


def weak_residual(u: TimeSeries, psi: TimeSeries, t: float) -> float:
    """Residual of the weak Euler formulation for one test field psi on [0, t].

    psi must be discretely divergence free with psi3 = 0 on x3 = 0.  Only these
    conditions and bounded difference quotients are enforced; no discrete H^3
    class is defined for the test fields.
    """
    if psi.times != u.times:
        raise DomainError("u and psi must share their snapshot times")
    us, ps = u.upto(t), psi.upto(t)
    _check_admissible(ps)
    return _weak_functional(us, ps)


def commutator_r(uE: VectorField, u: VectorField, k: MollKernel,
                 out_region: Region | None = None) -> TensorField:
    """r_eps(x) = sum_y phi_eps(y) (uE(x - y) - uE(x)) ⊗ (u(x - y) - u(x)) h^3."""
    if uE.grid != u.grid or uE.grid != k.grid:
        raise ShapeError("fields and kernel live on different grids")
    grid = u.grid
    offs, w, _ = k._flat()
    k_lo, k_hi = _k_range(grid, out_region)
    a = quadrature_samples(uE.comps, uE.support, grid)
    b = quadrature_samples(u.comps, u.support, grid)
    ia = [i for i in range(3) if np.any(a[i])]
    ib = [j for j in range(3) if np.any(b[j])]
    out = np.zeros((3, 3) + grid.shape)
    if ia and ib and k_hi > k_lo:
        part = np.zeros((len(ia), len(ib)) + grid.shape)
        _kernels.commutator(np.ascontiguousarray(a[ia]), np.ascontiguousarray(b[ib]),
                            offs, w, part, k_lo, k_hi)
        for p, i in enumerate(ia):
            for r, j in enumerate(ib):
                out[i, j] = part[p, r]
    # both increments must be nonzero, so the support is the intersection of the widened supports
    lo_a, hi_a = widen(uE.support, grid, k.epsilon / 2).bounds(grid)
    lo_b, hi_b = widen(u.support, grid, k.epsilon / 2).bounds(grid)
    lo, hi = max(lo_a, lo_b), min(hi_a, hi_b)
    if out_region is not None:
        rlo, rhi = out_region.bounds(grid)
        lo, hi = max(lo, rlo), min(hi, rhi)
    return TensorField(grid, out, Region.from_bounds(lo, hi, grid))


@dataclass
class BudgetRow:
    epsilon: float
    lhs_boundary: float
    lhs_time: float
    cross_term: float
    transport: float
    transport_ibp: float
    r_eps_term: float
    defect_term: float
    identity_gap: float        # lhsBoundary - lhsTime - (transport + rEps - defect)
    weak_form: float           # discrete weak functional of u tested with J J uE on D+
    identity_residual: float   # identity_gap - weak_form
    time_consistency: float    # 2 int <Ju, d_t Ju> - (|Ju(t)|^2 - |Ju(0)|^2)

    def __post_init__(self):
        for k, v in self.__dict__.items():
            setattr(self, k, float(v))

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class BudgetReport:
    t: float
    epsilons: list
    rows: list
    energy_gap: float
    slope_r_eps: float
    slope_defect: float
    slope_remainders: float
    grid: dict
    kernels: list = field(default_factory=list)
    energy_scale: float = 0.0     # max over snapshots of (1/2)||u||^2 on D+

    def relative(self, value: float) -> float:
        """value in units of the energy scale (plain value if the field is zero)."""
        return value / self.energy_scale if self.energy_scale > 0 else value

    def to_dict(self) -> dict:
        return {"t": self.t, "epsilons": self.epsilons, "rows": [r.to_dict() for r in self.rows],
                "energy_gap": self.energy_gap, "energy_scale": self.energy_scale, "slope_r_eps": self.slope_r_eps,
                "slope_defect": self.slope_defect, "slope_remainders": self.slope_remainders,
                "grid": self.grid, "kernels": self.kernels}

    def csv_rows(self) -> list[list]:
        cols = list(BudgetRow.__dataclass_fields__)
        rows = [cols + ["energy_gap"]]
        for r in self.rows:
            rows.append([getattr(r, c) for c in cols] + [self.energy_gap])
        return rows

    def row(self, epsilon: float) -> BudgetRow:
        for r in self.rows:
            if r.epsilon == epsilon:
                return r
        raise KeyError(epsilon)


def _dedupe(arrays):
    """Index of the first identical earlier array for each entry (steady series reuse work)."""
    first = []
    for n, a in enumerate(arrays):
        hit = n
        for m in range(n):
            if first[m] == m and np.array_equal(arrays[m], a):
                hit = m
                break
        first.append(hit)
    return first


def _budget_one(snaps0, snapsE, times, k: MollKernel, region: Region) -> BudgetRow:
    grid = k.grid
    eps = k.epsilon
    w = time_weights(times)
    # nodes that can influence the integrals over region: one kernel radius below it
    rlo = region.bounds(grid)[0]
    work = None if region.kind == "full" else Region.above(max(rlo, -grid.lz))
    same = _dedupe([s.comps for s in snaps0])
    Ju, JuE, per = [], [], []
    for n, (s0, sE) in enumerate(zip(snaps0, snapsE)):
        if same[n] != n:
            Ju.append(Ju[same[n]])
            JuE.append(JuE[same[n]])
            per.append(per[same[n]])
            continue
        ju = mollify(s0, k, work)
        jue = mollify(sE, k, work)
        G = grad_mollify(sE, k, out_region=work).comps
        r = commutator_r(sE, s0, k, work)
        a = quadrature_samples(s0.comps, s0.support, grid)
        tr = integrate(_grad_pairing(jue.comps, ju.comps, G), grid, region, (ju.support,))
        re = integrate(np.einsum("ij...,ji...->...", r.comps, G), grid, region, (r.support,))
        de = integrate(_grad_pairing(sE.comps - jue.comps, a - ju.comps, G), grid, region, (ju.support,))
        mag = (jue.comps * jue.comps).sum(axis=0)
        ibp = -0.5 * integrate(divergence(ju) * mag, grid, region, (ju.support,))
        per.append((tr, re, de, ibp))
        Ju.append(ju)
        JuE.append(jue)
    dJuE = time_derivative([j.comps for j in JuE], times)
    dJu = time_derivative([j.comps for j in Ju], times)
    lhs_b = inner_product(Ju[-1], JuE[-1], region) - inner_product(Ju[0], JuE[0], region)
    lhs_t = sum(wk * inner_product(ju, VectorField(grid, d), region)
                for wk, ju, d in zip(w, Ju, dJuE))
    cross = inner_product(Ju[-1], reflect(Ju[-1]), region) - inner_product(Ju[0], reflect(Ju[0]), region)
    tc = 2 * sum(wk * inner_product(ju, VectorField(grid, d), region) for wk, ju, d in zip(w, Ju, dJu)) \
        - (inner_product(Ju[-1], Ju[-1], region) - inner_product(Ju[0], Ju[0], region))
    tr = sum(wk * p[0] for wk, p in zip(w, per))
    re = sum(wk * p[1] for wk, p in zip(w, per))
    de = sum(wk * p[2] for wk, p in zip(w, per))
    ibp = sum(wk * p[3] for wk, p in zip(w, per))
    gap = lhs_b - lhs_t - (tr + re - de)
    # test field J J uE on the upper half slab (one node below for the stencils)
    psi_region = Region.above(-grid.hz) if work is not None else None
    psi = []
    for n, jue in enumerate(JuE):
        if same[n] != n:
            psi.append(psi[same[n]].replace(time=times[n]))
            continue
        p = mollify(jue, k, psi_region)
        psi.append(VectorField(grid, p.comps, FULL, times[n]))
    u_series = TimeSeries(tuple(times), tuple(s.replace(time=t) for s, t in zip(snaps0, times)))
    weak = _weak_functional(u_series, TimeSeries(tuple(times), tuple(psi)))
    return BudgetRow(eps, lhs_b, lhs_t, cross, tr, ibp, re, de, gap, weak, gap - weak, tc)


def budget(u: TimeSeries, epsilons: Sequence[float], t: float | None = None,
           region: str = "above") -> BudgetReport:
    """Every term of the mollified energy identity for each epsilon.

    region="above" integrates over D_{>-eps}, where all integrands live;
    region="full" integrates over the whole slab (same values, more work).
    """
    t = u.times[-1] if t is None else t
    sub = u.upto(t)
    grid = sub.grid
    eps = sorted((float(e) for e in epsilons), reverse=True)
    if len(set(eps)) != len(eps):
        raise DomainError("epsilon ladder has repeated values")
    if eps and eps[0] > grid.lz:
        raise DomainError(f"epsilon = {eps[0]:.6g} exceeds Lz = {grid.lz:.6g}; the budget region D_(>-eps) must fit in the slab")
    kernels = [make_kernel(e, grid) for e in eps]
    snaps0 = [zero_extend(s) for s in sub.snapshots]
    snapsE = [extend(s).field for s in sub.snapshots]
    energies = [0.5 * inner_product(s, s, HALF_PLUS) for s in snaps0]
    e_gap = energies[-1] - energies[0]
    rows = []
    for k in kernels:
        reg = FULL if region == "full" else Region.above(-k.epsilon)
        rows.append(_budget_one(snaps0, snapsE, sub.times, k, reg))
    r_abs = [abs(r.r_eps_term) for r in rows]
    d_abs = [abs(r.defect_term) for r in rows]
    return BudgetReport(
        t=float(t), epsilons=eps, rows=rows, energy_gap=e_gap,
        slope_r_eps=loglog_fit(eps, r_abs).slope,
        slope_defect=loglog_fit(eps, d_abs).slope,
        slope_remainders=loglog_fit(eps, [a + b for a, b in zip(r_abs, d_abs)]).slope,
        grid=grid.to_dict(), kernels=[k.to_dict() for k in kernels], energy_scale=max(energies))


def lipschitz_in_time_check(u: TimeSeries, epsilon: float) -> float:
    """max over snapshot pairs of ||J uE(t) - J uE(s)||_{L2(D+)} / |t - s|."""
    if len(u) < 2:
        raise DomainError("lipschitz_in_time_check needs at least 2 snapshots")
    k = make_kernel(epsilon, u.grid)
    grid = u.grid
    moll = []
    same = _dedupe([s.comps for s in u.snapshots])
    for n, s in enumerate(u.snapshots):
        moll.append(moll[same[n]] if same[n] != n
                    else mollify(extend(s).field, k, Region.above(-grid.hz)).comps)
    worst = 0.0
    for i in range(len(u)):
        for j in range(i + 1, len(u)):
            d = VectorField(grid, moll[j] - moll[i])
            worst = max(worst, lp_norm(d, 2, HALF_PLUS) / (u.times[j] - u.times[i]))
    return worst
