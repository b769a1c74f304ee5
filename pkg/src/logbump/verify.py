"""Measurable checks of the localization and multiplicity predictions.

Each check is a pure function of recorded numbers, so every verdict can be
recomputed from the emitted CSV without rerunning solves.  Empirical
thresholds (the lambda beyond which a bound first holds) are discovered
and reported, never asserted a priori.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from logbump.domain import Field, Grid, PotentialSpec, integrate, neg_laplacian
from logbump.functional import gausson_values, h1_distance
from logbump.penalty import s_log_sq
from logbump.solver import (
    SolveRecord,
    SolverConfig,
    multi_bump_init,
    solve_auxiliary,
)

# -- rows and verdicts -------------------------------------------------------


@dataclass(frozen=True)
class SweepRow:
    """One (lambda, gamma) evaluation; the unit of the energies CSV."""

    lam: float
    gamma: tuple[int, ...]
    converged: bool
    phi_total: float
    b_upper: float
    c_gamma: float
    lambda_v_mass: float
    outside_norm_sq: float
    sup_outside: float
    a0: float
    min_u: float
    mass_frac: float
    occupied: tuple[int, ...]
    i_lambda: tuple[float, ...]
    c_dirichlet: tuple[float, ...]
    c_lambda: tuple[float, ...]


@dataclass(frozen=True)
class Verdict:
    name: str
    passed: bool
    margin: float
    detail: str


def _groups(rows: list[SweepRow]) -> dict[tuple[int, ...], list[SweepRow]]:
    out: dict[tuple[int, ...], list[SweepRow]] = {}
    for row in rows:
        out.setdefault(row.gamma, []).append(row)
    for grp in out.values():
        grp.sort(key=lambda r: r.lam)
    return out


def check_linfty_outside(sup_outside: float, a0: float):
    """Sup bound outside the enlarged wells; margin is a0 - sup."""
    return sup_outside <= a0, a0 - sup_outside


def linfty_threshold(rows: list[SweepRow]):
    """Smallest recorded lambda from which the sup bound holds onward.

    Returns None when the bound fails at the largest lambda.
    """
    rows = sorted(rows, key=lambda r: r.lam)
    threshold = None
    for row in rows:
        ok, _ = check_linfty_outside(row.sup_outside, row.a0)
        if ok:
            if threshold is None:
                threshold = row.lam
        else:
            threshold = None
    return threshold


def check_sandwich(sum_c_lambda: float, b_upper: float, c_gamma: float,
                   allowance: float = 0.02):
    """Two-sided level bound with a resolution allowance (fraction of the
    upper level)."""
    eps = allowance * c_gamma
    lower_ok = sum_c_lambda - eps <= b_upper
    upper_ok = b_upper <= c_gamma + eps
    margin = min(b_upper - (sum_c_lambda - eps), (c_gamma + eps) - b_upper)
    return lower_ok and upper_ok, margin


def _tail_decreasing(values: list[float], slack: float = 1.05,
                     tail: int = 3) -> tuple[bool, float]:
    """Last `tail` values nonincreasing up to a multiplicative slack.

    Returns (ok, worst ratio v[i+1]/v[i])."""
    vals = values[-tail:]
    if len(vals) < 2:
        return True, 0.0
    ratios = [b / a if a > 0 else math.inf for a, b in zip(vals, vals[1:])]
    worst = max(ratios)
    return worst <= slack, worst


def compute_verdicts(
    rows: list[SweepRow],
    k: int,
    sandwich_allowance: float = 0.02,
    gap_tol: float = 0.01,
    fidelity: float = 0.99,
    trend_slack: float = 1.05,
) -> list[Verdict]:
    """All pass/fail verdicts derivable from the recorded rows."""
    groups = _groups(rows)
    verdicts: list[Verdict] = []

    conv_ok = all(r.converged for r in rows)
    verdicts.append(
        Verdict("convergence", conv_ok, 0.0,
                "all solves converged" if conv_ok else "flagged solves present")
    )

    pos_ok = all(r.min_u >= 0.0 for r in rows)
    top_rows = [grp[-1] for grp in groups.values()]
    occ_ok = all(r.occupied == r.gamma for r in top_rows)
    verdicts.append(
        Verdict("positivity", pos_ok and occ_ok,
                min((r.min_u for r in rows), default=0.0),
                "min u >= 0 and every selected well carries a bump")
    )

    lin_ok = True
    lin_margin = math.inf
    thresholds = []
    for gamma, grp in groups.items():
        ok, margin = check_linfty_outside(grp[-1].sup_outside, grp[-1].a0)
        lin_ok &= ok
        lin_margin = min(lin_margin, margin)
        thr = linfty_threshold(grp)
        thresholds.append(f"gamma={'+'.join(map(str, gamma))}: "
                          f"{'never' if thr is None else f'{thr:g}'}")
    verdicts.append(
        Verdict("linfty_outside", lin_ok, lin_margin,
                "empirical lambda thresholds " + "; ".join(thresholds))
    )

    trend_ok = True
    worst = 0.0
    for grp in groups.values():
        if len(grp) < 3:
            continue
        ok1, w1 = _tail_decreasing([r.lambda_v_mass for r in grp], trend_slack)
        ok2, w2 = _tail_decreasing([r.outside_norm_sq for r in grp], trend_slack)
        trend_ok &= ok1 and ok2
        worst = max(worst, w1, w2)
    verdicts.append(
        Verdict("localization_trend", trend_ok, trend_slack - worst,
                f"worst tail ratio {worst:.4f} (slack {trend_slack})")
    )

    sand_ok = True
    sand_margin = math.inf
    for grp in groups.values():
        row = grp[-1]
        csum = sum(row.c_lambda[j - 1] for j in row.gamma)
        ok, margin = check_sandwich(csum, row.b_upper, row.c_gamma,
                                    sandwich_allowance)
        sand_ok &= ok
        sand_margin = min(sand_margin, margin)
    verdicts.append(
        Verdict("energy_sandwich", sand_ok, sand_margin,
                f"allowance {sandwich_allowance:.0%} of the well-sum level")
    )

    gap_ok = True
    gap_worst = 0.0
    for grp in groups.values():
        row = grp[-1]
        gap = abs(row.phi_total - row.c_gamma) / row.c_gamma
        gap_worst = max(gap_worst, gap)
        gap_ok &= gap <= gap_tol
    verdicts.append(
        Verdict("limit_energy_gap", gap_ok, gap_tol - gap_worst,
                f"worst relative gap {gap_worst:.3e} at the largest lambda")
    )

    fid_ok = True
    fid_margin = math.inf
    for grp in groups.values():
        frac = grp[-1].mass_frac
        fid_ok &= frac >= fidelity
        fid_margin = min(fid_margin, frac - fidelity)
    verdicts.append(
        Verdict("bump_fidelity", fid_ok, fid_margin,
                f"required mass fraction {fidelity:.0%} in the enlargements")
    )

    if len(groups) == 2**k - 1:
        masks_seen = {grp[-1].occupied for grp in groups.values()}
        match = all(grp[-1].occupied == gamma for gamma, grp in groups.items())
        mult_ok = len(masks_seen) == 2**k - 1 and match
        verdicts.append(
            Verdict("multiplicity", mult_ok,
                    float(len(masks_seen) - (2**k - 1)),
                    f"{len(masks_seen)} distinct occupation masks of "
                    f"{2**k - 1} expected")
        )
    return verdicts


# -- limit problem -----------------------------------------------------------


@dataclass(frozen=True)
class LimitRow:
    lam: float
    h1_gap: float
    h1_gap_rel: float
    phi_gap_rel: float


def check_limit_problem(steps, omegas: list[Field], c_gamma: float) -> list[LimitRow]:
    """Distance of the sweep fields to the superposed well ground states.

    Both the discrete H1 gap and the energy gap should shrink along the
    tail of an ascending sweep as the wells deepen.
    """
    target = omegas[0].copy()
    for w in omegas[1:]:
        target.values = target.values + w.values
    tnorm = h1_distance(target, Field.zeros(target.grid))
    out = []
    for st in steps:
        gap = h1_distance(st.record.field, target)
        out.append(
            LimitRow(
                lam=st.lam,
                h1_gap=gap,
                h1_gap_rel=gap / tnorm,
                phi_gap_rel=abs(st.report.total - c_gamma) / abs(c_gamma),
            )
        )
    return out


# -- multiplicity scan -------------------------------------------------------


@dataclass(frozen=True)
class ScanEntry:
    gamma: tuple[int, ...]
    occupied: tuple[int, ...]
    converged: bool
    energy: float
    record: SolveRecord


@dataclass(frozen=True)
class MultiplicityScan:
    entries: tuple[ScanEntry, ...]
    distinct: int
    expected: int

    @property
    def count_ok(self) -> bool:
        return self.distinct == self.expected

    @property
    def masks_match(self) -> bool:
        return all(e.occupied == e.gamma for e in self.entries)


def multiplicity_scan(
    lam: float,
    omegas: list[Field],
    big_t: float,
    grid: Grid,
    potential: PotentialSpec,
    params,
    config: SolverConfig,
) -> MultiplicityScan:
    """Solve the penalized problem for every nonempty well subset and
    classify each solution by its occupied wells."""
    import itertools

    k = potential.geometry.k
    if len(omegas) != k:
        raise ValueError("need one ground state per well")
    entries = []
    for size in range(1, k + 1):
        for gamma in itertools.combinations(range(1, k + 1), size):
            ws = [omegas[j - 1] for j in gamma]
            init = multi_bump_init(ws, [1.0 / big_t] * len(ws), big_t)
            rec = solve_auxiliary(lam, gamma, init, grid, potential, params, config)
            entries.append(
                ScanEntry(
                    gamma=gamma,
                    occupied=rec.bump_mask,
                    converged=rec.converged,
                    energy=rec.energy,
                    record=rec,
                )
            )
    distinct = len({e.occupied for e in entries})
    return MultiplicityScan(
        entries=tuple(entries), distinct=distinct, expected=2**k - 1
    )


# -- discretization order ----------------------------------------------------


def log_equation_residual_norm(u: Field) -> float:
    """Discrete L2 norm of -lap u - u log u^2 over the interior."""
    res = neg_laplacian(u).values - np.asarray(s_log_sq(u.values))
    return math.sqrt(integrate(res * res, u.grid))


@dataclass(frozen=True)
class OrderStudy:
    hs: tuple[float, ...]
    residuals: tuple[float, ...]
    ratios: tuple[float, ...]
    fitted_order: float


def gausson_order_study(dim: int, r: float, n_list) -> OrderStudy:
    """Residual decay of the exact Gaussian solution under h-refinement.

    The box must be wide enough that the tail is negligible at the
    boundary (r >= 8 gives tails below 1e-13).
    """
    hs = []
    residuals = []
    for n in n_list:
        grid = Grid(dim=dim, r=r, n=int(n))
        u = Field(grid, gausson_values(grid))
        hs.append(grid.h)
        residuals.append(log_equation_residual_norm(u))
    ratios = tuple(
        residuals[i] / residuals[i + 1] for i in range(len(residuals) - 1)
    )
    slope = np.polyfit(np.log(hs), np.log(residuals), 1)[0]
    return OrderStudy(
        hs=tuple(hs),
        residuals=tuple(residuals),
        ratios=ratios,
        fitted_order=float(slope),
    )


# -- bookkeeping -------------------------------------------------------------


def norm_partition_gap(u: Field, region_masks, lam: float,
                       potential: PotentialSpec) -> float:
    """|full norm - (outside-wells part + per-well parts)|, which must be
    at rounding level because the nodal gradient density is additive."""
    from logbump.domain import restricted_norm_sq

    full_mask = np.ones(u.grid.full_shape, dtype=bool)
    total = restricted_norm_sq(u, full_mask, lam, potential)
    parts = restricted_norm_sq(u, region_masks.outside_wells, lam, potential)
    for j in region_masks.gamma:
        parts += restricted_norm_sq(u, region_masks.per_well[j - 1], lam, potential)
    for j in range(1, potential.geometry.k + 1):
        if j not in region_masks.gamma:
            parts += restricted_norm_sq(u, region_masks.per_well[j - 1], lam,
                                        potential)
    return abs(total - parts)


def fit_log_envelope(h1_norms, log_masses):
    """Least-squares envelope  int u^2 log u^2 <= A + B log ||u||  over a
    corpus of fields (measurement only; the constants are not universal)."""
    x = np.log(np.asarray(h1_norms, dtype=float))
    y = np.asarray(log_masses, dtype=float)
    b, a = np.polyfit(x, y, 1)
    shift = float(np.max(y - (a + b * x)))
    return a + shift, b
