"""Verification harness: verdicts, limit tables, scans, and order studies."""

import math

import numpy as np
import pytest

from logbump.domain import Field, Grid, masks
from logbump.verify import (
    LimitRow,
    SweepRow,
    check_limit_problem,
    check_linfty_outside,
    check_sandwich,
    compute_verdicts,
    fit_log_envelope,
    gausson_order_study,
    linfty_threshold,
    log_equation_residual_norm,
    norm_partition_gap,
)


def make_row(lam, gamma=(1, 2), sup=1e-8, lamv=1e-3, outn=1e-2, phi=4.8,
             b=4.81, cg=4.82, occ=None, conv=True, frac=0.999, min_u=0.0):
    return SweepRow(
        lam=lam,
        gamma=gamma,
        converged=conv,
        phi_total=phi,
        b_upper=b,
        c_gamma=cg,
        lambda_v_mass=lamv,
        outside_norm_sq=outn,
        sup_outside=sup,
        a0=0.3,
        min_u=min_u,
        mass_frac=frac,
        occupied=gamma if occ is None else occ,
        i_lambda=(2.4, 2.4),
        c_dirichlet=(2.41, 2.41),
        c_lambda=(2.405, 2.405),
    )


# -- elementary checks ---------------------------------------------------------


def test_linfty_check_and_threshold():
    ok, margin = check_linfty_outside(0.1, 0.3)
    assert ok and margin == pytest.approx(0.2)
    ok, margin = check_linfty_outside(0.5, 0.3)
    assert not ok and margin < 0.0
    # zero field trivially passes with full margin
    ok, margin = check_linfty_outside(0.0, 0.3)
    assert ok and margin == 0.3

    rows = [
        make_row(0.01, sup=0.9),   # below-threshold regime: recorded, not fatal
        make_row(10.0, sup=0.2),
        make_row(100.0, sup=0.01),
    ]
    assert linfty_threshold(rows) == 10.0
    rows_bad = rows + [make_row(1000.0, sup=0.8)]
    assert linfty_threshold(rows_bad) is None


def test_sandwich_check():
    ok, _ = check_sandwich(4.80, 4.81, 4.82)
    assert ok
    ok, _ = check_sandwich(4.99, 4.81, 4.82)  # lower bound violated
    assert not ok
    ok, _ = check_sandwich(4.80, 5.00, 4.82)  # upper bound violated
    assert not ok
    # the allowance rescues small violations
    ok, _ = check_sandwich(4.83, 4.81, 4.82, allowance=0.02)
    assert ok


def test_verdicts_all_pass_and_multiplicity():
    rows = []
    for gamma in ((1,), (2,), (1, 2)):
        for lam in (10.0, 100.0, 1000.0, 10000.0):
            scale = 1000.0 / lam if lam >= 100 else 1.0
            rows.append(
                make_row(lam, gamma=gamma, lamv=1e-3 * scale, outn=1e-2 * scale)
            )
    verdicts = {v.name: v for v in compute_verdicts(rows, k=2)}
    assert set(verdicts) == {
        "convergence", "positivity", "linfty_outside", "localization_trend",
        "energy_sandwich", "limit_energy_gap", "bump_fidelity", "multiplicity",
    }
    assert all(v.passed for v in verdicts.values())


def test_verdicts_catch_failures():
    rows = [make_row(10.0), make_row(100.0), make_row(1000.0, sup=0.5)]
    verdicts = {v.name: v for v in compute_verdicts(rows, k=2)}
    assert not verdicts["linfty_outside"].passed

    rows = [make_row(10.0, lamv=1e-4), make_row(100.0, lamv=2e-4),
            make_row(1000.0, lamv=4e-4)]
    verdicts = {v.name: v for v in compute_verdicts(rows, k=2)}
    assert not verdicts["localization_trend"].passed

    rows = [make_row(10.0, occ=(1,))]
    verdicts = {v.name: v for v in compute_verdicts(rows, k=2)}
    assert not verdicts["positivity"].passed

    rows = [make_row(10.0, conv=False)]
    verdicts = {v.name: v for v in compute_verdicts(rows, k=2)}
    assert not verdicts["convergence"].passed

    rows = [make_row(10.0, phi=4.0)]  # 17% off the limit level
    verdicts = {v.name: v for v in compute_verdicts(rows, k=2)}
    assert not verdicts["limit_energy_gap"].passed


def test_verdict_multiplicity_requires_distinct_masks():
    rows = [
        make_row(10.0, gamma=(1,), occ=(1,)),
        make_row(10.0, gamma=(2,), occ=(1,)),   # migrated to the wrong well
        make_row(10.0, gamma=(1, 2), occ=(1, 2)),
    ]
    verdicts = {v.name: v for v in compute_verdicts(rows, k=2)}
    assert not verdicts["multiplicity"].passed


# -- limit problem -----------------------------------------------------------------


def test_limit_problem_table(ref, ref_wells, ref_sweep):
    c_gamma = sum(r.energy for r in ref_wells)
    table = check_limit_problem(ref_sweep, [r.field for r in ref_wells], c_gamma)
    assert [row.lam for row in table] == list(ref.config.lambdas)
    gaps = [row.h1_gap for row in table]
    assert gaps[-1] <= gaps[-2] * 1.05
    assert table[-1].phi_gap_rel < 0.01
    assert all(isinstance(row, LimitRow) for row in table)


def test_limit_problem_single_well(ref, ref_wells, ref_big_t):
    from logbump.solver import lambda_sweep, multi_bump_init

    init = multi_bump_init([ref_wells[0].field], [1.0 / ref_big_t], ref_big_t)
    steps = lambda_sweep([1e3, 1e4], (1,), init, ref.grid, ref.potential,
                         ref.params, ref.solver)
    table = check_limit_problem(steps, [ref_wells[0].field],
                                ref_wells[0].energy)
    assert table[-1].phi_gap_rel < 0.01
    assert steps[-1].record.bump_mask == (1,)


def test_limit_problem_grid_consistency(ref_config):
    # the energy gap at fixed lambda is stable under refinement within O(h^2)
    from logbump.cli import parse_config_text, canonical_text
    from logbump.solver import lambda_sweep, multi_bump_init, solve_single_well

    gaps = []
    for n in (241, 481):
        import dataclasses

        config = parse_config_text(
            canonical_text(dataclasses.replace(ref_config, n=n))
        )
        grid = config.grid()
        geometry = config.geometry()
        potential = config.potential()
        rec = solve_single_well(geometry, 1, grid, config.solver_config())
        steps = lambda_sweep([1e4], (1,), rec.field, grid, potential,
                             config.params(), config.solver_config())
        gaps.append(abs(steps[0].report.total - rec.energy) / rec.energy)
    assert gaps[1] < 0.01 and gaps[0] < 0.02


# -- multiplicity scan ---------------------------------------------------------------


def test_multiplicity_scan_reference(ref_scan):
    assert ref_scan.expected == 3
    assert ref_scan.distinct == 3
    assert ref_scan.count_ok and ref_scan.masks_match
    assert all(e.converged for e in ref_scan.entries)
    masks_seen = {e.occupied for e in ref_scan.entries}
    assert masks_seen == {(1,), (2,), (1, 2)}


def test_multiplicity_energies_additive(ref_scan):
    by_gamma = {e.gamma: e.energy for e in ref_scan.entries}
    lhs = by_gamma[(1, 2)]
    rhs = by_gamma[(1,)] + by_gamma[(2,)]
    assert abs(lhs - rhs) <= 0.02 * abs(lhs)


def test_multiplicity_single_well_geometry(ref, ref_wells, ref_big_t):
    from logbump.domain import Box, PotentialSpec, WellGeometry
    from logbump.solver import solve_single_well
    from logbump.verify import multiplicity_scan

    geometry = WellGeometry(
        dim=1, wells=(Box((-5.0,), (2.5,)),), enlargements=(Box((-5.0,), (3.5,)),)
    )
    potential = PotentialSpec(geometry, cap=1.0, power=1.0)
    rec = solve_single_well(geometry, 1, ref.grid, ref.solver)
    scan = multiplicity_scan(1e4, [rec.field], ref_big_t, ref.grid, potential,
                             ref.params, ref.solver)
    assert scan.expected == 1 and scan.distinct == 1 and scan.masks_match


# -- per-well level tracking -----------------------------------------------------------


def test_per_well_levels_approach_dirichlet(ref_wells, ref_sweep):
    c = [r.energy for r in ref_wells]
    gaps = [
        max(abs(st.report.per_well[j] - c[j]) for j in range(2))
        for st in ref_sweep
    ]
    assert gaps[-1] <= gaps[-2] * 1.05


# -- order study -------------------------------------------------------------------------


def test_gausson_order_study_1d():
    study = gausson_order_study(1, 8.0, (129, 257, 513, 1025))
    assert all(3.6 <= r <= 4.4 for r in study.ratios)
    assert 1.9 <= study.fitted_order <= 2.1


def test_gausson_order_study_2d():
    study = gausson_order_study(2, 8.0, (65, 129, 257))
    assert all(3.6 <= r <= 4.4 for r in study.ratios)
    assert 1.9 <= study.fitted_order <= 2.1


def test_order_study_negative_control():
    # a plain Gaussian is not a solution; its residual does not vanish
    norms = []
    for n in (257, 513, 1025):
        grid = Grid(dim=1, r=8.0, n=n)
        xs = grid.axis[1:-1]
        norms.append(log_equation_residual_norm(Field(grid, np.exp(-xs * xs))))
    assert min(norms) > 0.5
    assert norms[-1] > 0.9 * norms[0]


# -- bookkeeping ---------------------------------------------------------------------------


def test_norm_partition_reconstruction(ref, ref_sweep):
    m = masks(ref.geometry, ref.grid, (1, 2))
    u = ref_sweep[-1].record.field
    gap = norm_partition_gap(u, m, 1e4, ref.potential)
    from logbump.domain import restricted_norm_sq

    total = restricted_norm_sq(
        u, np.ones(ref.grid.full_shape, dtype=bool), 1e4, ref.potential
    )
    assert gap <= 1e-10 * total


def test_log_envelope_fit(ref, ref_sweep):
    from logbump.domain import integrate, restricted_norm_sq
    from logbump.penalty import sq_log_sq

    norms, logs = [], []
    full = np.ones(ref.grid.full_shape, dtype=bool)
    for st in ref_sweep:
        u = st.record.field
        norms.append(
            math.sqrt(restricted_norm_sq(u, full, st.lam, ref.potential))
        )
        logs.append(integrate(np.asarray(sq_log_sq(u.values)), ref.grid))
    for scale in (0.5, 2.0, 4.0):
        u = ref_sweep[-1].record.field
        scaled = Field(ref.grid, scale * u.values)
        norms.append(
            math.sqrt(restricted_norm_sq(scaled, full, 1e4, ref.potential))
        )
        logs.append(integrate(np.asarray(sq_log_sq(scaled.values)), ref.grid))
    a_fit, b_fit = fit_log_envelope(norms, logs)
    assert np.isfinite(a_fit) and np.isfinite(b_fit)
    # the fitted envelope dominates the corpus (measurement, not a theorem)
    for nrm, lg in zip(norms, logs):
        assert lg <= a_fit + b_fit * math.log(nrm) + 1e-9
