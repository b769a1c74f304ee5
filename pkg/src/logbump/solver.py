"""Gradient-flow solvers for the well problems and the penalized problem.

All solves use the same semi-implicit splitting: the stiff linear part
(-lap + diagonal mass) is treated implicitly, so the deepening parameter
lambda never forces a smaller step, while the logarithmic nonlinearity is
explicit.  Each implicit step is a Jacobi-preconditioned conjugate gradient
solve of an SPD operator; negative values are clipped afterwards (the
discrete counterpart of testing with the negative part).

Single-well ground states additionally rescale onto the Nehari manifold
after every step, which pins the amplitude and turns the flow into a
minimization over the manifold.

Everything here is deterministic: fixed iteration order, fixed summation
order, no randomness, so identical inputs give bit-identical outputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from logbump.domain import (
    Field,
    Grid,
    PotentialSpec,
    WellGeometry,
    box_mask_full,
    neg_laplacian,
)
from logbump.functional import (
    PenalizedFunctional,
    _log_mass_density,
)
from logbump.penalty import PenalizationParams, s_log_sq


class SolveError(RuntimeError):
    """Raised on linear-solver breakdown or invalid solver input."""


@dataclass(frozen=True)
class SolverConfig:
    """Gradient-flow and inner linear-solve settings."""

    tau: float = 0.2
    tol: float = 1e-6
    max_iters: int = 40000
    cg_tol: float = 1e-12
    cg_max_iters: int = 20000
    positivity: bool = True
    bump_threshold: float = 0.01

    def __post_init__(self):
        if not 0.0 < self.tau <= 0.5:
            raise ValueError("tau must lie in (0, 0.5] for a descending flow")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.cg_tol <= 0:
            raise ValueError("cg_tol must be positive")
        if not 0.0 < self.bump_threshold < 1.0:
            raise ValueError("bump_threshold must lie in (0, 1)")
        if self.max_iters < 1 or self.cg_max_iters < 1:
            raise ValueError("iteration limits must be at least 1")


@dataclass
class SolveRecord:
    """Outcome of one gradient-flow solve."""

    field: Field
    iterations: int
    residuals: list[float]
    energies: list[float]
    converged: bool
    energy: float
    bump_mask: tuple[int, ...]


@dataclass(frozen=True)
class MinimaxParams:
    """Scale factor T and per-axis resolution of the surface [1/T^2, 1]^l."""

    big_t: float
    m: int

    def __post_init__(self):
        if self.big_t <= 1.0:
            raise ValueError("the scale factor T must exceed 1")
        if self.m < 8:
            raise ValueError("the path grid needs at least 8 points per axis")


def conjugate_gradient(apply_a, b, x0, tol, max_iters, diag=None):
    """Preconditioned CG for an SPD operator given as a callable.

    Stops when ||r|| <= tol * ||b||.  A nonpositive curvature p.A p signals
    a non-SPD operator and raises, as does running out of iterations.
    Returns (solution, iterations).
    """
    b = np.asarray(b, dtype=float)
    x = np.array(x0, dtype=float, copy=True)
    r = b - apply_a(x)
    bnorm = float(np.sqrt(np.vdot(b, b)))
    if bnorm == 0.0:
        return np.zeros_like(b), 0
    z = r / diag if diag is not None else r
    p = z.copy()
    rz = float(np.vdot(r, z))
    for it in range(1, max_iters + 1):
        if math.sqrt(float(np.vdot(r, r))) <= tol * bnorm:
            return x, it - 1
        ap = apply_a(p)
        pap = float(np.vdot(p, ap))
        if pap <= 0.0:
            raise SolveError("conjugate gradient breakdown: operator not SPD")
        alpha = rz / pap
        x += alpha * p
        r -= alpha * ap
        z = r / diag if diag is not None else r
        rz_new = float(np.vdot(r, z))
        beta = rz_new / rz
        rz = rz_new
        p = z + beta * p
    if math.sqrt(float(np.vdot(r, r))) <= tol * bnorm:
        return x, max_iters
    raise SolveError(f"conjugate gradient did not converge in {max_iters} iterations")


def _occupied_wells(values_full_sq_sums, total, threshold) -> tuple[int, ...]:
    if total <= 0.0:
        return ()
    return tuple(
        j + 1 for j, m in enumerate(values_full_sq_sums) if m >= threshold * total
    )


def classify_bumps(u: Field, geometry: WellGeometry, threshold: float) -> tuple[int, ...]:
    """Wells whose enlargement carries at least `threshold` of the mass."""
    full = u.full()
    sq = full * full
    per = [float(np.sum(sq[box_mask_full(e, u.grid)])) for e in geometry.enlargements]
    return _occupied_wells(per, float(np.sum(sq)), threshold)


# -- single-well Dirichlet ground state -------------------------------------


def _well_interior_mask(geometry: WellGeometry, grid: Grid, j: int) -> np.ndarray:
    inner = (slice(1, -1),) * grid.dim
    return box_mask_full(geometry.wells[j - 1], grid)[inner]


def _masked_nehari_scale(values, grid, lap_vals, hd):
    """Closed-form Nehari rescale from already-computed pieces."""
    grad = hd * float(np.vdot(lap_vals, values))
    mass = hd * float(np.sum(values * values))
    if mass <= 0.0:
        raise SolveError("flow collapsed to zero; cannot project onto the manifold")
    logm = hd * float(np.sum(_log_mass_density(values)))
    return math.exp((grad - logm) / (2.0 * mass))


def _pure_energy(values, grid, hd):
    u = Field(grid, values)
    kin = 0.5 * hd * float(np.vdot(neg_laplacian(u).values, values))
    mass = 0.5 * hd * float(np.sum(values * values))
    logm = 0.5 * hd * float(np.sum(_log_mass_density(values)))
    return kin + mass - logm


def solve_single_well(
    geometry: WellGeometry, j: int, grid: Grid, config: SolverConfig
) -> SolveRecord:
    """Positive ground state of -lap u = u log u^2 on well j (Dirichlet).

    Starts from a positive Gaussian bump at the well center and alternates
    a semi-implicit descent step with the closed-form Nehari rescale, so
    the energy decreases along the projected flow and the limit satisfies
    the Nehari identity.  The PDE residual is measured inside the well in
    relative L2.
    """
    if not 1 <= j <= geometry.k:
        raise ValueError(f"well index {j} out of range 1..{geometry.k}")
    mask = _well_interior_mask(geometry, grid, j)
    well = geometry.wells[j - 1]
    for ax in range(grid.dim):
        nodes = int(np.sum(np.abs(grid.axis - well.center[ax]) < well.half[ax]))
        if nodes < 32:
            raise ValueError(
                f"well {j} resolved by only {nodes} nodes on axis {ax}; need >= 32"
            )

    hd = grid.h**grid.dim
    tau = config.tau
    mesh = grid.interior_mesh()
    sigma = min(1.0, min(well.half) / 2.0)
    r2 = 0.0
    for ax in range(grid.dim):
        r2 = r2 + (mesh[ax] - well.center[ax]) ** 2
    u = np.where(mask, np.exp(-r2 / (2.0 * sigma * sigma)), 0.0)

    def apply_a(x):
        lap = neg_laplacian(Field(grid, x)).values
        return np.where(mask, x + tau * (lap + x), x)

    diag = np.where(mask, 1.0 + tau * (2.0 * grid.dim / grid.h**2 + 1.0), 1.0)

    # initial projection onto the manifold
    lap0 = np.where(mask, neg_laplacian(Field(grid, u)).values, 0.0)
    u = _masked_nehari_scale(u, grid, lap0, hd) * u

    residuals: list[float] = []
    energies: list[float] = []
    converged = False
    it = 0
    for it in range(1, config.max_iters + 1):
        rhs = u + tau * (np.asarray(s_log_sq(u)) + u)
        rhs = np.where(mask, rhs, 0.0)
        u_new, _ = conjugate_gradient(
            apply_a, rhs, u, config.cg_tol, config.cg_max_iters, diag
        )
        u_new = np.where(mask, u_new, 0.0)
        if config.positivity:
            u_new = np.maximum(u_new, 0.0)
        lap = np.where(mask, neg_laplacian(Field(grid, u_new)).values, 0.0)
        t = _masked_nehari_scale(u_new, grid, lap, hd)
        u_new *= t

        lap *= t
        res = lap - np.asarray(s_log_sq(u_new))
        res = np.where(mask, res, 0.0)
        unorm = math.sqrt(float(np.sum(u_new * u_new)))
        rel = math.sqrt(float(np.sum(res * res))) / max(unorm, 1e-300)
        residuals.append(rel)
        energies.append(_pure_energy(u_new, grid, hd))
        u = u_new
        if rel <= config.tol:
            converged = True
            break

    return SolveRecord(
        field=Field(grid, u),
        iterations=it,
        residuals=residuals,
        energies=energies,
        converged=converged,
        energy=energies[-1] if energies else 0.0,
        bump_mask=(j,),
    )


# -- penalized problem on the box -------------------------------------------


def solve_auxiliary(
    lam: float,
    gamma,
    init: Field,
    grid: Grid,
    potential: PotentialSpec,
    params: PenalizationParams,
    config: SolverConfig,
) -> SolveRecord:
    """Nonnegative solution of the penalized problem on the box.

    Iterates u <- (I + tau(-lap + diag(lambda V + 1)))^{-1}
                  (u + tau (g2'(x, u+) - f1'(u))),
    clipping negatives when the positivity flag is set, until the relative
    L2 residual of the penalized equation drops below tol.  Non-convergence
    is flagged on the record, never papered over.

    Multi-bump states are saddle points: the energy tends to minus infinity
    along each bump's amplitude, so the plain descent flow escapes instead
    of converging.  After every step the bump amplitudes are therefore
    rescaled on each selected enlargement by t_j with
    log t_j^2 = <residual, u restricted to the enlargement> / int_j u^2,
    the per-well ray condition.  The correction vanishes exactly at
    discrete solutions (it is a residual pairing), so fixed points of the
    projected iteration solve the unmodified equation; it only removes the
    unstable amplitude directions.
    """
    if np.any(init.values < 0.0):
        raise ValueError("init must be nonnegative")
    fun = PenalizedFunctional(grid, potential, params, gamma, lam)
    tau = config.tau
    hd = grid.h**grid.dim
    inner = (slice(1, -1),) * grid.dim
    gamma_masks = [fun.masks.per_enlarged[j - 1][inner] for j in fun.gamma]

    def apply_a(x):
        lap = neg_laplacian(Field(grid, x)).values
        return x + tau * (lap + fun.diag * x)

    diag = 1.0 + tau * (2.0 * grid.dim / grid.h**2 + fun.diag)

    def strong_residual(vals):
        lap = neg_laplacian(Field(grid, vals)).values
        return lap + fun.diag * vals - fun.nonlinear_rhs(vals)

    u = init.values.copy()
    residuals: list[float] = []
    energies: list[float] = []
    converged = False
    alive = True
    it = 0
    for it in range(1, config.max_iters + 1):
        rhs = u + tau * fun.nonlinear_rhs(u)
        u_new, _ = conjugate_gradient(
            apply_a, rhs, u, config.cg_tol, config.cg_max_iters, diag
        )
        if config.positivity:
            u_new = np.maximum(u_new, 0.0)

        res = strong_residual(u_new)
        if np.any(u_new != 0.0):
            for mask in gamma_masks:
                mass = hd * float(np.sum((u_new * u_new)[mask]))
                if mass <= 0.0:
                    alive = False
                    break
                pair = hd * float(np.sum((res * u_new)[mask]))
                # trust region keeps early iterations sane; inactive near the end
                t = math.exp(min(max(pair / (2.0 * mass), -0.7), 0.7))
                u_new[mask] *= t
        if not alive:
            u = u_new
            break

        res = strong_residual(u_new)
        unorm = math.sqrt(float(np.sum(u_new * u_new)))
        rel = math.sqrt(float(np.sum(res * res))) / max(unorm, 1e-300)
        residuals.append(rel)
        energies.append(fun.phi_total(u_new))
        u = u_new
        if rel <= config.tol:
            converged = True
            break

    out = Field(grid, u)
    return SolveRecord(
        field=out,
        iterations=it,
        residuals=residuals,
        energies=energies,
        converged=converged,
        energy=energies[-1] if energies else fun.phi_total(u),
        bump_mask=classify_bumps(out, potential.geometry, config.bump_threshold),
    )


# -- path of well bumps ------------------------------------------------------


def multi_bump_init(omegas: list[Field], scales, big_t: float) -> Field:
    """Superposition sum_j s_j * T * omega_j of disjointly supported bumps."""
    if not omegas:
        raise ValueError("need at least one bump")
    scales = list(scales)
    if len(scales) != len(omegas):
        raise ValueError("one scale per bump required")
    grid = omegas[0].grid
    out = np.zeros(grid.interior_shape)
    for s, w in zip(scales, omegas):
        if w.grid != grid:
            raise ValueError("all bumps must live on the same grid")
        out = out + (s * big_t) * w.values
    return Field(grid, out)


def _ray_constraint(values, grid, hd, t):
    """I'(t u)(t u) for the pure logarithmic energy along the ray."""
    lap = neg_laplacian(Field(grid, values)).values
    grad = hd * float(np.vdot(lap, values))
    mass = hd * float(np.sum(values * values))
    logm = hd * float(np.sum(_log_mass_density(values)))
    return t * t * (grad - logm - math.log(t * t) * mass)


def choose_t(omegas: list[Field]) -> float:
    """Smallest power-of-two scale T >= 2 with the ray sign conditions
    I'((1/T) w)((1/T) w) > 0 and I'(T w)(T w) < 0 for every bump w.

    For bumps exactly on the Nehari manifold any T > 1 works, so exact
    inputs return 2; the search only guards numerical slack.
    """
    for exp in range(1, 11):
        big_t = float(2**exp)
        ok = True
        for w in omegas:
            hd = w.grid.h**w.grid.dim
            lo = _ray_constraint(w.values, w.grid, hd, 1.0 / big_t)
            hi = _ray_constraint(w.values, w.grid, hd, big_t)
            if not (lo > 0.0 and hi < 0.0):
                ok = False
                break
        if ok:
            return big_t
    raise SolveError("no scale factor up to 2^10 satisfies the sign conditions")


def minimax_upper_bound(
    lam: float,
    gamma,
    omegas: list[Field],
    minimax: MinimaxParams,
    grid: Grid,
    potential: PotentialSpec,
    params: PenalizationParams,
) -> float:
    """Upper bound for the multi-bump minimax level.

    Maximizes the penalized energy over the bump-superposition surface
    (s_1, ..., s_l) in [1/T^2, 1]^l; since the surface is admissible the
    maximum dominates the minimax level up to the grid resolution in s.
    """
    import itertools

    fun = PenalizedFunctional(grid, potential, params, gamma, lam)
    big_t = minimax.big_t
    s_axis = np.linspace(1.0 / (big_t * big_t), 1.0, minimax.m)
    best = -math.inf
    stacked = [w.values for w in omegas]
    for combo in itertools.product(s_axis, repeat=len(omegas)):
        vals = np.zeros(grid.interior_shape)
        for s, wv in zip(combo, stacked):
            vals = vals + (s * big_t) * wv
        best = max(best, fun.phi_total(vals))
    return best


@dataclass
class SweepStep:
    lam: float
    record: SolveRecord
    report: "object"


def lambda_sweep(
    lambdas,
    gamma,
    init: Field,
    grid: Grid,
    potential: PotentialSpec,
    params: PenalizationParams,
    config: SolverConfig,
) -> list[SweepStep]:
    """Warm-started continuation over an ascending lambda list.

    The converged field at each lambda seeds the next solve, which keeps
    the iteration on the same multi-bump branch as the wells deepen.
    """
    lambdas = [float(x) for x in lambdas]
    if any(b <= a for a, b in zip(lambdas, lambdas[1:])):
        raise ValueError("lambdas must be strictly ascending")
    steps: list[SweepStep] = []
    current = init
    for lam in lambdas:
        rec = solve_auxiliary(lam, gamma, current, grid, potential, params, config)
        fun = PenalizedFunctional(grid, potential, params, gamma, lam)
        steps.append(SweepStep(lam=lam, record=rec, report=fun.report(rec.field)))
        current = rec.field
    return steps


# -- Neumann problem on an enlarged well -------------------------------------


@dataclass
class NeumannRecord:
    """Ground-state level of the enlarged-well problem with natural BC."""

    c_lambda: float
    iterations: int
    converged: bool
    residual: float
    nehari_gap: float


class _NeumannWell:
    """Mirror-ghost discretization of the enlarged well j.

    The reflected stencil paired with trapezoidal node weights makes the
    weighted pairing <B u, u>_w equal the face sum of squared gradients,
    so energies and the flow share one discrete calculus.
    """

    def __init__(self, lam: float, j: int, grid: Grid, potential: PotentialSpec):
        geom = potential.geometry
        box = geom.enlargements[j - 1]
        self.grid = grid
        self.h = grid.h
        self.dim = grid.dim
        sel = []
        for ax in range(grid.dim):
            idx = np.nonzero(
                np.abs(grid.axis - box.center[ax]) <= box.half[ax] + 1e-9 * grid.h
            )[0]
            if len(idx) < 3:
                raise SolveError(f"enlarged well {j} too coarse for a Neumann solve")
            sel.append(idx)
        self.axes = [grid.axis[idx] for idx in sel]
        self.shape = tuple(len(a) for a in self.axes)

        weights = 1.0
        for ax in range(grid.dim):
            w = np.ones(self.shape[ax])
            w[0] = w[-1] = 0.5
            weights = weights * w.reshape(
                [-1 if d == ax else 1 for d in range(grid.dim)]
            )
        self.w = weights * np.ones(self.shape)

        from logbump.domain import _dist_sq_to_wells, _shape_potential

        mesh = [
            self.axes[ax].reshape([-1 if d == ax else 1 for d in range(grid.dim)])
            for ax in range(grid.dim)
        ]
        dist_sq = _dist_sq_to_wells(potential, mesh, grid.dim)
        self.v = _shape_potential(potential, dist_sq) * np.ones(self.shape)
        self.lam = lam
        self.center = box.center

    def apply_b(self, u):
        """Reflected -lap: ghost nodes mirror the first interior neighbor."""
        out = np.zeros_like(u)
        inv_h2 = 1.0 / (self.h * self.h)
        for ax in range(self.dim):
            left = np.roll(u, 1, axis=ax)
            right = np.roll(u, -1, axis=ax)
            head = [slice(None)] * self.dim
            tail = [slice(None)] * self.dim
            head[ax] = 0
            tail[ax] = -1
            src_head = [slice(None)] * self.dim
            src_tail = [slice(None)] * self.dim
            src_head[ax] = 1
            src_tail[ax] = -2
            left[tuple(head)] = u[tuple(src_head)]
            right[tuple(tail)] = u[tuple(src_tail)]
            out += (2.0 * u - left - right) * inv_h2
        return out

    def wdot(self, a, b):
        return self.h**self.dim * float(np.sum(self.w * a * b))

    def energy(self, u):
        quad = self.wdot(self.apply_b(u), u) + self.wdot((self.lam * self.v + 1.0) * u, u)
        logm = self.h**self.dim * float(np.sum(self.w * _log_mass_density(u)))
        return 0.5 * quad - 0.5 * logm, quad, logm

    def nehari_scale(self, u):
        _, quad, logm = self.energy(u)
        mass = self.wdot(u, u)
        if mass <= 0.0:
            raise SolveError("Neumann flow collapsed to zero")
        return math.exp((quad - logm - mass) / (2.0 * mass))


def solve_neumann_well(
    lam: float, j: int, grid: Grid, potential: PotentialSpec, config: SolverConfig
) -> NeumannRecord:
    """Ground-state level c_{lambda,j} of the enlarged-well problem
    -lap u + lambda V u = u log u^2 with zero normal derivative.

    Same projected semi-implicit flow as the Dirichlet well, on the
    trapezoid-weighted mirror-ghost discretization.
    """
    prob = _NeumannWell(lam, j, grid, potential)
    tau = config.tau
    dv = prob.lam * prob.v + 1.0

    def apply_m(x):
        return prob.w * (x + tau * (prob.apply_b(x) + dv * x))

    diag = prob.w * (1.0 + tau * (2.0 * prob.dim / prob.h**2 + dv))

    mesh = [
        prob.axes[ax].reshape([-1 if d == ax else 1 for d in range(prob.dim)])
        for ax in range(prob.dim)
    ]
    r2 = 0.0
    for ax in range(prob.dim):
        r2 = r2 + (mesh[ax] - prob.center[ax]) ** 2
    u = np.exp(0.5 * prob.dim - 0.5 * r2) * np.ones(prob.shape)
    u *= prob.nehari_scale(u)

    converged = False
    rel = math.inf
    it = 0
    for it in range(1, config.max_iters + 1):
        rhs = prob.w * (u + tau * (np.asarray(s_log_sq(u)) + u))
        u_new, _ = conjugate_gradient(
            apply_m, rhs, u, config.cg_tol, config.cg_max_iters, diag
        )
        if config.positivity:
            u_new = np.maximum(u_new, 0.0)
        u_new *= prob.nehari_scale(u_new)
        res = prob.apply_b(u_new) + prob.lam * prob.v * u_new - np.asarray(
            s_log_sq(u_new)
        )
        wnorm = math.sqrt(max(prob.wdot(u_new, u_new), 1e-300))
        rel = math.sqrt(max(prob.wdot(res, res), 0.0)) / wnorm
        u = u_new
        if rel <= config.tol:
            converged = True
            break

    energy, quad, logm = prob.energy(u)
    mass = prob.wdot(u, u)
    return NeumannRecord(
        c_lambda=energy,
        iterations=it,
        converged=converged,
        residual=rel,
        nehari_gap=abs(energy - 0.5 * mass),
    )
