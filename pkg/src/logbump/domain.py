"""Well geometry, multi-well potential, and the box discretization.

The computational domain is the box [-R, R]^dim with homogeneous Dirichlet
boundary, discretized on a uniform grid of n nodes per axis.  Fields store
interior nodal values only; the boundary ring is implicitly zero.  Wells and
their enlargements are axis-aligned boxes, and the potential vanishes
exactly on the closed wells and grows like squared distance up to a cap.

The discrete gradient energy is attributed to nodes as half the squared
one-sided differences toward each existing neighbor (one-sided at the box
boundary), which makes the summation-by-parts identity

    <-lap_h u, u> * h^dim  ==  sum of the nodal gradient energy * h^dim

an exact rearrangement of the face sum.  Region-restricted norms computed
from this density are therefore exactly additive over node partitions.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


@dataclass(frozen=True)
class Box:
    """Axis-aligned box given by center and per-axis half-widths."""

    center: tuple[float, ...]
    half: tuple[float, ...]

    def __post_init__(self):
        if len(self.center) != len(self.half):
            raise ValueError("center and half must have the same length")
        if any(h <= 0 for h in self.half):
            raise ValueError("half-widths must be positive")

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def lo(self) -> tuple[float, ...]:
        return tuple(c - h for c, h in zip(self.center, self.half))

    @property
    def hi(self) -> tuple[float, ...]:
        return tuple(c + h for c, h in zip(self.center, self.half))

    def contains_strict(self, point) -> bool:
        return all(abs(x - c) < h for x, c, h in zip(point, self.center, self.half))


def _boxes_closed_overlap(a: Box, b: Box) -> bool:
    return all(
        al <= bh and bl <= ah
        for al, ah, bl, bh in zip(a.lo, a.hi, b.lo, b.hi)
    )


def _box_inside(inner: Box, outer: Box) -> bool:
    return all(
        ol < il and ih < oh
        for il, ih, ol, oh in zip(inner.lo, inner.hi, outer.lo, outer.hi)
    )


@dataclass(frozen=True)
class WellGeometry:
    """k disjoint wells with enlargements whose closures stay disjoint."""

    dim: int
    wells: tuple[Box, ...]
    enlargements: tuple[Box, ...]

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError("only dim 1 and 2 are supported")
        if not self.wells:
            raise ValueError("at least one well is required")
        if len(self.wells) != len(self.enlargements):
            raise ValueError("each well needs exactly one enlargement")
        for j, (w, e) in enumerate(zip(self.wells, self.enlargements), start=1):
            if w.dim != self.dim or e.dim != self.dim:
                raise ValueError(f"well {j}: box dimension differs from dim")
            if not _box_inside(w, e):
                raise ValueError(f"well {j}: closure must lie inside its enlargement")
        for i in range(len(self.enlargements)):
            for j in range(i + 1, len(self.enlargements)):
                if _boxes_closed_overlap(self.enlargements[i], self.enlargements[j]):
                    raise ValueError(
                        f"enlargements {i + 1} and {j + 1} have overlapping closures"
                    )

    @property
    def k(self) -> int:
        return len(self.wells)


@dataclass(frozen=True)
class PotentialSpec:
    """Potential min(cap, dist(x, union of closed wells)^power).

    Zero exactly on the closed wells, positive outside, continuous, and
    flattening to the cap far away, so the deepening parameter lambda only
    steepens the walls without moving the zero set.  The default quadratic
    onset is the smoothest choice; a smaller power confines earlier, which
    moves the localization diagnostics into their decaying regime at lower
    lambda.
    """

    geometry: WellGeometry
    cap: float = 1.0
    power: float = 2.0

    def __post_init__(self):
        if self.cap <= 0:
            raise ValueError("cap must be positive")
        if self.power <= 0:
            raise ValueError("power must be positive")


def _dist_sq_to_wells(spec: PotentialSpec, mesh, dim: int):
    dist_sq = None
    for well in spec.geometry.wells:
        acc = 0.0
        for ax in range(dim):
            excess = np.maximum(np.abs(mesh[ax] - well.center[ax]) - well.half[ax], 0.0)
            acc = acc + excess * excess
        dist_sq = acc if dist_sq is None else np.minimum(dist_sq, acc)
    return dist_sq


def _shape_potential(spec: PotentialSpec, dist_sq):
    if spec.power == 2.0:
        return np.minimum(spec.cap, dist_sq)
    return np.minimum(spec.cap, np.sqrt(dist_sq) ** spec.power)


def eval_potential(spec: PotentialSpec, x) -> float:
    """Potential at a single point."""
    point = np.atleast_1d(np.asarray(x, dtype=float))
    mesh = tuple(point[ax] for ax in range(point.size))
    dist_sq = _dist_sq_to_wells(spec, mesh, point.size)
    return float(_shape_potential(spec, dist_sq))


@dataclass(frozen=True)
class Grid:
    """Uniform grid on [-R, R]^dim with n nodes per axis, h = 2R/(n-1)."""

    dim: int
    r: float
    n: int

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError("only dim 1 and 2 are supported")
        if self.n < 3:
            raise ValueError("n must be at least 3")
        if self.r <= 0:
            raise ValueError("box half-width R must be positive")

    @property
    def h(self) -> float:
        return 2.0 * self.r / (self.n - 1)

    @cached_property
    def axis(self) -> np.ndarray:
        return np.linspace(-self.r, self.r, self.n)

    @property
    def full_shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def interior_shape(self) -> tuple[int, ...]:
        return (self.n - 2,) * self.dim

    def full_mesh(self) -> tuple[np.ndarray, ...]:
        """Broadcastable per-axis coordinate arrays over all nodes."""
        return tuple(
            self.axis.reshape([-1 if d == ax else 1 for d in range(self.dim)])
            for ax in range(self.dim)
        )

    def interior_mesh(self) -> tuple[np.ndarray, ...]:
        inner = self.axis[1:-1]
        return tuple(
            inner.reshape([-1 if d == ax else 1 for d in range(self.dim)])
            for ax in range(self.dim)
        )


def potential_on_grid(spec: PotentialSpec, grid: Grid) -> np.ndarray:
    """Potential values at every node (full shape)."""
    mesh = grid.full_mesh()
    dist_sq = _dist_sq_to_wells(spec, mesh, grid.dim)
    return _shape_potential(spec, dist_sq) * np.ones(grid.full_shape)


@dataclass
class Field:
    """Interior nodal values of a scalar field; zero on the box boundary."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.interior_shape:
            raise ValueError(
                f"values shape {self.values.shape} does not match interior "
                f"shape {self.grid.interior_shape}"
            )

    @classmethod
    def zeros(cls, grid: Grid) -> "Field":
        return cls(grid, np.zeros(grid.interior_shape))

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "Field":
        """Sample fn(*coords) on the interior nodes."""
        return cls(grid, np.asarray(fn(*grid.interior_mesh()), dtype=float)
                   * np.ones(grid.interior_shape))

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy())

    def full(self) -> np.ndarray:
        """Values padded with the zero boundary ring."""
        return np.pad(self.values, 1)


def box_mask_full(box: Box, grid: Grid, strict: bool = True) -> np.ndarray:
    """Node membership of an axis-aligned box, resolved per axis.

    Nodes are classified by a strict interior test at their coordinates;
    the closed variant (strict=False) includes boundary-coincident nodes
    with a half-spacing tolerance.
    """
    out = np.ones(grid.full_shape, dtype=bool)
    for ax in range(grid.dim):
        d = np.abs(grid.axis - box.center[ax])
        line = d < box.half[ax] if strict else d <= box.half[ax] + 1e-9 * grid.h
        out = out & line.reshape([-1 if dd == ax else 1 for dd in range(grid.dim)])
    return out


@dataclass(frozen=True)
class RegionMasks:
    """Node masks for the selected wells, their enlargements and the rest."""

    gamma: tuple[int, ...]
    well: np.ndarray            # union of selected wells
    enlarged: np.ndarray        # union of selected enlargements
    outside: np.ndarray         # complement of `enlarged`
    per_well: tuple[np.ndarray, ...]       # all wells, 1-based order
    per_enlarged: tuple[np.ndarray, ...]   # all enlargements

    @property
    def outside_wells(self) -> np.ndarray:
        """Complement of the selected wells (used by localization norms)."""
        return ~self.well


def masks(geometry: WellGeometry, grid: Grid, gamma) -> RegionMasks:
    """Build the node masks for a nonempty well selection gamma."""
    gamma = tuple(sorted(set(int(j) for j in gamma)))
    if not gamma:
        raise ValueError("gamma must select at least one well")
    if gamma[0] < 1 or gamma[-1] > geometry.k:
        raise ValueError(f"gamma indices must lie in 1..{geometry.k}")
    per_well = tuple(box_mask_full(w, grid) for w in geometry.wells)
    per_enlarged = tuple(box_mask_full(e, grid) for e in geometry.enlargements)
    well = np.zeros(grid.full_shape, dtype=bool)
    enlarged = np.zeros(grid.full_shape, dtype=bool)
    for j in gamma:
        well |= per_well[j - 1]
        enlarged |= per_enlarged[j - 1]
    return RegionMasks(
        gamma=gamma,
        well=well,
        enlarged=enlarged,
        outside=~enlarged,
        per_well=per_well,
        per_enlarged=per_enlarged,
    )


def validate_geometry_on_grid(geometry: WellGeometry, grid: Grid, min_cells: int = 2):
    """Reject geometries the grid cannot resolve.

    Each well must sit inside its enlargement with at least min_cells grid
    cells of margin per side, and every enlargement must stay min_cells
    cells away from the box boundary.
    """
    if geometry.dim != grid.dim:
        raise ValueError("geometry and grid dimensions differ")
    margin = min_cells * grid.h
    for j, (w, e) in enumerate(zip(geometry.wells, geometry.enlargements), start=1):
        for ax in range(grid.dim):
            if w.lo[ax] - e.lo[ax] < margin or e.hi[ax] - w.hi[ax] < margin:
                raise ValueError(
                    f"well {j}: enlargement margin below {min_cells} grid cells"
                )
            if e.lo[ax] < -grid.r + margin or e.hi[ax] > grid.r - margin:
                raise ValueError(
                    f"well {j}: enlargement too close to the box boundary"
                )


def neg_laplacian(u: Field) -> Field:
    """-lap_h u with the standard 3/5-point stencil and Dirichlet boundary."""
    grid = u.grid
    h2 = grid.h * grid.h
    full = u.full()
    v = u.values
    if grid.dim == 1:
        out = (2.0 * v - full[:-2] - full[2:]) / h2
    else:
        out = (
            4.0 * v
            - full[:-2, 1:-1]
            - full[2:, 1:-1]
            - full[1:-1, :-2]
            - full[1:-1, 2:]
        ) / h2
    return Field(grid, out)


def integrate(values, grid: Grid | None = None) -> float:
    """Rectangle-rule integral h^dim * sum over nodes."""
    if isinstance(values, Field):
        grid = values.grid
        values = values.values
    if grid is None:
        raise ValueError("grid is required when passing raw values")
    return grid.h**grid.dim * float(np.sum(values))


def grad_energy_density(u: Field) -> np.ndarray:
    """Nodal gradient energy |grad_h u|^2 on the full node set.

    Each face contributes half its squared difference quotient to both of
    its end nodes (boundary nodes included), so the total over all nodes
    equals the face sum <-lap_h u, u> exactly.
    """
    grid = u.grid
    full = u.full()
    dens = np.zeros(grid.full_shape)
    inv_h2 = 1.0 / (grid.h * grid.h)
    for ax in range(grid.dim):
        d = np.diff(full, axis=ax)
        dsq = d * d * inv_h2
        lo = [slice(None)] * grid.dim
        hi = [slice(None)] * grid.dim
        lo[ax] = slice(0, -1)
        hi[ax] = slice(1, None)
        dens[tuple(lo)] += 0.5 * dsq
        dens[tuple(hi)] += 0.5 * dsq
    return dens


def restricted_norm_sq(
    u: Field, mask: np.ndarray, lam: float, potential: PotentialSpec
) -> float:
    """Squared lambda-weighted H1 norm restricted to a node mask:
    integral over the mask of |grad u|^2 + (lambda V + 1) u^2."""
    grid = u.grid
    dens = grad_energy_density(u)
    full = u.full()
    v = potential_on_grid(potential, grid)
    val = dens + (lam * v + 1.0) * full * full
    return grid.h**grid.dim * float(np.sum(val[mask]))


def save_field(u: Field, path):
    """Write a field as CSV: header line dim,n,R,h then one value per line.

    Values use repr round-tripping, so load_field recovers them bit-exactly.
    """
    lines = ["dim,n,R,h"]
    lines.append(f"{u.grid.dim},{u.grid.n},{u.grid.r!r},{u.grid.h!r}")
    lines.append("value")
    lines.extend(repr(float(v)) for v in u.values.ravel(order="C"))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_field(path) -> Field:
    """Inverse of save_field (bit-exact round trip)."""
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if lines[0] != "dim,n,R,h" or lines[2] != "value":
        raise ValueError(f"{path}: not a field dump")
    dim_s, n_s, r_s, h_s = lines[1].split(",")
    grid = Grid(dim=int(dim_s), r=float(r_s), n=int(n_s))
    if float(h_s) != grid.h:
        raise ValueError(f"{path}: inconsistent spacing in header")
    values = np.array([float(v) for v in lines[3:]])
    return Field(grid, values.reshape(grid.interior_shape, order="C"))
