"""Frame-free subriemannian engine.

A structure is a coordinate cometric (a symmetric, possibly degenerate
matrix of symbolic entries g^{lk}) together with a positive volume
density A.  Everything is computed from those two ingredients: the
raising map G, covector norms, the horizontal p-mean curvature as a
weighted divergence

    H = A^{-1} sum_l d_l( A * |dphi|^(p-1) * sum_k g^{lk} d_k phi ),

and grid scans for singular points (|dphi|* = 0).  No coframe choices
are ever made; frame fields are optional metadata consumed by the
bracket machinery.
"""

from __future__ import annotations

import itertools
import math
import os
from fractions import Fraction
from typing import Optional, Sequence, Tuple

from . import calculus as ca
from .calculus import CoordSystem, Expr
from .numerics import leading_minors, matrix_rank, newton_minimize

__all__ = [
    "GeometryError",
    "SingularPoint",
    "MissingFrames",
    "DEFAULT_EPS_SING",
    "default_eps_sing",
    "ScalarField",
    "VectorFieldExpr",
    "SubriemannianStructure",
    "GridSpec",
    "SingularHit",
    "SingularScanResult",
    "raise_covector",
    "pairing_expr",
    "covector_pairing",
    "conorm_sq_expr",
    "conorm",
    "p_mean_curvature_expr",
    "p_mean_curvature",
    "singular_scan",
    "probe_validate",
]


class GeometryError(Exception):
    """Base class for geometric-engine errors."""


class SingularPoint(GeometryError):
    """Curvature requested at a point where |dphi|* is below eps_sing."""


class MissingFrames(GeometryError):
    """Operation requires frame_fields metadata the structure lacks."""


DEFAULT_EPS_SING = 1e-7


def default_eps_sing() -> float:
    """Singular-set threshold; SUBCURV_EPS_SING overrides the default."""
    raw = os.environ.get("SUBCURV_EPS_SING")
    if raw is None:
        return DEFAULT_EPS_SING
    value = float(raw)
    if value <= 0:
        raise ValueError("SUBCURV_EPS_SING must be positive")
    return value


Box = Tuple[Tuple[float, float], ...]


class ScalarField:
    """A smooth function given in closed form on a coordinate box."""

    __slots__ = ("expr", "coords", "box")

    def __init__(self, expr: Expr, coords: CoordSystem, box: Optional[Box] = None):
        if box is not None:
            box = tuple((float(lo), float(hi)) for lo, hi in box)
            if len(box) != len(coords):
                raise ValueError("box must have one interval per coordinate")
            for lo, hi in box:
                if not lo <= hi:
                    raise ValueError(f"empty interval ({lo}, {hi})")
        bad = [i for i in ca.free_vars(expr) if i >= len(coords)]
        if bad:
            raise ValueError(f"expression uses variable indices {bad} outside chart")
        self.expr = expr
        self.coords = coords
        self.box = box

    def __call__(self, point: Sequence[float]) -> float:
        return ca.evaluate(self.expr, point)

    def gradient(self) -> list:
        return ca.gradient(self.expr, len(self.coords))

    def __repr__(self):
        return f"ScalarField({ca.unparse(self.expr, self.coords)})"


class VectorFieldExpr:
    """Vector field with symbolic coefficients in a fixed chart."""

    __slots__ = ("coords", "components")

    def __init__(self, coords: CoordSystem, components: Sequence[Expr]):
        components = tuple(ca.simplify(c) for c in components)
        if len(components) != len(coords):
            raise ValueError(
                f"{len(components)} components for {len(coords)} coordinates"
            )
        self.coords = coords
        self.components = components

    def apply(self, f: Expr) -> Expr:
        """Directional derivative X(f) = sum_k X^k d_k f."""
        return ca.add(
            *[
                ca.mul(comp, ca.differentiate(f, k))
                for k, comp in enumerate(self.components)
            ]
        )

    def at(self, point: Sequence[float]) -> list:
        return [ca.evaluate(c, point) for c in self.components]

    def scale(self, factor: Expr) -> "VectorFieldExpr":
        return VectorFieldExpr(
            self.coords, [ca.mul(factor, c) for c in self.components]
        )

    def __sub__(self, other: "VectorFieldExpr") -> "VectorFieldExpr":
        if self.coords != other.coords:
            raise ValueError("vector fields live in different charts")
        return VectorFieldExpr(
            self.coords,
            [ca.sub(a, b) for a, b in zip(self.components, other.components)],
        )

    def __add__(self, other: "VectorFieldExpr") -> "VectorFieldExpr":
        if self.coords != other.coords:
            raise ValueError("vector fields live in different charts")
        return VectorFieldExpr(
            self.coords,
            [ca.add(a, b) for a, b in zip(self.components, other.components)],
        )

    def __eq__(self, other):
        return (
            isinstance(other, VectorFieldExpr)
            and self.coords == other.coords
            and self.components == other.components
        )

    def __hash__(self):
        return hash((self.coords, self.components))

    def __repr__(self):
        comps = ", ".join(ca.unparse(c, self.coords) for c in self.components)
        return f"VectorFieldExpr({comps})"


class SubriemannianStructure:
    """Cometric + volume density on a coordinate chart.

    ``cometric[l][k]`` is the symbolic inner product of the coordinate
    differentials dx^l and dx^k; it must be symmetric (checked up to
    canonical form) and pointwise positive semidefinite (checked by
    sampling through :func:`probe_validate`, never symbolically).
    ``degeneracy`` is the advisory dimension of ker G.
    """

    __slots__ = (
        "coords",
        "cometric",
        "volume_density",
        "degeneracy",
        "frame_fields",
        "domain_box",
        "null_coform",
        "_curvature_cache",
    )

    def __init__(
        self,
        coords: CoordSystem,
        cometric: Sequence[Sequence[Expr]],
        volume_density: Expr,
        degeneracy: int = 0,
        frame_fields: Optional[Sequence[VectorFieldExpr]] = None,
        domain_box: Optional[Box] = None,
        null_coform: Optional[Sequence[Expr]] = None,
    ):
        n = len(coords)
        cometric = tuple(
            tuple(ca.simplify(entry) for entry in row) for row in cometric
        )
        if len(cometric) != n or any(len(row) != n for row in cometric):
            raise ValueError(f"cometric must be {n}x{n}")
        for l in range(n):
            for k in range(l + 1, n):
                if cometric[l][k] != cometric[k][l]:
                    raise ValueError(
                        f"cometric not symmetric at ({l},{k}) after canonicalization"
                    )
        if frame_fields is not None:
            frame_fields = tuple(frame_fields)
            for x in frame_fields:
                if x.coords != coords:
                    raise ValueError("frame field chart mismatch")
        if null_coform is not None:
            null_coform = tuple(ca.simplify(c) for c in null_coform)
            if len(null_coform) != n:
                raise ValueError("null coform needs one component per coordinate")
        if domain_box is not None:
            domain_box = tuple((float(lo), float(hi)) for lo, hi in domain_box)
        self.coords = coords
        self.cometric = cometric
        self.volume_density = ca.simplify(volume_density)
        self.degeneracy = degeneracy
        self.frame_fields = frame_fields
        self.domain_box = domain_box
        self.null_coform = null_coform
        self._curvature_cache = {}

    @property
    def dim(self) -> int:
        return len(self.coords)

    def cometric_at(self, point: Sequence[float]) -> list:
        return [
            [ca.evaluate(entry, point) for entry in row] for row in self.cometric
        ]

    def __repr__(self):
        return (
            f"SubriemannianStructure(dim={self.dim}, "
            f"degeneracy={self.degeneracy}, coords={self.coords.names})"
        )


# ---------------------------------------------------------------------------
# Raising map and norms
# ---------------------------------------------------------------------------


def raise_covector(S: SubriemannianStructure, omega: Sequence[Expr]) -> list:
    """G(omega): the vector with components v^l = sum_k g^{lk} omega_k."""
    if len(omega) != S.dim:
        raise ValueError(f"covector has {len(omega)} components, chart has {S.dim}")
    omega = [ca.simplify(w) if isinstance(w, Expr) else ca.const(w) for w in omega]
    return [
        ca.add(*[ca.mul(S.cometric[l][k], omega[k]) for k in range(S.dim)])
        for l in range(S.dim)
    ]


def pairing_expr(S: SubriemannianStructure, omega, eta) -> Expr:
    """<omega, eta>* = sum_{l,k} g^{lk} omega_l eta_k, symbolically."""
    omega = [w if isinstance(w, Expr) else ca.const(w) for w in omega]
    eta = [e if isinstance(e, Expr) else ca.const(e) for e in eta]
    terms = []
    for l in range(S.dim):
        for k in range(S.dim):
            terms.append(ca.mul(S.cometric[l][k], omega[l], eta[k]))
    return ca.add(*terms)


def covector_pairing(S, omega, eta, point: Sequence[float]) -> float:
    return ca.evaluate(pairing_expr(S, omega, eta), point)


def _phi_expr(phi) -> Expr:
    return phi.expr if isinstance(phi, ScalarField) else phi


def conorm_sq_expr(S: SubriemannianStructure, phi) -> Expr:
    """|dphi|*^2 as a symbolic expression (exactly >= 0 pointwise)."""
    e = _phi_expr(phi)
    grad = ca.gradient(e, S.dim)
    return pairing_expr(S, grad, grad)


def conorm(S: SubriemannianStructure, phi, point: Sequence[float]) -> float:
    """|dphi|* at a point; 0.0 exactly at singular points.

    The square is evaluated symbolically and the square root is taken
    numerically, so degenerate points return 0 rather than tripping the
    fractional-power domain guard.
    """
    val = ca.evaluate(conorm_sq_expr(S, phi), point)
    if val < 0.0:
        # PSD cometric: any negative value is pure roundoff
        val = 0.0
    return math.sqrt(val)


# ---------------------------------------------------------------------------
# Horizontal p-mean curvature
# ---------------------------------------------------------------------------


def p_mean_curvature_expr(S: SubriemannianStructure, phi, p) -> Expr:
    """Symbolic H_{phi,p} = A^{-1} sum_l d_l(A |dphi|^(p-1) (G dphi)^l).

    Valid away from the singular set; the |dphi|^(p-1) factor is formed
    as (|dphi|*^2)^((p-1)/2), so evaluation inside the singular set
    raises a domain error rather than returning garbage.
    """
    e = _phi_expr(phi)
    p = Fraction(p)
    if p < 0:
        raise ValueError("curvature exponent p must be >= 0")
    key = (e, p)
    cached = S._curvature_cache.get(key)
    if cached is not None:
        return cached
    grad = ca.gradient(e, S.dim)
    raised = raise_covector(S, grad)
    weight_exp = (p - 1) / 2
    norm_sq = pairing_expr(S, grad, grad)
    a = S.volume_density
    terms = []
    for l in range(S.dim):
        flux = ca.mul(a, ca.pow_(norm_sq, weight_exp), raised[l])
        terms.append(ca.differentiate(flux, l))
    h = ca.mul(ca.pow_(a, Fraction(-1)), ca.add(*terms))
    S._curvature_cache[key] = h
    return h


def p_mean_curvature(
    S: SubriemannianStructure,
    phi,
    p,
    point: Sequence[float],
    eps_sing: Optional[float] = None,
) -> float:
    """Evaluate H_{phi,p}; raises :class:`SingularPoint` when |dphi|* < eps."""
    eps = default_eps_sing() if eps_sing is None else eps_sing
    nrm = conorm(S, phi, point)
    if nrm < eps:
        raise SingularPoint(f"singular point: |dphi|* = {nrm:.3e} < {eps:g}")
    return ca.evaluate(p_mean_curvature_expr(S, phi, p), point)


# ---------------------------------------------------------------------------
# Grids and singular scans
# ---------------------------------------------------------------------------


class GridSpec:
    """Tensor-product grid: per-axis (lo, hi, count) with count >= 1.

    Points are enumerated in row-major order (first axis slowest), which
    fixes the deterministic ordering every consumer relies on.  Axes with
    count == 1 are frozen at lo.
    """

    __slots__ = ("axes",)

    def __init__(self, axes: Sequence[Tuple[float, float, int]]):
        cleaned = []
        for lo, hi, count in axes:
            lo, hi, count = float(lo), float(hi), int(count)
            if count < 1:
                raise ValueError("axis count must be >= 1")
            if count > 1 and not lo < hi:
                raise ValueError(f"degenerate axis ({lo}, {hi}) with count {count}")
            cleaned.append((lo, hi, count))
        self.axes = tuple(cleaned)

    @classmethod
    def from_box(cls, box: Box, count: int) -> "GridSpec":
        return cls([(lo, hi, count if lo < hi else 1) for lo, hi in box])

    @property
    def shape(self) -> tuple:
        return tuple(c for _, _, c in self.axes)

    @property
    def npoints(self) -> int:
        out = 1
        for c in self.shape:
            out *= c
        return out

    def axis_values(self, i: int) -> list:
        lo, hi, count = self.axes[i]
        if count == 1:
            return [lo]
        step = (hi - lo) / (count - 1)
        return [lo + k * step for k in range(count)]

    def points(self):
        """Yield (multi_index, point) pairs in row-major order."""
        values = [self.axis_values(i) for i in range(len(self.axes))]
        for idx in itertools.product(*[range(len(v)) for v in values]):
            yield idx, tuple(values[i][k] for i, k in enumerate(idx))

    def spacing(self) -> tuple:
        out = []
        for lo, hi, count in self.axes:
            out.append((hi - lo) / (count - 1) if count > 1 else 0.0)
        return tuple(out)

    def as_dict(self) -> dict:
        return {"axes": [[lo, hi, count] for lo, hi, count in self.axes]}


class SingularHit:
    """One grid cell inside the singular tolerance."""

    __slots__ = ("index", "grid_point", "point", "residual", "refined")

    def __init__(self, index, grid_point, point, residual, refined):
        self.index = index
        self.grid_point = grid_point
        self.point = point
        self.residual = residual
        self.refined = refined

    def __repr__(self):
        tag = "refined" if self.refined else "unrefined"
        return f"SingularHit({self.point}, residual={self.residual:.2e}, {tag})"


class SingularScanResult:
    __slots__ = ("grid", "eps_sing", "hits")

    def __init__(self, grid: GridSpec, eps_sing: float, hits):
        self.grid = grid
        self.eps_sing = eps_sing
        self.hits = list(hits)

    @property
    def fraction(self) -> float:
        return len(self.hits) / self.grid.npoints

    def clusters(self) -> list:
        """Group hits into connected components of adjacent grid cells."""
        index_map = {h.index: i for i, h in enumerate(self.hits)}
        parent = list(range(len(self.hits)))

        def find(i):
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        for h in self.hits:
            for neighbor in _neighbors(h.index):
                j = index_map.get(neighbor)
                if j is not None:
                    ri, rj = find(index_map[h.index]), find(j)
                    if ri != rj:
                        parent[ri] = rj
        groups = {}
        for i, h in enumerate(self.hits):
            groups.setdefault(find(i), []).append(h)
        return list(groups.values())

    def __repr__(self):
        return (
            f"SingularScanResult({len(self.hits)} hits / {self.grid.npoints} cells)"
        )


def _neighbors(index):
    for axis in range(len(index)):
        for delta in (-1, 1):
            yield index[:axis] + (index[axis] + delta,) + index[axis + 1 :]


def singular_scan(
    S: SubriemannianStructure,
    phi,
    grid: GridSpec,
    eps_sing: Optional[float] = None,
) -> SingularScanResult:
    """All grid cells with |dphi|* < eps_sing, Newton-refined where possible.

    Refinement minimizes |dphi|*^2 with its symbolic gradient and Hessian
    over the non-frozen grid axes; cells where Newton stalls (flat
    directions: the singular set may be a positive-dimensional set) are
    reported at the grid point and flagged unrefined.
    """
    eps = default_eps_sing() if eps_sing is None else eps_sing
    if eps <= 0:
        raise ValueError("eps_sing must be positive")
    n = S.dim
    sq = conorm_sq_expr(S, phi)
    sq_fn = ca.compile_expr(sq, n)
    grad_exprs = ca.gradient(sq, n)
    grad_fns = [ca.compile_expr(g, n) for g in grad_exprs]
    hess_fns = [
        [ca.compile_expr(ca.differentiate(g, j), n) for j in range(n)]
        for g in grad_exprs
    ]
    active = [i for i, (_, _, count) in enumerate(grid.axes) if count > 1]
    threshold = eps * eps

    def grad_at(x):
        return [f(x) for f in grad_fns]

    def hess_at(x):
        return [[f(x) for f in row] for row in hess_fns]

    hits = []
    for idx, pt in grid.points():
        val = sq_fn(pt)
        if val >= threshold:
            continue
        refined_pt, converged = newton_minimize(grad_at, hess_at, pt, active)
        if converged:
            res_sq = sq_fn(refined_pt)
            if res_sq < threshold:
                residual = math.sqrt(max(res_sq, 0.0))
                hits.append(SingularHit(idx, pt, tuple(refined_pt), residual, True))
                continue
        residual = math.sqrt(max(val, 0.0))
        hits.append(SingularHit(idx, pt, pt, residual, False))
    return SingularScanResult(grid, eps, hits)


# ---------------------------------------------------------------------------
# Structure validation by sampling
# ---------------------------------------------------------------------------


def probe_validate(
    S: SubriemannianStructure,
    box: Optional[Box] = None,
    samples_per_axis: int = 3,
    psd_tol: float = 1e-10,
) -> list:
    """Check PSD-ness, positive density, and frame rank on a probe grid.

    Returns a list of human-readable issues (empty when all checks pass).
    Sampling, not symbolic certification: the goal is to catch
    configuration mistakes.
    """
    box = box or S.domain_box
    if box is None:
        raise ValueError("no probe box: structure has no domain_box")
    issues = []
    grid = GridSpec.from_box(box, samples_per_axis)
    expected_rank = S.dim - S.degeneracy
    for _, pt in grid.points():
        g = S.cometric_at(pt)
        minors = leading_minors(g)
        if any(m < -psd_tol for m in minors):
            issues.append(f"cometric not PSD at {pt}: minors {minors}")
        a = ca.evaluate(S.volume_density, pt)
        if not a > 0:
            issues.append(f"volume density {a} not positive at {pt}")
        if S.frame_fields:
            rows = [x.at(pt) for x in S.frame_fields]
            rank, _ = matrix_rank(rows)
            if rank != expected_rank:
                issues.append(
                    f"frame rank {rank} != {expected_rank} (dim - degeneracy) at {pt}"
                )
    return issues
