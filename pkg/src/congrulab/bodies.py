"""Convex and star bodies in R^4 with exact support and radial evaluation.

Bodies are closures over exact shape data (polytope vertices, ellipsoid
axes, or a smooth support perturbation) plus a chain of orthogonal maps and
translations.  Evaluation folds the chain analytically, so any great sphere
can be sampled on demand without a global discretization.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.spatial import ConvexHull

from .errors import (DegenerateBodyError, NonOrthogonalError,
                     OriginOutsideError, UnsupportedKindError)
from .orthogonal import Orthogonal4
from .sphere import random_directions, unit

CONVEX = "convex"
STAR = "star"

_DEFAULT_SCAN = 4096
_SCAN_SEED = 0x51CA7


@dataclass(frozen=True)
class PolytopeShape:
    """Convex hull of a finite vertex set in R^4."""

    vertices: np.ndarray
    require_full_dim: bool = True

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 4 or len(v) < 5:
            raise ValueError("polytope needs at least 5 vertices in R^4")
        if self.require_full_dim:
            rank = np.linalg.matrix_rank(v - v.mean(axis=0), tol=1e-10)
            if rank < 4:
                raise ValueError("polytope vertices do not span R^4 affinely")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    @cached_property
    def facets(self):
        """Outward facet data (A, off) with A x + off <= 0 inside the hull."""
        try:
            hull = ConvexHull(self.vertices)
        except Exception as exc:
            raise DegenerateBodyError(f"hull computation failed: {exc}") from exc
        eq = hull.equations
        return eq[:, :4], eq[:, 4]


@dataclass(frozen=True)
class EllipsoidShape:
    """Centered ellipsoid with the given semiaxes; optionally rotated."""

    semiaxes: np.ndarray
    orientation: Orthogonal4 | None = None

    def __post_init__(self):
        a = np.array(self.semiaxes, dtype=float)
        if a.shape != (4,) or np.any(a <= 0):
            raise ValueError("semiaxes must be 4 positive numbers")
        a.setflags(write=False)
        object.__setattr__(self, "semiaxes", a)

    @property
    def axes_matrix(self):
        """Columns are the principal axis directions."""
        return np.eye(4) if self.orientation is None else self.orientation.matrix


@dataclass(frozen=True)
class BumpTerm:
    """One perturbation term c * (axis . theta)^degree."""

    axis: np.ndarray
    degree: int
    coeff: float

    def __post_init__(self):
        a = unit(np.asarray(self.axis, dtype=float))
        a.setflags(write=False)
        object.__setattr__(self, "axis", a)
        if self.degree < 1:
            raise ValueError("degree must be >= 1")


@dataclass(frozen=True)
class BumpShape:
    """Smooth body defined by perturbing an ellipsoid's support function.

    h(theta) = h_base(theta) + epsilon * sum_k c_k (d_k . theta)^{m_k}.
    epsilon must be small enough to keep the function sublinear; construction
    checks positivity of the sampled Hessian of the 1-homogeneous extension.
    """

    base: EllipsoidShape
    epsilon: float
    terms: tuple
    validate: bool = True

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if self.validate:
            lam = _min_hessian_eigenvalue(self)
            if lam < -1e-7 * float(np.max(self.base.semiaxes)):
                raise ValueError(
                    f"perturbation breaks convexity (min Hessian eigenvalue {lam:.3e})")


def _min_hessian_eigenvalue(shape: BumpShape, n_sample: int = 160) -> float:
    """Smallest sampled Hessian eigenvalue of the homogeneous support extension.

    The extension H(x) = |x| h(x/|x|) is linear along each ray, so its
    Hessian at a unit direction annihilates that direction; convexity needs
    the restriction to the orthogonal complement to be nonnegative.
    Central differences with step 1e-4.
    """
    rng = np.random.default_rng(0xBE11)
    dirs = random_directions(n_sample, rng)
    hstep = 1e-4

    def H(x):
        n = np.linalg.norm(x, axis=-1)
        return n * _bump_support(shape, x / n[..., None])

    worst = np.inf
    eye = np.eye(4)
    for th in dirs:
        hess = np.empty((4, 4))
        for i in range(4):
            for j in range(i, 4):
                pp = H(th + hstep * (eye[i] + eye[j]))
                pm = H(th + hstep * (eye[i] - eye[j]))
                mp = H(th - hstep * (eye[i] - eye[j]))
                mm = H(th - hstep * (eye[i] + eye[j]))
                hess[i, j] = hess[j, i] = (pp - pm - mp + mm) / (4 * hstep * hstep)
        # restrict to the tangent space: project out the ray direction
        basis = np.linalg.svd(np.eye(4) - np.outer(th, th))[0][:, :3]
        vals = np.linalg.eigvalsh(basis.T @ hess @ basis)
        worst = min(worst, float(vals[0]))
    return worst


def _ellipsoid_support(shape: EllipsoidShape, theta):
    comp = theta @ shape.axes_matrix
    return np.sqrt(np.sum((comp * shape.semiaxes) ** 2, axis=-1))


def _bump_eval(shape: BumpShape, theta):
    out = 0.0
    for term in shape.terms:
        out = out + term.coeff * (theta @ term.axis) ** term.degree
    return shape.epsilon * out


def _bump_support(shape: BumpShape, theta):
    return _ellipsoid_support(shape.base, theta) + _bump_eval(shape, theta)


def _shape_support(shape, theta):
    if isinstance(shape, PolytopeShape):
        return np.max(theta @ shape.vertices.T, axis=-1)
    if isinstance(shape, EllipsoidShape):
        return _ellipsoid_support(shape, theta)
    if isinstance(shape, BumpShape):
        return _bump_support(shape, theta)
    raise UnsupportedKindError(f"unknown shape {type(shape).__name__}")


def _shape_support_point(shape, theta):
    """Boundary point(s) attaining the support value (gradient of the extension)."""
    theta = np.asarray(theta, dtype=float)
    if isinstance(shape, PolytopeShape):
        idx = np.argmax(theta @ shape.vertices.T, axis=-1)
        return shape.vertices[idx]
    if isinstance(shape, EllipsoidShape):
        U = shape.axes_matrix
        M = U @ np.diag(shape.semiaxes ** 2) @ U.T
        h = _ellipsoid_support(shape, theta)
        return (theta @ M.T) / h[..., None]
    if isinstance(shape, BumpShape):
        sp = _shape_support_point(shape.base, theta)
        for term in shape.terms:
            d, m, c = term.axis, term.degree, term.coeff
            dot = (theta @ d)[..., None]
            grad = (1 - m) * dot ** m * theta + m * dot ** (m - 1) * d
            sp = sp + shape.epsilon * c * grad
        return sp
    raise UnsupportedKindError(f"unknown shape {type(shape).__name__}")


@dataclass(frozen=True)
class Body4:
    """A convex or star body: exact shape data plus a transform chain.

    Transform chain entries are ("rot", Orthogonal4) or ("shift", 4-vector),
    applied in order: the body is R K0 + b where (R, b) is the folded chain.
    """

    kind: str
    shape: object
    transforms: tuple = ()

    def __post_init__(self):
        if self.kind not in (CONVEX, STAR):
            raise ValueError(f"kind must be '{CONVEX}' or '{STAR}'")
        object.__setattr__(self, "transforms", tuple(self.transforms))

    @cached_property
    def folded(self):
        """Fold the chain into (R, b) with body = R K0 + b."""
        R = np.eye(4)
        b = np.zeros(4)
        for op, val in self.transforms:
            if op == "rot":
                m = val.matrix if isinstance(val, Orthogonal4) else np.asarray(val, float)
                R = m @ R
                b = m @ b
            elif op == "shift":
                b = b + np.asarray(val, dtype=float)
            else:
                raise ValueError(f"unknown transform op {op!r}")
        return R, b

    # -- evaluation --------------------------------------------------------

    @cached_property
    def _world_vertices(self):
        R, b = self.folded
        return self.shape.vertices @ R.T + b

    @cached_property
    def _radial_facet_data(self):
        # world-space facet ray data: radial(theta) = 1 / max(theta @ M * s)
        A, off = self.shape.facets
        R, b = self.folded
        e = R.T @ b
        rhs = A @ e - off
        if np.min(rhs) <= 1e-12:
            raise OriginOutsideError("origin is not interior to the polytope")
        M = R @ A.T                       # coef = theta @ M
        return M, 1.0 / rhs

    def support(self, theta):
        """Support value(s) h(theta) = max {theta . y : y in body}."""
        theta = np.asarray(theta, dtype=float)
        if isinstance(self.shape, PolytopeShape):
            return np.max(theta @ self._world_vertices.T, axis=-1)
        R, b = self.folded
        return _shape_support(self.shape, theta @ R) + theta @ b

    def support_point(self, theta):
        """Boundary point(s) where the support value is attained."""
        theta = np.asarray(theta, dtype=float)
        R, b = self.folded
        return _shape_support_point(self.shape, theta @ R) @ R.T + b

    def width(self, theta):
        """h(theta) + h(-theta)."""
        theta = np.asarray(theta, dtype=float)
        return self.support(theta) + self.support(-theta)

    def radial(self, theta):
        """Radial value(s): largest c with c*theta in the body.

        Exact per shape: ray/facet intersection for polytopes, quadratic
        solve for ellipsoids.  Requires the origin in the interior.
        """
        theta = np.asarray(theta, dtype=float)
        if isinstance(self.shape, PolytopeShape):
            M, inv_rhs = self._radial_facet_data
            # every rhs is positive (origin interior), so facets with
            # nonpositive ray coefficient never realize the max
            rho = 1.0 / np.max((theta @ M) * inv_rhs, axis=-1)
            return rho if rho.ndim else float(rho)
        R, b = self.folded
        d = theta @ R          # R^T theta
        e = R.T @ b            # local position of the world origin offset
        if isinstance(self.shape, EllipsoidShape):
            U = self.shape.axes_matrix
            inv = 1.0 / self.shape.semiaxes
            D = (d @ U) * inv
            E = (e @ U) * inv
            a2 = np.sum(D * D, axis=-1)
            ab = np.sum(D * E, axis=-1) if E.ndim == D.ndim else D @ E
            c2 = float(E @ E) if E.ndim == 1 else np.sum(E * E, axis=-1)
            if c2 >= 1.0 - 1e-12:
                raise OriginOutsideError("origin is not interior to the ellipsoid")
            disc = ab * ab - a2 * (c2 - 1.0)
            rho = (ab + np.sqrt(disc)) / a2
            return rho if rho.ndim else float(rho)
        raise UnsupportedKindError(
            "radial evaluation is only exact for polytopes and ellipsoids")

    # -- transforms --------------------------------------------------------

    def apply(self, U: Orthogonal4, a=None) -> "Body4":
        """Return U * body + a (appends to the transform chain)."""
        ops = list(self.transforms)
        ops.append(("rot", U))
        if a is not None and np.any(np.asarray(a, dtype=float) != 0):
            ops.append(("shift", np.asarray(a, dtype=float)))
        return Body4(kind=self.kind, shape=self.shape, transforms=tuple(ops))

    def translate(self, a) -> "Body4":
        return Body4(kind=self.kind, shape=self.shape,
                     transforms=self.transforms + (("shift", np.asarray(a, dtype=float)),))

    def contains_origin_interior(self, margin: float = 1e-12) -> bool:
        R, b = self.folded
        e = R.T @ b
        if isinstance(self.shape, PolytopeShape):
            A, off = self.shape.facets
            return bool(np.min(A @ e - off) > margin)
        if isinstance(self.shape, EllipsoidShape):
            inv = 1.0 / self.shape.semiaxes
            E = (e @ self.shape.axes_matrix) * inv
            return bool(E @ E < 1.0 - margin)
        raise UnsupportedKindError("interior test needs a polytope or ellipsoid")

    def effective_vertices(self):
        """World-coordinate vertices (polytope shapes only)."""
        if not isinstance(self.shape, PolytopeShape):
            raise UnsupportedKindError("only polytopes have vertices")
        return self._world_vertices


def ball(radius: float = 1.0) -> Body4:
    return Body4(kind=CONVEX, shape=EllipsoidShape(np.full(4, float(radius))))


def ellipsoid(semiaxes, orientation: Orthogonal4 | None = None,
              kind: str = CONVEX) -> Body4:
    return Body4(kind=kind, shape=EllipsoidShape(np.asarray(semiaxes, float), orientation))


def polytope(vertices, kind: str = CONVEX, require_full_dim: bool = True) -> Body4:
    return Body4(kind=kind, shape=PolytopeShape(np.asarray(vertices, float),
                                                require_full_dim=require_full_dim))


def cube(half_width: float = 1.0) -> Body4:
    corners = np.array([[sx, sy, sz, sw]
                        for sx in (-1, 1) for sy in (-1, 1)
                        for sz in (-1, 1) for sw in (-1, 1)], dtype=float)
    return polytope(half_width * corners)


# -- projections and sections ------------------------------------------------


def project_support(body: Body4, w):
    """Support function of the shadow on the hyperplane orthogonal to w.

    Projection leaves support values unchanged on that hyperplane, so this is
    the restriction of the body's support function; the returned field checks
    that its arguments are orthogonal to w.
    """
    if body.kind != CONVEX:
        raise UnsupportedKindError("projections require a convex body")
    w = unit(w)

    def field(points):
        pts = np.asarray(points, dtype=float)
        if np.max(np.abs(pts @ w)) > 1e-10:
            raise NonOrthogonalError("points are not orthogonal to w")
        return body.support(pts)

    return field


def section_radial(body: Body4, w):
    """Radial function of the slice by the hyperplane orthogonal to w."""
    w = unit(w)

    def field(points):
        pts = np.asarray(points, dtype=float)
        if np.max(np.abs(pts @ w)) > 1e-10:
            raise NonOrthogonalError("points are not orthogonal to w")
        return body.radial(pts)

    return field


# -- diameters ---------------------------------------------------------------


@dataclass(frozen=True)
class DiameterSet:
    """Directions of the width maxima (antipodal pairs collapsed)."""

    directions: np.ndarray          # (k, 4)
    length: float
    tol: float


def _canonical_antipodal(v):
    for x in v:
        if abs(x) > 1e-8:
            return v if x > 0 else -v
    return v


def _width_ascent(body: Body4, theta, max_iter: int = 80):
    """Fixed-point ascent theta <- unit(sp(theta) - sp(-theta)); monotone in width."""
    th = np.array(theta, dtype=float)
    best = th
    best_w = body.width(th)
    for _ in range(max_iter):
        step = body.support_point(th) - body.support_point(-th)
        n = np.linalg.norm(step)
        if n == 0.0:
            break
        new = step / n
        w = body.width(new)
        if w > best_w:
            best_w, best = w, new
        if np.linalg.norm(new - th) < 1e-15:
            break
        th = new
    return best, best_w


def default_diameter_tol(body: Body4, length: float) -> float:
    rel = 1e-9 if isinstance(body.shape, PolytopeShape) else 1e-6
    return rel * length


def find_diameters(body: Body4, tol: float | None = None,
                   n_scan: int = _DEFAULT_SCAN, max_clusters: int = 64) -> DiameterSet:
    """Scan the width function over S^3 and ascend to all near-maximal directions.

    Raises DegenerateBodyError when the width is constant within tol (the
    maximizer set is then not countable) or when the maximizers do not form
    isolated clusters.
    """
    if body.kind not in (CONVEX, STAR):
        raise UnsupportedKindError("diameters need a convex body")
    rng = np.random.default_rng(_SCAN_SEED)
    dirs = random_directions(n_scan, rng)
    widths = body.width(dirs)
    w_max = float(np.max(widths))
    w_min = float(np.min(widths))
    if tol is None:
        tol = default_diameter_tol(body, w_max)
    if w_max - w_min <= tol:
        raise DegenerateBodyError(
            f"width is constant within {tol:.2e}; diameter set is not countable")

    order = np.argsort(widths)[::-1]
    starts = order[:max(64, n_scan // 32)]
    endpoints = []
    global_max = w_max
    for idx in starts:
        th, w = _width_ascent(body, dirs[idx])
        endpoints.append((th, w))
        global_max = max(global_max, w)

    keep = [(th, w) for th, w in endpoints if w >= global_max - tol]
    clusters: list[np.ndarray] = []
    for th, _ in keep:
        th = _canonical_antipodal(th)
        if not any(np.arccos(np.clip(abs(th @ c), -1, 1)) < 1e-3 for c in clusters):
            clusters.append(th)
        if len(clusters) > max_clusters:
            raise DegenerateBodyError("diameter directions are not isolated")
    return DiameterSet(directions=np.array(clusters), length=global_max, tol=tol)


def diameter_segment(body: Body4, direction, tol: float | None = None):
    """Endpoints (p_minus, p_plus) of the unique diameter parallel to ``direction``.

    For polytopes the pair is located among the vertices supporting the two
    parallel faces; smooth bodies use the (unique) support points.
    """
    d = unit(direction)
    length = body.width(d)
    if tol is None:
        tol = default_diameter_tol(body, length)
    if isinstance(body.shape, PolytopeShape):
        V = body.effective_vertices()
        vals = V @ d
        hi, lo = np.max(vals), np.min(vals)
        top = V[vals >= hi - tol]
        bot = V[vals <= lo + tol]
        pairs = []
        for y in top:
            delta = y - bot
            dev = np.linalg.norm(delta - length * d, axis=-1)
            for z in bot[dev <= max(tol, 1e-9) * max(length, 1.0)]:
                pairs.append((z, y))
        if not pairs:
            raise DegenerateBodyError(
                f"no vertex pair realizes the width in direction {d}")
        if len(pairs) > 1:
            raise DegenerateBodyError(
                f"multiple diameters parallel to {d}; diameter not unique")
        return pairs[0]
    y = body.support_point(d)
    z = body.support_point(-d)
    if np.linalg.norm((y - z) - length * d) > max(tol, 1e-7) * max(length, 1.0):
        raise DegenerateBodyError(
            "support chord is not parallel to the requested direction")
    return z, y


# -- JSON wire format ----------------------------------------------------------


def shape_to_spec(shape) -> dict:
    if isinstance(shape, PolytopeShape):
        return {"type": "polytope",
                "vertices": [[float(x) for x in v] for v in shape.vertices]}
    if isinstance(shape, EllipsoidShape):
        out = {"type": "ellipsoid", "semiaxes": [float(a) for a in shape.semiaxes]}
        if shape.orientation is not None:
            out["orientation"] = shape.orientation.to_flat()
        return out
    if isinstance(shape, BumpShape):
        return {"type": "zonal_bump",
                "base": shape_to_spec(shape.base),
                "epsilon": float(shape.epsilon),
                "terms": [{"axis": [float(x) for x in t.axis],
                           "degree": int(t.degree),
                           "coeff": float(t.coeff)} for t in shape.terms]}
    raise UnsupportedKindError(f"cannot serialize {type(shape).__name__}")


def shape_from_spec(spec: dict):
    kind = spec.get("type")
    if kind == "polytope":
        return PolytopeShape(np.asarray(spec["vertices"], dtype=float))
    if kind == "ellipsoid":
        orient = spec.get("orientation")
        return EllipsoidShape(np.asarray(spec["semiaxes"], dtype=float),
                              Orthogonal4.from_flat(orient) if orient else None)
    if kind == "zonal_bump":
        base = shape_from_spec(spec["base"])
        terms = tuple(BumpTerm(np.asarray(t["axis"], float), int(t["degree"]),
                               float(t["coeff"])) for t in spec["terms"])
        return BumpShape(base=base, epsilon=float(spec["epsilon"]), terms=terms)
    raise ValueError(f"unknown shape type {kind!r}")


def body_to_spec(body: Body4) -> dict:
    transforms = []
    for op, val in body.transforms:
        if op == "rot":
            m = val if isinstance(val, Orthogonal4) else Orthogonal4(np.asarray(val, float))
            transforms.append({"rot": m.to_flat()})
        else:
            transforms.append({"shift": [float(x) for x in np.asarray(val, float)]})
    return {"kind": body.kind, "shape": shape_to_spec(body.shape),
            "transforms": transforms}


def body_from_spec(spec: dict) -> Body4:
    kind = spec.get("kind", CONVEX)
    shape = shape_from_spec(spec["shape"])
    ops = []
    for entry in spec.get("transforms", []):
        if "rot" in entry:
            ops.append(("rot", Orthogonal4.from_flat(entry["rot"])))
        elif "shift" in entry:
            ops.append(("shift", np.asarray(entry["shift"], dtype=float)))
        else:
            raise ValueError(f"unknown transform entry {entry}")
    return Body4(kind=kind, shape=shape, transforms=tuple(ops))
