"""Polytope experiments: Hausdorff distance, inscribed approximation of
smooth bodies, 3D shadows of 4D polytopes, rigid-motion symmetry detection,
and perturbation to symmetry-free polytopes.

Symmetry search prunes candidate vertex maps by centroid distance classes
and pairwise-distance signatures, solves for the unique orthogonal map from
a well-conditioned vertex triple, and verifies the defining equation on all
vertices; an exhaustive permutation search stays available in the tests as
the oracle for small vertex counts.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np
from scipy.optimize import minimize
from scipy.spatial import ConvexHull

from .bodies import Body4, PolytopeShape, polytope
from .errors import (BudgetExhaustedError, DegenerateProjectionError,
                     InsufficientDataError, TooFewVerticesError)
from .sphere import random_directions, unit


# -- Hausdorff distance -------------------------------------------------------


def hausdorff_distance(K: Body4, L: Body4, n_sample: int = 8192,
                       seed: int = 0) -> float:
    """sup |h_K - h_L| over the direction sphere.

    Quasi-uniform sampling followed by a local ascent (Nelder-Mead on the
    normalized direction) from the best sample point.
    """
    rng = np.random.default_rng(seed)
    dirs = random_directions(n_sample, rng)
    gaps = np.abs(K.support(dirs) - L.support(dirs))
    best = float(np.max(gaps))
    start = dirs[int(np.argmax(gaps))]

    def neg_gap(x):
        n = np.linalg.norm(x)
        if n < 1e-12:
            return 0.0
        u = x / n
        return -abs(float(K.support(u)) - float(L.support(u)))

    res = minimize(neg_gap, start, method="Nelder-Mead",
                   options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 600})
    return max(best, -float(res.fun))


# -- inscribed polytope approximation ------------------------------------------


def _spread_directions(count: int, seed: int, pool_size: int | None = None,
                       lloyd_iters: int = 15) -> np.ndarray:
    """Well-separated directions on S^3: farthest-point greedy seeding from a
    random pool, then Lloyd-style spreading (cells by nearest center)."""
    rng = np.random.default_rng(seed)
    pool = random_directions(pool_size or max(4000, 30 * count), rng)
    chosen = np.empty((count, 4))
    chosen[0] = pool[0]
    best_dot = pool @ chosen[0]
    for k in range(1, count):
        idx = int(np.argmin(best_dot))
        chosen[k] = pool[idx]
        best_dot = np.maximum(best_dot, pool @ chosen[k])
    for _ in range(lloyd_iters):
        owner = np.argmax(pool @ chosen.T, axis=1)
        for k in range(count):
            members = pool[owner == k]
            if len(members):
                m = members.sum(axis=0)
                n = np.linalg.norm(m)
                if n > 1e-12:
                    chosen[k] = m / n
    return chosen


def inscribe_polytope(K: Body4, v: int, seed: int = 0) -> Body4:
    """Hull of v boundary points of a smooth convex body, spread quasi-uniformly.

    A heuristic stand-in for the best inscribed v-vertex polytope: the rate
    experiment measures what this construction achieves.  Vertices are the
    support points of well-separated directions, hence exactly on the
    boundary.
    """
    if v < 5:
        raise ValueError("need at least 5 vertices")
    dirs = _spread_directions(v, seed)
    return polytope(K.support_point(dirs), kind=K.kind)


@dataclass(frozen=True)
class RateFit:
    """Least-squares slope of log(delta) against log(v)."""

    exponent: float
    stderr: float
    v_list: tuple
    deltas: tuple


def approximation_rate(K: Body4, v_list, seed: int = 0,
                       n_sample: int = 8192) -> RateFit:
    """Fit delta(K, P_v) ~ c * v^exponent over the given vertex budgets."""
    v_list = [int(v) for v in v_list]
    if len(v_list) < 2:
        raise InsufficientDataError("need at least 2 vertex budgets to fit a rate")
    deltas = []
    for i, v in enumerate(v_list):
        P = inscribe_polytope(K, v, seed=seed + i)
        deltas.append(hausdorff_distance(K, P, n_sample=n_sample, seed=seed + 1000 + i))
    x = np.log(np.asarray(v_list, dtype=float))
    y = np.log(np.asarray(deltas))
    A = np.column_stack([x, np.ones_like(x)])
    coef, res, _, _ = np.linalg.lstsq(A, y, rcond=None)
    dof = max(len(x) - 2, 1)
    sigma2 = (float(res[0]) if len(res) else float(np.sum((A @ coef - y) ** 2))) / dof
    sx = float(np.sum((x - x.mean()) ** 2))
    stderr = float(np.sqrt(sigma2 / sx)) if sx > 0 else float("inf")
    return RateFit(exponent=float(coef[0]), stderr=stderr,
                   v_list=tuple(v_list), deltas=tuple(float(d) for d in deltas))


# -- 3D shadows ---------------------------------------------------------------


@dataclass(frozen=True)
class Polytope3:
    """Extreme points of a 3D shadow, in coordinates of the subspace basis."""

    vertices: np.ndarray        # (m, 3)
    basis: np.ndarray           # (3, 4) orthonormal rows spanning the subspace

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float)
        b = np.array(self.basis, dtype=float)
        v.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "basis", b)

    def support(self, dirs3):
        return np.max(np.asarray(dirs3, dtype=float) @ self.vertices.T, axis=-1)


def project_polytope(P: Body4, basis) -> Polytope3:
    """Shadow of a 4D polytope on the 3D subspace spanned by the basis rows."""
    basis = np.asarray(basis, dtype=float)
    if basis.shape != (3, 4):
        raise ValueError("basis must be 3 orthonormal rows of length 4")
    if np.max(np.abs(basis @ basis.T - np.eye(3))) > 1e-10:
        raise ValueError("basis rows are not orthonormal")
    coords = P.effective_vertices() @ basis.T
    centered = coords - coords.mean(axis=0)
    svals = np.linalg.svd(centered, compute_uv=False)
    if svals[2] < 1e-10 * max(1.0, svals[0]):
        raise DegenerateProjectionError("shadow is flat (rank < 3)")
    hull = ConvexHull(coords)
    return Polytope3(vertices=coords[hull.vertices], basis=basis)


def random_subspace_bases(count: int, seed: int = 0):
    """Deterministic random 3D subspaces of R^4 (orthonormal 3x4 bases)."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        q, _ = np.linalg.qr(rng.standard_normal((4, 3)))
        out.append(q.T.copy())
    return out


# -- rigid-motion symmetry detection -------------------------------------------


@dataclass(frozen=True)
class SymmetryRecord:
    """A nonidentity orthogonal map + shift sending the vertex set to itself.

    phi q[perm[i]] + shift = q[i] for every vertex index i.
    """

    phi: np.ndarray             # (3, 3) orthogonal
    shift: np.ndarray           # (3,)
    permutation: tuple

    def verify(self, vertices, tol: float) -> bool:
        v = np.asarray(vertices, dtype=float)
        image = v[list(self.permutation)] @ self.phi.T + self.shift
        return bool(np.max(np.linalg.norm(image - v, axis=1)) <= tol)


def _distance_signatures(X: np.ndarray) -> np.ndarray:
    d = np.linalg.norm(X[:, None, :] - X[None, :, :], axis=-1)
    return np.sort(d, axis=1)


def _base_triple(X: np.ndarray):
    """Indices of a well-conditioned linearly independent vertex triple."""
    norms = np.linalg.norm(X, axis=1)
    i1 = int(np.argmax(norms))
    cross = np.linalg.norm(np.cross(X[i1][None, :], X), axis=1)
    i2 = int(np.argmax(cross))
    vols = np.abs(X @ np.cross(X[i1], X[i2]))
    i3 = int(np.argmax(vols))
    if vols[i3] < 1e-12 * max(1.0, norms[i1] ** 3):
        raise DegenerateProjectionError("vertex set is flat")
    return i1, i2, i3


def _candidate_maps(X: np.ndarray, tol: float):
    """Yield orthogonal candidates phi from signature-compatible vertex triples."""
    m = len(X)
    norms = np.linalg.norm(X, axis=1)
    sig = _distance_signatures(X)
    scale = max(float(norms.max()), 1e-300)
    i1, i2, i3 = _base_triple(X)
    S = np.column_stack([X[i1], X[i2], X[i3]])

    def compatible(i):
        return [j for j in range(m)
                if abs(norms[j] - norms[i]) <= 4 * tol
                and np.max(np.abs(sig[j] - sig[i])) <= 8 * tol]

    cand1, cand2, cand3 = compatible(i1), compatible(i2), compatible(i3)
    d12, d13, d23 = (np.linalg.norm(X[i1] - X[i2]), np.linalg.norm(X[i1] - X[i3]),
                     np.linalg.norm(X[i2] - X[i3]))
    for p1, p2, p3 in product(cand1, cand2, cand3):
        if len({p1, p2, p3}) < 3:
            continue
        if abs(np.linalg.norm(X[p1] - X[p2]) - d12) > 8 * tol:
            continue
        if abs(np.linalg.norm(X[p1] - X[p3]) - d13) > 8 * tol:
            continue
        if abs(np.linalg.norm(X[p2] - X[p3]) - d23) > 8 * tol:
            continue
        # phi maps the preimage triple onto the base triple
        T = np.column_stack([X[p1], X[p2], X[p3]])
        if abs(np.linalg.det(T)) < 1e-12 * scale ** 3:
            continue
        phi = S @ np.linalg.inv(T)
        if np.max(np.abs(phi.T @ phi - np.eye(3))) > 1e-6:
            continue
        yield phi


def _permutation_for(X: np.ndarray, phi: np.ndarray, tol: float):
    """Vertex permutation realized by phi, or None: phi X[perm[i]] ~= X[i]."""
    images = X @ phi.T
    d = np.linalg.norm(X[:, None, :] - images[None, :, :], axis=-1)
    perm = np.argmin(d, axis=1)
    if len(set(perm.tolist())) != len(X):
        return None, np.inf
    worst = float(np.max(d[np.arange(len(X)), perm]))
    return (tuple(int(p) for p in perm), worst) if worst <= tol else (None, worst)


def detect_rigid_symmetries(Q: Polytope3, tol: float = 1e-8):
    """All nonidentity rigid motions mapping the shadow onto itself.

    Centers at the vertex centroid (any symmetry preserves it), prunes
    candidate maps by distance signatures, solves each candidate from a
    vertex triple, and keeps those that realize a full vertex permutation.
    Every returned record is re-verified on the raw vertices.
    """
    V = np.asarray(Q.vertices, dtype=float)
    if len(V) < 4:
        raise TooFewVerticesError("need at least 4 vertices")
    c = V.mean(axis=0)
    X = V - c
    found = {}
    for phi in _candidate_maps(X, tol):
        perm, _ = _permutation_for(X, phi, tol)
        if perm is None or np.max(np.abs(phi - np.eye(3))) <= 1e-8:
            continue
        if perm not in found:
            shift = c - phi @ c
            rec = SymmetryRecord(phi=phi, shift=shift, permutation=perm)
            if rec.verify(V, tol):
                found[perm] = rec
    return list(found.values())


def asymmetry_margin(Q: Polytope3, tol: float = 1e-8) -> float:
    """Smallest full-match residual over nonidentity orthogonal candidates.

    A large margin certifies that no rigid motion symmetry is anywhere near;
    returns inf when no candidate map at all survives the orthogonality
    screen.
    """
    V = np.asarray(Q.vertices, dtype=float)
    if len(V) < 4:
        raise TooFewVerticesError("need at least 4 vertices")
    X = V - V.mean(axis=0)
    best = np.inf
    for phi in _candidate_maps(X, max(tol, 1e-6)):
        if np.max(np.abs(phi - np.eye(3))) <= 1e-8:
            continue
        images = X @ phi.T
        d = np.linalg.norm(X[:, None, :] - images[None, :, :], axis=-1)
        perm = np.argmin(d, axis=1)
        if len(set(perm.tolist())) != len(X):
            continue
        best = min(best, float(np.max(d[np.arange(len(X)), perm])))
    return best


def match_congruent(Q1: Polytope3, Q2: Polytope3, tol: float = 1e-8,
                    proper_only: bool = True):
    """Rigid motion (phi, shift, perm) with phi Q1 + shift = Q2, or None."""
    A = np.asarray(Q1.vertices, dtype=float)
    B = np.asarray(Q2.vertices, dtype=float)
    if len(A) != len(B) or len(A) < 4:
        return None
    ca, cb = A.mean(axis=0), B.mean(axis=0)
    X, Y = A - ca, B - cb
    # search maps from X triples onto a fixed well-conditioned Y triple
    i1, i2, i3 = _base_triple(Y)
    T_target = np.column_stack([Y[i1], Y[i2], Y[i3]])
    normsX = np.linalg.norm(X, axis=1)
    normsY = np.linalg.norm(Y, axis=1)
    sigX = _distance_signatures(X)
    sigY = _distance_signatures(Y)

    def compatible(i):
        return [j for j in range(len(X))
                if abs(normsX[j] - normsY[i]) <= 4 * tol
                and np.max(np.abs(sigX[j] - sigY[i])) <= 8 * tol]

    d12 = np.linalg.norm(Y[i1] - Y[i2])
    d13 = np.linalg.norm(Y[i1] - Y[i3])
    d23 = np.linalg.norm(Y[i2] - Y[i3])
    for p1, p2, p3 in product(compatible(i1), compatible(i2), compatible(i3)):
        if len({p1, p2, p3}) < 3:
            continue
        if (abs(np.linalg.norm(X[p1] - X[p2]) - d12) > 8 * tol
                or abs(np.linalg.norm(X[p1] - X[p3]) - d13) > 8 * tol
                or abs(np.linalg.norm(X[p2] - X[p3]) - d23) > 8 * tol):
            continue
        S = np.column_stack([X[p1], X[p2], X[p3]])
        if abs(np.linalg.det(S)) < 1e-14:
            continue
        phi = T_target @ np.linalg.inv(S)
        if np.max(np.abs(phi.T @ phi - np.eye(3))) > 1e-6:
            continue
        if proper_only and np.linalg.det(phi) < 0:
            continue
        images = X @ phi.T
        d = np.linalg.norm(Y[:, None, :] - images[None, :, :], axis=-1)
        perm = np.argmin(d, axis=1)
        if len(set(perm.tolist())) != len(X):
            continue
        if float(np.max(d[np.arange(len(X)), perm])) <= tol:
            shift = cb - phi @ ca
            return phi, shift, tuple(int(p) for p in perm)
    return None


# -- perturbation to symmetry-free polytopes ------------------------------------


@dataclass(frozen=True)
class AsymmetryCertificate:
    """Per-subspace evidence that the perturbed shadows have no symmetries."""

    delta: float
    epsilon_final: float
    rounds: int
    subspaces: tuple   # of dicts {basis, min_symmetry_residual}

    def to_json_dict(self) -> dict:
        return {"delta": float(self.delta),
                "epsilon_final": float(self.epsilon_final),
                "rounds": int(self.rounds),
                "subspaces": [{"basis": [[float(x) for x in row] for row in s["basis"]],
                               "min_symmetry_residual": float(s["min_symmetry_residual"])}
                              for s in self.subspaces]}


def _vertex_diameter(V: np.ndarray) -> float:
    d = np.linalg.norm(V[:, None, :] - V[None, :, :], axis=-1)
    return float(np.max(d))


def _sampled_symmetry_state(P: Body4, bases, tol: float):
    records = []
    for basis in bases:
        Q = project_polytope(P, basis)
        syms = detect_rigid_symmetries(Q, tol)
        margin = asymmetry_margin(Q, tol)
        records.append({"basis": basis, "symmetries": len(syms),
                        "min_symmetry_residual": margin})
    return records


def perturb_to_asymmetric(P: Body4, h_bases=None, tol: float = 1e-8,
                          seed: int = 0, max_rounds: int = 8,
                          delta_bound: float | None = None):
    """Nearby polytope whose sampled 3D shadows all lack rigid symmetries.

    Random radial vertex jitters of magnitude eps (halved each round from
    1e-2 times the diameter) until every sampled shadow is symmetry-free;
    the Hausdorff move is bounded by the largest vertex displacement.
    Returns (body, certificate); the input is returned unchanged when it is
    already asymmetric on all sampled subspaces.
    """
    if not isinstance(P.shape, PolytopeShape):
        raise ValueError("perturbation needs a polytope body")
    if h_bases is None:
        h_bases = random_subspace_bases(50, seed=seed + 17)
    V = P.effective_vertices()
    diam = _vertex_diameter(V)
    eps0 = 1e-2 * diam
    bound = delta_bound if delta_bound is not None else eps0

    state = _sampled_symmetry_state(P, h_bases, tol)
    if all(s["symmetries"] == 0 for s in state):
        cert = AsymmetryCertificate(delta=0.0, epsilon_final=0.0, rounds=0,
                                    subspaces=tuple(state))
        return P, cert

    rng = np.random.default_rng(seed)
    c = V.mean(axis=0)
    radial = V - c
    radial_unit = radial / np.maximum(np.linalg.norm(radial, axis=1, keepdims=True), 1e-12)
    for round_idx in range(max_rounds):
        eps = min(eps0 / 2 ** round_idx, bound)
        jitter = eps * rng.uniform(-1.0, 1.0, size=(len(V), 1)) * radial_unit
        try:
            cand = polytope(V + jitter, kind=P.kind)
        except ValueError:
            continue
        state = _sampled_symmetry_state(cand, h_bases, tol)
        if all(s["symmetries"] == 0 for s in state):
            delta = float(np.max(np.linalg.norm(jitter, axis=1)))
            cert = AsymmetryCertificate(delta=delta, epsilon_final=eps,
                                        rounds=round_idx + 1,
                                        subspaces=tuple(state))
            return cand, cert
    raise BudgetExhaustedError(
        f"no symmetry-free perturbation found in {max_rounds} rounds")
