"""Shared fixtures and independent oracles for the test suite.

Everything here is deliberately independent of the library's computation
paths: Legendre values come from the classical recurrences, 3D rotations
from the axis-angle formula, symmetry counts from exhaustive permutation
search with an orthogonal Procrustes fit, and diameters from brute-force
vertex-pair enumeration.
"""

from __future__ import annotations

from itertools import permutations

import numpy as np
from scipy.linalg import orthogonal_procrustes

from congrulab.bodies import polytope
from congrulab.sphere import random_directions, unit


def wrap_err(a: float, b: float, period: float) -> float:
    """Circular distance between two parameters."""
    return abs((a - b + period / 2) % period - period / 2)


# -- Legendre oracles ----------------------------------------------------------


def legendre_p(n: int, x):
    """P_n by the three-term recurrence."""
    x = np.asarray(x, dtype=float)
    p_prev, p = np.ones_like(x), x.copy()
    if n == 0:
        return p_prev
    for k in range(1, n):
        p_prev, p = p, ((2 * k + 1) * x * p - k * p_prev) / (k + 1)
    return p


def legendre_p0(n: int) -> float:
    """P_n(0): zero for odd n, (-1)^(n/2) (n-1)!!/n!! for even n."""
    if n % 2:
        return 0.0
    val = 1.0
    for k in range(2, n + 1, 2):
        val *= (k - 1) / k
    return val * (-1) ** (n // 2)


# -- rotation oracles -----------------------------------------------------------


def rodrigues(axis, angle: float) -> np.ndarray:
    """3x3 rotation about ``axis`` by ``angle`` (axis-angle formula)."""
    u = np.asarray(axis, dtype=float)
    u = u / np.linalg.norm(u)
    K = np.array([[0, -u[2], u[1]], [u[2], 0, -u[0]], [-u[1], u[0], 0]])
    return np.eye(3) + np.sin(angle) * K + (1 - np.cos(angle)) * (K @ K)


def embed_rotation(frame, rot3: np.ndarray) -> np.ndarray:
    """Embed a 3x3 map of span{e1, e2, pole} into R^4, fixing the frame normal."""
    B = np.column_stack([frame.e1, frame.e2, frame.pole])
    return B @ rot3 @ B.T + np.outer(frame.normal, frame.normal)


# -- symmetry oracle ------------------------------------------------------------


def brute_force_symmetries(vertices, tol: float = 1e-8):
    """All nonidentity rigid motions of a 3D vertex set, by exhaustive search.

    For every permutation, fit the best orthogonal map (Procrustes, allowing
    reflections) between the centered sets and keep exact matches.
    """
    V = np.asarray(vertices, dtype=float)
    c = V.mean(axis=0)
    X = V - c
    found = []
    for perm in permutations(range(len(V))):
        A = X[list(perm)]
        R, _ = orthogonal_procrustes(A, X)   # A @ R ~= X
        phi = R.T
        if np.max(np.linalg.norm(A @ R - X, axis=1)) > tol:
            continue
        if np.max(np.abs(phi - np.eye(3))) <= 1e-10 and perm == tuple(range(len(V))):
            continue
        found.append((perm, phi))
    return found


def brute_force_diameters(vertices):
    """(max pair distance, list of unit directions of maximal vertex pairs)."""
    V = np.asarray(vertices, dtype=float)
    d = np.linalg.norm(V[:, None, :] - V[None, :, :], axis=-1)
    dmax = float(np.max(d))
    dirs = []
    for i in range(len(V)):
        for j in range(i + 1, len(V)):
            if d[i, j] >= dmax - 1e-9 * dmax:
                u = (V[i] - V[j]) / d[i, j]
                for k, x in enumerate(u):
                    if abs(x) > 1e-8:
                        u = u if x > 0 else -u
                        break
                if not any(np.linalg.norm(u - w) < 1e-6 for w in dirs):
                    dirs.append(u)
    return dmax, dirs


# -- random fields ---------------------------------------------------------------


def band_limited_field(seed: int, degree: int = 6, terms: int = 8, scale: float = 1.0):
    """Random polynomial field on S^3: sum of c_k (d_k . x)^{m_k}, m_k <= degree."""
    rng = np.random.default_rng(seed)
    axes = unit(rng.standard_normal((terms, 4)))
    degs = rng.integers(1, degree + 1, terms)
    coeffs = scale * rng.standard_normal(terms)

    def field(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1])
        for a, d, c in zip(axes, degs, coeffs):
            out = out + c * (x @ a) ** int(d)
        return out

    return field


def odd_field(seed: int, pole, **kw):
    """Band-limited field that is odd under the pole reflection."""
    f = band_limited_field(seed, **kw)
    pole = unit(pole)

    def odd(x):
        x = np.asarray(x, dtype=float)
        refl = 2.0 * (x @ pole)[..., None] * pole - x
        return 0.5 * (f(x) - f(refl))

    return odd


def even_field(seed: int, pole, **kw):
    f = band_limited_field(seed, **kw)
    pole = unit(pole)

    def even(x):
        x = np.asarray(x, dtype=float)
        refl = 2.0 * (x @ pole)[..., None] * pole - x
        return 0.5 * (f(x) + f(refl))

    return even


# -- body fixtures ----------------------------------------------------------------


def planted_polytope(seed: int, pole, length: float = 2.0, n_extra: int = 28,
                     through_origin: bool = False, kind: str = "convex"):
    """Random polytope with a unique diameter of the given length parallel to pole.

    The diameter endpoints sit at c +- (length/2) pole; every other vertex
    lies in a ball of radius 0.33*length around c, so no other vertex pair
    comes close to the diameter length.  With ``through_origin`` the center
    moves onto the pole axis near the origin and a small cross-polytope of
    vertices keeps the origin interior (star-body fixtures).
    """
    rng = np.random.default_rng(seed)
    pole = unit(pole)
    if through_origin:
        c = 0.07 * length * pole
    else:
        c = 0.15 * length * unit(rng.standard_normal(4))
    pts = [c + 0.5 * length * pole, c - 0.5 * length * pole]
    radii = rng.uniform(0.5, 1.0, (n_extra, 1))
    pts = np.vstack([pts, c + 0.33 * length * random_directions(n_extra, rng) * radii])
    if through_origin:
        cross = c + 0.3 * length * np.vstack([np.eye(4), -np.eye(4)])
        pts = np.vstack([pts, cross])
    return polytope(pts, kind=kind)


def radial_by_bisection(contains, thetas, hi: float, iters: int = 64):
    """Radial values by bisection on a membership oracle (fully independent).

    ``contains(points)`` must return a boolean array; ``hi`` must be outside
    the body along every ray.
    """
    thetas = np.asarray(thetas, dtype=float)
    lo = np.zeros(len(thetas))
    hi = np.full(len(thetas), float(hi))
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        inside = contains(mid[:, None] * thetas)
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
    return 0.5 * (lo + hi)
