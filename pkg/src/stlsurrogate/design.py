"""Low-discrepancy designs on arbitrary domains.

Initial designs come from the Good Lattice Point method on the unit
hypercube: point i, coordinate j is ((i * h_j mod N) + 0.5) / N for a
generating vector of integers coprime to N, chosen to minimize centered-L2
discrepancy. Unit-cube points map into the target domain through a chain of
inverse conditional CDFs (the inverse Rosenblatt transform), so any region
that factors as F1(x1) F2|1(x2|x1) ... can be covered. The same machinery
provides the uniform-design baseline and the candidate pool the adaptive
strategy maximizes over.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

__all__ = [
    "DesignError",
    "Domain",
    "DesignMatrix",
    "Uniform",
    "Triangular",
    "simplex_cut_2d",
    "glp_unit_design",
    "centered_l2",
    "inv_rosenblatt",
    "candidate_pool",
    "random_design",
    "uniform_design",
    "load_domain",
    "domain_from_dict",
]


class DesignError(Exception):
    pass


# ---------------------------------------------------------------------------
# Centered-L2 discrepancy (squared), Hickernell's closed form


def centered_l2(points):
    """Squared centered-L2 discrepancy of a point set in [0, 1]^d."""
    P = np.atleast_2d(np.asarray(points, dtype=float))
    n, d = P.shape
    shifted = np.abs(P - 0.5)
    one = 1.0 + 0.5 * shifted - 0.5 * shifted**2
    term1 = (13.0 / 12.0) ** d
    term2 = (2.0 / n) * np.sum(np.prod(one, axis=1))
    cross = (
        1.0
        + 0.5 * shifted[:, None, :]
        + 0.5 * shifted[None, :, :]
        - 0.5 * np.abs(P[:, None, :] - P[None, :, :])
    )
    term3 = np.sum(np.prod(cross, axis=2)) / n**2
    return term1 - term2 + term3


# ---------------------------------------------------------------------------
# Good Lattice Point designs


def _coprimes(n):
    return [h for h in range(1, n) if math.gcd(h, n) == 1]


def _lattice(n, gens):
    i = np.arange(n)[:, None]
    h = np.asarray(gens)[None, :]
    return ((i * h) % n + 0.5) / n


def glp_unit_design(N, d):
    """Good Lattice Point design of N points on [0, 1)^d.

    The generating vector starts at h_1 = 1; remaining components are
    distinct integers coprime to N chosen to minimize centered-L2
    discrepancy -- exhaustively for d <= 2, coordinate-greedy beyond.
    Deterministic for fixed (N, d); ties go to the lowest generator.
    """
    if N < 2:
        raise DesignError("GLP designs need N >= 2")
    if d < 1:
        raise DesignError("dimension must be >= 1")
    avail = _coprimes(N)
    if len(avail) < d:
        raise DesignError(
            f"only {len(avail)} integers in [1, {N - 1}] are coprime to {N}; "
            f"cannot build a {d}-dimensional design (adjust N)"
        )
    gens = [1]
    for _ in range(1, d):
        candidates = [h for h in avail if h not in gens]
        best_h, best_disc = None, np.inf
        for h in candidates:
            disc = centered_l2(_lattice(N, gens + [h]))
            if disc < best_disc:
                best_h, best_disc = h, disc
        gens.append(best_h)
    points = _lattice(N, gens)
    return DesignMatrix(points, "glp", generators=tuple(gens))


# ---------------------------------------------------------------------------
# Conditional CDF chain links


class Uniform:
    """Independent uniform marginal on [lo, hi]."""

    def __init__(self, lo, hi):
        if not hi > lo:
            raise DesignError(f"uniform needs lo < hi, got [{lo}, {hi}]")
        self.lo = float(lo)
        self.hi = float(hi)

    def inverse(self, u, prefix):
        return self.lo + u * (self.hi - self.lo)

    def support(self, prefix):
        return self.lo, self.hi

    def bounds(self):
        return self.lo, self.hi

    def to_dict(self):
        return {"dist": "uniform", "lo": self.lo, "hi": self.hi}


class Triangular:
    """Independent triangular marginal on [lo, hi] with the given mode."""

    def __init__(self, lo, mode, hi):
        if not (lo <= mode <= hi and lo < hi):
            raise DesignError("triangular needs lo <= mode <= hi, lo < hi")
        self.lo = float(lo)
        self.mode = float(mode)
        self.hi = float(hi)

    def inverse(self, u, prefix):
        lo, m, hi = self.lo, self.mode, self.hi
        split = (m - lo) / (hi - lo)
        if u < split:
            return lo + math.sqrt(u * (hi - lo) * (m - lo))
        return hi - math.sqrt((1.0 - u) * (hi - lo) * (hi - m))

    def support(self, prefix):
        return self.lo, self.hi

    def bounds(self):
        return self.lo, self.hi

    def to_dict(self):
        return {
            "dist": "triangular",
            "lo": self.lo,
            "mode": self.mode,
            "hi": self.hi,
        }


class _RegionMarginal2D:
    """First coordinate of a uniform 2-D region with affine cuts: the
    marginal density is proportional to the strip width at x1."""

    def __init__(self, x1_lo, x1_hi, lower, upper):
        self.x1_lo = float(x1_lo)
        self.x1_hi = float(x1_hi)
        self.a0, self.a1 = (float(v) for v in lower)
        self.b0, self.b1 = (float(v) for v in upper)
        if self._width(self.x1_lo) < 0 or self._width(self.x1_hi) < 0:
            raise DesignError("region width is negative at an x1 endpoint")
        if self._area(self.x1_hi) <= 0:
            raise DesignError("region has zero area")

    def _width(self, x1):
        return (self.b0 + self.b1 * x1) - (self.a0 + self.a1 * x1)

    def _area(self, x1):
        # integral of the width from x1_lo to x1 (quadratic, exact)
        c0 = self.b0 - self.a0
        c1 = self.b1 - self.a1
        lo = self.x1_lo
        return c0 * (x1 - lo) + 0.5 * c1 * (x1 * x1 - lo * lo)

    def inverse(self, u, prefix):
        if u <= 0.0:
            return self.x1_lo
        if u >= 1.0:
            return self.x1_hi
        target = u * self._area(self.x1_hi)
        return brentq(
            lambda x: self._area(x) - target, self.x1_lo, self.x1_hi, xtol=1e-14
        )

    def support(self, prefix):
        return self.x1_lo, self.x1_hi

    def bounds(self):
        return self.x1_lo, self.x1_hi

    def to_dict(self):
        return {"dist": "region2d_marginal"}


class _RegionConditional2D:
    """Second coordinate of the uniform region: x2 | x1 is uniform on the
    affine interval [a0 + a1*x1, b0 + b1*x1]."""

    def __init__(self, x1_lo, x1_hi, lower, upper):
        self.x1_lo = float(x1_lo)
        self.x1_hi = float(x1_hi)
        self.a0, self.a1 = (float(v) for v in lower)
        self.b0, self.b1 = (float(v) for v in upper)

    def inverse(self, u, prefix):
        x1 = prefix[-1]
        lo = self.a0 + self.a1 * x1
        hi = self.b0 + self.b1 * x1
        return lo + u * (hi - lo)

    def support(self, prefix):
        x1 = prefix[-1]
        return self.a0 + self.a1 * x1, self.b0 + self.b1 * x1

    def bounds(self):
        corners = [
            self.a0 + self.a1 * self.x1_lo,
            self.a0 + self.a1 * self.x1_hi,
            self.b0 + self.b1 * self.x1_lo,
            self.b0 + self.b1 * self.x1_hi,
        ]
        return min(corners), max(corners)

    def to_dict(self):
        return {
            "dist": "conditional_uniform",
            "lower": [self.a0, self.a1],
            "upper": [self.b0, self.b1],
        }


def simplex_cut_2d(x1_lo, x1_hi, lower=(0.0, 0.0), upper=(0.0, 1.0)):
    """Chain links for a uniform 2-D region with affine cuts.

    Returns the (marginal, conditional) link pair for
    {(x1, x2) : x1 in [x1_lo, x1_hi], x2 in [a0 + a1*x1, b0 + b1*x1]}.
    The default cuts give the triangle {0 <= x2 <= x1 <= 1} shape.
    """
    return (
        _RegionMarginal2D(x1_lo, x1_hi, lower, upper),
        _RegionConditional2D(x1_lo, x1_hi, lower, upper),
    )


@dataclass
class Domain:
    """d-dimensional environment space factored as a conditional CDF chain."""

    links: list
    names: list = None
    units: list = None

    def __post_init__(self):
        d = len(self.links)
        if d == 0:
            raise DesignError("domain needs at least one dimension")
        if self.names is None:
            self.names = [f"x{j + 1}" for j in range(d)]
        if self.units is None:
            self.units = [""] * d
        if len(self.names) != d or len(self.units) != d:
            raise DesignError("names/units must match dimension count")

    @property
    def dim(self):
        return len(self.links)

    def bounds(self):
        lo = np.empty(self.dim)
        hi = np.empty(self.dim)
        for j, link in enumerate(self.links):
            lo[j], hi[j] = link.bounds()
        return lo, hi

    def contains(self, x, tol=1e-9):
        x = np.asarray(x, dtype=float).ravel()
        if x.shape != (self.dim,):
            return False
        for j, link in enumerate(self.links):
            lo, hi = link.support(x[:j])
            if not (lo - tol <= x[j] <= hi + tol):
                return False
        return True

    def transform(self, u):
        """Inverse Rosenblatt transform of one unit-cube point."""
        u = np.asarray(u, dtype=float).ravel()
        if u.shape != (self.dim,):
            raise DesignError(f"point has dimension {u.shape}, domain is {self.dim}")
        if np.any(u < 0.0) or np.any(u >= 1.0):
            raise DesignError("unit-cube coordinates must lie in [0, 1)")
        x = np.empty(self.dim)
        for j, link in enumerate(self.links):
            x[j] = link.inverse(u[j], x[:j])
        return x

    def to_dict(self):
        return {
            "dimensions": [
                {"name": n, "unit": un, **link.to_dict()}
                for n, un, link in zip(self.names, self.units, self.links)
            ]
        }


def inv_rosenblatt(dom, u):
    """Map unit-cube point(s) into the domain via inverse conditional CDFs."""
    u = np.asarray(u, dtype=float)
    if u.ndim == 1:
        return dom.transform(u)
    return np.array([dom.transform(row) for row in u])


@dataclass
class DesignMatrix:
    """N x d point set plus where it came from."""

    points: np.ndarray
    provenance: str
    generators: tuple = None

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))

    @property
    def n(self):
        return self.points.shape[0]

    @property
    def dim(self):
        return self.points.shape[1]


def uniform_design(dom, N):
    """N-point uniform design on the domain: GLP lattice pushed through the
    inverse Rosenblatt transform."""
    unit = glp_unit_design(N, dom.dim)
    pts = inv_rosenblatt(dom, unit.points)
    return DesignMatrix(pts, "glp", generators=unit.generators)


def candidate_pool(dom, M, seed):
    """M domain points for the acquisition argmax, deterministic per seed.

    Uses jittered stratified (Latin hypercube) sampling on the unit cube;
    the degenerate M=1 pool is the domain point at the cube center.
    """
    if M < 1:
        raise DesignError("pool size must be >= 1")
    if M == 1:
        u = np.full((1, dom.dim), 0.5)
    else:
        rng = np.random.default_rng(seed)
        u = np.empty((M, dom.dim))
        for j in range(dom.dim):
            strata = rng.permutation(M)
            u[:, j] = (strata + rng.random(M)) / M
    return DesignMatrix(inv_rosenblatt(dom, u), "candidate-pool")


def random_design(dom, N, seed):
    """N independent draws from the domain's distribution."""
    rng = np.random.default_rng(seed)
    u = rng.random((N, dom.dim))
    return DesignMatrix(inv_rosenblatt(dom, u), "random")


# ---------------------------------------------------------------------------
# Domain files
#
# JSON or TOML with a 'dimensions' list in chain order, e.g.
#   {"dimensions": [{"name": "mass", "unit": "g",
#                    "dist": "uniform", "lo": 20, "hi": 70}]}
# A 'conditional_uniform' entry cuts the previous uniform dimension into a
# jointly uniform 2-D region; anything not factorable as a chain is rejected.


def domain_from_dict(doc):
    dims = doc.get("dimensions")
    if not dims:
        raise DesignError("domain document has no 'dimensions' list")
    links, names, units = [], [], []
    for j, spec in enumerate(dims):
        dist = spec.get("dist")
        if dist == "uniform":
            links.append(Uniform(spec["lo"], spec["hi"]))
        elif dist == "triangular":
            links.append(Triangular(spec["lo"], spec["mode"], spec["hi"]))
        elif dist == "conditional_uniform":
            if j == 0 or not isinstance(links[-1], Uniform):
                raise DesignError(
                    "conditional_uniform must follow a uniform dimension"
                )
            base = links.pop()
            marginal, conditional = simplex_cut_2d(
                base.lo, base.hi, spec["lower"], spec["upper"]
            )
            links.extend([marginal, conditional])
        else:
            raise DesignError(
                f"unsupported distribution {dist!r}; the domain file must "
                "describe a chain-factorable region"
            )
        names.append(spec.get("name", f"x{j + 1}"))
        units.append(spec.get("unit", ""))
    return Domain(links, names, units)


def load_domain(path):
    """Load a domain spec from a JSON or TOML file."""
    path = str(path)
    if path.endswith(".toml"):
        try:
            import tomllib as toml
        except ImportError:
            import tomli as toml
        with open(path, "rb") as fh:
            doc = toml.load(fh)
    else:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    return domain_from_dict(doc)
