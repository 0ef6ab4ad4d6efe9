"""Tests for lattice designs, discrepancy, and the inverse Rosenblatt
transform. scipy.stats.qmc.discrepancy serves as the independent oracle for
the centered-L2 computation."""

import numpy as np
import pytest
from scipy.stats import chi2
from scipy.stats import qmc as scipy_qmc
from scipy.stats import triang

from stlsurrogate.design import (
    DesignError,
    Domain,
    Triangular,
    Uniform,
    candidate_pool,
    centered_l2,
    domain_from_dict,
    glp_unit_design,
    inv_rosenblatt,
    load_domain,
    random_design,
    simplex_cut_2d,
    uniform_design,
)


def box(*ranges):
    return Domain([Uniform(lo, hi) for lo, hi in ranges])


def triangle_domain():
    # uniform over {0 <= x2 <= x1 <= 1}
    marginal, conditional = simplex_cut_2d(0.0, 1.0)
    return Domain([marginal, conditional])


# ---------------------------------------------------------------------------
# Centered-L2 discrepancy


def test_centered_l2_matches_scipy():
    rng = np.random.default_rng(0)
    for _ in range(20):
        n = int(rng.integers(2, 60))
        d = int(rng.integers(1, 5))
        P = rng.random((n, d))
        ours = centered_l2(P)
        theirs = scipy_qmc.discrepancy(P, method="CD")
        assert ours == pytest.approx(theirs, rel=1e-10)


def test_centered_l2_prefers_even_spread():
    even = np.linspace(0.1, 0.9, 5).reshape(-1, 1)
    clumped = np.full((5, 1), 0.5) + np.linspace(-0.02, 0.02, 5).reshape(-1, 1)
    assert centered_l2(even) < centered_l2(clumped)


# ---------------------------------------------------------------------------
# GLP designs


def test_glp_5_1_equispaced():
    dm = glp_unit_design(5, 1)
    np.testing.assert_allclose(dm.points[:, 0], [0.1, 0.3, 0.5, 0.7, 0.9])


def test_glp_5_2_brute_force_generator():
    # candidates h2 in {2, 3, 4}; pick the centered-L2 minimizer by brute force
    def lattice(h2):
        i = np.arange(5)
        return np.column_stack([(i % 5 + 0.5) / 5, ((i * h2) % 5 + 0.5) / 5])

    discs = {h2: centered_l2(lattice(h2)) for h2 in (2, 3, 4)}
    best = min(discs, key=lambda h: (discs[h], h))
    dm = glp_unit_design(5, 2)
    assert dm.generators == (1, best)
    np.testing.assert_allclose(dm.points, lattice(best))


def test_glp_latin_property():
    for N, d in [(7, 2), (11, 3), (25, 2), (32, 3), (50, 2)]:
        dm = glp_unit_design(N, d)
        for j in range(d):
            strata = np.floor(dm.points[:, j] * N).astype(int)
            assert sorted(strata) == list(range(N))


def test_glp_beats_random_discrepancy():
    rng = np.random.default_rng(1)
    glp = centered_l2(glp_unit_design(50, 2).points)
    rand = [centered_l2(rng.random((50, 2))) for _ in range(100)]
    assert glp < np.mean(rand)


def test_glp_deterministic():
    a = glp_unit_design(26, 2)
    b = glp_unit_design(26, 2)
    np.testing.assert_array_equal(a.points, b.points)
    assert a.generators == b.generators


def test_glp_rejects_infeasible_dimension():
    # phi(6) = 2 coprimes {1, 5}: no third distinct generator exists
    with pytest.raises(DesignError, match="coprime"):
        glp_unit_design(6, 3)
    glp_unit_design(6, 2)  # feasible


def test_glp_bad_args():
    with pytest.raises(DesignError):
        glp_unit_design(1, 1)
    with pytest.raises(DesignError):
        glp_unit_design(5, 0)


# ---------------------------------------------------------------------------
# Inverse Rosenblatt


def test_uniform_midpoint():
    dom = box((2.0, 4.0))
    assert inv_rosenblatt(dom, np.array([0.5]))[0] == pytest.approx(3.0)


def test_triangle_hand_case():
    # F1(x) = x^2 for the width-weighted marginal, so u=0.25 -> x1 = 0.5;
    # x2 | x1 uniform on [0, x1], so u=0.5 -> x2 = 0.25.
    dom = triangle_domain()
    x = inv_rosenblatt(dom, np.array([0.25, 0.5]))
    assert x[0] == pytest.approx(0.5, abs=1e-10)
    assert x[1] == pytest.approx(0.25, abs=1e-10)


def test_triangular_link_matches_scipy():
    link = Triangular(1.0, 2.5, 5.0)
    c = (2.5 - 1.0) / (5.0 - 1.0)
    for u in [0.01, 0.2, 0.375, 0.5, 0.8, 0.99]:
        ours = link.inverse(u, np.array([]))
        theirs = triang.ppf(u, c, loc=1.0, scale=4.0)
        assert ours == pytest.approx(theirs, abs=1e-12)


def test_rosenblatt_monotone_in_each_coordinate():
    dom = triangle_domain()
    rng = np.random.default_rng(2)
    for _ in range(50):
        u = rng.random(2)
        for j in range(2):
            lo_u = u.copy()
            hi_u = u.copy()
            lo_u[j] = u[j] * 0.5
            hi_u[j] = u[j] * 0.5 + 0.49
            a = dom.transform(lo_u)
            b = dom.transform(hi_u)
            assert a[j] <= b[j] + 1e-12


def test_membership_of_mapped_points():
    dom = triangle_domain()
    rng = np.random.default_rng(3)
    for _ in range(200):
        x = dom.transform(rng.random(2))
        assert dom.contains(x)
        assert 0 <= x[1] <= x[0] + 1e-9


def test_unit_cube_bounds_enforced():
    dom = box((0.0, 1.0))
    with pytest.raises(DesignError):
        dom.transform(np.array([1.0]))
    with pytest.raises(DesignError):
        dom.transform(np.array([-0.01]))


def chi2_uniformity_pvalue(dom, pts, bins=5, subgrid=41):
    """Chi-squared test of area-proportional cell counts on a bins x bins
    partition of the domain's bounding box; cell areas from a fine subgrid."""
    lo, hi = dom.bounds()
    edges = [np.linspace(lo[j], hi[j], bins + 1) for j in range(2)]
    # area fraction of each cell inside the domain (midpoint subgrid)
    fractions = np.zeros((bins, bins))
    for a in range(bins):
        for b in range(bins):
            xs = np.linspace(edges[0][a], edges[0][a + 1], subgrid + 1)[:-1]
            ys = np.linspace(edges[1][b], edges[1][b + 1], subgrid + 1)[:-1]
            xs += (xs[1] - xs[0]) / 2
            ys += (ys[1] - ys[0]) / 2
            inside = sum(
                dom.contains(np.array([x, y])) for x in xs for y in ys
            )
            fractions[a, b] = inside / subgrid**2
    counts = np.zeros((bins, bins))
    ix = np.clip(
        np.searchsorted(edges[0], pts[:, 0], side="right") - 1, 0, bins - 1
    )
    iy = np.clip(
        np.searchsorted(edges[1], pts[:, 1], side="right") - 1, 0, bins - 1
    )
    for a, b in zip(ix, iy):
        counts[a, b] += 1
    mask = fractions > 1e-3
    expected = fractions[mask] / fractions[mask].sum() * len(pts)
    observed = counts[mask]
    stat = float(np.sum((observed - expected) ** 2 / expected))
    dof = int(mask.sum()) - 1
    return 1.0 - chi2.cdf(stat, dof)


def test_pushforward_uniformity_box():
    dom = box((2.0, 4.0), (-1.0, 1.0))
    pts = candidate_pool(dom, 10_000, seed=0).points
    assert chi2_uniformity_pvalue(dom, pts) > 0.01


def test_pushforward_uniformity_triangle():
    dom = triangle_domain()
    pts = candidate_pool(dom, 10_000, seed=0).points
    assert chi2_uniformity_pvalue(dom, pts) > 0.01


# ---------------------------------------------------------------------------
# Candidate pool and baselines


def test_pool_m1_is_center():
    dom = box((2.0, 4.0), (0.0, 10.0))
    dm = candidate_pool(dom, 1, seed=5)
    np.testing.assert_allclose(dm.points, [[3.0, 5.0]])


def test_pool_membership_and_determinism():
    dom = triangle_domain()
    a = candidate_pool(dom, 128, seed=7)
    b = candidate_pool(dom, 128, seed=7)
    np.testing.assert_array_equal(a.points, b.points)
    assert all(dom.contains(p) for p in a.points)


def test_pool_seeds_differ():
    dom = box((0.0, 1.0), (0.0, 1.0))
    a = candidate_pool(dom, 64, seed=1)
    b = candidate_pool(dom, 64, seed=2)
    assert np.any(a.points != b.points)


def test_uniform_design_in_box():
    dom = box((2.0, 4.0), (0.0, 10.0))
    dm = uniform_design(dom, 10)
    assert dm.n == 10
    assert all(dom.contains(p) for p in dm.points)


def test_staggerings_differ_25_vs_26():
    a = uniform_design(box((0.0, 1.0), (0.0, 1.0)), 25)
    b = uniform_design(box((0.0, 1.0), (0.0, 1.0)), 26)
    assert a.generators != b.generators


def test_uniform_design_beats_random_median():
    dom = box((0.0, 1.0), (0.0, 1.0))
    ud_disc = centered_l2(uniform_design(dom, 30).points)
    rand_discs = [
        centered_l2(random_design(dom, 30, seed=s).points) for s in range(30)
    ]
    assert ud_disc < np.median(rand_discs)


def test_random_design_deterministic_per_seed():
    dom = box((0.0, 5.0))
    a = random_design(dom, 20, seed=9)
    b = random_design(dom, 20, seed=9)
    np.testing.assert_array_equal(a.points, b.points)


# ---------------------------------------------------------------------------
# Domain files


def test_domain_json_roundtrip(tmp_path):
    doc = {
        "dimensions": [
            {"name": "mass", "unit": "g", "dist": "uniform", "lo": 20, "hi": 70}
        ]
    }
    path = tmp_path / "dom.json"
    path.write_text(__import__("json").dumps(doc))
    dom = load_domain(path)
    assert dom.dim == 1
    assert dom.names == ["mass"]
    assert dom.units == ["g"]
    lo, hi = dom.bounds()
    assert (lo[0], hi[0]) == (20.0, 70.0)


def test_domain_toml(tmp_path):
    path = tmp_path / "dom.toml"
    path.write_text(
        '[[dimensions]]\nname = "x"\ndist = "uniform"\nlo = 0.0\nhi = 1.0\n'
        '[[dimensions]]\nname = "y"\ndist = "triangular"\nlo = 0.0\n'
        "mode = 0.5\nhi = 1.0\n"
    )
    dom = load_domain(path)
    assert dom.dim == 2
    assert isinstance(dom.links[1], Triangular)


def test_domain_conditional_uniform_chain():
    doc = {
        "dimensions": [
            {"name": "x1", "dist": "uniform", "lo": 0, "hi": 1},
            {
                "name": "x2",
                "dist": "conditional_uniform",
                "lower": [0.0, 0.0],
                "upper": [0.0, 1.0],
            },
        ]
    }
    dom = domain_from_dict(doc)
    x = dom.transform(np.array([0.25, 0.5]))
    assert x[0] == pytest.approx(0.5, abs=1e-10)
    assert x[1] == pytest.approx(0.25, abs=1e-10)


def test_domain_rejects_unknown_dist():
    with pytest.raises(DesignError, match="chain-factorable"):
        domain_from_dict(
            {"dimensions": [{"name": "x", "dist": "gaussian", "mu": 0}]}
        )


def test_domain_rejects_dangling_conditional():
    with pytest.raises(DesignError):
        domain_from_dict(
            {
                "dimensions": [
                    {
                        "name": "x",
                        "dist": "conditional_uniform",
                        "lower": [0, 0],
                        "upper": [1, 0],
                    }
                ]
            }
        )
