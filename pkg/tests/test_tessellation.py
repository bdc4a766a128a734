import math

import numpy as np
import pytest

from idealvoronoi import hyperbolic as hyp
from idealvoronoi.measure import Configuration, EuclideanBox, HyperbolicDisk, IntensityMeasure, SeedStream, sample_poisson
from idealvoronoi.tessellation import (
    MARGIN_SENTINEL,
    BusemannFamily,
    CellAssignment,
    DistanceFamily,
    NormalizedDistanceFamily,
    ValidityError,
    adjacency_probe,
    assign,
    cell_contains,
    grid,
    lipschitz_violation,
    unboundedness_probe,
)

LINE = EuclideanBox((-2.0,), (2.0,))


def sites_1d(*xs, window=LINE):
    return DistanceFamily(Configuration(np.array(xs, dtype=float).reshape(-1, 1), window))


class TestAssign:
    def test_two_sites_on_a_line(self):
        res = assign(sites_1d(-1.0, 1.0), [0.2])
        assert res.winner.tolist() == [1]
        assert res.margin[0] == pytest.approx(0.4, abs=1e-15)

    def test_single_member_has_sentinel_margin(self):
        res = assign(sites_1d(0.5), np.linspace(-2, 2, 9))
        assert np.all(res.winner == 0)
        assert res.margin_infinite
        assert np.all(res.margin == MARGIN_SENTINEL)

    def test_bisector_ties_go_to_lower_index(self):
        fam = DistanceFamily(Configuration([(0.0, 0.0), (1.0, 0.0)], EuclideanBox((-1, -1), (2, 1))))
        q = np.column_stack([np.full(5, 0.5), np.linspace(-1, 1, 5)])
        res = assign(fam, q)
        assert res.winner.tolist() == [0] * 5
        assert np.all(res.margin == 0) and np.all(res.tie)

    def test_empty_family(self):
        with pytest.raises(ValueError):
            assign(DistanceFamily(Configuration(np.zeros((0, 2)), EuclideanBox.from_sides(1, 1))), [(0.5, 0.5)])

    def test_normalized_offset_does_not_change_winners(self):
        cfg = sample_poisson(IntensityMeasure(HyperbolicDisk(3.0), 0.5), SeedStream(3))
        q = hyp.as_real_pairs(hyp.from_polar(np.linspace(0, 2, 50), np.linspace(0, 6, 50)))
        a = assign(DistanceFamily(cfg), q)
        b = assign(NormalizedDistanceFamily(cfg, 4.2), q)
        assert np.array_equal(a.winner, b.winner)
        assert np.allclose(a.margin, b.margin)

    def test_winner_is_nearest_site(self):
        cfg = sample_poisson(IntensityMeasure(EuclideanBox.from_sides(1, 1), 30), SeedStream(8))
        q = np.random.default_rng(0).random((200, 2))
        res = assign(DistanceFamily(cfg), q)
        brute = np.argmin(((q[:, None] - cfg.points[None]) ** 2).sum(-1), axis=1)
        assert np.array_equal(res.winner, brute)

    def test_csv_round_trip(self):
        cfg = sample_poisson(IntensityMeasure(EuclideanBox.from_sides(1, 1), 10), SeedStream(9))
        res = assign(DistanceFamily(cfg), np.random.default_rng(1).random((20, 2)))
        back = CellAssignment.from_csv(res.to_csv())
        assert np.array_equal(back.queries, res.queries)
        assert np.array_equal(back.winner, res.winner)
        assert np.array_equal(back.margin, res.margin)


class TestCellContains:
    def test_own_site(self):
        cfg = sample_poisson(IntensityMeasure(EuclideanBox.from_sides(1, 1), 20), SeedStream(2))
        fam = DistanceFamily(cfg)
        assert all(cell_contains(fam, i, cfg.points[i]) for i in range(len(cfg)))

    def test_closed_cells_share_the_midpoint(self):
        fam = sites_1d(-1.0, 1.0)
        assert cell_contains(fam, 0, [0.0]) and cell_contains(fam, 1, [0.0])

    def test_single_busemann_atom_contains_everything(self):
        fam = BusemannFamily([1.0], [0.3])
        for z in hyp.from_polar(np.linspace(0, 10, 11), np.linspace(0, 6, 11)):
            assert cell_contains(fam, 0, z)

    def test_index_range(self):
        with pytest.raises(IndexError):
            cell_contains(sites_1d(0.0), 1, [0.0])


class TestAdjacency:
    def test_two_sites(self):
        fam = DistanceFamily(Configuration([(0.2, 0.5), (0.8, 0.5)], EuclideanBox.from_sides(1, 1)))
        assert adjacency_probe(fam, EuclideanBox.from_sides(1, 1), 0.05) == {(0, 1)}

    def test_single_site(self):
        assert adjacency_probe(sites_1d(0.0), LINE, 0.1) == set()

    def test_collinear_sites_form_intervals(self):
        fam = sites_1d(-1.5, 0.0, 1.0)
        assert adjacency_probe(fam, LINE, 0.05) == {(0, 1), (1, 2)}

    def test_hyperbolic_window(self):
        cfg = Configuration(hyp.as_real_pairs(hyp.from_polar(np.array([0.5, 0.5]), np.array([0.0, math.pi]))),
                            HyperbolicDisk(2.0))
        assert adjacency_probe(DistanceFamily(cfg), HyperbolicDisk(2.0), 0.05) == {(0, 1)}


class TestGrid:
    def test_box_grid_covers_corners(self):
        pts, shape, mask = grid(EuclideanBox.from_sides(1, 2), 0.5)
        assert shape == (3, 5) and mask.all()
        assert pts.min(axis=0).tolist() == [0, 0] and pts.max(axis=0).tolist() == [1, 2]

    def test_disk_grid_inside(self):
        pts, shape, mask = grid(HyperbolicDisk(1.0), 0.05)
        inside = pts[mask.ravel()]
        assert np.all(np.hypot(inside[:, 0], inside[:, 1]) <= math.tanh(0.5) + 1e-12)
        assert mask.sum() > 0.7 * mask.size

    def test_bad_resolution(self):
        with pytest.raises(ValueError):
            grid(LINE, 0.0)


class TestUnboundedness:
    def test_single_atom(self):
        assert unboundedness_probe(BusemannFamily([2.0], [5.0]), 0, np.linspace(0, 50, 11)).all()

    def test_equal_heights(self):
        fam = BusemannFamily([0.0, 1.0], [0.0, 0.0])
        radii = np.linspace(0, 30, 121)
        wins = unboundedness_probe(fam, 0, radii)
        direct = fam.values_polar(radii, 0.0)
        assert np.array_equal(wins, direct[:, 0] <= direct[:, 1])
        assert wins.all()

    def test_heavy_atom_wins_eventually(self):
        fam = BusemannFamily([0.0, 0.5], [0.0, 3.0])
        radii = np.arange(0, 20.01, 0.25)
        wins = unboundedness_probe(fam, 1, radii)
        assert not wins[0] and wins[-1]
        onset = radii[np.argmax(wins)]
        assert np.all(wins[radii >= onset])

    def test_far_radius_precision(self):
        fam = BusemannFamily([0.0, 1e-6], [0.0, 0.0])
        assert unboundedness_probe(fam, 1, [50.0])[0]

    def test_validity_radius_enforced_off_ray(self):
        fam = BusemannFamily([0.0, 2.0], [0.0, 1.0], r_valid=1.0)
        unboundedness_probe(fam, 1, [0.5, 1.0], direction=0.3)
        with pytest.raises(ValidityError):
            unboundedness_probe(fam, 1, [0.5, 1.5], direction=0.3)
        # own ray is certified at every radius
        assert unboundedness_probe(fam, 1, [50.0])[0]


class TestLipschitz:
    def test_busemann_members(self):
        rng = np.random.default_rng(4)
        fam = BusemannFamily(rng.random(20) * 2 * math.pi, rng.normal(size=20))
        y = hyp.from_polar(rng.random(200) * 4, rng.random(200) * 6.3)
        y2 = hyp.from_polar(rng.random(200) * 4, rng.random(200) * 6.3)
        assert lipschitz_violation(fam, y, y2) <= 1e-9

    def test_distance_members(self):
        cfg = sample_poisson(IntensityMeasure(EuclideanBox.from_sides(1, 1), 20), SeedStream(6))
        rng = np.random.default_rng(5)
        assert lipschitz_violation(DistanceFamily(cfg), rng.random((100, 2)), rng.random((100, 2))) <= 1e-12
