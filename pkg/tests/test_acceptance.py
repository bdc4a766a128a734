"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line.

Every criterion runs at desk scale (N = 10^4 replicas unless stated) with a
fixed seed, so a rerun reproduces the same verdicts and numbers.
"""
import math

import numpy as np
import pytest
from scipy import stats

from conftest import ACCEPTANCE
from idealvoronoi import hyperbolic as hyp
from idealvoronoi.cli import run
from idealvoronoi.harness import covariance_se, poisson_chisquare
from idealvoronoi.ipvt import (
    CONVERGENCE_FLOORS,
    DEFAULT_MIXING_EVENT,
    convergence_experiment,
    law_invariance_experiment,
    mixing_experiment,
    s0_law_test,
    truncation_soundness,
    unboundedness_experiment,
)
from idealvoronoi.measure import (
    BoundaryHeights,
    EuclideanBox,
    HyperbolicDisk,
    IntensityMeasure,
    SeedStream,
    count_in,
    sample_poisson,
)
from idealvoronoi.process import (
    IndependentMark,
    MeckeFunction,
    RIsolated,
    fullness_verdict,
    mecke_two_sided,
    palm_inclusion_probability,
    renyi_recurrence,
)

N = 10_000

TITLES = {
    1: "Poisson count law, chi-square vs Pois(4) in all three spaces",
    2: "independence of counts in disjoint regions",
    3: "Mecke equation, three test functions, Euclidean and hyperbolic",
    4: "Renyi recurrence for k <= 8 at m(A) = 4",
    5: "isolation identity and 1-D Palm inclusion e^(-2 lambda r)",
    6: "fullness verdicts",
    7: "Busemann geodesic-limit oracle at T = 15",
    8: "Busemann equivariance and cocycle additivity",
    9: "IPVT sampler laws: s0, truncation soundness, winner at o",
    10: "IPVT law invariance under isometries",
    11: "PVT to IPVT convergence trend and frozen floor",
    12: "mixing decay at L = 20",
    13: "unboundedness of cells along their own rays",
    14: "byte-identical CLI reruns",
}


def record(number: int, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d}: {TITLES[number]} ({detail})"
    ACCEPTANCE[number] = line
    print(line)
    assert ok, line


def _uniform_disk(rng, n, radius):
    # uniform in hyperbolic area on B(o, radius)
    s = np.sinh(radius / 2) ** 2
    rho = 2 * np.arcsinh(np.sqrt(rng.random(n) * s))
    return hyp.from_polar(rho, rng.random(n) * 2 * np.pi)


# windows holding a region of mass 4, plus a disjoint pair of regions, per space
SPACES = {
    "euclidean": (
        IntensityMeasure(EuclideanBox.from_sides(2, 2), 2.0),
        EuclideanBox((0, 0), (1, 2)),
        (EuclideanBox((0, 0), (1, 1)), EuclideanBox((1, 0), (2, 0.5))),
    ),
    "hyperbolic": (
        IntensityMeasure(HyperbolicDisk(3.0), 4.0 / (2 * math.pi * (math.cosh(2.0) - 1))),
        HyperbolicDisk(2.0),
        (HyperbolicDisk(1.5), HyperbolicDisk(3.0, 2.0)),
    ),
    "heights": (
        IntensityMeasure(BoundaryHeights(2.0)),
        BoundaryHeights(math.log(4.0)),
        (BoundaryHeights(0.0), BoundaryHeights(2.0, 1.0)),
    ),
}


def test_criterion_01_poisson_law():
    parts = []
    ok = True
    for i, (name, (measure, region, _)) in enumerate(SPACES.items()):
        assert measure.restricted(region).mass() == pytest.approx(4.0)
        seed = SeedStream(101, (i,))
        counts = [count_in(sample_poisson(measure, seed.child(j)), region) for j in range(N)]
        _, p, _ = poisson_chisquare(counts, 4.0)
        ok &= p > 0.01
        parts.append(f"{name} p={p:.3f}")
    record(1, ok, ", ".join(parts))


def test_criterion_02_independence():
    parts = []
    ok = True
    for i, (name, (measure, _, (a, b))) in enumerate(SPACES.items()):
        seed = SeedStream(102, (i,))
        ca, cb = np.empty(N), np.empty(N)
        for j in range(N):
            cfg = sample_poisson(measure, seed.child(j))
            ca[j], cb[j] = count_in(cfg, a), count_in(cfg, b)
        cov, se = covariance_se(ca, cb)
        ok &= abs(cov) <= 3 * se
        parts.append(f"{name} cov={cov:+.4f} se={se:.4f}")
    record(2, ok, ", ".join(parts))


def test_criterion_03_mecke():
    cases = {
        "euclidean": (IntensityMeasure(EuclideanBox.from_sides(3, 3), 1.0), EuclideanBox((1, 1), (2, 3)),
                      EuclideanBox((1, 1), (2, 2))),
        "hyperbolic": (IntensityMeasure(HyperbolicDisk(3.0), 0.5), HyperbolicDisk(1.0), HyperbolicDisk(2.0)),
    }
    parts = []
    ok = True
    for i, (name, (measure, region, core)) in enumerate(cases.items()):
        functions = [
            MeckeFunction("indicator", region),
            MeckeFunction("indicator-k", region, k=2),
            MeckeFunction("isolated", core, r=0.5),
        ]
        for j, f in enumerate(functions):
            rep = mecke_two_sided(measure, f, n=N, seed=SeedStream(103, (i, j)))
            ok &= rep.passed
            parts.append(f"{name}/{f.name} z={rep.z:+.2f}")
    record(3, ok, ", ".join(parts))


def test_criterion_04_renyi():
    parts = []
    ok = True
    for i, name in enumerate(("euclidean", "hyperbolic")):
        measure, region, _ = SPACES[name]
        rep = renyi_recurrence(measure, region, k_max=8, n=N, seed=SeedStream(104, (i,)))
        ok &= rep.passed and len(rep.z) == 8
        worst = max(abs(z) for z in rep.z.values())
        parts.append(f"{name} bins={len(rep.z)} max|z|={worst:.2f}")
    record(4, ok, ", ".join(parts))


def test_criterion_05_isolation():
    line = IntensityMeasure(EuclideanBox((0.0,), (6.0,)), 1.0)
    rep = mecke_two_sided(line, MeckeFunction("isolated", EuclideanBox((1.0,), (5.0,)), r=0.5), n=N, seed=105)
    ok = rep.passed
    parts = [f"mecke z={rep.z:+.2f}"]
    for j, (lam, r) in enumerate(((1.0, 0.5), (2.0, 0.25))):
        measure = IntensityMeasure(EuclideanBox((0.0,), (6.0,)), lam)
        exact = math.exp(-2 * lam * r)
        palm = palm_inclusion_probability(RIsolated(r), measure, [3.0], n=N, seed=SeedStream(105, (j,)),
                                          expected=exact)
        ok &= abs(palm.estimate - exact) < 3 * palm.se
        parts.append(f"(lambda={lam}, r={r}) p={palm.estimate:.4f} vs {exact:.4f}")
    record(5, ok, ", ".join(parts))


def test_criterion_06_fullness():
    measure = IntensityMeasure(EuclideanBox((0.0,), (6.0,)), 1.0)
    cases = [
        ("identity", RIsolated(0.0), "empirically-full"),
        ("mark p=0", IndependentMark(0.0), "empirically-empty"),
        ("isolated r=0.5", RIsolated(0.5), "nontrivial"),
    ]
    parts = []
    ok = True
    for j, (label, rule, expect) in enumerate(cases):
        rep = fullness_verdict(rule, measure, n=N, seed=SeedStream(106, (j,)), expect=expect)
        ok &= rep.extra["verdict"] == expect
        parts.append(f"{label} -> {rep.extra['verdict']}")
    record(6, ok, ", ".join(parts))


def test_criterion_07_busemann_oracle():
    rng = np.random.default_rng(107)
    xi = rng.random(100) * 2 * np.pi
    y = _uniform_disk(rng, 100, 4.0)
    T = 15.0
    oracle = hyp.hyperbolic_distance(y, hyp.geodesic_ray(xi, T)) - T
    err = float(np.max(np.abs(hyp.busemann(xi, y) - oracle)))
    record(7, err <= 1e-5, f"max error {err:.2e} over 100 pairs")


def test_criterion_08_cocycle():
    rng = np.random.default_rng(108)
    equiv, add = 0.0, 0.0
    for _ in range(1000):
        g = hyp.random_isometry(rng, 3.0)
        h = hyp.random_isometry(rng, 3.0)
        xi = rng.random() * 2 * np.pi
        y = _uniform_disk(rng, 1, 3.0)[0]
        lhs = hyp.busemann(xi, hyp.apply_isometry(g.inverse(), y))
        rhs = hyp.busemann(hyp.apply_boundary(g, xi), y) + hyp.height_cocycle(g, xi)
        equiv = max(equiv, abs(lhs - rhs))
        lhs = hyp.height_cocycle(g @ h, xi)
        rhs = hyp.height_cocycle(g, hyp.apply_boundary(h, xi)) + hyp.height_cocycle(h, xi)
        add = max(add, abs(lhs - rhs))
    record(8, equiv <= 1e-9 and add <= 1e-9, f"equivariance {equiv:.1e}, additivity {add:.1e} over 1000 triples")


def test_criterion_09_sampler_laws():
    s0 = s0_law_test(n=N, seed=109)
    trunc = truncation_soundness(r_valid=1.0, n_draws=100, seed=SeedStream(109, (1,)))
    ok = s0.passed and trunc.passed
    record(9, ok, f"s0 KS p={s0.p:.3f}, winners changed in {trunc.estimate}/100 draws, "
                  f"origin failures {len(trunc.extra['origin_winner_failures'])}")


def test_criterion_10_law_invariance():
    rep = law_invariance_experiment(n=N, seed=110)
    record(10, rep.passed, f"KS p={rep.p:.3f}, means {rep.estimate['direct_mean']:.3f} vs "
                           f"{rep.estimate['moved_mean']:.3f} (exact {rep.estimate['exact_mean']:.3f})")


def test_criterion_11_convergence():
    rep = convergence_experiment((1e-1, 1e-2, 1e-3), r_query=1.0, n_queries=64, n=N, seed=111)
    floor = CONVERGENCE_FLOORS[(1e-3, 1.0, 64)]
    fr = ", ".join(f"{m:.6f}" for m in rep.estimate)
    record(11, rep.passed, f"agreement [{fr}], floor {floor}")


def test_criterion_12_mixing():
    rep = mixing_experiment(DEFAULT_MIXING_EVENT, lengths=(0.0, 5.0, 10.0, 20.0), n=N, seed=112)
    ok = rep.passed and abs(rep.extra["mu_B_z"]) < 3
    record(12, ok, f"cov L=0 {rep.estimate[0]:+.4f}, L=20 {rep.estimate[-1]:+.4f} +- {rep.se[-1]:.4f}, "
                   f"mu(A) z={rep.extra['mu_B_z']:+.2f}")


def test_criterion_13_unboundedness():
    rep = unboundedness_experiment(n_draws=100, r_ball=1.0, cap=50.0, seed=113)
    record(13, rep.passed, f"{rep.estimate:.0%} of draws, {len(rep.extra['exceptions'])} logged exceptions, "
                           f"max onset radius {rep.extra['max_onset']}")


CLI_RUNS = {
    "sample": ["sample", "--space", "hyperbolic", "--radius", "2", "--intensity", "3", "--seed", "7"],
    "mecke": ["mecke", "--space", "euclidean", "--box", "2x2", "--family", "isolated", "--r", "0.3",
              "--n", "300", "--seed", "7"],
    "thin apply": ["thin", "--space", "euclidean", "--box", "3x3", "--intensity", "5", "--seed", "7"],
    "thin palm": ["thin", "--space", "euclidean", "--box", "4", "--mode", "palm", "--n", "300", "--seed", "7"],
    "thin verdict": ["thin", "--space", "hyperbolic", "--radius", "2", "--rule", "mark", "--p", "0.5",
                     "--mode", "verdict", "--n", "300", "--seed", "7"],
    "voronoi": ["voronoi", "--space", "hyperbolic", "--radius", "2", "--intensity", "2", "--grid-h", "0.05",
                "--seed", "7"],
    "ipvt sample": ["ipvt", "sample", "--rvalid", "3", "--seed", "7"],
    "ipvt converge": ["ipvt", "converge", "--n", "30", "--seed", "7", "--floor", "0"],
    "ipvt mixing": ["ipvt", "mixing", "--n", "300", "--seed", "7"],
    "ipvt render": ["ipvt", "render", "--rvalid", "2", "--grid-h", "0.05", "--seed", "7"],
}


def test_criterion_14_cli_determinism(tmp_path):
    failures = []
    for name, args in CLI_RUNS.items():
        stem = tmp_path / name.replace(" ", "_")
        outs = {"--out": stem.with_suffix(".out")}
        if name == "voronoi":
            outs["--adjacency-out"] = stem.with_suffix(".adj")
            outs["--svg"] = stem.with_suffix(".svg")
        argv = args + [x for flag, path in outs.items() for x in (flag, str(path))]
        first = []
        for attempt in range(2):
            code = run(argv)
            blobs = [path.read_bytes() for path in outs.values()]
            if attempt == 0:
                first = (code, blobs)
                for path in outs.values():
                    path.unlink()
            elif (code, blobs) != first or code not in (0, 1):
                failures.append(name)
    record(14, not failures, f"{len(CLI_RUNS)} subcommand runs" + (f", differing: {failures}" if failures else ""))
