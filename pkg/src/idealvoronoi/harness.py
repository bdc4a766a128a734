"""Test reports and the small statistical toolkit shared by the harnesses."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np
from scipy import stats

from .measure import poisson_pmf

Z_THRESHOLD = 3.0
ALPHA = 0.01


@dataclass
class TestReport:
    harness: str
    params: dict[str, Any]
    estimate: Any
    se: Any
    n: int
    decision: str
    z: Any = None
    p: Any = None
    statistic: Any = None
    seed: str = ""
    notes: list[str] = field(default_factory=list)
    extra: dict[str, Any] = field(default_factory=dict)

    __test__ = False  # keep pytest from collecting this class

    @property
    def passed(self) -> bool:
        return self.decision == "pass"

    def to_json(self) -> str:
        return json.dumps(_plain(asdict(self)), sort_keys=True, allow_nan=True)

    @classmethod
    def from_json(cls, line: str) -> "TestReport":
        return cls(**json.loads(line))


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def decision(ok: bool) -> str:
    return "pass" if ok else "fail"


def write_jsonl(reports, fh) -> None:
    for r in reports:
        fh.write(r.to_json() + "\n")


def read_jsonl(text: str) -> list[TestReport]:
    return [TestReport.from_json(ln) for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]


def mean_se(values) -> tuple[float, float]:
    v = np.asarray(values, dtype=float)
    if len(v) < 2:
        return float(v.mean()) if len(v) else math.nan, math.inf
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(len(v)))


def z_score(diff: float, se: float) -> float:
    if se == 0:
        return 0.0 if diff == 0 else math.copysign(math.inf, diff)
    return diff / se


def binomial_se(p_hat: float, n: int) -> float:
    return math.sqrt(max(p_hat * (1 - p_hat), 0.0) / n)


def covariance_se(x, y) -> tuple[float, float]:
    """Sample covariance and its influence-function standard error."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    dx, dy = x - x.mean(), y - y.mean()
    prod = dx * dy
    cov = float(prod.mean())
    return cov, float(prod.std(ddof=1) / math.sqrt(len(x)))


def poisson_chisquare(counts, mean: float, min_expected: float = 5.0):
    """Chi-square goodness of fit of integer ``counts`` against ``Pois(mean)``.

    Bins with small expected counts are pooled (upper tail into one open bin,
    lower bins merged left to right).  Returns ``(statistic, p_value, dof)``.
    """
    counts = np.asarray(counts, dtype=int)
    n = len(counts)
    if mean <= 0:
        ok = bool(np.all(counts == 0))
        return 0.0, 1.0 if ok else 0.0, 0
    kmax = max(int(counts.max()), int(mean + 10 * math.sqrt(mean) + 10))
    ks = np.arange(kmax + 1)
    probs = poisson_pmf(ks, mean)
    observed = np.bincount(counts, minlength=kmax + 1)[: kmax + 1].astype(float)
    # open upper bin carries the remaining tail mass
    probs[-1] += max(0.0, 1.0 - probs.sum())
    edges = []
    acc_p = 0.0
    for k in range(kmax + 1):
        acc_p += probs[k]
        if acc_p * n >= min_expected:
            edges.append(k)
            acc_p = 0.0
    if not edges:
        return 0.0, 1.0, 0
    edges[-1] = kmax
    obs_b, exp_b, lo = [], [], 0
    for e in edges:
        obs_b.append(observed[lo : e + 1].sum())
        exp_b.append(probs[lo : e + 1].sum() * n)
        lo = e + 1
    obs_b, exp_b = np.asarray(obs_b), np.asarray(exp_b)
    exp_b *= obs_b.sum() / exp_b.sum()
    if len(obs_b) < 2:
        return 0.0, 1.0, 0
    stat, p = stats.chisquare(obs_b, exp_b)
    return float(stat), float(p), len(obs_b) - 1


def ks_against(samples, cdf):
    res = stats.kstest(np.asarray(samples, dtype=float), cdf)
    return float(res.statistic), float(res.pvalue)


def ks_two_sample(a, b):
    res = stats.ks_2samp(np.asarray(a, dtype=float), np.asarray(b, dtype=float), method="asymp")
    return float(res.statistic), float(res.pvalue)
