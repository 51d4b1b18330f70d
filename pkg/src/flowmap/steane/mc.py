"""Monte-Carlo failure estimation for exrecs.

Trials run in fixed-size chunks, each with its own counter-based Philox
stream keyed by (seed, chunk index), so a result depends only on the seed,
the trial count and the point, never on the worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ..errors import NoPseudothresholdError
from ..poly import FailureVector
from ..settings import NamedSetting
from .circuits import ExRec, KINDS, build_exrec
from .frame import run_trials

#: fixed chunk size; part of the reproducibility contract
CHUNK_TRIALS = 8192


@dataclass(frozen=True)
class McEstimate:
    point: FailureVector
    trials: int
    failures: int
    retry_rounds: int = 0

    @property
    def p_hat(self) -> float:
        return self.failures / self.trials

    @property
    def stderr(self) -> float:
        p = self.p_hat
        return math.sqrt(p * (1.0 - p) / self.trials)


@dataclass(frozen=True)
class McTripPoint:
    gamma: float      # scalar setting rate
    gamma_loc: float  # the location's own rate (multiplier times gamma)
    trials: int
    failures: int
    p_hat: float
    stderr: float


@dataclass(frozen=True)
class McTripCurve:
    """Level-1 TRIP samples.

    Crossings and fits compare the estimate against the location's own rate
    (the convention of the wait TRIPs, where the plotted axis is gamma/10);
    for unit multipliers that is the plain scalar rate.
    """

    kind: str
    setting: str
    seed: int
    points: tuple[McTripPoint, ...]

    def crossings(self) -> list[float]:
        """Interpolated crossings of the estimate with the identity line."""
        out = []
        pts = self.points
        for a, b in zip(pts, pts[1:]):
            ha, hb = a.p_hat - a.gamma_loc, b.p_hat - b.gamma_loc
            if ha == 0.0 and a.gamma_loc > 0:
                out.append(a.gamma_loc)
            elif ha * hb < 0:
                out.append(a.gamma_loc + (b.gamma_loc - a.gamma_loc) * ha / (ha - hb))
        return out


@dataclass(frozen=True)
class PseudothresholdFit:
    value: float
    ci_low: float
    ci_high: float
    coefficients: tuple[float, ...]
    cubic: bool


def _chunk_rng(seed: int, chunk_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=np.array([seed, chunk_index], dtype=np.uint64)))


def _rates(exrec_vars: Sequence[str], point: Mapping[str, float] | FailureVector) -> dict[str, float]:
    get = point.values.get if isinstance(point, FailureVector) else point.get  # type: ignore[union-attr]
    rates = {}
    for kind in exrec_vars:
        value = get(kind, None)
        if value is None:
            raise KeyError(f"missing failure rate for location kind {kind!r}")
        rates[kind] = float(value)
    return rates


def mc_failure(
    exrec: ExRec,
    point: Mapping[str, float] | FailureVector,
    trials: int,
    seed: int,
    threads: int = 1,
    retry_policy: str = "resample",
) -> McEstimate:
    """Estimate the exrec failure probability at one rate point."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rates = _rates(KINDS, point)
    chunks = []
    start = 0
    index = 0
    while start < trials:
        n = min(CHUNK_TRIALS, trials - start)
        chunks.append((index, n))
        start += n
        index += 1

    def run_chunk(args):
        ci, n = args
        failures, stats = run_trials(exrec, rates, n, _chunk_rng(seed, ci), retry_policy)
        return int(failures.sum()), stats.retry_rounds

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run_chunk, chunks))
    else:
        results = [run_chunk(c) for c in chunks]
    failures = sum(r[0] for r in results)
    retries = sum(r[1] for r in results)
    fv = FailureVector({k: float(rates[k]) for k in KINDS})
    return McEstimate(point=fv, trials=trials, failures=failures, retry_rounds=retries)


def mc_trip(
    kind: str,
    setting: NamedSetting,
    gammas: Sequence[float],
    trials: int,
    seed: int,
    threads: int = 1,
    retry_policy: str = "resample",
    exrec: ExRec | None = None,
) -> McTripCurve:
    """Level-1 TRIP estimated by fault injection over a rate grid."""
    exrec = exrec or build_exrec(kind)
    multiplier = float(getattr(setting, "multipliers", {}).get(kind, 1.0))
    points = []
    for i, gamma in enumerate(gammas):
        est = mc_failure(exrec, setting.apply(float(gamma)), trials, seed + i, threads, retry_policy)
        points.append(
            McTripPoint(float(gamma), multiplier * float(gamma), est.trials, est.failures, est.p_hat, est.stderr)
        )
    return McTripCurve(kind=kind, setting=setting.name, seed=seed, points=tuple(points))


def fit_pseudothreshold(curve: McTripCurve, cubic: bool = False) -> PseudothresholdFit:
    """Least-squares fit of c2*g^2 (+ c3*g^3) through the origin, solved
    against the identity line for the least positive crossing.

    The confidence interval propagates the coefficient covariance of the
    weighted fit (one sigma).
    """
    pts = [p for p in curve.points if p.trials > 0]
    if len(pts) < 5:
        raise ValueError("need at least 5 grid points to fit")
    g = np.array([p.gamma_loc for p in pts])
    y = np.array([p.p_hat for p in pts])
    n = np.array([p.trials for p in pts])
    # variance floor keeps zero-failure points from getting infinite weight
    var = np.maximum(y * (1 - y), 1.0) / n
    columns = [g**2, g**3] if cubic else [g**2]
    X = np.column_stack(columns)
    W = 1.0 / var
    xtw = X.T * W
    cov = np.linalg.inv(xtw @ X)
    coef = cov @ (xtw @ y)

    def crossing(c) -> float:
        if cubic and abs(c[1]) > 1e-12:
            # c2 g + c3 g^2 = 1
            disc = c[0] ** 2 + 4 * c[1]
            if disc < 0:
                raise NoPseudothresholdError("fitted curve never meets the identity line")
            roots = [(-c[0] + math.sqrt(disc)) / (2 * c[1]), (-c[0] - math.sqrt(disc)) / (2 * c[1])]
            roots = [float(r) for r in roots if r > 0]
            if not roots:
                raise NoPseudothresholdError("fitted curve has no positive crossing")
            return min(roots)
        if c[0] <= 0:
            raise NoPseudothresholdError("fitted quadratic coefficient is not positive")
        return float(1.0 / c[0])

    value = crossing(coef)
    # delta method on the coefficients
    h = 1e-6
    grad = np.zeros(len(coef))
    for i in range(len(coef)):
        bumped = coef.copy()
        bumped[i] *= 1 + h
        try:
            grad[i] = (crossing(bumped) - value) / (coef[i] * h)
        except NoPseudothresholdError:
            grad[i] = 0.0
    sigma = math.sqrt(max(float(grad @ cov @ grad), 0.0))
    return PseudothresholdFit(
        value=float(value),
        ci_low=float(value - sigma),
        ci_high=float(value + sigma),
        coefficients=tuple(float(c) for c in coef),
        cubic=cubic,
    )


def fit_from_rows(rows: Sequence[tuple[float, int, int]], kind: str = "?", setting: str = "?", cubic: bool = False) -> PseudothresholdFit:
    """Fit a pseudothreshold from raw (gamma, trials, failures) rows."""
    points = tuple(
        McTripPoint(g, g, t, f, f / t if t else 0.0, math.sqrt(max(f / t * (1 - f / t), 0.0) / t) if t else 0.0)
        for g, t, f in rows
    )
    return fit_pseudothreshold(McTripCurve(kind, setting, 0, points), cubic=cubic)
