"""Fixed points, pseudothresholds, TRIP curves, TIFD fields and threshold
sets computed from a flow map.

The pseudothreshold of a location at level L under a setting g is the least
nonzero solution of ``iterate(f, g(gamma), L)[location] == gamma``.  Root
finding scans a log-spaced grid for the first sign change above a dead zone
(the origin is always a root) and then bisects; Newton is used only to
polish fixed points of the full map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import NoPseudothresholdError, NonConvergenceError
from .poly import FailureVector, FlowMap
from .settings import NamedSetting

#: iteration caps and tolerances for the convergence classifier
CONVERGE_EPS = 1e-12
ESCAPE_LEVEL = 0.999
DEFAULT_LEVEL_CAP = 200


@dataclass(frozen=True)
class ScanGrid:
    """Search grid for least-root scans; log-spaced by default."""

    lo: float = 1e-9
    hi: float = 0.5
    n: int = 400
    log: bool = True

    def points(self) -> np.ndarray:
        if self.log:
            if self.lo <= 0:
                raise ValueError("log grid needs lo > 0")
            return np.geomspace(self.lo, self.hi, self.n)
        return np.linspace(self.lo, self.hi, self.n)


@dataclass(frozen=True)
class PseudothresholdResult:
    location: str
    level: int
    setting: str
    value: float
    bracket: tuple[float, float]
    residual: float
    touched_scan_bound: bool = False


@dataclass(frozen=True)
class AsymptoticResult:
    location: str
    setting: str
    value: float
    level: int
    converged: bool
    history: tuple[float, ...]


@dataclass(frozen=True)
class TripCurve:
    """Samples of the level-L failure probability against the scalar rate.

    The L = 0 identity line is implicit; ``crossings`` interpolates where the
    curve meets it.
    """

    location: str
    level: int
    samples: tuple[tuple[float, float], ...]
    crossings: tuple[float, ...] = ()


@dataclass(frozen=True)
class TifdField:
    plane: tuple[str, str]
    fixed_values: dict
    points: np.ndarray      # (N, 2)
    vectors: np.ndarray     # (N, 2) raw displacement, one map application minus the point
    magnitudes: np.ndarray  # (N,)
    normalized: np.ndarray  # (N, 2) unit arrows for rendering; zero stays zero


@dataclass(frozen=True)
class SliceSpec:
    plane: tuple[str, str]
    fixed_values: Mapping[str, float] = field(default_factory=dict)
    x_range: tuple[float, float] = (0.0, 1.0)
    y_range: tuple[float, float] = (0.0, 1.0)


@dataclass(frozen=True)
class ThresholdSetReport:
    slice_spec: SliceSpec
    xs: np.ndarray
    ys: np.ndarray
    classes: np.ndarray          # (nx, ny) of {"below", "above", "undetermined"}
    boundary: tuple[tuple[float, float], ...]
    largest_cube_edge: float
    grid_step: float
    undetermined_count: int


@dataclass(frozen=True)
class AxisBoundReport:
    location: str
    value: float
    per_axis: dict


@dataclass(frozen=True)
class ConjectureFinding:
    """Largest-cube edge against the smallest axis level-1 pseudothreshold."""

    holds: bool
    cube_edge: float
    bound: float
    bound_location: str


def _as_failure_vector(f: FlowMap, x) -> FailureVector:
    if isinstance(x, FailureVector):
        return x
    return FailureVector({v: x[v] for v in f.variables})


def level_value(f: FlowMap, location: str, g: NamedSetting, gamma: float, level: int) -> float:
    """Gamma_loc after ``level`` recursive simulations of the setting point."""
    return float(f.iterate(g.apply(gamma), level)[location])


def _setting_arrays(f: FlowMap, g: NamedSetting, gammas: np.ndarray) -> dict[str, np.ndarray]:
    if hasattr(g, "multipliers"):
        return {v: float(g.multipliers.get(v, 0.0)) * gammas for v in f.variables}
    columns = {v: np.empty_like(gammas) for v in f.variables}
    for i, gamma in enumerate(gammas):
        point = g.apply(float(gamma))
        for v in f.variables:
            columns[v][i] = float(point[v])
    return columns


def level_values(f: FlowMap, location: str, g: NamedSetting, gammas: np.ndarray, level: int) -> np.ndarray:
    """Vectorized :func:`level_value` over a rate grid."""
    state = _setting_arrays(f, g, np.asarray(gammas, dtype=float))
    for _ in range(level):
        state = f.evaluate_array(state)
    return state[location]


def _bisect_root(h, lo: float, hi: float, rel_width: float = 1e-12, max_iter: int = 200):
    flo, fhi = h(lo), h(hi)
    if flo == 0.0:
        return lo, (lo, lo)
    if fhi == 0.0:
        return hi, (hi, hi)
    if flo * fhi > 0:
        raise ValueError("bisection bracket does not change sign")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = h(mid)
        if fm == 0.0:
            return mid, (mid, mid)
        if flo * fm < 0:
            hi, fhi = mid, fm
        else:
            lo, flo = mid, fm
        if hi - lo <= rel_width * hi:
            break
    return 0.5 * (lo + hi), (lo, hi)


def pseudothreshold(
    f: FlowMap,
    location: str,
    g: NamedSetting,
    level: int,
    scan: ScanGrid | None = None,
) -> PseudothresholdResult:
    """Least nonzero crossing of the level-L curve with the identity line."""
    if level < 1:
        raise ValueError("pseudothresholds are defined for level >= 1")
    scan = scan or ScanGrid()

    def h(gamma: float) -> float:
        return level_value(f, location, g, gamma, level) - gamma

    grid = scan.points()
    values = level_values(f, location, g, grid, level) - grid
    for i in range(len(grid) - 1):
        a, b = values[i], values[i + 1]
        if a == 0.0 and grid[i] > scan.lo:
            root, bracket = float(grid[i]), (float(grid[i]), float(grid[i]))
            break
        if a * b < 0:
            root, bracket = _bisect_root(h, float(grid[i]), float(grid[i + 1]))
            break
    else:
        if values[-1] == 0.0:
            root, bracket = float(grid[-1]), (float(grid[-1]), float(grid[-1]))
        else:
            raise NoPseudothresholdError(
                f"no identity crossing for {location!r} (level {level}, setting {g.name}) "
                f"in ({scan.lo:g}, {scan.hi:g}]",
                scan.lo,
                scan.hi,
            )
    return PseudothresholdResult(
        location=location,
        level=level,
        setting=g.name,
        value=root,
        bracket=bracket,
        residual=abs(h(root)),
        touched_scan_bound=bracket[1] >= scan.hi * (1 - 1e-12),
    )


def asymptotic_location_threshold(
    f: FlowMap,
    location: str,
    g: NamedSetting,
    rel_tol: float = 1e-6,
    max_level: int = 40,
    scan: ScanGrid | None = None,
) -> AsymptoticResult:
    """Follow the pseudothreshold sequence until successive levels agree."""
    scan = scan or ScanGrid()
    history: list[float] = []
    prev = None
    for level in range(1, max_level + 1):
        if prev is None:
            level_scan = scan
        else:
            # the next root sits near the previous one; rescan a window first
            level_scan = ScanGrid(max(scan.lo, 0.5 * prev), min(scan.hi, 2.2 * prev), 80, True)
        try:
            result = pseudothreshold(f, location, g, level, level_scan)
        except NoPseudothresholdError:
            if prev is None:
                raise
            result = pseudothreshold(f, location, g, level, scan)
        history.append(result.value)
        if prev is not None and abs(result.value - prev) <= rel_tol * result.value:
            return AsymptoticResult(location, g.name, result.value, level, True, tuple(history))
        prev = result.value
    return AsymptoticResult(location, g.name, history[-1], max_level, False, tuple(history))


def trip_curves(
    f: FlowMap,
    location: str,
    g: NamedSetting,
    levels: Sequence[int],
    grid: ScanGrid | np.ndarray,
) -> list[TripCurve]:
    """Evaluate the level-L curves over a rate grid and mark identity crossings."""
    gammas = grid.points() if isinstance(grid, ScanGrid) else np.asarray(grid, dtype=float)
    curves = []
    for level in levels:
        curve_values = level_values(f, location, g, gammas, level)
        samples = [(float(x), float(y)) for x, y in zip(gammas, curve_values)]
        crossings = []
        for (x0, y0), (x1, y1) in zip(samples, samples[1:]):
            h0, h1 = y0 - x0, y1 - x1
            if h0 == 0.0 and x0 > 0:
                crossings.append(x0)
            elif h0 * h1 < 0:
                crossings.append(x0 + (x1 - x0) * h0 / (h0 - h1))
        curves.append(TripCurve(location, level, tuple(samples), tuple(crossings)))
    return curves


def tifd_field(
    f: FlowMap,
    plane: tuple[str, str],
    fixed_values: Mapping[str, float],
    grid: tuple[np.ndarray, np.ndarray],
) -> TifdField:
    """Displacement field of one map application, projected onto a plane."""
    xvar, yvar = plane
    xs, ys = (np.asarray(g, dtype=float) for g in grid)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    state = {v: np.full(X.shape, float(fixed_values.get(v, 0.0))) for v in f.variables}
    state[xvar] = X
    state[yvar] = Y
    image = f.evaluate_array(state)
    dx = image[xvar] - X
    dy = image[yvar] - Y
    points = np.column_stack([X.ravel(), Y.ravel()])
    vectors = np.column_stack([dx.ravel(), dy.ravel()])
    magnitudes = np.hypot(vectors[:, 0], vectors[:, 1])
    safe = np.where(magnitudes > 0, magnitudes, 1.0)
    normalized = vectors / safe[:, None]
    return TifdField(
        plane=(xvar, yvar),
        fixed_values=dict(fixed_values),
        points=points,
        vectors=vectors,
        magnitudes=magnitudes,
        normalized=normalized,
    )


def trajectory(f: FlowMap, start: FailureVector, max_level: int) -> list[FailureVector]:
    """Orbit of a point, stopping once it has clearly converged or escaped."""
    orbit = [_as_failure_vector(f, start)]
    for _ in range(max_level):
        x = orbit[-1]
        if x.max_entry() < CONVERGE_EPS or x.max_entry() > 1 - CONVERGE_EPS:
            break
        orbit.append(f.evaluate(x))
    return orbit


def fixed_points(
    f: FlowMap,
    region: Mapping[str, tuple[float, float]] | None = None,
    seeds_per_axis: int = 12,
    seeds: Iterable[FailureVector] | None = None,
    dedup_tol: float = 1e-8,
    residual_tol: float = 1e-10,
) -> list[FailureVector]:
    """Newton solutions of ``map(x) == x`` from a seed grid, deduplicated.

    Seeds with a singular Jacobian step are skipped; every returned point has
    sup-norm residual below ``residual_tol`` and lies in the region box.
    """
    names = f.variables
    n = len(names)
    box = {v: (0.0, 1.0) for v in names}
    if region:
        box.update({v: (float(lo), float(hi)) for v, (lo, hi) in region.items()})

    if seeds is None:
        axes = [np.linspace(box[v][0], box[v][1], seeds_per_axis) for v in names]
        mesh = np.meshgrid(*axes, indexing="ij")
        seed_array = np.column_stack([m.ravel() for m in mesh])
    else:
        seed_array = np.array([[float(s[v]) for v in names] for s in seeds])

    found: list[np.ndarray] = []
    eye = np.eye(n)
    for seed in seed_array:
        x = seed.astype(float)
        ok = False
        for _ in range(60):
            try:
                fv = FailureVector({v: min(max(x[i], 0.0), 1.0) for i, v in enumerate(names)})
            except Exception:
                break
            gx = np.array([float(f.components[v].evaluate(fv)) for v in names])
            residual = gx - np.array([fv[v] for v in names])
            if np.max(np.abs(residual)) < residual_tol:
                ok = True
                x = np.array([fv[v] for v in names], dtype=float)
                break
            jac = f.jacobian(fv) - eye
            try:
                step = np.linalg.solve(jac, -residual)
            except np.linalg.LinAlgError:
                break
            x = np.array([fv[v] for v in names]) + step
            if not np.all(np.isfinite(x)) or np.max(np.abs(x)) > 10:
                break
        if not ok:
            continue
        if any(not (box[v][0] - 1e-9 <= x[i] <= box[v][1] + 1e-9) for i, v in enumerate(names)):
            continue
        if any(np.max(np.abs(x - prev)) < dedup_tol for prev in found):
            continue
        found.append(x)
    found.sort(key=lambda p: tuple(p))
    return [FailureVector({v: float(min(max(p[i], 0.0), 1.0)) for i, v in enumerate(names)}) for p in found]


def classify_point(
    f: FlowMap,
    x: FailureVector,
    eps: float = CONVERGE_EPS,
    max_level: int = DEFAULT_LEVEL_CAP,
) -> str:
    """'below' when the orbit reaches all-entries < eps, 'above' when any
    entry escapes toward one, otherwise 'undetermined'."""
    point = _as_failure_vector(f, x)
    for _ in range(max_level + 1):
        if point.max_entry() < eps:
            return "below"
        if point.max_entry() > ESCAPE_LEVEL:
            return "above"
        point = f.evaluate(point)
    return "undetermined"


def below_threshold(
    f: FlowMap,
    x: FailureVector,
    eps: float = CONVERGE_EPS,
    max_level: int = DEFAULT_LEVEL_CAP,
) -> bool:
    return classify_point(f, x, eps, max_level) == "below"


def _classify_grid(
    f: FlowMap,
    state: dict[str, np.ndarray],
    eps: float,
    max_level: int,
) -> np.ndarray:
    """Vectorized orbit classification; 1 below, 2 above, 0 undetermined."""
    shape = next(iter(state.values())).shape
    classes = np.zeros(shape, dtype=np.uint8)
    active = np.ones(shape, dtype=bool)
    current = {v: a.astype(float).copy() for v, a in state.items()}
    for _ in range(max_level + 1):
        stacked = np.stack([current[v] for v in f.variables])
        top = stacked.max(axis=0)
        below = active & (top < eps)
        above = active & (top > ESCAPE_LEVEL)
        classes[below] = 1
        classes[above] = 2
        active &= ~(below | above)
        if not active.any():
            break
        sub = {v: current[v][active] for v in f.variables}
        image = f.evaluate_array(sub)
        for v in f.variables:
            current[v][active] = image[v]
    return classes


def threshold_set(
    f: FlowMap,
    slice_spec: SliceSpec,
    resolution: int = 200,
    eps: float = CONVERGE_EPS,
    max_level: int = DEFAULT_LEVEL_CAP,
) -> ThresholdSetReport:
    """Classify a 2-D slice, trace the below-region boundary, and measure the
    largest axis-aligned cube at the origin (one conservative grid cell)."""
    xvar, yvar = slice_spec.plane
    xs = np.linspace(slice_spec.x_range[0], slice_spec.x_range[1], resolution)
    ys = np.linspace(slice_spec.y_range[0], slice_spec.y_range[1], resolution)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    state = {v: np.full(X.shape, float(slice_spec.fixed_values.get(v, 0.0))) for v in f.variables}
    state[xvar] = X
    state[yvar] = Y
    codes = _classify_grid(f, state, eps, max_level)
    names = np.array(["undetermined", "below", "above"])
    classes = names[codes]

    below = codes == 1
    # boundary: per x-column, first y sample that is not below
    boundary = []
    for i, x in enumerate(xs):
        column = below[i]
        if column.all():
            boundary.append((float(x), float(ys[-1])))
        else:
            j = int(np.argmin(column))
            boundary.append((float(x), float(ys[j])))

    # largest fully-below square block anchored at the origin
    edge = 0.0
    if below[0, 0]:
        k = 0
        while k + 1 < resolution and below[: k + 2, : k + 2].all():
            k += 1
        edge = float(min(xs[k], ys[k]))
    step = float(max(xs[1] - xs[0], ys[1] - ys[0]))
    return ThresholdSetReport(
        slice_spec=slice_spec,
        xs=xs,
        ys=ys,
        classes=classes,
        boundary=tuple(boundary),
        largest_cube_edge=edge,
        grid_step=step,
        undetermined_count=int((codes == 0).sum()),
    )


def axis_upper_bound(f: FlowMap, scan: ScanGrid | None = None) -> AxisBoundReport:
    """Minimum over locations of the level-1 pseudothreshold under that
    location's axis setting; the conjectured threshold upper bound."""
    from .settings import axis as axis_setting

    per_axis: dict[str, object] = {}
    best: tuple[str, float] | None = None
    for name in f.variables:
        g = axis_setting(f.variables, name)
        try:
            result = pseudothreshold(f, name, g, 1, scan)
        except NoPseudothresholdError as exc:
            per_axis[name] = exc
            continue
        per_axis[name] = result
        if best is None or result.value < best[1]:
            best = (name, result.value)
    if best is None:
        raise NoPseudothresholdError("no axis has a nonzero level-1 crossing in range")
    return AxisBoundReport(location=best[0], value=best[1], per_axis=per_axis)


def _least_power_fixed_point(c, degree: int):
    """Least positive solution of c * g^degree = g, exact when rational."""
    if c <= 0 or degree < 2:
        raise ValueError("need a positive coefficient and degree >= 2")
    if degree == 2:
        return Fraction(1, 1) / c if isinstance(c, Fraction) else 1.0 / c
    root = (1.0 / float(c)) ** (1.0 / (degree - 1))
    if isinstance(c, Fraction):
        # keep exactness when 1/c is a perfect (degree-1)-th power
        num, den = c.denominator, c.numerator
        r_num = round(num ** (1.0 / (degree - 1)))
        r_den = round(den ** (1.0 / (degree - 1)))
        if r_num ** (degree - 1) == num and r_den ** (degree - 1) == den:
            return Fraction(r_num, r_den)
    return root


def conservative_bound(f: FlowMap):
    """Lowest-order bound on the threshold: truncate each component to its
    leading terms, restrict to the diagonal, and take the least fixed point."""
    best = None
    for name in f.variables:
        poly = f.components[name]
        if poly.is_zero():
            continue
        degree = poly.min_total_degree()
        leading = poly.truncate(degree, mode="drop")
        coeff = sum(leading.terms.values())
        if coeff <= 0 or degree < 2:
            continue
        value = _least_power_fixed_point(coeff, degree)
        if best is None or value < best:
            best = value
    if best is None:
        raise NonConvergenceError("no component has a positive leading term of degree >= 2")
    return best


def check_axis_conjecture(
    f: FlowMap,
    slice_spec: SliceSpec | None = None,
    resolution: int = 200,
    scan: ScanGrid | None = None,
) -> ConjectureFinding:
    """Compare the measured largest-cube edge with the axis upper bound.

    A violation is reported in the finding, never raised.
    """
    if slice_spec is None:
        if len(f.variables) != 2:
            raise ValueError("a slice_spec is required for maps with more than two variables")
        slice_spec = SliceSpec(plane=(f.variables[0], f.variables[1]))
    report = threshold_set(f, slice_spec, resolution)
    bound = axis_upper_bound(f, scan)
    return ConjectureFinding(
        holds=report.largest_cube_edge <= bound.value + report.grid_step,
        cube_edge=report.largest_cube_edge,
        bound=bound.value,
        bound_location=bound.location,
    )
