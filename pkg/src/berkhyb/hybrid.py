"""Hybrid circle evaluation: rescaled semi-norms, path limits to
non-archimedean points, Lelong-number estimation, the rho_r rescaling and
the convexity check on the hybrid field spectrum.

The hybrid circle of radius r is the closed disk |t| <= r; the fiber
semi-norm at t != 0 is |f|_t = r^{log|f(t)|/log|t|}, and at the origin
the t-adic r^{ord_0(f)}.  Path limits log|f(z(t),t)|/log|t| along
monomial arcs z = c t^w converge to the monomial valuation with
v(z) = w, v(t) = 1.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import mpmath
import numpy as np

from .exactnum import as_fraction
from .valuation import INF, LaurentSeriesData, weighted_min_of_terms


@dataclass(frozen=True)
class HybridConfig:
    r: Fraction = Fraction(1, 2)
    n_angles: int = 1024          # circle-sup resolution
    schedule_k_max: int = 8       # t_k = r * 10^{-k}, k = 0..k_max
    richardson_points: int = 3
    degenerate_tol: float = 1e-2

    def __post_init__(self):
        if not (0 < self.r < 1):
            raise ValueError("base radius must lie in (0,1)")

    def t_schedule(self) -> list[float]:
        return [float(self.r) * 10.0 ** (-k) for k in range(self.schedule_k_max + 1)]


@dataclass(frozen=True)
class HybridCirclePoint:
    """A point of the hybrid circle: complex t with 0 < |t| <= r, or the origin."""

    t: complex | None  # None marks the non-archimedean origin

    @classmethod
    def origin(cls) -> "HybridCirclePoint":
        return cls(None)

    def is_origin(self) -> bool:
        return self.t is None


@dataclass
class SeminormValue:
    value: float
    exact_exponent: Fraction | None = None  # set at the origin: value = r^exp
    zero_flagged: bool = False


def _eval_series_at(f: LaurentSeriesData, t: complex) -> complex:
    if "t" not in f.variables:
        raise ValueError("series must involve the variable t")
    pos = f.variables.index("t")
    if len(f.variables) != 1:
        raise ValueError("hybrid semi-norm expects a one-variable series in t")
    acc = 0j
    for exp, coef in f.terms:
        acc += coef.complex_value() * t ** exp[pos]
    return acc


def t_order(f: LaurentSeriesData) -> Fraction:
    """ord_0(f): smallest t-exponent carrying a nonzero coefficient."""
    pos = f.variables.index("t")
    return Fraction(min(exp[pos] for exp in (e for e, _ in f.terms)))


def hybrid_seminorm(f: LaurentSeriesData, p: HybridCirclePoint,
                    cfg: HybridConfig) -> SeminormValue:
    """|f|_t on the hybrid circle; exact exponent at the origin."""
    r = cfg.r
    if f.is_zero():
        return SeminormValue(0.0, zero_flagged=True)
    if p.is_origin():
        k = t_order(f)
        val = float(mpmath.power(mpmath.mpf(r.numerator) / r.denominator, k))
        return SeminormValue(val, exact_exponent=k)
    t = p.t
    if not (0 < abs(t) <= float(r)):
        raise ValueError("point must satisfy 0 < |t| <= r")
    ft = _eval_series_at(f, t)
    if ft == 0:
        return SeminormValue(0.0)
    expo = math.log(abs(ft)) / math.log(abs(t))
    return SeminormValue(float(r) ** expo)


@dataclass
class PathLimitResult:
    samples: list[tuple[float, float]] = field(default_factory=list)  # (|t|, ratio)
    limit: float = math.nan
    prediction: Fraction | None = None
    degenerate: bool = False
    note: str = ""


def _path_prediction(f: LaurentSeriesData, w: Fraction):
    weights = []
    for label in f.variables:
        if label == "t":
            weights.append(Fraction(1))
        elif label == "z":
            weights.append(as_fraction(w))
        else:
            weights.append(Fraction(0))
    return weighted_min_of_terms(f, weights)


def hybrid_path_limit(
    f: LaurentSeriesData,
    c: complex,
    w: Fraction,
    cfg: HybridConfig,
    t_schedule: Sequence[float] | None = None,
) -> PathLimitResult:
    """Sample log|f(z(t),t)| / log|t| along z(t) = c t^w and extrapolate.

    The limit is extrapolated by a linear fit in 1/log|t| on the last
    richardson_points samples (the log-linear error model).  Exact zeros
    of f on the path are re-sampled on a rotated t; persistent
    cancellation or a limit far from the monomial prediction is reported
    as a degenerate-path diagnostic, not an error.
    """
    if c == 0:
        raise ValueError("path coefficient c must be nonzero")
    sched = list(t_schedule if t_schedule is not None else cfg.t_schedule())
    pos_z = f.variables.index("z")
    pos_t = f.variables.index("t")
    w_f = as_fraction(w)
    result = PathLimitResult(prediction=_path_prediction(f, w_f))

    def composite(t: complex) -> tuple[complex, float]:
        z = c * cmath.exp(w_f * cmath.log(t))
        acc = 0j
        scale = 0.0
        for exp, coef in f.terms:
            term = coef.complex_value() * z ** exp[pos_z] * t ** exp[pos_t]
            acc += term
            scale += abs(term)
        return acc, scale

    zero_hits = 0
    for tk in sched:
        t = complex(tk)
        val, scale = composite(t)
        rotations = 0
        # exact zeros and full cancellations down to rounding both count
        while abs(val) <= 1e-12 * scale and rotations < 5:
            t *= cmath.exp(1j * math.pi / 7)
            val, scale = composite(t)
            rotations += 1
        if abs(val) <= 1e-12 * scale:
            zero_hits += 1
            continue
        result.samples.append((abs(t), math.log(abs(val)) / math.log(abs(t))))
    if zero_hits == len(sched) or not result.samples:
        result.degenerate = True
        result.note = "identically zero along the path"
        return result
    pts = result.samples[-cfg.richardson_points:]
    if len(pts) >= 2:
        xs = np.array([1.0 / math.log(a) for a, _ in pts])
        ys = np.array([v for _, v in pts])
        slope, intercept = np.polyfit(xs, ys, 1)
        result.limit = float(intercept)
    else:
        result.limit = result.samples[-1][1]
    if result.prediction == INF:
        result.degenerate = True
        result.note = "monomial support empty on the path"
    elif abs(result.limit - float(result.prediction)) > cfg.degenerate_tol:
        result.degenerate = True
        result.note = (
            f"limit {result.limit:.6f} deviates from monomial prediction "
            f"{float(result.prediction):.6f}; cancellation along the path"
        )
    return result


@dataclass(frozen=True)
class RadialSampling:
    """Circle sup-values over decreasing radii: pairs (rho, sup value)."""

    points: tuple[tuple[float, float], ...]

    def __post_init__(self):
        radii = [p[0] for p in self.points]
        if any(r2 >= r1 for r1, r2 in zip(radii, radii[1:])):
            raise ValueError("radii must be strictly decreasing")
        if any(not math.isfinite(v) or r <= 0 for r, v in self.points):
            raise ValueError("radii positive and values finite required")


def sample_circle_sups(func: Callable[[complex], float], radii: Sequence[float],
                       cfg: HybridConfig) -> RadialSampling:
    """sup over cfg.n_angles equally spaced angles of func on each circle."""
    angles = np.linspace(0.0, 2.0 * math.pi, cfg.n_angles, endpoint=False)
    pts = []
    for rho in radii:
        zs = rho * np.exp(1j * angles)
        sup = max(func(complex(z)) for z in zs)
        pts.append((float(rho), float(sup)))
    return RadialSampling(tuple(pts))


@dataclass
class LelongEstimate:
    estimate: float
    band: tuple[float, float]
    decade_slopes: list[float]
    warnings: list[str] = field(default_factory=list)


def lelong_estimate(sampling: RadialSampling,
                    monotone_tol: float = 1e-9) -> LelongEstimate:
    """Slope of circle sups against log rho, measured at the smallest decade.

    Requires at least 4 radii spanning at least 3 decades.  The estimate
    is the least-squares slope over radii within one decade of the
    smallest; per-decade slopes act as a drift diagnostic, and
    non-monotone sup values beyond tolerance produce a warning.
    """
    pts = list(sampling.points)
    if len(pts) < 4:
        raise ValueError("need at least 4 radii")
    rho_max, rho_min = pts[0][0], pts[-1][0]
    if math.log10(rho_max / rho_min) < 3 - 1e-12:
        raise ValueError("radii must span at least 3 decades")
    warnings = []
    vals = [v for _, v in pts]
    if any(v2 > v1 + monotone_tol for v1, v2 in zip(vals, vals[1:])):
        warnings.append("sup values not monotone along decreasing radii")

    def ls_slope(sub):
        xs = np.array([math.log(r) for r, _ in sub])
        ys = np.array([v for _, v in sub])
        if len(sub) == 1:
            return math.nan
        return float(np.polyfit(xs, ys, 1)[0])

    smallest = [(r, v) for r, v in pts if r <= rho_min * 10.0 * (1 + 1e-12)]
    if len(smallest) < 2:
        smallest = pts[-2:]
    estimate = ls_slope(smallest)
    decade_slopes = []
    k = 0
    while True:
        lo, hi = rho_min * 10.0 ** k, rho_min * 10.0 ** (k + 1)
        sub = [(r, v) for r, v in pts if lo * (1 - 1e-12) <= r <= hi * (1 + 1e-12)]
        if len(sub) >= 2:
            decade_slopes.append(ls_slope(sub))
        if hi >= rho_max:
            break
        k += 1
    drift = 0.0
    if len(decade_slopes) >= 2:
        drift = abs(decade_slopes[0] - decade_slopes[1])
    xs = np.array([math.log(r) for r, _ in smallest])
    ys = np.array([v for _, v in smallest])
    fit = np.polyfit(xs, ys, 1)
    resid = float(np.max(np.abs(np.polyval(fit, xs) - ys))) if len(xs) > 1 else 0.0
    half = max(drift, resid)
    return LelongEstimate(estimate, (estimate - half, estimate + half),
                          decade_slopes, warnings)


@dataclass(frozen=True)
class RhoSample:
    """One sample for the rho_r rescaling; exact radius exponent optional.

    If k is given, |t| = r^k exactly and the rescaling factor
    log_r|t| = k stays rational, so round trips are exact on Fraction
    values.
    """

    t: complex
    value: object  # float or Fraction
    k: Fraction | None = None


def _logr_abs(t: complex, r: Fraction) -> float:
    return math.log(abs(t)) / math.log(float(r))


def rho_r_forward(samples: Sequence[RhoSample], cfg: HybridConfig) -> list[RhoSample]:
    """phi on C^hyb(r) minus origin -> log_r|t| * phi(tau(t)) on the disk."""
    out = []
    for s in samples:
        if s.t == 0:
            raise ValueError("rho_r is defined away from the origin")
        if s.k is not None:
            out.append(RhoSample(s.t, as_fraction(s.value) * s.k, s.k))
        else:
            out.append(RhoSample(s.t, float(s.value) * _logr_abs(s.t, cfg.r), None))
    return out


def rho_r_inverse(samples: Sequence[RhoSample], cfg: HybridConfig,
                  r_prime: Fraction | None = None) -> list[RhoSample]:
    """phi in SH(D_{r'}) + R log|t| -> phi(tau^{-1}(t)) / log_r|t|, r' > r."""
    if r_prime is not None and not (as_fraction(r_prime) > cfg.r):
        raise ValueError("inverse transform needs r' > r")
    out = []
    for s in samples:
        if s.t == 0:
            raise ValueError("rho_r is defined away from the origin")
        if abs(s.t) > float(cfg.r) * (1 + 1e-12):
            raise ValueError("sample outside the closed disk of radius r")
        if s.k is not None:
            out.append(RhoSample(s.t, as_fraction(s.value) / s.k, s.k))
        else:
            out.append(RhoSample(s.t, float(s.value) / _logr_abs(s.t, cfg.r), None))
    return out


@dataclass
class ConvexityVerdict:
    convex: bool
    worst_violation: object  # Fraction or float; positive means violation


def khyb_convexity_check(samples: Sequence[tuple]) -> ConvexityVerdict:
    """Discrete midpoint convexity on consecutive triples of (lambda, value).

    Exact when the samples are rational; the worst violation is
    max over triples of v_mid - chord, positive iff convexity fails.
    """
    if len(samples) < 3:
        raise ValueError("need at least 3 samples")
    pts = sorted(samples, key=lambda p: p[0])
    exact = all(
        isinstance(l, (int, Fraction)) and isinstance(v, (int, Fraction))
        for l, v in pts
    )
    worst = Fraction(0) if exact else 0.0
    for (l1, v1), (l2, v2), (l3, v3) in zip(pts, pts[1:], pts[2:]):
        if exact:
            l1, v1, l2, v2, l3, v3 = map(as_fraction, (l1, v1, l2, v2, l3, v3))
        chord = v1 + (v3 - v1) * (l2 - l1) / (l3 - l1)
        gap = v2 - chord
        if gap > worst:
            worst = gap
    tol = 0 if exact else 1e-12
    return ConvexityVerdict(convex=worst <= tol, worst_violation=worst)
