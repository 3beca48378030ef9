"""Monge-Ampere measures: the atomic model-metric formula, the exact
piecewise-affine route on one-dimensional skeleta, the discrete Laplacian
on degenerating curve families, pushforward to the valuation coordinate,
and the weak-convergence and stability experiments.

Conventions for curve families on P^1: a family entry is a section
t^q * s(z) (s a polynomial of degree <= d) with a rational hybrid
constant c, giving the fiber potential

    phi_t = m^{-1} max_a ( log|s_a(z)| + (q_a + c_a/log r) log|t| ).

Its tropical profile in the valuation coordinate u = log|z|/log|t| is the
convex function H(u) = m^{-1} max_a max_{k in supp s_a} (-k u - q_a - c_a/log r),
whose slope jumps are the limit measure atoms.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .exactnum import LogRVal, as_fraction, rat_from_str, rat_to_str
from .models import SncModelCombinatorics
from .pafunc import AffineLine, PAFunction1D, upper_envelope


class ResolutionError(ValueError):
    def __init__(self, message, suggested_n=None):
        super().__init__(message)
        self.suggested_n = suggested_n


# ---------------------------------------------------------------------------
# atomic measures
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Atom:
    mass: Fraction
    u: LogRVal | None = None     # position in the valuation coordinate
    label: str | None = None     # component label for table-indexed atoms


@dataclass
class AtomicMeasure:
    atoms: list[Atom]
    flags: list[str] = field(default_factory=list)

    def total_mass(self) -> Fraction:
        return sum((a.mass for a in self.atoms), Fraction(0))

    def nonzero(self) -> "AtomicMeasure":
        return AtomicMeasure([a for a in self.atoms if a.mass != 0], list(self.flags))

    def positions_and_masses(self):
        return [(a.u, a.mass) for a in self.atoms]

    def same_atoms(self, other: "AtomicMeasure") -> bool:
        """Exact equality as measures on the u-line (zero masses dropped)."""
        a = sorted(
            ((atom.u, atom.mass) for atom in self.nonzero().atoms),
            key=lambda p: (p[0].a, p[0].b, p[0].c),
        )
        b = sorted(
            ((atom.u, atom.mass) for atom in other.nonzero().atoms),
            key=lambda p: (p[0].a, p[0].b, p[0].c),
        )
        return a == b

    def pair_with(self, f: PAFunction1D) -> LogRVal:
        """Exact pairing integral of a PA function against the atoms."""
        acc = LogRVal.of(0)
        for atom in self.atoms:
            if atom.u is None:
                raise ValueError("atom without a line position")
            acc = acc + atom.mass * f.eval(atom.u)
        return acc


@dataclass(frozen=True)
class IntersectionTable:
    """Per-component multiplicity b_E and intersection number (L_1...L_n . E)."""

    model: SncModelCombinatorics
    entries: tuple[tuple[int, int, Fraction], ...]  # (component idx, b_E, number)

    @classmethod
    def build(cls, model, rows):
        entries = []
        for idx, b, num in rows:
            if not model.has_component(idx):
                raise ValueError(f"component {idx} not in model")
            if int(b) <= 0:
                raise ValueError("b_E must be strictly positive")
            if int(b) != model.multiplicity(idx):
                raise ValueError(
                    f"b_E = {b} disagrees with model multiplicity "
                    f"{model.multiplicity(idx)} at component {idx}"
                )
            entries.append((int(idx), int(b), as_fraction(num)))
        return cls(model, tuple(entries))

    def to_json(self):
        return {
            "model": self.model.to_json(),
            "rows": [[i, b, rat_to_str(n)] for i, b, n in self.entries],
        }

    @classmethod
    def from_json(cls, data):
        model = SncModelCombinatorics.from_json(data["model"])
        rows = [(r[0], r[1], rat_from_str(r[2])) for r in data["rows"]]
        return cls.build(model, rows)


def ma_model_metric(table: IntersectionTable,
                    semipositive: bool = True) -> AtomicMeasure:
    """Atomic measure sum_E b_E (L_1 ... L_n . E) delta_{v_E}.

    Atom positions on the u-line come from the model's per-component
    z-valuations when present; total mass is the sum of table entries.
    """
    atoms = []
    flags = []
    for idx, b, num in table.entries:
        mass = b * num
        comp = table.model.components[idx]
        if mass < 0 and semipositive:
            flags.append(f"negative mass {mass} at {comp.label}: nef violation in input")
        u = LogRVal.of(comp.zval) if comp.zval is not None else None
        atoms.append(Atom(mass=mass, u=u, label=comp.label))
    return AtomicMeasure(atoms, flags)


def ma_pa_curve(pa: PAFunction1D, semipositive: bool = True) -> AtomicMeasure:
    """Dirac mass = slope increase at each kink of a PA potential profile.

    Affine input gives the empty measure.  A concave kink under the
    semi-positive flag is recorded as a flag on the result.
    """
    atoms = []
    flags = []
    for x, jump in pa.kinks():
        if jump < 0 and semipositive:
            flags.append(f"concave kink (jump {jump}) at {x!r}")
        atoms.append(Atom(mass=jump, u=x))
    return AtomicMeasure(atoms, flags)


def pa_signed_measure(pa: PAFunction1D) -> AtomicMeasure:
    """Signed second-derivative measure of a PA function (all slope jumps)."""
    return ma_pa_curve(pa, semipositive=False)


# ---------------------------------------------------------------------------
# curve families and their tropical profiles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FamilyEntry:
    coeffs: tuple[tuple[int, complex], ...]  # (z-exponent, coefficient)
    q: Fraction                              # explicit t-power
    c: Fraction                              # hybrid constant

    @classmethod
    def build(cls, coeffs, q=0, c=0):
        items = tuple(sorted((int(k), complex(v)) for k, v in dict(coeffs).items()))
        if not items:
            raise ValueError("empty section")
        if any(v == 0 for _, v in items):
            raise ValueError("zero coefficients must be omitted")
        if any(k < 0 for k, _ in items):
            raise ValueError("sections are polynomials in z")
        return cls(items, as_fraction(q), as_fraction(c))


@dataclass(frozen=True)
class Chart:
    """Affine coordinate xi with z = t^{-p} xi (or t^{-p}/xi when inverted).

    |xi| ~ 1 corresponds to u ~ -p, so p selects the region of the
    valuation coordinate the chart resolves.  u_lo/u_hi delimit the region
    this chart owns in the partition of unity.
    """

    p: Fraction = Fraction(0)
    invert: bool = False
    L: float = 2.0
    u_lo: float = -math.inf
    u_hi: float = math.inf
    name: str = "chart"


@dataclass(frozen=True)
class CurveFamily:
    name: str
    m: int
    degree: int
    entries: tuple[FamilyEntry, ...]
    charts: tuple[Chart, ...]
    mode: str = "max"  # "max" | "lse"

    def __post_init__(self):
        if self.m <= 0 or self.degree <= 0:
            raise ValueError("m and degree must be positive")
        for e in self.entries:
            if max(k for k, _ in e.coeffs) > self.degree:
                raise ValueError("entry degree exceeds declared family degree")
        if self.mode not in ("max", "lse"):
            raise ValueError("mode must be 'max' or 'lse'")

    def ma_mass(self) -> Fraction:
        """Total Monge-Ampere mass: sections live in mL of degree ``degree``."""
        return Fraction(self.degree, self.m)

    def with_constant_shift(self, index: int, delta) -> "CurveFamily":
        d = as_fraction(delta)
        new_entries = []
        for i, e in enumerate(self.entries):
            if i == index:
                new_entries.append(FamilyEntry(e.coeffs, e.q, e.c + d))
            else:
                new_entries.append(e)
        return CurveFamily(self.name, self.m, self.degree, tuple(new_entries),
                           self.charts, self.mode)

    # -- serialization --------------------------------------------------
    def to_json(self):
        return {
            "name": self.name,
            "m": self.m,
            "degree": self.degree,
            "mode": self.mode,
            "entries": [
                {
                    "coeffs": {
                        str(k): [v.real, v.imag] for k, v in e.coeffs
                    },
                    "q": rat_to_str(e.q),
                    "c": rat_to_str(e.c),
                }
                for e in self.entries
            ],
            "charts": [
                {
                    "p": rat_to_str(ch.p),
                    "invert": ch.invert,
                    "L": ch.L,
                    "u_lo": None if math.isinf(ch.u_lo) else ch.u_lo,
                    "u_hi": None if math.isinf(ch.u_hi) else ch.u_hi,
                    "name": ch.name,
                }
                for ch in self.charts
            ],
        }

    @classmethod
    def from_json(cls, data):
        entries = tuple(
            FamilyEntry.build(
                {int(k): complex(v[0], v[1]) for k, v in e["coeffs"].items()},
                rat_from_str(e["q"]),
                rat_from_str(e["c"]),
            )
            for e in data["entries"]
        )
        charts = tuple(
            Chart(
                p=rat_from_str(ch["p"]),
                invert=bool(ch.get("invert", False)),
                L=float(ch.get("L", 2.0)),
                u_lo=-math.inf if ch.get("u_lo") is None else float(ch["u_lo"]),
                u_hi=math.inf if ch.get("u_hi") is None else float(ch["u_hi"]),
                name=ch.get("name", "chart"),
            )
            for ch in data["charts"]
        )
        return cls(data["name"], int(data["m"]), int(data["degree"]),
                   entries, charts, data.get("mode", "max"))


def family_profile(family: CurveFamily, r: Fraction) -> PAFunction1D:
    """Exact convex profile H(u) of the family's limit potential."""
    lines = []
    for e in family.entries:
        offset = LogRVal(const=-e.q, invlogr=-e.c)
        for k, _v in e.coeffs:
            lines.append(AffineLine(Fraction(-k), offset))
    return upper_envelope(lines, r).scale(Fraction(1, family.m))


def family_limit_measure(family: CurveFamily, r: Fraction) -> AtomicMeasure:
    return ma_pa_curve(family_profile(family, r))


# ---------------------------------------------------------------------------
# complex side: grid Laplacian per chart
# ---------------------------------------------------------------------------

@dataclass
class GridMeasure:
    chart: Chart
    resolution: int
    cell_masses: np.ndarray   # partition-weighted, shape (n, n)
    cell_u: np.ndarray        # valuation coordinate per cell, shape (n, n)
    raw_total: float          # unweighted Laplacian total on this chart
    total_mass: float         # weighted total

    def negative_mass_floor(self) -> float:
        return float(self.cell_masses.min())


def _smoothstep(x: np.ndarray) -> np.ndarray:
    y = np.clip(x, 0.0, 1.0)
    return y * y * (3.0 - 2.0 * y)


def partition_weight(chart: Chart, u: np.ndarray, ramp: float = 0.05) -> np.ndarray:
    """C^1 radial partition weight for the chart's owned u-interval.

    Ramps of half-width ``ramp`` are centered on the declared interval
    ends, so charts sharing an interface sum to one.
    """
    w = np.ones_like(u)
    if math.isfinite(chart.u_lo):
        w = w * _smoothstep((u - (chart.u_lo - ramp)) / (2 * ramp))
    if math.isfinite(chart.u_hi):
        w = w * (1.0 - _smoothstep((u - (chart.u_hi - ramp)) / (2 * ramp)))
    return w


def _potential_on_grid(family: CurveFamily, t: complex, chart: Chart,
                       nodes: np.ndarray, log_r: float) -> np.ndarray:
    """Fiber potential at the chart nodes (complex array)."""
    logabs_t = math.log(abs(t))
    log_t = cmath.log(t)
    vals = []
    for e in family.entries:
        acc = np.zeros_like(nodes, dtype=complex)
        for k, coef in e.coeffs:
            tpow = cmath.exp((float(e.q) - float(chart.p) * k) * log_t)
            xi_exp = (family.degree - k) if chart.invert else k
            acc += coef * tpow * nodes ** xi_exp
        with np.errstate(divide="ignore"):
            term = np.log(np.abs(acc))
        term = term + float(e.c) / log_r * logabs_t
        vals.append(term)
    stack = np.stack(vals)
    if family.mode == "max":
        phi = np.max(stack, axis=0)
    else:
        mm = 2.0 * family.m
        top = np.max(stack, axis=0)
        phi = top + np.log(np.sum(np.exp(mm * (stack - top)), axis=0)) / mm
    return phi / family.m


def ma_complex_curve(
    family: CurveFamily,
    t: complex,
    n: int,
    r: Fraction,
    mass_tol: float = 1e-4,
    check_mass: bool = True,
) -> list[GridMeasure]:
    """Five-point Laplacian measure of the fiber potential, per chart.

    Each chart is an n x n cell grid on [-L, L]^2 (cell centers, never
    hitting xi = 0); masses are dd^c phi ~ (discrete Laplacian)/(2 pi) and
    are then weighted by the chart's partition-of-unity factor in the
    valuation coordinate.  The weighted totals must reproduce the family
    degree within ``mass_tol``, else a ResolutionError suggests a finer
    grid.
    """
    if n < 16:
        raise ResolutionError("grid too small", suggested_n=max(64, 2 * n))
    log_r = math.log(float(r))
    logabs_t = math.log(abs(t))
    grids = []
    for chart in family.charts:
        h = 2.0 * chart.L / n
        centers = -chart.L + h * (np.arange(n + 2) - 0.5)
        X, Y = np.meshgrid(centers, centers, indexing="ij")
        nodes = X + 1j * Y
        phi = _potential_on_grid(family, t, chart, nodes, log_r)
        lap = (
            phi[2:, 1:-1] + phi[:-2, 1:-1] + phi[1:-1, 2:] + phi[1:-1, :-2]
            - 4.0 * phi[1:-1, 1:-1]
        )
        masses = lap / (2.0 * math.pi)
        xi_abs = np.abs(nodes[1:-1, 1:-1])
        with np.errstate(divide="ignore"):
            u = np.log(xi_abs) / logabs_t - float(chart.p)
        if chart.invert:
            u = -np.log(xi_abs) / logabs_t - float(chart.p)
        weight = partition_weight(chart, u)
        weighted = masses * weight
        grids.append(
            GridMeasure(
                chart=chart,
                resolution=n,
                cell_masses=weighted,
                cell_u=u,
                raw_total=float(masses.sum()),
                total_mass=float(weighted.sum()),
            )
        )
    total = sum(g.total_mass for g in grids)
    expected = float(family.ma_mass())
    if check_mass and abs(total - expected) > mass_tol:
        raise ResolutionError(
            f"captured mass {total:.6f} vs degree {expected} "
            f"(deficit {expected - total:.2e}); kink circles unresolved",
            suggested_n=2 * n,
        )
    return grids


@dataclass
class LineCloud:
    """Weighted points on the valuation coordinate (numeric pushforward)."""

    u: np.ndarray
    mass: np.ndarray
    leakage: float = 0.0
    warnings: list[str] = field(default_factory=list)

    def total(self) -> float:
        return float(self.mass.sum())


def pushforward_log_radius(grid: GridMeasure, mass_floor: float = 1e-12) -> LineCloud:
    """Direct image of a grid measure under u = log|z| / log|t|.

    Mass-preserving by construction; cells with negligible mass are
    dropped.  Leakage accounting reports the weighted mass missing from
    the chart relative to its raw Laplacian total.
    """
    m = grid.cell_masses.ravel()
    u = grid.cell_u.ravel()
    keep = np.abs(m) > mass_floor
    cloud = LineCloud(u[keep].copy(), m[keep].copy())
    cloud.leakage = grid.raw_total - grid.total_mass
    if not np.isfinite(cloud.u).all():
        bad = ~np.isfinite(cloud.u)
        cloud.warnings.append(
            f"dropped {bad.sum()} cells with undefined log-radius"
        )
        cloud.u, cloud.mass = cloud.u[~bad], cloud.mass[~bad]
    return cloud


def combine_clouds(clouds: Sequence[LineCloud]) -> LineCloud:
    if not clouds:
        return LineCloud(np.zeros(0), np.zeros(0))
    u = np.concatenate([c.u for c in clouds])
    m = np.concatenate([c.mass for c in clouds])
    warnings = [w for c in clouds for w in c.warnings]
    return LineCloud(u, m, sum(c.leakage for c in clouds), warnings)


def wasserstein1_line(u1, m1, u2, m2) -> float:
    """W1 between two finite measures on the line (normalized to unit mass)."""
    u1 = np.asarray(u1, dtype=float)
    u2 = np.asarray(u2, dtype=float)
    m1 = np.asarray(m1, dtype=float)
    m2 = np.asarray(m2, dtype=float)
    t1, t2 = m1.sum(), m2.sum()
    if t1 <= 0 or t2 <= 0:
        raise ValueError("measures must have positive mass")
    scale = 0.5 * (t1 + t2)
    pts = np.concatenate([u1, u2])
    order = np.argsort(pts, kind="stable")
    pts = pts[order]
    deltas = np.concatenate([m1 / t1, -m2 / t2])[order]
    cdf_gap = np.cumsum(deltas)[:-1]
    widths = np.diff(pts)
    return float(np.sum(np.abs(cdf_gap) * widths) * scale)


def atoms_to_arrays(measure: AtomicMeasure, r: Fraction):
    us, ms = [], []
    for atom in measure.nonzero().atoms:
        if atom.u is None:
            raise ValueError("atom without line position")
        us.append(atom.u.to_float(r))
        ms.append(float(atom.mass))
    return np.array(us), np.array(ms)


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------

@dataclass
class ConvergenceRow:
    t_abs: float
    w1: float
    test_errors: dict
    captured_mass: float


@dataclass
class ConvergenceReport:
    family: str
    rows: list[ConvergenceRow]
    limit_atoms: list[tuple[float, float]]
    monotone: bool
    failure: str | None = None


def weak_convergence_experiment(
    family: CurveFamily,
    t_schedule: Sequence[float],
    test_functions: dict[str, PAFunction1D],
    grid_n: int,
    r: Fraction,
    mass_tol: float = 1e-4,
) -> ConvergenceReport:
    """Compare pushed-forward complex MA measures against the limit atoms.

    For each t the grid measure is pushed to the valuation coordinate and
    compared with the atomic limit measure through the W1 distance and the
    pairings against PA test functions of bounded slope.  A non-decreasing
    W1 trend is reported as an experiment failure, not an exception.
    """
    mu0 = family_limit_measure(family, r)
    u0, m0 = atoms_to_arrays(mu0, r)
    rows = []
    for t_abs in t_schedule:
        grids = ma_complex_curve(family, complex(t_abs), grid_n, r,
                                 mass_tol=mass_tol)
        cloud = combine_clouds([pushforward_log_radius(g) for g in grids])
        w1 = wasserstein1_line(cloud.u, cloud.mass, u0, m0)
        errs = {}
        for name, f in test_functions.items():
            approx = float(np.sum(cloud.mass * f.eval_float_array(cloud.u)))
            exact = mu0.pair_with(f).to_float(r)
            errs[name] = abs(approx - exact)
        rows.append(ConvergenceRow(t_abs, w1, errs, cloud.total()))
    w1s = [row.w1 for row in rows]
    monotone = all(b <= a * (1 + 1e-9) for a, b in zip(w1s, w1s[1:]))
    failure = None if monotone else "W1 errors do not decrease along the schedule"
    return ConvergenceReport(
        family.name,
        rows,
        [(float(u), float(m)) for u, m in zip(u0, m0)],
        monotone,
        failure,
    )


@dataclass
class ClnReport:
    family: str
    deltas: list[float]
    differences: list[float]
    fitted_constant: float
    residual: float
    antisymmetry_exact: bool
    failure: str | None = None


def pairing_difference(fam1: CurveFamily, fam2: CurveFamily,
                        r: Fraction) -> LogRVal:
    """int (h1 - h2) d MA(h1) - int (h1 - h2) d MA(h2), exact on profiles."""
    h1, h2 = family_profile(fam1, r), family_profile(fam2, r)
    mu1, mu2 = ma_pa_curve(h1), ma_pa_curve(h2)
    diff = h1.sub(h2)
    return mu1.pair_with(diff) - mu2.pair_with(diff)


def cross_pairing(fam1: CurveFamily, fam2: CurveFamily, r: Fraction) -> LogRVal:
    """int h1 d MA(h2) - int h2 d MA(h1); exactly antisymmetric under swap."""
    h1, h2 = family_profile(fam1, r), family_profile(fam2, r)
    mu1, mu2 = ma_pa_curve(h1), ma_pa_curve(h2)
    return mu2.pair_with(h1) - mu1.pair_with(h2)


def cln_stability_check(
    family: CurveFamily,
    deltas: Sequence[Fraction],
    r: Fraction,
    entry_index: int | None = None,
    residual_tol: float = 0.05,
) -> ClnReport:
    """Linear-in-delta envelope for pairing differences under constant shifts.

    The perturbation shifts one entry constant by delta; differences are
    computed exactly on the PA oracle, then fitted through the origin.
    Superlinear growth (relative residual beyond tolerance) is a failure
    report.
    """
    idx = entry_index if entry_index is not None else len(family.entries) - 1
    ds, diffs = [], []
    for d in deltas:
        pert = family.with_constant_shift(idx, d)
        val = pairing_difference(family, pert, r)
        ds.append(abs(float(as_fraction(d))))
        diffs.append(abs(val.to_float(r)))
    ds_arr, diff_arr = np.array(ds), np.array(diffs)
    denom = float(np.dot(ds_arr, ds_arr))
    fitted = float(np.dot(ds_arr, diff_arr) / denom) if denom > 0 else 0.0
    scale = float(np.max(diff_arr)) if diff_arr.size else 0.0
    residual = (
        float(np.max(np.abs(diff_arr - fitted * ds_arr))) / scale if scale > 0 else 0.0
    )
    pert = family.with_constant_shift(idx, deltas[0])
    x12 = cross_pairing(family, pert, r)
    x21 = cross_pairing(pert, family, r)
    antisym = x12 == (-1) * x21
    failure = None
    if residual > residual_tol:
        failure = f"superlinear growth: relative residual {residual:.3f}"
    return ClnReport(family.name, ds, diffs, fitted, residual, antisym, failure)
