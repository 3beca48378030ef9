"""Quasi-monomial, divisorial and Gauss-extended valuations on Laurent data.

A Laurent element is a finite set of terms c_beta * z^beta with beta in Z^k.
Monomial valuations only consult which exponents carry a nonzero
coefficient, so coefficients are stored as tags: ``unit`` for a nonzero
coefficient whose value is irrelevant, or an explicit complex-rational
pair used by the numeric hybrid layer.  The zero element is the empty
term list and evaluates to +infinity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

from .exactnum import Rat, as_fraction, rat_from_str, rat_to_str

INF = "inf"  # distinguished +infinity marker for valuation values


class ConfigurationError(ValueError):
    """Inconsistent identification between data and model variables."""


@dataclass(frozen=True)
class Coefficient:
    """Coefficient tag: unit, or an explicit complex rational (re, im)."""

    kind: str  # "unit" | "explicit"
    re: Fraction = Fraction(0)
    im: Fraction = Fraction(0)

    @classmethod
    def unit(cls) -> "Coefficient":
        return cls("unit")

    @classmethod
    def explicit(cls, re: Rat, im: Rat = 0) -> "Coefficient":
        return cls("explicit", as_fraction(re), as_fraction(im))

    def is_zero(self) -> bool:
        return self.kind == "explicit" and self.re == 0 and self.im == 0

    def mul(self, other: "Coefficient") -> "Coefficient":
        if self.kind == "unit" or other.kind == "unit":
            return Coefficient.unit()
        return Coefficient.explicit(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    def add(self, other: "Coefficient") -> "Coefficient":
        # unit + unit is "nonzero unknown"; exact cancellation is only
        # detected for explicit coefficients.
        if self.kind == "unit" or other.kind == "unit":
            return Coefficient.unit()
        return Coefficient.explicit(self.re + other.re, self.im + other.im)

    def complex_value(self) -> complex:
        if self.kind == "unit":
            return 1.0 + 0j
        return complex(float(self.re), float(self.im))

    def to_json(self):
        if self.kind == "unit":
            return "unit"
        return [rat_to_str(self.re), rat_to_str(self.im)]


class LaurentSeriesData:
    """Finite Laurent term data over ordered variable labels.

    Terms are kept sorted by lexicographic exponent order so iteration is
    reproducible; duplicate exponents and zero coefficients are rejected
    at construction.
    """

    def __init__(self, variables: Sequence[str], terms=()):
        self.variables = tuple(variables)
        if len(set(self.variables)) != len(self.variables):
            raise ConfigurationError("duplicate variable labels")
        k = len(self.variables)
        seen = {}
        for exp, coef in terms:
            exp = tuple(int(e) for e in exp)
            if len(exp) != k:
                raise ConfigurationError("exponent length does not match variables")
            if not isinstance(coef, Coefficient):
                raise TypeError("coefficient must be a Coefficient tag")
            if coef.is_zero():
                continue
            if exp in seen:
                raise ValueError(f"duplicate exponent {exp}")
            seen[exp] = coef
        self.terms = tuple(sorted(seen.items()))

    # -- constructors ---------------------------------------------------
    @classmethod
    def zero(cls, variables: Sequence[str]) -> "LaurentSeriesData":
        return cls(variables, [])

    @classmethod
    def monomial(cls, variables: Sequence[str], exp, coef: Coefficient | None = None):
        return cls(variables, [(tuple(exp), coef or Coefficient.unit())])

    @classmethod
    def one(cls, variables: Sequence[str]) -> "LaurentSeriesData":
        return cls.monomial(variables, (0,) * len(variables))

    def is_zero(self) -> bool:
        return not self.terms

    # -- formal algebra (support-level; used by property checks) --------
    def formal_sum(self, other: "LaurentSeriesData") -> "LaurentSeriesData":
        if self.variables != other.variables:
            raise ConfigurationError("variable mismatch in sum")
        acc: dict = {}
        for exp, c in self.terms + other.terms:
            acc[exp] = acc[exp].add(c) if exp in acc else c
        terms = [(e, c) for e, c in acc.items() if not c.is_zero()]
        return LaurentSeriesData(self.variables, terms)

    def formal_product(self, other: "LaurentSeriesData") -> "LaurentSeriesData":
        if self.variables != other.variables:
            raise ConfigurationError("variable mismatch in product")
        acc: dict = {}
        for e1, c1 in self.terms:
            for e2, c2 in other.terms:
                exp = tuple(a + b for a, b in zip(e1, e2))
                c = c1.mul(c2)
                acc[exp] = acc[exp].add(c) if exp in acc else c
        terms = [(e, c) for e, c in acc.items() if not c.is_zero()]
        return LaurentSeriesData(self.variables, terms)

    def scale_exponents(self, k: int) -> "LaurentSeriesData":
        if k <= 0:
            raise ValueError("exponent scaling must be positive")
        return LaurentSeriesData(
            self.variables,
            [(tuple(k * e for e in exp), c) for exp, c in self.terms],
        )

    # -- serialization ----------------------------------------------------
    def to_json(self):
        return {
            "vars": list(self.variables),
            "terms": [
                {"exp": list(exp), "coef": coef.to_json()} for exp, coef in self.terms
            ],
        }

    @classmethod
    def from_json(cls, data) -> "LaurentSeriesData":
        terms = []
        for t in data["terms"]:
            coef = t.get("coef", "unit")
            if coef == "unit":
                c = Coefficient.unit()
            else:
                c = Coefficient.explicit(rat_from_str(coef[0]), rat_from_str(coef[1]))
            terms.append((tuple(t["exp"]), c))
        return cls(data["vars"], terms)

    def __repr__(self):
        if self.is_zero():
            return "Laurent(0)"
        bits = []
        for exp, _ in self.terms:
            mono = "*".join(
                f"{v}^{e}" for v, e in zip(self.variables, exp) if e != 0
            )
            bits.append(mono or "1")
        return "Laurent(" + " + ".join(bits) + ")"


@dataclass(frozen=True)
class QuasiMonomialPoint:
    """A stratum of an snc model with a rational weight vector.

    The normalization sum_j a_j w_j = 1 (exact) pins v(t) = 1 for the
    uniformizer t = prod z_j^{a_j}.
    """

    model: "object"  # SncModelCombinatorics; kept loose to avoid an import cycle
    stratum: tuple[int, ...]
    weights: tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.stratum) != len(self.weights):
            raise ValueError("stratum/weight length mismatch")
        total = Fraction(0)
        for j, w in zip(self.stratum, self.weights):
            if w < 0:
                raise ValueError("weights must be non-negative")
            total += self.model.multiplicity(j) * w
        if total != 1:
            raise ValueError(f"weight normalization sum a_j w_j = {total} != 1")
        for j, w in zip(self.stratum, self.weights):
            if w > 0 and j not in self.model.stratum_support(self.stratum):
                raise ValueError("positive weight outside the stratum")

    def weight_of(self, j: int) -> Fraction:
        for jj, w in zip(self.stratum, self.weights):
            if jj == j:
                return w
        return Fraction(0)

    def weight_map(self) -> dict:
        """Nonzero weights by component index (the canonical form)."""
        return {j: w for j, w in zip(self.stratum, self.weights) if w != 0}

    def same_valuation(self, other: "QuasiMonomialPoint") -> bool:
        """Equality as points of the skeleton, ignoring zero-weight padding."""
        return self.model is other.model and self.weight_map() == other.weight_map()


def qm_eval(
    point: QuasiMonomialPoint,
    f: LaurentSeriesData,
    identification: Mapping[str, int] | None = None,
):
    """Quasi-monomial value: min over stored terms of <w, beta>.

    ``identification`` maps variable labels of ``f`` to component indices
    of the point's model.  Unmapped labels are treated as units at the
    stratum's generic point and contribute 0; labels mapped to components
    outside the stratum likewise contribute 0.  Returns an exact Fraction,
    or INF for the zero element.
    """
    ident = dict(identification) if identification is not None else {}
    for label in ident:
        if label not in f.variables:
            raise ConfigurationError(f"unknown variable label {label!r}")
        if not point.model.has_component(ident[label]):
            raise ConfigurationError(f"label {label!r} mapped to missing component")
    if f.is_zero():
        return INF
    per_var = []
    for label in f.variables:
        if label in ident:
            per_var.append(point.weight_of(ident[label]))
        else:
            # default identification: label equals a component's local
            # equation name, otherwise a unit
            idx = point.model.component_index_by_equation(label)
            per_var.append(point.weight_of(idx) if idx is not None else Fraction(0))
    return weighted_min_of_terms(f, per_var)


def weighted_min_of_terms(f: LaurentSeriesData, weights: Sequence[Rat]):
    """Monomial-valuation formula min over terms of <w, beta>, bare weights.

    This is the evaluation core of qm_eval; it is also used directly for
    path-limit predictions where v(z) = w, v(t) = 1 carries no simplex
    normalization.
    """
    if f.is_zero():
        return INF
    ws = [as_fraction(w) for w in weights]
    if len(ws) != len(f.variables):
        raise ConfigurationError("weight vector length mismatch")
    best = None
    for exp, _coef in f.terms:
        val = sum((w * e for w, e in zip(ws, exp)), Fraction(0))
        if best is None or val < best:
            best = val
    return best


def brute_force_min(point: QuasiMonomialPoint, f: LaurentSeriesData,
                    identification: Mapping[str, int] | None = None):
    """Independent oracle for qm_eval: explicit enumeration of <w, beta>.

    Kept deliberately separate from qm_eval's code path (no shared term
    iteration) so the two can cross-check each other.
    """
    if f.is_zero():
        return INF
    ident = dict(identification) if identification is not None else {}
    values = []
    for exp, _c in f.terms:
        total = Fraction(0)
        for label, e in zip(f.variables, exp):
            if e == 0:
                continue
            if label in ident:
                comp = ident[label]
            else:
                comp = point.model.component_index_by_equation(label)
                if comp is None:
                    continue
            total += point.weight_of(comp) * e
        values.append(total)
    return min(values)


def divisorial_point(model, i: int) -> QuasiMonomialPoint:
    """Vertex point v_{D_i} = a_i^{-1} ord_{D_i} of the dual complex."""
    if not model.has_component(i):
        raise IndexError(f"no component with index {i}")
    a = model.multiplicity(i)
    return QuasiMonomialPoint(model, (i,), (Fraction(1, a),))


def gauss_extension(coeff_valuation: Callable[[object], object],
                    series: Sequence[tuple[int, object]]):
    """Gauss lift gamma(v)(S) = min_n (v(s_n) + n) for S = sum s_n t^n.

    ``series`` is a finite list of (n, handle); the oracle maps a handle
    to a Fraction or INF.  Empty input is the zero element, value INF.
    """
    best = None
    for n, handle in series:
        v = coeff_valuation(handle)
        if v == INF:
            continue
        val = as_fraction(v) + n
        if best is None or val < best:
            best = val
    return INF if best is None else best


@dataclass
class SuperadditivityReport:
    product_ok: bool
    product_equality: bool
    sum_ok: bool
    details: dict = field(default_factory=dict)


def valuation_superadditivity_check(
    point: QuasiMonomialPoint,
    f: LaurentSeriesData,
    g: LaurentSeriesData,
    identification: Mapping[str, int] | None = None,
) -> SuperadditivityReport:
    """Check v(fg) >= v(f) + v(g) and v(f+g) >= min(v(f), v(g)).

    Products/sums are formal support-level operations; with no exponent
    collisions in the product the first inequality is an equality.
    """
    vf = qm_eval(point, f, identification)
    vg = qm_eval(point, g, identification)
    prod = f.formal_product(g)
    vfg = qm_eval(point, prod, identification)
    if INF in (vf, vg):
        # one factor is zero, so the product must be the zero element
        product_ok = vfg == INF
        product_equality = vfg == INF
    else:
        product_ok = vfg == INF or vfg >= vf + vg
        collisions = len(prod.terms) < sum(
            1 for _ in f.terms for _ in g.terms
        )
        product_equality = (vfg != INF and vfg == vf + vg) or collisions
    s = f.formal_sum(g)
    vs = qm_eval(point, s, identification)
    if vf == INF and vg == INF:
        sum_ok = vs == INF
    else:
        lower = min(v for v in (vf, vg) if v != INF)
        sum_ok = vs == INF or vs >= lower
    return SuperadditivityReport(
        product_ok=product_ok,
        product_equality=product_equality,
        sum_ok=sum_ok,
        details={"v(f)": vf, "v(g)": vg, "v(fg)": vfg, "v(f+g)": vs},
    )
