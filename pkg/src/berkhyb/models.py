"""Combinatorics of snc models: components, strata, dual complexes,
monomial pullbacks between models, and the retraction onto skeleta.

Models are purely combinatorial input (components with multiplicities,
declared strata, optional pullback matrices); nothing is computed from
equations.  Connectedness of strata is declared, not verified.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Sequence

from .exactnum import rat_from_str, rat_to_str
from .valuation import INF, LaurentSeriesData, QuasiMonomialPoint, qm_eval


class ModelValidationError(ValueError):
    pass


class ModelInconsistencyError(ValueError):
    pass


@dataclass(frozen=True)
class Component:
    label: str
    multiplicity: int
    zval: Fraction | None = None  # optional v_{D_i}(z) coordinate for curve models


@dataclass(frozen=True)
class MonomialPullback:
    """Monomial transition data between two models.

    ``matrix[i][k]``: the target local equation z_i pulls back to
    prod_k (z'_k)^{matrix[i][k]} times a unit.  Multiplicity
    compatibility a'^T = a^T M holds on matching charts.
    """

    source: "SncModelCombinatorics"
    target: "SncModelCombinatorics"
    matrix: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        nt = len(self.target.components)
        ns = len(self.source.components)
        if len(self.matrix) != nt or any(len(row) != ns for row in self.matrix):
            raise ModelValidationError("pullback matrix shape mismatch")
        if any(e < 0 for row in self.matrix for e in row):
            raise ModelValidationError("pullback exponents must be non-negative")
        a_src = [c.multiplicity for c in self.source.components]
        a_tgt = [c.multiplicity for c in self.target.components]
        for k in range(ns):
            derived = sum(a_tgt[i] * self.matrix[i][k] for i in range(nt))
            if derived != 0 and derived != a_src[k]:
                raise ModelValidationError(
                    f"multiplicity incompatibility at source component {k}: "
                    f"a^T M = {derived}, a' = {a_src[k]}"
                )

    def pullback_monomial(self, i: int) -> LaurentSeriesData:
        """The target equation z_i as a monomial in source variables."""
        labels = [c.label for c in self.source.components]
        return LaurentSeriesData.monomial(labels, self.matrix[i])


class SncModelCombinatorics:
    """Special fiber sum a_i D_i with declared strata."""

    def __init__(self, components: Sequence[Component], strata: Sequence[Sequence[int]],
                 name: str = "model"):
        self.name = name
        self.components = tuple(components)
        if any(c.multiplicity <= 0 for c in self.components):
            raise ModelValidationError("multiplicities must be strictly positive")
        n = len(self.components)
        declared = {tuple(sorted(set(s))) for s in strata}
        for s in declared:
            if any(i < 0 or i >= n for i in s) or not s:
                raise ModelValidationError(f"bad stratum {s}")
        for i in range(n):
            declared.add((i,))
        self.strata = tuple(sorted(declared, key=lambda s: (len(s), s)))
        self._strata_set = set(self.strata)
        self._check_face_closure()
        self._eq_index = {c.label: i for i, c in enumerate(self.components)}
        self.pullbacks: list[MonomialPullback] = []

    def _check_face_closure(self):
        for s in self.strata:
            for k in range(1, len(s)):
                for sub in combinations(s, k):
                    if sub not in self._strata_set:
                        raise ModelValidationError(
                            f"strata not face-closed: {sub} missing under {s}"
                        )

    # -- accessors -------------------------------------------------------
    def has_component(self, i: int) -> bool:
        return 0 <= i < len(self.components)

    def multiplicity(self, i: int) -> int:
        return self.components[i].multiplicity

    def component_index_by_equation(self, label: str):
        return self._eq_index.get(label)

    def stratum_support(self, stratum: tuple[int, ...]) -> set[int]:
        return set(stratum)

    def variable_labels(self) -> list[str]:
        return [c.label for c in self.components]

    def point(self, stratum, weights) -> QuasiMonomialPoint:
        return QuasiMonomialPoint(
            self,
            tuple(stratum),
            tuple(Fraction(w) for w in weights),
        )

    def uniformizer(self) -> LaurentSeriesData:
        """t = prod z_j^{a_j} as Laurent data over all component equations."""
        return LaurentSeriesData.monomial(
            self.variable_labels(), [c.multiplicity for c in self.components]
        )

    # -- serialization -----------------------------------------------------
    def to_json(self):
        data = {
            "name": self.name,
            "components": [
                {
                    "label": c.label,
                    "mult": c.multiplicity,
                    **({"zval": rat_to_str(c.zval)} if c.zval is not None else {}),
                }
                for c in self.components
            ],
            "strata": [list(s) for s in self.strata],
        }
        return data

    @classmethod
    def from_json(cls, data) -> "SncModelCombinatorics":
        comps = [
            Component(
                c["label"],
                int(c["mult"]),
                rat_from_str(c["zval"]) if "zval" in c else None,
            )
            for c in data["components"]
        ]
        return cls(comps, data["strata"], name=data.get("name", "model"))

    @classmethod
    def load(cls, path) -> "SncModelCombinatorics":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


@dataclass(frozen=True)
class Simplex:
    stratum: tuple[int, ...]
    multiplicities: tuple[int, ...]

    def contains_weights(self, weights) -> bool:
        total = sum(Fraction(a) * Fraction(w) for a, w in zip(self.multiplicities, weights))
        return total == 1 and all(Fraction(w) >= 0 for w in weights)


class DualComplex:
    """One simplex per declared stratum; faces from subset relations."""

    def __init__(self, model: SncModelCombinatorics):
        self.model = model
        self.simplices = tuple(
            Simplex(s, tuple(model.multiplicity(j) for j in s)) for s in model.strata
        )
        self._by_stratum = {s.stratum: s for s in self.simplices}

    def faces_of(self, stratum) -> list[tuple[int, ...]]:
        s = tuple(sorted(stratum))
        return [
            t.stratum
            for t in self.simplices
            if set(t.stratum) < set(s)
        ]

    def vertex_count(self) -> int:
        return sum(1 for s in self.simplices if len(s.stratum) == 1)

    def f_vector(self) -> list[int]:
        top = max(len(s.stratum) for s in self.simplices)
        fv = [0] * top
        for s in self.simplices:
            fv[len(s.stratum) - 1] += 1
        return fv

    def euler_characteristic(self) -> int:
        return sum((-1) ** k * n for k, n in enumerate(self.f_vector()))


def build_dual_complex(model: SncModelCombinatorics) -> DualComplex:
    """Dual complex of the special fiber; validation errors surface here."""
    return DualComplex(model)


def retraction(
    target: SncModelCombinatorics,
    v: QuasiMonomialPoint,
    pullback: MonomialPullback,
) -> QuasiMonomialPoint:
    """Berkovich retraction onto Sk(target): weights w_i = v(pullback of z_i).

    The output support is snapped to the minimal declared stratum
    containing it; ambiguity between several incomparable minimal strata
    is an error, as is a support contained in no declared stratum.
    """
    if pullback.target is not target or pullback.source is not v.model:
        raise ModelInconsistencyError("pullback does not connect the given models")
    weights = []
    for i in range(len(target.components)):
        w = qm_eval(v, pullback.pullback_monomial(i))
        if w == INF:
            raise ModelInconsistencyError("pullback monomial evaluates to +inf")
        weights.append(w)
    support = tuple(i for i, w in enumerate(weights) if w > 0)
    candidates = [s for s in target.strata if set(support) <= set(s)]
    if not candidates:
        raise ModelInconsistencyError(
            f"support {support} not contained in any declared stratum"
        )
    minimal = [
        s for s in candidates if not any(set(t) < set(s) for t in candidates)
    ]
    if len(minimal) != 1:
        raise ModelInconsistencyError(
            f"ambiguous minimal stratum for support {support}: {minimal}"
        )
    stratum = minimal[0]
    wvec = tuple(weights[i] for i in stratum)
    total = sum(
        (Fraction(target.multiplicity(j)) * w for j, w in zip(stratum, wvec)),
        Fraction(0),
    )
    if total != 1:
        raise ModelInconsistencyError(
            f"retracted weights violate the simplex constraint: sum = {total}"
        )
    return QuasiMonomialPoint(target, stratum, wvec)


def identity_pullback(model: SncModelCombinatorics) -> MonomialPullback:
    n = len(model.components)
    eye = tuple(tuple(1 if i == k else 0 for k in range(n)) for i in range(n))
    return MonomialPullback(model, model, eye)


def model_function_restriction(divisor: dict, model: SncModelCombinatorics):
    """Restriction of log|O(D)| to Sk(model) for a vertical divisor D.

    ``divisor`` maps component index -> integer coefficient.  The value at
    a point is (log r) * v(z_D) with z_D = prod z_i^{c_i}; on each simplex
    this is affine with integer slopes times log r.  Returned as a
    PAFunctionOnComplex (pure log r part).
    """
    from .pafunc import PAFunctionOnComplex

    for i in divisor:
        if not model.has_component(i):
            raise ModelValidationError(f"divisor component {i} not in model")
    complex_ = build_dual_complex(model)
    pieces = {}
    for simplex in complex_.simplices:
        g_logr = tuple(
            Fraction(divisor.get(j, 0)) for j in simplex.stratum
        )
        g_const = tuple(Fraction(0) for _ in simplex.stratum)
        pieces[simplex.stratum] = (g_logr, g_const)
    return PAFunctionOnComplex(complex_, pieces)
