import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from berkhyb.exactnum import LogRVal
from berkhyb.tropical import (
    BasepointError,
    RegularityError,
    TropicalFSMetric,
    convex_pa_approximation,
    lse_max_gap,
    na_limit_tfs,
    tfs_eval,
    tfs_max,
    tfs_scale_check,
    tfs_shift,
    tfs_sum,
)
from berkhyb.valuation import LaurentSeriesData, divisorial_point


def mono(labels, exps):
    return LaurentSeriesData.monomial(labels, exps)


def one(labels):
    return LaurentSeriesData.one(labels)


@pytest.fixture()
def seg_labels():
    return ["w1", "w2"]


def random_points(model, rng, n):
    pts = []
    for _ in range(n):
        stratum = rng.choice(model.strata)
        raw = [Fraction(rng.randint(0, 8), rng.randint(1, 5)) for _ in stratum]
        if all(q == 0 for q in raw):
            raw[0] = Fraction(1)
        tot = sum(
            (model.multiplicity(j) * q for j, q in zip(stratum, raw)), Fraction(0)
        )
        pts.append(model.point(stratum, [q / tot for q in raw]))
    return pts


def test_trivial_metric_is_zero(segment, r, seg_labels):
    phi = TropicalFSMetric.build(1, [(one(seg_labels), 0)], one(seg_labels))
    for v in random_points(segment, random.Random(0), 20):
        assert tfs_eval(phi, v, r).is_zero()


def test_unit_term_wins_at_vertex(segment, r, seg_labels):
    # entries {1, z1}: at the w1-vertex, log r < 0 forces the unit to win
    phi = TropicalFSMetric.build(
        1, [(one(seg_labels), 0), (mono(seg_labels, (1, 0)), 0)], one(seg_labels)
    )
    v = divisorial_point(segment, 0)
    assert tfs_eval(phi, v, r) == LogRVal.of(0)


def test_kinked_family_hand_values(segment, r, seg_labels):
    # entries {t, z1} with t = w1 w2: kink where v(t)=1 meets v(z1)
    phi = TropicalFSMetric.build(
        1,
        [(mono(seg_labels, (1, 1)), 0), (mono(seg_labels, (1, 0)), 0)],
        one(seg_labels),
    )
    v1 = divisorial_point(segment, 0)   # w = (1, 0): both entries give log r
    v2 = divisorial_point(segment, 1)   # w = (0, 1): entries log r / 0
    midpoint = segment.point((0, 1), (Fraction(1, 2), Fraction(1, 2)))
    assert tfs_eval(phi, v1, r) == LogRVal.logr(1)
    assert tfs_eval(phi, v2, r) == LogRVal.of(0)
    assert tfs_eval(phi, midpoint, r) == LogRVal.logr(Fraction(1, 2))


def test_basepoint_error(segment, r, seg_labels):
    phi = TropicalFSMetric.build(
        1, [(LaurentSeriesData.zero(seg_labels), 0)], one(seg_labels)
    )
    with pytest.raises(BasepointError):
        tfs_eval(phi, divisorial_point(segment, 0), r)


def test_pointwise_semantics_against_brute_force(segment, triangle, r):
    rng = random.Random(42)
    for model in (segment, triangle):
        labels = model.variable_labels()
        ref = one(labels)

        def random_metric():
            entries = []
            for _ in range(rng.randint(1, 4)):
                exps = tuple(rng.randint(0, 3) for _ in labels)
                c = Fraction(rng.randint(-4, 4), rng.randint(1, 3))
                entries.append((mono(labels, exps), c))
            return TropicalFSMetric.build(1, entries, ref)

        pts = random_points(model, rng, 100)
        phi1, phi2 = random_metric(), random_metric()
        mx = tfs_max(phi1, phi2)
        sm = tfs_sum(phi1, phi2)
        sh = tfs_shift(phi1, Fraction(5, 3))
        for v in pts:
            e1, e2 = tfs_eval(phi1, v, r), tfs_eval(phi2, v, r)
            want_max = e1 if e1.cmp(e2, r) >= 0 else e2
            assert tfs_eval(mx, v, r) == want_max
            assert tfs_eval(sm, v, r) == e1 + e2
            assert tfs_eval(sh, v, r) == e1 + Fraction(5, 3)


def test_max_idempotent_and_shift_round_trip(segment, r, seg_labels):
    phi = TropicalFSMetric.build(
        1,
        [(one(seg_labels), 0), (mono(seg_labels, (2, 1)), Fraction(1, 3))],
        one(seg_labels),
    )
    pts = random_points(segment, random.Random(1), 25)
    mx = tfs_max(phi, phi)
    sh = tfs_shift(tfs_shift(phi, Fraction(7, 5)), Fraction(-7, 5))
    for v in pts:
        assert tfs_eval(mx, v, r) == tfs_eval(phi, v, r)
        assert tfs_eval(sh, v, r) == tfs_eval(phi, v, r)


def test_scale_check(segment, r, seg_labels):
    phi = TropicalFSMetric.build(
        2, [(one(seg_labels), 0), (mono(seg_labels, (1, 1)), 1)], one(seg_labels)
    )
    pts = random_points(segment, random.Random(2), 20)
    assert tfs_scale_check(phi, Fraction(3, 2), pts, r)
    assert tfs_scale_check(phi, 2, pts, r)


def test_na_limit_dual_route_and_kink_example(segment, r, seg_labels):
    # standard kinked family {1, t z1^{-1} * ...} realized as {1, w1}
    phi = TropicalFSMetric.build(
        1, [(one(seg_labels), 0), (mono(seg_labels, (1, 0)), 0)], one(seg_labels)
    )
    res = na_limit_tfs(phi, segment, r)
    assert res.dual_route_equal
    assert res.restriction_values[0] == LogRVal.of(0)  # unit entry dominates
    assert res.restriction_values[1] == LogRVal.of(0)
    res.pa.check_face_continuity()


def test_na_limit_trivial_and_shift(segment, r, seg_labels):
    ref = one(seg_labels)
    phi = TropicalFSMetric.build(1, [(ref, 0)], ref)
    res = na_limit_tfs(phi, segment, r)
    assert all(v.is_zero() for v in res.restriction_values.values())
    rich = TropicalFSMetric.build(
        1, [(ref, 0), (mono(seg_labels, (2, 0)), 1)], ref
    )
    base = na_limit_tfs(rich, segment, r)
    shifted = na_limit_tfs(tfs_shift(rich, Fraction(2, 9)), segment, r)
    for i in (0, 1):
        assert shifted.restriction_values[i] == \
            base.restriction_values[i] + Fraction(2, 9)
        assert shifted.formula_values[i] == base.formula_values[i] + Fraction(2, 9)


def test_na_limit_pole_detection(segment, r, seg_labels):
    from berkhyb.valuation import Coefficient

    pole = LaurentSeriesData(seg_labels, [((-1, 0), Coefficient.unit())])
    phi = TropicalFSMetric.build(1, [(pole, 0)], one(seg_labels))
    with pytest.raises(RegularityError):
        na_limit_tfs(phi, segment, r)
    ok = TropicalFSMetric.build(1, [(pole, 0)], one(seg_labels),
                                meromorphic_ok=True)
    res = na_limit_tfs(ok, segment, r)
    assert res.dual_route_equal


def test_tfs_json_round_trip(seg_labels):
    phi = TropicalFSMetric.build(
        2,
        [(one(seg_labels), Fraction(1, 3)), (mono(seg_labels, (0, 2)), -1)],
        one(seg_labels),
    )
    back = TropicalFSMetric.from_json(phi.to_json())
    assert back.m == phi.m
    assert [(s.terms, c) for s, c in back.entries] == \
        [(s.terms, c) for s, c in phi.entries]


# ---------------------------------------------------------------------------
# log-sum-exp envelope and the convex PA approximation
# ---------------------------------------------------------------------------

def test_lse_gap_worked_examples():
    assert lse_max_gap([3.0], 2) == 0.0
    assert lse_max_gap([0.0, 0.0], 1) == pytest.approx(math.log(2) / 2)


@given(
    xs=st.lists(st.floats(-10, 10), min_size=1, max_size=8),
    m=st.integers(1, 3),
)
@settings(max_examples=500, deadline=None)
def test_lse_gap_bounds(xs, m):
    gap = lse_max_gap(xs, m)
    assert 0.0 <= gap <= math.log(len(xs)) / (2 * m) + 1e-12


def test_convex_pa_approx_exact_for_max():
    rng = np.random.default_rng(5)
    samples = rng.uniform(-4, 4, size=(150, 3))
    chi = lambda x: float(np.max(x))
    for j in (1, 2, 3):
        ap = convex_pa_approximation(chi, j, samples)
        assert ap.lift == 0.0
        for x in samples[:40]:
            assert ap(x) == pytest.approx(chi(x), abs=1e-12)


def test_convex_pa_approx_lse_majorant_and_decreasing():
    rng = np.random.default_rng(6)
    samples = rng.uniform(-3, 3, size=(250, 2))
    chi = lambda x: float(math.log(np.sum(np.exp(2 * np.asarray(x)))) / 2)
    vals = np.array([chi(x) for x in samples])
    errors = {}
    for j in (1, 3):
        ap = convex_pa_approximation(chi, j, samples)
        approx = ap.eval_many(samples)
        assert (approx >= vals - 1e-9).all()
        errors[j] = float(np.max(np.abs(approx - vals)))
    assert errors[3] < errors[1]


def test_convex_pa_approx_vertices_and_dominant_coordinate():
    rng = np.random.default_rng(7)
    samples = rng.uniform(-2, 2, size=(120, 2))
    chi = lambda x: float(math.log(np.sum(np.exp(2 * np.asarray(x)))) / 2)
    ap = convex_pa_approximation(chi, 2, samples)
    for e in np.eye(2):
        assert any(np.allclose(u, e) for u in ap.directions)
    x = np.array([50.0, 0.0])
    offset = ap(x) - 50.0
    assert offset >= -1e-12


def test_decreasing_net_certificate(segment, r, seg_labels):
    from berkhyb.tropical import decreasing_net_certificate

    ref = one(seg_labels)
    base = TropicalFSMetric.build(
        1, [(ref, 0), (mono(seg_labels, (1, 0)), 2)], ref)
    seq = [tfs_shift(base, Fraction(2, 1 + j)) for j in range(4)]
    pts = random_points(segment, random.Random(9), 30)
    cert = decreasing_net_certificate(seq, pts, r)
    assert cert.monotone and cert.n_points == 30
    bad = [seq[0], tfs_shift(seq[0], Fraction(1))]
    cert2 = decreasing_net_certificate(bad, pts, r)
    assert not cert2.monotone
    assert cert2.worst_increase == LogRVal.of(Fraction(1))
