import math
from fractions import Fraction

import numpy as np
import pytest

from berkhyb.exactnum import LogRVal
from berkhyb.harness import load_family, load_table
from berkhyb.mongeampere import (
    Chart,
    CurveFamily,
    FamilyEntry,
    ResolutionError,
    cln_stability_check,
    combine_clouds,
    cross_pairing,
    family_limit_measure,
    family_profile,
    ma_complex_curve,
    ma_model_metric,
    ma_pa_curve,
    pa_signed_measure,
    pairing_difference,
    pushforward_log_radius,
    wasserstein1_line,
)
from berkhyb.pafunc import PAFunction1D


def std_charts(adapted_p=None, interface=-0.5):
    charts = [Chart(p=Fraction(0), name="main", u_lo=interface)]
    if adapted_p is not None:
        charts.append(Chart(p=Fraction(adapted_p), name="adapted",
                            u_hi=interface))
    return tuple(charts)


@pytest.fixture()
def kink_family():
    return CurveFamily(
        "kink", 1, 1,
        (FamilyEntry.build({0: 1}), FamilyEntry.build({1: 1}, q=1)),
        std_charts(1),
    )


# ---------------------------------------------------------------------------
# atomic formula and the exact PA route
# ---------------------------------------------------------------------------

def test_ma_model_metric_examples(data_dir):
    triv = load_table(data_dir / "tables" / "table_trivial_o1.json")
    mu = ma_model_metric(triv)
    assert mu.total_mass() == 1 and len(mu.atoms) == 1
    d21 = load_table(data_dir / "tables" / "table_blowinf_d21.json")
    mu2 = ma_model_metric(d21)
    assert sorted(a.mass for a in mu2.atoms) == [1, 2]
    assert mu2.total_mass() == 3
    ndim = load_table(data_dir / "tables" / "table_ndim.json")
    mu3 = ma_model_metric(ndim)  # b_E = 2 against intersection 1/2
    assert mu3.atoms[0].mass == 1
    assert mu3.total_mass() == 2


def test_ma_model_negative_mass_flagged(data_dir, segment):
    from berkhyb.mongeampere import IntersectionTable

    table = IntersectionTable.build(segment, [(0, 1, Fraction(-1)),
                                              (1, 1, Fraction(2))])
    mu = ma_model_metric(table)
    assert mu.flags and "nef" in mu.flags[0]


def test_ma_pa_curve_examples(r):
    affine = PAFunction1D.from_breakpoints([Fraction(0)], [Fraction(0)], r,
                                           left_slope=3, right_slope=3)
    assert not ma_pa_curve(affine).nonzero().atoms
    vee = PAFunction1D.from_breakpoints([Fraction(-1)], [Fraction(0)], r,
                                        left_slope=0, right_slope=1)
    atoms = ma_pa_curve(vee).nonzero().atoms
    assert atoms[0].mass == 1 and atoms[0].u == LogRVal.of(Fraction(-1))
    concave = PAFunction1D.from_breakpoints([Fraction(0)], [Fraction(0)], r,
                                            left_slope=1, right_slope=0)
    flagged = ma_pa_curve(concave)
    assert flagged.flags


def test_dual_route_on_bundled_curve_inputs(data_dir, r):
    pairs = [("table_trivial_o1.json", "fam_isotrivial.json"),
             ("table_blowinf_L.json", "fam_kink.json"),
             ("table_blowinf_d21.json", "fam_d21.json")]
    for tname, fname in pairs:
        table = load_table(data_dir / "tables" / tname)
        family = load_family(data_dir / "families" / fname)
        assert family_limit_measure(family, r).same_atoms(ma_model_metric(table))


def test_profile_shapes(kink_family, r):
    prof = family_profile(kink_family, r)
    assert prof.is_convex()
    assert prof.slopes() == [Fraction(-1), Fraction(0)]
    kinks = prof.kinks()
    assert len(kinks) == 1 and kinks[0][0] == LogRVal.of(Fraction(-1))


def test_threesec_profile_atoms(data_dir, r):
    fam = load_family(data_dir / "families" / "fam_threesec.json")
    mu = family_limit_measure(fam, r)
    atoms = sorted(((a.u.rational_part(), a.mass) for a in mu.nonzero().atoms))
    assert atoms == [(Fraction(-1, 2), Fraction(1, 2)),
                     (Fraction(0), Fraction(1, 2))]


def test_constant_perturbation_moves_kink_exactly(kink_family, r):
    pert = kink_family.with_constant_shift(1, Fraction(1, 10))
    mu = family_limit_measure(pert, r)
    (atom,) = mu.nonzero().atoms
    # kink at u = -1 - (1/10)/log r: rational plus 1/log r part, exact
    assert atom.u == LogRVal(const=-1, invlogr=Fraction(-1, 10))


# ---------------------------------------------------------------------------
# complex grid route
# ---------------------------------------------------------------------------

def test_unit_circle_harmonic_measure(r):
    fam = CurveFamily(
        "isotriv", 1, 1,
        (FamilyEntry.build({0: 1}), FamilyEntry.build({1: 1})),
        (Chart(p=Fraction(0), name="main"),),
    )
    grids = ma_complex_curve(fam, complex(1e-3), 512, r)
    g = grids[0]
    assert g.total_mass == pytest.approx(1.0, abs=1e-4)
    assert g.negative_mass_floor() > -1e-9
    # mass concentrated on the unit circle, uniformly in angle
    n = g.resolution
    h = 2.0 * g.chart.L / n
    centers = -g.chart.L + h * (np.arange(n) + 0.5)
    X, Y = np.meshgrid(centers, centers, indexing="ij")
    rad = np.hypot(X, Y)
    near = np.abs(rad - 1.0) < 5 * h
    assert g.cell_masses[near].sum() == pytest.approx(1.0, abs=1e-3)
    ang = np.arctan2(Y, X)
    quad_masses = [g.cell_masses[(ang >= a) & (ang < a + math.pi / 2)].sum()
                   for a in (-math.pi, -math.pi / 2, 0.0, math.pi / 2)]
    for qm in quad_masses:
        assert qm == pytest.approx(0.25, abs=5e-3)


def test_lse_mode_total_mass(r):
    # the smooth variant spreads curvature over both standard charts
    fam = CurveFamily(
        "lse", 1, 1,
        (FamilyEntry.build({0: 1}), FamilyEntry.build({1: 1})),
        (Chart(p=Fraction(0), name="main", u_lo=0.0),
         Chart(p=Fraction(0), invert=True, name="inf", u_hi=0.0)),
        mode="lse",
    )
    grids = ma_complex_curve(fam, complex(1e-3), 1024, r)
    total = sum(g.total_mass for g in grids)
    assert total == pytest.approx(1.0, abs=1e-4)


def test_harmonic_chart_has_no_interior_mass(r):
    # single-section family: harmonic away from its zero at xi = 0
    fam = CurveFamily(
        "single", 1, 1, (FamilyEntry.build({1: 1}),),
        (Chart(p=Fraction(0), name="main"),),
    )
    grids = ma_complex_curve(fam, complex(1e-3), 512, r, check_mass=False)
    g = grids[0]
    n = g.resolution
    h = 2.0 * g.chart.L / n
    centers = -g.chart.L + h * (np.arange(n) + 0.5)
    X, Y = np.meshgrid(centers, centers, indexing="ij")
    away = np.hypot(X, Y) > 0.5
    # harmonic region: only five-point truncation error, no atoms
    assert np.abs(g.cell_masses[away]).max() < 1e-6
    assert abs(g.cell_masses[away].sum()) < 1e-5


def test_resolution_error_suggests_refinement(r):
    fam = CurveFamily(
        "kink", 1, 1,
        (FamilyEntry.build({0: 1}), FamilyEntry.build({1: 1}, q=1)),
        (Chart(p=Fraction(0), name="main", u_lo=-0.5),),  # adapted chart missing
    )
    with pytest.raises(ResolutionError) as exc:
        ma_complex_curve(fam, complex(1e-4), 128, r)
    assert exc.value.suggested_n == 256


def test_pushforward_dirac_locations(kink_family, r):
    grids = ma_complex_curve(kink_family, complex(1e-3), 512, r)
    cloud = combine_clouds([pushforward_log_radius(g) for g in grids])
    mean = float(np.sum(cloud.u * cloud.mass) / cloud.total())
    assert mean == pytest.approx(-1.0, abs=1e-3)
    spread = float(np.sqrt(np.sum(cloud.mass * (cloud.u - mean) ** 2)
                           / cloud.total()))
    assert spread < 5e-3


def test_pushforward_two_circles_additive(data_dir, r):
    fam = load_family(data_dir / "families" / "fam_threesec.json")
    grids = ma_complex_curve(fam, complex(1e-3), 512, r)
    cloud = combine_clouds([pushforward_log_radius(g) for g in grids])
    near0 = cloud.mass[np.abs(cloud.u) < 0.1].sum()
    nearhalf = cloud.mass[np.abs(cloud.u + 0.5) < 0.1].sum()
    assert near0 == pytest.approx(0.5, abs=1e-3)
    assert nearhalf == pytest.approx(0.5, abs=1e-3)


def test_wasserstein_exact_cases():
    assert wasserstein1_line([0.0], [1.0], [1.0], [1.0]) == pytest.approx(1.0)
    assert wasserstein1_line([0.0, 1.0], [0.5, 0.5], [0.0, 1.0],
                             [0.5, 0.5]) == pytest.approx(0.0)
    # normalization: total masses are matched before comparison
    assert wasserstein1_line([0.0], [2.0], [1.0], [2.0]) == pytest.approx(2.0)


# ---------------------------------------------------------------------------
# stability experiment pieces
# ---------------------------------------------------------------------------

def test_cln_zero_delta_and_antisymmetry(kink_family, r):
    assert pairing_difference(kink_family, kink_family, r).is_zero()
    pert = kink_family.with_constant_shift(1, Fraction(1, 7))
    x12 = cross_pairing(kink_family, pert, r)
    x21 = cross_pairing(pert, kink_family, r)
    assert x12 == (-1) * x21


def test_cln_linearity(kink_family, r):
    deltas = [Fraction(1, 10 ** k) for k in range(1, 5)]
    rep = cln_stability_check(kink_family, deltas, r)
    assert rep.failure is None
    assert rep.residual <= 0.05
    assert rep.antisymmetry_exact


def test_pairing_symmetry_on_bounded_profiles(r):
    f = PAFunction1D.from_breakpoints(
        [Fraction(-2), Fraction(-1), Fraction(0)],
        [Fraction(0), Fraction(1), Fraction(0)], r)
    g = PAFunction1D.from_breakpoints(
        [Fraction(-3), Fraction(1)], [Fraction(2), Fraction(5)], r)
    assert pa_signed_measure(g).pair_with(f) == pa_signed_measure(f).pair_with(g)


def test_convergence_monotone_down_to_1e6(kink_family, r):
    # module invariant: comparison error non-increasing for k = 2..6
    tests = {"ramp": PAFunction1D.from_breakpoints(
        [Fraction(-2), Fraction(0)], [Fraction(0), Fraction(1)], r)}
    from berkhyb.mongeampere import weak_convergence_experiment

    conv = weak_convergence_experiment(
        kink_family, [10.0 ** (-k) for k in range(2, 7)], tests, 512, r)
    assert conv.monotone
    w1s = [row.w1 for row in conv.rows]
    assert w1s[-1] < w1s[0]
