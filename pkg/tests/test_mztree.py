import random
from fractions import Fraction

import pytest

from berkhyb.exactnum import PrimeLogVal
from berkhyb.mztree import (
    NEG_INF,
    BranchPA,
    MZFunction,
    MZPoint,
    mz_family_identity,
    mz_from_family,
    mz_fs_eval,
    mz_psh_check,
    mz_slopes,
    random_fs_family,
)


FAM23 = [(2, Fraction(0)), (3, Fraction(0))]


def test_point_validation():
    MZPoint("origin")
    MZPoint("inf", Fraction(1, 2))
    MZPoint("7", Fraction(3))
    MZPoint("7", "inf")
    with pytest.raises(ValueError):
        MZPoint("4", Fraction(1))
    with pytest.raises(ValueError):
        MZPoint("inf", Fraction(3, 2))
    with pytest.raises(ValueError):
        MZPoint("origin", Fraction(1))


def test_fs_eval_worked_examples():
    # {(2,0),(3,0)}: the 3-term dominates on the 2-branch, value 0
    assert mz_fs_eval(FAM23, 1, MZPoint("2", Fraction(9, 2))).is_zero()
    # archimedean: max(x log 2, x log 3) = x log 3
    v = mz_fs_eval(FAM23, 1, MZPoint("inf", Fraction(1, 2)))
    assert v == PrimeLogVal(0, {3: Fraction(1, 2)})
    assert mz_fs_eval(FAM23, 1, MZPoint("origin")).is_zero()
    with pytest.raises(ValueError):
        mz_fs_eval([(0, Fraction(0))], 1, MZPoint("origin"))


def test_slopes_of_single_two_family():
    rep = mz_slopes(mz_from_family([(2, Fraction(0))], 1))
    assert rep.s_p[2] == PrimeLogVal(0, {2: -1})
    assert rep.s_inf == PrimeLogVal(0, {2: 1})
    assert rep.slope_sum.is_zero()
    assert rep.end_values[2] == NEG_INF  # polar end witness


def test_pluripolar_witness_eval():
    assert mz_fs_eval([(2, Fraction(0))], 1, MZPoint("2", "inf")) == NEG_INF


def test_constant_function_passes():
    f = MZFunction(Fraction(0), {},
                   BranchPA((Fraction(0),), (Fraction(0),)),
                   BranchPA((Fraction(0),), (Fraction(0),)))
    rep = mz_slopes(f)
    assert rep.slope_sum.is_zero() and rep.s_inf.is_zero()
    assert mz_psh_check(f).passed


def test_crafted_slope_sum_violator():
    viol = MZFunction(Fraction(0),
                      {2: BranchPA((Fraction(-1),), (Fraction(0),))},
                      BranchPA((Fraction(0),), (Fraction(0),)),
                      BranchPA((Fraction(0),), (Fraction(0),)))
    verdict = mz_psh_check(viol)
    assert not verdict.passed
    assert any("slope-sum" in reason for reason in verdict.reasons)


def test_concave_kink_on_branch_five():
    f = MZFunction(
        Fraction(0),
        {5: BranchPA((Fraction(-1), Fraction(-3)),
                     (Fraction(0), Fraction(2)), (Fraction(1),))},
        BranchPA((Fraction(2),), (Fraction(0),)),
        BranchPA((Fraction(0),), (Fraction(0),)),
    )
    verdict = mz_psh_check(f)
    assert not verdict.passed
    assert any("branch 5" in reason for reason in verdict.reasons)


def test_generated_families_pass_and_identity():
    rng = random.Random(991)
    for _ in range(20):
        fam = random_fs_family(rng)
        m = rng.choice([1, 2, 3])
        F = mz_from_family(fam, m)
        verdict = mz_psh_check(F)
        assert verdict.passed, (fam, verdict.reasons)
        ident = mz_family_identity(fam, m, verdict.report)
        assert ident.slope_sum_matches_direct, fam


def test_lcm_discrepancy_surfaced():
    rep = mz_slopes(mz_from_family(FAM23, 1))
    ident = mz_family_identity(FAM23, 1, rep)
    # direct slope is log 3; the lcm closed form would claim log 6
    assert rep.slope_sum == PrimeLogVal(0, {3: 1})
    assert ident.n2_direct == 3 and ident.n2_lcm == 6
    assert ident.lcm_form_differs
    assert ident.slope_sum_matches_direct


def eval_p_branch(pa: BranchPA, p: int, eps: Fraction) -> PrimeLogVal:
    """Evaluate sigma-parametrized branch data at eps, certified piece lookup."""
    idx = 0
    # sigma = eps * log p against rational cuts: sign of eps*log p - cut
    while idx < len(pa.cuts) and \
            PrimeLogVal(-pa.cuts[idx], {p: eps}).sign() > 0:
        idx += 1
    return PrimeLogVal(pa.consts[idx], {p: pa.slopes[idx] * eps})


def test_branch_values_agree_with_envelope():
    fam = [(12, Fraction(0)), (5, Fraction(-1)), (9, Fraction(1, 2))]
    m = 2
    F = mz_from_family(fam, m)
    for p in (2, 3, 5):
        for eps in (Fraction(0), Fraction(1, 3), Fraction(2), Fraction(10)):
            direct = mz_fs_eval(fam, m, MZPoint(str(p), eps))
            assert eval_p_branch(F.branches[p], p, eps) == direct
    # archimedean endpoint value x=1 equals max(log|n| + c)/m
    direct1 = mz_fs_eval(fam, m, MZPoint("inf", Fraction(1)))
    last = F.arch.slopes[-1] * Fraction(1) + PrimeLogVal.of(F.arch.consts[-1])
    assert direct1 == last


def test_default_branch_slope_must_vanish():
    f = MZFunction(Fraction(0), {},
                   BranchPA((Fraction(0),), (Fraction(0),)),
                   BranchPA((Fraction(-1),), (Fraction(0),)))
    verdict = mz_psh_check(f)
    assert not verdict.passed
    assert any("default" in reason for reason in verdict.reasons)


def test_origin_agreement_enforced():
    with pytest.raises(ValueError):
        MZFunction(Fraction(1), {},
                   BranchPA((Fraction(0),), (Fraction(0),)),
                   BranchPA((Fraction(0),), (Fraction(1),)))


def test_json_shape():
    F = mz_from_family(FAM23, 1)
    data = F.to_json()
    assert set(data["branches"]) == {"2", "3", "inf", "default"}
    assert data["origin"] == "0"
