import math

import numpy as np
import pytest

from jacobispec import checkers
from jacobispec.errors import SingularityError, UsageError
from jacobispec.model import custom, make_family

EX1 = dict(alpha=0.75, b=1.0)


def test_thm_a_example1_hand_values():
    rep = checkers.thm_a_witnesses(make_family("example1", **EX1), 0.0, 1.0, 100_000)
    w = rep.witnesses
    assert w["N_0"] == 1
    assert w["N_of_M"]["2"] == 2
    assert w["calN"]["1"] == 3 and w["bound"]["1"] == 3
    assert rep.passed and rep.assumed_index_Jmin == 0


def test_thm_a_n_of_m_formula():
    # independent: least n with (2n-1)^0.75 >= M for all later n (monotone sequence)
    rep = checkers.thm_a_witnesses(make_family("example1", **EX1), 0.0, [1.0, 5.0, 10.0], 1000)
    for a in (1.0, 5.0, 10.0):
        M = 2 * a
        n = next(k for k in range(1, 1000) if (2 * k - 1) ** 0.75 >= M)
        assert rep.witnesses["N_of_M"][checkers._key(M)] == n
        assert rep.witnesses["calN"][checkers._key(a)] == max(2, 2 * n - 1)


def test_thm_a_calN_monotone_in_a():
    f = make_family("example1", **EX1)
    a_vals = [0.5, 1, 2, 3, 5, 8, 13, 20]
    rep = checkers.thm_a_witnesses(f, 0.0, a_vals, 2000)
    cut = [rep.witnesses["calN"][checkers._key(a)] for a in a_vals]
    assert cut == sorted(cut)


def test_thm_a_hypothesis_failure():
    rep = checkers.thm_a_witnesses(make_family("scalar_power_diag", alpha=0.75, beta=0.3), 0.0, 1.0, 1000)
    assert not rep.passed
    assert rep.witnesses["N_0"] is None
    assert rep.witnesses["even_violation_index"] == 1000  # group index n of B_2n
    assert rep.verdicts["even_blocks_below_c"].startswith("fails")


def test_thm_a_prop6_flags_margin_route():
    rep = checkers.thm_a_witnesses(make_family("prop6"), 0.0, 1.0, 1000)
    assert not rep.passed
    assert any("check-b" in n for n in rep.notes)


def test_thm_a_input_checks():
    f = make_family("example1", **EX1)
    with pytest.raises(UsageError):
        checkers.thm_a_witnesses(f, 0.0, -1.0, 1000)
    with pytest.raises(UsageError):
        checkers.thm_a_witnesses(f, 0.0, 1.0, 50)


def test_prop1_examples():
    rep = checkers.prop1_check(make_family("prop1_example"), [1.0, 2.5, 10.0, 37.2], 1000)
    assert rep.passed
    for M in (1.0, 2.5, 10.0, 37.2):
        assert rep.witnesses[checkers._key(M)]["N"] == math.ceil(M)
    assert not checkers.prop1_check(make_family("example1", **EX1), [1.0], 1000).passed

    def blocks(n):
        j = (n + 1) // 2
        B = j * np.eye(2) if n % 2 else -j * np.eye(2)
        return np.eye(2), B

    rep = checkers.prop1_check(custom("blk2", 2, blocks), [1.0, 4.0], 200)
    assert rep.passed


def test_prop1_input_checks():
    with pytest.raises(UsageError):
        checkers.prop1_check(make_family("prop1_example"), [2.0, 1.0], 200)


def test_margin_sequences_scalar_oracle():
    f = make_family("prop5", alpha1=1, alpha2=1, beta1=1, beta2=1, C1=1, C2=1, D1=3, D2=3)
    s1, s2, _ = checkers.margin_sequences(f, 200)
    a, b = f.scalar_coefficients(400)
    n = np.arange(1, 201)
    ref1 = np.abs(a[2 * n - 1]) / np.sqrt(b[2 * n] * b[2 * n - 1])
    assert np.allclose(s1, ref1, rtol=1e-12)
    m = n[1:]
    ref2 = np.abs(a[2 * m - 2]) / np.sqrt(b[2 * m - 2] * b[2 * m - 1])
    assert np.allclose(s2[1:], ref2, rtol=1e-12)


def test_thm_b_prop5_limit():
    f = make_family("prop5", alpha1=1, alpha2=1, beta1=1, beta2=1, C1=1, C2=1, D1=3, D2=3)
    rep = checkers.thm_b_margins(f, 100_000)
    assert abs(rep.witnesses["tail_sum"] - 2 / 3) <= 0.05
    assert rep.verdicts["margin"] == "holds (< 1)"
    assert rep.passed


def test_thm_b_critical():
    f = make_family("prop5", alpha1=1, alpha2=1, beta1=1, beta2=1, C1=1, C2=1, D1=2, D2=2)
    rep = checkers.thm_b_margins(f, 100_000)
    assert rep.verdicts["margin"] == "fails (< 1 not satisfied)"
    assert any("critical" in n for n in rep.notes)
    assert not rep.passed


def test_thm_b_example1_zero_margins():
    rep = checkers.thm_b_margins(make_family("example1", **EX1), 1000)
    assert rep.witnesses["tail_sum"] == 0.0
    assert rep.verdicts["margin"] == "holds (< 1)"
    assert any("not invertible" in n for n in rep.notes)


def test_thm_b_window_monotone():
    f = make_family("prop6")
    sups = [checkers.thm_b_margins(f, 4000, w).witnesses["tail_sum"] for w in (10, 100, 1000, 3999)]
    assert all(x <= y for x, y in zip(sups, sups[1:]))


def test_thm_b_prop6_defaults_below_one():
    rep = checkers.thm_b_margins(make_family("prop6"), 20_000)
    assert rep.witnesses["tail_sum"] < 1
    assert rep.passed


def test_thm_b_nonpositive_odd_block_is_verdict():
    f = make_family("scalar_power", alpha=0.5)
    rep = checkers.thm_b_margins(f, 500)
    assert not rep.passed
    assert rep.verdicts["odd_divergent"].startswith("fails")


def test_margin_rows():
    rep = checkers.thm_b_margins(make_family("prop6"), 200)
    rows = list(checkers.margin_rows(rep))
    assert len(rows) == 200 and rows[0][0] == 1 and rows[0][2] == 0.0
    assert "sequences" not in rep.to_dict()


def test_schur_examples():
    r = checkers.schur_frobenius(np.eye(2), np.zeros((2, 2)), np.eye(2))
    assert (r.p1, r.p2, r.p3, r.equivalent) == (True, True, True, True)
    r = checkers.schur_frobenius([[1.0]], [[2.0]], [[1.0]])
    assert (r.p1, r.p3, r.equivalent) == (False, False, True)
    assert r.min_eig_schur == pytest.approx(-3.0)
    assert r.min_eig_full == pytest.approx(-1.0)


def test_schur_singular_c():
    with pytest.raises(SingularityError):
        checkers.schur_frobenius(np.eye(2), np.eye(2), np.diag([1.0, 0.0]))


def _herm(rng, n, shift):
    X = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return 0.5 * (X + X.conj().T) + shift * np.eye(n)


def test_schur_random_against_dense_oracle(rng):
    seen = set()
    for _ in range(200):
        p, q = rng.integers(1, 9, size=2)
        A = _herm(rng, p, rng.uniform(-1, 5))
        X = rng.standard_normal((q, q)) + 1j * rng.standard_normal((q, q))
        C = X @ X.conj().T / q + 0.1 * np.eye(q)
        B = rng.standard_normal((p, q)) + 1j * rng.standard_normal((p, q))
        r = checkers.schur_frobenius(A, B, C)
        full = np.block([[A, B], [B.conj().T, C]])
        p1 = np.linalg.eigvalsh(full)[0] >= -1e-10
        assert r.p1 == p1 and r.equivalent
        seen.add(p1)
    assert seen == {True, False}


def test_schur_modF_examples():
    A = np.diag([-5.0, 1.0, 2.0])
    r = checkers.schur_frobenius_modF(A, np.zeros((3, 2)), np.eye(2), 1)
    assert r.p1 and r.p2 and r.p3 and r.equivalent
    r0 = checkers.schur_frobenius_modF(A, np.zeros((3, 2)), np.eye(2), 0)
    ref = checkers.schur_frobenius(A, np.zeros((3, 2)), np.eye(2))
    assert (r0.p1, r0.p2, r0.p3) == (ref.p1, ref.p2, ref.p3) == (False, False, False)


def test_schur_modF_kernel_lift():
    r = checkers.schur_frobenius_modF(np.eye(2), np.zeros((2, 2)), np.diag([1.0, 0.0]), 0)
    assert r.kernel_fixed == 1 and r.equivalent


def test_schur_modF_matches_rank0(rng):
    for _ in range(100):
        p, q = rng.integers(1, 7, size=2)
        A = _herm(rng, p, rng.uniform(-1, 4))
        X = rng.standard_normal((q, q))
        C = X @ X.T / q + 0.1 * np.eye(q)
        B = rng.standard_normal((p, q))
        a = checkers.schur_frobenius(A, B, C)
        b = checkers.schur_frobenius_modF(A, B, C, 0)
        assert (a.p1, a.p2, a.p3) == (b.p1, b.p2, b.p3)


def test_positivity_probe_example1():
    f = make_family("example1", **EX1)
    cut = checkers.thm_a_witnesses(f, 0.0, 2.0, 1000).witnesses["calN"]["2"]
    probe = checkers.form_positivity_probe(f, 2.0, 0.0, 200, (cut, cut + 200), seed=3)
    assert probe.passed and probe.min_quotient >= -1e-8
    assert probe.failing_vector is None


def test_positivity_probe_quotient_exact():
    # independent dense evaluation of ((T - a)^2 - a^2) on a single odd block
    f = make_family("example1", **EX1)
    a = 2.0
    cut = checkers.thm_a_witnesses(f, 0.0, a, 1000).witnesses["calN"]["2"]
    k = cut + 1 if (cut + 1) % 2 == 1 else cut + 2   # 1-based odd block index
    probe = checkers.form_positivity_probe(f, a, 0.0, 1, (k - 1, k), seed=0)
    a_, b_ = f.scalar_coefficients(k + 1)
    # u = e_k: |(T - a) e_k|^2 = a_{k-1}^2 + (b_k - a)^2 + a_k^2
    ref = a_[k - 1] ** 2 + (b_[k] - a) ** 2 + a_[k] ** 2 - a * a
    assert probe.min_quotient == pytest.approx(ref, rel=1e-12)
    assert b_[k] >= 4 * a or ref >= 0


def test_positivity_probe_precondition():
    f = make_family("example1", **EX1)
    with pytest.raises(UsageError):
        checkers.form_positivity_probe(f, 2.0, 0.0, 10, (0, 50))


def test_positivity_probe_two_sided_family():
    f = make_family("prop1_example")
    cut = checkers.thm_a_witnesses(f, 0.0, 1.0, 1000).witnesses["calN"]["1"]
    probe = checkers.form_positivity_probe(f, 1.0, 0.0, 50, (cut, cut + 20), seed=1)
    assert probe.passed


def test_empirical_bound_rows():
    f = make_family("example1", **EX1)
    rows = checkers.empirical_bound_check(f, 0.0, [1.0, 5.0], [200, 400])
    assert len(rows) == 4 and all(r["ok"] for r in rows)
    for r in rows:
        assert r["bound"] == r["calN"] + 1
