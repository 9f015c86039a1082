import math

import numpy as np
import pytest

from jacobispec import transfer
from jacobispec.errors import DependentSolutionsError, InputDomainError, UsageError
from jacobispec.model import custom_scalar, make_family

STEP3 = dict(alpha=0.75, delta=1.0)


def free_family():
    return custom_scalar("free", lambda n: np.ones_like(n), lambda n: np.zeros_like(n))


def hand_step(a, b, n, lam):
    return np.array([[0.0, 1.0], [-a[n - 1] / a[n], (lam - b[n]) / a[n]]])


def test_transfer_step_examples():
    T = transfer.transfer_step(make_family("scalar_power", alpha=1.0), 2, 0.0)
    assert np.allclose(T.matrix, [[0, 1], [-0.5, 0]], atol=1e-16)
    T = transfer.transfer_step(make_family("step3", **STEP3), 3, 2.0)
    assert T.matrix[0, 0] == 0 and T.matrix[0, 1] == 1
    assert T.matrix[1, 0] == pytest.approx(-(2 / 3) ** 0.75, rel=1e-14)
    assert T.matrix[1, 1] == pytest.approx((2 - 3 ** 0.75) / 3 ** 0.75, rel=1e-14)


def test_transfer_step_det(rng):
    f = make_family("example1", alpha=0.75, b=1.0)
    a, _ = f.scalar_coefficients(2000)
    for n, lam in zip(rng.integers(2, 2000, 100), rng.uniform(-10, 10, 100)):
        assert transfer.transfer_step(f, int(n), lam).det == pytest.approx(a[n - 1] / a[n], rel=1e-13)


def test_transfer_step_guards():
    with pytest.raises(UsageError):
        transfer.transfer_step(make_family("prop6"), 3, 0.0)
    with pytest.raises(UsageError):
        transfer.transfer_step(make_family("step3", **STEP3), 1, 0.0)
    with pytest.raises(UsageError):
        transfer.kstep_product(make_family("step3", **STEP3), 5, 4, 0.0)


def test_kstep_matches_hand_products():
    f = make_family("step3", **STEP3)
    a, b = f.scalar_coefficients(40)
    for n in range(2, 13):
        for lam in (-2.0, 1.0, 5.0):
            ref = hand_step(a, b, 3 * n, lam) @ hand_step(a, b, 3 * n - 1, lam) @ hand_step(a, b, 3 * n - 2, lam)
            assert np.allclose(transfer.kstep_product(f, n, 3, lam).matrix, ref, rtol=1e-14, atol=1e-15)


def test_kstep_det_multiplicative(rng):
    f = make_family("heuristic2step", alpha=0.8, beta=0.3)
    for n in rng.integers(2, 5000, 50):
        n = int(n)
        lam = float(rng.uniform(-5, 5))
        S = transfer.kstep_product(f, n, 2, lam)
        dets = transfer.transfer_step(f, 2 * n, lam).det * transfer.transfer_step(f, 2 * n - 1, lam).det
        assert abs(S.det - dets) <= 1e-12 * abs(dets)


def test_step3_det_closed_form():
    f = make_family("step3", **STEP3)
    ns = np.arange(2, 501)
    for lam in (-2.0, 1.0, 5.0):
        det = transfer.det2(transfer.kstep_products(f, ns, 3, lam))
        assert np.abs(det - (1 - 1 / ns) ** 0.75).max() <= 1e-12


def test_step3_trace_expansion():
    f = make_family("step3", **STEP3)
    ns = np.arange(10, 10_001)
    S = transfer.kstep_products(f, ns, 3, 1.0)
    tr = (S[:, 0, 0] + S[:, 1, 1]).real
    x = 3.0 * ns
    err = np.abs(tr - (1 - 3 / x ** 0.75 - 0.75 / x))
    assert np.max(err * ns ** 1.5) <= 10


def test_heuristic_first_row():
    al, be, lam = 0.8, 0.3, 1.5
    f = make_family("heuristic2step", alpha=al, beta=be)
    for n in (2, 10, 333):
        S = transfer.kstep_product(f, n, 2, lam).matrix
        assert S[0, 0] == pytest.approx(-((2 * n - 2) / (2 * n - 1)) ** al, rel=1e-12)
        assert S[0, 1] == pytest.approx((lam - (2 * n - 1) ** be) / (2 * n - 1) ** al, rel=1e-12)


def test_heuristic_cancellation_witness():
    al, be, lam, n = 0.8, 0.3, 1.0, 100_000
    f = make_family("heuristic2step", alpha=al, beta=be)
    S = transfer.kstep_product(f, n, 2, lam)
    disc = (S.trace / 2) ** 2 - S.det
    ratio = disc.real * (2 * n) ** (2 * al) / (lam * (2 * n - 1) ** be)
    assert abs(ratio - 1) <= 0.1


def test_eig_2x2_examples():
    p, q = transfer.eig_2x2(np.array([[0, -1], [1, 1]]))
    assert {complex(round(z.real, 14), round(z.imag, 14)) for z in (p, q)} == {
        complex(0.5, round(math.sqrt(3) / 2, 14)), complex(0.5, -round(math.sqrt(3) / 2, 14))}
    assert abs(p) == pytest.approx(1) and abs(q) == pytest.approx(1)
    assert transfer.eig_2x2(np.eye(2)) == (1, 1)
    with pytest.raises(InputDomainError):
        transfer.eig_2x2(np.array([[np.nan, 0], [0, 1]]))


def test_eig_2x2_reconstruction(rng):
    M = rng.standard_normal((500, 2, 2)) + 1j * rng.standard_normal((500, 2, 2))
    M[::7] *= 1e6
    p, q = transfer.eig_2x2_stack(M)
    scale = np.abs(M).max(axis=(1, 2))
    assert np.all(np.abs(p + q - (M[:, 0, 0] + M[:, 1, 1])) <= 1e-12 * scale * 10)
    assert np.all(np.abs(p * q - transfer.det2(M)) <= 1e-12 * scale ** 2 * 10)


def test_modulus_identity_step3():
    f = make_family("step3", **STEP3)
    ns = np.arange(5, 501)
    S = transfer.kstep_products(f, ns, 3, 1.0)
    p, q = transfer.eig_2x2_stack(S)
    h = 0.5 * (S[:, 0, 0] + S[:, 1, 1])
    det = transfer.det2(S)
    neg = (h * h - det).real < 0
    assert neg.sum() > 0
    assert np.abs(np.abs(p[neg]) ** 2 - det[neg].real).max() <= 1e-10
    # the moduli are (1-1/n)^(alpha/2), not (1-1/n)^alpha
    assert np.allclose(np.abs(p[neg]), (1 - 1 / ns[neg]) ** 0.375, atol=1e-10)


def test_split_sums_back():
    f = make_family("step3", **STEP3)
    S, V, R = transfer.split(f, np.arange(10, 50), 1.0)
    assert np.allclose(V + R, S)
    with pytest.raises(UsageError):
        transfer.split(make_family("example1", alpha=0.75, b=1.0), [5], 1.0)


def test_levinson_step3_delta1():
    f = make_family("step3", **STEP3)
    ns = np.arange(10, 10_001)
    _, V, R = transfer.split(f, ns, 1.0)
    rep = transfer.levinson_hypotheses(V, R, (10, 10_000))
    assert rep.bv_exponent <= -1.0
    assert abs(rep.l1_exponent + 1.5) <= 0.1
    assert rep.verdicts["limit_eigenvalues"] == "fails (distinct eigenvalues, equal moduli)"
    assert rep.moduli[0] == pytest.approx(1, abs=1e-3) and rep.eig_distance > 1
    assert rep.verdicts["bounded_variation"] == "holds"
    assert rep.verdicts["remainder_l1"] == "holds"


def test_levinson_step3_delta3():
    f = make_family("step3", alpha=0.75, delta=3.0)
    ns = np.arange(10, 10_001)
    _, V, R = transfer.split(f, ns, 1.0)
    rep = transfer.levinson_hypotheses(V, R, (10, 10_000))
    assert all(v == "holds" for v in rep.verdicts.values())
    ref = sorted([(3 - math.sqrt(5)) / 2, (3 + math.sqrt(5)) / 2])
    assert sorted(rep.moduli) == pytest.approx(ref, abs=1e-2)


def test_levinson_partial_sums_monotone():
    f = make_family("step3", **STEP3)
    prev = (0.0, 0.0)
    for hi in (100, 1000, 5000):
        ns = np.arange(10, hi + 1)
        _, V, R = transfer.split(f, ns, 1.0)
        rep = transfer.levinson_hypotheses(V, R, (10, hi))
        assert rep.bv_sum >= prev[0] and rep.l1_sum >= prev[1]
        prev = (rep.bv_sum, rep.l1_sum)


def test_recursion_period_four():
    u = transfer.solve_recursion(free_family(), 0.0, (1, 0), 12)
    assert np.allclose(u.values()[1:], [1, 0, -1, 0, 1, 0, -1, 0, 1, 0, -1, 0])


def test_recursion_matches_plain_loop():
    f = make_family("step3", **STEP3)
    a, b = f.scalar_coefficients(60)
    u = [0.0, 1.0, 0.3]
    for n in range(2, 60):
        u.append(((1.0 - b[n]) * u[n] - a[n - 1] * u[n - 1]) / a[n])
    path = transfer.solve_recursion(f, 1.0, (1.0, 0.3), 60)
    assert np.allclose(path.values()[1:], u[1:61], rtol=1e-12)


@pytest.mark.parametrize("direction,init", [("forward", (1, 0)), ("forward", (0.2, 1)),
                                            ("backward", (1, 1e-30))])
def test_recursion_residuals(direction, init):
    f = make_family("example1", alpha=0.75, b=1.0)
    path = transfer.solve_recursion(f, 1.0, init, 10_000, direction)
    assert np.max(path.residuals()) <= 1e-9


def test_backward_shot_decays_towards_small_n():
    f = make_family("example1", alpha=0.75, b=1.0)
    path = transfer.solve_recursion(f, 1.0, (1, 1e-30), 10_000, "backward")
    lm = path.log_modulus()
    # largest near n = 1, decaying toward the shooting end
    assert lm[100] - lm[9000] > 10


def test_log_scaling_survives_growth():
    f = make_family("example1", alpha=0.75, b=1.0)
    path = transfer.solve_recursion(f, 1.0, (1, 0.3), 100_000)
    lm = path.log_modulus()
    assert np.all(np.isfinite(lm[1:]))
    assert lm[-1] > 700   # beyond double range without log scaling
    rows = list(path.rows())
    assert all(math.isfinite(r[1]) and math.isfinite(r[2]) for r in rows)


def test_wronskian_constant():
    f = make_family("step3", **STEP3)
    u = transfer.solve_recursion(f, 1.0, (1, 0), 2000)
    v = transfer.solve_recursion(f, 1.0, (0, 1), 2000)
    w = transfer.wronskian_sequence(u, v)
    assert np.abs(w - w[0]).max() <= 1e-8 * abs(w[0])


def test_subordinacy_trends():
    g = make_family("step3", **STEP3)
    u = transfer.solve_recursion(g, 1.0, (1, 0), 10_000)
    v = transfer.solve_recursion(g, 1.0, (0, 1), 10_000)
    tr = transfer.subordinacy_ratio(u, v)
    assert tr.trend == "bounded-oscillating"
    assert all(r > 0 for r in tr.ratios)
    e = make_family("example1", alpha=0.75, b=1.0)
    dec = transfer.solve_recursion(e, 1.0, (1, 1e-30), 10_000, "backward")
    gen = transfer.solve_recursion(e, 1.0, (1, 0.3), 10_000)
    assert transfer.subordinacy_ratio(dec, gen).trend == "to-zero"


def test_subordinacy_ratio_oracle():
    f = make_family("step3", **STEP3)
    u = transfer.solve_recursion(f, 1.0, (1, 0), 500)
    v = transfer.solve_recursion(f, 1.0, (0, 1), 500)
    tr = transfer.subordinacy_ratio(u, v, checkpoints=[10, 100, 500])
    uv, vv = u.values(), v.values()
    ref = [np.sum(np.abs(uv[1:N + 1]) ** 2) / np.sum(np.abs(vv[1:N + 1]) ** 2) for N in (10, 100, 500)]
    assert np.allclose(tr.ratios, ref, rtol=1e-12)


def test_subordinacy_dependent():
    f = make_family("step3", **STEP3)
    u = transfer.solve_recursion(f, 1.0, (1, 0), 500)
    with pytest.raises(DependentSolutionsError):
        transfer.subordinacy_ratio(u, u)


def test_log_product_examples():
    assert transfer.log_product(lambda k: np.ones(k.shape), 1, 100) == (0.0, 0.0)
    n0, n = 2, 10_000
    lm, _ = transfer.log_product(lambda k: (1 - 1 / k) ** 0.375, n0, n)
    # telescoping: prod_{k=n0}^{n-1} (k-1)/k = (n0-1)/(n-1)
    assert lm == pytest.approx(0.375 * math.log((n0 - 1) / (n - 1)), abs=1e-10)
    with pytest.raises(InputDomainError, match="k = 5"):
        transfer.log_product([1, 1, 1, 0, 1], 2, 7)


def test_log_product_drift_exponent():
    al, be, lam = 0.8, 0.3, 1.0
    g = al - be / 2
    ns = np.geomspace(1e4, 1e6, 9).astype(int)
    L = [transfer.log_product(lambda k: -1 + al / (2 * k) - math.sqrt(lam) / (2 * k) ** g, 1, n)[0]
         for n in ns]
    slope = np.polyfit(np.log(ns), np.log(np.abs(L)), 1)[0]
    assert abs(slope - (1 - g)) <= 0.05


def test_log_product_no_overflow():
    lm, ph = transfer.log_product(lambda k: 2.0 * np.exp(1j * np.ones(k.shape)), 1, 10_000_001)
    assert lm == pytest.approx(1e7 * math.log(2), rel=1e-12)
    assert ph == pytest.approx(1e7, rel=1e-12)
