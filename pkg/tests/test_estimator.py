"""Channel coefficients, per-shot estimators, aggregation, bounds."""
import math
from fractions import Fraction

import numpy as np
import pytest

from coeff_oracle import brute_force_alpha_tilde, brute_force_c
from dualshadows.duality import DualityContext, parse_observable
from dualshadows.estimator import (
    channel_coeff,
    coeff_alpha,
    coeff_alpha_tilde,
    coeff_f,
    estimate_shot_dual_pairs,
    estimate_shot_product_type,
    filter_local,
    median_of_means,
    pair_count,
    sample_bound,
    variance_bound,
)
from dualshadows.lattice import build_lattice
from dualshadows.models import dual_ground_state, lgt_ground_state
from dualshadows.pauli import PauliString
from dualshadows.protocols import (
    DUAL_PRODUCT,
    GLOBAL_PAIRS,
    LOCAL_PAIRS,
    PRODUCT,
    DualSampler,
    ShadowRecord,
    TwoQubitUnitary,
    run_shot_product,
)
from dualshadows.statevec import expectation


def identity_2q():
    return TwoQubitUnitary(
        np.eye(4, dtype=complex), True,
        odd=np.eye(2, dtype=complex), even=np.eye(2, dtype=complex),
    )


def test_pair_count():
    assert pair_count(0) == 1
    assert pair_count(6) == 15
    assert pair_count(8) == 105
    assert pair_count(3) == 0


def test_coeff_f_examples():
    assert coeff_f(4, 0) == 1
    assert coeff_f(4, 2) == Fraction(1, 3)
    assert coeff_f(6, 2) == Fraction(1, 5)
    with pytest.raises(ValueError):
        coeff_f(4, 1)


def test_coeff_alpha_examples():
    assert coeff_alpha(4, 0) == 1
    assert coeff_alpha(1, 1) == Fraction(1, 3)
    assert coeff_alpha(2, 2) == Fraction(11, 27)


def test_coeff_alpha_tilde_examples():
    assert coeff_alpha_tilde(4, 0) == 1
    assert coeff_alpha_tilde(4, 1) == Fraction(1, 5)
    assert coeff_alpha_tilde(4, 2) == Fraction(7, 75)


def test_coefficients_match_brute_force_small():
    for v in (2, 4, 6):
        for w_xy in range(0, v + 1, 2):
            for w_z in range(0, v - w_xy + 1):
                w_i = v - w_xy - w_z
                want = brute_force_c(v, w_xy, w_z)
                got = (
                    coeff_f(v, w_xy)
                    * coeff_alpha(w_i, w_z)
                    / Fraction(3) ** (w_xy // 2)
                )
                assert got == want, (v, w_xy, w_z)
        for k in range(v + 1):
            assert coeff_alpha_tilde(v, k) == brute_force_alpha_tilde(v, k)


def test_channel_coeff_dispatch():
    lat = build_lattice(2, 2, "PBC")
    s = PauliString.from_ops(4, {0: "X", 1: "X"})
    c = channel_coeff(GLOBAL_PAIRS, s, lat)
    assert c.c == Fraction(1, 9)
    assert variance_bound(c) == pytest.approx(9.0)
    cp = channel_coeff(DUAL_PRODUCT, s)
    assert cp.c == Fraction(1, 9) and variance_bound(cp) == pytest.approx(16.0)
    loc = channel_coeff(LOCAL_PAIRS, s, lat, L=2)
    assert loc.f == Fraction(1, 3)
    fbc = build_lattice(3, 3, "FBC")
    cf = channel_coeff(GLOBAL_PAIRS, PauliString.from_ops(4, {0: "Z"}), fbc)
    assert cf.c == coeff_alpha_tilde(4, 1)


def test_identity_observable_coefficient_is_one():
    lat = build_lattice(2, 2, "PBC")
    ident = PauliString.identity(4)
    for proto in (GLOBAL_PAIRS, DUAL_PRODUCT, PRODUCT):
        extra = {"lat": lat} if proto == GLOBAL_PAIRS else {}
        c = channel_coeff(proto, ident, **extra)
        assert c.c == 1 and variance_bound(c) == pytest.approx(1.0)


def test_shot_estimate_two_site_example():
    rec = ShadowRecord(
        GLOBAL_PAIRS, 0,
        {"pairing": [(0, 1)], "unitaries": [identity_2q()]},
        s=0, b=0, n_s=0, n_b=2,
    )
    z0 = PauliString.from_ops(2, {0: "Z"})
    coeff = channel_coeff(GLOBAL_PAIRS, z0)
    assert coeff.c == Fraction(1, 3)
    assert estimate_shot_dual_pairs(rec, z0, coeff) == pytest.approx(3.0)
    ident = PauliString.identity(2)
    ci = channel_coeff(GLOBAL_PAIRS, ident)
    assert estimate_shot_dual_pairs(rec, ident, ci) == pytest.approx(1.0)


def test_shot_estimate_mixed_pair_is_zero():
    rec = ShadowRecord(
        GLOBAL_PAIRS, 0,
        {"pairing": [(0, 1), (2, 3)], "unitaries": [identity_2q(), identity_2q()]},
        s=0, b=0, n_s=0, n_b=4,
    )
    s = PauliString.from_ops(4, {0: "X", 2: "X"})
    coeff = channel_coeff(GLOBAL_PAIRS, s)
    assert estimate_shot_dual_pairs(rec, s, coeff) == 0.0


def test_product_type_shot_factors():
    rec = ShadowRecord(DUAL_PRODUCT, 0, {"bases": ["Z", "X"]}, s=0, b=0b00, n_s=0, n_b=2)
    z0 = PauliString.from_ops(2, {0: "Z"})
    assert estimate_shot_product_type(rec, z0, "dual") == pytest.approx(3.0)
    z1 = PauliString.from_ops(2, {1: "Z"})  # basis mismatch
    assert estimate_shot_product_type(rec, z1, "dual") == pytest.approx(0.0)
    # X-basis rotation exp(-i pi/4 Y) maps outcome bit 0 to the -1 branch
    x1 = PauliString.from_ops(2, {1: "X"})
    assert estimate_shot_product_type(rec, x1, "dual") == pytest.approx(-3.0)
    with pytest.raises(ValueError):
        estimate_shot_product_type(rec, z0, "lgt")


def test_unbiasedness_global_pairs_monte_carlo():
    lat = build_lattice(2, 2, "PBC")
    ctx = DualityContext(lat)
    ds = dual_ground_state(lat, 0.5)
    sampler = DualSampler(ctx, ds)
    obs = parse_observable(ctx, "ribbon: (0, 3)")
    coeff = channel_coeff(GLOBAL_PAIRS, obs.dual, lat)
    rng = np.random.default_rng(101)
    vals = []
    for k in range(20_000):
        rec = sampler.shot_global(rng, shot=k)
        vals.append(estimate_shot_dual_pairs(rec, obs.dual, coeff))
    vals = np.array(vals)
    exact = expectation(ds, obs.dual)
    se = vals.std(ddof=1) / math.sqrt(len(vals))
    assert abs(vals.mean() - exact) < 3 * se
    assert vals.var() <= variance_bound(coeff) + 5 * abs(vals**2).std() / math.sqrt(len(vals))


def test_unbiasedness_dual_product_monte_carlo():
    lat = build_lattice(2, 2, "PBC")
    ctx = DualityContext(lat, ancilla_mode=True)
    ds = dual_ground_state(lat, 0.5)
    sampler = DualSampler(ctx, ds)
    base = DualityContext(lat)
    obs = parse_observable(base, "loop: [0]")
    rng = np.random.default_rng(102)
    vals = []
    for k in range(20_000):
        rec = sampler.shot_dual_product(rng, shot=k)
        vals.append(estimate_shot_product_type(rec, obs.dual, "dual"))
    vals = np.array(vals)
    exact = expectation(ds, obs.dual)
    se = vals.std(ddof=1) / math.sqrt(len(vals))
    assert abs(vals.mean() - exact) < 3 * se


def test_unbiasedness_product_monte_carlo():
    lat = build_lattice(2, 2, "PBC")
    ctx = DualityContext(lat)
    gs = lgt_ground_state(lat, 0.5)
    obs = parse_observable(ctx, "loop: [0]")
    rng = np.random.default_rng(103)
    vals = []
    for k in range(20_000):
        rec = run_shot_product(gs, rng, shot=k)
        vals.append(estimate_shot_product_type(rec, obs.lgt, "lgt"))
    vals = np.array(vals)
    exact = expectation(gs, obs.lgt)
    se = vals.std(ddof=1) / math.sqrt(len(vals))
    assert abs(vals.mean() - exact) < 3 * se


def test_filter_local_fraction_and_errors():
    lat = build_lattice(4, 4, "PBC")
    ctx = DualityContext(lat)
    ds = dual_ground_state(lat, 0.5)
    sampler = DualSampler(ctx, ds)
    rng = np.random.default_rng(104)
    records = [sampler.shot_local(2, rng, shot=k) for k in range(2000)]
    support = [lat.plaq_id(0, 0)]
    kept, tiling, patch, patch_pairs = filter_local(records, lat, 2, support)
    frac = len(kept) / len(records)
    assert abs(frac - 0.25) < 3 * math.sqrt(0.25 * 0.75 / 2000)
    assert support[0] in tiling.patches[patch]
    assert len(patch_pairs) == 2
    # support straddling every tiling's patch boundary
    with pytest.raises(ValueError):
        filter_local(records, lat, 2, [lat.plaq_id(0, 0), lat.plaq_id(2, 0)])


def test_local_pairs_unbiased_monte_carlo():
    lat = build_lattice(4, 4, "PBC")
    ctx = DualityContext(lat)
    ds = dual_ground_state(lat, 0.5)
    sampler = DualSampler(ctx, ds)
    obs = parse_observable(ctx, "loop: [0]")
    coeff = channel_coeff(LOCAL_PAIRS, obs.dual, lat, L=2)
    rng = np.random.default_rng(105)
    records = [sampler.shot_local(2, rng, shot=k) for k in range(8000)]
    kept, tiling, patch, _ = filter_local(records, lat, 2, obs.dual.support())
    members = set(tiling.patches[patch])
    vals = []
    for r in kept:
        pairs = [p for p in r.payload["pairing"] if p[0] in members and p[1] in members]
        vals.append(estimate_shot_dual_pairs(r, obs.dual, coeff, pairs=pairs))
    vals = np.array(vals)
    exact = expectation(ds, obs.dual)
    se = vals.std(ddof=1) / math.sqrt(len(vals))
    assert abs(vals.mean() - exact) < 3 * se


def test_median_of_means_properties():
    est = median_of_means([2.5] * 100)
    assert est.value == 2.5 and est.n_blocks == 10
    vals = [0.0] * 99 + [1e6]
    est = median_of_means(vals)
    assert est.value == 0.0  # outlier confined to one block
    rng = np.random.default_rng(106)
    data = rng.normal(3.0, 1.0, size=10_000)
    est = median_of_means(data)
    assert abs(est.value - data.mean()) < 2 * (data.std() / math.sqrt(len(data)))
    with pytest.raises(ValueError):
        median_of_means([])


def test_asymptotic_coefficient_slopes():
    """log(f*alpha) vs log V slope approaches (w_Z - k_dual)/2."""
    cases = {(2, 0): -1.0, (2, 1): -1.0, (0, 1): 0.0}
    vs = [8, 16, 32, 64]
    for (w_xy, w_z), target in cases.items():
        ys = []
        for v in vs:
            fa = coeff_f(v, w_xy) * coeff_alpha(v - w_xy - w_z, w_z)
            ys.append(math.log(float(fa)))
        slope = np.polyfit(np.log(vs), ys, 1)[0]
        assert abs(slope - target) <= max(0.1 * abs(target), 0.05), (w_xy, w_z, slope)


def test_sample_bound():
    assert sample_bound(2, 0.1, 9.0) == pytest.approx(math.log(2) / 0.01 * 9.0)
    with pytest.raises(ValueError):
        sample_bound(2, 0.0, 1.0)
