"""Channel inversion and shot aggregation for the shadow protocols.

Coefficients are exact rationals: every protocol's measurement channel is
diagonal in the Pauli basis, so inverting it is a single division per
observable. Per-shot estimates are then plain products of small quadratic
forms over the stored randomization.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .lattice import BC, Lattice, Tiling, enumerate_tilings
from .pauli import _SIGMA, PauliString
from .protocols import (
    DUAL_PRODUCT,
    GLOBAL_PAIRS,
    LOCAL_PAIRS,
    PRODUCT,
    U_BASIS,
    ShadowRecord,
)


@lru_cache(maxsize=None)
def pair_count(m: int) -> int:
    """Number of perfect pairings of m items: (m-1)!! for even m, else 0."""
    if m < 0:
        raise ValueError("negative count")
    if m % 2:
        return 0
    out = 1
    for k in range(m - 1, 0, -2):
        out *= k
    return out


def coeff_f(v: int, w_xy: int) -> Fraction:
    """Fraction of pairings keeping all X/Y sites matched among themselves."""
    if v % 2 or w_xy % 2:
        raise ValueError("v and w_xy must be even")
    if w_xy > v:
        raise ValueError("w_xy exceeds v")
    return Fraction(pair_count(w_xy) * pair_count(v - w_xy), pair_count(v))


def coeff_alpha(w_i: int, w_z: int) -> Fraction:
    """Average pair weight over the I/Z sites: ZZ and II pairs count 1,
    mixed IZ pairs 1/3, summed over the number m of mixed pairs."""
    if (w_i + w_z) % 2:
        raise ValueError("w_i + w_z must be even")
    total = Fraction(0)
    for m in range(w_z % 2, min(w_i, w_z) + 1, 2):
        total += (
            Fraction(1, 3**m)
            * math.comb(w_z, m)
            * math.comb(w_i, m)
            * math.factorial(m)
            * pair_count(w_z - m)
            * pair_count(w_i - m)
        )
    return total / pair_count(w_i + w_z)


def coeff_alpha_tilde(v: int, k_dual: int) -> Fraction:
    """Full-2-design analogue: every pair touching the support weighs 1/5;
    m counts support pairs matched internally (each saves one factor)."""
    if v % 2:
        raise ValueError("v must be even")
    if not 0 <= k_dual <= v:
        raise ValueError("k_dual out of range")
    total = Fraction(0)
    for m in range(0, k_dual // 2 + 1):
        if k_dual - 2 * m > v - k_dual:
            continue
        total += (
            Fraction(1, 5 ** (k_dual - m))
            * math.comb(k_dual, 2 * m)
            * pair_count(2 * m)
            * math.comb(v - k_dual, k_dual - 2 * m)
            * math.factorial(k_dual - 2 * m)
            * pair_count(v - 2 * k_dual + 2 * m)
        )
    return total / pair_count(v)


@dataclass(frozen=True)
class ChannelCoeff:
    protocol: str
    f: Fraction
    alpha: Fraction
    power3: int  # w_XY / 2 exponent of the X/Y attenuation
    c: Fraction

    def __post_init__(self):
        if not 0 < self.c <= 1:
            raise ValueError(f"unsupported observable: channel coefficient {self.c}")


def channel_coeff(
    protocol: str,
    s_dual: PauliString,
    lat: Lattice | None = None,
    L: int | None = None,
) -> ChannelCoeff:
    """Exact inversion coefficient of the given protocol for a dual string.

    For the product baseline pass the LGT-side string instead; for local
    pairs, weights are patch-restricted (support must fit one LxL patch).
    """
    one = Fraction(1)
    w_i, w_x, w_y, w_z = s_dual.weights()
    w_xy = w_x + w_y
    if protocol == GLOBAL_PAIRS:
        if lat is not None and lat.bc is BC.FBC:
            at = coeff_alpha_tilde(s_dual.n + s_dual.n % 2, s_dual.weight)
            return ChannelCoeff(protocol, one, at, 0, at)
        f = coeff_f(s_dual.n, w_xy)
        a = coeff_alpha(w_i, w_z)
        return ChannelCoeff(protocol, f, a, w_xy // 2, f * a / 3 ** (w_xy // 2))
    if protocol == LOCAL_PAIRS:
        if L is None:
            raise ValueError("local pairs coefficient needs the patch size L")
        patch = L * L
        f = coeff_f(patch, w_xy)
        a = coeff_alpha(patch - w_xy - w_z, w_z)
        return ChannelCoeff(protocol, f, a, w_xy // 2, f * a / 3 ** (w_xy // 2))
    if protocol in (DUAL_PRODUCT, PRODUCT):
        k = s_dual.weight
        return ChannelCoeff(protocol, one, one, 0, Fraction(1, 3**k))
    raise ValueError(f"unknown protocol {protocol!r}")


# -- per-shot estimators ----------------------------------------------

_SIGMA2 = {
    (a, b): np.kron(_SIGMA[a], _SIGMA[b]) for a in "IXYZ" for b in "IXYZ"
}


def _pair_form(u_matrix: np.ndarray, m: np.ndarray, idx: int) -> float:
    """<idx| U m U^dag |idx> for a 4x4 unitary and Hermitian m."""
    v = u_matrix.conj().T[:, idx]
    val = np.vdot(v, m @ v)
    return float(val.real)


def estimate_shot_dual_pairs(
    record: ShadowRecord,
    s_dual: PauliString,
    coeff: ChannelCoeff,
    pairs: list[tuple[int, int]] | None = None,
) -> float:
    """(1/c) times the product of two-site quadratic forms over the pairs
    touching the observable's support; untouched pairs contribute 1."""
    if record.protocol not in (GLOBAL_PAIRS, LOCAL_PAIRS):
        raise ValueError(f"record from {record.protocol}, not a dual-pairs protocol")
    if not s_dual.is_hermitian():
        raise ValueError("observable must be Hermitian")
    pairing = record.payload["pairing"]
    unis = {tuple(sorted(p)): u for p, u in zip(pairing, record.payload["unitaries"])}
    if pairs is None:
        pairs = pairing
    out = float(s_dual.phase_value().real)
    for i, j in pairs:
        oi, oj = s_dual.op_at(i), s_dual.op_at(j)
        if oi == "I" and oj == "I":
            continue
        m = _SIGMA2[(oi, oj)]  # i is the more significant label
        idx = 2 * ((record.b >> i) & 1) + ((record.b >> j) & 1)
        out *= _pair_form(unis[(i, j)].matrix, m, idx)
    return out / float(coeff.c)


def estimate_shot_product_type(
    record: ShadowRecord, s: PauliString, side: str
) -> float:
    """prod over support of 3 * <b_j| u_j S_j u_j^dag |b_j> on the chosen side."""
    if side == "dual":
        if record.protocol != DUAL_PRODUCT:
            raise ValueError("dual-side estimation needs a dual product record")
        bits, nbits = record.b, record.n_b
    elif side == "lgt":
        if record.protocol != PRODUCT:
            raise ValueError("lgt-side estimation needs a product record")
        bits, nbits = record.s, record.n_s
    else:
        raise ValueError(f"unknown side {side!r}")
    if s.n != nbits:
        raise ValueError("observable register size mismatch")
    if not s.is_hermitian():
        raise ValueError("observable must be Hermitian")
    bases = record.payload["bases"]
    out = float(s.phase_value().real)
    for q in s.support():
        u = U_BASIS[bases[q]]
        m = u @ _SIGMA[s.op_at(q)] @ u.conj().T
        out *= 3.0 * float(m[(bits >> q) & 1, (bits >> q) & 1].real)
    return out


def filter_local(
    records: list[ShadowRecord], lat: Lattice, L: int, support: list[int]
) -> tuple[list[ShadowRecord], Tiling, int, list[tuple[int, int]]]:
    """Keep the records of the smallest tiling whose patches contain the
    support, and return that tiling, the containing patch id, and a function
    of the retained pairing restricted to the patch (as explicit pairs)."""
    tilings = enumerate_tilings(lat, L)
    choice = None
    for tid, t in enumerate(tilings):
        pids = {t.patch_of[p] for p in support}
        if len(pids) == 1:
            choice = (tid, t, pids.pop())
            break
    if choice is None:
        raise ValueError("observable support fits in no patch of any tiling")
    tid, tiling, patch = choice
    kept = [r for r in records if r.payload["tiling"] == tid]
    members = set(tiling.patches[patch])
    patch_pairs = None
    if kept:
        patch_pairs = [
            p for p in kept[0].payload["pairing"] if p[0] in members and p[1] in members
        ]
    return kept, tiling, patch, patch_pairs


# -- aggregation and bounds -------------------------------------------


@dataclass
class Estimate:
    value: float
    std_error: float
    n_shots: int
    n_blocks: int
    block_means: np.ndarray


def median_of_means(values, n_blocks: int | None = None) -> Estimate:
    vals = np.asarray(values, dtype=float)
    nu = len(vals)
    if nu < 1:
        raise ValueError("no shot values to aggregate")
    if n_blocks is None:
        n_blocks = math.isqrt(nu)
        if n_blocks * n_blocks < nu:
            n_blocks += 1
    n_blocks = max(1, min(n_blocks, nu))
    means = np.array([chunk.mean() for chunk in np.array_split(vals, n_blocks)])
    value = float(np.median(means))
    se = float(means.std(ddof=1) / math.sqrt(n_blocks)) if n_blocks > 1 else float("nan")
    return Estimate(value, se, nu, n_blocks, means)


def variance_bound(coeff: ChannelCoeff) -> float:
    """Single-shot variance bound for a Pauli observable (sup norm 1)."""
    if coeff.protocol in (GLOBAL_PAIRS, LOCAL_PAIRS):
        return float(1 / coeff.c)
    # product-type: 4 per supported site, and c = 3^{-k}
    k = round(math.log(float(1 / coeff.c), 3))
    return float(4**k)


def sample_bound(m_observables: int, eps: float, max_var: float) -> float:
    """Order-of-magnitude shot count: log(M)/eps^2 * max variance."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    return math.log(max(m_observables, 2)) / eps**2 * max_var
