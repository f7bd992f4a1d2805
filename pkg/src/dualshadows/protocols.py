"""Randomization sampling and measurement execution for the four protocols.

Two execution paths produce statistically identical records:

* the link-register path applies the lowered circuits to the full gauge
  state and measures every link (the literal protocol);
* the dual path applies the two-qubit unitaries on the dual register,
  samples the dual bits, and completes a link outcome string uniformly over
  the gauge orbit consistent with those parities. The completion is exact
  because physical states weight every string of an orbit equally.

The harness uses the dual path; tests check the two agree.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .duality import DualityContext
from .lattice import BC, PathAssignment, Tiling, assign_paths, enumerate_tilings
from .pauli import _SIGMA, PauliString
from .statevec import (
    StateVector,
    apply_1q,
    apply_2q,
    apply_cnot,
    apply_pauli_rotation,
    pauli_matvec,
    sample,
)

GLOBAL_PAIRS = "global_pairs"
LOCAL_PAIRS = "local_pairs"
DUAL_PRODUCT = "dual_product"
PRODUCT = "product"

# single-qubit basis changes: measuring Z after u reads off u^dag Z u
U_BASIS = {
    "Z": np.eye(2, dtype=complex),
    "X": (np.eye(2) - 1j * np.array([[0, -1j], [1j, 0]])) / np.sqrt(2),  # exp(-i pi/4 Y)
    "Y": (np.eye(2) + 1j * np.array([[0, 1], [1, 0]])) / np.sqrt(2),  # exp(+i pi/4 X)
}
BASIS_ROTATION = {"Z": None, "X": ("Y", -math.pi / 2), "Y": ("X", math.pi / 2)}


# -- randomization sampling -------------------------------------------


def sample_pairing(v: int, rng: np.random.Generator) -> list[tuple[int, int]]:
    """Uniform perfect matching of {0..v-1} via shuffle-and-chunk."""
    if v % 2:
        raise ValueError("pairings need an even number of sites")
    perm = rng.permutation(v)
    return [tuple(sorted((int(perm[2 * k]), int(perm[2 * k + 1])))) for k in range(v // 2)]


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar measure via QR of a Ginibre matrix with phase correction."""
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(g)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


@dataclass
class TwoQubitUnitary:
    """4x4 unitary in the |b_i b_j> basis; optionally parity block-diagonal."""

    matrix: np.ndarray
    parity_respecting: bool
    odd: np.ndarray | None = None
    even: np.ndarray | None = None


def _assemble_parity(odd: np.ndarray, even: np.ndarray) -> np.ndarray:
    m = np.zeros((4, 4), dtype=complex)
    for a, i in enumerate((0, 3)):
        for b, j in enumerate((0, 3)):
            m[i, j] = even[a, b]
    for a, i in enumerate((1, 2)):
        for b, j in enumerate((1, 2)):
            m[i, j] = odd[a, b]
    return m


def haar_unitary_2(rng: np.random.Generator) -> np.ndarray:
    """Haar on U(2): uniform phase times an SU(2) point from the 3-sphere."""
    x = rng.standard_normal(4)
    x /= np.linalg.norm(x)
    a, b = complex(x[0], x[1]), complex(x[2], x[3])
    phase = np.exp(2j * math.pi * rng.random())
    return phase * np.array([[a, b], [-b.conjugate(), a.conjugate()]])


def sample_parity_unitary(rng: np.random.Generator) -> TwoQubitUnitary:
    odd = haar_unitary_2(rng)
    even = haar_unitary_2(rng)
    return TwoQubitUnitary(_assemble_parity(odd, even), True, odd=odd, even=even)


def sample_haar_2q(rng: np.random.Generator) -> TwoQubitUnitary:
    return TwoQubitUnitary(haar_unitary(4, rng), False)


def euler_zyz(u: np.ndarray) -> tuple[float, float, float, float]:
    """(phi, alpha, beta, gamma) with
    u = e^{i phi} [[e^{i(a+g)}cos b, e^{i(a-g)}sin b],
                   [-e^{-i(a-g)}sin b, e^{-i(a+g)}cos b]].
    """
    det = u[0, 0] * u[1, 1] - u[0, 1] * u[1, 0]
    phi = 0.5 * math.atan2(det.imag, det.real)
    su = u * np.exp(-1j * phi)
    if (su[0, 0] * su[1, 1] - su[0, 1] * su[1, 0]).real < 0:
        phi += math.pi
        su = -su
    beta = math.atan2(abs(su[0, 1]), abs(su[0, 0]))
    s = math.atan2(su[0, 0].imag, su[0, 0].real) if abs(su[0, 0]) > 1e-12 else 0.0
    d = math.atan2(su[0, 1].imag, su[0, 1].real) if abs(su[0, 1]) > 1e-12 else 0.0
    return phi, 0.5 * (s + d), beta, 0.5 * (s - d)


def rebuild_from_euler(phi: float, a: float, b: float, g: float) -> np.ndarray:
    return np.exp(1j * phi) * np.array(
        [
            [np.exp(1j * (a + g)) * math.cos(b), np.exp(1j * (a - g)) * math.sin(b)],
            [-np.exp(-1j * (a - g)) * math.sin(b), np.exp(-1j * (a + g)) * math.cos(b)],
        ]
    )


# -- circuits ----------------------------------------------------------


@dataclass
class Rotation:
    generator: PauliString  # Hermitian LGT-side generator
    angle: float  # applies exp(i * angle/2 * generator)
    owner: tuple[int, int] | int | None = None


@dataclass
class Circuit:
    n_qubits: int
    layers: list[list[Rotation]] = field(default_factory=list)

    def gates(self) -> list[Rotation]:
        return [r for layer in self.layers for r in layer]

    def sequential(self) -> "Circuit":
        """Same gates, one owner (pair/site) per layer: no parallelism."""
        layers: list[list[Rotation]] = []
        for layer in self.layers:
            owners: dict = {}
            for r in layer:
                owners.setdefault(r.owner, []).append(r)
            layers.extend(owners[k] for k in owners)
        return Circuit(self.n_qubits, layers)


def cnot_ladder_cost(rot: Rotation) -> int:
    """Depth of a weight-w Pauli rotation: 2(w-1) CNOTs plus one rotation."""
    w = rot.generator.weight
    return 1 if w <= 1 else 2 * (w - 1) + 1


def circuit_depth(c: Circuit, mode: str) -> int:
    if mode == "rotation_layers":
        return len(c.layers)
    if mode == "cnot_ladder":
        total = 0
        for layer in c.layers:
            per_owner: dict = {}
            for r in layer:
                per_owner[r.owner] = per_owner.get(r.owner, 0) + cnot_ladder_cost(r)
            total += max(per_owner.values(), default=0)
        return total
    raise ValueError(f"unknown depth mode {mode!r}")


def _pair_rotations(
    ctx: DualityContext, i: int, j: int, u: TwoQubitUnitary
) -> list[Rotation]:
    """Lower one parity-respecting two-qubit unitary to Pauli rotations."""
    if not u.parity_respecting:
        raise ValueError(
            "only parity-respecting unitaries lower to this rotation sequence"
        )
    v = ctx.n_dual
    phi_o, a_o, b_o, g_o = euler_zyz(u.odd)
    phi_e, a_e, b_e, g_e = euler_zyz(u.even)
    w_i, w_j = ctx.w_image(i), ctx.w_image(j)
    yx = ctx.phi_inverse(PauliString.from_ops(v, {i: "Y", j: "X"}))
    xy = ctx.phi_inverse(PauliString.from_ops(v, {i: "X", j: "Y"}))
    assert yx.is_hermitian() and xy.is_hermitian()
    assert yx.commutes(xy)

    rots = []

    def add(gen, ang):
        if ang != 0.0:
            rots.append(Rotation(gen, ang, owner=(i, j)))

    # odd block: relative-Z conjugation, then its in-sector rotation
    add(w_i, g_o)
    add(w_j, -g_o)
    add(yx, b_o)
    add(xy, -b_o)
    add(w_i, a_o)
    add(w_j, -a_o)
    # even block: common-Z conjugation
    add(w_i, g_e)
    add(w_j, g_e)
    add(yx, b_e)
    add(xy, b_e)
    add(w_i, a_e)
    add(w_j, a_e)
    # relative phase between the two parity blocks
    add(w_i * w_j, phi_e - phi_o)
    return rots


def lower_dual_pairs_circuit(
    ctx: DualityContext,
    pairing: list[tuple[int, int]],
    unitaries: list[TwoQubitUnitary],
    paths: PathAssignment,
) -> Circuit:
    by_pair = {tuple(sorted(p)): u for p, u in zip(pairing, unitaries)}
    layers = []
    for layer_pairs in paths.schedule:
        layer = []
        for pair in layer_pairs:
            layer.extend(_pair_rotations(ctx, pair[0], pair[1], by_pair[pair]))
        layers.append(layer)
    return Circuit(ctx.n_qubits, layers)


def dual_product_circuit(ctx: DualityContext, bases: list[str]) -> Circuit:
    """Lower the per-site basis changes through the ancilla-aware duality."""
    layers = []
    for j, c in enumerate(bases):
        br = BASIS_ROTATION[c]
        if br is None:
            continue
        label, angle = br
        gen = ctx.phi_inverse(PauliString.from_ops(ctx.n_dual, {j: label}))
        layers.append([Rotation(gen, angle, owner=j)])
    return Circuit(ctx.n_qubits, layers)


# -- records -----------------------------------------------------------


@dataclass
class ShadowRecord:
    protocol: str
    shot: int
    payload: dict
    s: int  # link-register outcome bits
    b: int  # dual outcome bits
    n_s: int
    n_b: int


def record_invariant_holds(ctx: DualityContext, rec: ShadowRecord) -> bool:
    return ctx.map_bits(rec.s) == rec.b


def _payload_to_jsonable(payload: dict) -> dict:
    out = {}
    for key, val in payload.items():
        if key in ("unitaries", "patch_unitaries"):
            out[key] = [
                {
                    "parity": u.parity_respecting,
                    "matrix": [[[c.real, c.imag] for c in row] for row in u.matrix],
                }
                for u in val
            ]
        elif key in ("pairing", "patch_pairing"):
            out[key] = [list(p) for p in val]
        elif key == "bases":
            out[key] = "".join(val)
        else:
            out[key] = val
    return out


def _payload_from_jsonable(payload: dict) -> dict:
    out = {}
    for key, val in payload.items():
        if key in ("unitaries", "patch_unitaries"):
            out[key] = [
                TwoQubitUnitary(
                    np.array([[complex(re, im) for re, im in row] for row in u["matrix"]]),
                    u["parity"],
                )
                for u in val
            ]
        elif key in ("pairing", "patch_pairing"):
            out[key] = [tuple(p) for p in val]
        elif key == "bases":
            out[key] = list(val)
        else:
            out[key] = val
    return out


def record_to_row(rec: ShadowRecord) -> list[str]:
    """CSV cells: protocol, shot, payload (compact JSON), s and b in hex."""
    payload = json.dumps(_payload_to_jsonable(rec.payload), separators=(",", ":"))
    return [
        rec.protocol,
        str(rec.shot),
        payload,
        format(rec.s, "x"),
        format(rec.b, "x"),
        str(rec.n_s),
        str(rec.n_b),
    ]


RECORD_HEADER = ["protocol", "shot", "payload", "s_hex", "b_hex", "n_s", "n_b"]


def record_from_row(row: list[str]) -> ShadowRecord:
    return ShadowRecord(
        row[0],
        int(row[1]),
        _payload_from_jsonable(json.loads(row[2])),
        int(row[3], 16),
        int(row[4], 16),
        int(row[5]),
        int(row[6]),
    )


def write_records_csv(records, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RECORD_HEADER)
        for rec in records:
            w.writerow(record_to_row(rec))


def read_records_csv(path) -> list[ShadowRecord]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != RECORD_HEADER:
        raise ValueError("unrecognized shadow-record CSV header")
    return [record_from_row(r) for r in rows[1:]]


# -- link-register (literal) execution --------------------------------


def _sample_global_randomization(ctx: DualityContext, rng, forced_unitaries=None):
    v = ctx.n_dual
    pairing = sample_pairing(v, rng)
    if forced_unitaries is not None:
        unis = list(forced_unitaries)
    elif ctx.lattice.bc is BC.FBC:
        unis = [sample_haar_2q(rng) for _ in pairing]
    else:
        unis = [sample_parity_unitary(rng) for _ in pairing]
    return pairing, unis


def _apply_pairs_exact(ctx, state: StateVector, pairing, unitaries) -> None:
    """Apply the exact dual image of each pair unitary (linear extension)."""
    v = ctx.n_dual
    labels = "IXYZ"
    for (i, j), u in zip(pairing, unitaries):
        new = np.zeros_like(state.amps)
        for a in labels:
            for c in labels:
                # |b_i b_j> basis with i the more significant label
                coeff = np.trace(np.kron(_SIGMA[a], _SIGMA[c]).conj().T @ u.matrix) / 4
                if abs(coeff) < 1e-14:
                    continue
                img = ctx.phi_inverse(PauliString.from_ops(v, {i: a, j: c}))
                new += coeff * pauli_matvec(state.n, img, state.amps)
        state.amps = new


def run_shot_global(
    ctx: DualityContext,
    prepared: StateVector,
    rng: np.random.Generator,
    shot: int = 0,
    forced_unitaries=None,
) -> ShadowRecord:
    pairing, unis = _sample_global_randomization(ctx, rng, forced_unitaries)
    state = prepared.copy()
    if ctx.lattice.bc is BC.FBC or not all(u.parity_respecting for u in unis):
        _apply_pairs_exact(ctx, state, pairing, unis)
    else:
        paths = assign_paths(ctx.lattice, pairing)
        circ = lower_dual_pairs_circuit(ctx, pairing, unis, paths)
        for rot in circ.gates():
            apply_pauli_rotation(state, rot.generator, rot.angle)
    s = sample(state, rng)
    return ShadowRecord(
        GLOBAL_PAIRS,
        shot,
        {"pairing": pairing, "unitaries": unis},
        s,
        ctx.map_bits(s),
        ctx.n_qubits,
        ctx.n_dual,
    )


def replicate_patch_pairing(
    tiling: Tiling, patch_pairing: list[tuple[int, int]]
) -> list[tuple[int, int]]:
    """The same positional pairing repeated in every patch of the tiling."""
    pairs = []
    for patch in tiling.patches:
        for a, b in patch_pairing:
            pairs.append(tuple(sorted((patch[a], patch[b]))))
    return pairs


def run_shot_local(
    ctx: DualityContext,
    prepared: StateVector,
    L: int,
    rng: np.random.Generator,
    shot: int = 0,
) -> ShadowRecord:
    lat = ctx.lattice
    if (L * L) % 2:
        raise ValueError("patch size L^2 must be even")
    tilings = enumerate_tilings(lat, L)
    tid = int(rng.integers(len(tilings)))
    tiling = tilings[tid]
    patch_pairing = sample_pairing(L * L, rng)
    pairing = replicate_patch_pairing(tiling, patch_pairing)
    unis_patch = [sample_parity_unitary(rng) for _ in patch_pairing]
    unis = [unis_patch[k % len(patch_pairing)] for k in range(len(pairing))]

    state = prepared.copy()
    paths = assign_paths(lat, pairing)
    circ = lower_dual_pairs_circuit(ctx, pairing, unis, paths)
    for rot in circ.gates():
        apply_pauli_rotation(state, rot.generator, rot.angle)
    s = sample(state, rng)
    return ShadowRecord(
        LOCAL_PAIRS,
        shot,
        {
            "tiling": tid,
            "patch_pairing": patch_pairing,
            "patch_unitaries": unis_patch,
            "pairing": pairing,
            "unitaries": unis,
        },
        s,
        ctx.map_bits(s),
        ctx.n_qubits,
        ctx.n_dual,
    )


def sample_bases(v: int, rng: np.random.Generator) -> list[str]:
    return ["XYZ"[k] for k in rng.integers(0, 3, size=v)]


def run_shot_dual_product(
    ctx: DualityContext,
    prepared: StateVector,
    rng: np.random.Generator,
    shot: int = 0,
    forced_bases: list[str] | None = None,
) -> ShadowRecord:
    """Literal execution: ancilla appended in |0>, CNOT from the reference
    link, then the lowered single-site basis rotations."""
    if not ctx.ancilla_mode:
        raise ValueError("dual product requires an ancilla-mode context")
    if prepared.n != ctx.lattice.n_links:
        raise ValueError("prepared state must live on the bare link register")
    bases = list(forced_bases) if forced_bases is not None else sample_bases(ctx.n_dual, rng)

    amps = np.concatenate([prepared.amps, np.zeros_like(prepared.amps)])
    state = StateVector(ctx.n_qubits, amps)
    apply_cnot(state, ctx.ref_link, ctx.ancilla)
    for rot in dual_product_circuit(ctx, bases).gates():
        apply_pauli_rotation(state, rot.generator, rot.angle)
    s = sample(state, rng)
    return ShadowRecord(
        DUAL_PRODUCT,
        shot,
        {"bases": bases},
        s,
        ctx.map_bits(s),
        ctx.n_qubits,
        ctx.n_dual,
    )


def run_shot_product(
    prepared: StateVector,
    rng: np.random.Generator,
    shot: int = 0,
    forced_bases: list[str] | None = None,
) -> ShadowRecord:
    """Standard single-link Clifford randomization on the link register."""
    n = prepared.n
    bases = list(forced_bases) if forced_bases is not None else sample_bases(n, rng)
    state = prepared.copy()
    for l, c in enumerate(bases):
        if c != "Z":
            apply_1q(state, l, U_BASIS[c])
    s = sample(state, rng)
    return ShadowRecord(PRODUCT, shot, {"bases": bases}, s, 0, n, 0)


# -- dual-register (fast) execution -----------------------------------


def _gf2_rank(masks: list[int]) -> int:
    rank = 0
    basis: list[int] = []
    for m in masks:
        for b in basis:
            m = min(m, m ^ b)
        if m:
            basis.append(m)
            basis.sort(reverse=True)
            rank += 1
    return rank


class OutcomeCompleter:
    """Uniformly samples link outcomes consistent with given dual bits."""

    def __init__(self, ctx: DualityContext, rng_check: bool = True):
        self.ctx = ctx
        lat = ctx.lattice
        self.kernel = ctx.gauge_group_masks()
        n_free = ctx.n_qubits - (
            ctx.n_dual if (ctx.ancilla_mode or lat.bc is BC.FBC) else ctx.n_dual - 1
        )
        if _gf2_rank(self.kernel) != n_free:
            raise RuntimeError("gauge masks do not span the outcome-map kernel")
        self.preimage = [ctx.dual_x_mask(p) for p in range(ctx.n_dual)]
        if rng_check:
            rows = ctx.bit_map_rows()
            for p, u in enumerate(self.preimage):
                got = 0
                for q, row in enumerate(rows):
                    got |= (bin(row & u).count("1") & 1) << q
                want = 1 << p
                if lat.bc is BC.PBC and not ctx.ancilla_mode:
                    want |= 1 << ctx.ref_plaquette
                    if p == ctx.ref_plaquette:
                        want = 0
                if got != want:
                    raise RuntimeError("preimage construction inconsistent")

    def complete(self, b: int, rng: np.random.Generator) -> int:
        s = 0
        for p in range(self.ctx.n_dual):
            if (b >> p) & 1:
                s ^= self.preimage[p]
        coeffs = rng.integers(0, 2, size=len(self.kernel))
        for c, m in zip(coeffs, self.kernel):
            if c:
                s ^= m
        return s


class DualSampler:
    """Shot generator working on the dual register (exact and fast)."""

    def __init__(self, ctx: DualityContext, dual_state: StateVector):
        if dual_state.n != ctx.n_dual:
            raise ValueError("dual state must live on the plaquette register")
        self.ctx = ctx
        self.dual_state = dual_state
        self.completer = OutcomeCompleter(ctx)

    def _finish(self, protocol, shot, payload, state, rng) -> ShadowRecord:
        b = sample(state, rng)
        s = self.completer.complete(b, rng)
        return ShadowRecord(protocol, shot, payload, s, b, self.ctx.n_qubits, self.ctx.n_dual)

    def shot_global(self, rng, shot=0, forced_unitaries=None) -> ShadowRecord:
        pairing, unis = _sample_global_randomization(self.ctx, rng, forced_unitaries)
        state = self.dual_state.copy()
        for (i, j), u in zip(pairing, unis):
            apply_2q(state, i, j, u.matrix)
        return self._finish(
            GLOBAL_PAIRS, shot, {"pairing": pairing, "unitaries": unis}, state, rng
        )

    def shot_local(self, L: int, rng, shot=0) -> ShadowRecord:
        tilings = enumerate_tilings(self.ctx.lattice, L)
        tid = int(rng.integers(len(tilings)))
        tiling = tilings[tid]
        patch_pairing = sample_pairing(L * L, rng)
        pairing = replicate_patch_pairing(tiling, patch_pairing)
        unis_patch = [sample_parity_unitary(rng) for _ in patch_pairing]
        unis = [unis_patch[k % len(patch_pairing)] for k in range(len(pairing))]
        state = self.dual_state.copy()
        for (i, j), u in zip(pairing, unis):
            apply_2q(state, i, j, u.matrix)
        return self._finish(
            LOCAL_PAIRS,
            shot,
            {
                "tiling": tid,
                "patch_pairing": patch_pairing,
                "patch_unitaries": unis_patch,
                "pairing": pairing,
                "unitaries": unis,
            },
            state,
            rng,
        )

    def shot_dual_product(self, rng, shot=0, forced_bases=None) -> ShadowRecord:
        if not self.ctx.ancilla_mode:
            raise ValueError("dual product requires an ancilla-mode context")
        bases = list(forced_bases) if forced_bases is not None else sample_bases(self.ctx.n_dual, rng)
        state = self.dual_state.copy()
        for j, c in enumerate(bases):
            if c != "Z":
                apply_1q(state, j, U_BASIS[c])
        return self._finish(DUAL_PRODUCT, shot, {"bases": bases}, state, rng)
