"""Config-driven experiment runner with deterministic seeding and CSV output.

Every estimate-producing command is a pure function of (config, master seed):
each shot draws from its own counter-based random stream keyed by
(seed, protocol, sweep index, repetition, shot), so outputs are byte-identical
regardless of thread count.
"""
from __future__ import annotations

import configparser
import csv
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .duality import DualityContext, Observable, parse_observable
from .estimator import (
    channel_coeff,
    estimate_shot_dual_pairs,
    estimate_shot_product_type,
    filter_local,
    variance_bound,
)
from .lattice import Lattice, assign_paths, build_lattice, enumerate_tilings
from .models import dual_ground_state, lgt_ground_state
from .protocols import (
    DUAL_PRODUCT,
    GLOBAL_PAIRS,
    LOCAL_PAIRS,
    PRODUCT,
    replicate_patch_pairing,
    DualSampler,
    circuit_depth,
    lower_dual_pairs_circuit,
    run_shot_product,
    sample_pairing,
    sample_parity_unitary,
)
from .statevec import expectation

SCHEMA_VERSION = "1"
PROTO_ID = {GLOBAL_PAIRS: 0, LOCAL_PAIRS: 1, DUAL_PRODUCT: 2, PRODUCT: 3}

ESTIMATE_HEADER = [
    "observable", "protocol", "g", "V", "nu",
    "estimate", "std_error", "exact_value", "relative_error",
]
SCALING_HEADER = ["observable", "protocol", "g", "V", "nu", "eps_avg", "slope"]
VOLUME_HEADER = [
    "observable", "protocol", "g", "V", "nu", "eps_avg", "dual_weight", "available",
]

DEFAULT_CONFIG = {
    "schema": {"version": SCHEMA_VERSION},
    "lattice": {"nx": "3", "ny": "2", "bc": "PBC"},
    "experiment": {
        "g": "0.1, 0.5, 1.0, 1.5, 2.0",
        "protocols": "global_pairs, dual_product, product",
        "observables": "ribbon: (0, 4) ; loop: [0] ; loop: [0, 1]",
        "nu": "1000",
        "reps": "50",
        "l": "2",
    },
    "scale_nu": {
        "g": "0.5",
        "nu_list": "100, 316, 1000, 3162, 10000",
        "reps": "40",
        "protocols": "global_pairs, dual_product, product",
        "observables": "loop: [0, 1] ; ribbon: (0, 4)",
    },
    "scale_v": {
        "g": "0.5",
        "shapes": "2x2, 3x2, 5x2",
        "v_requested": "4, 6, 7, 10",
        "nu": "1000",
        "reps": "50",
        "protocols": "global_pairs, dual_product",
    },
    "fbc": {
        "nx": "3",
        "ny": "3",
        "g": "0.1, 0.2, 0.3, 0.4, 0.5",
        "nu": "5000",
        "observables": "loop: [0] ; ribbon: (0, 3)",
    },
    "costs": {
        "shapes": "2x2, 3x2, 4x2, 5x2, 6x2, 7x2, 8x2",
        "l": "2",
        "samples": "20",
    },
}


def load_config(path: str | None) -> configparser.ConfigParser:
    cfg = configparser.ConfigParser()
    cfg.read_dict(DEFAULT_CONFIG)
    if path is not None:
        with open(path) as fh:
            cfg.read_file(fh)
        if cfg.get("schema", "version") != SCHEMA_VERSION:
            raise ValueError(
                f"config schema {cfg.get('schema', 'version')!r} unsupported "
                f"(expected {SCHEMA_VERSION})"
            )
    return cfg


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.replace(",", " ").split()]


def _ints(text: str) -> list[int]:
    return [int(t) for t in text.replace(",", " ").split()]


def _names(text: str, sep: str = ",") -> list[str]:
    return [t.strip() for t in text.split(sep) if t.strip()]


def _fmt(x: float) -> str:
    return "nan" if x != x else f"{x:.17g}"


def write_csv(path: str, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


# -- state preparation (cached, serialized before any threading) -------


@lru_cache(maxsize=32)
def _lattice(nx: int, ny: int, bc: str) -> Lattice:
    return build_lattice(nx, ny, bc)


@lru_cache(maxsize=64)
def _dual_state(nx: int, ny: int, bc: str, g: float):
    return dual_ground_state(_lattice(nx, ny, bc), g)


@lru_cache(maxsize=64)
def _lgt_state(nx: int, ny: int, bc: str, g: float):
    return lgt_ground_state(_lattice(nx, ny, bc), g)


def exact_value(lat: Lattice, g: float, obs: Observable, cross_check: bool = True) -> float:
    ds = _dual_state(lat.nx, lat.ny, lat.bc.name, g)
    val = expectation(ds, obs.dual)
    if cross_check and lat.n_links <= 14:
        gs = _lgt_state(lat.nx, lat.ny, lat.bc.name, g)
        lgt_val = expectation(gs, obs.lgt)
        if abs(lgt_val - val) > 1e-8:
            raise RuntimeError(
                f"duality cross-check failed for {obs.name}: {lgt_val} vs {val}"
            )
    return val


# -- shot engine -------------------------------------------------------


@dataclass
class Task:
    """One repetition of nu shots for a fixed protocol and state."""

    protocol: str
    lat: Lattice
    g: float
    nu: int
    L: int
    seed_head: tuple[int, ...]  # (master, proto id, sweep index, rep)


def _run_rep(task: Task) -> list:
    """Generate the repetition's shadow records (deterministic in seed_head)."""
    lat, protocol = task.lat, task.protocol
    records = []
    if protocol == PRODUCT:
        prepared = _lgt_state(lat.nx, lat.ny, lat.bc.name, task.g)
        for shot in range(task.nu):
            rng = np.random.default_rng(task.seed_head + (shot,))
            records.append(run_shot_product(prepared, rng, shot))
        return records
    ctx = DualityContext(lat, ancilla_mode=(protocol == DUAL_PRODUCT))
    sampler = DualSampler(ctx, _dual_state(lat.nx, lat.ny, lat.bc.name, task.g))
    for shot in range(task.nu):
        rng = np.random.default_rng(task.seed_head + (shot,))
        if protocol == GLOBAL_PAIRS:
            records.append(sampler.shot_global(rng, shot))
        elif protocol == LOCAL_PAIRS:
            records.append(sampler.shot_local(task.L, rng, shot))
        elif protocol == DUAL_PRODUCT:
            records.append(sampler.shot_dual_product(rng, shot))
        else:
            raise ValueError(f"unknown protocol {protocol!r}")
    return records


def shot_values(
    records: list, protocol: str, obs: Observable, lat: Lattice, L: int | None = None
) -> np.ndarray:
    """Per-shot estimates of one observable from one repetition's records."""
    if protocol == GLOBAL_PAIRS:
        coeff = channel_coeff(protocol, obs.dual, lat)
        return np.array([estimate_shot_dual_pairs(r, obs.dual, coeff) for r in records])
    if protocol == LOCAL_PAIRS:
        coeff = channel_coeff(protocol, obs.dual, lat, L=L)
        kept, tiling, patch, _ = filter_local(records, lat, L, obs.dual.support())
        members = set(tiling.patches[patch])
        out = []
        for r in kept:
            pairs = [
                p for p in r.payload["pairing"] if p[0] in members and p[1] in members
            ]
            out.append(estimate_shot_dual_pairs(r, obs.dual, coeff, pairs=pairs))
        return np.array(out)
    if protocol == DUAL_PRODUCT:
        return np.array(
            [estimate_shot_product_type(r, obs.dual, "dual") for r in records]
        )
    if protocol == PRODUCT:
        return np.array(
            [estimate_shot_product_type(r, obs.lgt, "lgt") for r in records]
        )
    raise ValueError(f"unknown protocol {protocol!r}")


def _rep_estimates(task: Task, observables: list[Observable]) -> list[float]:
    """Per-repetition estimate of each observable.

    Uses the per-repetition sample mean: for rare-support observables under
    product-type randomization almost every shot is zero, so a median over
    ~sqrt(nu) blocks collapses to zero and is not a usable estimate. For the
    well-behaved pairs protocols the mean and the median of means agree
    within noise (median_of_means remains available for post-processing).
    """
    records = _run_rep(task)
    out = []
    for obs in observables:
        vals = shot_values(records, task.protocol, obs, task.lat, task.L)
        out.append(float(vals.mean()))
    return out


def _parallel_reps(tasks: list[Task], observables, threads: int) -> np.ndarray:
    """(reps, observables) array of per-repetition estimates, stable order."""
    if threads <= 1:
        results = [_rep_estimates(t, observables) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda t: _rep_estimates(t, observables), tasks))
    return np.array(results)


# -- commands ----------------------------------------------------------


def run_experiment(cfg, seed: int, threads: int = 1) -> list[list]:
    lat = _lattice(
        cfg.getint("lattice", "nx"), cfg.getint("lattice", "ny"), cfg.get("lattice", "bc")
    )
    exp = cfg["experiment"]
    gs = _floats(exp["g"])
    protocols = _names(exp["protocols"])
    nu, reps, L = int(exp["nu"]), int(exp["reps"]), int(exp["l"])
    ctx = DualityContext(lat)
    observables = [parse_observable(ctx, s) for s in _names(exp["observables"], ";")]

    rows = []
    for gi, g in enumerate(gs):
        exacts = [exact_value(lat, g, o) for o in observables]
        for protocol in protocols:
            tasks = [
                Task(protocol, lat, g, nu, L, (seed, PROTO_ID[protocol], gi, rep))
                for rep in range(reps)
            ]
            ests = _parallel_reps(tasks, observables, threads)
            for oi, obs in enumerate(observables):
                col = ests[:, oi]
                est = float(col.mean())
                se = float(col.std(ddof=1) / math.sqrt(reps)) if reps > 1 else float("nan")
                rel = abs(est - exacts[oi]) / abs(exacts[oi]) if exacts[oi] else float("nan")
                rows.append(
                    [obs.name, protocol, f"{g:g}", lat.n_plaquettes, nu,
                     _fmt(est), _fmt(se), _fmt(exacts[oi]), _fmt(rel)]
                )
    return rows


def run_scaling_nu(cfg, seed: int, threads: int = 1) -> list[list]:
    lat = _lattice(
        cfg.getint("lattice", "nx"), cfg.getint("lattice", "ny"), cfg.get("lattice", "bc")
    )
    sec = cfg["scale_nu"]
    g = float(sec["g"])
    nus = _ints(sec["nu_list"])
    reps = int(sec["reps"])
    protocols = _names(sec["protocols"])
    ctx = DualityContext(lat)
    observables = [parse_observable(ctx, s) for s in _names(sec["observables"], ";")]
    exacts = [exact_value(lat, g, o) for o in observables]

    rows = []
    for protocol in protocols:
        eps = np.zeros((len(nus), len(observables)))
        for ni, nu in enumerate(nus):
            tasks = [
                Task(protocol, lat, g, nu, 2, (seed, PROTO_ID[protocol], ni, rep))
                for rep in range(reps)
            ]
            ests = _parallel_reps(tasks, observables, threads)
            for oi in range(len(observables)):
                if exacts[oi] == 0:
                    eps[ni, oi] = float("nan")
                else:
                    eps[ni, oi] = np.abs(ests[:, oi] - exacts[oi]).mean() / abs(exacts[oi])
        for oi, obs in enumerate(observables):
            col = eps[:, oi]
            if np.isnan(col).any():
                slope = float("nan")
            else:
                slope = float(np.polyfit(np.log10(nus), np.log10(col), 1)[0])
            for ni, nu in enumerate(nus):
                rows.append(
                    [obs.name, protocol, f"{g:g}", lat.n_plaquettes, nu,
                     _fmt(float(col[ni])), _fmt(slope)]
                )
    return rows


VOLUME_EXTENSIVE = {4: (2, 2), 6: (4, 4), 10: (8, 6)}  # V -> (ribbon w_X, loop w_Z)


def volume_observables(ctx: DualityContext) -> list[Observable]:
    v = ctx.n_dual
    wr, wl = VOLUME_EXTENSIVE.get(v, (2, 2))
    specs = {
        "ribbon_fixed": "ising: +1 X0 X1",
        "loop_fixed": "ising: +1 Z0 Z1",
        "ribbon_extensive": "ising: +1 " + " ".join(f"X{q}" for q in range(wr)),
        "loop_extensive": "ising: +1 " + " ".join(f"Z{q}" for q in range(wl)),
        "loop_w1": "ising: +1 Z0",
        "loop_w2": "ising: +1 Z0 Z1",
        "loop_w3": "ising: +1 Z0 Z1 Z2",
    }
    out = []
    for name, spec in specs.items():
        o = parse_observable(ctx, spec)
        out.append(Observable(name, o.dual, o.lgt))
    return out


def run_scaling_volume(cfg, seed: int, threads: int = 1) -> list[list]:
    sec = cfg["scale_v"]
    g = float(sec["g"])
    nu, reps = int(sec["nu"]), int(sec["reps"])
    protocols = _names(sec["protocols"])
    shapes = []
    for tok in _names(sec["shapes"]):
        nx, ny = tok.lower().split("x")
        shapes.append((int(nx), int(ny)))
    available = {nx * ny: (nx, ny) for nx, ny in shapes}

    rows = []
    for vi, v in enumerate(_ints(sec["v_requested"])):
        if v not in available:
            for protocol in protocols:
                rows.append(["-", protocol, f"{g:g}", v, nu, "nan", 0, 0])
            continue
        nx, ny = available[v]
        lat = _lattice(nx, ny, "PBC")
        ctx = DualityContext(lat)
        observables = volume_observables(ctx)
        exacts = [exact_value(lat, g, o, cross_check=lat.n_links <= 14) for o in observables]
        for protocol in protocols:
            tasks = [
                Task(protocol, lat, g, nu, 2, (seed, PROTO_ID[protocol], vi, rep))
                for rep in range(reps)
            ]
            ests = _parallel_reps(tasks, observables, threads)
            for oi, obs in enumerate(observables):
                if exacts[oi] == 0:
                    eps = float("nan")
                else:
                    eps = float(np.abs(ests[:, oi] - exacts[oi]).mean() / abs(exacts[oi]))
                rows.append(
                    [obs.name, protocol, f"{g:g}", v, nu, _fmt(eps), obs.dual.weight, 1]
                )
    return rows


def run_fbc_demo(cfg, seed: int, threads: int = 1) -> list[list]:
    sec = cfg["fbc"]
    lat = _lattice(int(sec["nx"]), int(sec["ny"]), "FBC")
    gs = _floats(sec["g"])
    nu = int(sec["nu"])
    ctx = DualityContext(lat)
    observables = [parse_observable(ctx, s) for s in _names(sec["observables"], ";")]

    rows = []
    for gi, g in enumerate(gs):
        exacts = [exact_value(lat, g, o) for o in observables]
        task = Task(GLOBAL_PAIRS, lat, g, nu, 2, (seed, PROTO_ID[GLOBAL_PAIRS], gi, 0))
        records = _run_rep(task)
        for oi, obs in enumerate(observables):
            vals = shot_values(records, GLOBAL_PAIRS, obs, lat)
            est = float(vals.mean())
            # single-experiment mode: error bar is the standard error of the mean
            se = float(vals.std(ddof=1) / math.sqrt(len(vals)))
            rel = abs(est - exacts[oi]) / abs(exacts[oi]) if exacts[oi] else float("nan")
            rows.append(
                [obs.name, GLOBAL_PAIRS, f"{g:g}", lat.n_plaquettes, nu,
                 _fmt(est), _fmt(se), _fmt(exacts[oi]), _fmt(rel)]
            )
    return rows


def run_exact(cfg, seed: int = 0, threads: int = 1) -> list[list]:
    lat = _lattice(
        cfg.getint("lattice", "nx"), cfg.getint("lattice", "ny"), cfg.get("lattice", "bc")
    )
    exp = cfg["experiment"]
    ctx = DualityContext(lat)
    observables = [parse_observable(ctx, s) for s in _names(exp["observables"], ";")]
    rows = []
    for g in _floats(exp["g"]):
        for obs in observables:
            val = exact_value(lat, g, obs)
            rows.append(
                [obs.name, "exact", f"{g:g}", lat.n_plaquettes, 0,
                 _fmt(val), "0", _fmt(val), "0"]
            )
    return rows


# -- cost reporting ----------------------------------------------------


def global_pairs_depths(lat: Lattice, seed: int, samples: int) -> dict:
    """Depth statistics of sampled Global Dual Pairs circuits on one lattice."""
    ctx = DualityContext(lat)
    rng = np.random.default_rng([seed, lat.n_plaquettes])
    seq_cnot, sched_cnot, layers = [], [], []
    for _ in range(samples):
        pairing = sample_pairing(ctx.n_dual, rng)
        unis = [sample_parity_unitary(rng) for _ in pairing]
        circ = lower_dual_pairs_circuit(ctx, pairing, unis, assign_paths(lat, pairing))
        layers.append(circuit_depth(circ, "rotation_layers"))
        sched_cnot.append(circuit_depth(circ, "cnot_ladder"))
        seq_cnot.append(circuit_depth(circ.sequential(), "cnot_ladder"))
    return {
        "rotation_layers": float(np.mean(layers)),
        "cnot_ladder": float(np.mean(sched_cnot)),
        "cnot_ladder_sequential": float(np.mean(seq_cnot)),
        "cnot_ladder_sequential_max": int(np.max(seq_cnot)),
    }


def local_pairs_depth(lat: Lattice, L: int, seed: int, samples: int) -> float:
    ctx = DualityContext(lat)
    rng = np.random.default_rng([seed, 1, lat.n_plaquettes])
    tilings = enumerate_tilings(lat, L)
    out = []
    for _ in range(samples):
        tiling = tilings[int(rng.integers(len(tilings)))]
        patch_pairing = sample_pairing(L * L, rng)
        pairing = replicate_patch_pairing(tiling, patch_pairing)
        unis = [sample_parity_unitary(rng) for _ in pairing]
        circ = lower_dual_pairs_circuit(ctx, pairing, unis, assign_paths(lat, pairing))
        out.append(circuit_depth(circ, "rotation_layers"))
    return float(np.mean(out))


def report_costs(cfg, seed: int) -> str:
    sec = cfg["costs"]
    L = int(sec["l"])
    samples = int(sec["samples"])
    shapes = []
    for tok in _names(sec["shapes"]):
        nx, ny = tok.lower().split("x")
        shapes.append((int(nx), int(ny)))

    lines = [
        "protocol        V  depth(layers)  depth(cnot,sched)  depth(cnot,seq)  "
        "us/sample  var_bound(ref obs)",
    ]
    ctx_small = DualityContext(_lattice(*shapes[0], "PBC"))
    ref = parse_observable(ctx_small, "loop: [0, 1]")
    for nx, ny in shapes:
        lat = _lattice(nx, ny, "PBC")
        d = global_pairs_depths(lat, seed, samples)
        t = _time_per_sample(lat, GLOBAL_PAIRS, seed)
        obs = parse_observable(DualityContext(lat), "loop: [0, 1]")
        vb = variance_bound(channel_coeff(GLOBAL_PAIRS, obs.dual, lat))
        lines.append(
            f"{GLOBAL_PAIRS:14s} {lat.n_plaquettes:3d}  {d['rotation_layers']:13.2f}  "
            f"{d['cnot_ladder']:17.2f}  {d['cnot_ladder_sequential']:15.2f}  "
            f"{t:9.1f}  {vb:10.2f}"
        )
        if lat.nx % L == 0 and lat.ny % L == 0:
            dl = local_pairs_depth(lat, L, seed, samples)
            obs_l = parse_observable(DualityContext(lat), "loop: [0]")
            vbl = variance_bound(channel_coeff(LOCAL_PAIRS, obs_l.dual, lat, L=L))
            lines.append(
                f"{LOCAL_PAIRS:14s} {lat.n_plaquettes:3d}  {dl:13.2f}  "
                f"{'-':>17s}  {'-':>15s}  {'-':>9s}  {vbl:10.2f}"
            )
        vb_dp = variance_bound(channel_coeff(DUAL_PRODUCT, obs.dual, lat))
        lines.append(
            f"{DUAL_PRODUCT:14s} {lat.n_plaquettes:3d}  {lat.n_plaquettes:13.2f}  "
            f"{'-':>17s}  {'-':>15s}  {'-':>9s}  {vb_dp:10.2f}"
        )
        vb_p = variance_bound(channel_coeff(PRODUCT, obs.lgt, lat))
        lines.append(
            f"{PRODUCT:14s} {lat.n_plaquettes:3d}  {1.0:13.2f}  "
            f"{'-':>17s}  {'-':>15s}  {'-':>9s}  {vb_p:10.2f}"
        )
    lines.append(
        "reference forms: dual pairs depth O(V^2) unparallelized; "
        "local pairs O(L^4); dual product O(V); product 1."
    )
    return "\n".join(lines)


def _time_per_sample(lat: Lattice, protocol: str, seed: int, shots: int = 50) -> float:
    """Measured wall-clock microseconds per shot (informative, not stable)."""
    task = Task(protocol, lat, 0.5, shots, 2, (seed, PROTO_ID[protocol], 99, 0))
    t0 = time.perf_counter()
    _run_rep(task)
    return (time.perf_counter() - t0) / shots * 1e6
