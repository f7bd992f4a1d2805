"""Hamiltonians on both sides of the duality and their sector constraints."""
from __future__ import annotations

from .duality import DualityContext
from .lattice import BC, Lattice
from .pauli import PauliString
from .statevec import HamiltonianSpec, StateVector, ground_state


def lgt_hamiltonian(lat: Lattice, g: float) -> HamiltonianSpec:
    """-sum_p W_p - g sum_l sigma^x_l with the physical-sector constraints."""
    n = lat.n_links
    terms: list[tuple[float, PauliString]] = []
    for p in range(lat.n_plaquettes):
        z = 0
        for l in lat.plaquette_links(p):
            z |= 1 << l
        terms.append((-1.0, PauliString(n, 0, z, 0)))
    for l in range(n):
        terms.append((-g, PauliString(n, 1 << l, 0, 0)))

    ctx = DualityContext(lat)
    constraints = [
        PauliString(n, ctx.gauss_operator(s).x, 0, 0) for s in range(lat.n_sites)
    ]
    if lat.bc is BC.PBC:
        constraints.append(PauliString(n, ctx.superselection_x().x, 0, 0))
        constraints.append(PauliString(n, ctx.superselection_y().x, 0, 0))
    return HamiltonianSpec(n=n, terms=terms, side="LGT", g=g, constraints=constraints)


def dual_hamiltonian(lat: Lattice, g: float, constrain_parity: bool = True) -> HamiltonianSpec:
    """Transverse-field Ising dual, built term by term through the duality."""
    ctx = DualityContext(lat)
    v = lat.n_plaquettes
    terms: list[tuple[float, PauliString]] = []
    for p in range(v):
        terms.append((-1.0, PauliString(v, 0, 1 << p, 0)))
    for l in range(lat.n_links):
        x = 0
        for p in lat.link_plaquettes(l):
            x ^= 1 << p
        terms.append((-g, PauliString(v, x, 0, 0)))
    constraints = []
    if lat.bc is BC.PBC and constrain_parity:
        constraints.append(PauliString(v, 0, (1 << v) - 1, 0))  # global Z parity
    return HamiltonianSpec(n=v, terms=terms, side="Ising", g=g, constraints=constraints)


def lgt_ground_state(lat: Lattice, g: float, seed: int = 1234) -> StateVector:
    return ground_state(lgt_hamiltonian(lat, g), seed=seed)


def dual_ground_state(lat: Lattice, g: float, seed: int = 1234) -> StateVector:
    return ground_state(dual_hamiltonian(lat, g), seed=seed)
