"""Rectangular lattice geometry: links, plaquettes, sites, paths, tilings.

Qubits live on links. Sites are the nx*ny vertices; under PBC every site has
four incident links and every plaquette exists, under FBC only interior
links/plaquettes exist. Canonical indexing: links are keyed by
(site, direction) with direction 0 = +x and 1 = +y, plaquettes by their
lower-left site.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass


class BC(enum.Enum):
    PBC = "PBC"
    FBC = "FBC"


class Lattice:
    """Immutable geometry of an nx x ny lattice of sites."""

    def __init__(self, nx: int, ny: int, bc: BC):
        if nx < 2 or ny < 2:
            raise ValueError("lattice needs nx >= 2 and ny >= 2")
        self.nx = nx
        self.ny = ny
        self.bc = bc

        self._link_index: dict[tuple[int, int, int], int] = {}
        self._links: list[tuple[int, int, int]] = []
        for y in range(ny):
            for x in range(nx):
                for d in (0, 1):
                    if bc is BC.FBC:
                        if d == 0 and x == nx - 1:
                            continue
                        if d == 1 and y == ny - 1:
                            continue
                    self._link_index[(x, y, d)] = len(self._links)
                    self._links.append((x, y, d))

        self._plaq_index: dict[tuple[int, int], int] = {}
        self._plaqs: list[tuple[int, int]] = []
        pxmax = nx if bc is BC.PBC else nx - 1
        pymax = ny if bc is BC.PBC else ny - 1
        for y in range(pymax):
            for x in range(pxmax):
                self._plaq_index[(x, y)] = len(self._plaqs)
                self._plaqs.append((x, y))

        self.n_sites = nx * ny
        self.n_links = len(self._links)
        self.n_plaquettes = len(self._plaqs)
        self.plaq_nx = pxmax
        self.plaq_ny = pymax

    # -- indexing -----------------------------------------------------

    def link_id(self, x: int, y: int, d: int) -> int:
        if self.bc is BC.PBC:
            x, y = x % self.nx, y % self.ny
        key = (x, y, d)
        if key not in self._link_index:
            raise KeyError(f"no link at {key}")
        return self._link_index[key]

    def link_coords(self, l: int) -> tuple[int, int, int]:
        return self._links[l]

    def plaq_id(self, x: int, y: int) -> int:
        if self.bc is BC.PBC:
            x, y = x % self.nx, y % self.ny
        key = (x, y)
        if key not in self._plaq_index:
            raise KeyError(f"no plaquette at {key}")
        return self._plaq_index[key]

    def plaq_coords(self, p: int) -> tuple[int, int]:
        return self._plaqs[p]

    def site_id(self, x: int, y: int) -> int:
        if self.bc is BC.PBC:
            x, y = x % self.nx, y % self.ny
        if not (0 <= x < self.nx and 0 <= y < self.ny):
            raise KeyError(f"no site at ({x}, {y})")
        return y * self.nx + x

    def site_coords(self, s: int) -> tuple[int, int]:
        return s % self.nx, s // self.nx

    def is_boundary_link(self, l: int) -> bool:
        """FBC perimeter links (exactly one adjacent plaquette)."""
        if self.bc is not BC.FBC:
            return False
        x, y, d = self._links[l]
        if d == 0:
            return y == 0 or y == self.ny - 1
        return x == 0 or x == self.nx - 1

    # -- incidence ----------------------------------------------------

    def plaquette_links(self, p: int) -> list[int]:
        """The four boundary links of plaquette p."""
        x, y = self.plaq_coords(p)
        return [
            self.link_id(x, y, 0),
            self.link_id(x + 1, y, 1),
            self.link_id(x, y + 1, 0),
            self.link_id(x, y, 1),
        ]

    def gauss_links(self, s: int) -> list[int]:
        """Links incident to site s (2-4 depending on boundary)."""
        x, y = self.site_coords(s)
        out = []
        for xx, yy, d in ((x, y, 0), (x - 1, y, 0), (x, y, 1), (x, y - 1, 1)):
            try:
                out.append(self.link_id(xx, yy, d))
            except KeyError:
                pass
        return out

    def link_plaquettes(self, l: int) -> list[int]:
        """Plaquettes adjacent to link l (2 in bulk/PBC, 1 on FBC boundary)."""
        x, y, d = self._links[l]
        out = []
        if d == 0:
            cands = ((x, y), (x, y - 1))
        else:
            cands = ((x, y), (x - 1, y))
        for px, py in cands:
            try:
                out.append(self.plaq_id(px, py))
            except KeyError:
                pass
        return out

    # -- dual-lattice paths -------------------------------------------

    def _dual_step_link(self, x: int, y: int, dx: int, dy: int) -> int:
        """Link crossed when stepping from plaquette (x, y) by (dx, dy)."""
        if (dx, dy) == (1, 0):
            return self.link_id(x + 1, y, 1)
        if (dx, dy) == (-1, 0):
            return self.link_id(x, y, 1)
        if (dx, dy) == (0, 1):
            return self.link_id(x, y + 1, 0)
        if (dx, dy) == (0, -1):
            return self.link_id(x, y, 0)
        raise ValueError("not a unit step")

    def _arm(self, a: int, b: int, period: int, periodic: bool) -> list[int]:
        """Sequence of +/-1 steps from a to b, shorter way round if periodic."""
        delta = b - a
        if periodic:
            delta = (delta + period // 2) % period - period // 2
            # exact ties broken toward +
            if 2 * abs(delta) == period and delta < 0:
                delta = -delta
        return [1 if delta > 0 else -1] * abs(delta)

    def path_between(self, p_i: int, p_j: int) -> list[int]:
        """Links crossed by a Manhattan dual path p_i -> p_j (x-first)."""
        if p_i == p_j:
            return []
        if p_i > p_j:  # direction-independent link multiset
            p_i, p_j = p_j, p_i
        x, y = self.plaq_coords(p_i)
        xj, yj = self.plaq_coords(p_j)
        periodic = self.bc is BC.PBC
        links = []
        for sx in self._arm(x, xj, self.plaq_nx, periodic):
            links.append(self._dual_step_link(x, y, sx, 0))
            x = (x + sx) % self.plaq_nx if periodic else x + sx
        for sy in self._arm(y, yj, self.plaq_ny, periodic):
            links.append(self._dual_step_link(x, y, 0, sy))
            y = (y + sy) % self.plaq_ny if periodic else y + sy
        return links

    def path_to_exterior(self, p: int) -> list[int]:
        """FBC only: links crossed entering from outside the left edge."""
        if self.bc is not BC.FBC:
            raise ValueError("exterior paths exist only for FBC")
        x, y = self.plaq_coords(p)
        return [self.link_id(k, y, 1) for k in range(x + 1)]

    def dual_distance(self, p_i: int, p_j: int) -> int:
        xi, yi = self.plaq_coords(p_i)
        xj, yj = self.plaq_coords(p_j)
        dx, dy = abs(xi - xj), abs(yi - yj)
        if self.bc is BC.PBC:
            dx = min(dx, self.plaq_nx - dx)
            dy = min(dy, self.plaq_ny - dy)
        return dx + dy

    # -- superselection cuts (PBC) ------------------------------------

    def cut_links_x(self) -> list[int]:
        """Horizontal links in column 0: a vertical cut, V_x support."""
        return [self.link_id(0, y, 0) for y in range(self.ny)]

    def cut_links_y(self) -> list[int]:
        """Vertical links in row 0: a horizontal cut, V_y support."""
        return [self.link_id(x, 0, 1) for x in range(self.nx)]

    def __repr__(self) -> str:
        return f"Lattice({self.nx}x{self.ny}, {self.bc.value})"


def build_lattice(nx: int, ny: int, bc: BC | str) -> Lattice:
    if isinstance(bc, str):
        bc = BC[bc.upper()]
    return Lattice(nx, ny, bc)


@dataclass
class PathAssignment:
    """Routed paths for a pairing, scheduled into link-disjoint layers."""

    paths: dict[tuple[int, int], list[int]]
    schedule: list[list[tuple[int, int]]]


def assign_paths(lat: Lattice, pairing: list[tuple[int, int]]) -> PathAssignment:
    """Greedy link-disjoint routing; short pairs first, new layer on clash."""
    plaqs = sorted(itertools.chain.from_iterable(pairing))
    if plaqs != list(range(lat.n_plaquettes)):
        raise ValueError("pairing must partition all plaquettes")
    ordered = sorted(
        (tuple(sorted(p)) for p in pairing),
        key=lambda p: (lat.dual_distance(*p), p),
    )
    paths = {p: lat.path_between(*p) for p in ordered}
    schedule: list[list[tuple[int, int]]] = []
    used: list[set[int]] = []
    for pair in ordered:
        linkset = set(paths[pair])
        for layer, layer_used in zip(schedule, used):
            if not (linkset & layer_used):
                layer.append(pair)
                layer_used |= linkset
                break
        else:
            schedule.append([pair])
            used.append(set(linkset))
    return PathAssignment(paths=paths, schedule=schedule)


@dataclass(frozen=True)
class Tiling:
    """One offset of the L x L patch tiling of the dual (plaquette) grid."""

    ox: int
    oy: int
    L: int
    patch_of: tuple[int, ...]  # plaquette id -> patch id
    patches: tuple[tuple[int, ...], ...]


def enumerate_tilings(lat: Lattice, L: int) -> list[Tiling]:
    if lat.bc is not BC.PBC:
        raise ValueError("tilings are defined for PBC")
    if lat.nx % L or lat.ny % L:
        raise ValueError(f"L={L} must divide nx={lat.nx} and ny={lat.ny}")
    tilings = []
    seen: set = set()
    for oy in range(L):
        for ox in range(L):
            patch_of = [0] * lat.n_plaquettes
            members: dict[int, list[int]] = {}
            for p in range(lat.n_plaquettes):
                x, y = lat.plaq_coords(p)
                px = ((x - ox) % lat.nx) // L
                py = ((y - oy) % lat.ny) // L
                pid = py * (lat.nx // L) + px
                patch_of[p] = pid
                members.setdefault(pid, []).append(p)
            patches = tuple(tuple(members[k]) for k in sorted(members))
            key = frozenset(patches)
            if key in seen:  # offsets can coincide when L = nx or ny
                continue
            seen.add(key)
            tilings.append(Tiling(ox, oy, L, tuple(patch_of), patches))
    return tilings
