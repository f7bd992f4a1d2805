"""Operator and outcome maps between the gauge theory and its Ising dual.

The dual qubits sit at plaquette centers. Plaquette-Z dualizes to the
four-link magnetic loop, dual-X to an electric ribbon, and measurement bit
strings map through plaquette parities. An optional ancilla qubit splits the
two plaquettes sharing a chosen reference link, which lifts the periodic
parity identity to a genuine symmetry so product-type randomization can mix
both sectors.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

from .lattice import BC, Lattice
from .pauli import PauliString


@dataclass(frozen=True)
class DualityContext:
    lattice: Lattice
    ref_plaquette: int = 0
    ancilla_mode: bool = False
    ref_link: int | None = None
    ancilla_side: int | None = None  # plaquette that trades link r for the ancilla

    def __post_init__(self):
        lat = self.lattice
        if not 0 <= self.ref_plaquette < lat.n_plaquettes:
            raise ValueError("invalid reference plaquette")
        if self.ancilla_mode:
            boundary = lat.plaquette_links(self.ref_plaquette)
            r = self.ref_link
            if r is None:
                r = boundary[0]
                object.__setattr__(self, "ref_link", r)
            elif r not in boundary:
                raise ValueError("reference link must border the reference plaquette")
            if self.ancilla_side is None:
                object.__setattr__(self, "ancilla_side", max(lat.link_plaquettes(r)))
            elif self.ancilla_side not in lat.link_plaquettes(r):
                raise ValueError("ancilla side must be adjacent to the reference link")

    @property
    def n_qubits(self) -> int:
        return self.lattice.n_links + (1 if self.ancilla_mode else 0)

    @property
    def ancilla(self) -> int:
        if not self.ancilla_mode:
            raise ValueError("no ancilla in this context")
        return self.lattice.n_links

    @property
    def n_dual(self) -> int:
        return self.lattice.n_plaquettes

    # -- elementary images --------------------------------------------

    def link_x_image(self, l: int) -> PauliString:
        """LGT image of one electric link factor (ancilla-aware)."""
        x = 1 << l
        if self.ancilla_mode and l == self.ref_link:
            x |= 1 << self.ancilla
        return PauliString(self.n_qubits, x, 0, 0)

    def plaquette_z_links(self, p: int) -> list[int]:
        """Qubits carrying the magnetic loop of p (ancilla substitution)."""
        links = self.lattice.plaquette_links(p)
        if self.ancilla_mode and p == self.ancilla_side:
            links = [self.ancilla if l == self.ref_link else l for l in links]
        return links

    def w_image(self, p: int) -> PauliString:
        z = 0
        for l in self.plaquette_z_links(p):
            z |= 1 << l
        return PauliString(self.n_qubits, 0, z, 0)

    def ribbon_links(self, p: int) -> list[int]:
        if self.lattice.bc is BC.FBC:
            return self.lattice.path_to_exterior(p)
        return self.lattice.path_between(self.ref_plaquette, p)

    def ribbon_image(self, p: int) -> PauliString:
        out = PauliString.identity(self.n_qubits)
        for l in self.ribbon_links(p):
            out = out * self.link_x_image(l)
        return out

    @cached_property
    def _dual_x_masks(self) -> list[int]:
        """Link-flip mask realizing each single dual X on the physical sector.

        Flipping mask p toggles dual bit p alone (FBC and ancilla mode) or
        bits {p, reference} (periodic case, where X factors must pair up).
        """
        fix = 0
        if self.ancilla_mode:
            fix = self.ribbon_image(self.ancilla_side).x ^ (1 << self.ancilla)
        return [self.ribbon_image(p).x ^ fix for p in range(self.n_dual)]

    def dual_x_mask(self, p: int) -> int:
        return self._dual_x_masks[p]

    # -- operator maps ------------------------------------------------

    def phi_inverse(self, s: PauliString) -> PauliString:
        """LGT image of a dual Pauli string, exact on the physical sector.

        Canonical form: the X-part image (a pure flip string) to the left of
        the Z-part image (a pure sign string), scaled by the i power that
        reassembles honest Y factors. Ordering matters because ribbon images
        do not commute with every magnetic loop.
        """
        if s.n != self.n_dual:
            raise ValueError(f"dual string must act on {self.n_dual} qubits")
        if (
            self.lattice.bc is BC.PBC
            and not self.ancilla_mode
            and s.w_xy % 2 == 1
        ):
            raise ValueError(
                "odd number of dual X/Y factors is unphysical under periodic "
                "boundaries without the ancilla"
            )
        xm = zm = 0
        for p in range(self.n_dual):
            if (s.x >> p) & 1:
                xm ^= self.dual_x_mask(p)
            if (s.z >> p) & 1:
                zm ^= self.w_image(p).z
        w_y = bin(s.x & s.z).count("1")
        xpart = PauliString(self.n_qubits, xm, 0, 0)
        zpart = PauliString(self.n_qubits, 0, zm, 0)
        return (xpart * zpart).scaled(s.phase + w_y)

    def gauss_operator(self, site: int) -> PauliString:
        out = PauliString.identity(self.n_qubits)
        for l in self.lattice.gauss_links(site):
            out = out * self.link_x_image(l)
        return out

    def superselection_x(self) -> PauliString:
        out = PauliString.identity(self.n_qubits)
        for l in self.lattice.cut_links_x():
            out = out * self.link_x_image(l)
        return out

    def superselection_y(self) -> PauliString:
        out = PauliString.identity(self.n_qubits)
        for l in self.lattice.cut_links_y():
            out = out * self.link_x_image(l)
        return out

    def phi_forward(self, o: PauliString) -> PauliString:
        """Dual image of a gauge-invariant LGT string, with exact phase."""
        if self.ancilla_mode:
            raise NotImplementedError("forward map is provided without the ancilla")
        lat = self.lattice
        if o.n != self.n_qubits:
            raise ValueError(f"LGT string must act on {self.n_qubits} qubits")
        for s in range(lat.n_sites):
            if not o.commutes(self.gauss_operator(s)):
                raise ValueError(f"not gauge invariant: fails Gauss law at site {s}")
        if lat.bc is BC.PBC:
            for name, v in (("V_x", self.superselection_x()), ("V_y", self.superselection_y())):
                if not o.commutes(v):
                    raise ValueError(
                        f"unsupported operator: winds around the torus (fails {name})"
                    )

        # electric part: each link maps onto its adjacent plaquette pair
        dual_x = 0
        for l in range(lat.n_links):
            if (o.x >> l) & 1:
                for p in lat.link_plaquettes(l):
                    dual_x ^= 1 << p

        dual_z = self._z_loop_region(o.z)

        w_y = bin(o.x & o.z).count("1")
        xpart = PauliString(self.n_dual, dual_x, 0, 0)
        zpart = PauliString(self.n_dual, 0, dual_z, 0)
        return (xpart * zpart).scaled(o.phase + w_y)

    def _z_loop_region(self, zmask: int) -> int:
        """Plaquette region whose boundary is the given closed z-support."""
        lat = self.lattice
        in_z = lambda l: (zmask >> l) & 1
        r = {}
        if lat.bc is BC.PBC:
            r[(0, 0)] = 0
            for x in range(1, lat.plaq_nx):
                r[(x, 0)] = r[(x - 1, 0)] ^ in_z(lat.link_id(x, 0, 1))
            for x in range(lat.plaq_nx):
                for y in range(1, lat.plaq_ny):
                    r[(x, y)] = r[(x, y - 1)] ^ in_z(lat.link_id(x, y, 0))
        else:
            for y in range(lat.plaq_ny):
                prev = 0  # exterior
                for x in range(lat.plaq_nx):
                    prev = r[(x, y)] = prev ^ in_z(lat.link_id(x, y, 1))
        region = 0
        for (x, y), bit in r.items():
            if bit:
                region |= 1 << lat.plaq_id(x, y)
        # verify the region boundary reproduces the support exactly
        boundary = 0
        for l in range(lat.n_links):
            m = 0
            for p in lat.link_plaquettes(l):
                m ^= (region >> p) & 1
            boundary |= m << l
        if boundary != zmask:
            raise ValueError("z-support is not a closed contractible loop")
        if lat.bc is BC.PBC:
            comp = region ^ ((1 << self.n_dual) - 1)
            nr, nc = bin(region).count("1"), bin(comp).count("1")
            if nr > nc or (nr == nc and (region >> self.ref_plaquette) & 1):
                region = comp
        return region

    # -- outcome maps -------------------------------------------------

    def map_bits(self, s_bits: int, length: int | None = None) -> int:
        """Dual outcome bits: parity of each plaquette's measured links."""
        if length is not None and length != self.n_qubits:
            raise ValueError(f"expected {self.n_qubits} outcome bits")
        b = 0
        for p in range(self.n_dual):
            par = 0
            for l in self.plaquette_z_links(p):
                par ^= (s_bits >> l) & 1
            b |= par << p
        return b

    def bit_map_rows(self) -> list[int]:
        """Row masks of the GF(2) map s -> b (row p ANDed with s, parity)."""
        rows = []
        for p in range(self.n_dual):
            m = 0
            for l in self.plaquette_z_links(p):
                m |= 1 << l
            rows.append(m)
        return rows

    def gauge_group_masks(self) -> list[int]:
        """X-type bit-flip masks spanning the kernel of the outcome map."""
        lat = self.lattice
        masks = []
        for s in range(1, lat.n_sites):  # site 0 dropped: product of all is 1
            g = self.gauss_operator(s)
            masks.append(g.x)
        if lat.bc is BC.PBC:
            masks.append(self.superselection_x().x)
            masks.append(self.superselection_y().x)
        return masks

    def check_physical(self, state, tol: float = 1e-10) -> dict:
        """Sector report: Gauss-law and superselection expectations."""
        from .statevec import expectation

        gauss = [expectation(state, self.gauss_operator(s)) for s in range(self.lattice.n_sites)]
        report = {"gauss": gauss}
        if self.lattice.bc is BC.PBC:
            report["vx"] = expectation(state, self.superselection_x())
            report["vy"] = expectation(state, self.superselection_y())
        vals = gauss + [report.get("vx", 1.0), report.get("vy", 1.0)]
        report["max_deviation"] = max(abs(v - 1.0) for v in vals)
        report["physical"] = report["max_deviation"] <= tol
        return report


# -- observable mini-format -------------------------------------------


@dataclass(frozen=True)
class Observable:
    """A gauge-invariant observable known on both sides of the duality."""

    name: str
    dual: PauliString  # on the V dual qubits
    lgt: PauliString  # on the LGT links (no ancilla)


def parse_observable(ctx: DualityContext, spec: str) -> Observable:
    """Parse the config mini-format.

    Supported forms:
      loop: [p0, p1, ...]   product of the listed plaquettes' magnetic loops
      ribbon: (i, j)        dual X_i X_j electric ribbon
      ising: "<pauli text>" dual-side Pauli string
      lgt: "<pauli text>"   LGT-side Pauli string
    """
    base = DualityContext(ctx.lattice, ctx.ref_plaquette)
    spec = spec.strip()
    kind, _, body = spec.partition(":")
    kind = kind.strip()
    body = body.strip()
    if kind == "loop":
        ids = [int(t) for t in body.strip("[]").replace(",", " ").split()]
        z = 0
        for p in ids:
            if not 0 <= p < base.n_dual:
                raise ValueError(f"bad plaquette id {p}")
            z ^= 1 << p
        dual = PauliString(base.n_dual, 0, z, 0)
    elif kind == "ribbon":
        i, j = (int(t) for t in body.strip("()").replace(",", " ").split())
        if i == j:
            raise ValueError("ribbon endpoints must differ")
        dual = PauliString(base.n_dual, (1 << i) | (1 << j), 0, 0)
    elif kind == "ising":
        dual = PauliString.from_text(body.strip("\"'"), base.n_dual)
    elif kind == "lgt":
        lgt = PauliString.from_text(body.strip("\"'"), base.lattice.n_links)
        dual = base.phi_forward(lgt)
        return Observable(spec, dual, lgt)
    else:
        raise ValueError(f"unknown observable kind {kind!r} in {spec!r}")
    return Observable(spec, dual, base.phi_inverse(dual))
