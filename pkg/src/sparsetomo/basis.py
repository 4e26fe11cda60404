"""Sparsity bases: plain Fock basis, or Fock basis with one entangled pair."""
from dataclasses import dataclass, field
from math import comb, sqrt

from .fock import config_from_waveguides, enumerate_configs

ORTHO_TOL = 1e-12


@dataclass(frozen=True)
class BasisElement:
    terms: tuple  # ((amplitude, occupations), ...)

    @property
    def photon_number(self):
        return sum(self.terms[0][1])


@dataclass(frozen=True)
class Basis:
    elements: tuple
    kind: str
    n_photons: int
    n_waveguides: int
    pair: tuple = None  # 1-based (a, b) for the entangled kind

    def __len__(self):
        return len(self.elements)

    def descriptor(self):
        d = {"kind": self.kind, "n_waveguides": self.n_waveguides, "n_photons": self.n_photons}
        if self.pair is not None:
            d["entangled_pair"] = list(self.pair)
        return d


@dataclass
class Violation:
    kind: str  # "count" | "photon_number" | "normalization" | "orthogonality"
    indices: tuple
    detail: str = field(default="")


def fock_basis(n_waveguides, n_photons):
    idx = enumerate_configs(n_waveguides, n_photons)
    elements = tuple(BasisElement(((1.0 + 0j, c),)) for c in idx)
    return Basis(elements, "fock", n_photons, n_waveguides)


def entangled_pair_slots(n_waveguides, a, b):
    """Index slots of |2_a 1_b> and |1_a 2_b> in the 3-photon ordering."""
    idx = enumerate_configs(n_waveguides, 3)
    return (
        idx.index_of(config_from_waveguides(n_waveguides, {a: 2, b: 1})),
        idx.index_of(config_from_waveguides(n_waveguides, {a: 1, b: 2})),
    )


def entangled_basis(n_waveguides, n_photons, wg_a, wg_b):
    """Fock basis with |2_a 1_b>, |1_a 2_b> replaced by their +/- superpositions.

    |psi> takes the slot of |2_a 1_b> and |psi_perp> the slot of |1_a 2_b>.
    Waveguides are 1-based.
    """
    if n_photons != 3:
        raise ValueError("entangled basis is defined for 3 photons only")
    if wg_a == wg_b or not (1 <= wg_a <= n_waveguides and 1 <= wg_b <= n_waveguides):
        raise ValueError(f"invalid entangled pair ({wg_a}, {wg_b}) for {n_waveguides} waveguides")
    base = fock_basis(n_waveguides, 3)
    i_psi, i_perp = entangled_pair_slots(n_waveguides, wg_a, wg_b)
    c21 = base.elements[i_psi].terms[0][1]
    c12 = base.elements[i_perp].terms[0][1]
    s = 1.0 / sqrt(2.0)
    elements = list(base.elements)
    elements[i_psi] = BasisElement(((s + 0j, c21), (s + 0j, c12)))
    elements[i_perp] = BasisElement(((s + 0j, c21), (-s + 0j, c12)))
    return Basis(tuple(elements), "entangled", 3, n_waveguides, (int(wg_a), int(wg_b)))


def basis_from_descriptor(d):
    if d["kind"] == "fock":
        return fock_basis(int(d["n_waveguides"]), int(d["n_photons"]))
    if d["kind"] == "entangled":
        a, b = d["entangled_pair"]
        return entangled_basis(int(d["n_waveguides"]), int(d["n_photons"]), int(a), int(b))
    raise ValueError(f"unknown basis kind {d['kind']!r}")


def validate(basis, tol=ORTHO_TOL):
    """Check count, photon numbers and orthonormality; returns a list of Violations."""
    out = []
    expected = comb(basis.n_waveguides + basis.n_photons - 1, basis.n_photons)
    if len(basis.elements) != expected:
        out.append(Violation("count", (), f"{len(basis.elements)} elements, expected {expected}"))

    by_config = {}
    flagged = set()
    for i, el in enumerate(basis.elements):
        bad = [c for _, c in el.terms
               if sum(c) != basis.n_photons or len(c) != basis.n_waveguides]
        if not el.terms or bad:
            out.append(Violation("photon_number", (i,), f"terms {bad or 'missing'}"))
            flagged.add(i)
            continue
        for a, c in el.terms:
            by_config.setdefault(tuple(c), []).append((i, complex(a)))

    gram = {}
    for entries in by_config.values():
        for i, a in entries:
            for j, b in entries:
                if i <= j:
                    gram[i, j] = gram.get((i, j), 0) + a.conjugate() * b
    for i in range(len(basis.elements)):
        if i in flagged:
            continue
        g = gram.get((i, i), 0)
        if abs(g - 1) > tol:
            out.append(Violation("normalization", (i,), f"<e|e> = {g:.15g}"))
    for (i, j), g in sorted(gram.items()):
        if i != j and abs(g) > tol:
            out.append(Violation("orthogonality", (i, j), f"<e_i|e_j> = {g:.15g}"))
    return out
