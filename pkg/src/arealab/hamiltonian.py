"""Finite-range lattice Hamiltonians built from neighbor-supported terms.

Every Hamiltonian is a sum of Hermitian terms, each anchored at a site and
supported within Chebyshev radius 1 of its anchor.  The module builds the
standard spin-1/2 models, shifts each term to positive semi-definite form,
splits a Hamiltonian across a region cut, and assembles dense or sparse
matrices on an ordered site basis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sparse

from .lattice import LatticeSpec, Region, site_distance
from . import tensorops

HERMITICITY_RTOL = 1e-10

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]])
PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]])
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]])


class ModelError(ValueError):
    """Unknown model name or unsupported model/lattice combination."""


class CapacityError(RuntimeError):
    """Dense assembly would exceed the configured site cap."""


def operator_norm(mat):
    """Largest singular value; for Hermitian input the largest |eigenvalue|."""
    mat = np.asarray(mat)
    if np.linalg.norm(mat - mat.conj().T) <= HERMITICITY_RTOL * max(
        1.0, np.linalg.norm(mat)
    ):
        return float(np.max(np.abs(np.linalg.eigvalsh(mat))))
    return float(np.linalg.norm(mat, 2))


@dataclass(frozen=True)
class LocalTerm:
    """Hermitian term anchored at a site, supported on its radius-1 ball.

    The matrix acts on the tensor factor of `support` sites taken in
    lexicographic order.
    """

    anchor: tuple
    support: tuple
    matrix: np.ndarray

    def __post_init__(self):
        support = tuple(tuple(int(c) for c in s) for s in self.support)
        if len(set(support)) != len(support):
            raise ValueError("duplicate sites in term support")
        if list(support) != sorted(support):
            raise ValueError(
                "term support must be given in lexicographic site order "
                "(the matrix ordering is fixed by it)"
            )
        mat = np.asarray(self.matrix)
        herm_err = np.linalg.norm(mat - mat.conj().T)
        if herm_err > HERMITICITY_RTOL * max(1.0, np.linalg.norm(mat)):
            raise ValueError(f"term at {self.anchor} is not Hermitian (|A-A^+|={herm_err:.3e})")
        object.__setattr__(self, "anchor", tuple(int(c) for c in self.anchor))
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "matrix", mat)

    @property
    def norm(self):
        return operator_norm(self.matrix)

    def min_eigenvalue(self):
        return float(np.linalg.eigvalsh(self.matrix)[0])

    def shifted_to_psd(self):
        lo = self.min_eigenvalue()
        if lo >= 0.0:
            return self, 0.0
        mat = self.matrix - lo * np.eye(self.matrix.shape[0])
        return LocalTerm(self.anchor, self.support, mat), -lo

    def supported_inside(self, region):
        rs = set(region.sites)
        return all(s in rs for s in self.support)


@dataclass(frozen=True)
class LocalHamiltonian:
    """Sum of radius-1 terms with a common operator-norm bound J."""

    lattice: LatticeSpec
    terms: tuple
    psd_shifted: bool = False

    def __post_init__(self):
        q = self.lattice.q
        for t in self.terms:
            for s in t.support:
                self.lattice.require(s)
                if site_distance(s, t.anchor, self.lattice) > 1:
                    raise ValueError(
                        f"term at {t.anchor} has support site {s} beyond radius 1"
                    )
            want = q ** len(t.support)
            if t.matrix.shape != (want, want):
                raise ValueError(
                    f"term at {t.anchor}: matrix shape {t.matrix.shape} does not "
                    f"match support dimension {want}"
                )
        object.__setattr__(self, "terms", tuple(self.terms))

    @property
    def norm_bound(self):
        """J: the maximum operator norm over the terms."""
        if not self.terms:
            return 0.0
        return max(t.norm for t in self.terms)

    def terms_inside(self, region):
        return tuple(t for t in self.terms if t.supported_inside(region))


@dataclass(frozen=True)
class HamiltonianPartition:
    """Terms split by a region: fully inside, fully outside, and crossing."""

    region: Region
    inside: tuple
    crossing: tuple
    outside: tuple
    boundary_count: int
    crossing_norm: float
    crossing_norm_bound: float

    @property
    def bound_holds(self):
        return self.crossing_norm <= self.crossing_norm_bound + 1e-9


def partition(hamiltonian, region):
    """Split terms by the region cut and check the crossing-norm bound.

    The crossing part collects every term acting on both the region and its
    exterior; its norm is bounded by J * 3**s * |boundary|.
    """
    rset = set(region.sites)
    inside, crossing, outside = [], [], []
    for t in hamiltonian.terms:
        ssites = set(t.support)
        if ssites <= rset:
            inside.append(t)
        elif not (ssites & rset):
            outside.append(t)
        else:
            crossing.append(t)
    s = hamiltonian.lattice.ndim
    boundary_count = region.boundary().size
    bound = hamiltonian.norm_bound * 3 ** s * boundary_count
    norm = 0.0
    if crossing:
        joint = Region(
            hamiltonian.lattice,
            tuple({site for t in crossing for site in t.support}),
        )
        norm = operator_norm(assemble(crossing, joint))
    part = HamiltonianPartition(
        region=region,
        inside=tuple(inside),
        crossing=tuple(crossing),
        outside=tuple(outside),
        boundary_count=boundary_count,
        crossing_norm=norm,
        crossing_norm_bound=bound,
    )
    if not part.bound_holds:
        raise AssertionError(
            f"crossing norm {norm} exceeds bound {bound}; term radius violated?"
        )
    return part


def psd_normalize(hamiltonian):
    """Shift every term by -min eigenvalue * identity; spectrum shifts globally."""
    shifted = []
    for t in hamiltonian.terms:
        st, _ = t.shifted_to_psd()
        shifted.append(st)
    return LocalHamiltonian(hamiltonian.lattice, tuple(shifted), psd_shifted=True)


def psd_shift_total(hamiltonian):
    """Total identity shift applied by psd_normalize."""
    return float(sum(max(0.0, -t.min_eigenvalue()) for t in hamiltonian.terms))


def assemble(terms, basis, dense_cap_sites=14):
    """Dense Hermitian matrix of the given terms on the basis region.

    Site ordering is the basis region's lexicographic order.  Real dtype is
    used when every term matrix is real.
    """
    if isinstance(basis, LatticeSpec):
        basis = Region.whole(basis)
    n = basis.size
    q = basis.lattice.q
    if n > dense_cap_sites:
        raise CapacityError(
            f"dense assembly of {n} sites exceeds the cap of {dense_cap_sites}; "
            "use the sparse/iterative path"
        )
    terms = tuple(terms)
    rset = set(basis.sites)
    for t in terms:
        if not set(t.support) <= rset:
            raise ValueError(f"term at {t.anchor} not supported inside the basis region")
    dtype = np.float64
    if any(np.iscomplexobj(t.matrix) and np.abs(t.matrix.imag).max() > 0 for t in terms):
        dtype = np.complex128
    H = np.zeros((q ** n, q ** n), dtype=dtype)
    for t in terms:
        positions = [basis.position(s) for s in t.support]
        mat = t.matrix if dtype == np.complex128 else t.matrix.real
        tensorops.add_embedded(H, mat, positions, n, q)
    return H


def assemble_sparse(terms, basis):
    """Sparse CSR assembly for the iterative eigensolver path."""
    if isinstance(basis, LatticeSpec):
        basis = Region.whole(basis)
    n = basis.size
    q = basis.lattice.q
    dim = q ** n
    rows, cols, vals = [], [], []
    for t in terms:
        positions = [basis.position(s) for s in t.support]
        base, offs = tensorops.subset_indices(positions, n, q)
        m = np.asarray(t.matrix)
        for a in range(m.shape[0]):
            for b in range(m.shape[1]):
                if m[a, b] != 0:
                    rows.append(base + offs[a])
                    cols.append(base + offs[b])
                    vals.append(np.full(base.shape, m[a, b]))
    if not rows:
        return sparse.csr_matrix((dim, dim))
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    return sparse.csr_matrix((vals, (rows, cols)), shape=(dim, dim))


def _axis_bonds(lattice):
    """Nearest-neighbor pairs along each axis (wrapping on periodic axes)."""
    bonds = []
    for x in lattice.sites():
        for axis in range(lattice.ndim):
            y = list(x)
            y[axis] += 1
            if y[axis] >= lattice.extents[axis]:
                if not lattice.periodic[axis] or lattice.extents[axis] <= 2:
                    continue
                y[axis] = 0
            bonds.append((x, tuple(y)))
    return bonds


def _bond_term(x, y, mat):
    # anchor at the lexicographically smaller endpoint; matrix given in the
    # (x, y) site order and transposed into lexicographic support order
    a, b = sorted((x, y))
    if (a, b) != (x, y):
        q = int(round(math.sqrt(mat.shape[0])))
        mat = mat.reshape(q, q, q, q).transpose(1, 0, 3, 2).reshape(q * q, q * q)
    return LocalTerm(a, (a, b), mat)


def build_model(lattice, model, **params):
    """Instantiate a named spin model as a LocalHamiltonian.

    Models: 'tfi' (g), 'heisenberg' (jx, jy, jz, h), 'random2local'
    (seed, strength), 'diagonal_counting'.
    """
    name = model.replace("-", "_").lower()
    if lattice.q != 2:
        raise ModelError(f"spin-1/2 model {model!r} requires q=2, got q={lattice.q}")
    terms = []
    if name in ("tfi", "transverse_field_ising"):
        g = float(params.pop("g", 1.0))
        _reject_extra(params)
        zz = -np.kron(PAULI_Z, PAULI_Z)
        for x, y in _axis_bonds(lattice):
            terms.append(_bond_term(x, y, zz))
        for x in lattice.sites():
            terms.append(LocalTerm(x, (x,), -g * PAULI_X))
    elif name == "heisenberg":
        jx = float(params.pop("jx", 1.0))
        jy = float(params.pop("jy", 1.0))
        jz = float(params.pop("jz", 1.0))
        h = float(params.pop("h", 0.0))
        _reject_extra(params)
        bond = (
            jx * np.kron(PAULI_X, PAULI_X)
            + jy * np.kron(PAULI_Y, PAULI_Y)
            + jz * np.kron(PAULI_Z, PAULI_Z)
        )
        for x, y in _axis_bonds(lattice):
            terms.append(_bond_term(x, y, bond))
        if h != 0.0:
            for x in lattice.sites():
                terms.append(LocalTerm(x, (x,), h * PAULI_Z))
    elif name in ("random2local", "random_2_local"):
        seed = int(params.pop("seed", 0))
        strength = float(params.pop("strength", 1.0))
        _reject_extra(params)
        rng = np.random.default_rng(seed)
        for x, y in _axis_bonds(lattice):
            a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
            herm = (a + a.conj().T) / 2
            herm *= strength / max(operator_norm(herm), 1e-12)
            terms.append(_bond_term(x, y, herm))
    elif name == "diagonal_counting":
        _reject_extra(params)
        excite = np.diag([1.0, 0.0])
        for x in lattice.sites():
            terms.append(LocalTerm(x, (x,), excite))
    else:
        raise ModelError(f"unknown model {model!r}")
    return LocalHamiltonian(lattice, tuple(terms))


def _reject_extra(params):
    if params:
        raise ModelError(f"unknown model parameters: {sorted(params)}")
