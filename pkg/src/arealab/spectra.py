"""Exact diagonalization, density-of-states counting, and low-energy states.

Full spectra come from dense Hermitian eigensolves; the lowest-k path uses
implicitly restarted Lanczos with a deterministic start vector.  Spectra of
region-restricted Hamiltonians can be cached to disk.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

from . import cache as spectral_cache
from .hamiltonian import assemble, assemble_sparse, CapacityError, HERMITICITY_RTOL
from .lattice import Region
from .reports import CheckRecord

RESIDUAL_RTOL = 1e-8


class CoverageError(RuntimeError):
    """The retained spectrum does not cover the requested energy."""


class ConvergenceError(RuntimeError):
    """Iterative eigensolver failed to converge."""


@dataclass(frozen=True)
class SpectralData:
    """Ascending eigenvalues with orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    completeness: str = "full"      # 'full' | 'lowest-k'
    source: str = ""

    def __post_init__(self):
        w = np.asarray(self.eigenvalues, dtype=float)
        v = np.asarray(self.eigenvectors)
        if np.any(np.diff(w) < -1e-12):
            raise ValueError("eigenvalues must be ascending")
        gram = v.conj().T @ v
        if np.linalg.norm(gram - np.eye(v.shape[1])) > 1e-8 * math.sqrt(v.shape[1]):
            raise ValueError("eigenvectors are not orthonormal")
        object.__setattr__(self, "eigenvalues", w)
        object.__setattr__(self, "eigenvectors", v)

    @property
    def dim(self):
        return self.eigenvectors.shape[0]

    @property
    def count(self):
        return self.eigenvalues.shape[0]

    @property
    def ground_energy(self):
        return float(self.eigenvalues[0])

    @property
    def ground_state(self):
        return self.eigenvectors[:, 0]

    def residuals(self, matrix):
        hv = matrix @ self.eigenvectors
        return np.linalg.norm(hv - self.eigenvectors * self.eigenvalues, axis=0)

    def check_residuals(self, matrix):
        scale = max(float(np.abs(self.eigenvalues).max()), 1e-300)
        worst = float(self.residuals(matrix).max())
        if worst > RESIDUAL_RTOL * scale:
            raise ValueError(
                f"eigenpair residual {worst:.3e} exceeds {RESIDUAL_RTOL:.0e} * ||H||"
            )
        return worst


def diagonalize(matrix, mode="full", k=6, tol=1e-10, seed=7, source=""):
    """Diagonalize a Hermitian matrix.

    mode='full' uses a dense eigensolve; mode='lowest-k' uses restarted
    Lanczos seeded deterministically and returns the k lowest pairs.
    """
    if scipy.sparse.issparse(matrix):
        herm_err = abs(matrix - matrix.conj().T).max()
        scale = abs(matrix).max() if matrix.nnz else 0.0
    else:
        matrix = np.asarray(matrix)
        herm_err = np.linalg.norm(matrix - matrix.conj().T)
        scale = np.linalg.norm(matrix)
    if herm_err > HERMITICITY_RTOL * max(1.0, scale):
        raise ValueError(f"input is not Hermitian (deviation {herm_err:.3e})")

    if mode == "full":
        if scipy.sparse.issparse(matrix):
            matrix = matrix.toarray()
        w, v = scipy.linalg.eigh(matrix)
        data = SpectralData(w, v, "full", source)
    elif mode == "lowest-k":
        dim = matrix.shape[0]
        k = min(int(k), dim - 2)
        if k < 1:
            raise ValueError("lowest-k mode needs dimension >= 3")
        rng = np.random.default_rng(seed)
        v0 = rng.standard_normal(dim)
        try:
            w, v = scipy.sparse.linalg.eigsh(matrix, k=k, which="SA", v0=v0, tol=tol)
        except scipy.sparse.linalg.ArpackNoConvergence as exc:
            raise ConvergenceError(
                f"Lanczos failed to converge: {len(exc.eigenvalues)} of {k} pairs"
            ) from exc
        order = np.argsort(w)
        data = SpectralData(w[order], v[:, order], "lowest-k", source)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    data.check_residuals(matrix)
    return data


def region_spectrum(hamiltonian, region, mode="full", k=6, cache_dir=None,
                    dense_cap_sites=14):
    """Spectrum of the terms fully inside `region`, on the region site basis.

    Results are cached to disk keyed by (terms, region, mode) when a cache
    directory is given.
    """
    terms = hamiltonian.terms_inside(region)
    key = None
    if cache_dir is not None:
        key = spectral_cache.spectrum_key(terms, region, mode, k)
        hit = spectral_cache.load(cache_dir, key)
        if hit is not None:
            return hit
    if region.size > dense_cap_sites and mode == "full":
        raise CapacityError(
            f"full spectrum of a {region.size}-site region exceeds the dense cap "
            f"({dense_cap_sites}); use mode='lowest-k'"
        )
    if mode == "full":
        matrix = assemble(terms, region, dense_cap_sites)
    else:
        matrix = assemble_sparse(terms, region)
    data = diagonalize(matrix, mode=mode, k=k, source=f"region{region.sites}")
    if cache_dir is not None:
        spectral_cache.save(cache_dir, key, hamiltonian.lattice, region, terms, data)
    return data


def dos_count(spectrum, energy):
    """Largest 0-based index with eigenvalue <= energy; None below the ground.

    The count of eigenvalues <= energy is this index plus one.
    """
    w = spectrum.eigenvalues
    if energy < w[0]:
        return None
    if spectrum.completeness != "full" and w[-1] <= energy:
        raise CoverageError(
            f"retained spectrum tops out at {w[-1]} <= requested energy {energy}"
        )
    return int(np.searchsorted(w, energy, side="right")) - 1


def frustration_check(hamiltonian, region, *, ground_state=None,
                      region_ground_energy=None, cache_dir=None, slack=1e-9):
    """Ground-state energy inside a region sits within a boundary-sized window.

    With PSD-normalized terms, the expectation of the region Hamiltonian in
    the global ground state lies in [e0, e0 + J * 3**s * |boundary|].
    """
    if not hamiltonian.psd_shifted:
        raise ValueError("frustration check requires a PSD-normalized Hamiltonian")
    lat = hamiltonian.lattice
    if ground_state is None:
        whole = Region.whole(lat)
        if lat.nsites <= 14:
            ground_state = region_spectrum(hamiltonian, whole, cache_dir=cache_dir).ground_state
        else:
            spec = diagonalize(assemble_sparse(hamiltonian.terms, whole),
                               mode="lowest-k", k=1)
            ground_state = spec.ground_state
    if region_ground_energy is None:
        if region.size == 0:
            region_ground_energy = 0.0
        else:
            rs = region_spectrum(hamiltonian, region, cache_dir=cache_dir)
            region_ground_energy = rs.ground_energy
    inside = hamiltonian.terms_inside(region)
    whole = Region.whole(lat)
    hx = assemble(inside, whole) if inside else np.zeros((lat.q ** lat.nsites,) * 2)
    expect = float(np.real(np.vdot(ground_state, hx @ ground_state)))
    bound = hamiltonian.norm_bound * 3 ** lat.ndim * region.boundary().size
    lower = CheckRecord.compare(
        "frustration_lower", expect, region_ground_energy, "ge", slack=slack,
        region=str(region.sites),
    )
    upper = CheckRecord.compare(
        "frustration_upper", expect, region_ground_energy + bound, "le", slack=slack,
        region=str(region.sites),
    )
    return [lower, upper]


@dataclass
class DosFit:
    """Constants bounding the low-energy eigenvalue count across regions.

    The fitted bound: count index <= c2 * (tau*|X|)**(gamma*(e-e0) + eta*|dX|),
    evaluated at the boundary-proportional energy only.
    """

    tau: float
    gamma: float
    eta: float
    c2: float
    success: bool
    worst_slack: float = math.inf
    regions: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    def log_count_bound(self, region_size, energy_above_ground, boundary_count):
        exponent = self.gamma * energy_above_ground + self.eta * boundary_count
        return math.log(self.c2) + exponent * math.log(self.tau * region_size)


def boundary_energy_window(hamiltonian, region, margin_velocity):
    """Energy 2J*3**s*|boundary| + e0 + 40v at which the count bound is fitted."""
    s = hamiltonian.lattice.ndim
    return (
        2 * hamiltonian.norm_bound * 3 ** s * region.boundary().size
        + 40.0 * margin_velocity
    )


def fit_dos_growth(hamiltonian, regions, tau=1.0, c2_cap=100.0,
                   gamma_grid=None, eta_grid=None, cache_dir=None):
    """Fit (gamma, eta, c2) so the eigenvalue-count bound holds on every region.

    For fixed tau, scans a log grid for the smallest (gamma, then eta) whose
    required c2 stays below the cap, then reports the minimal c2.  Evaluated
    only at the boundary-proportional energy window.
    """
    if gamma_grid is None:
        gamma_grid = np.geomspace(1e-5, 10.0, 25)
    if eta_grid is None:
        eta_grid = np.concatenate([[0.0], np.geomspace(1e-4, 10.0, 13)])
    s = hamiltonian.lattice.ndim
    v = 2 * hamiltonian.norm_bound * 5 ** s
    rows = []
    for region in regions:
        spec = region_spectrum(hamiltonian, region, cache_dir=cache_dir)
        e0 = spec.ground_energy
        window = 2 * hamiltonian.norm_bound * 3 ** s * region.boundary().size + 40 * v
        omega = dos_count(spec, e0 + window)
        rows.append(
            dict(size=region.size, boundary=region.boundary().size,
                 window=window, omega=omega)
        )
    best = None
    for gamma in gamma_grid:
        for eta in eta_grid:
            needed_c2 = 0.0
            for r in rows:
                if r["omega"] is None or r["omega"] == 0:
                    continue
                expo = gamma * r["window"] + eta * r["boundary"]
                log_c2 = math.log(r["omega"]) - expo * math.log(tau * r["size"])
                needed_c2 = max(needed_c2, math.exp(log_c2))
            needed_c2 = max(needed_c2, 1.0)
            if needed_c2 <= c2_cap:
                best = (gamma, eta, needed_c2)
                break
        if best:
            break
    if best is None:
        return DosFit(tau, math.nan, math.nan, math.nan, success=False,
                      regions=rows, diagnostics={"c2_cap": c2_cap})
    gamma, eta, c2 = best
    worst = math.inf
    for r in rows:
        if r["omega"] is None or r["omega"] == 0:
            continue
        lhs = math.log(r["omega"])
        rhs = math.log(c2) + (gamma * r["window"] + eta * r["boundary"]) * math.log(
            tau * r["size"]
        )
        worst = min(worst, rhs - lhs)
    fit = DosFit(tau, float(gamma), float(eta), float(c2), success=True,
                 worst_slack=worst, regions=rows, diagnostics={"c2_cap": c2_cap})
    if worst < -1e-12:
        raise AssertionError("fitted count bound violated on a fit region")
    return fit


@dataclass(frozen=True)
class LowEnergyState:
    """Normalized superposition of eigenstates below an energy ceiling."""

    vector: np.ndarray
    amplitudes: np.ndarray
    ceiling: float
    energy_span: float      # ceiling - ground energy

    @property
    def norm(self):
        return float(np.linalg.norm(self.vector))


def low_energy_superposition(spectrum, amplitudes, ceiling):
    """Build a normalized superposition restricted below the ceiling energy."""
    w = spectrum.eigenvalues
    amps = np.asarray(amplitudes, dtype=complex)
    if amps.shape[0] > w.shape[0]:
        raise ValueError("more amplitudes than retained eigenstates")
    support = np.nonzero(np.abs(amps) > 0)[0]
    if support.size == 0:
        raise ValueError("no nonzero amplitudes")
    if np.any(w[support] > ceiling + 1e-12):
        raise ValueError("amplitude on an eigenstate above the energy ceiling")
    vec = spectrum.eigenvectors[:, : amps.shape[0]] @ amps
    nrm = np.linalg.norm(vec)
    vec = vec / nrm
    return LowEnergyState(
        vector=vec,
        amplitudes=amps / nrm,
        ceiling=float(ceiling),
        energy_span=float(ceiling - w[0]),
    )


def single_mode_state(ground_state, lattice, site_operator, momentum,
                      expectation_tol=1e-8, norm_tol=1e-10):
    """Momentum-weighted single-site excitation applied to the ground state.

    Requires a fully periodic lattice and a site operator with vanishing
    ground-state expectation at every site.
    """
    from . import tensorops

    if not all(lattice.periodic):
        raise ValueError("single-mode excitations need periodic boundaries")
    momentum = tuple(float(kk) for kk in momentum)
    if len(momentum) != lattice.ndim:
        raise ValueError("momentum must have one component per axis")
    z = np.asarray(site_operator)
    n = lattice.nsites
    whole = Region.whole(lattice)
    out = np.zeros(lattice.q ** n, dtype=complex)
    for site in lattice.sites():
        pos = whole.position(site)
        zpsi = tensorops.apply_on_subset(z, ground_state, [pos], n, lattice.q)
        expect = np.vdot(ground_state, zpsi)
        if abs(expect) > expectation_tol:
            raise ValueError(
                f"site operator has nonzero ground-state expectation {expect:.3e} "
                f"at {site}"
            )
        phase = np.exp(1j * np.dot(momentum, site))
        out += phase * zpsi
    nrm = np.linalg.norm(out)
    if nrm < norm_tol:
        raise ValueError("single-mode ansatz vector vanishes for this operator")
    return out / nrm
