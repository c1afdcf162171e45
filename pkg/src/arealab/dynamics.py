"""Heisenberg-picture dynamics and commutator-norm light cones.

All time evolution is spectral (the systems are small): an operator evolves
by phase twisting in the Hamiltonian eigenbasis.  The module evaluates the
light-cone bound on commutator norms, scans it against measured values, and
checks the interaction-picture defect inequality that underlies it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .hamiltonian import operator_norm
from .lattice import Region, set_distance
from .reports import CheckRecord
from .spectra import SpectralData, diagonalize
from . import tensorops


def lr_velocity(norm_bound, ndim):
    """Propagation-speed constant 2 * J * 5**s for radius-1 interactions."""
    return 2.0 * norm_bound * 5 ** ndim


def heisenberg_evolve(operator, spectrum, t):
    """e^{iHt} X e^{-iHt} from a full spectrum, by eigenbasis phase twisting."""
    if spectrum.completeness != "full":
        raise ValueError("Heisenberg evolution needs the full spectrum")
    u = spectrum.eigenvectors
    w = spectrum.eigenvalues
    x_tilde = u.conj().T @ operator @ u
    phases = np.exp(1j * w * t)
    return u @ (np.outer(phases, phases.conj()) * x_tilde) @ u.conj().T


def commutator_norm(a, b):
    c = a @ b - b @ a
    # i[A,B] is Hermitian for Hermitian A, B
    if (
        np.linalg.norm(a - a.conj().T) < 1e-10 * max(1.0, np.linalg.norm(a))
        and np.linalg.norm(b - b.conj().T) < 1e-10 * max(1.0, np.linalg.norm(b))
    ):
        return float(np.max(np.abs(np.linalg.eigvalsh(1j * c))))
    return float(np.linalg.norm(c, 2))


def lr_bound(support_size, separation, t, norm_bound, ndim):
    """Light-cone bound 2|X| (vt)^floor(d/2)/floor(d/2)! in log space."""
    if t < 0 or separation < 0:
        raise ValueError("separation and time must be non-negative")
    k = separation // 2
    v = lr_velocity(norm_bound, ndim)
    if v * t == 0.0:
        return 2.0 * support_size if k == 0 else 0.0
    log_val = (
        math.log(2.0 * support_size)
        + k * math.log(v * t)
        - math.lgamma(k + 1)
    )
    return math.exp(log_val) if log_val < 700 else math.inf


def lr_term_bound(r, t, norm_bound, ndim, x_norm=1.0):
    """Single-term bound 2 J ||X|| (vt)^floor((r-1)/2)/floor((r-1)/2)!.

    Bounds the commutator norm of an evolved operator with one Hamiltonian
    term anchored at distance r >= 2 from the operator support.
    """
    if r < 2:
        raise ValueError("single-term bound needs anchor distance >= 2")
    k = (r - 1) // 2
    v = lr_velocity(norm_bound, ndim)
    if v * t == 0.0:
        return 2.0 * norm_bound * x_norm if k == 0 else 0.0
    log_val = (
        math.log(2.0 * norm_bound * x_norm)
        + k * math.log(v * t)
        - math.lgamma(k + 1)
    )
    return math.exp(log_val) if log_val < 700 else math.inf


@dataclass
class LightConeScan:
    """Measured commutator norms against the light-cone bound on a time grid."""

    separation: int
    support_size: int
    times: np.ndarray
    measured: np.ndarray
    bounds: np.ndarray
    records: list = field(default_factory=list)

    @property
    def all_pass(self):
        return all(r.passed for r in self.records)

    def rows(self):
        return list(zip(self.times, self.measured, self.bounds))


def default_time_grid(separation, velocity, points=20, vt_max=None):
    """Log-spaced times spanning vt in [0.01, 2d] unless overridden."""
    if vt_max is None:
        vt_max = 2.0 * max(separation, 1)
    vts = np.geomspace(0.01, vt_max, points)
    return vts / velocity


def lr_cone_scan(hamiltonian, x_op, x_sites, y_op, y_sites, times=None,
                 spectrum=None, slack=1e-9):
    """Measure ||[X(t), Y]|| on a time grid against the light-cone bound.

    Supports must be disjoint and both operators at most unit norm.
    """
    lat = hamiltonian.lattice
    x_region = Region(lat, tuple(x_sites))
    y_region = Region(lat, tuple(y_sites))
    if set(x_region.sites) & set(y_region.sites):
        raise ValueError("operator supports must be disjoint")
    if operator_norm(x_op) > 1 + 1e-9 or operator_norm(y_op) > 1 + 1e-9:
        raise ValueError("operators must have norm at most 1")
    d = set_distance(x_region.sites, y_region.sites, lat)
    v = lr_velocity(hamiltonian.norm_bound, lat.ndim)
    if times is None:
        times = default_time_grid(d, v)
    whole = Region.whole(lat)
    if spectrum is None:
        from .hamiltonian import assemble

        spectrum = diagonalize(assemble(hamiltonian.terms, whole))
    n, q = lat.nsites, lat.q
    x_full = tensorops.embed_operator(
        np.asarray(x_op), [whole.position(s) for s in x_region.sites], n, q
    )
    y_full = tensorops.embed_operator(
        np.asarray(y_op), [whole.position(s) for s in y_region.sites], n, q
    )
    u = spectrum.eigenvectors
    w = spectrum.eigenvalues
    x_tilde = u.conj().T @ x_full @ u
    y_tilde = u.conj().T @ y_full @ u
    measured, bounds, records = [], [], []
    for t in np.asarray(times, dtype=float):
        phases = np.exp(1j * w * t)
        xt = (np.outer(phases, phases.conj())) * x_tilde
        m = commutator_norm(xt, y_tilde)
        b = lr_bound(x_region.size, d, t, hamiltonian.norm_bound, lat.ndim)
        measured.append(m)
        bounds.append(b)
        records.append(
            CheckRecord.compare(
                "light_cone", m, b, "le", slack=slack,
                vacuous=b > 2.0 * min(1.0, operator_norm(x_op))
                * min(1.0, operator_norm(y_op)),
                t=t, separation=d,
            )
        )
    scan = LightConeScan(
        separation=int(d),
        support_size=x_region.size,
        times=np.asarray(times, dtype=float),
        measured=np.asarray(measured),
        bounds=np.asarray(bounds),
        records=records,
    )
    if not scan.all_pass:
        worst = min(r.margin for r in records)
        raise AssertionError(f"light-cone bound violated (worst margin {worst:.3e})")
    return scan


def _adaptive_simpson(f, a, b, rel_tol, max_depth=30):
    def simpson(lo, hi, flo, fmid, fhi):
        return (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi)

    def recurse(lo, hi, flo, fmid, fhi, whole, depth):
        mid = (lo + hi) / 2.0
        lmid = (lo + mid) / 2.0
        rmid = (mid + hi) / 2.0
        flm = f(lmid)
        frm = f(rmid)
        left = simpson(lo, mid, flo, flm, fmid)
        right = simpson(mid, hi, fmid, frm, fhi)
        err = left + right - whole
        if depth >= max_depth or abs(err) <= 15.0 * rel_tol * max(
            abs(left + right), 1e-300
        ):
            return left + right + err / 15.0
        return recurse(lo, mid, flo, flm, fmid, left, depth + 1) + recurse(
            mid, hi, fmid, frm, fhi, right, depth + 1
        )

    fa, fb = f(a), f(b)
    fm = f((a + b) / 2.0)
    whole = simpson(a, b, fa, fm, fb)
    return recurse(a, b, fa, fm, fb, whole, 0)


def defect_bound_check(h, x, y, t, rel_tol=1e-6):
    """Interaction-picture defect inequality for Hermitian H, X, Y.

    The norm of e^{i(H-X)t} e^{-iHt} - e^{i(H-X-Y)t} e^{-i(H-Y)t} is bounded
    by the double time integral of ||[X(t1), Y]||, evaluated here as a single
    weighted integral with adaptive Simpson quadrature.  The quadrature
    tolerance is added to the bound so integration error cannot produce a
    false failure.
    """
    h = np.asarray(h)
    x = np.asarray(x)
    y = np.asarray(y)
    for name, m in (("H", h), ("X", x), ("Y", y)):
        if np.linalg.norm(m - m.conj().T) > 1e-10 * max(1.0, np.linalg.norm(m)):
            raise ValueError(f"{name} must be Hermitian")

    def expi(mat, tt):
        w, u = scipy.linalg.eigh(mat)
        return (u * np.exp(1j * w * tt)) @ u.conj().T

    lhs_op = expi(h - x, t) @ expi(h, -t) - expi(h - x - y, t) @ expi(h - y, -t)
    lhs = float(np.linalg.norm(lhs_op, 2))

    wh, uh = scipy.linalg.eigh(h)
    x_tilde = uh.conj().T @ x @ uh
    y_tilde = uh.conj().T @ y @ uh

    def integrand(t1):
        phases = np.exp(1j * wh * t1)
        xt = np.outer(phases, phases.conj()) * x_tilde
        return (t - t1) * commutator_norm(xt, y_tilde)

    rhs = _adaptive_simpson(integrand, 0.0, float(t), rel_tol) if t > 0 else 0.0
    tol = rel_tol * max(abs(rhs), 1.0)
    return CheckRecord.compare(
        "interaction_defect", lhs, rhs + tol, "le", t=t, quadrature_tol=tol
    )
