import math

import numpy as np
import pytest

from arealab.dynamics import (
    commutator_norm,
    defect_bound_check,
    heisenberg_evolve,
    lr_bound,
    lr_cone_scan,
    lr_term_bound,
    lr_velocity,
)
from arealab.hamiltonian import PAULI_X, PAULI_Z, assemble, build_model
from arealab.lattice import LatticeSpec, Region
from arealab.spectra import diagonalize, region_spectrum


def chain(n):
    return LatticeSpec((n,))


@pytest.fixture(scope="module")
def tfi8():
    lat = chain(8)
    h = build_model(lat, "tfi", g=1.1)
    spec = region_spectrum(h, Region.whole(lat))
    return lat, h, spec


def test_velocity_constant():
    assert lr_velocity(1.0, 1) == 10.0
    assert lr_velocity(0.5, 2) == 25.0


def test_heisenberg_identity_cases(tfi8):
    lat, h, spec = tfi8
    whole = Region.whole(lat)
    m = assemble(h.terms, whole)
    x = np.random.default_rng(0).standard_normal(m.shape)
    x = x + x.T
    assert np.allclose(heisenberg_evolve(x, spec, 0.0), x, atol=1e-10)
    ht = heisenberg_evolve(m, spec, 0.37)
    assert np.allclose(ht, m, atol=1e-8)
    xt = heisenberg_evolve(x, spec, 0.9)
    assert np.linalg.norm(xt, 2) == pytest.approx(np.linalg.norm(x, 2), abs=1e-9)


def test_heisenberg_needs_full_spectrum(tfi8):
    lat, h, _ = tfi8
    from arealab.hamiltonian import assemble_sparse

    low = diagonalize(assemble_sparse(h.terms, Region.whole(lat)), mode="lowest-k", k=3)
    with pytest.raises(ValueError):
        heisenberg_evolve(np.eye(low.dim), low, 0.1)


def test_lr_bound_values():
    # d=4, vt=1, |X|=1: 2 * 1^2/2! = 1
    assert lr_bound(1, 4, 1.0 / 10.0, 1.0, 1) == pytest.approx(1.0)
    assert lr_bound(3, 0, 0.5, 1.0, 1) == pytest.approx(6.0)
    assert lr_bound(1, 6, 0.0, 1.0, 1) == 0.0


def test_lr_bound_monotonicity():
    ts = np.linspace(0.001, 0.2, 15)
    vals = [lr_bound(2, 4, t, 1.0, 1) for t in ts]
    assert all(a <= b for a, b in zip(vals, vals[1:]))
    seps = [0, 2, 4, 6, 8]
    t = 0.01  # vt = 0.1 well inside the cone
    vals_d = [lr_bound(2, d, t, 1.0, 1) for d in seps]
    assert all(a >= b for a, b in zip(vals_d, vals_d[1:]))
    sizes = [1, 2, 4, 8]
    vals_n = [lr_bound(n, 4, 0.05, 1.0, 1) for n in sizes]
    assert all(a < b for a, b in zip(vals_n, vals_n[1:]))


def test_lr_term_bound():
    assert lr_term_bound(2, 123.0, 1.5, 1, x_norm=2.0) == pytest.approx(6.0)
    assert lr_term_bound(3, 0.0, 1.0, 1) == 0.0
    with pytest.raises(ValueError):
        lr_term_bound(1, 0.1, 1.0, 1)


def test_lr_term_bound_measured(tfi8):
    lat, h, spec = tfi8
    whole = Region.whole(lat)
    from arealab import tensorops

    x_full = tensorops.embed_operator(PAULI_X, [0], lat.nsites, 2)
    for t in (0.01, 0.05):
        xt = heisenberg_evolve(x_full, spec, t)
        for anchor in (2, 3, 4):
            term = next(
                tt for tt in h.terms if tt.anchor == (anchor,) and len(tt.support) == 2
            )
            k_full = tensorops.embed_operator(
                term.matrix, [anchor, anchor + 1], lat.nsites, 2
            )
            r = anchor  # distance from site 0
            measured = commutator_norm(xt, k_full)
            bound = lr_term_bound(r, t, h.norm_bound, 1, x_norm=1.0)
            assert measured <= bound + 1e-9


def test_cone_scan_disjointness_and_zero_time(tfi8):
    lat, h, spec = tfi8
    with pytest.raises(ValueError):
        lr_cone_scan(h, PAULI_X, [(0,)], PAULI_X, [(0,)], spectrum=spec)
    scan = lr_cone_scan(
        h, PAULI_X, [(0,)], PAULI_X, [(6,)], times=[0.0], spectrum=spec
    )
    assert scan.measured[0] == pytest.approx(0.0, abs=1e-12)


def test_cone_scan_bound_holds(tfi8):
    lat, h, spec = tfi8
    scan = lr_cone_scan(h, PAULI_X, [(0,)], PAULI_X, [(6,)], spectrum=spec)
    assert scan.all_pass
    assert scan.separation == 6
    assert np.all(scan.measured <= 2.0 + 1e-12)


def test_defect_bound_trivial_cases():
    rng = np.random.default_rng(5)
    h = rng.standard_normal((8, 8))
    h = h + h.T
    x = rng.standard_normal((8, 8))
    x = x + x.T
    rec = defect_bound_check(h, x, np.zeros((8, 8)), 0.5)
    assert rec.measured == pytest.approx(0.0, abs=1e-10)
    # commuting family: diagonal matrices
    d1, d2, d3 = (np.diag(rng.standard_normal(8)) for _ in range(3))
    rec = defect_bound_check(d1, d2, d3, 0.8)
    assert rec.measured == pytest.approx(0.0, abs=1e-10)
    assert rec.passed


def test_defect_bound_random_triples():
    rng = np.random.default_rng(77)
    for _ in range(10):
        mats = []
        for _ in range(3):
            a = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
            mats.append((a + a.conj().T) / 2)
        rec = defect_bound_check(*mats, t=0.5)
        assert rec.passed
