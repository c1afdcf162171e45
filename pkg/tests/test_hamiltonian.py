import numpy as np
import pytest

from arealab.hamiltonian import (
    CapacityError,
    LocalTerm,
    ModelError,
    assemble,
    assemble_sparse,
    build_model,
    partition,
    psd_normalize,
    psd_shift_total,
)
from arealab.lattice import LatticeSpec, Region


def chain(n, periodic=False):
    return LatticeSpec((n,), (periodic,))


def test_diagonal_counting_spectrum_three_sites():
    lat = chain(3)
    h = build_model(lat, "diagonal_counting")
    m = assemble(h.terms, Region.whole(lat))
    w = np.sort(np.linalg.eigvalsh(m))
    assert np.allclose(w, [0, 1, 1, 1, 2, 2, 2, 3], atol=1e-12)


def test_tfi_g0_two_sites_psd_ground_zero():
    lat = chain(2)
    h = psd_normalize(build_model(lat, "tfi", g=0.0))
    w = np.linalg.eigvalsh(assemble(h.terms, Region.whole(lat)))
    assert abs(w[0]) < 1e-12
    assert abs(w[1]) < 1e-12  # twofold-degenerate ground space
    assert np.allclose(np.sort(w), [0, 0, 2, 2], atol=1e-12)


def test_psd_shift_of_zz_term():
    zz = -np.kron(np.diag([1.0, -1.0]), np.diag([1.0, -1.0]))
    t = LocalTerm((0,), ((0,), (1,)), zz)
    shifted, shift = t.shifted_to_psd()
    assert shift == pytest.approx(1.0)
    assert np.allclose(np.sort(np.linalg.eigvalsh(shifted.matrix)), [0, 0, 2, 2])
    already = LocalTerm((0,), ((0,),), np.diag([1.0, 0.0]))
    same, shift0 = already.shifted_to_psd()
    assert shift0 == 0.0
    assert same is already


def test_psd_normalize_shifts_full_spectrum_uniformly():
    lat = chain(4)
    h = build_model(lat, "tfi", g=1.3)
    hp = psd_normalize(h)
    w = np.linalg.eigvalsh(assemble(h.terms, Region.whole(lat)))
    wp = np.linalg.eigvalsh(assemble(hp.terms, Region.whole(lat)))
    shift = psd_shift_total(h)
    assert np.allclose(wp, w + shift, atol=1e-10)
    assert hp.psd_shifted
    assert np.diff(wp).min() == pytest.approx(np.diff(w).min(), abs=1e-10)


def test_random_model_is_deterministic():
    lat = chain(5)
    h1 = build_model(lat, "random2local", seed=42, strength=0.7)
    h2 = build_model(lat, "random2local", seed=42, strength=0.7)
    for t1, t2 in zip(h1.terms, h2.terms):
        assert np.array_equal(t1.matrix, t2.matrix)
    assert h1.norm_bound <= 0.7 + 1e-12


def test_build_model_rejects_wrong_local_dimension():
    lat = LatticeSpec((3,), (False,), q=3)
    with pytest.raises(ModelError):
        build_model(lat, "tfi", g=1.0)
    with pytest.raises(ModelError):
        build_model(chain(3), "tfi", g=1.0, bogus=2)
    with pytest.raises(ModelError):
        build_model(chain(3), "no_such_model")


def test_partition_whole_empty_and_split():
    lat = chain(6)
    h = build_model(lat, "tfi", g=1.0)
    whole = Region.whole(lat)
    p = partition(h, whole)
    assert not p.crossing and not p.outside
    assert len(p.inside) == len(h.terms)

    p0 = partition(h, Region(lat, ()))
    assert not p.crossing and len(p0.outside) == len(h.terms)

    left = Region.from_box(lat, ((0, 2),))
    ps = partition(h, left)
    assert len(ps.crossing) == 1  # the single bond across the 2|3 cut
    assert ps.crossing[0].support == ((2,), (3,))
    assert ps.crossing_norm <= h.norm_bound + 1e-12
    assert ps.crossing_norm <= ps.crossing_norm_bound
    assert len(ps.inside) + len(ps.crossing) + len(ps.outside) == len(h.terms)


def test_partition_reassembles():
    lat = chain(5)
    h = build_model(lat, "heisenberg", jx=0.5, jy=0.3, jz=1.0, h=0.2)
    region = Region.from_box(lat, ((1, 3),))
    p = partition(h, region)
    # the three lists partition the term list exactly
    assert sorted(map(id, p.inside + p.crossing + p.outside)) == sorted(
        map(id, h.terms)
    )
    whole = Region.whole(lat)
    total = assemble(h.terms, whole)
    pieces = (
        assemble(p.inside, whole)
        + assemble(p.crossing, whole)
        + assemble(p.outside, whole)
    )
    # float addition is not associative across the three partial sums; the
    # agreement is exact up to final-rounding ULPs
    assert np.abs(total - pieces).max() <= 1e-13 * np.linalg.norm(total)


def test_assemble_basics():
    lat = chain(2)
    whole = Region.whole(lat)
    assert np.array_equal(assemble((), whole), np.zeros((4, 4)))
    t = LocalTerm((0,), ((0,),), np.diag([1.0, 0.0]))
    m = assemble((t,), whole)
    assert np.allclose(m, np.diag([1.0, 1.0, 0.0, 0.0]))


def test_assemble_hermitian_random_model():
    lat = chain(4)
    h = build_model(lat, "random2local", seed=3)
    m = assemble(h.terms, Region.whole(lat))
    assert np.linalg.norm(m - m.conj().T) <= 1e-10 * np.linalg.norm(m)


def test_assemble_dense_cap():
    lat = chain(6)
    h = build_model(lat, "tfi")
    with pytest.raises(CapacityError):
        assemble(h.terms, Region.whole(lat), dense_cap_sites=5)


def test_sparse_matches_dense():
    lat = chain(5)
    h = build_model(lat, "heisenberg", jx=1.0, jy=0.7, jz=0.2, h=0.1)
    whole = Region.whole(lat)
    dense = assemble(h.terms, whole)
    sp = assemble_sparse(h.terms, whole).toarray()
    assert np.allclose(dense, sp, atol=1e-12)


def test_term_support_radius_enforced():
    lat = chain(5)
    t = LocalTerm((0,), ((0,), (2,)), np.eye(4))
    with pytest.raises(ValueError):
        from arealab.hamiltonian import LocalHamiltonian

        LocalHamiltonian(lat, (t,))


def test_term_rejects_non_hermitian_and_unsorted_support():
    with pytest.raises(ValueError):
        LocalTerm((0,), ((0,),), np.array([[0.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(ValueError):
        LocalTerm((0,), ((1,), (0,)), np.eye(4))


def test_bond_anchoring_on_smaller_endpoint():
    lat = chain(4, periodic=True)
    h = build_model(lat, "tfi", g=0.5)
    bonds = [t for t in h.terms if len(t.support) == 2]
    for t in bonds:
        assert t.anchor == t.support[0]
    # wrapped bond (3,0) is anchored at (0,)
    assert ((0,), (3,)) in {t.support for t in bonds}
