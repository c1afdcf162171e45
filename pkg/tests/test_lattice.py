import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arealab.lattice import (
    GeometryReport,
    LatticeError,
    LatticeSpec,
    ParameterError,
    Region,
    distance_to_set,
    geometry_bounds_check,
    region_geometry,
    site_distance,
)


def chain(n, periodic=False):
    return LatticeSpec((n,), (periodic,))


def test_site_distance_open_2d():
    lat = LatticeSpec((4, 4))
    assert site_distance((0, 0), (1, 1), lat) == 1
    assert site_distance((0, 0), (3, 1), lat) == 3


def test_site_distance_periodic_ring():
    lat = chain(10, periodic=True)
    assert site_distance((0,), (9,), lat) == 1
    assert site_distance((0,), (5,), lat) == 5


def test_site_distance_rejects_outside():
    lat = chain(4)
    with pytest.raises(LatticeError):
        site_distance((0,), (4,), lat)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 5), st.integers(0, 5)), min_size=3, max_size=3))
def test_distance_is_metric_on_open_lattices(pts):
    lat = LatticeSpec((6, 6))
    x, y, z = pts
    dxy = site_distance(x, y, lat)
    assert dxy == site_distance(y, x, lat)
    assert (dxy == 0) == (x == y)
    assert dxy <= site_distance(x, z, lat) + site_distance(z, y, lat)


def test_region_validation_and_ordering():
    lat = chain(6)
    r = Region(lat, ((3,), (1,), (1,)))
    assert r.sites == ((1,), (3,))
    with pytest.raises(LatticeError):
        Region(lat, ((7,),))


def test_region_from_box():
    lat = LatticeSpec((4, 3))
    r = Region.from_box(lat, ((1, 2), (0, 2)))
    assert r.size == 6
    assert r.is_box()


def test_whole_lattice_has_empty_exterior_and_boundary():
    lat = chain(8)
    whole = Region.whole(lat)
    assert whole.exterior().size == 0
    assert whole.boundary().size == 0
    assert distance_to_set((0,), (), lat) == math.inf


def test_boundary_of_half_chain():
    lat = chain(20)
    r = Region.from_box(lat, ((0, 9),))
    assert r.boundary().sites == ((9,),)


def test_shell_width_two():
    lat = chain(20)
    x = Region.from_box(lat, ((0, 9),))
    assert x.shell(2).sites == ((8,), (9,))


def test_derived_set_identities():
    lat = LatticeSpec((6, 5))
    region = Region(lat, ((1, 1), (1, 2), (2, 1), (4, 4)))
    ext = region.exterior()
    bnd = region.boundary()
    shl = region.shell(5)
    assert bnd.issubset(region)
    assert shl.issubset(region)
    assert not set(ext.sites) & set(region.sites)
    assert set(ext.sites) | set(region.sites) == set(lat.sites())
    # shell of the extension contains the own boundary of the extension
    geo = region_geometry(region, 5)
    extd = geo.regions["extended"]
    assert geo.regions["extended_boundary"].issubset(geo.regions["extended_shell"])
    assert geo.regions["extended_shell"].issubset(extd)


def test_region_geometry_requires_width_five():
    lat = chain(20)
    r = Region.from_box(lat, ((0, 9),))
    with pytest.raises(ParameterError):
        region_geometry(r, 4)
    with pytest.raises(LatticeError):
        region_geometry(Region(lat, ()), 5)


def test_geometry_bounds_1d_example():
    lat = chain(60)
    r = Region.from_box(lat, ((20, 29),))
    rep = geometry_bounds_check(r, 5)
    assert rep.extended_size == 30
    assert rep.extended_size <= rep.region_size * 25
    assert all(rep.bounds_hold.values())
    assert not rep.clipped


def test_geometry_bounds_whole_lattice():
    lat = chain(12)
    rep = geometry_bounds_check(Region.whole(lat), 5)
    assert rep.added_size == 0
    assert all(rep.bounds_hold.values())


def test_geometry_square_boundary_count():
    lat = LatticeSpec((30, 30))
    r = Region.from_box(lat, ((10, 19), (10, 19)))
    # ring of a 10x10 square
    assert r.boundary().size == 36
    assert r.boundary().size <= 2 * 2 * 10  # 2 s L^{s-1}
    rep = geometry_bounds_check(r, 5)
    assert all(rep.bounds_hold.values())
    assert rep.cube_forms  # hypercube gets the exact-form report


def test_clipped_extension_flagged_and_bounds_still_hold():
    lat = chain(15)
    r = Region.from_box(lat, ((0, 9),))
    rep = geometry_bounds_check(r, 5)
    assert rep.clipped
    assert all(rep.bounds_hold.values())


@settings(max_examples=60, deadline=None)
@given(
    st.sets(st.integers(0, 39), min_size=1, max_size=8),
    st.integers(5, 7),
)
def test_counting_bounds_random_regions(sites, width):
    lat = chain(40)
    region = Region(lat, tuple((s,) for s in sites))
    rep = geometry_bounds_check(region, width)
    assert all(rep.bounds_hold.values())
