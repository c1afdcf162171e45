"""Finite cubic lattices, Chebyshev distance, and region set algebra.

A lattice is a finite box of integer sites, per axis either open or
periodic.  Regions are arbitrary site subsets (they need not be convex,
full-dimensional, or connected).  From a region the module derives the
exterior, the boundary (region sites adjacent to the exterior), the
superficial shell of a given width, and the extended region obtained by
growing the region by a margin, together with the counting bounds that
relate their sizes.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

Site = tuple


class LatticeError(ValueError):
    """Site or region outside the lattice, or malformed lattice data."""


class ParameterError(ValueError):
    """Parameter outside its stated domain."""


@dataclass(frozen=True)
class LatticeSpec:
    """Finite cubic lattice: per-axis extents, boundary flags, local dimension.

    Parameters
    ----------
    extents : tuple of int
        Number of sites along each axis.
    periodic : tuple of bool, optional
        Per-axis boundary condition; default all open.
    q : int, optional
        Local Hilbert-space dimension at each site (>= 2).
    """

    extents: tuple
    periodic: tuple = None
    q: int = 2

    def __post_init__(self):
        extents = tuple(int(n) for n in self.extents)
        if not extents or any(n < 1 for n in extents):
            raise LatticeError(f"extents must be positive, got {self.extents}")
        periodic = self.periodic
        if periodic is None:
            periodic = (False,) * len(extents)
        periodic = tuple(bool(p) for p in periodic)
        if len(periodic) != len(extents):
            raise LatticeError("periodic flags must match the number of axes")
        if int(self.q) < 2:
            raise LatticeError(f"local dimension must be >= 2, got {self.q}")
        object.__setattr__(self, "extents", extents)
        object.__setattr__(self, "periodic", periodic)
        object.__setattr__(self, "q", int(self.q))

    @property
    def ndim(self):
        return len(self.extents)

    # alias used throughout the numeric formulas
    @property
    def s(self):
        return len(self.extents)

    @property
    def nsites(self):
        return math.prod(self.extents)

    def sites(self):
        """All sites in lexicographic order."""
        return [tuple(c) for c in itertools.product(*(range(n) for n in self.extents))]

    def contains(self, site):
        return len(site) == self.ndim and all(
            0 <= c < n for c, n in zip(site, self.extents)
        )

    def require(self, site):
        if not self.contains(tuple(site)):
            raise LatticeError(f"site {site} outside lattice with extents {self.extents}")

    def neighborhood(self, site, radius=1):
        """Sites within Chebyshev distance `radius` of `site` (clipped/wrapped)."""
        self.require(site)
        out = set()
        for delta in itertools.product(range(-radius, radius + 1), repeat=self.ndim):
            cand = []
            ok = True
            for c, d, n, per in zip(site, delta, self.extents, self.periodic):
                cc = c + d
                if per:
                    cc %= n
                elif not 0 <= cc < n:
                    ok = False
                    break
                cand.append(cc)
            if ok:
                out.add(tuple(cand))
        return out


def site_distance(x, y, lattice):
    """Chebyshev distance between two sites, with wraparound on periodic axes."""
    x, y = tuple(x), tuple(y)
    lattice.require(x)
    lattice.require(y)
    d = 0
    for xi, yi, n, per in zip(x, y, lattice.extents, lattice.periodic):
        a = abs(xi - yi)
        if per:
            a = min(a, n - a)
        d = max(d, a)
    return d


def distance_to_set(x, sites, lattice):
    """Distance from a site to a site set; +inf for the empty set."""
    if not sites:
        return math.inf
    return min(site_distance(x, y, lattice) for y in sites)


def set_distance(a, b, lattice):
    """Minimum pairwise distance between two site sets; +inf if either is empty."""
    if not a or not b:
        return math.inf
    return min(site_distance(x, y, lattice) for x in a for y in b)


@dataclass(frozen=True)
class Region:
    """An ordered (lexicographic) set of lattice sites."""

    lattice: LatticeSpec
    sites: tuple

    def __post_init__(self):
        sites = sorted({tuple(int(c) for c in s) for s in self.sites})
        for s in sites:
            self.lattice.require(s)
        object.__setattr__(self, "sites", tuple(sites))

    @classmethod
    def from_box(cls, lattice, bounds):
        """Axis-aligned box, `bounds` = per-axis (lo, hi) inclusive."""
        if len(bounds) != lattice.ndim:
            raise LatticeError("box bounds must cover every axis")
        axes = []
        for (lo, hi), n in zip(bounds, lattice.extents):
            if not (0 <= lo <= hi < n):
                raise LatticeError(f"box bound ({lo},{hi}) outside axis of extent {n}")
            axes.append(range(int(lo), int(hi) + 1))
        return cls(lattice, tuple(itertools.product(*axes)))

    @classmethod
    def whole(cls, lattice):
        return cls(lattice, tuple(lattice.sites()))

    @property
    def size(self):
        return len(self.sites)

    def __contains__(self, site):
        return tuple(site) in self._site_set

    @property
    def _site_set(self):
        return set(self.sites)

    def position(self, site):
        """Index of `site` in this region's lexicographic ordering."""
        return self.sites.index(tuple(site))

    def issubset(self, other):
        return self._site_set <= other._site_set

    def exterior(self):
        """All lattice sites not in the region."""
        mine = self._site_set
        return Region(self.lattice, tuple(s for s in self.lattice.sites() if s not in mine))

    def boundary(self):
        """Region sites at distance exactly 1 from the exterior."""
        ext = self.exterior()._site_set
        out = []
        for x in self.sites:
            if self.lattice.neighborhood(x, 1) & ext:
                out.append(x)
        return Region(self.lattice, tuple(out))

    def shell(self, width):
        """Region sites within distance `width` of the exterior."""
        ext = self.exterior()._site_set
        out = [x for x in self.sites if distance_to_set(x, ext, self.lattice) <= width]
        return Region(self.lattice, tuple(out))

    def extend(self, margin):
        """All lattice sites within distance `margin` of the region (clipped)."""
        mine = self._site_set
        out = [
            x
            for x in self.lattice.sites()
            if x in mine or distance_to_set(x, mine, self.lattice) <= margin
        ]
        return Region(self.lattice, tuple(out))

    def intersection(self, other):
        return Region(self.lattice, tuple(self._site_set & other._site_set))

    def union(self, other):
        return Region(self.lattice, tuple(self._site_set | other._site_set))

    def difference(self, other):
        return Region(self.lattice, tuple(self._site_set - other._site_set))

    def is_box(self):
        """True when the region is a full axis-aligned box of contiguous coordinates."""
        if not self.sites:
            return False
        lo = [min(s[i] for s in self.sites) for i in range(self.lattice.ndim)]
        hi = [max(s[i] for s in self.sites) for i in range(self.lattice.ndim)]
        return self.size == math.prod(h - l + 1 for l, h in zip(lo, hi))

    def box_side_lengths(self):
        lo = [min(s[i] for s in self.sites) for i in range(self.lattice.ndim)]
        hi = [max(s[i] for s in self.sites) for i in range(self.lattice.ndim)]
        return tuple(h - l + 1 for l, h in zip(lo, hi))


@dataclass
class GeometryReport:
    """Counts and counting-bound checks for a region and its extension."""

    region_size: int
    region_boundary: int
    extended_size: int
    extended_boundary: int
    added_size: int          # |extended \ region|
    margin: int              # shell width l
    clipped: bool
    bounds_hold: dict = field(default_factory=dict)
    cube_forms: dict = field(default_factory=dict)
    regions: dict = field(default_factory=dict)


def region_geometry(region, width):
    """Exterior, boundary, shell, and extension geometry of a region.

    The extension margin is twice the shell width.  Distance to an empty
    exterior is treated as +inf, so the whole lattice has empty boundary.
    """
    if region.size == 0:
        raise LatticeError("region must be nonempty")
    width = int(width)
    if width < 5:
        raise ParameterError(f"shell width must be >= 5, got {width}")
    return _geometry(region, width)


def _geometry(region, width):
    extended = region.extend(2 * width)
    ext_boundary = extended.boundary()
    report = GeometryReport(
        region_size=region.size,
        region_boundary=region.boundary().size,
        extended_size=extended.size,
        extended_boundary=ext_boundary.size,
        added_size=extended.size - region.size,
        margin=width,
        clipped=_is_clipped(region, extended, width),
        regions={
            "extended": extended,
            "extended_boundary": ext_boundary,
            "extended_exterior": extended.exterior(),
            "extended_shell": extended.shell(width),
            "boundary": region.boundary(),
            "exterior": region.exterior(),
        },
    )
    return report


def _is_clipped(region, extended, width):
    # Unclipped growth puts every extended site within 2*width of the region
    # and keeps a site at distance exactly 2*width on some axis; detect
    # clipping by re-growing on a virtually enlarged open box.
    lat = region.lattice
    if all(lat.periodic):
        return False
    for x in region.sites:
        for axis in range(lat.ndim):
            if lat.periodic[axis]:
                continue
            if x[axis] - 2 * width < 0 or x[axis] + 2 * width >= lat.extents[axis]:
                return True
    return False


def geometry_bounds_check(region, width):
    """Counting bounds tying extension sizes to the region boundary.

    Asserted on actual (possibly clipped) counts; clipping only shrinks the
    left-hand sides, so the inequalities remain valid.  For boxes the exact
    unclipped-cube identities are reported alongside.
    """
    width = int(width)
    if width < 5:
        raise ParameterError(f"shell width must be >= 5, got {width}")
    rep = _geometry(region, width)
    s = region.lattice.ndim
    l = width
    rep.bounds_hold = {
        "extended_size": rep.extended_size <= rep.region_size * (5 * l) ** s,
        "extended_boundary": rep.extended_boundary
        <= rep.region_boundary * 2 * s * (5 * l) ** (s - 1),
        "added_size": rep.added_size <= rep.region_boundary * (5 * l) ** s,
    }
    if region.is_box():
        sides = region.box_side_lengths()
        L = min(sides)
        factor = (1 + 4 * l / L) ** s
        rep.cube_forms = {
            "side": L,
            "extended_size_cube_form": rep.region_size * factor,
            "extended_boundary_cube_form": rep.region_boundary
            * (1 + 4 * l / L) ** (s - 1),
            "added_size_cube_bound": rep.extended_boundary * 2 * l,
        }
    return rep
