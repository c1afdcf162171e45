"""Disk cache for region spectra.

Entry layout (all little-endian, fixed width): an 8-byte magic, a u32
version, the 32-byte key, then the lattice, the region, the serialized term
list (anchor, support, row-major complex entries), and the eigenvalues and
eigenvectors.  Writes go through a temp file and an atomic replace, so
concurrent readers never see a torn entry.
"""

from __future__ import annotations

import hashlib
import os
import struct
import tempfile
from dataclasses import dataclass

import numpy as np

MAGIC = b"ALSPEC01"
VERSION = 1


class CacheError(RuntimeError):
    """Corrupt or unreadable cache entry."""


def _hash_terms(terms, region, mode, k):
    h = hashlib.sha256()
    h.update(mode.encode())
    h.update(struct.pack("<q", int(k) if mode == "lowest-k" else -1))
    for s in region.sites:
        h.update(struct.pack(f"<{len(s)}q", *s))
    for t in terms:
        h.update(struct.pack(f"<{len(t.anchor)}q", *t.anchor))
        for s in t.support:
            h.update(struct.pack(f"<{len(s)}q", *s))
        h.update(np.ascontiguousarray(t.matrix, dtype="<c16").tobytes())
    return h.digest()


def spectrum_key(terms, region, mode="full", k=0):
    return _hash_terms(terms, region, mode, k).hex()


def _entry_path(cache_dir, key):
    return os.path.join(cache_dir, f"{key}.spec")


def _pack_sites(sites, ndim):
    out = struct.pack("<q", len(sites))
    for s in sites:
        out += struct.pack(f"<{ndim}q", *s)
    return out


def _unpack_sites(buf, off, ndim):
    (count,) = struct.unpack_from("<q", buf, off)
    off += 8
    sites = []
    for _ in range(count):
        sites.append(struct.unpack_from(f"<{ndim}q", buf, off))
        off += 8 * ndim
    return sites, off


def save(cache_dir, key, lattice, region, terms, data):
    os.makedirs(cache_dir, exist_ok=True)
    ndim = lattice.ndim
    blob = MAGIC + struct.pack("<I", VERSION) + bytes.fromhex(key)
    blob += struct.pack("<q", ndim)
    blob += struct.pack(f"<{ndim}q", *lattice.extents)
    blob += struct.pack(f"<{ndim}B", *(int(p) for p in lattice.periodic))
    blob += struct.pack("<q", lattice.q)
    blob += _pack_sites(region.sites, ndim)
    blob += struct.pack("<q", len(terms))
    for t in terms:
        blob += struct.pack(f"<{ndim}q", *t.anchor)
        blob += _pack_sites(t.support, ndim)
        blob += struct.pack("<q", t.matrix.shape[0])
        blob += np.ascontiguousarray(t.matrix, dtype="<c16").tobytes()
    mode_flag = 0 if data.completeness == "full" else 1
    blob += struct.pack("<Bqq", mode_flag, data.count, data.dim)
    blob += np.ascontiguousarray(data.eigenvalues, dtype="<f8").tobytes()
    blob += np.ascontiguousarray(data.eigenvectors, dtype="<c16").tobytes()
    fd, tmp = tempfile.mkstemp(dir=cache_dir, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(blob)
        os.replace(tmp, _entry_path(cache_dir, key))
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _parse(path):
    from .hamiltonian import LocalTerm
    from .lattice import LatticeSpec, Region
    from .spectra import SpectralData

    with open(path, "rb") as fh:
        buf = fh.read()
    if len(buf) < 44 or buf[:8] != MAGIC:
        raise CacheError(f"{path}: bad magic")
    (version,) = struct.unpack_from("<I", buf, 8)
    if version != VERSION:
        raise CacheError(f"{path}: unsupported version {version}")
    key = buf[12:44].hex()
    off = 44
    (ndim,) = struct.unpack_from("<q", buf, off)
    off += 8
    extents = struct.unpack_from(f"<{ndim}q", buf, off)
    off += 8 * ndim
    periodic = struct.unpack_from(f"<{ndim}B", buf, off)
    off += ndim
    (q,) = struct.unpack_from("<q", buf, off)
    off += 8
    lattice = LatticeSpec(extents, tuple(bool(p) for p in periodic), q)
    region_sites, off = _unpack_sites(buf, off, ndim)
    region = Region(lattice, tuple(region_sites))
    (nterms,) = struct.unpack_from("<q", buf, off)
    off += 8
    terms = []
    for _ in range(nterms):
        anchor = struct.unpack_from(f"<{ndim}q", buf, off)
        off += 8 * ndim
        support, off = _unpack_sites(buf, off, ndim)
        (dim_t,) = struct.unpack_from("<q", buf, off)
        off += 8
        nbytes = dim_t * dim_t * 16
        mat = np.frombuffer(buf[off : off + nbytes], dtype="<c16").reshape(dim_t, dim_t)
        off += nbytes
        terms.append(LocalTerm(anchor, tuple(support), mat.copy()))
    mode_flag, count, dim = struct.unpack_from("<Bqq", buf, off)
    off += 17
    w = np.frombuffer(buf[off : off + 8 * count], dtype="<f8").copy()
    off += 8 * count
    nbytes = dim * count * 16
    if off + nbytes != len(buf):
        raise CacheError(f"{path}: truncated or oversized payload")
    v = np.frombuffer(buf[off : off + nbytes], dtype="<c16").reshape(dim, count).copy()
    completeness = "full" if mode_flag == 0 else "lowest-k"
    data = SpectralData(w, v, completeness, source=f"cache:{os.path.basename(path)}")
    return key, lattice, region, tuple(terms), data


def load(cache_dir, key):
    """Load a cached spectrum; None on miss.  Invariants recheck on load."""
    path = _entry_path(cache_dir, key)
    if not os.path.exists(path):
        return None
    stored_key, lattice, region, terms, data = _parse(path)
    if stored_key != key:
        raise CacheError(f"{path}: stored key mismatch")
    _recheck(terms, region, data)
    return data


def _recheck(terms, region, data):
    from .hamiltonian import assemble, assemble_sparse

    if region.size <= 14:
        matrix = assemble(terms, region)
    else:
        matrix = assemble_sparse(terms, region)
    data.check_residuals(matrix)


def list_entries(cache_dir):
    if not os.path.isdir(cache_dir):
        raise CacheError(f"no cache directory at {cache_dir}")
    return sorted(f for f in os.listdir(cache_dir) if f.endswith(".spec"))


def verify(cache_dir):
    """Re-check eigenpair residuals for every entry; corrupt entries are named."""
    results = {}
    for name in list_entries(cache_dir):
        path = os.path.join(cache_dir, name)
        try:
            key, lattice, region, terms, data = _parse(path)
            if f"{key}.spec" != name:
                raise CacheError("filename does not match stored key")
            _recheck(terms, region, data)
            results[name] = "ok"
        except Exception as exc:
            results[name] = f"corrupt: {exc}"
    return results


def clear(cache_dir):
    count = 0
    for name in list_entries(cache_dir):
        os.unlink(os.path.join(cache_dir, name))
        count += 1
    return count
