"""Dense tensor-product plumbing on uniform local dimension q.

All operators and states live on an ordered site basis (a Region in
lexicographic order).  Basis index arithmetic is mixed-radix: position j in
an n-site basis carries stride q**(n-1-j).
"""

from __future__ import annotations

import numpy as np


def strides(n, q):
    return q ** (n - 1 - np.arange(n))


def subset_indices(positions, n, q):
    """Index bookkeeping for a site subset inside an n-site basis.

    Returns (base, offsets): `base` enumerates all basis states whose subset
    digits are zero, `offsets` maps each subset configuration to its index
    contribution; every basis index is uniquely base[i] + offsets[a].
    """
    positions = list(positions)
    k = len(positions)
    st = strides(n, q)
    idx = np.arange(q ** n)
    mask = np.ones(q ** n, dtype=bool)
    for p in positions:
        mask &= (idx // st[p]) % q == 0
    base = idx[mask]
    offsets = np.zeros(q ** k, dtype=np.int64)
    for a in range(q ** k):
        rem, off = a, 0
        for p in reversed(positions):
            off += (rem % q) * st[p]
            rem //= q
        offsets[a] = off
    return base, offsets


def add_embedded(target, mat, positions, n, q):
    """Accumulate `mat` (on the subset factor) into the n-site dense matrix."""
    base, offs = subset_indices(positions, n, q)
    dim_sub = mat.shape[0]
    for a in range(dim_sub):
        rows = base + offs[a]
        for b in range(dim_sub):
            if mat[a, b] != 0:
                target[rows, base + offs[b]] += mat[a, b]
    return target


def embed_operator(mat, positions, n, q, dtype=None):
    """Dense n-site embedding of an operator on a subset of positions."""
    dim = q ** n
    if dtype is None:
        dtype = np.result_type(mat.dtype, np.float64)
    out = np.zeros((dim, dim), dtype=dtype)
    return add_embedded(out, np.asarray(mat), positions, n, q)


def split_indices(positions, n, q):
    """Basis reordering that factors a subset to the front.

    Returns a (q**k, q**(n-k)) int array `I` with I[a, b] the global index of
    subset configuration `a` combined with complement configuration `b`.
    """
    positions = list(positions)
    rest = [p for p in range(n) if p not in positions]
    base_sub, offs_sub = subset_indices(positions, n, q)
    del base_sub
    _, offs_rest = subset_indices(rest, n, q)
    return offs_sub[:, None] + offs_rest[None, :]


def state_as_matrix(state, positions, n, q):
    """Reshape a state vector to a (subset, complement) coefficient matrix."""
    I = split_indices(positions, n, q)
    return np.asarray(state)[I]


def apply_on_subset(mat, state, positions, n, q):
    """Apply an operator living on a subset factor to a full state vector."""
    I = split_indices(positions, n, q)
    psi = np.asarray(state)[I]
    out_mat = mat @ psi
    out = np.empty(q ** n, dtype=out_mat.dtype)
    out[I.ravel()] = out_mat.ravel()
    return out


def partial_trace(state, keep_positions, n, q):
    """Reduced density matrix of a pure state on the kept positions."""
    psi = state_as_matrix(state, keep_positions, n, q)
    return psi @ psi.conj().T


def operator_factor(op, identity_positions, n, q, atol=1e-9):
    """Extract A from op = I (x) A over a split, or None if not of that form.

    `identity_positions` are the positions on which the operator must act as
    the identity; the factor on the remaining positions is returned.
    """
    rest = [p for p in range(n) if p not in identity_positions]
    I = split_indices(list(identity_positions), n, q)
    dim_id = q ** len(identity_positions)
    dim_a = q ** len(rest)
    block = op[np.ix_(I.ravel(), I.ravel())].reshape(dim_id, dim_a, dim_id, dim_a)
    A = block[0, :, 0, :]
    recon = np.einsum("ac,bd->abcd", np.eye(dim_id, dtype=op.dtype), A).reshape(
        dim_id * dim_a, dim_id * dim_a
    )
    full = block.reshape(dim_id * dim_a, dim_id * dim_a)
    if np.linalg.norm(full - recon) > atol * max(1.0, np.linalg.norm(full)):
        return None
    return A
