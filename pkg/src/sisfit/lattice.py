"""Integer lattices used to prescribe extra invariance.

A lattice M* = B Z^d (B an integer matrix with nonzero determinant)
partitions Z^d into |det B| cosets.  Coset bookkeeping is exact: the
section comes from a column-style Hermite normal form and membership
tests run on rational arithmetic, so no float ever decides a coset.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

import numpy as np

from .errors import ValidationError


def _as_int_matrix(basis) -> np.ndarray:
    arr = np.asarray(basis)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValidationError(f"lattice basis must be square, got shape {arr.shape}")
    if arr.shape[0] < 1:
        raise ValidationError("lattice basis must have positive dimension")
    if np.issubdtype(arr.dtype, np.floating):
        rounded = np.rint(arr)
        if not np.array_equal(arr, rounded):
            raise ValidationError("lattice basis entries must be integers")
        arr = rounded
    elif not np.issubdtype(arr.dtype, np.integer):
        raise ValidationError("lattice basis entries must be integers")
    return arr.astype(np.int64)


def _hermite_diagonal(basis: np.ndarray) -> list[int]:
    """Diagonal of the lower-triangular column Hermite form of ``basis``.

    Column operations are unimodular, so the triangular matrix generates
    the same lattice and the box prod([0, h_ii)) is a complete set of
    coset representatives.
    """
    d = basis.shape[0]
    cols = [[int(basis[i, j]) for i in range(d)] for j in range(d)]
    for i in range(d):
        while True:
            nz = [j for j in range(i, d) if cols[j][i] != 0]
            if not nz:
                raise ValidationError("lattice basis is singular")
            j0 = min(nz, key=lambda j: (abs(cols[j][i]), j))
            cols[i], cols[j0] = cols[j0], cols[i]
            if cols[i][i] < 0:
                cols[i] = [-x for x in cols[i]]
            piv = cols[i][i]
            done = True
            for j in range(i + 1, d):
                if cols[j][i] != 0:
                    q = cols[j][i] // piv
                    cols[j] = [a - q * b for a, b in zip(cols[j], cols[i])]
                    if cols[j][i] != 0:
                        done = False
            if done:
                break
    return [cols[i][i] for i in range(d)]


def _fraction_inverse(basis: np.ndarray):
    d = basis.shape[0]
    aug = [
        [Fraction(int(basis[i, j])) for j in range(d)]
        + [Fraction(1 if i == j else 0) for j in range(d)]
        for i in range(d)
    ]
    for col in range(d):
        piv_row = next((r for r in range(col, d) if aug[r][col] != 0), None)
        if piv_row is None:
            raise ValidationError("lattice basis is singular")
        aug[col], aug[piv_row] = aug[piv_row], aug[col]
        pv = aug[col][col]
        aug[col] = [x / pv for x in aug[col]]
        for r in range(d):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [a - f * b for a, b in zip(aug[r], aug[col])]
    return tuple(tuple(row[d:]) for row in aug)


@dataclass(eq=False)
class DualLattice:
    """Sublattice B Z^d of Z^d with its coset section.

    ``section`` holds one representative per coset, lexicographically
    sorted; coset labels are the row indices into it.
    """

    dim: int
    basis: np.ndarray
    index: int
    section: np.ndarray
    _binv: tuple = field(repr=False)
    _lookup: dict = field(repr=False)

    def coset_of(self, k) -> int:
        return coset_of(k, self)

    def __eq__(self, other):
        return (
            isinstance(other, DualLattice)
            and self.dim == other.dim
            and np.array_equal(self.basis, other.basis)
        )


def _frac_key(binv, k) -> tuple:
    d = len(binv)
    return tuple(
        sum(binv[i][j] * int(k[j]) for j in range(d)) % 1 for i in range(d)
    )


def make_dual_lattice(basis) -> DualLattice:
    """Build a DualLattice from a square integer basis matrix.

    Rejects non-square or non-integer input and singular matrices.  The
    coset count equals |det(basis)|.
    """
    b = _as_int_matrix(basis)
    d = b.shape[0]
    diag = _hermite_diagonal(b)
    index = 1
    for h in diag:
        index *= h
    section = np.array(list(product(*(range(h) for h in diag))), dtype=np.int64)
    section = section.reshape(index, d)
    binv = _fraction_inverse(b)
    lookup = {}
    for idx in range(index):
        lookup[_frac_key(binv, section[idx])] = idx
    if len(lookup) != index:
        raise ValidationError("coset section construction failed")
    return DualLattice(
        dim=d, basis=b, index=index, section=section, _binv=binv, _lookup=lookup
    )


def coset_of(k, lat: DualLattice) -> int:
    """Label of the coset of integer vector ``k``, as an index into
    ``lat.section``."""
    arr = np.asarray(k)
    if arr.shape != (lat.dim,):
        raise ValidationError(f"expected an integer vector of length {lat.dim}, got shape {arr.shape}")
    if np.issubdtype(arr.dtype, np.floating):
        rounded = np.rint(arr)
        if not np.array_equal(arr, rounded):
            raise ValidationError("coset_of needs integer coordinates")
        arr = rounded
    elif not np.issubdtype(arr.dtype, np.integer):
        raise ValidationError("coset_of needs integer coordinates")
    return lat._lookup[_frac_key(lat._binv, arr)]


def primal_description(lat: DualLattice):
    """Basis of the lattice whose dual is ``lat``, as exact rationals.

    Returns a dim x dim nested list of Fractions: the columns of
    inverse-transpose(basis).
    """
    d = lat.dim
    return [[lat._binv[j][i] for j in range(d)] for i in range(d)]


def parse_basis(text: str) -> np.ndarray:
    """Parse a basis matrix written row-major like ``"2 0;0 1"``."""
    rows = [r.strip() for r in text.replace(",", " ").split(";")]
    rows = [r for r in rows if r]
    if not rows:
        raise ValidationError("empty lattice basis")
    try:
        mat = [[int(tok) for tok in r.split()] for r in rows]
    except ValueError as exc:
        raise ValidationError(f"lattice basis entries must be integers: {exc}") from None
    width = len(mat[0])
    if any(len(r) != width for r in mat) or width != len(mat):
        raise ValidationError("lattice basis must be a square matrix")
    return np.array(mat, dtype=np.int64)


def format_basis(basis: np.ndarray) -> str:
    return ";".join(" ".join(str(int(x)) for x in row) for row in np.asarray(basis))
