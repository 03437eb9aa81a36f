from fractions import Fraction
from itertools import product

import numpy as np
import pytest

from sisfit.errors import ValidationError
from sisfit.lattice import (
    coset_of,
    format_basis,
    make_dual_lattice,
    parse_basis,
    primal_description,
)


def _in_lattice(basis, v):
    """Exact rational membership test: v in basis @ Z^d."""
    d = basis.shape[0]
    b = [[Fraction(int(basis[i, j])) for j in range(d)] for i in range(d)]
    x = [Fraction(int(c)) for c in v]
    # solve b y = x by Gaussian elimination over Q
    aug = [row[:] + [x[i]] for i, row in enumerate(b)]
    for col in range(d):
        piv = next(r for r in range(col, d) if aug[r][col] != 0)
        aug[col], aug[piv] = aug[piv], aug[col]
        pv = aug[col][col]
        aug[col] = [t / pv for t in aug[col]]
        for r in range(d):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [a - f * c for a, c in zip(aug[r], aug[col])]
    return all(aug[i][d].denominator == 1 for i in range(d))


def test_mod2_line():
    lat = make_dual_lattice([[2]])
    assert lat.index == 2
    assert np.array_equal(lat.section, [[0], [1]])
    assert coset_of(np.array([7]), lat) == 1
    assert coset_of(np.array([-4]), lat) == 0


def test_diag_2_1():
    lat = make_dual_lattice(np.diag([2, 1]))
    assert lat.index == 2
    assert np.array_equal(lat.section, [[0, 0], [1, 0]])
    assert coset_of(np.array([3, 5]), lat) == 1


def test_skew_basis_against_membership_oracle():
    basis = np.array([[1, 1], [-1, 1]])
    lat = make_dual_lattice(basis)
    assert lat.index == 2
    assert tuple(lat.section[0]) == (0, 0)
    # brute-force residue classification of a box of Z^2 points
    for k in product(range(-4, 5), repeat=2):
        claimed = [
            sigma
            for sigma in range(lat.index)
            if _in_lattice(basis, np.array(k) - lat.section[sigma])
        ]
        assert len(claimed) == 1
        assert coset_of(np.array(k), lat) == claimed[0]


@pytest.mark.parametrize(
    "basis",
    [
        [[2]],
        [[3]],
        [[2, 0], [0, 1]],
        [[1, 1], [-1, 1]],
        [[2, 1], [0, 3]],
    ],
)
def test_partition_property(basis):
    basis = np.array(basis)
    lat = make_dual_lattice(basis)
    d = lat.dim
    labels = set()
    for k in product(range(-10, 11), repeat=d):
        lab = coset_of(np.array(k), lat)
        assert 0 <= lab < lat.index
        labels.add(lab)
        # exactly one section element is congruent
        hits = [
            s
            for s in range(lat.index)
            if _in_lattice(basis, np.array(k) - lat.section[s])
        ]
        assert hits == [lab]
    assert len(labels) == lat.index


def test_section_self_labels():
    lat = make_dual_lattice([[2, 1], [0, 3]])
    for i in range(lat.index):
        assert coset_of(lat.section[i], lat) == i


def test_section_sorted_unique():
    lat = make_dual_lattice([[2, 0], [0, 3]])
    rows = [tuple(int(x) for x in r) for r in lat.section]
    assert rows == sorted(set(rows))
    assert lat.index == 6


def test_primal_description():
    assert primal_description(make_dual_lattice([[2]])) == [[Fraction(1, 2)]]
    assert primal_description(make_dual_lattice([[1]])) == [[Fraction(1)]]
    m = primal_description(make_dual_lattice(np.diag([2, 3])))
    assert m == [[Fraction(1, 2), Fraction(0)], [Fraction(0), Fraction(1, 3)]]


def test_primal_contains_integer_basis():
    # every unit vector must be an integer combination of the primal columns
    lat = make_dual_lattice([[1, 1], [-1, 1]])
    cols = primal_description(lat)  # cols[i][j] = entry i of column j? columns of B^{-T}
    binv_t = np.array([[float(cols[i][j]) for j in range(2)] for i in range(2)])
    # solve binv_t @ c = e_i; c must be integral
    for i in range(2):
        e = np.zeros(2)
        e[i] = 1.0
        c = np.linalg.solve(binv_t, e)
        assert np.allclose(c, np.round(c), atol=1e-12)


def test_rejections():
    with pytest.raises(ValidationError):
        make_dual_lattice([[1, 0], [2, 0]])  # singular
    with pytest.raises(ValidationError):
        make_dual_lattice([[0.5]])  # not integer
    with pytest.raises(ValidationError):
        make_dual_lattice([[1, 2, 3]])  # not square
    lat = make_dual_lattice([[2]])
    with pytest.raises(ValidationError):
        coset_of(np.array([1, 2]), lat)  # wrong dimension
    with pytest.raises(ValidationError):
        coset_of(np.array([0.5]), lat)  # not an integer point


def test_float_integer_inputs_accepted():
    lat = make_dual_lattice(np.array([[2.0]]))
    assert lat.index == 2
    assert coset_of(np.array([3.0]), lat) == 1


def test_basis_text_round_trip():
    b = parse_basis("2 0;0 1")
    assert np.array_equal(b, [[2, 0], [0, 1]])
    assert format_basis(b) == "2 0;0 1"
    assert np.array_equal(parse_basis(format_basis(np.array([[1, 1], [-1, 1]]))), [[1, 1], [-1, 1]])
    with pytest.raises(ValidationError):
        parse_basis("1 2;3")
    with pytest.raises(ValidationError):
        parse_basis("a b;c d")
    with pytest.raises(ValidationError):
        parse_basis("")


def test_lattice_equality():
    a = make_dual_lattice([[2]])
    b = make_dual_lattice([[2]])
    c = make_dual_lattice([[3]])
    assert a == b
    assert a != c
