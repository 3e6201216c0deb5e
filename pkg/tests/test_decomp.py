"""Endomorphism algebras, idempotents, and full decomposition."""

from fractions import Fraction

import numpy as np
import pytest

from gridpersist import field
from gridpersist.cli import random_module
from gridpersist.construct import module_G
from gridpersist.core import (direct_sum, interval_module, is_isomorphic,
                              random_basis_change, zero_module)
from gridpersist.decomp import (decompose, end_algebra, find_idempotent,
                                fitting_split, is_indecomposable, radical,
                                split_by_idempotent)
from gridpersist.kan import common_refinement, union_axes, restriction_extension
from gridpersist.core import Grid

from conftest import rect
import oracles as O


def _refine_all(*mods):
    g = Grid(union_axes(*(m.grid for m in mods)))
    return [restriction_extension(m, g) for m in mods]


def test_end_algebra_of_G_is_the_ground_field():
    for p in (65521, 2):
        A = end_algebra(module_G(p=p))
        assert A.dim == 1
        assert is_indecomposable(module_G(p=p))


def test_end_algebra_of_disjoint_sum_is_two_dimensional():
    X = rect((0, 0), (1, 1), p=3)
    Y = rect((10, 10), (11, 11), p=3)
    X, Y = _refine_all(X, Y)
    S, _, _ = direct_sum(X, Y)
    A = end_algebra(S)
    assert A.dim == 2 == O.hom_dim(S, S)


def test_radical_of_product_of_fields_is_zero():
    X = rect((0, 0), (1, 1))
    Y = rect((10, 10), (11, 11))
    X, Y = _refine_all(X, Y)
    S, _, _ = direct_sum(X, Y)
    A = end_algebra(S)
    assert radical(A).shape[1] == 0


def test_radical_detects_nilpotents():
    # overlapping intervals on a line admit a nonzero nilpotent map
    # k_[0,2) -> k_[1,3)
    X = interval_module((0,), (2,))
    Y = interval_module((1,), (3,))
    X, Y = _refine_all(X, Y)
    S, _, _ = direct_sum(X, Y)
    A = end_algebra(S)
    assert A.dim > 2
    assert radical(A).shape[1] > 0


def test_end_of_G_plus_G_splits_evenly():
    G = module_G()
    S, _, _ = direct_sum(G, G)
    A = end_algebra(S)
    assert A.dim == 4   # 2x2 matrices over the field
    e = find_idempotent(S)
    e.validate()
    for v, m in e.mats.items():
        assert np.array_equal(field.mmul(m, m, S.p), m % S.p)
    M1, M2, w = split_by_idempotent(S, e)
    w.validate()
    assert M1.total_dim() == M2.total_dim() == 25


def test_fitting_split_along_nilpotent_plus_invertible():
    X = rect((0, 0), (2, 2))
    Y = rect((10, 10), (12, 12))
    X, Y = _refine_all(X, Y)
    S, incs, projs = direct_sum(X, Y)
    phi = incs[0].compose(projs[0])   # projection onto the X block
    M1, M2, w = fitting_split(S, phi)
    w.validate()
    assert {M1.total_dim(), M2.total_dim()} == {X.total_dim(), Y.total_dim()}


def test_decompose_recovers_summands_of_shuffled_sum():
    G = module_G()
    I = interval_module((0, 0), (1, 1))
    Gr, Ir = _refine_all(G, I)
    S, _, _ = direct_sum(Gr, Gr, Ir)
    M = random_basis_change(S, seed=21)
    parts, witness = decompose(M)
    witness.validate()
    assert witness.is_isomorphism()
    assert sorted(p.total_dim() for p in parts) == [1, 25, 25]
    matches = [sum(bool(is_isomorphic(p, q)) for q in (Gr, Ir))
               for p in parts]
    assert all(matches)


def test_decompose_zero_module():
    parts, w = decompose(zero_module(2))
    assert parts == []


def test_random_conjugated_triple_splits():
    pieces = [rect((0, 0), (2, 2)), rect((1, 1), (3, 3)), rect((0, 1), (2, 3))]
    pieces = _refine_all(*pieces)
    S, _, _ = direct_sum(*pieces)
    M = random_basis_change(S, seed=5)
    parts, w = decompose(M)
    assert len(parts) == 3
    assert all(p.total_dim() > 0 for p in parts)
    assert w.is_isomorphism()


def test_is_indecomposable_matches_bruteforce_on_tiny_corpus():
    # exhaustive idempotent enumeration is feasible for p in {2, 3} and
    # dim End <= 4; the library must agree exactly
    corpus = []
    for p in (2, 3):
        corpus.append(interval_module((0,), (2,), p=p))
        corpus.append(interval_module((0, 0), (2, 1), p=p))
        X = interval_module((0,), (2,), p=p)
        Y = interval_module((1,), (3,), p=p)
        Xr, Yr = _refine_all(X, Y)
        S, _, _ = direct_sum(Xr, Yr)
        corpus.append(S)
        A = interval_module((0, 0), (1, 1), p=p)
        B = interval_module((2, 2), (3, 3), p=p)
        Ar, Br = _refine_all(A, B)
        T, _, _ = direct_sum(Ar, Br)
        corpus.append(random_basis_change(T, seed=2))
        corpus.append(random_module(2, 2, 1, seed=4, p=p))
    for M in corpus:
        if M.total_dim() == 0:
            continue
        e = O.find_idempotent_bruteforce(M)
        assert is_indecomposable(M) == (e is None), M
        parts, w = decompose(M)
        assert (len(parts) == 1) == (e is None)
        assert sum(p.total_dim() for p in parts) == M.total_dim()


def test_decompose_dims_add_up_pointwise():
    for s in range(5):
        M = random_module(2, 3, 2, seed=s)
        if M.total_dim() == 0:
            continue
        parts, w = decompose(M)
        total = sum(p.dims for p in parts)
        assert np.array_equal(total, M.dims)
