"""Triviality, interleaving certificates, composition, rank obstructions."""

from fractions import Fraction

import numpy as np
import pytest

from gridpersist.cli import random_module
from gridpersist.construct import module_G
from gridpersist.core import Grid, direct_sum, interval_module, zero_module
from gridpersist.interleave import (CertificateError, InterleavingCertificate,
                                    TrivialRegion, compose_certificates,
                                    compose_chain, certificate_grid,
                                    factor_through_grid, identity_certificate,
                                    is_eps_trivial, is_strictly_eps_trivial,
                                    local_change_certificate,
                                    pair_sum_certificates, rank_lower_bound,
                                    snap_certificate, sum_certificates,
                                    triviality_radius, trivial_certificate,
                                    weaken_certificate)
from gridpersist.kan import common_refinement, regular_grid, restriction_extension

from conftest import rect
import oracles as O


# -- triviality ---------------------------------------------------------------

def test_unit_square_interval_triviality():
    M = interval_module((0, 0), (1, 1))
    assert is_eps_trivial(M, 1)
    assert not is_eps_trivial(M, Fraction(1, 2))
    assert triviality_radius(M) == 1 == O.triviality_radius_bruteforce(M)
    assert is_strictly_eps_trivial(M, Fraction(3, 2))
    assert not is_strictly_eps_trivial(M, 1)


def test_zero_module_trivial_at_any_eps():
    Z = zero_module(2)
    assert is_eps_trivial(Z, Fraction(1, 100))
    assert triviality_radius(Z) == 0


def test_G_triviality_radius_matches_bruteforce():
    # the top corner of G survives under every diagonal shift (the map
    # (1,2) -> (4,4) is the identity and the floor extension keeps it),
    # so G is not eps-trivial at any radius; in particular not 4-trivial
    G = module_G()
    assert triviality_radius(G) is None
    assert O.triviality_radius_bruteforce(G) is None
    for e in (3, 4, 100):
        assert not is_eps_trivial(G, e)
        assert is_eps_trivial(G, e) == O.is_trivial_at(G, e)
        assert not is_strictly_eps_trivial(G, e)


def test_triviality_matches_bruteforce_on_random_modules():
    for s in range(6):
        M = random_module(2, 3, 2, seed=s)
        r = triviality_radius(M)
        assert r == O.triviality_radius_bruteforce(M)


def test_trivial_region_box_logic():
    U = TrivialRegion([[(0, 1), (0, 1)]])
    assert U.contains((Fraction(1, 2), Fraction(1, 2)))
    assert not U.contains((1, 1))
    assert U.is_eps_trivial(1)
    assert not U.is_eps_trivial(Fraction(1, 2))
    assert TrivialRegion([]).is_eps_trivial(Fraction(1, 1000))


# -- certificates -------------------------------------------------------------

def test_identity_and_trivial_certificates_verify():
    M = random_module(2, 3, 2, seed=4)
    identity_certificate(M, Fraction(1, 2)).verify()
    # the unit square is 1-trivial, so it is within 1/2 of the zero module
    # but not within 1/4 (the triangle needs 2 eps triviality)
    I = interval_module((0, 0), (1, 1))
    trivial_certificate(I, Fraction(1, 2)).verify()
    with pytest.raises(CertificateError):
        trivial_certificate(I, Fraction(1, 4)).verify()


def test_tampered_certificate_fails_verification():
    # zeroing g on a vertex that carries a surviving 2eps structure map
    # breaks the triangle identity there
    M = interval_module((0, 0), (4, 4))
    c = identity_certificate(M, Fraction(1, 2))
    drop = min(c.g)
    g = {v: m for v, m in c.g.items() if v != drop}
    assert len(g) < len(c.g)
    bad = InterleavingCertificate(c.m_module, c.n_module, c.eps, c.grid,
                                  dict(c.f), g)
    with pytest.raises(CertificateError):
        bad.verify()


def test_compose_certificates_adds_eps():
    M = random_module(2, 3, 2, seed=6)
    c1 = identity_certificate(M, Fraction(1, 4))
    c2 = identity_certificate(M, Fraction(1, 2))
    c = compose_certificates(c1, c2)
    assert c.eps == Fraction(3, 4)
    c.verify()


def test_compose_chain_of_three():
    M = random_module(2, 3, 2, seed=7)
    certs = [identity_certificate(M, Fraction(1, 8)) for _ in range(3)]
    c = compose_chain(certs)
    assert c.eps == Fraction(3, 8)
    c.verify()


def test_pair_sum_and_sum_certificates():
    for s in range(4):
        A = random_module(2, 3, 2, seed=s)
        B = random_module(2, 3, 2, seed=30 + s)
        cA = identity_certificate(A, Fraction(1, 3))
        cB = identity_certificate(B, Fraction(1, 3))
        c, S1, S2 = pair_sum_certificates(cA, cB)
        assert c.eps == Fraction(1, 3)
        c.verify()
        c2, _, _ = sum_certificates(cA, B)
        c2.verify()


def test_weaken_certificate():
    M = random_module(2, 3, 2, seed=9)
    c = identity_certificate(M, Fraction(1, 4))
    w = weaken_certificate(c, Fraction(1, 2))
    assert w.eps == Fraction(1, 2)
    w.verify()
    with pytest.raises(ValueError):
        weaken_certificate(c, Fraction(1, 8))


def test_snap_certificate_verifies():
    for s in range(3):
        M = random_module(2, 3, 2, seed=s)
        L, c = snap_certificate(M, Fraction(1, 2))
        assert L.validate()
        assert c.eps == Fraction(1, 2)
        c.verify()


def test_flip_swaps_sides():
    M = random_module(2, 3, 2, seed=11)
    L, c = snap_certificate(M, Fraction(1, 2))
    d = c.flip()
    assert d.m_module is c.n_module and d.n_module is c.m_module
    d.verify()


# -- local change -------------------------------------------------------------

def test_local_change_empty_region_is_identity_like():
    M = random_module(2, 3, 2, seed=12)
    c = local_change_certificate(M, M, TrivialRegion([]), Fraction(1, 2))
    c.verify()
    assert c.eps == Fraction(1, 2)


def test_local_change_detects_outside_disagreement():
    A = rect((0, 0), (2, 2))
    B = rect((0, 0), (3, 3))
    A, B, _ = common_refinement(A, B)
    U = TrivialRegion([[(0, Fraction(1, 2)), (0, Fraction(1, 2))]])
    with pytest.raises(CertificateError):
        local_change_certificate(A, B, U, Fraction(1, 2))


def test_local_change_rejects_non_trivial_region():
    M = random_module(2, 3, 2, seed=13)
    U = TrivialRegion([[(0, 2), (0, 2)]])
    with pytest.raises(CertificateError):
        local_change_certificate(M, M, U, Fraction(1, 2))


# -- rank obstruction ---------------------------------------------------------

def test_rank_lower_bound_zero_on_equal():
    M = random_module(2, 3, 2, seed=14)
    assert rank_lower_bound(M, M) == 0


def test_rank_lower_bound_interval_vs_zero_scales_with_width():
    Z = zero_module(2)
    lbs = {}
    for w in (2, 4):
        I = rect((0, 0), (w, w))
        S, _, _ = direct_sum(I, I, I)
        lbs[w] = rank_lower_bound(S, Z)
    assert lbs[2] > 0
    assert lbs[4] == 2 * lbs[2]


def test_rank_lower_bound_below_certificate_eps():
    for s in range(4):
        M = random_module(2, 3, 2, seed=s)
        L, c = snap_certificate(M, Fraction(1, 2))
        c.verify()
        assert rank_lower_bound(M, L) <= c.eps


# -- factoring through bounded grids -------------------------------------------

def _check_factor_square(L, window, r):
    import gridpersist.field as field
    from gridpersist.core import pt_shift
    mats = factor_through_grid(L, window, r)
    meshes = [ax[i + 1] - ax[i] for ax in window.axes
              for i in range(len(ax) - 1)]
    beta = max(meshes)
    for vidx, m in mats.items():
        v = window.coord(vidx)
        tgt = window.coord(window.floor_index(pt_shift(v, beta)))
        lhs = field.mmul(m, L.structure_map_points(v, pt_shift(v, r)), L.p)
        assert np.array_equal(lhs, L.structure_map_points(v, tgt))
    return mats


def test_factor_through_regular_grid():
    M = random_module(2, 4, 2, seed=15)
    window = regular_grid(2, 1, (0, 0), (4, 4))
    mats = _check_factor_square(M, window, 1)
    assert mats


def test_factor_through_irregular_grid():
    axes = [[Fraction(0), Fraction(1), Fraction(5, 2), Fraction(4)],
            [Fraction(0), Fraction(3, 2), Fraction(3), Fraction(4)]]
    window = Grid(axes)
    for s in range(3):
        M = random_module(2, 4, 2, seed=20 + s)
        assert _check_factor_square(M, window, 1)


def test_factor_through_constant_module():
    g = regular_grid(2, 1, (0, 0), (3, 3))
    from gridpersist.core import free_module
    M = free_module(g, (0, 0))
    window = regular_grid(2, 1, (0, 0), (3, 3))
    assert _check_factor_square(M, window, 1)
