"""Epsilon-indecomposability, summand matching, and the stability gap."""

from fractions import Fraction

import pytest

from gridpersist.construct import module_G
from gridpersist.core import direct_sum, interval_module, zero_module
from gridpersist.interleave import rank_lower_bound
from gridpersist.kan import common_refinement
from gridpersist.match import (bottleneck_upper_bound, instability_demo,
                               is_eps_indecomposable, matching_lower_bound,
                               matching_to_interleaving, summand_certificate)

from conftest import rect


def _sum(*mods):
    refined = mods
    g = None
    from gridpersist.kan import union_axes, restriction_extension
    from gridpersist.core import Grid
    g = Grid(union_axes(*(m.grid for m in mods)))
    refined = [restriction_extension(m, g) for m in mods]
    S, _, _ = direct_sum(*refined)
    return S


def test_indecomposable_module_is_eps_indecomposable():
    G = module_G()
    r = is_eps_indecomposable(G, Fraction(1, 10))
    assert r
    assert not r.is_zero


def test_sum_of_two_large_summands_is_not_eps_indecomposable():
    S = _sum(module_G(), module_G())
    assert not is_eps_indecomposable(S, Fraction(1, 10))


def test_small_trivial_rest_is_absorbed():
    X = rect((0, 0), (4, 4))
    T = rect((0, 0), (Fraction(1, 10), Fraction(1, 10)))
    S = _sum(X, T)
    assert is_eps_indecomposable(S, Fraction(1, 2))


def test_zero_module_flagged():
    r = is_eps_indecomposable(zero_module(2), Fraction(1, 2))
    assert not r
    assert r.is_zero


def test_summand_certificate_between_equal_summands():
    X = rect((0, 0), (2, 2))
    Y = rect((0, 0), (2, 2))
    X, Y, _ = common_refinement(X, Y)
    c = summand_certificate(X, Y, Fraction(1, 10))
    assert c is not None
    c.verify()


def test_summand_certificate_through_zero():
    X = rect((0, 0), (1, 1))
    Y = rect((5, 5), (6, 6))
    X, Y, _ = common_refinement(X, Y)
    # both have triviality radius 1, so they are 1-interleaved via zero
    c = summand_certificate(X, Y, 1)
    assert c is not None
    c.verify()
    assert summand_certificate(X, Y, Fraction(1, 4)) is None


def test_bottleneck_matching_identical_modules():
    S = _sum(rect((0, 0), (2, 2)), rect((3, 3), (5, 5)))
    res = bottleneck_upper_bound(S, S, Fraction(1, 10))
    assert res.status == "matched"
    cert = matching_to_interleaving(res)
    cert.verify()
    assert cert.eps == Fraction(1, 10)


def test_bottleneck_matching_fails_across_gap():
    A = _sum(rect((0, 0), (4, 4)))
    B = _sum(rect((10, 10), (14, 14)))
    res = bottleneck_upper_bound(A, B, Fraction(1, 2))
    assert res.status == "no-matching-found"


def test_matching_lower_bound_separated_summands():
    A = _sum(rect((0, 0), (2, 2)), rect((10, 10), (12, 12)))
    N = _sum(rect((0, 0), (2, 2)))
    lb, edge_bounds = matching_lower_bound(A, N)
    assert lb > 0
    assert all(b >= 0 for b in edge_bounds.values())


def test_instability_gap_and_growth():
    def demo(sep):
        M = _sum(rect((0, 0), (2, 2)), rect((sep, sep), (sep + 2, sep + 2)))
        return instability_demo(M, Fraction(1, 10))

    far = demo(10)
    assert far.d_i_upper <= Fraction(1, 10)
    assert far.gap >= 9
    far.certificate.verify()
    near = demo(6)
    assert near.d_b_lower <= far.d_b_lower
    assert near.gap <= far.gap
