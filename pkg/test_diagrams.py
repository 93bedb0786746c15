import itertools

import numpy as np
import pytest

from diagrams import (
    DiagramKind,
    DiagramSpec,
    complete_homogeneous,
    connected_lines,
    double_geometric_sum,
    evaluate_lines,
    geometric_sum,
    loop_amplitudes,
    loop_three_two,
    loop_three_two_lines,
    loop_two_two_two,
    loop_two_two_two_lines,
    loops_enabled,
    pair_amplitude,
    pair_kernel,
    t3v_amplitude,
    t4v_amplitude,
    t4v_total,
    tree_amplitude,
)
from scattering import EnsembleParams, connected_s2, connected_s3, transmission


def conserving(rng, scale=2.0):
    p1, p2 = rng.uniform(-scale, scale, size=2)
    return p1, p2, -p1 - p2


def brute_t3v(p1, p2, p3, params):
    t0 = params.t0
    dressing = transmission(p1, params) * transmission(p2, params) * transmission(p3, params)
    m = params.num_atoms
    sites = sum(t0 ** (3 * j) * dressing ** (m - 1 - j) for j in range(m))
    return params.beta**3 * sites * connected_s3(p1, p2, p3, 0.0, 0.0, 0.0, params).value


def brute_t4v(p1, p2, p3, params, perm):
    """First interaction at site i, second at a later site, photons dressed site by site."""

    def t(p):
        return transmission(p, params)

    first, second, third = ((p1, p2, p3)[i] for i in perm)
    middle = -first
    t0 = params.t0
    m = params.num_atoms
    total = 0.0j
    for i in range(m):
        for site in range(i + 1, m):
            chain = t0 ** (3 * i) * t0
            chain *= (t(first) * t(middle) * t0) ** (site - i - 1)
            chain *= t(first)
            chain *= (t(first) * t(second) * t(third)) ** (m - site - 1)
            total += chain
    early = connected_s2(first, middle, 0.0, 0.0, params).value
    late = connected_s2(second, third, middle, 0.0, params).value
    return params.beta**4 * total * early * late


def test_geometric_sum_examples(rng):
    t0 = 0.9
    degenerate = geometric_sum(t0**3, t0**3, 4)
    assert degenerate.degenerate
    assert degenerate.value == pytest.approx(4 * t0**9, rel=1e-14)
    assert geometric_sum(1.0, 1.0, 7).value == pytest.approx(7.0)
    assert geometric_sum(0.3, 0.4, 0).value == 0.0
    a, b = rng.normal(size=2) + 1j * rng.normal(size=2)
    expected = sum(a ** (6 - j) * b**j for j in range(7))
    result = geometric_sum(a, b, 7)
    assert not result.degenerate
    assert result.value == pytest.approx(expected, rel=1e-12)


def test_complete_homogeneous():
    assert complete_homogeneous([2.0, 3.0], 2) == pytest.approx(4.0 + 6.0 + 9.0)
    assert complete_homogeneous([2.0, 3.0, 5.0], 0) == 1.0
    assert complete_homogeneous([2.0], -1) == 0.0


@pytest.mark.parametrize("m", [2, 3, 6, 11])
def test_double_geometric_sum(rng, m):
    a, b, c, d = rng.normal(size=4) + 1j * rng.normal(size=4)

    def brute(b, c):
        return sum(
            a**j * b**k * c ** (m - j - k - 2) * d ** (m - j - 1)
            for j in range(m - 1)
            for k in range(m - j - 1)
        )

    assert double_geometric_sum(a, b, c, d, m) == pytest.approx(brute(b, c), rel=1e-11)
    # coincident ratios take the polynomial branch
    assert double_geometric_sum(a, b, b, d, m) == pytest.approx(brute(b, b), rel=1e-11)
    assert double_geometric_sum(a, b, c, d, 1) == 0.0


def test_three_vertex_small_chains():
    params = EnsembleParams(beta=0.05, num_atoms=1)
    vertex = connected_s3(0.2, -0.5, 0.3, 0.0, 0.0, 0.0, params).value
    assert t3v_amplitude(0.2, -0.5, 0.3, params) == pytest.approx(0.05**3 * vertex, rel=1e-14)

    two = params.replace(num_atoms=2)
    resonant = connected_s3(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, two).value
    assert t3v_amplitude(0.0, 0.0, 0.0, two) == pytest.approx(2 * 0.05**3 * 0.9**3 * resonant, rel=1e-12)
    assert t3v_amplitude(0.0, 0.0, 0.0, two.replace(num_atoms=0)) == 0.0


def test_site_sums_against_brute_force(rng):
    for m in range(1, 33):
        params = EnsembleParams(beta=rng.uniform(0.01, 0.2), num_atoms=m)
        for _ in range(4):
            p = conserving(rng)
            assert t3v_amplitude(*p, params) == pytest.approx(brute_t3v(*p, params), rel=1e-10)
            for perm in itertools.permutations(range(3)):
                assert t4v_amplitude(*p, params, perm) == pytest.approx(
                    brute_t4v(*p, params, perm), rel=1e-9
                )


def test_four_vertex_needs_two_atoms():
    params = EnsembleParams(beta=0.05, num_atoms=1)
    assert t4v_total(0.3, -0.1, -0.2, params) == 0.0


def test_four_vertex_two_atoms():
    params = EnsembleParams(beta=0.1, num_atoms=2)
    p1, p2, p3 = 0.4, -0.1, -0.3
    t0 = params.t0
    early = connected_s2(p1, -p1, 0.0, 0.0, params).value
    late = connected_s2(p2, p3, -p1, 0.0, params).value
    expected = 0.1**4 * t0 * transmission(p1, params) * early * late
    assert t4v_amplitude(p1, p2, p3, params) == pytest.approx(expected, rel=1e-12)


def test_tree_amplitude_is_symmetric(rng):
    params = EnsembleParams(beta=0.05, num_atoms=6)
    p = conserving(rng)
    reference = tree_amplitude(*p, params)
    for permuted in itertools.permutations(p):
        assert tree_amplitude(*permuted, params) == pytest.approx(reference, rel=1e-10)


def test_single_atom_scales_with_beta_cubed():
    low = EnsembleParams(beta=0.05, num_atoms=1)
    high = EnsembleParams(beta=0.1, num_atoms=1)
    p = (0.3, 0.5, -0.8)
    assert tree_amplitude(*p, high) / tree_amplitude(*p, low) == pytest.approx(8.0, rel=1e-12)


def test_amplitudes_decay_far_from_resonance():
    params = EnsembleParams(beta=0.05, num_atoms=4)
    near = abs(tree_amplitude(0.3, 0.5, -0.8, params))
    far = abs(tree_amplitude(30.0, 50.0, -80.0, params))
    assert far < 1e-2 * near


@pytest.mark.parametrize("m", [0, 1, 2, 5, 9])
def test_pair_kernel_matches_pair_amplitude(m):
    params = EnsembleParams(beta=0.07, num_atoms=m)
    kernel = pair_kernel(params)
    for p in (-2.0, -0.3, 0.0, 0.45, 3.0):
        assert kernel.momentum(p) == pytest.approx(pair_amplitude(p, params), rel=1e-11, abs=1e-16)


@pytest.mark.parametrize("m", [1, 2, 3, 7])
def test_factorized_tree_matches_momentum_amplitude(rng, m):
    params = EnsembleParams(beta=0.05, num_atoms=m)
    products = connected_lines(params, include_loops=False)
    for _ in range(5):
        p = conserving(rng)
        assert evaluate_lines(products, *p) == pytest.approx(tree_amplitude(*p, params), rel=1e-10)


@pytest.mark.parametrize("m", [2, 3, 4])
def test_factorized_loops_match_loop_integrals(m):
    params = EnsembleParams(beta=0.1, num_atoms=m)
    p = (0.35, -0.6, 0.25)
    three_two = evaluate_lines(loop_three_two_lines(params), *p)
    assert three_two == pytest.approx(loop_three_two(*p, params), rel=1e-6)
    two_two_two = evaluate_lines(loop_two_two_two_lines(params), *p)
    assert two_two_two == pytest.approx(loop_two_two_two(*p, params), rel=1e-6, abs=1e-14)


def test_loops_vanish_on_short_chains():
    one = EnsembleParams(beta=0.1, num_atoms=1)
    two = one.replace(num_atoms=2)
    assert loop_three_two(0.1, 0.2, -0.3, one) == 0.0
    assert loop_two_two_two(0.1, 0.2, -0.3, two) == 0.0
    assert loop_three_two_lines(one) == []
    assert loop_two_two_two_lines(two) == []
    assert abs(loop_three_two(0.1, 0.2, -0.3, two)) > 0.0


def test_loop_integrals_converge():
    params = EnsembleParams(beta=0.1, num_atoms=3)
    p = (0.2, 0.3, -0.5)
    coarse = loop_amplitudes(*p, params, rtol=1e-8)
    fine = loop_amplitudes(*p, params, rtol=1e-10)
    assert coarse == pytest.approx(fine, rel=1e-7)


def test_loops_are_small_at_weak_coupling():
    params = EnsembleParams(beta=0.01, num_atoms=50)
    p = (0.3, -0.1, -0.2)
    assert params.optical_depth == pytest.approx(2.0)
    loops = loop_amplitudes(*p, params, rtol=1e-6)
    assert abs(loops) < 0.1 * abs(tree_amplitude(*p, params))


def test_loop_switch():
    assert loops_enabled(EnsembleParams(beta=0.05, num_atoms=1))
    assert not loops_enabled(EnsembleParams(beta=0.01, num_atoms=1))
    assert loops_enabled(EnsembleParams(beta=0.01, num_atoms=1), "on")
    assert not loops_enabled(EnsembleParams(beta=0.5, num_atoms=1), "off")


def test_order_estimate():
    params = EnsembleParams(beta=0.1, num_atoms=10)
    spec = DiagramSpec(DiagramKind.FOUR_VERTEX)
    assert spec.beta_power == 4 and spec.interactions == 2
    assert spec.order_estimate(params) == pytest.approx(45 * 1e-4)
    assert DiagramSpec(DiagramKind.LOOP_TWO_TWO_TWO).order_estimate(params.replace(num_atoms=2)) == 0.0
