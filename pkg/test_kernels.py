import math

import numpy as np
import pytest
from scipy import integrate

from kernels import Kernel, KernelBank, anticausal, causal, transmission_power
from scattering import EnsembleParams, transmission

WIDTH = 0.5
MOMENTA = np.array([-3.1, -0.4, 0.0, 0.25, 1.7, 6.0])


def mixed_a():
    return (
        causal(WIDTH, 2).scaled(3.0)
        + anticausal(WIDTH)
        + Kernel.pole(WIDTH, rate=2, side=1, power=1, coefficient=0.5 - 0.25j)
        + 0.5
    )


def mixed_b():
    return causal(WIDTH) + anticausal(WIDTH, 3).scaled(-2.0) + Kernel.pole(WIDTH, rate=3, side=-1) - 1.0


def _fourier(kernel, p):
    """int dt exp(i p t) F(t) by adaptive quadrature on each half line."""

    def part(t, component):
        value = np.exp(1j * p * t) * kernel(t)
        return value.real if component == 0 else value.imag

    total = 0.0j
    for lo, hi in ((-np.inf, 0.0), (0.0, np.inf)):
        real = integrate.quad(part, lo, hi, args=(0,), epsabs=1e-12, limit=200)[0]
        imag = integrate.quad(part, lo, hi, args=(1,), epsabs=1e-12, limit=200)[0]
        total += complex(real, imag)
    return total


def test_single_pole_time_functions():
    y, z = causal(WIDTH), anticausal(WIDTH)
    assert y(1.0) == pytest.approx(math.exp(-0.5))
    assert y(-1.0) == 0.0
    assert z(-2.0) == pytest.approx(math.exp(-1.0))
    assert z(2.0) == 0.0
    assert y(0.0, tie=1) == 1.0
    assert y(0.0, tie=-1) == 0.0
    assert causal(WIDTH, 3)(2.0) == pytest.approx(2.0**2 / 2.0 * math.exp(-1.0))


def test_product_matches_momentum_product():
    a, b = mixed_a(), mixed_b()
    np.testing.assert_allclose((a * b).momentum(MOMENTA), a.momentum(MOMENTA) * b.momentum(MOMENTA), rtol=1e-12)
    np.testing.assert_allclose((a * a).momentum(MOMENTA), a.momentum(MOMENTA) ** 2, rtol=1e-12)


def _term_magnitude(kernel, p):
    """Sum of the absolute values of every partial-fraction term at p."""
    total = np.full(p.shape, abs(kernel.delta))
    for (rate, side), c in kernel.terms.items():
        inverse = np.abs(1.0 / (rate * kernel.width - 1j * side * p))
        total = total + sum(abs(coefficient) * inverse ** (n + 1) for n, coefficient in enumerate(c))
    return total


def test_power_matches_repeated_product():
    a = mixed_a()
    fifth = a.power(5)
    # partial fractions of the fifth power cancel where |a(p)| is small
    floor = 1e-10 * _term_magnitude(fifth, MOMENTA)
    difference = np.abs(fifth.momentum(MOMENTA) - a.momentum(MOMENTA) ** 5)
    assert np.all(difference <= 1e-11 * np.abs(a.momentum(MOMENTA)) ** 5 + floor)
    assert a.power(0).momentum(1.3) == 1.0


def test_reflection_and_multiplication_by_ip():
    a = mixed_a()
    np.testing.assert_allclose(a.reflected().momentum(MOMENTA), a.momentum(-MOMENTA), rtol=1e-14)
    poles = a.poles()
    np.testing.assert_allclose(
        poles.multiply_by_ip().momentum(MOMENTA), 1j * MOMENTA * poles.momentum(MOMENTA), rtol=1e-12, atol=1e-14
    )
    with pytest.raises(ValueError):
        a.multiply_by_ip()


def test_time_function_is_the_fourier_transform():
    kernel = mixed_a().poles() * mixed_b().poles()
    for p in (-1.2, 0.0, 0.8):
        assert _fourier(kernel, p) == pytest.approx(kernel.momentum(p), rel=1e-6, abs=1e-8)


def test_pointwise_product_in_time():
    a, b = mixed_a().poles(), mixed_b().poles()
    product = a.pointwise(b)
    t = np.array([-3.0, -0.7, 0.4, 2.5])
    np.testing.assert_allclose(product(t), a(t) * b(t), rtol=1e-12, atol=1e-15)
    y = causal(WIDTH)
    assert y.pointwise(y).momentum(0.3) == pytest.approx(1.0 / (2 * WIDTH - 0.3j))


def test_pointwise_product_is_a_loop_integral():
    a, b = mixed_a().poles(), mixed_b().poles()
    p = 0.7

    def part(loop, component):
        value = a.momentum(loop) * b.momentum(p - loop) / (2.0 * math.pi)
        return value.real if component == 0 else value.imag

    real = integrate.quad(part, -np.inf, np.inf, args=(0,), epsabs=1e-12, limit=400)[0]
    imag = integrate.quad(part, -np.inf, np.inf, args=(1,), epsabs=1e-12, limit=400)[0]
    assert a.pointwise(b).momentum(p) == pytest.approx(complex(real, imag), rel=1e-6, abs=1e-8)


def test_pointwise_rejects_contact_terms():
    with pytest.raises(ValueError):
        mixed_a().pointwise(mixed_b())


def test_transmission_power():
    params = EnsembleParams(beta=0.05, num_atoms=3)
    for n in (0, 1, 4):
        np.testing.assert_allclose(
            transmission_power(params, n).momentum(MOMENTA), transmission(MOMENTA, params) ** n, rtol=1e-13
        )
        np.testing.assert_allclose(
            transmission_power(params, n, reflected=True).momentum(MOMENTA),
            transmission(-MOMENTA, params) ** n,
            rtol=1e-13,
        )


def test_bank_matches_individual_kernels():
    kernels = [mixed_a(), mixed_b(), causal(WIDTH, 4), Kernel(WIDTH, 2.0)]
    bank = KernelBank(kernels)
    t = np.array([[-2.0, 0.0, 1.5], [0.3, -0.1, 4.0]])
    values = bank(t, tie=-1)
    assert values.shape == (4, 2, 3)
    for i, kernel in enumerate(kernels):
        np.testing.assert_allclose(values[i], kernel(t, tie=-1), rtol=1e-13, atol=1e-16)
        assert bank.position(kernel) == i
    np.testing.assert_array_equal(bank.delta, [k.delta for k in kernels])


def test_width_mismatch():
    with pytest.raises(ValueError):
        causal(0.5) + causal(1.0)
    with pytest.raises(ValueError):
        KernelBank([causal(0.5), causal(1.0)])
