import itertools
import math

import numpy as np
import pytest

import wavefield
from scattering import EnsembleParams
from wavefield import Wavefield


@pytest.fixture(scope="module")
def chain():
    return Wavefield(EnsembleParams(beta=0.05, num_atoms=2, drive_power=0.02))


def test_empty_chain_has_no_connected_part():
    field = Wavefield(EnsembleParams(beta=0.05, num_atoms=0))
    assert field.phi2(0.0, 1.0) == 0.0
    assert field.phi3(0.0, 0.5, 1.0) == 0.0
    assert field.psi3(0.0, 0.5, 1.0) == 1.0


def test_phi2_is_symmetric(chain):
    x1 = np.array([0.0, 0.3, -2.0, 5.0])
    x2 = np.array([1.0, 0.3, 1.5, -0.5])
    np.testing.assert_array_equal(chain.phi2(x1, x2), chain.phi2(x2, x1))


def test_single_atom_pair_function():
    beta = 0.05
    field = Wavefield(EnsembleParams(beta=beta, num_atoms=1))
    tau = np.array([0.0, 0.4, 1.0, 6.0])
    np.testing.assert_allclose(field.phi2(0.0, tau), -4 * beta**2 * np.exp(-0.5 * tau), rtol=1e-13)


@pytest.mark.parametrize("m", [2, 5])
def test_phi2_matches_fourier_quadrature(m):
    field = Wavefield(EnsembleParams(beta=0.05, num_atoms=m), include_loops="off")
    for tau in (0.0, 0.7, 3.0):
        assert field.phi2(0.0, tau) == pytest.approx(field.phi2_quadrature(0.0, tau), abs=1e-9)


def test_single_atom_triple_function():
    beta = 0.05
    field = Wavefield(EnsembleParams(beta=beta, num_atoms=1))
    for x in ((0.0, 0.4, 1.3), (2.0, -1.0, 0.5), (0.0, 0.0, 0.0), (1.0, 1.0, 3.0)):
        expected = -16 * beta**3 * math.exp(-0.5 * (max(x) - min(x)))
        assert field.phi3(*x) == pytest.approx(expected, rel=1e-12)


def test_phi3_permutation_symmetry(chain):
    x = (0.3, 1.1, 2.0)
    reference = chain.phi3(*x)
    for permuted in itertools.permutations(x):
        assert chain.phi3(*permuted) == pytest.approx(reference, rel=1e-9)


def test_phi3_translation_invariance(chain):
    x = np.array([0.0, 0.8, 1.9])
    reference = chain.phi3(*x)
    for shift in (-3.0, 0.25, 10.0):
        assert chain.phi3(*(x + shift)) == pytest.approx(reference, rel=1e-10)


def test_linewidth_scaling():
    base = Wavefield(EnsembleParams(beta=0.05, num_atoms=3))
    fast = Wavefield(EnsembleParams(beta=0.05, num_atoms=3, gamma_tot=2.0))
    x = np.array([0.0, 0.6, 1.7])
    assert fast.phi2(0.0, x[2] / 2) == pytest.approx(base.phi2(0.0, x[2]), rel=1e-10)
    assert fast.phi3(*(x / 2)) == pytest.approx(base.phi3(*x), rel=1e-10)


def test_cluster_decay(chain):
    assert abs(chain.phi3(0.0, 0.0, 30.0)) < 1e-3 * abs(chain.phi3(0.0, 0.0, 0.0))
    t0 = chain.params.t0
    assert chain.psi3(0.0, 30.0, 60.0) == pytest.approx(t0**6, rel=1e-3)


def test_quadrature_is_converged(chain):
    finer = chain.refined()
    for x in ((0.0, 0.5, 1.5), (0.0, 2.0, 4.0), (0.0, 0.0, 0.0)):
        assert chain.phi3(*x) == pytest.approx(finer.phi3(*x), rel=1e-6)


def test_phi3_batches_match_pointwise(chain):
    x1 = np.array([0.0, 0.2, 1.0])
    x2 = np.array([0.5, 0.2, -1.0])
    x3 = np.zeros(3)
    batched = chain.phi3(x1, x2, x3)
    assert batched.shape == (3,)
    for i in range(3):
        assert batched[i] == pytest.approx(chain.phi3(x1[i], x2[i], x3[i]), rel=1e-12)


def test_null_field():
    params = EnsembleParams(beta=0.05, num_atoms=3)
    null = Wavefield.null_field(params)
    assert null.phi3(0.0, 1.0, 2.0) == 0.0
    assert null.phi2(0.0, 1.0) == 0.0
    assert null.psi2(0.0, 1.0) == pytest.approx(params.t0**6)


def test_module_functions_share_a_cached_field():
    params = EnsembleParams(beta=0.05, num_atoms=2)
    assert wavefield.field_for(params) is wavefield.field_for(params)
    assert wavefield.phi3(0.0, 0.5, 1.0, params) == pytest.approx(Wavefield(params).phi3(0.0, 0.5, 1.0))
    assert wavefield.psi2(0.0, 0.5, params) == pytest.approx(params.t0**4 + wavefield.phi2(0.0, 0.5, params))
