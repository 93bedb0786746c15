"""Single-emitter scattering for a chirally coupled two-level atom.

Momenta are detunings from resonance in the same angular units as
``gamma_tot``. Connected amplitudes are densities: the factor
2*pi*delta(sum(out) - sum(in)) is left out and callers impose momentum
conservation themselves.
"""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from errors import ConfigValidationError

Momentum = float


@dataclass(frozen=True)
class EnsembleParams:
    """Physical parameters of a chain of identical emitters."""

    beta: float
    num_atoms: int
    gamma_tot: float = 1.0
    drive_power: float = 0.0

    def __post_init__(self):
        violations = []
        if not 0.0 < self.beta < 1.0:
            violations.append(f"beta must lie in (0, 1), got {self.beta}")
        if int(self.num_atoms) != self.num_atoms or self.num_atoms < 0:
            violations.append(f"num_atoms must be a non-negative integer, got {self.num_atoms}")
        if not self.gamma_tot > 0.0:
            violations.append(f"gamma_tot must be positive, got {self.gamma_tot}")
        if not self.drive_power >= 0.0:
            violations.append(f"drive_power must be non-negative, got {self.drive_power}")
        if violations:
            raise ConfigValidationError(violations)
        object.__setattr__(self, "num_atoms", int(self.num_atoms))

    @property
    def gamma(self):
        """Emission rate into the guided mode."""
        return self.beta * self.gamma_tot

    @property
    def gamma_loss(self):
        return (1.0 - self.beta) * self.gamma_tot

    @property
    def optical_depth(self):
        return 4.0 * self.beta * self.num_atoms

    @property
    def t0(self):
        """Resonant transmission, real by construction."""
        return 1.0 - 2.0 * self.beta

    @property
    def half_width(self):
        return 0.5 * self.gamma_tot

    @property
    def photon_flux(self):
        """Input photons per unit time.

        ``drive_power`` counts photons per cycle of the linewidth
        Gamma_tot/2pi, so P_in = 0.02 Gamma_tot at a 5 MHz linewidth is
        1e5 photons per second.
        """
        return self.drive_power * self.gamma_tot / (2.0 * math.pi)

    def replace(self, **changes):
        values = {
            "beta": self.beta,
            "num_atoms": self.num_atoms,
            "gamma_tot": self.gamma_tot,
            "drive_power": self.drive_power,
        }
        values.update(changes)
        return EnsembleParams(**values)

    def as_dict(self):
        return {
            "beta": self.beta,
            "num_atoms": self.num_atoms,
            "gamma_tot": self.gamma_tot,
            "drive_power": self.drive_power,
        }


@dataclass(frozen=True)
class ConnectedAmplitude:
    value: complex
    in_momenta: tuple = field(default_factory=tuple)
    out_momenta: tuple = field(default_factory=tuple)

    def __complex__(self):
        return complex(self.value)


def transmission(k, params):
    """t_k = 1 - i*beta*Gamma_tot / (k + i*Gamma_tot/2); accepts arrays."""
    k = np.asarray(k, dtype=float)
    value = 1.0 - 1j * params.gamma / (k + 1j * params.half_width)
    return value[()] if value.ndim == 0 else value


def reflection(k, params):
    """Amplitude for scattering into the loss channel."""
    k = np.asarray(k, dtype=float)
    coupling = math.sqrt(params.beta * (1.0 - params.beta))
    value = -coupling * 1j * params.gamma_tot / (k + 1j * params.half_width)
    return value[()] if value.ndim == 0 else value


def _pole(k, params):
    return 1.0 / (np.asarray(k, dtype=float) + 1j * params.half_width)


def connected_s2(p1, p2, k1, k2, params):
    """Connected two-photon S-matrix density of one emitter (even channel).

    The beta**2 channel weight is applied by the diagrams, not here.
    """
    g = params.gamma_tot
    energy = k1 + k2
    # pairwise products commute exactly, keeping the exchange symmetry bitwise
    outgoing = _pole(p1, params) * _pole(p2, params)
    incoming = _pole(k1, params) * _pole(k2, params)
    value = 1j * g**2 * (energy + 1j * g) * outgoing * incoming
    return ConnectedAmplitude(complex(value), (k1, k2), (p1, p2))


def connected_s3(p1, p2, p3, k1, k2, k3, params):
    """Connected three-photon S-matrix density of one emitter (even channel)."""
    g = params.gamma_tot
    w = params.half_width
    outgoing = (p1, p2, p3)
    incoming = (k1, k2, k3)
    total = k1 + k2 + k3
    dressing = np.prod([1j * g / (k + 1j * w) for k in incoming])
    summed = 0.0j
    for a, c in itertools.permutations(range(3), 2):
        for k in incoming:
            summed += 1.0 / ((total - outgoing[a] - k + 1j * w) * (outgoing[c] + 1j * w))
    value = (2.0 / 3.0) * dressing * summed
    return ConnectedAmplitude(complex(value), incoming, outgoing)


def lossy_connected_factor(photons, params):
    """Channel weight of an n-photon interaction after which one photon is lost."""
    return params.beta ** (photons - 0.5) * math.sqrt(1.0 - params.beta)
