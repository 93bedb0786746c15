"""Normalized intensity correlators of the transmitted light.

In the weak-drive limit

    g2 = |psi2|**2 / t0**(4M),    g3 = |psi3|**2 / t0**(6M),
    gc3 = 2 + g3 - g2(x1, x2) - g2(x1, x3) - g2(x2, x3).

Powers of t0 are taken in log space so that large optical depths do not
underflow.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import pandas as pd
from scipy.special import roots_legendre

from errors import ConfigValidationError, SingularNormalizationError
from wavefield import field_for

SQRT2 = math.sqrt(2.0)
SQRT3 = math.sqrt(3.0)
SQRT6 = math.sqrt(6.0)
COUNT_WINDOW = 3.0
COUNT_NODES = 24
DRIVE_REFERENCE = "drive"
TRANSMITTED_REFERENCE = "transmitted"
FLUX_REFERENCES = (DRIVE_REFERENCE, TRANSMITTED_REFERENCE)


class GridKind(str, Enum):
    G2 = "g2"
    G3 = "g3"
    G3_CONNECTED = "g3_connected"
    G3_CONNECTED_UNNORMALIZED = "g3_connected_unnormalized"


class Method(str, Enum):
    DIAGRAMMATIC = "diagrammatic"
    ORACLE = "oracle"
    BOTH = "both"


@dataclass
class CorrelationGrid:
    """Correlation values on the tensor product of named coordinate axes."""

    axes: dict
    values: np.ndarray
    kind: GridKind
    params: object
    method: Method = Method.DIAGRAMMATIC
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.axes = {name: np.asarray(axis, dtype=float) for name, axis in self.axes.items()}
        self.values = np.asarray(self.values, dtype=float)
        self.kind = GridKind(self.kind)
        self.method = Method(self.method)
        expected = tuple(len(axis) for axis in self.axes.values())
        if self.values.shape != expected:
            raise ValueError(f"values of shape {self.values.shape} do not match axes {expected}")

    @property
    def shape(self):
        return self.values.shape

    def to_frame(self):
        """Long format: one coordinate column per axis plus ``value``."""
        mesh = np.meshgrid(*self.axes.values(), indexing="ij")
        columns = {name: grid.ravel() for name, grid in zip(self.axes, mesh)}
        columns["value"] = self.values.ravel()
        return pd.DataFrame(columns)

    @classmethod
    def from_frame(cls, frame, kind, params, method=Method.DIAGRAMMATIC, meta=None):
        names = [column for column in frame.columns if column != "value"]
        axes = {name: pd.unique(frame[name]) for name in names}
        shape = tuple(len(axis) for axis in axes.values())
        values = frame["value"].to_numpy().reshape(shape)
        return cls(axes, values, kind, params, method, dict(meta or {}))


def _field(params, field=None):
    return field if field is not None else field_for(params)


def _inverse_power(params, exponent):
    """t0**(-exponent) computed through its logarithm."""
    t0 = params.t0
    if t0 == 0.0:
        raise SingularNormalizationError(
            f"resonant transmission vanishes at beta={params.beta}; normalized correlators are undefined"
        )
    sign = -1.0 if (t0 < 0 and exponent % 2) else 1.0
    return sign * math.exp(-exponent * math.log(abs(t0)))


def check_weak_drive(params):
    if params.drive_power > params.beta:
        logging.warning(
            f"Drive power {params.drive_power} exceeds beta={params.beta} (units of Gamma_tot); "
            "weak-drive correlators are only qualitative here"
        )
        return False
    return True


def g2(x1, x2, params, field=None):
    m = params.num_atoms
    relative = _field(params, field).phi2(x1, x2) * _inverse_power(params, 2 * m)
    return np.abs(1.0 + relative) ** 2


def _normalized_psi3(x1, x2, x3, params, field):
    m = params.num_atoms
    wave = _field(params, field)
    pairs = wave.phi2(x1, x2) + wave.phi2(x1, x3) + wave.phi2(x2, x3)
    return (
        1.0
        + pairs * _inverse_power(params, 2 * m)
        + wave.phi3(x1, x2, x3) * _inverse_power(params, 3 * m)
    )


def g3(x1, x2, x3, params, field=None):
    return np.abs(_normalized_psi3(x1, x2, x3, params, field)) ** 2


def g3_connected(x1, x2, x3, params, field=None):
    wave = _field(params, field)
    pairs = g2(x1, x2, params, wave) + g2(x1, x3, params, wave) + g2(x2, x3, params, wave)
    return 2.0 + g3(x1, x2, x3, params, wave) - pairs


def output_power(params):
    """Transmitted photon flux, photon_flux * t0**(2M), per unit time of ``gamma_tot``."""
    return params.photon_flux * params.t0 ** (2 * params.num_atoms)


def unnormalized_g3_connected(x1, x2, x3, params, field=None):
    """G_c3 = gc3 * <a^dag a>**3 with the transmitted flux."""
    return g3_connected(x1, x2, x3, params, field) * output_power(params) ** 3


def to_jacobi(x1, x2, x3):
    x1, x2, x3 = (np.asarray(x, dtype=float) for x in (x1, x2, x3))
    return (x1 + x2 + x3) / SQRT3, (x1 - x2) / SQRT2, (x1 + x2 - 2.0 * x3) / SQRT6


def from_jacobi(center, eta, zeta):
    center, eta, zeta = (np.asarray(v, dtype=float) for v in (center, eta, zeta))
    base = center / SQRT3
    x1 = base + eta / SQRT2 + zeta / SQRT6
    x2 = base - eta / SQRT2 + zeta / SQRT6
    x3 = base - 2.0 * zeta / SQRT6
    return x1, x2, x3


def jacobi_grid(params, eta_range, zeta_range, n, center=0.0, field=None):
    """gc3 over the (eta, zeta) plane at fixed center of mass."""
    if n < 2:
        raise ConfigValidationError(f"grid resolution must be at least 2, got {n}")
    check_weak_drive(params)
    eta = np.linspace(eta_range[0], eta_range[1], n)
    zeta = np.linspace(zeta_range[0], zeta_range[1], n)
    mesh_eta, mesh_zeta = np.meshgrid(eta, zeta, indexing="ij")
    x1, x2, x3 = from_jacobi(center, mesh_eta, mesh_zeta)
    values = g3_connected(x1, x2, x3, params, field)
    return CorrelationGrid(
        {"eta": eta, "zeta": zeta},
        values,
        GridKind.G3_CONNECTED,
        params,
        Method.DIAGRAMMATIC,
        {"center": float(center)},
    )


def time_grid(params, t_range, n, field=None):
    """gc3(t1, t2, 0) on a square grid of arrival times."""
    if n < 2:
        raise ConfigValidationError(f"grid resolution must be at least 2, got {n}")
    check_weak_drive(params)
    times = np.linspace(t_range[0], t_range[1], n)
    t1, t2 = np.meshgrid(times, times, indexing="ij")
    values = g3_connected(t1, t2, np.zeros_like(t1), params, field)
    return CorrelationGrid(
        {"t1": times, "t2": times}, values, GridKind.G3_CONNECTED, params, Method.DIAGRAMMATIC
    )


def count_rate(
    params, gamma_tot_hz, window=COUNT_WINDOW, nodes=COUNT_NODES, field=None, reference=DRIVE_REFERENCE
):
    """Rate (Hz) of connected photon triples with t1, t2 inside the window.

    S = F**3 * integral of |gc3(t1, t2, 0)| over [0, window / Gamma_tot]**2,
    where F is the drive flux P_in * Gamma_tot / 2pi (``reference="drive"``,
    the convention the published estimates use) or the transmitted flux
    F * t0**(2M) (``reference="transmitted"``).  The integrand is symmetric
    in t1 <-> t2, so one triangle is integrated (collapsed square map,
    tensor Gauss-Legendre) and doubled.
    """
    if window <= 0:
        raise ConfigValidationError(f"count window must be positive, got {window}")
    if reference not in FLUX_REFERENCES:
        raise ConfigValidationError(f"flux reference must be one of {FLUX_REFERENCES}, got {reference!r}")
    check_weak_drive(params)
    flux = params.drive_power * gamma_tot_hz / (2.0 * math.pi)
    if reference == TRANSMITTED_REFERENCE:
        flux *= params.t0 ** (2 * params.num_atoms)

    xi, omega = roots_legendre(nodes)
    u = 0.5 * (xi + 1.0)
    weight = 0.5 * omega
    outer, inner = np.meshgrid(u, u, indexing="ij")
    # triangle 0 <= t2 <= t1 <= window; window is in units of 1/Gamma_tot
    scale = window / params.gamma_tot
    t1 = scale * outer
    t2 = scale * outer * inner
    jacobian = window**2 * outer
    values = np.abs(g3_connected(t1, t2, np.zeros_like(t1), params, field))
    integral = 2.0 * np.sum(np.outer(weight, weight) * jacobian * values)
    rate = flux**3 * integral / gamma_tot_hz**2
    logging.info(
        f"Count rate for beta={params.beta}, M={params.num_atoms}, P_in={params.drive_power} "
        f"({reference} flux {flux:.4g} Hz): {rate:.4g} Hz"
    )
    return float(rate)
