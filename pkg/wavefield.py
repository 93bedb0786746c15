"""Position-space connected wavefunctions of the transmitted light.

Coordinates are photon arrival times in units of 1/Gamma_tot (or
positions with c = 1).  phi2 is the transform of the two-photon
connected amplitude and is evaluated in closed form.  phi3 is the
two-dimensional transform of the three-photon amplitude on the plane
p1 + p2 + p3 = 0; for a factorized term f1(p1) f2(p2) f3(p3) it reduces to

    int ds F1(x1 - s) F2(x2 - s) F3(x3 - s)

which is integrated with Gauss-Legendre nodes between the sorted
coordinates and Gauss-Laguerre nodes on both tails.
"""

import functools
import logging
import math

import numpy as np
from scipy import integrate
from scipy.special import roots_laguerre, roots_legendre

from diagrams import connected_lines, loops_enabled, pair_amplitude, pair_kernel
from errors import QuadratureError
from kernels import Kernel, KernelBank

SEGMENT_NODES = 48
TAIL_NODES = 64
# complex entries held at once while multiplying line values
BLOCK_ELEMENTS = 1 << 22


class Wavefield:
    """Connected two- and three-photon wavefunctions for one parameter set."""

    def __init__(
        self,
        params,
        include_loops="auto",
        segment_nodes=SEGMENT_NODES,
        tail_nodes=TAIL_NODES,
        null=False,
    ):
        self.params = params
        self.include_loops = loops_enabled(params, include_loops)
        self.segment_nodes = int(segment_nodes)
        self.tail_nodes = int(tail_nodes)
        self.null = bool(null)
        width = params.half_width
        if self.null:
            self.pair = Kernel(width)
            self.products = []
        else:
            self.pair = pair_kernel(params)
            self.products = connected_lines(params, self.include_loops)

        unique = {}
        for product in self.products:
            for line in product.lines:
                unique.setdefault(id(line), line)
        self.bank = KernelBank(unique.values())
        self.weights = np.array([product.weight for product in self.products], dtype=complex)
        self.line_index = np.array(
            [[self.bank.position(line) for line in product.lines] for product in self.products],
            dtype=int,
        ).reshape(-1, 3)
        self.delta_terms = []
        for term, product in enumerate(self.products):
            carriers = [i for i, line in enumerate(product.lines) if line.delta != 0]
            if len(carriers) > 1:
                raise ValueError("a connected term may carry a contact part on one line only")
            if carriers:
                self.delta_terms.append((term, carriers[0]))

        self._legendre = roots_legendre(self.segment_nodes)
        self._laguerre = roots_laguerre(self.tail_nodes)
        logging.info(
            f"Wavefield for beta={params.beta}, M={params.num_atoms}: "
            f"{len(self.products)} line products, {len(self.bank)} kernels, loops={self.include_loops}"
        )

    @classmethod
    def null_field(cls, params, **options):
        """Field with every connected part forced to zero (Gaussian reference)."""
        return cls(params, null=True, **options)

    def refined(self, factor=2):
        return Wavefield(
            self.params,
            self.include_loops,
            self.segment_nodes * factor,
            self.tail_nodes * factor,
            self.null,
        )

    # two photons

    def phi2(self, x1, x2):
        separation = np.abs(np.asarray(x1, dtype=float) - np.asarray(x2, dtype=float))
        return self.pair(separation, tie=1)

    def phi2_quadrature(self, x1, x2, rtol=1e-10):
        """phi2 by adaptive Fourier quadrature of the momentum amplitude."""
        if self.null:
            return 0.0j
        separation = abs(float(x1) - float(x2))

        def amplitude(p):
            return pair_amplitude(p, self.params).real

        if separation == 0.0:
            result = integrate.quad(
                amplitude, 0.0, np.inf, epsabs=1e-14, epsrel=rtol, limit=400, full_output=1
            )
        else:
            result = integrate.quad(
                amplitude,
                0.0,
                np.inf,
                weight="cos",
                wvar=separation,
                epsabs=1e-12,
                limit=400,
                limlst=100,
                full_output=1,
            )
        if len(result) > 3:
            raise QuadratureError(
                f"two-photon transform at separation {separation} failed: {result[3]}",
                estimate=result[0],
                bound=result[1],
            )
        return complex(result[0] / math.pi)

    def psi2(self, x1, x2):
        t0 = self.params.t0
        return t0 ** (2 * self.params.num_atoms) + self.phi2(x1, x2)

    # three photons

    def _nodes(self, ordered):
        """Quadrature nodes and weights in s for sorted shifted coordinates."""
        xi, omega = self._legendre
        segments = []
        for lo, hi in ((ordered[:, 0], ordered[:, 1]), (ordered[:, 1], ordered[:, 2])):
            half = 0.5 * (hi - lo)[:, None]
            segments.append((lo[:, None] + half * (xi + 1.0), half * omega))
        scale = 2.0 * self.params.half_width
        eta, rho = self._laguerre
        tail_weight = rho * np.exp(eta) / scale
        points = ordered.shape[0]
        segments.append((ordered[:, :1] - eta / scale, np.broadcast_to(tail_weight, (points, eta.size))))
        segments.append((ordered[:, 2:] + eta / scale, np.broadcast_to(tail_weight, (points, eta.size))))
        nodes = np.concatenate([s for s, _ in segments], axis=1)
        weights = np.concatenate([w for _, w in segments], axis=1)
        return nodes, weights

    def _integrated(self, shifted):
        nodes, weights = self._nodes(np.sort(shifted, axis=1))
        values = np.zeros(shifted.shape[0], dtype=complex)
        terms = len(self.products)
        chunk = max(1, BLOCK_ELEMENTS // max(1, terms * nodes.shape[1]))
        for start in range(0, shifted.shape[0], chunk):
            block = slice(start, start + chunk)
            lines = [self.bank(shifted[block, i, None] - nodes[block]) for i in range(3)]
            product = (
                lines[0][self.line_index[:, 0]]
                * lines[1][self.line_index[:, 1]]
                * lines[2][self.line_index[:, 2]]
            )
            integrand = np.tensordot(self.weights, product, axes=1)
            values[block] = np.sum(integrand * weights[block], axis=1)
        return values

    def _contact(self, shifted):
        values = np.zeros(shifted.shape[0], dtype=complex)
        if not self.delta_terms:
            return values
        relative = {}
        for i in range(3):
            for j in range(3):
                if i != j:
                    relative[i, j] = self.bank(shifted[:, i] - shifted[:, j], tie=int(np.sign(i - j)))
        for term, carrier in self.delta_terms:
            value = self.weights[term] * self.bank.delta[self.line_index[term, carrier]]
            for i in range(3):
                if i != carrier:
                    value = value * relative[i, carrier][self.line_index[term, i]]
            values += value
        return values

    def phi3(self, x1, x2, x3):
        x1, x2, x3 = np.broadcast_arrays(
            np.asarray(x1, dtype=float), np.asarray(x2, dtype=float), np.asarray(x3, dtype=float)
        )
        shape = x1.shape
        if self.null or not self.products:
            value = np.zeros(shape, dtype=complex)
            return value[()] if value.ndim == 0 else value
        coordinates = np.stack([x1.ravel(), x2.ravel(), x3.ravel()], axis=1)
        shifted = coordinates - coordinates.min(axis=1, keepdims=True)
        value = (self._integrated(shifted) + self._contact(shifted)).reshape(shape)
        return value[()] if value.ndim == 0 else value

    def psi3(self, x1, x2, x3):
        t0 = self.params.t0
        m = self.params.num_atoms
        pairs = self.phi2(x1, x2) + self.phi2(x1, x3) + self.phi2(x2, x3)
        return t0 ** (3 * m) + t0**m * pairs + self.phi3(x1, x2, x3)


@functools.lru_cache(maxsize=16)
def field_for(params, include_loops="auto", segment_nodes=SEGMENT_NODES, tail_nodes=TAIL_NODES):
    return Wavefield(params, include_loops, segment_nodes, tail_nodes)


def phi2(x1, x2, params):
    return field_for(params).phi2(x1, x2)


def phi3(x1, x2, x3, params):
    return field_for(params).phi3(x1, x2, x3)


def psi2(x1, x2, params):
    return field_for(params).psi2(x1, x2)


def psi3(x1, x2, x3, params):
    return field_for(params).psi3(x1, x2, x3)
