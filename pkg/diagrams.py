"""Three-photon connected transport diagrams through an M-atom chain.

Inputs are resonant; every amplitude is a density multiplying
2*pi*delta(p1 + p2 + p3).  Each diagram is available in two forms:

* momentum amplitudes (``t3v_amplitude``, ``t4v_amplitude``,
  ``loop_amplitudes``) with closed-form site sums, and
* factorized line products (``*_lines``): sums of products of three
  single-photon kernels, one per outgoing photon, which ``wavefield``
  transforms exactly to position space.

Shorthands used below, with w = Gamma_tot/2:
y(p) = 1/(w - i p), z(p) = 1/(w + i p), t_p = 1 - beta*Gamma_tot*y(p).
"""

import itertools
import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import integrate

from errors import QuadratureError
from kernels import Kernel, anticausal, causal, transmission_power
from scattering import connected_s2, connected_s3, transmission

DEGENERACY = 1e-8
# below this relative gap the closed double sum loses too many digits
DOUBLE_SUM_DEGENERACY = 1e-4
LOOP_THRESHOLD = 0.03
LOOP_RTOL = 1e-8

ORDERED_PAIRS = list(itertools.permutations(range(3), 2))
PERMUTATIONS = list(itertools.permutations(range(3)))


class DiagramKind(Enum):
    THREE_VERTEX = "three_vertex"
    FOUR_VERTEX = "four_vertex"
    LOOP_THREE_TWO = "loop_three_two"
    LOOP_TWO_TWO_TWO = "loop_two_two_two"


# (power of beta, number of interaction sites)
_ORDER = {
    DiagramKind.THREE_VERTEX: (3, 1),
    DiagramKind.FOUR_VERTEX: (4, 2),
    DiagramKind.LOOP_THREE_TWO: (5, 2),
    DiagramKind.LOOP_TWO_TWO_TWO: (6, 3),
}


@dataclass(frozen=True)
class DiagramSpec:
    kind: DiagramKind
    out_permutation: tuple = (0, 1, 2)
    enabled: bool = True

    @property
    def beta_power(self):
        return _ORDER[self.kind][0]

    @property
    def interactions(self):
        return _ORDER[self.kind][1]

    def order_estimate(self, params):
        """C(M, n) * beta**power, the size estimate of the diagram family."""
        return math.comb(params.num_atoms, self.interactions) * params.beta**self.beta_power


@dataclass(frozen=True)
class GeometricSumResult:
    value: complex
    degenerate: bool = False


def geometric_sum(a, b, m, tolerance=DEGENERACY):
    """sum_{j=0}^{m-1} a**(m-1-j) * b**j in closed form."""
    if m <= 0:
        return GeometricSumResult(0.0j, False)
    a, b = complex(a), complex(b)
    if abs(a - b) <= tolerance * max(abs(a), abs(b)):
        return GeometricSumResult(m * a ** (m - 1), True)
    return GeometricSumResult((a**m - b**m) / (a - b), False)


def complete_homogeneous(variables, degree):
    """Sum of all monomials of total ``degree`` in ``variables`` (array friendly)."""
    if degree < 0:
        return 0.0 * variables[0]
    variables = [np.asarray(v, dtype=complex) for v in variables]
    shape = np.broadcast(*variables).shape
    levels = [np.ones(shape, dtype=complex)] + [np.zeros(shape, dtype=complex)] * degree
    for v in variables:
        for n in range(1, degree + 1):
            levels[n] = levels[n] + v * levels[n - 1]
    value = levels[degree]
    return value[()] if value.ndim == 0 else value


def double_geometric_sum(a, b, c, d, m, tolerance=DOUBLE_SUM_DEGENERACY):
    """sum_{j=0}^{m-2} sum_{m'=0}^{m-j-2} a**j b**m' c**(m-j-m'-2) d**(m-j-1)."""
    if m < 2:
        return 0.0j
    a, b, c, d = complex(a), complex(b), complex(c), complex(d)
    if abs(c - b) <= tolerance * max(abs(c), abs(b)):
        return d * complete_homogeneous([a, b * d, c * d], m - 2)
    upper = geometric_sum(d * c, a, m).value
    lower = geometric_sum(d * b, a, m).value
    return (upper - lower) / (c - b)


def loops_enabled(params, flag="auto"):
    if flag in (True, "on"):
        return True
    if flag in (False, "off"):
        return False
    return params.beta >= LOOP_THRESHOLD


# momentum amplitudes


def pair_amplitude(p, params):
    """Two-photon connected transport amplitude at outgoing momenta (p, -p)."""
    m = params.num_atoms
    if m == 0:
        return 0.0j
    t0 = params.t0
    ratio = transmission(p, params) * transmission(-p, params)
    sites = geometric_sum(ratio, t0**2, m).value
    return params.beta**2 * sites * connected_s2(p, -p, 0.0, 0.0, params).value


def t3v_amplitude(p1, p2, p3, params):
    m = params.num_atoms
    if m == 0:
        return 0.0j
    dressing = transmission(p1, params) * transmission(p2, params) * transmission(p3, params)
    sites = geometric_sum(dressing, params.t0**3, m).value
    vertex = connected_s3(p1, p2, p3, 0.0, 0.0, 0.0, params).value
    return params.beta**3 * sites * vertex


def t4v_amplitude(p1, p2, p3, params, perm=(0, 1, 2)):
    """One ordering of two successive two-photon interactions.

    ``perm`` picks which outgoing photon leaves the first interaction
    (perm[0]); the other two leave the second one.
    """
    m = params.num_atoms
    if m <= 1:
        return 0.0j
    momenta = (p1, p2, p3)
    first, second, third = (momenta[i] for i in perm)
    middle = -first
    t0 = params.t0
    sites = double_geometric_sum(
        t0**3,
        transmission(middle, params) * t0,
        transmission(second, params) * transmission(third, params),
        transmission(first, params),
        m,
    )
    early = connected_s2(first, middle, 0.0, 0.0, params).value
    late = connected_s2(second, third, middle, 0.0, params).value
    return params.beta**4 * t0 * sites * early * late


def t4v_total(p1, p2, p3, params):
    return sum(t4v_amplitude(p1, p2, p3, params, perm) for perm in PERMUTATIONS)


def tree_amplitude(p1, p2, p3, params):
    return t3v_amplitude(p1, p2, p3, params) + t4v_total(p1, p2, p3, params)


def _line_integral(integrand, params, rtol, label):
    w = params.half_width

    def mapped(theta, part):
        loop = w * math.tan(theta)
        value = integrand(loop) * w / math.cos(theta) ** 2 / (2.0 * math.pi)
        return value.real if part == 0 else value.imag

    parts = []
    for part in (0, 1):
        result = integrate.quad(
            mapped,
            -0.5 * math.pi,
            0.5 * math.pi,
            args=(part,),
            epsabs=1e-13,
            epsrel=rtol,
            limit=400,
            full_output=1,
        )
        if len(result) > 3:
            raise QuadratureError(
                f"{label} loop integral did not converge: {result[3]}",
                estimate=result[0],
                bound=result[1],
            )
        parts.append(result[0])
    return complex(parts[0], parts[1])


def loop_three_two(p1, p2, p3, params, rtol=LOOP_RTOL):
    """Three-photon interaction followed by a two-photon interaction."""
    m = params.num_atoms
    if m <= 1:
        return 0.0j
    momenta = (p1, p2, p3)
    t0 = params.t0
    total = 0.0j
    for spectator in range(3):
        a, b = (momenta[i] for i in range(3) if i != spectator)
        ps = momenta[spectator]
        pair = transmission(a, params) * transmission(b, params)
        carried = transmission(ps, params)

        def integrand(loop, ps=ps, a=a, b=b, pair=pair, carried=carried):
            partner = -ps - loop
            inner = transmission(loop, params) * transmission(partner, params)
            sites = double_geometric_sum(t0**3, inner, pair, carried, m)
            three = connected_s3(ps, loop, partner, 0.0, 0.0, 0.0, params).value
            two = connected_s2(a, b, loop, partner, params).value
            return sites * three * two

        total += _line_integral(integrand, params, rtol, "three-two")
    return params.beta**5 * total


def loop_two_two_two(p1, p2, p3, params, rtol=LOOP_RTOL):
    """Three successive two-photon interactions sharing an internal momentum."""
    m = params.num_atoms
    if m <= 2:
        return 0.0j
    momenta = (p1, p2, p3)
    t0 = params.t0
    total = 0.0j
    for late in range(3):
        px, py = (momenta[i] for i in range(3) if i != late)
        pz = momenta[late]
        tz = transmission(pz, params)
        outer = transmission(px, params) * transmission(py, params) * tz

        def integrand(loop, px=px, py=py, pz=pz, tz=tz, outer=outer):
            forward = transmission(loop, params)
            backward = transmission(-loop, params)
            shifted = transmission(loop - pz, params)
            sites = complete_homogeneous(
                [t0**3, backward * forward * t0, backward * shifted * tz, outer], m - 3
            )
            first = connected_s2(-loop, loop, 0.0, 0.0, params).value
            second = connected_s2(loop - pz, pz, loop, 0.0, params).value
            third = connected_s2(px, py, -loop, loop - pz, params).value
            return t0 * backward * tz * sites * first * second * third

        total += 2.0 * _line_integral(integrand, params, rtol, "two-two-two")
    return params.beta**6 * total


def loop_amplitudes(p1, p2, p3, params, rtol=LOOP_RTOL):
    value = loop_three_two(p1, p2, p3, params, rtol) + loop_two_two_two(p1, p2, p3, params, rtol)
    logging.debug(f"Loop amplitude at ({p1}, {p2}, {p3}): {value}")
    return value


# factorized line products


@dataclass(frozen=True)
class LineProduct:
    """weight * lines[0](p1) * lines[1](p2) * lines[2](p3)."""

    weight: complex
    lines: tuple

    def momentum(self, p1, p2, p3):
        value = self.weight
        for line, p in zip(self.lines, (p1, p2, p3)):
            value = value * line.momentum(p)
        return value


def _assign(lines_by_role, roles):
    ordered = [None, None, None]
    for kernel, coordinate in zip(lines_by_role, roles):
        ordered[coordinate] = kernel
    return tuple(ordered)


class _Powers:
    """Cached kernels of t_p**n and t_{-p}**n."""

    def __init__(self, params):
        self.params = params
        self.forward = {}
        self.backward = {}

    def t(self, n):
        if n not in self.forward:
            self.forward[n] = transmission_power(self.params, n)
        return self.forward[n]

    def tbar(self, n):
        if n not in self.backward:
            self.backward[n] = transmission_power(self.params, n, reflected=True)
        return self.backward[n]


def pair_kernel(params):
    """Kernel of the two-photon amplitude in the relative momentum."""
    w = params.half_width
    m = params.num_atoms
    if m == 0:
        return Kernel(w)
    powers = _Powers(params)
    both = powers.t(1) * powers.tbar(1)
    t0 = params.t0
    sites = Kernel.constant(w, 1.0)
    for n in range(1, m):
        sites = both * sites + t0 ** (2 * n)
    vertex = (causal(w) + anticausal(w)).scaled(-4.0)
    return (vertex * sites).scaled(params.beta**2)


def three_vertex_lines(params):
    w = params.half_width
    m = params.num_atoms
    powers = _Powers(params)
    y, z = causal(w), anticausal(w)
    products = []
    for j in range(m):
        n = m - 1 - j
        plain = powers.t(n)
        early, late = z * plain, y * plain
        weight = -16.0 * params.beta**3 * params.t0 ** (3 * j)
        for a, c in ORDERED_PAIRS:
            b = 3 - a - c
            products.append(LineProduct(weight, _assign((early, late, plain), (a, c, b))))
    return products


def four_vertex_lines(params):
    w = params.half_width
    m = params.num_atoms
    if m <= 1:
        return []
    powers = _Powers(params)
    y, z = causal(w), anticausal(w)
    t0 = params.t0
    vertices = (1.0 + z.scaled(w)) * (y + z)
    both = powers.t(1) * powers.tbar(1)
    # both orderings of the two photons leaving the second interaction
    weight = 2.0 * 16.0 * w * params.beta**4
    products = []
    sites = Kernel.constant(w, 1.0)
    for n in range(1, m):
        if n > 1:
            sites = both * sites + t0 ** (2 * (n - 1))
        k = m - 1 - n
        leading = (vertices * sites * powers.t(k + 1)).scaled(t0**n)
        trailing = y * powers.t(k)
        for first in range(3):
            second, third = (i for i in range(3) if i != first)
            products.append(
                LineProduct(weight, _assign((leading, trailing, trailing), (first, second, third)))
            )
    return products


def loop_three_two_lines(params):
    w = params.half_width
    m = params.num_atoms
    if m <= 1:
        return []
    powers = _Powers(params)
    y, z = causal(w), anticausal(w)
    y2, zy = causal(w, 2), z * y
    t0 = params.t0
    dressed = []
    for n in range(m - 1):
        inner = powers.t(n)
        first = y2 * inner
        second = y * inner
        mixed = zy * inner
        x1 = first.pointwise(second).reflected()
        x2 = mixed.pointwise(second).reflected()
        x3 = mixed.pointwise(first).reflected()
        vertex = (
            (1.0 + z.scaled(w)) * x1
            + (y.scaled(3.0 * w) - 1.0) * x2
            + x3.scaled(2.0 * w)
            + x3.multiply_by_ip()
        ).scaled(2.0)
        dressed.append(vertex * powers.t(n))
    weight = 16.0 * params.gamma_tot**2 * params.beta**5
    products = []
    for k in range(m - 1):
        summed = Kernel(w)
        for n in range(m - 1 - k):
            summed = summed + dressed[n].scaled(t0 ** (3 * (m - 2 - k - n)))
        spectator = summed * powers.t(k + 1)
        trailing = y * powers.t(k)
        for s in range(3):
            a, b = (i for i in range(3) if i != s)
            products.append(LineProduct(weight, _assign((spectator, trailing, trailing), (s, a, b))))
    return products


def loop_two_two_two_lines(params):
    w = params.half_width
    m = params.num_atoms
    if m <= 2:
        return []
    powers = _Powers(params)
    y, z = causal(w), anticausal(w)
    t0 = params.t0
    base = (y + z) * (1.0 + y.scaled(w)) * z
    depth = m - 3
    shared = {}
    for mid in range(depth + 1):
        for n in range(depth + 1 - mid):
            early = base * powers.tbar(mid + 1 + n) * powers.t(mid)
            late = (causal(w, 2) * powers.t(n)).reflected()
            shared[mid, n] = powers.t(n) * early.pointwise(late)
    closing = y.scaled(3.0 * w) - 1.0
    # two orderings of the photons leaving the last interaction
    weight = 2.0 * (-4.0) * params.gamma_tot**4 * params.beta**6 / w
    products = []
    for k in range(depth + 1):
        summed = Kernel(w)
        for (mid, n), kernel in shared.items():
            j = depth - k - mid - n
            if j < 0:
                continue
            summed = summed + kernel.scaled(t0 ** (3 * j + mid + 1))
        late_line = closing * powers.t(k + 1) * summed
        trailing = y * powers.t(k)
        for z_role in range(3):
            x_role, y_role = (i for i in range(3) if i != z_role)
            products.append(
                LineProduct(weight, _assign((late_line, trailing, trailing), (z_role, x_role, y_role)))
            )
    return products


def connected_lines(params, include_loops=False):
    """All factorized three-photon connected diagrams up to the requested order."""
    products = three_vertex_lines(params) + four_vertex_lines(params)
    if include_loops:
        products += loop_three_two_lines(params) + loop_two_two_two_lines(params)
    return products


def evaluate_lines(products, p1, p2, p3):
    return sum((product.momentum(p1, p2, p3) for product in products), 0.0j)
