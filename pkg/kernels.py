"""Exact algebra of single-photon line kernels.

A kernel is a rational function of one momentum p,

    f(p) = delta + sum_{(r, s), k} c[r, s][k - 1] / (r*w - i*s*p)**k

with w = Gamma_tot/2, an integer rate multiple r >= 1 and a side s = +1
(pole in the lower half plane, causal) or s = -1 (anticausal).  With
F(t) = int dp/2pi exp(-i p t) f(p) every pole term maps to

    theta(s*t) * exp(-r*w*|t|) * |t|**(k - 1) / (k - 1)!

and the constant maps to delta * dirac(t).  Products in momentum become
partial fractions, products in time (loop integrals over an internal
momentum) become binomial convolutions, so diagram amplitudes assembled
from kernels transform to position space without any Fourier
quadrature.
"""

import math

import numpy as np
from scipy.special import comb

RATE = 0
SIDE = 1


class Kernel:
    __slots__ = ("width", "delta", "terms")

    def __init__(self, width, delta=0.0, terms=None):
        self.width = float(width)
        self.delta = complex(delta)
        self.terms = {}
        for key, coefficients in (terms or {}).items():
            coefficients = np.asarray(coefficients, dtype=complex)
            if coefficients.size:
                self.terms[(int(key[RATE]), int(key[SIDE]))] = coefficients

    @classmethod
    def pole(cls, width, rate=1, side=1, power=1, coefficient=1.0):
        coefficients = np.zeros(power, dtype=complex)
        coefficients[-1] = coefficient
        return cls(width, 0.0, {(rate, side): coefficients})

    @classmethod
    def constant(cls, width, value=1.0):
        return cls(width, value)

    def copy(self):
        return Kernel(self.width, self.delta, {key: c.copy() for key, c in self.terms.items()})

    @property
    def max_power(self):
        return max((len(c) for c in self.terms.values()), default=0)

    def is_zero(self):
        return self.delta == 0 and all(not np.any(c) for c in self.terms.values())

    # arithmetic

    def _check(self, other):
        if other.width != self.width:
            raise ValueError(f"kernel widths differ: {self.width} != {other.width}")

    def __add__(self, other):
        if not isinstance(other, Kernel):
            return Kernel(self.width, self.delta + other, self.terms)
        self._check(other)
        terms = {key: c.copy() for key, c in self.terms.items()}
        for key, c in other.terms.items():
            terms[key] = _padded_sum(terms.get(key), c)
        return Kernel(self.width, self.delta + other.delta, terms)

    __radd__ = __add__

    def __neg__(self):
        return self.scaled(-1.0)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scaled(self, factor):
        return Kernel(
            self.width,
            self.delta * factor,
            {key: c * factor for key, c in self.terms.items()},
        )

    def __mul__(self, other):
        if not isinstance(other, Kernel):
            return self.scaled(other)
        self._check(other)
        product = Kernel(self.width, self.delta * other.delta)
        if other.delta != 0:
            product = product + self.poles().scaled(other.delta)
        if self.delta != 0:
            product = product + other.poles().scaled(self.delta)
        for key_a, ca in self.terms.items():
            for key_b, cb in other.terms.items():
                partial = _pole_product(key_a, ca, key_b, cb, self.width)
                product = product + Kernel(self.width, 0.0, partial)
        return product

    __rmul__ = __mul__

    def power(self, exponent):
        result = Kernel.constant(self.width, 1.0)
        base = self
        while exponent:
            if exponent & 1:
                result = result * base
            exponent >>= 1
            if exponent:
                base = base * base
        return result

    def poles(self):
        return Kernel(self.width, 0.0, self.terms)

    # transformations

    def reflected(self):
        """Kernel of f(-p); causal and anticausal parts swap."""
        return Kernel(
            self.width,
            self.delta,
            {(key[RATE], -key[SIDE]): c.copy() for key, c in self.terms.items()},
        )

    def pointwise(self, other):
        """Kernel whose time function is F(t) * G(t).

        In momentum this is the loop integral int dl/2pi f(l) g(p - l).
        """
        self._check(other)
        if self.delta != 0 or other.delta != 0:
            raise ValueError("pointwise product of a kernel carrying a delta term")
        product = Kernel(self.width)
        for (ra, sa), ca in self.terms.items():
            for (rb, sb), cb in other.terms.items():
                if sa != sb:
                    continue
                product = product + Kernel(
                    self.width, 0.0, {(ra + rb, sa): _binomial_convolve(ca, cb)}
                )
        return product

    def multiply_by_ip(self):
        """Kernel of i*p*f(p)."""
        if self.delta != 0:
            raise ValueError("i*p times a constant is not a kernel")
        delta = 0.0j
        terms = {}
        for (rate, side), c in self.terms.items():
            shifted = side * rate * self.width * c
            shifted[:-1] -= side * c[1:]
            delta -= side * c[0]
            terms[(rate, side)] = shifted
        return Kernel(self.width, delta, terms)

    # evaluation

    def momentum(self, p):
        p = np.asarray(p, dtype=float)
        value = np.full(p.shape, self.delta, dtype=complex)
        for (rate, side), c in self.terms.items():
            inverse = 1.0 / (rate * self.width - 1j * side * p)
            running = np.ones_like(inverse)
            for coefficient in c:
                running = running * inverse
                value = value + coefficient * running
        return value[()] if value.ndim == 0 else value

    def __call__(self, t, tie=1):
        """Time function without its delta part.

        At t == 0 the side selected by ``tie`` supplies the value.
        """
        t = np.asarray(t, dtype=float)
        value = np.zeros(t.shape, dtype=complex)
        for (rate, side), c in self.terms.items():
            value = value + _side_mask(t, side, tie) * _pole_series(c, np.abs(t), rate * self.width)
        return value[()] if value.ndim == 0 else value

    def __repr__(self):
        keys = ", ".join(f"{key}:{len(c)}" for key, c in sorted(self.terms.items()))
        return f"Kernel(width={self.width}, delta={self.delta}, terms={{{keys}}})"


def _padded_sum(a, b):
    if a is None:
        return b.copy()
    if len(a) < len(b):
        a, b = b, a
    out = a.copy()
    out[: len(b)] += b
    return out


def _pole_product(key_a, ca, key_b, cb, width):
    """Partial fractions of u**-a * v**-c summed with coefficients ca, cb."""
    if key_a == key_b:
        return {key_a: np.concatenate([[0.0], np.convolve(ca, cb)])}
    (ra, sa), (rb, sb) = key_a, key_b
    if sa == sb:
        gap = (ra - rb) * width
        up, down = 1.0 / gap, -1.0 / gap
    else:
        total = (ra + rb) * width
        up = down = 1.0 / total
    grid = np.outer(ca, cb)
    out_a = np.zeros(len(ca), dtype=complex)
    out_b = np.zeros(len(cb), dtype=complex)
    for _ in range(len(ca) + len(cb) - 1):
        following = np.zeros_like(grid)
        out_b += up * grid[0, :]
        out_a += down * grid[:, 0]
        following[:-1, :] += up * grid[1:, :]
        following[:, :-1] += down * grid[:, 1:]
        grid = following
    return {key_a: out_a, key_b: out_b}


def _binomial_convolve(ca, cb):
    # |t|**e1/e1! * |t|**e2/e2! = C(e1 + e2, e1) * |t|**(e1 + e2)/(e1 + e2)!
    out = np.zeros(len(ca) + len(cb) - 1, dtype=complex)
    second = np.arange(len(cb))
    for first, coefficient in enumerate(ca):
        out[first : first + len(cb)] += coefficient * cb * comb(first + second, first)
    return out


def _side_mask(t, side, tie):
    tie = np.broadcast_to(np.asarray(tie), t.shape)
    return (side * t > 0) | ((t == 0) & (tie == side))


def _pole_series(c, magnitude, decay):
    scaled = np.ones_like(magnitude)
    total = c[0] * scaled
    for exponent in range(1, len(c)):
        scaled = scaled * magnitude / exponent
        total = total + c[exponent] * scaled
    return total * np.exp(-decay * magnitude)


class KernelBank:
    """Batched time-domain evaluation of many kernels at shared times."""

    def __init__(self, kernels):
        self.kernels = list(kernels)
        self.index = {id(kernel): i for i, kernel in enumerate(self.kernels)}
        width = {kernel.width for kernel in self.kernels}
        if len(width) > 1:
            raise ValueError("kernels in a bank must share one width")
        self.width = width.pop() if width else 1.0
        self.delta = np.array([kernel.delta for kernel in self.kernels], dtype=complex)
        keys = sorted({key for kernel in self.kernels for key in kernel.terms})
        self.blocks = {}
        for key in keys:
            length = max(len(kernel.terms.get(key, ())) for kernel in self.kernels)
            matrix = np.zeros((len(self.kernels), length), dtype=complex)
            for row, kernel in enumerate(self.kernels):
                c = kernel.terms.get(key)
                if c is not None:
                    matrix[row, : len(c)] = c
            self.blocks[key] = matrix

    def __len__(self):
        return len(self.kernels)

    def position(self, kernel):
        return self.index[id(kernel)]

    def __call__(self, t, tie=1):
        """Values of every kernel at times ``t``; shape (len(bank), *t.shape)."""
        t = np.asarray(t, dtype=float)
        flat = t.ravel()
        magnitude = np.abs(flat)
        tie = np.broadcast_to(np.asarray(tie), t.shape).ravel()
        values = np.zeros((len(self.kernels), flat.size), dtype=complex)
        for (rate, side), matrix in self.blocks.items():
            mask = _side_mask(flat, side, tie)
            if not mask.any():
                continue
            basis = np.empty((matrix.shape[1], flat.size))
            basis[0] = np.exp(-rate * self.width * magnitude) * mask
            for exponent in range(1, matrix.shape[1]):
                basis[exponent] = basis[exponent - 1] * magnitude / exponent
            values += matrix @ basis
        return values.reshape((len(self.kernels),) + t.shape)


def causal(width, power=1):
    """y(p)**power with y(p) = 1/(w - i p)."""
    return Kernel.pole(width, 1, 1, power)


def anticausal(width, power=1):
    """z(p)**power with z(p) = 1/(w + i p)."""
    return Kernel.pole(width, 1, -1, power)


def transmission_power(params, exponent, reflected=False):
    """Kernel of t_p**exponent (or t_{-p}**exponent), t_p = 1 - beta*Gamma_tot*y(p)."""
    coupling = params.gamma
    powers = np.arange(1, exponent + 1)
    coefficients = np.array(
        [math.comb(exponent, int(i)) for i in powers], dtype=complex
    ) * (-coupling) ** powers
    side = -1 if reflected else 1
    return Kernel(params.half_width, 1.0, {(1, side): coefficients})
