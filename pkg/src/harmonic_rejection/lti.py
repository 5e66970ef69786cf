"""Polynomials, transfer functions and state-space realizations.

Coefficients are stored in ascending-degree order everywhere: ``coeffs[i]``
multiplies ``p**i``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

TRIM_RTOL = 1e-12


def _trim(coeffs: np.ndarray) -> np.ndarray:
    c = np.atleast_1d(np.asarray(coeffs, dtype=float))
    if c.size == 0:
        return np.zeros(1)
    scale = np.max(np.abs(c))
    if scale == 0.0:
        return np.zeros(1)
    nz = np.nonzero(np.abs(c) >= TRIM_RTOL * scale)[0]
    return c[: nz[-1] + 1].copy()


@dataclass(frozen=True)
class Polynomial:
    """Real polynomial in the differentiation operator ``p``."""

    coeffs: np.ndarray

    def __init__(self, coeffs: Sequence[float] | np.ndarray):
        c = _trim(coeffs)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return self.degree == 0 and self.coeffs[0] == 0.0

    @property
    def leading(self) -> float:
        return float(self.coeffs[-1])

    def __call__(self, s):
        return np.polynomial.polynomial.polyval(s, self.coeffs)

    def __mul__(self, other: Polynomial | float) -> Polynomial:
        if isinstance(other, Polynomial):
            return poly_mul(self, other)
        return Polynomial(self.coeffs * float(other))

    __rmul__ = __mul__

    def __add__(self, other: Polynomial) -> Polynomial:
        return Polynomial(np.polynomial.polynomial.polyadd(self.coeffs, other.coeffs))

    def __pow__(self, n: int) -> Polynomial:
        out = Polynomial([1.0])
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, Polynomial):
            return NotImplemented
        return np.array_equal(self.coeffs, other.coeffs)

    def __hash__(self) -> int:
        return hash(self.coeffs.tobytes())

    def roots(self) -> np.ndarray:
        """Roots via eigenvalues of the companion matrix."""
        if self.degree < 1:
            return np.zeros(0, dtype=complex)
        return np.linalg.eigvals(companion(self)).astype(complex)

    def monic(self) -> Polynomial:
        return Polynomial(self.coeffs / self.leading)

    def __repr__(self) -> str:
        return f"Polynomial({self.coeffs.tolist()})"


def companion(p: Polynomial) -> np.ndarray:
    """Companion matrix in controllable canonical (last-row) form."""
    n = p.degree
    c = p.coeffs / p.leading
    A = np.zeros((n, n))
    A[:-1, 1:] = np.eye(n - 1)
    A[-1, :] = -c[:-1]
    return A


def poly_mul(p: Polynomial, q: Polynomial) -> Polynomial:
    return Polynomial(np.convolve(p.coeffs, q.coeffs))


def is_hurwitz(p: Polynomial) -> bool:
    """True iff every root of ``p`` has a strictly negative real part."""
    if p.degree < 1:
        raise ValueError("stability is undefined for a constant polynomial")
    return bool(np.all(p.roots().real < 0.0))


def routh_hurwitz(p: Polynomial) -> bool:
    """Routh table test; a zero or non-finite pivot counts as not Hurwitz."""
    if p.degree < 1:
        raise ValueError("stability is undefined for a constant polynomial")
    c = p.coeffs[::-1] / p.leading  # descending, monic
    n = len(c)
    width = (n + 1) // 2
    row0 = np.zeros(width)
    row1 = np.zeros(width)
    row0[: len(c[0::2])] = c[0::2]
    row1[: len(c[1::2])] = c[1::2]
    first = [row0[0]]
    prev, cur = row0, row1
    for _ in range(n - 1):
        # a vanishing or overflowing pivot means a root on or near the axis
        if cur[0] == 0.0 or not np.all(np.isfinite(cur)):
            return False
        first.append(cur[0])
        nxt = np.zeros(width)
        with np.errstate(over="ignore", invalid="ignore"):
            nxt[:-1] = (cur[0] * prev[1:] - prev[0] * cur[1:]) / cur[0]
        prev, cur = cur, nxt
    return all(v > 0.0 for v in first)


def closed_loop_char_poly(
    a: Polynomial, b: Polynomial, k: float, alpha: Polynomial, omega: float
) -> Polynomial:
    """gamma(p) = a(p) p (p^2 + omega^2) + k b(p) alpha(p) (p + 1)^3."""
    im = Polynomial([0.0, omega**2, 0.0, 1.0])
    lead = Polynomial([1.0, 1.0]) ** 3
    return a * im + k * (b * alpha * lead)


def passive_loop_denominator(
    a: Polynomial, b: Polynomial, k: float, alpha: Polynomial, omega: float
) -> Polynomial:
    """Denominator a(p)(p^2 + omega^2) + k alpha(p) b(p) (p + 1)^2 of H(p)."""
    im = Polynomial([omega**2, 0.0, 1.0])
    lead = Polynomial([1.0, 1.0]) ** 2
    return a * im + k * (alpha * b * lead)


@dataclass(frozen=True)
class TransferFunction:
    num: Polynomial
    den: Polynomial

    def __post_init__(self):
        if self.den.is_zero:
            raise ValueError("denominator is the zero polynomial")
        if not self.num.is_zero and self.num.degree > self.den.degree:
            raise ValueError(
                f"improper transfer function: deg(num)={self.num.degree} > "
                f"deg(den)={self.den.degree}"
            )

    @property
    def relative_degree(self) -> int:
        return self.den.degree - self.num.degree

    def __call__(self, s):
        return self.num(s) / self.den(s)

    def freqresp(self, omega) -> np.ndarray:
        return self(1j * np.asarray(omega, dtype=float))

    def __mul__(self, other: TransferFunction) -> TransferFunction:
        return TransferFunction(self.num * other.num, self.den * other.den)


class SprResult(NamedTuple):
    ok: bool
    reason: str

    def __bool__(self) -> bool:
        return self.ok


def default_spr_grid() -> np.ndarray:
    return np.logspace(-3, 4, 400)


def spr_check(h: TransferFunction, freq_grid: Sequence[float] | None = None) -> SprResult:
    """Sampled strict-positive-realness test.

    Only a necessary condition: Re h(jw) > 0 is checked on the grid, not
    between grid points or at infinity.
    """
    grid = default_spr_grid() if freq_grid is None else np.asarray(freq_grid, dtype=float)
    if grid.size == 0 or np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise ValueError("frequency grid must be nonempty, positive and sorted")
    if h.den.degree >= 1 and not is_hurwitz(h.den):
        return SprResult(False, "unstable")
    re = h.freqresp(grid).real
    if np.all(re > 0.0):
        return SprResult(True, "ok")
    return SprResult(False, "nonpositive-real-part")


@dataclass(frozen=True)
class StateSpaceModel:
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: float = 0.0

    def __post_init__(self):
        n = self.A.shape[0]
        if self.A.shape != (n, n) or self.b.shape != (n,) or self.c.shape != (n,):
            raise ValueError("inconsistent state-space dimensions")

    @property
    def order(self) -> int:
        return self.A.shape[0]

    def freqresp(self, omega) -> np.ndarray:
        omega = np.atleast_1d(np.asarray(omega, dtype=float))
        n = self.order
        out = np.empty(omega.shape, dtype=complex)
        for i, w in enumerate(omega):
            if n == 0:
                out[i] = self.d
                continue
            M = 1j * w * np.eye(n) - self.A
            x = np.linalg.solve(M, self.b)
            # companion matrices are badly scaled; one refinement step
            # restores full relative accuracy
            x = x + np.linalg.solve(M, self.b - M @ x)
            out[i] = self.c @ x + self.d
        return out


def tf_to_statespace(tf: TransferFunction) -> StateSpaceModel:
    """Controllable canonical realization of a proper transfer function."""
    den = tf.den.coeffs / tf.den.leading
    num = tf.num.coeffs / tf.den.leading
    n = len(den) - 1
    if len(num) > n + 1:
        raise ValueError("improper transfer function")
    num = np.concatenate([num, np.zeros(n + 1 - len(num))])
    d = float(num[n])
    rem = num[:n] - d * den[:n]
    if n == 0:
        return StateSpaceModel(np.zeros((0, 0)), np.zeros(0), np.zeros(0), d)
    A = companion(Polynomial(den))
    b = np.zeros(n)
    b[-1] = 1.0
    return StateSpaceModel(A, b, rem.copy(), d)
