"""Standard normal primitives, the three Gaussian integral lemmas, and quadrature.

Every closed form used by the accuracy and strategy modules reduces to integrals
of the type  int N(alpha x) g(x) dx  or  int x N(alpha x) g(x) dx  over a
half-line.  The closed forms live here next to an adaptive Gauss-Kronrod
integrator so each can be checked against direct integration.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

SQRT_2PI = math.sqrt(2.0 * math.pi)
_INV_SQRT2 = 1.0 / math.sqrt(2.0)


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""


@dataclass(frozen=True)
class QuadratureConfig:
    abs_tol: float = 1e-13
    max_subdivisions: int = 2000
    truncation_width: float = 12.0

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise ValueError("abs_tol must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be a positive integer")
        if self.truncation_width < 8:
            raise ValueError("truncation_width must be at least 8")


DEFAULT_QUADRATURE = QuadratureConfig()


def normal_pdf(x):
    """Standard Gaussian density g."""
    out = np.exp(-0.5 * np.square(x)) / SQRT_2PI
    return float(out) if np.ndim(out) == 0 else out


def normal_cdf(x):
    """Standard Gaussian distribution function N, via erfc to keep tails accurate."""
    out = 0.5 * special.erfc(-np.asarray(x, dtype=float) * _INV_SQRT2)
    return float(out) if np.ndim(out) == 0 else out


# Gauss-Kronrod 7/15 abscissae on [-1, 1] (non-negative half) and weights.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
# Gauss weights attached to _XGK[1], _XGK[3], _XGK[5], _XGK[7].
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_KRONROD_W = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GAUSS_W = np.zeros(15)
_GAUSS_W[[1, 3, 5]] = _WG[:3]
_GAUSS_W[[13, 11, 9]] = _WG[:3]
_GAUSS_W[7] = _WG[3]


def _gk15(f, lo, hi):
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    y = np.asarray(f(mid + half * _NODES), dtype=float)
    kronrod = half * math.fsum(_KRONROD_W * y)
    gauss = half * math.fsum(_GAUSS_W * y)
    return kronrod, abs(kronrod - gauss)


def integrate(f, lo: float, hi: float, cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """Adaptive Gauss-Kronrod (7/15) integral of a vectorised ``f`` over [lo, hi].

    Bisects the interval with the largest error estimate until the summed
    estimate drops below ``cfg.abs_tol``.
    """
    if hi == lo:
        return 0.0
    sign = 1.0
    if hi < lo:
        lo, hi, sign = hi, lo, -1.0
    value, err = _gk15(f, lo, hi)
    heap = [(-err, lo, hi, value)]
    total_err = err
    n_sub = 1
    while total_err > cfg.abs_tol:
        if n_sub >= cfg.max_subdivisions:
            raise QuadratureError(
                f"no convergence after {n_sub} subdivisions (error estimate {total_err:.3g})"
            )
        neg_err, a, b, _ = heapq.heappop(heap)
        m = 0.5 * (a + b)
        left = _gk15(f, a, m)
        right = _gk15(f, m, b)
        heapq.heappush(heap, (-left[1], a, m, left[0]))
        heapq.heappush(heap, (-right[1], m, b, right[0]))
        total_err = math.fsum(-e for e, *_ in heap)
        n_sub += 1
    return sign * math.fsum(item[3] for item in heap)


def integrate_to_infinity(f, lo: float, cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """Integral of a Gaussian-damped ``f`` over [lo, inf), truncated ``truncation_width`` out."""
    hi = max(lo, 0.0) + cfg.truncation_width
    return integrate(f, lo, hi, cfg)


def lemma_a1(alpha: float) -> float:
    """int_0^inf N(alpha x) g(x) dx = 1/4 + arctan(alpha) / (2 pi)."""
    return 0.25 + math.atan(alpha) / (2.0 * math.pi)


def lemma_a2_taylor(alpha: float, a: float) -> float:
    """Degree-5 expansion of int_a^inf N(alpha x) g(x) dx around a = 0."""
    return (
        lemma_a1(alpha)
        - a / (2.0 * SQRT_2PI)
        - alpha * a**2 / (4.0 * math.pi)
        + a**3 / (12.0 * SQRT_2PI)
        + (alpha**3 + 3.0 * alpha) * a**4 / (48.0 * math.pi)
        - a**5 / (80.0 * SQRT_2PI)
    )


def lemma_a2_exact(alpha: float, a: float, cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """int_a^inf N(alpha x) g(x) dx by adaptive quadrature."""
    return integrate_to_infinity(lambda x: normal_cdf(alpha * x) * normal_pdf(x), a, cfg)


def lemma_a3(alpha: float, a: float) -> float:
    """int_a^inf u N(alpha u) g(u) du in closed form."""
    s = math.sqrt(1.0 + alpha * alpha)
    return normal_cdf(alpha * a) * normal_pdf(a) + alpha / (SQRT_2PI * s) * normal_cdf(-a * s)


def lemma_a3_exact(alpha: float, a: float, cfg: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """Quadrature counterpart of :func:`lemma_a3`."""
    return integrate_to_infinity(lambda u: u * normal_cdf(alpha * u) * normal_pdf(u), a, cfg)
