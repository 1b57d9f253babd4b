"""Standard normal distribution functions used for threshold calibration."""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .errors import DegenerateMarginalError, NumericalError

_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)

# Acklam's rational approximation, relative error below 1.2e-9
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)
_P_LOW = 0.02425


def norm_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / _SQRT2)


def norm_pdf(x: float) -> float:
    return math.exp(-0.5 * x * x) / _SQRT2PI


def _tail(p: float) -> float:
    q = math.sqrt(-2.0 * math.log(p))
    num = ((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]
    den = (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
    return num / den


def _acklam(p: float) -> float:
    if p < _P_LOW:
        return _tail(p)
    if p > 1.0 - _P_LOW:
        return -_tail(1.0 - p)
    q = p - 0.5
    r = q * q
    num = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
    den = ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
    return num / den


def norm_ppf(p: float) -> float:
    """Inverse standard normal CDF: rational approximation plus one Halley step."""
    if not 0.0 < p < 1.0:
        raise DegenerateMarginalError(f"quantile of p = {p!r} is infinite")
    if p == 0.5:
        return 0.0
    if p > 0.5:
        # 1 - p is exact here; refining in the lower tail avoids cancellation
        return -norm_ppf(1.0 - p)
    x = _acklam(p)
    e = norm_cdf(x) - p
    u = e * _SQRT2PI * math.exp(0.5 * x * x)
    return x - u / (1.0 + 0.5 * x * u)


@lru_cache(maxsize=None)
def _gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(order)


def _integrand(theta: np.ndarray, h: float, k: float) -> np.ndarray:
    s = np.sin(theta)
    c2 = np.cos(theta) ** 2
    return np.exp(-(h * h + k * k - 2.0 * h * k * s) / (2.0 * c2))


def _gl(a: float, b: float, h: float, k: float, order: int) -> float:
    x, w = _gauss_legendre(order)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return half * float(w @ _integrand(mid + half * x, h, k))


def bvn_cdf(h: float, k: float, rho: float, tol: float = 1e-10, max_depth: int = 40) -> float:
    """``P(X < h, Y < k)`` for standard normals with correlation ``rho``.

    Integrates the single-angle representation
    ``Phi(h) Phi(k) + 1/(2 pi) * int_0^{asin rho} exp(-(h^2 + k^2 - 2hk sin t) / (2 cos^2 t)) dt``
    by adaptive Gauss-Legendre (10 vs 20 nodes per panel). The |rho| = 1
    endpoints use their closed forms.
    """
    if not -1.0 <= rho <= 1.0:
        raise ValueError(f"rho = {rho!r} outside [-1, 1]")
    ph, pk = norm_cdf(h), norm_cdf(k)
    if rho == 1.0:
        return min(ph, pk)
    if rho == -1.0:
        return max(ph + pk - 1.0, 0.0)
    if rho == 0.0 or math.isinf(h) or math.isinf(k):
        return ph * pk

    upper = math.asin(rho)
    stack = [(0.0, upper, 0)] if upper > 0 else [(upper, 0.0, 0)]
    sign = 1.0 if upper > 0 else -1.0
    total = 0.0
    panels = 0
    while stack:
        a, b, depth = stack.pop()
        coarse = _gl(a, b, h, k, 10)
        fine = _gl(a, b, h, k, 20)
        panels += 1
        # tolerance shared in proportion to panel width
        local = tol * 2.0 * math.pi * (b - a) / abs(upper)
        if abs(fine - coarse) <= local:
            total += fine
        elif depth >= max_depth:
            raise NumericalError(
                f"bivariate normal quadrature did not converge: h={h!r}, k={k!r}, rho={rho!r}, "
                f"panel=({a!r}, {b!r}), estimate gap={abs(fine - coarse):.3e}, panels={panels}")
        else:
            m = 0.5 * (a + b)
            stack.append((m, b, depth + 1))
            stack.append((a, m, depth + 1))
    value = ph * pk + sign * total / (2.0 * math.pi)
    return min(max(value, 0.0), min(ph, pk))
