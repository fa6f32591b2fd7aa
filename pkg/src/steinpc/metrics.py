"""Vector statistics, loss metrics and limiting-value predictors.

All dispersion statistics use the population divisor ``d`` (not ``d - 1``):

    ave(u)    = <u, e> / d
    var(u)    = |u - ave(u)|^2 / d
    cov(u, v) = <u - ave(u), v - ave(v)> / d

numpy's ``np.var`` agrees (``ddof=0``) but ``np.cov`` does not, so nothing
here delegates to it. Reductions go through :func:`math.fsum`, which is
exactly rounded and therefore independent of summation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError

# sph clamps cos^2 into [0, 1]; overshoot beyond this is reported, not absorbed
CLAMP_SLACK = 1e-9


def _as_vector(u, name="u"):
    u = np.asarray(u, dtype=float)
    if u.ndim != 1:
        raise ValueError(f"`{name}` must be one-dimensional, got shape {u.shape}")
    if u.size == 0:
        raise ValueError(f"`{name}` must have length >= 1")
    if not np.all(np.isfinite(u)):
        raise ValueError(f"`{name}` has non-finite entries")
    return u


def _pair(u, v):
    u = _as_vector(u, "u")
    v = _as_vector(v, "v")
    if u.shape != v.shape:
        raise ValueError(f"length mismatch: {u.size} vs {v.size}")
    return u, v


def dot(u, v) -> float:
    u, v = _pair(u, v)
    return math.fsum(u * v)


def norm(u) -> float:
    u = _as_vector(u)
    return math.sqrt(math.fsum(u * u))


def ave(u) -> float:
    """Arithmetic mean of the entries of ``u``."""
    u = _as_vector(u)
    return math.fsum(u) / u.size


def var(u) -> float:
    """Mean squared deviation from ``ave(u)`` (population divisor)."""
    u = _as_vector(u)
    r = u - ave(u)
    return math.fsum(r * r) / u.size


def cov(u, v) -> float:
    u, v = _pair(u, v)
    ru = u - ave(u)
    rv = v - ave(v)
    return math.fsum(ru * rv) / u.size


def mse(eta, theta) -> float:
    """Mean squared entrywise error ``<eta - theta, eta - theta> / p``."""
    eta, theta = _pair(eta, theta)
    r = eta - theta
    return math.fsum(r * r) / eta.size


def _clamped_sine_sq(cos_sq: float) -> float:
    if cos_sq > 1.0 + CLAMP_SLACK or cos_sq < -CLAMP_SLACK:
        raise DegenerateInputError(f"squared cosine {cos_sq!r} outside [0, 1] beyond roundoff")
    return 1.0 - min(1.0, max(0.0, cos_sq))


def sph(eta, theta) -> float:
    """Squared sine of the angle between ``eta`` and ``theta``.

    Invariant under positive scaling of either argument and under a
    simultaneous (or single) sign flip.
    """
    eta, theta = _pair(eta, theta)
    ne = math.fsum(eta * eta)
    nt = math.fsum(theta * theta)
    if ne == 0.0 or nt == 0.0:
        raise DegenerateInputError("sph is undefined for a zero-norm vector")
    ip = math.fsum(eta * theta)
    # normalise before squaring to stay clear of overflow
    cos = (ip / math.sqrt(ne)) / math.sqrt(nt)
    return _clamped_sine_sq(cos * cos)


@dataclass(frozen=True)
class Moments:
    """First and second moments of a pair (eta, theta) of equal length."""

    ave_eta: float
    ave_theta: float
    var_eta: float
    var_theta: float
    cov_eta_theta: float

    @classmethod
    def of(cls, eta, theta) -> "Moments":
        eta, theta = _pair(eta, theta)
        return cls(ave(eta), ave(theta), var(eta), var(theta), cov(eta, theta))


def mse_shrunk_closed_form(c, ave_eta, ave_theta, var_theta, var_eta, cov_eta_theta) -> float:
    """``mse(shrink_vector(eta, c), theta)`` from moments, in O(1)."""
    if var_theta < 0 or var_eta < 0:
        raise ValueError("variances must be nonnegative")
    return (ave_eta - ave_theta) ** 2 + var_theta + c * c * var_eta - 2.0 * c * cov_eta_theta


def sph_shrunk_closed_form(c, ave_eta, ave_theta, var_theta, var_eta, cov_eta_theta) -> float:
    """``sph(shrink_vector(eta, c), theta)`` from moments, in O(1)."""
    if var_theta < 0 or var_eta < 0:
        raise ValueError("variances must be nonnegative")
    den = (ave_eta**2 + c * c * var_eta) * (ave_theta**2 + var_theta)
    if not den > 0.0:
        raise DegenerateInputError("zero norm in shrunk vector or target")
    num = (ave_eta * ave_theta + c * cov_eta_theta) ** 2
    return _clamped_sine_sq(num / den)


# ---------------------------------------------------------------------------
# limiting values
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TheoryParams:
    """Limiting mean ``m``, signal dispersion ``xi`` and noise ``nu`` of eta = theta + w."""

    m: float
    xi: float
    nu: float

    def __post_init__(self):
        if not (self.xi > 0 and self.nu > 0):
            raise ValueError("xi and nu must be positive")

    @property
    def snr(self) -> float:
        return self.xi / self.nu

    @property
    def r_inf(self) -> float:
        return 1.0 / math.sqrt(1.0 + (self.m / self.xi) ** 2)


def _check_snr(snr):
    if not snr >= 0:
        raise ValueError(f"snr must be >= 0, got {snr!r}")


def _check_r(r_inf):
    if not 0 < r_inf <= 1:
        raise ValueError(f"r_inf must lie in (0, 1], got {r_inf!r}")


def limit_c_inf(snr: float) -> float:
    """Limiting shrinkage coefficient SNR^2 / (1 + SNR^2)."""
    _check_snr(snr)
    s2 = snr * snr
    return s2 / (1.0 + s2)


def limit_d_inf(snr: float, r_inf: float) -> float:
    """Limiting ratio of shrunk to raw squared-sine error; lies in [c_inf, 1]."""
    _check_snr(snr)
    _check_r(r_inf)
    s2 = snr * snr
    return (s2 + r_inf * r_inf) / (1.0 + s2)


def predicted_raw_mse(delta: float, n: int) -> float:
    if n < 2:
        raise ValueError("n must be >= 2")
    if not delta > 0:
        raise ValueError("delta must be positive")
    return delta * delta / n


def predicted_raw_mse_vs_beta(delta, n, snr, r_inf, chi_n) -> float:
    """Limit of ``mse(eta, beta)``: the theta-based limit times the distortion factor."""
    if not chi_n > 0:
        raise ValueError("chi_n must be positive")
    _check_snr(snr)
    _check_r(r_inf)
    factor = 1.0 + (snr * snr) / (r_inf * r_inf) * ((chi_n - 1.0) / chi_n) ** 2
    return predicted_raw_mse(delta, n) * factor


def predicted_raw_sph(snr: float, r_inf: float) -> float:
    _check_snr(snr)
    _check_r(r_inf)
    r2 = r_inf * r_inf
    return r2 / (r2 + snr * snr)


def snr_and_incoherence(mu, sigma, delta, n, chi_n) -> TheoryParams:
    """Map spiked-model parameters to the abstract (m, xi, nu) of eta = theta + w.

    With theta = chi_n * beta: m = chi_n mu, xi = chi_n sigma, nu = delta / sqrt(n),
    so SNR = (sigma / delta) chi_n sqrt(n) and r_inf = 1 / sqrt(1 + (mu / sigma)^2).
    """
    if not (sigma > 0 and delta > 0):
        raise ValueError("sigma and delta must be positive")
    if n < 2:
        raise ValueError("n must be >= 2")
    if not chi_n > 0:
        raise ValueError("chi_n must be positive")
    return TheoryParams(m=chi_n * mu, xi=chi_n * sigma, nu=delta / math.sqrt(n))
