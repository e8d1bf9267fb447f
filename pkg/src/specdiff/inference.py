"""L2-distance estimators, variance estimators and tests for equal spectra.

All estimators are Riemann sums over the Fourier frequencies
``lambda_k = 2 pi k / n1`` of the shorter series; the longer series'
periodogram is evaluated on the same grid. Products of periodograms are
staggered across consecutive frequencies so their expectations factorise.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from .core import ComparisonInput, SeriesError
from .spectral import GridPeriodograms

# Multiplies the fourth-power periodogram term of the H0 variance estimator.
# Under H0 with Gaussian data E[I^4] ~ 24 f^4, so with weight 1/(4 n1) that term
# tends to (3/2pi) int (f11^4 + f22^4), twice its limit. Pinned by
# ``harness.calibrate_sigma_h0``; see calibration/sigma_h0.json.
SIGMA_H0_CALIBRATION = 0.5


class DegenerateInputError(SeriesError):
    """Variance or normalising constant is zero; the statistic is undefined."""


def normal_cdf(x):
    return ndtr(x)


def normal_quantile(p):
    """Standard normal quantile; raises ``ValueError`` outside (0, 1)."""
    p_arr = np.asarray(p, dtype=float)
    if np.any((p_arr <= 0) | (p_arr >= 1)) or np.any(np.isnan(p_arr)):
        raise ValueError(f"probability must lie in (0, 1), got {p}")
    out = ndtri(p_arr)
    return float(out) if out.ndim == 0 else out


def _grid(x, method="fft") -> GridPeriodograms:
    if isinstance(x, GridPeriodograms):
        return x
    if isinstance(x, ComparisonInput):
        return GridPeriodograms.from_input(x, method)
    raise TypeError(f"expected ComparisonInput or GridPeriodograms, got {type(x).__name__}")


# ---------------------------------------------------------------------------
# point estimators


@dataclass(frozen=True)
class DStatistics:
    d1: float
    d2: float
    d12: float
    d_squared: float
    r_squared: float
    n1: int
    n2: int


def d_statistics(inp) -> DStatistics:
    """D1, D2, D12 and the derived D^2 and R^2.

    ``d12`` pairs I_1 at lambda_k with I_2 at lambda_{k+1}. ``r_squared`` is
    NaN when ``d1 + d2 == 0``; use :func:`r_squared` to get an error instead.
    """
    g = _grid(inp)
    n1 = g.n1
    d1 = float(np.sum(g.i1**2) / n1)
    d2 = float(np.sum(g.i2**2) / n1)
    d12 = float(np.dot(g.i1[:-1], g.i2[1:]) / n1)
    d_sq = (d1 + d2) / 2 - 2 * d12
    r_sq = 2 * d_sq / (d1 + d2) if d1 + d2 > 0 else math.nan
    return DStatistics(d1, d2, d12, d_sq, r_sq, g.n1, g.n2)


def r_squared(stats: DStatistics) -> float:
    if not stats.d1 + stats.d2 > 0:
        raise DegenerateInputError("D1 + D2 = 0: both series have zero periodogram")
    return stats.r_squared


# ---------------------------------------------------------------------------
# variances


def sigma2_h0(inp, calibration: float = SIGMA_H0_CALIBRATION) -> float:
    """Consistent estimator of the null variance of sqrt(n1) * D^2.

    ``calibration`` scales the I^4 term; pass 1.0 for the raw 1/(4 n1) weight.
    """
    g = _grid(inp)
    n1 = g.n1
    fourth = np.sum(g.i1**4 + g.i2**4) / (4 * n1)
    cross = np.sum(g.i12[:-1] ** 2 * g.i21[1:] ** 2).real / (2 * n1)
    return max(float(calibration * fourth + cross), 0.0)


# Each integral of a product of spectra is estimated by a product of
# periodogram factors at consecutive grid frequencies, e.g.
#   int f11^3 f22  ~  4 pi / n1 * sum_k I1(l_k) I1(l_k+1) I1(l_k+2) I2(l_k+3).
# A factor |f12|^2 is one cross pair Re(I12(l) I21(l')) at adjacent l, l'.


def _stagger(*factors) -> np.ndarray:
    """Products prod_j factor_j(lambda_{k+j}) for every k where all factors exist."""
    length = max(factors[0].size - len(factors) + 1, 0)
    prod = np.ones(length, dtype=complex)
    for j, f in enumerate(factors):
        prod = prod * f[j:j + length]
    return prod


@dataclass(frozen=True)
class VarianceEstimates:
    sigma2_h0: float
    sigma2_alt: float
    sigma2_r: float
    sigma_hat: dict  # keys "11", "12", "13", "22", "23", "33"

    def covariance_matrix(self) -> np.ndarray:
        """Plug-in asymptotic covariance in (D1, D12, D2) order (scaled by pi)."""
        s = self.sigma_hat
        return np.array([
            [s["11"], s["12"], s["13"]],
            [s["12"], s["22"], s["23"]],
            [s["13"], s["23"], s["33"]],
        ])


def _integrals(g: GridPeriodograms) -> dict:
    n1 = g.n1
    a, b, c, cc = g.i1, g.i2, g.i12, g.i21

    def integral(*fs):
        return float(4 * np.pi * np.sum(_stagger(*fs)).real / n1)

    return {
        "f11^4": integral(a, a, a, a),
        "f22^4": integral(b, b, b, b),
        "f11^3 f22": integral(a, a, a, b),
        "f11 f22^3": integral(a, b, b, b),
        "f11^2 f22^2": integral(a, a, b, b),
        "f11^2 |f12|^2": integral(a, a, c, cc),
        "f22^2 |f12|^2": integral(b, b, c, cc),
        "f11 |f12|^2 f22": integral(a, c, cc, b),
        "|f12|^4": integral(c, cc, c, cc),
    }


def sigma_matrix_entries(inp) -> dict:
    """Plug-in estimates of the six distinct entries of the limiting covariance
    of sqrt(n1) (D1, D12, D2), each multiplied by pi."""
    J = _integrals(_grid(inp))
    return {
        "11": 5 * J["f11^4"],
        "12": J["f11^3 f22"] + J["f11^2 |f12|^2"],
        "13": J["|f12|^4"] + 4 * J["f11 |f12|^2 f22"],
        "22": 0.75 * J["f11^2 f22^2"] + 0.5 * J["f11 |f12|^2 f22"],
        "23": J["f11 f22^3"] + J["f22^2 |f12|^2"],
        "33": 5 * J["f22^4"],
    }


def r_squared_gradient(d1: float, d12: float, d2: float) -> np.ndarray:
    """Gradient of R^2 = 1 - 4 D12 / (D1 + D2) in (D1, D12, D2) order."""
    s = d1 + d2
    return np.array([4 * d12 / s**2, -4 / s, 4 * d12 / s**2])


def d_squared_gradient() -> np.ndarray:
    return np.array([0.5, -2.0, 0.5])


def sigma2_alternative(inp, calibration: float = SIGMA_H0_CALIBRATION) -> VarianceEstimates:
    """Variance estimates valid under the alternative.

    ``sigma2_alt`` estimates the limiting variance of sqrt(n1) D^2 and
    ``sigma2_r`` that of sqrt(n1) R^2 (delta method); both are
    ``g' Sigma g / pi`` with the matching gradient ``g``. Negative values
    are clamped to 0.
    """
    g = _grid(inp)
    stats = d_statistics(g)
    if not stats.d1 + stats.d2 > 0:
        raise DegenerateInputError("D1 + D2 = 0: both series have zero periodogram")
    entries = sigma_matrix_entries(g)
    tmp = VarianceEstimates(0.0, 0.0, 0.0, entries)
    S = tmp.covariance_matrix() / np.pi
    gd = d_squared_gradient()
    gr = r_squared_gradient(stats.d1, stats.d12, stats.d2)
    return VarianceEstimates(
        sigma2_h0=sigma2_h0(g, calibration),
        sigma2_alt=max(float(gd @ S @ gd), 0.0),
        sigma2_r=max(float(gr @ S @ gr), 0.0),
        sigma_hat=entries,
    )


# ---------------------------------------------------------------------------
# tests


@dataclass(frozen=True)
class TestResult:
    __test__ = False  # not a pytest class

    method: str
    statistic: float
    p_value: float
    reject: bool
    alpha: float
    variance_used: float
    epsilon: float | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        if d["epsilon"] is None:
            del d["epsilon"]
        return d


def _check_alpha(alpha):
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")


def equality_test(inp, alpha: float = 0.05, calibration: float = SIGMA_H0_CALIBRATION) -> TestResult:
    """One-sided test of H0: f11 = f22; rejects for large sqrt(n1) D^2 / sigma_H0."""
    _check_alpha(alpha)
    g = _grid(inp)
    stats = d_statistics(g)
    var = sigma2_h0(g, calibration)
    if not var > 0:
        raise DegenerateInputError("null variance estimate is zero (constant or zero input)")
    stat = math.sqrt(g.n1) * stats.d_squared / math.sqrt(var)
    return TestResult("equality", stat, float(1 - normal_cdf(stat)),
                      bool(stat > normal_quantile(1 - alpha)), alpha, var)


def precise_test(inp, epsilon: float, alpha: float = 0.05,
                 calibration: float = SIGMA_H0_CALIBRATION) -> TestResult:
    """Test of H0: R^2 > epsilon against R^2 <= epsilon (approximate equality).

    Rejects when ``R^2 - epsilon < sigma_r / sqrt(n1) * u_alpha``.
    """
    _check_alpha(alpha)
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    g = _grid(inp)
    stats = d_statistics(g)
    r2 = r_squared(stats)
    var_r = sigma2_alternative(g, calibration).sigma2_r
    return _precise_from(r2, var_r, g.n1, epsilon, alpha)


def _precise_from(r2, var_r, n1, epsilon, alpha) -> TestResult:
    sd = math.sqrt(var_r)
    gap = r2 - epsilon
    if sd > 0:
        stat = math.sqrt(n1) * gap / sd
        p = float(normal_cdf(stat))
        reject = gap < sd / math.sqrt(n1) * normal_quantile(alpha)
    else:
        stat = math.copysign(math.inf, gap) if gap != 0 else 0.0
        p = 0.0 if gap < 0 else 1.0
        reject = gap < 0
    return TestResult("precise", stat, p, bool(reject), alpha, var_r, epsilon)


def confidence_interval_d2(inp, alpha: float = 0.05,
                           calibration: float = SIGMA_H0_CALIBRATION) -> tuple[float, float]:
    """Two-sided (1 - alpha) interval for D^2 from the alternative variance;
    the lower end is clamped at 0."""
    _check_alpha(alpha)
    g = _grid(inp)
    stats = d_statistics(g)
    var = sigma2_alternative(g, calibration).sigma2_alt
    if not var > 0:
        raise DegenerateInputError("alternative variance estimate is zero")
    half = normal_quantile(1 - alpha / 2) * math.sqrt(var / g.n1)
    return max(stats.d_squared - half, 0.0), stats.d_squared + half


# ---------------------------------------------------------------------------
# full report


def compare(inp: ComparisonInput, alpha: float = 0.05, epsilon: float | None = None,
            method: str = "fft") -> dict:
    """Run the equality test (and the precise test when ``epsilon`` is given).

    Returns a JSON-ready dict with the stable report fields.
    """
    g = GridPeriodograms.from_input(inp, method)
    stats = d_statistics(g)
    res = equality_test(g, alpha)
    try:
        var = sigma2_alternative(g)
        sigma2_alt = var.sigma2_alt
    except DegenerateInputError:
        var, sigma2_alt = None, math.nan
    report = {
        **res.to_dict(),
        "d1": stats.d1, "d2": stats.d2, "d12": stats.d12,
        "d_squared": stats.d_squared, "r_squared": stats.r_squared,
        "sigma2_h0": res.variance_used, "sigma2_alt": sigma2_alt,
        "n1": inp.n1, "n2": inp.n2, "swapped": inp.swapped,
    }
    if epsilon is not None:
        _check_alpha(alpha)
        if not epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {epsilon}")
        p = _precise_from(r_squared(stats), var.sigma2_r, g.n1, epsilon, alpha)
        report["precise"] = {**p.to_dict(), "sigma2_r": var.sigma2_r}
    return report


REPORT_FIELDS = ("method", "statistic", "p_value", "reject", "alpha", "d1", "d2", "d12",
                 "d_squared", "r_squared", "sigma2_h0", "sigma2_alt", "n1", "n2", "swapped")


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2, allow_nan=True)
