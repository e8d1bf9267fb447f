"""Process simulation for Monte Carlo work.

The built-in zoo holds the five benchmark models

    X1  white noise              X_t = Z_t
    X2  AR(1), phi = -0.8         X_t = -0.8 X_{t-1} + Z_t
    X3  MA(1), theta = 0.8        X_t = Z_t - 0.8 Z_{t-1}
    X4  FARIMA(0.45, 0, 0.8)      (1 - B)^0.45 X_t = (1 - 0.8 B) Z_t
    X5  structural break          white noise / AR(0.8) / white noise

plus user-supplied causal linear processes. Innovations for a pair of series
can be cross-correlated through the index map ``m(t) = floor(t q) - floor(q - 1)``
with ``q = n2 / n1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np
from scipy import signal

from .core import TimeSeries

AR_BURN_IN = 1000
FARIMA_TRUNCATION = 10_000

WHITE_NOISE = "white_noise"
AR1 = "ar1"
MA1 = "ma1"
FARIMA = "farima"
STRUCTURAL_BREAK = "structural_break"
LINEAR = "linear"
KINDS = (WHITE_NOISE, AR1, MA1, FARIMA, STRUCTURAL_BREAK, LINEAR)


class SimulationError(ValueError):
    pass


def make_rng(seed) -> np.random.Generator:
    """PCG64 generator from an int, a ``SeedSequence`` or an existing generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def replication_seed(master_seed: int, *key: int) -> np.random.SeedSequence:
    """Counter-based child seed: entropy is the master seed, spawn key the counters.

    ``replication_seed(s, cell, r)`` depends only on its arguments, so the
    stream used by replication ``r`` does not depend on scheduling.
    """
    return np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(k) for k in key))


# ---------------------------------------------------------------------------
# coupling


@dataclass(frozen=True)
class CouplingSpec:
    rho: float
    n1: int
    n2: int

    def __post_init__(self):
        if not 0.0 <= self.rho <= 1.0:
            raise SimulationError(f"rho must lie in [0, 1], got {self.rho}")
        if self.n1 < 1 or self.n2 < 1 or self.n1 > self.n2:
            raise SimulationError(f"need 1 <= n1 <= n2, got n1={self.n1}, n2={self.n2}")
        m = self.index_map()
        if m[0] < 1 or m[-1] > self.n2 or np.any(np.diff(m) <= 0):
            raise SimulationError(
                f"coupling map is not a strictly increasing map into 1..{self.n2} "
                f"for n1={self.n1}, n2={self.n2}"
            )

    @property
    def q(self) -> Fraction:
        return Fraction(self.n2, self.n1)

    def index_map(self) -> np.ndarray:
        """1-based long-series index matched to each short index t = 1..n1."""
        # exact integer arithmetic: floor(t*n2/n1) - floor((n2 - n1)/n1)
        t = np.arange(1, self.n1 + 1, dtype=np.int64)
        return t * self.n2 // self.n1 - (self.n2 - self.n1) // self.n1


def coupled_innovations(spec: CouplingSpec, seed, pad: int = 0):
    """Draw a pair of standard normal innovation sequences.

    Returns ``(z1, z2)`` of lengths ``n1 + 2 pad`` and ``n2 + 2 pad``. The
    in-sample innovation ``Z_t`` sits at array index ``pad + t - 1``. For
    t = 1..n1, ``z1`` at t equals ``rho * z2[m(t)] + sqrt(1 - rho^2) * eps_t``;
    pad entries of ``z1`` are independent of ``z2``.
    """
    if pad < 0:
        raise SimulationError("pad must be nonnegative")
    rng = make_rng(seed)
    z2 = rng.standard_normal(spec.n2 + 2 * pad)
    z1 = rng.standard_normal(spec.n1 + 2 * pad)
    if spec.rho > 0:
        idx = pad + spec.index_map() - 1
        inner = slice(pad, pad + spec.n1)
        z1[inner] = spec.rho * z2[idx] + math.sqrt(1.0 - spec.rho**2) * z1[inner]
    return z1, z2


# ---------------------------------------------------------------------------
# models


def farima_coeffs(d: float, theta: float = 0.0, M: int = FARIMA_TRUNCATION) -> np.ndarray:
    """MA(infinity) weights of (1 - B)^(-d) (1 - theta B), truncated at lag M.

    ``b_j = b_{j-1} (j - 1 + d) / j`` with ``b_0 = 1`` and
    ``psi_j = b_j - theta b_{j-1}``.
    """
    if not 0.0 < d < 0.5:
        raise SimulationError(f"fractional order d must lie in (0, 0.5), got {d}")
    if M < 1:
        raise SimulationError("truncation M must be >= 1")
    j = np.arange(1, M + 1, dtype=float)
    b = np.empty(M + 1)
    b[0] = 1.0
    b[1:] = np.cumprod((j - 1.0 + d) / j)
    psi = b.copy()
    psi[1:] -= theta * b[:-1]
    return psi


@dataclass(frozen=True)
class ModelSpec:
    """A process model. Use the classmethod constructors or ``zoo``."""

    kind: str
    phi: float = 0.0
    theta: float = 0.0
    d: float = 0.0
    psi: tuple = field(default=(), repr=False)
    burn_in: int = AR_BURN_IN
    truncation: int = FARIMA_TRUNCATION
    name: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SimulationError(f"unknown model kind {self.kind!r}")
        if self.kind == AR1 and not abs(self.phi) < 1:
            raise SimulationError(f"AR(1) needs |phi| < 1, got {self.phi}")
        if self.kind == FARIMA and not 0 < self.d < 0.5:
            raise SimulationError(f"FARIMA needs 0 < d < 0.5, got {self.d}")
        if self.kind == LINEAR and len(self.psi) == 0:
            raise SimulationError("linear process needs at least one coefficient")
        if self.burn_in < 0 or self.truncation < 1:
            raise SimulationError("burn_in must be >= 0 and truncation >= 1")

    @classmethod
    def white_noise(cls):
        return cls(WHITE_NOISE, name="X1")

    @classmethod
    def ar1(cls, phi=-0.8, burn_in=AR_BURN_IN):
        return cls(AR1, phi=phi, burn_in=burn_in, name="X2")

    @classmethod
    def ma1(cls, theta=0.8):
        return cls(MA1, theta=theta, name="X3")

    @classmethod
    def farima(cls, d=0.45, theta=0.8, truncation=FARIMA_TRUNCATION):
        return cls(FARIMA, d=d, theta=theta, truncation=truncation, name="X4")

    @classmethod
    def structural_break(cls, phi=0.8):
        return cls(STRUCTURAL_BREAK, phi=phi, name="X5")

    @classmethod
    def linear(cls, psi, name="linear"):
        return cls(LINEAR, psi=tuple(float(p) for p in psi), name=name)

    @property
    def label(self) -> str:
        return self.name or self.kind

    @property
    def lookback(self) -> int:
        """Innovations needed before Z_1."""
        if self.kind == AR1:
            return self.burn_in
        if self.kind == MA1:
            return 1
        if self.kind == FARIMA:
            return self.truncation
        if self.kind == LINEAR:
            return len(self.psi) - 1
        return 0

    @property
    def stationary(self) -> bool:
        return self.kind != STRUCTURAL_BREAK

    def ma_coefficients(self, M: int | None = None) -> np.ndarray:
        """Causal MA weights psi_0.. (AR(1) truncated at ``M``, default 1000 lags)."""
        if self.kind == WHITE_NOISE:
            return np.ones(1)
        if self.kind == AR1:
            return self.phi ** np.arange((M or AR_BURN_IN) + 1)
        if self.kind == MA1:
            return np.array([1.0, -self.theta])
        if self.kind == FARIMA:
            return farima_coeffs(self.d, self.theta, M or self.truncation)
        if self.kind == LINEAR:
            return np.asarray(self.psi, dtype=float)
        raise SimulationError("the structural-break model has no MA representation")

    def with_params(self, **overrides) -> "ModelSpec":
        return replace(self, **overrides)


ZOO = {
    "X1": ModelSpec.white_noise,
    "X2": ModelSpec.ar1,
    "X3": ModelSpec.ma1,
    "X4": ModelSpec.farima,
    "X5": ModelSpec.structural_break,
}


def zoo(name: str, **overrides) -> ModelSpec:
    """Built-in model by name ``X1``..``X5`` with optional parameter overrides."""
    try:
        model = ZOO[name.upper()]()
    except KeyError:
        raise SimulationError(f"unknown model {name!r}; choose one of {sorted(ZOO)}") from None
    return model.with_params(**overrides) if overrides else model


def simulate(model: ModelSpec, n: int, innovations, offset: int | None = None,
             label: str | None = None) -> TimeSeries:
    """Run ``model`` over an innovation sequence.

    ``innovations[offset + t - 1]`` is ``Z_t`` for t = 1..n; entries before
    ``offset`` feed the AR burn-in or the moving-average lookback. ``offset``
    defaults to ``model.lookback``. The AR(1) recursion starts from state 0
    at the first burn-in innovation.
    """
    z = np.asarray(innovations, dtype=float)
    if offset is None:
        offset = model.lookback
    if offset < model.lookback or offset + n > z.size:
        raise SimulationError(
            f"{model.label}: need {model.lookback} lookback and {n} in-sample "
            f"innovations, got {z.size} with offset {offset}"
        )
    kind = model.kind
    if kind == WHITE_NOISE:
        x = z[offset:offset + n].copy()
    elif kind == AR1:
        seg = z[offset - model.burn_in:offset + n]
        x = signal.lfilter([1.0], [1.0, -model.phi], seg)[model.burn_in:]
    elif kind == MA1:
        x = z[offset:offset + n] - model.theta * z[offset - 1:offset + n - 1]
    elif kind in (FARIMA, LINEAR):
        psi = model.ma_coefficients()
        seg = z[offset - (psi.size - 1):offset + n]
        x = signal.fftconvolve(seg, psi, mode="valid") if psi.size > 64 else np.convolve(seg, psi, mode="valid")
    else:
        x = _structural_break(model.phi, z[offset:offset + n])
    return TimeSeries(x, label or model.label)


def _structural_break(phi: float, z: np.ndarray) -> np.ndarray:
    # regimes on t = 1..T: (0, T/2] white noise, (T/2, 3T/4] AR, (3T/4, T] white noise
    T = z.size
    a, b = int(math.floor(0.5 * T)), int(math.floor(0.75 * T))
    x = z.copy()
    for t in range(a, b):  # 0-based index t is time t + 1
        prev = x[t - 1] if t > 0 else 0.0
        x[t] = phi * prev + z[t]
    return x


def model_spectral_density(model: ModelSpec, lam):
    """Spectral density f(lambda) of a stationary model (vectorised over ``lam``)."""
    lam = np.asarray(lam, dtype=float)
    e = np.exp(-1j * lam)
    if model.kind == WHITE_NOISE:
        out = np.full(lam.shape, 1.0 / (2 * np.pi))
    elif model.kind == AR1:
        out = 1.0 / (2 * np.pi * np.abs(1.0 - model.phi * e) ** 2)
    elif model.kind == MA1:
        out = np.abs(1.0 - model.theta * e) ** 2 / (2 * np.pi)
    elif model.kind == FARIMA:
        with np.errstate(divide="ignore"):
            out = (np.abs(1.0 - model.theta * e) ** 2
                   * np.abs(1.0 - e) ** (-2.0 * model.d) / (2 * np.pi))
    elif model.kind == LINEAR:
        psi = np.asarray(model.psi)
        transfer = np.polyval(psi[::-1], e)
        out = np.abs(transfer) ** 2 / (2 * np.pi)
    else:
        raise SimulationError("the structural-break model is not stationary; no spectral density")
    return out if out.ndim else float(out)


def simulate_pair(model_a: ModelSpec, model_b: ModelSpec, n1: int, n2: int,
                  rho: float = 0.0, seed=None):
    """Simulate ``model_a`` at length n1 and ``model_b`` at length n2 (n1 <= n2)
    from coupled innovations."""
    pad = max(model_a.lookback, model_b.lookback)
    z1, z2 = coupled_innovations(CouplingSpec(rho, n1, n2), seed, pad=pad)
    return (simulate(model_a, n1, z1, offset=pad, label=model_a.label),
            simulate(model_b, n2, z2, offset=pad, label=model_b.label))
