"""
symbol_model.py

Separable symbols phi(r e^{i theta}) = phi_1(theta) * phi_0(r) * g(r) on the unit disk.

The angular factor phi_1 is one of four families (constant, trigonometric
polynomial, step function, sampled continuous function). The radial factor is
the logarithmic weight (1 + log(1/(1-r)))^(-gamma), optionally multiplied by a
bounded profile g with a declared limit g(1). A power weight (1-r)^gamma is kept
for the comparison experiments.

All objects are immutable and safe to share between worker threads.
"""

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from lab_errors import DomainError, PreconditionError

TWO_PI = 2.0 * math.pi
REAL_TOL = 1e-12
SUP_GRID_FACTOR = 4096


def validate_gamma(gamma: float) -> float:
    """Return gamma as float; gamma = 0 is accepted as the degenerate phi_0 = 1 case."""
    gamma = float(gamma)
    if not math.isfinite(gamma) or gamma < 0.0:
        raise DomainError(f"gamma must be finite and >= 0, got {gamma}")
    return gamma


def _is_power_of_two(m: int) -> bool:
    return m > 0 and (m & (m - 1)) == 0


# ---------------------------------------------------------------------------
# Radial factor
# ---------------------------------------------------------------------------

PROFILE_KINDS = ("one", "constant", "inverse_one_plus_r", "one_plus_log_decay")


@dataclass(frozen=True)
class RadialProfile:
    """Bounded perturbation g on [0,1) with a declared limit g(1)."""

    kind: str = "one"
    value: float = 1.0

    def __post_init__(self):
        if self.kind not in PROFILE_KINDS:
            raise DomainError(f"unknown radial profile '{self.kind}', expected one of {PROFILE_KINDS}")
        if not math.isfinite(self.value):
            raise DomainError("profile value must be finite")

    @property
    def limit(self) -> float:
        if self.kind == "constant":
            return float(self.value)
        if self.kind == "inverse_one_plus_r":
            return 0.5
        return 1.0

    @property
    def bound(self) -> float:
        """sup |g| on [0,1)."""
        if self.kind == "constant":
            return abs(self.value)
        return 2.0 if self.kind == "one_plus_log_decay" else 1.0

    @property
    def is_unit(self) -> bool:
        return self.kind == "one" or (self.kind == "constant" and self.value == 1.0)

    def __call__(self, r: Any) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if self.kind == "one":
            return np.ones_like(r)
        if self.kind == "constant":
            return np.full_like(r, self.value)
        if self.kind == "inverse_one_plus_r":
            return 1.0 / (1.0 + r)
        # 1 + 1/(1 + log(1/(1-r))): bounded by 2, tends to 1
        return 1.0 + 1.0 / (1.0 - np.log1p(-r))

    def of_u(self, u: np.ndarray) -> np.ndarray:
        """Profile in the variable u = -log(1-r)."""
        if self.kind == "one":
            return np.ones_like(u)
        if self.kind == "constant":
            return np.full_like(u, self.value)
        if self.kind == "inverse_one_plus_r":
            return 1.0 / (2.0 - np.exp(-u))
        return 1.0 + 1.0 / (1.0 + u)

    def describe(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {"kind": self.kind, "limit": self.limit}
        if self.kind == "constant":
            out["value"] = self.value
        return out


@dataclass(frozen=True)
class RadialWeight:
    """Radial factor phi_0(r) * g(r), optionally cut off at |z| <= cutoff."""

    gamma: float
    profile: RadialProfile = field(default_factory=RadialProfile)
    kind: str = "log"
    cutoff: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "gamma", validate_gamma(self.gamma))
        if self.kind not in ("log", "power"):
            raise DomainError(f"radial weight kind must be 'log' or 'power', got '{self.kind}'")
        if self.kind == "power" and self.gamma <= 0.0:
            raise DomainError("power weight requires gamma > 0")
        if self.cutoff is not None and not 0.0 < self.cutoff < 1.0:
            raise DomainError(f"cutoff radius must lie in (0,1), got {self.cutoff}")

    @property
    def g_limit(self) -> float:
        """g(1); zero when a cutoff removes the boundary."""
        return 0.0 if self.cutoff is not None else self.profile.limit

    @property
    def u_cutoff(self) -> Optional[float]:
        return None if self.cutoff is None else -math.log1p(-self.cutoff)

    def base(self, r: Any) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if self.kind == "power":
            return (1.0 - r) ** self.gamma
        if self.gamma == 0.0:
            return np.ones_like(r)
        return (1.0 - np.log1p(-r)) ** (-self.gamma)

    def __call__(self, r: Any) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if np.any(r < 0.0) or np.any(r >= 1.0):
            raise DomainError("radial weight is defined for r in [0, 1)")
        out = self.base(r) * self.profile(r)
        if self.cutoff is not None:
            out = np.where(r <= self.cutoff, out, 0.0)
        return out

    def describe(self) -> Dict[str, Any]:
        return {
            "gamma": self.gamma,
            "kind": self.kind,
            "profile": self.profile.describe(),
            "cutoff": self.cutoff,
        }


# ---------------------------------------------------------------------------
# Angular factors
# ---------------------------------------------------------------------------


class AngularFactor(ABC):
    """A bounded function on the unit circle, parameterized by theta."""

    family: str = "abstract"

    @abstractmethod
    def evaluate(self, theta: Any) -> np.ndarray:
        """Complex values phi_1(e^{i theta})."""

    @abstractmethod
    def fourier_coefficients(self, ks: Any) -> np.ndarray:
        """phi_1 hat(k) = (1/2pi) int phi_1 e^{-ik theta} d theta for each integer k."""

    @abstractmethod
    def sup_norm(self) -> float:
        """L^infinity norm on the circle."""

    @abstractmethod
    def describe(self) -> Dict[str, Any]:
        """JSON-ready description, mirroring the config schema."""

    @property
    def max_frequency(self) -> Optional[int]:
        """Largest |k| for which coefficients are available, None if unbounded."""
        return None

    def fourier_coefficient(self, k: int) -> complex:
        return complex(self.fourier_coefficients(np.array([int(k)]))[0])

    def is_real(self, tol: float = REAL_TOL) -> bool:
        return True

    def lp_norm(self, p: float) -> float:
        grid = _default_sampling_grid(self)
        theta = TWO_PI * np.arange(grid) / grid
        vals = np.abs(self.evaluate(theta))
        return float(np.mean(vals ** p) ** (1.0 / p))


@dataclass(frozen=True)
class ConstantFactor(AngularFactor):
    value: complex = 1.0

    family = "constant"

    def evaluate(self, theta: Any) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        return np.full(theta.shape, complex(self.value))

    def fourier_coefficients(self, ks: Any) -> np.ndarray:
        ks = np.asarray(ks, dtype=np.int64)
        return np.where(ks == 0, complex(self.value), 0.0 + 0.0j)

    def sup_norm(self) -> float:
        return abs(complex(self.value))

    def is_real(self, tol: float = REAL_TOL) -> bool:
        return abs(complex(self.value).imag) <= tol

    def lp_norm(self, p: float) -> float:
        return self.sup_norm()

    def describe(self) -> Dict[str, Any]:
        return {"type": "constant", "value": _complex_json(self.value)}


@dataclass(frozen=True)
class TrigPolynomial(AngularFactor):
    """sum_{j=-N}^{N} b_j e^{ij theta}; coefficients stored as (b_{-N}, ..., b_N)."""

    coefficients: Tuple[complex, ...]

    family = "trig"

    def __post_init__(self):
        coeffs = tuple(complex(c) for c in self.coefficients)
        if len(coeffs) % 2 != 1:
            raise DomainError("trigonometric polynomial needs an odd number of coefficients (-N..N)")
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def degree(self) -> int:
        return (len(self.coefficients) - 1) // 2

    @cached_property
    def _coeff_array(self) -> np.ndarray:
        return np.array(self.coefficients, dtype=complex)

    def coefficient(self, j: int) -> complex:
        n = self.degree
        return self.coefficients[j + n] if -n <= j <= n else 0.0j

    def evaluate(self, theta: Any) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        js = np.arange(-self.degree, self.degree + 1)
        phases = np.exp(1j * np.multiply.outer(theta, js))
        return phases @ self._coeff_array

    def _derivatives(self, theta: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        js = np.arange(-self.degree, self.degree + 1)
        phases = np.exp(1j * np.multiply.outer(theta, js)) * self._coeff_array
        p = phases.sum(axis=-1)
        dp = (phases * (1j * js)).sum(axis=-1)
        d2p = (phases * (-(js.astype(float) ** 2))).sum(axis=-1)
        return p, dp, d2p

    def fourier_coefficients(self, ks: Any) -> np.ndarray:
        ks = np.asarray(ks, dtype=np.int64)
        n = self.degree
        inside = np.abs(ks) <= n
        idx = np.clip(ks + n, 0, 2 * n)
        return np.where(inside, self._coeff_array[idx], 0.0 + 0.0j)

    def sup_norm(self) -> float:
        return self._sup_norm

    @cached_property
    def _sup_norm(self) -> float:
        n = self.degree
        if not np.any(self._coeff_array[np.arange(2 * n + 1) != n]):
            return abs(self.coefficients[n])
        grid = SUP_GRID_FACTOR * (2 * n + 1)
        buf = np.zeros(grid, dtype=complex)
        for j, b in zip(range(-n, n + 1), self.coefficients):
            buf[j % grid] += b
        values = np.fft.ifft(buf) * grid
        f = np.abs(values) ** 2
        best = float(f.max())
        # polish the grid maxima with one Newton step on f = |p|^2
        local = (f >= np.roll(f, 1)) & (f >= np.roll(f, -1)) & (f >= best * (1.0 - 1e-3))
        candidates = np.flatnonzero(local)
        if candidates.size > 64:
            candidates = candidates[np.argsort(f[candidates])[-64:]]
        theta = TWO_PI * candidates / grid
        p, dp, d2p = self._derivatives(theta)
        f1 = 2.0 * np.real(np.conj(p) * dp)
        f2 = 2.0 * (np.abs(dp) ** 2 + np.real(np.conj(p) * d2p))
        concave = f2 < 0.0
        if np.any(concave):
            step = theta[concave] - f1[concave] / f2[concave]
            polished = np.abs(self.evaluate(step)) ** 2
            best = max(best, float(polished.max()))
        return math.sqrt(best)

    def is_real(self, tol: float = REAL_TOL) -> bool:
        c = self._coeff_array
        return bool(np.max(np.abs(c - np.conj(c[::-1])), initial=0.0) <= tol)

    def describe(self) -> Dict[str, Any]:
        return {
            "type": "trig",
            "degree": self.degree,
            "coefficients": [_complex_json(c) for c in self.coefficients],
        }


@dataclass(frozen=True)
class StepFunction(AngularFactor):
    """Piecewise constant: value c_j on the half-open piece [theta_{j-1}, theta_j)."""

    breakpoints: Tuple[float, ...]
    values: Tuple[complex, ...]

    family = "step"

    def __post_init__(self):
        bps = tuple(float(b) for b in self.breakpoints)
        vals = tuple(complex(v) for v in self.values)
        if len(vals) < 1 or len(bps) != len(vals) + 1:
            raise DomainError("step function needs L values and L+1 breakpoints")
        if any(b2 <= b1 for b1, b2 in zip(bps, bps[1:])):
            raise DomainError("step breakpoints must be strictly increasing")
        if abs((bps[-1] - bps[0]) - TWO_PI) > 1e-12:
            raise DomainError("step breakpoints must span exactly 2*pi")
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "values", vals)

    @classmethod
    def uniform(cls, values: Sequence[complex], start: float = 0.0) -> "StepFunction":
        """Values on the uniform partition of [start, start + 2 pi) into len(values) arcs."""
        count = len(values)
        bps = [start + TWO_PI * j / count for j in range(count)] + [start + TWO_PI]
        return cls(tuple(bps), tuple(values))

    @property
    def pieces(self) -> int:
        return len(self.values)

    @cached_property
    def _value_array(self) -> np.ndarray:
        return np.array(self.values, dtype=complex)

    def evaluate(self, theta: Any) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        start = self.breakpoints[0]
        t = start + np.mod(theta - start, TWO_PI)
        idx = np.searchsorted(self.breakpoints, t, side="right") - 1
        idx = np.clip(idx, 0, self.pieces - 1)
        return self._value_array[idx]

    def fourier_coefficients(self, ks: Any) -> np.ndarray:
        ks = np.asarray(ks, dtype=np.int64)
        bps = np.array(self.breakpoints)
        c = self._value_array
        lengths = np.diff(bps)
        mean = complex(np.sum(c * lengths) / TWO_PI)
        # jump form: sum_j E_j (c_{j+1} - c_j) with E_L identified with E_0,
        # so a constant step has exactly zero coefficients for k != 0
        jumps = np.empty_like(c)
        jumps[0] = c[0] - c[-1]
        jumps[1:] = c[1:] - c[:-1]
        phases = np.exp(-1j * np.multiply.outer(ks.astype(float), bps[:-1]))
        total = phases @ jumps
        safe_k = np.where(ks == 0, 1, ks)
        return np.where(ks == 0, mean, total / (TWO_PI * 1j * safe_k))

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self._value_array)))

    def lp_norm(self, p: float) -> float:
        lengths = np.diff(np.array(self.breakpoints)) / TWO_PI
        return float(np.sum(lengths * np.abs(self._value_array) ** p) ** (1.0 / p))

    def is_real(self, tol: float = REAL_TOL) -> bool:
        return bool(np.max(np.abs(self._value_array.imag)) <= tol)

    def describe(self) -> Dict[str, Any]:
        return {
            "type": "step",
            "breakpoints": list(self.breakpoints),
            "values": [_complex_json(v) for v in self.values],
        }


SAMPLED_PRESETS: Dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "cos": np.cos,
    "sin": np.sin,
    "abs_cos": lambda t: np.abs(np.cos(t)),
    "two_plus_cos": lambda t: 2.0 + np.cos(t),
    "sawtooth": lambda t: t / math.pi - 1.0,
}


@dataclass(frozen=True)
class SampledContinuous(AngularFactor):
    """Values on the uniform grid theta_m = 2 pi m / M, M >= 4 a power of two."""

    samples: Tuple[complex, ...]
    label: str = "samples"

    family = "sampled"

    def __post_init__(self):
        vals = tuple(complex(v) for v in self.samples)
        if len(vals) < 4 or not _is_power_of_two(len(vals)):
            raise DomainError(f"sampled grid size must be a power of two >= 4, got {len(vals)}")
        object.__setattr__(self, "samples", vals)

    @classmethod
    def from_function(cls, func: Callable[[np.ndarray], np.ndarray], grid: int,
                      label: str = "function") -> "SampledContinuous":
        theta = TWO_PI * np.arange(grid) / grid
        return cls(tuple(np.asarray(func(theta), dtype=complex)), label=label)

    @classmethod
    def preset(cls, name: str, grid: int) -> "SampledContinuous":
        if name not in SAMPLED_PRESETS:
            raise DomainError(f"unknown sampled preset '{name}', expected one of {sorted(SAMPLED_PRESETS)}")
        return cls.from_function(SAMPLED_PRESETS[name], grid, label=name)

    @property
    def grid(self) -> int:
        return len(self.samples)

    @property
    def max_frequency(self) -> Optional[int]:
        return self.grid // 2 - 1

    @cached_property
    def _sample_array(self) -> np.ndarray:
        return np.array(self.samples, dtype=complex)

    @cached_property
    def _spectrum(self) -> np.ndarray:
        return np.fft.fft(self._sample_array) / self.grid

    def evaluate(self, theta: Any) -> np.ndarray:
        # periodic linear interpolation between grid values
        theta = np.asarray(theta, dtype=float)
        pos = np.mod(theta, TWO_PI) * self.grid / TWO_PI
        lo = np.floor(pos).astype(np.int64) % self.grid
        hi = (lo + 1) % self.grid
        w = pos - np.floor(pos)
        vals = self._sample_array
        return (1.0 - w) * vals[lo] + w * vals[hi]

    def fourier_coefficients(self, ks: Any) -> np.ndarray:
        ks = np.asarray(ks, dtype=np.int64)
        if ks.size and np.max(np.abs(ks)) >= self.grid // 2:
            raise DomainError(
                f"sampled grid of {self.grid} points resolves |k| < {self.grid // 2}, "
                f"requested |k| = {int(np.max(np.abs(ks)))}"
            )
        return self._spectrum[np.mod(ks, self.grid)]

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self._sample_array)))

    def lp_norm(self, p: float) -> float:
        return float(np.mean(np.abs(self._sample_array) ** p) ** (1.0 / p))

    def is_real(self, tol: float = REAL_TOL) -> bool:
        return bool(np.max(np.abs(self._sample_array.imag)) <= tol)

    def describe(self) -> Dict[str, Any]:
        return {"type": "sampled", "label": self.label, "grid": self.grid}


def _complex_json(value: complex) -> Any:
    value = complex(value)
    return value.real if value.imag == 0.0 else [value.real, value.imag]


def _default_sampling_grid(a: AngularFactor) -> int:
    if isinstance(a, TrigPolynomial):
        target = max(1024, 64 * (2 * a.degree + 1))
        return 1 << (target - 1).bit_length()
    return 4096


# ---------------------------------------------------------------------------
# Symbols and partitions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SeparableSymbol:
    angular: AngularFactor
    radial: RadialWeight

    @property
    def gamma(self) -> float:
        return self.radial.gamma

    @property
    def is_radial(self) -> bool:
        return isinstance(self.angular, ConstantFactor) or (
            isinstance(self.angular, StepFunction) and len(set(self.angular.values)) == 1
        )

    def describe(self) -> Dict[str, Any]:
        return {"angular": self.angular.describe(), "radial": self.radial.describe()}


@dataclass(frozen=True)
class ArcPartition:
    """Arc I_j = [2 pi (j-1)/L, 2 pi j/L) of the uniform partition into L arcs."""

    L: int
    j: int = 1

    def __post_init__(self):
        if int(self.L) < 1:
            raise DomainError(f"partition needs L >= 1, got {self.L}")
        if not 1 <= int(self.j) <= int(self.L):
            raise DomainError(f"arc index j={self.j} outside 1..{self.L}")

    @property
    def start(self) -> float:
        return TWO_PI * (self.j - 1) / self.L

    @property
    def end(self) -> float:
        return TWO_PI * self.j / self.L

    def indicator(self) -> StepFunction:
        if self.L == 1:
            return StepFunction((0.0, TWO_PI), (1.0,))
        start = self.start
        return StepFunction((start, self.end, start + TWO_PI), (1.0, 0.0))


def eval_symbol(sym: SeparableSymbol, r: Any, theta: Any) -> Any:
    """phi_1(e^{i theta}) * phi_0(r) * g(r); raises DomainError outside [0,1)."""
    value = sym.angular.evaluate(theta) * sym.radial(r)
    return complex(value) if np.ndim(value) == 0 else value


def sup_norm_angular(a: AngularFactor) -> float:
    return a.sup_norm()


def lp_norm_angular(a: AngularFactor, p: float) -> float:
    """L^p norm with respect to d theta / 2 pi; p = inf gives the sup norm."""
    if math.isinf(p):
        return a.sup_norm()
    if p <= 0.0:
        raise DomainError(f"L^p exponent must be positive, got {p}")
    return a.lp_norm(p)


def fourier_coefficient(a: AngularFactor, k: int) -> complex:
    return a.fourier_coefficient(k)


def pos_neg_parts(a: AngularFactor) -> Tuple[AngularFactor, AngularFactor]:
    """Split a real angular factor into (max(phi_1, 0), max(-phi_1, 0))."""
    if not a.is_real():
        raise PreconditionError("pos_neg_parts requires a real-valued angular factor")
    if isinstance(a, ConstantFactor):
        c = complex(a.value).real
        return ConstantFactor(max(c, 0.0)), ConstantFactor(max(-c, 0.0))
    if isinstance(a, StepFunction):
        vals = [complex(v).real for v in a.values]
        return (
            StepFunction(a.breakpoints, tuple(max(v, 0.0) for v in vals)),
            StepFunction(a.breakpoints, tuple(max(-v, 0.0) for v in vals)),
        )
    if isinstance(a, SampledContinuous):
        vals = np.real(a._sample_array)
    else:
        grid = _default_sampling_grid(a)
        vals = np.real(a.evaluate(TWO_PI * np.arange(grid) / grid))
    label = getattr(a, "label", a.family)
    return (
        SampledContinuous(tuple(np.maximum(vals, 0.0)), label=f"{label}+"),
        SampledContinuous(tuple(np.maximum(-vals, 0.0)), label=f"{label}-"),
    )


def arc_restriction(partition: ArcPartition, gamma: float,
                    profile: Optional[RadialProfile] = None) -> SeparableSymbol:
    """The arc symbol chi_{I_j} * phi_0."""
    radial = RadialWeight(gamma, profile or RadialProfile())
    return SeparableSymbol(partition.indicator(), radial)
