"""Per-layer medium constants and the hypotheses the observability and
controllability results rely on."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError

RTOL = 1e-12


@dataclass(frozen=True)
class MediumCoefficients:
    """Layer-wise constants ``alpha, beta`` (system A) and ``gamma, tau`` (system B)."""

    alpha: tuple
    beta: tuple
    gamma: tuple
    tau: tuple

    def __post_init__(self):
        n = None
        for name in ("alpha", "beta", "gamma", "tau"):
            vals = tuple(float(v) for v in np.atleast_1d(getattr(self, name)))
            object.__setattr__(self, name, vals)
            if n is None:
                n = len(vals)
            elif len(vals) != n:
                raise ConfigError(f"{name} has {len(vals)} entries, expected {n}")
            if not all(np.isfinite(v) and v > 0 for v in vals):
                raise ConfigError(f"{name} must be strictly positive, got {vals}")
        if n == 0:
            raise ConfigError("need coefficients for at least one layer")

    @classmethod
    def uniform(cls, num_layers: int = 1, value: float = 1.0):
        v = (value,) * num_layers
        return cls(v, v, v, v)

    @property
    def num_layers(self) -> int:
        return len(self.alpha)

    def system(self, tag: str) -> tuple:
        """``(a, b)`` arrays: the gradient and divergence weights of one system."""
        if tag == "A":
            return np.array(self.alpha), np.array(self.beta)
        if tag == "B":
            return np.array(self.gamma), np.array(self.tau)
        raise ValueError(f"unknown system {tag!r}")

    def outer(self) -> dict:
        """Values in the S0-adjacent layer m."""
        return dict(alpha=self.alpha[-1], beta=self.beta[-1],
                    gamma=self.gamma[-1], tau=self.tau[-1])

    def swapped(self) -> "MediumCoefficients":
        return replace(self, alpha=self.gamma, beta=self.tau, gamma=self.alpha, tau=self.beta)


@dataclass
class HypothesisReport:
    monotone_ab: bool | None = None
    monotone_gt: bool | None = None
    compatible: bool | None = None
    residual_product: float = 0.0
    residual_ratio: float = 0.0
    wave_speeds: tuple = ()
    notes: list = field(default_factory=list)

    def merge(self, other: "HypothesisReport") -> "HypothesisReport":
        out = replace(self)
        for name in ("monotone_ab", "monotone_gt", "compatible"):
            if getattr(other, name) is not None:
                setattr(out, name, getattr(other, name))
        out.residual_product = max(self.residual_product, other.residual_product)
        out.residual_ratio = max(self.residual_ratio, other.residual_ratio)
        out.wave_speeds = other.wave_speeds or self.wave_speeds
        out.notes = self.notes + other.notes
        return out


def _nondecreasing(v) -> bool:
    return all(v[k - 1] <= v[k] for k in range(1, len(v)))


def validate_monotonicity(c: MediumCoefficients) -> HypothesisReport:
    ab = _nondecreasing(c.alpha) and _nondecreasing(c.beta)
    gt = _nondecreasing(c.gamma) and _nondecreasing(c.tau)
    return HypothesisReport(monotone_ab=ab, monotone_gt=gt, wave_speeds=all_wave_speeds(c))


def _rel(x, y) -> float:
    return abs(x - y) / max(abs(x), abs(y))


def validate_compatibility(c: MediumCoefficients, rtol: float = RTOL) -> HypothesisReport:
    """Check ``alpha_k beta_k = gamma_k tau_k`` and ``beta_{k-1} tau_k = beta_k tau_{k-1}``."""
    prod = max(_rel(a * b, g * t) for a, b, g, t in zip(c.alpha, c.beta, c.gamma, c.tau))
    ratio = 0.0
    for k in range(1, c.num_layers):
        ratio = max(ratio, _rel(c.beta[k - 1] * c.tau[k], c.beta[k] * c.tau[k - 1]))
    ok = prod <= rtol and ratio <= rtol
    return HypothesisReport(compatible=ok, residual_product=prod, residual_ratio=ratio,
                            wave_speeds=all_wave_speeds(c))


def validate_all(c: MediumCoefficients) -> HypothesisReport:
    return validate_monotonicity(c).merge(validate_compatibility(c))


def wave_speed(c: MediumCoefficients, k: int, system: str = "A") -> float:
    if system == "A":
        return float(np.sqrt(c.alpha[k] * c.beta[k]))
    return float(np.sqrt(c.gamma[k] * c.tau[k]))


def all_wave_speeds(c: MediumCoefficients, system: str = "A") -> tuple:
    return tuple(wave_speed(c, k, system) for k in range(c.num_layers))


def max_wave_speed(c: MediumCoefficients) -> float:
    return max(all_wave_speeds(c, "A") + all_wave_speeds(c, "B"))
