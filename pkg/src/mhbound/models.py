"""Target and proposal density models.

Targets may be unnormalized: everything downstream (the accept/reject
kernel, the truncation constants, the tail ratio, the symmetrized
discretization, the sampler) touches the target only through density
ratios, so the normalization constant is never required.

Built-in targets carry closed-form tail ratios; custom expression
targets fall back to the numeric limit (see asymptotics.tau_numeric).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import exprlang
from .quad import AdaptiveSimpsonRule, SupScanConfig, adaptive_simpson, sup_scan

__all__ = [
    "ModelError",
    "TailRatio",
    "DensityModel",
    "ProposalModel",
    "log_ratio",
]

_LOG_2 = math.log(2.0)
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class TailRatio:
    """Limiting right-tail density ratio u -> lim_x pi(x+u)/pi(x), u in [0, s]."""

    mode: str  # "closed-form" | "numeric-limit"
    s: float
    fn: Callable[[float], float]

    def __call__(self, u: float) -> float:
        if u < 0:
            raise ValueError("tail ratio is defined on [0, s]; use reflected() below zero")
        return float(min(1.0, max(0.0, self.fn(u))))

    def reflected(self, u: float) -> float:
        """Extension to negative u via tau(-u) = 1/tau(u), with 1/0 = +inf."""
        if u >= 0:
            return self(u)
        v = self(-u)
        return math.inf if v == 0.0 else 1.0 / v


class DensityModel:
    """Positive continuous (possibly unnormalized) target density on R."""

    def __init__(self, family: str, scale: float = 1.0, source: Optional[str] = None):
        if family not in ("laplace", "gauss", "expr"):
            raise ModelError(f"unknown target family {family!r}")
        if scale <= 0:
            raise ModelError("scale must be positive")
        if family == "expr":
            if not source:
                raise ModelError("expr target requires an expression")
            self._ast = exprlang.parse(source, "x")
        else:
            self._ast = None
        self.family = family
        self.scale = float(scale)
        self.source = source

    # -- constructors -------------------------------------------------
    @classmethod
    def laplace(cls, scale: float = 1.0) -> "DensityModel":
        return cls("laplace", scale)

    @classmethod
    def gauss(cls, scale: float = 1.0) -> "DensityModel":
        return cls("gauss", scale)

    @classmethod
    def from_expression(cls, source: str) -> "DensityModel":
        return cls("expr", 1.0, source)

    # -- evaluation ---------------------------------------------------
    def log_pdf(self, x):
        """log pi(x); stable in the far tails for the built-in families.
        Accepts scalars or ndarrays."""
        if self.family == "laplace":
            if isinstance(x, np.ndarray):
                return -np.abs(x / self.scale) - (_LOG_2 + math.log(self.scale))
            return -abs(x / self.scale) - (_LOG_2 + math.log(self.scale))
        if self.family == "gauss":
            if isinstance(x, np.ndarray):
                return -0.5 * (x / self.scale) ** 2 - (_LOG_SQRT_2PI + math.log(self.scale))
            return -0.5 * (x / self.scale) ** 2 - (_LOG_SQRT_2PI + math.log(self.scale))
        if isinstance(x, np.ndarray):
            vals = exprlang.evaluate_array(self._ast, x)
            if np.any(vals <= 0.0):
                bad = float(np.asarray(x, dtype=float)[vals <= 0.0].flat[0])
                raise ModelError(f"target density is not positive at x={bad}")
            return np.log(vals)
        v = exprlang.evaluate(self._ast, float(x))
        if v <= 0.0:
            raise ModelError(f"target density is not positive at x={x}")
        return math.log(v)

    def pdf(self, x):
        if isinstance(x, np.ndarray):
            return np.exp(self.log_pdf(x))
        return math.exp(self.log_pdf(x))

    @property
    def is_builtin(self) -> bool:
        return self.family in ("laplace", "gauss")

    def cdf(self, x: float) -> float:
        """Distribution function; built-in families only (used by the
        sampler's KS diagnostic)."""
        z = x / self.scale
        if self.family == "laplace":
            return 0.5 * math.exp(z) if z < 0 else 1.0 - 0.5 * math.exp(-z)
        if self.family == "gauss":
            return 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))
        raise ModelError("cdf is only available for built-in families")

    def tail_ratio(self, s: float) -> Optional[TailRatio]:
        """Closed-form tau when the family admits one, else None."""
        if self.family == "laplace":
            scale = self.scale
            return TailRatio("closed-form", s, lambda u: math.exp(-u / scale))
        if self.family == "gauss":
            return TailRatio("closed-form", s, lambda u: 1.0 if u == 0.0 else 0.0)
        return None

    def __repr__(self):
        if self.family == "expr":
            return f"DensityModel(expr={self.source!r})"
        return f"DensityModel({self.family}, scale={self.scale})"


def log_ratio(target: DensityModel, x, y):
    """log pi(y) - log pi(x), computed in the log domain (the only way the
    target enters the accept/reject kernel)."""
    return target.log_pdf(y) - target.log_pdf(x)


class ProposalModel:
    """Finite-range random-walk proposal Q(x, dy) = shape(y - x) dy.

    ``shape`` vanishes outside [-s, s] and integrates to one.  Custom
    shapes must declare s explicitly; the constructor verifies the
    declared range, the normalization, and that the declared sup of the
    shape actually dominates it (the sampler's rejection box depends on
    that).
    """

    _VERIFY_POINTS = 50

    def __init__(
        self,
        family: str,
        s: float = 1.0,
        source: Optional[str] = None,
        sup_shape: Optional[float] = None,
    ):
        if family not in ("triangular", "uniform", "epanechnikov", "expr"):
            raise ModelError(f"unknown proposal family {family!r}")
        if s <= 0:
            raise ModelError("proposal range s must be positive")
        self.family = family
        self.s = float(s)
        self.source = source
        if family == "expr":
            if not source:
                raise ModelError("expr proposal requires an expression")
            self._ast = exprlang.parse(source, "u")
        else:
            self._ast = None

        self._validate_range()
        self._validate_normalization()
        self.symmetric = self._check_symmetry()
        self.sup_shape = self._resolve_sup(sup_shape)
        self._warn_if_vanishing_inside()

    # -- constructors -------------------------------------------------
    @classmethod
    def triangular(cls, s: float = 1.0) -> "ProposalModel":
        return cls("triangular", s)

    @classmethod
    def uniform(cls, s: float = 1.0) -> "ProposalModel":
        return cls("uniform", s)

    @classmethod
    def epanechnikov(cls, s: float = 1.0) -> "ProposalModel":
        return cls("epanechnikov", s)

    @classmethod
    def from_expression(cls, source: str, s: float, sup_shape: Optional[float] = None) -> "ProposalModel":
        return cls("expr", s, source, sup_shape)

    # -- evaluation ---------------------------------------------------
    def shape(self, u):
        """Proposal increment density; zero outside [-s, s].  Accepts
        scalars or ndarrays."""
        s = self.s
        if isinstance(u, np.ndarray):
            u = np.asarray(u, dtype=float)
            inside = np.abs(u) <= s
            if self.family == "triangular":
                out = np.where(inside, (1.0 - np.abs(u) / s) / s, 0.0)
            elif self.family == "uniform":
                out = np.where(inside, 1.0 / (2.0 * s), 0.0)
            elif self.family == "epanechnikov":
                out = np.where(inside, 0.75 * (1.0 - (u / s) ** 2) / s, 0.0)
            else:
                out = np.zeros_like(u)
                if np.any(inside):
                    out[inside] = exprlang.evaluate_array(self._ast, u[inside])
            return out
        u = float(u)
        if abs(u) > s:
            return 0.0
        if self.family == "triangular":
            return (1.0 - abs(u) / s) / s
        if self.family == "uniform":
            return 1.0 / (2.0 * s)
        if self.family == "epanechnikov":
            return 0.75 * (1.0 - (u / s) ** 2) / s
        return exprlang.evaluate(self._ast, u)

    def log_shape(self, u):
        """log shape(u); -inf outside the range or where the shape vanishes."""
        v = self.shape(u)
        if isinstance(v, np.ndarray):
            with np.errstate(divide="ignore"):
                return np.log(v)
        return math.log(v) if v > 0.0 else -math.inf

    # -- construction-time verification -------------------------------
    def _validate_range(self):
        if self.family != "expr":
            return
        us = np.linspace(self.s * 1.0001, 2.0 * self.s, self._VERIFY_POINTS)
        for sign in (1.0, -1.0):
            vals = exprlang.evaluate_array(self._ast, sign * us)
            if np.any(np.abs(vals) > 0.0):
                bad = float((sign * us)[np.abs(vals) > 0.0][0])
                raise ModelError(
                    f"declared range s={self.s} is wrong: shape({bad}) != 0; "
                    "custom shapes must vanish outside [-s, s]"
                )
        inside = np.linspace(-self.s, self.s, 401)
        if np.any(self.shape(inside) < 0.0):
            raise ModelError("proposal shape must be nonnegative on [-s, s]")

    def _validate_normalization(self):
        res = adaptive_simpson(
            lambda u: self.shape(u),
            -self.s,
            self.s,
            AdaptiveSimpsonRule(abs_tol=1e-12, rel_tol=1e-12),
            breakpoints=(0.0,),
        )
        if abs(res.value - 1.0) > 1e-6:
            raise ModelError(
                f"proposal shape integrates to {res.value:.8f}, not 1; "
                "supply a normalized shape"
            )

    def _check_symmetry(self) -> bool:
        if self.family != "expr":
            return True
        us = np.linspace(0.0, self.s, 101)
        return bool(np.max(np.abs(self.shape(us) - self.shape(-us))) <= 1e-12)

    def _resolve_sup(self, declared: Optional[float]) -> float:
        scan = sup_scan(
            lambda u: self.shape(u),
            -self.s,
            self.s,
            SupScanConfig(coarse_steps=1024, tol_x=1e-10),
        )
        if declared is None:
            return scan.value
        if declared < scan.value * (1.0 - 1e-12):
            raise ModelError(
                f"declared sup {declared} is below the observed shape maximum "
                f"{scan.value}; the rejection-sampling box must dominate"
            )
        return float(declared)

    def _warn_if_vanishing_inside(self):
        us = np.linspace(-self.s * 0.98, self.s * 0.98, 101)
        if np.any(self.shape(us) == 0.0):
            warnings.warn(
                "proposal shape vanishes inside (-s, s); the asymptotic "
                "(limit) bound assumes a positive shape there",
                stacklevel=3,
            )

    def __repr__(self):
        if self.family == "expr":
            return f"ProposalModel(expr={self.source!r}, s={self.s})"
        return f"ProposalModel({self.family}, s={self.s})"
