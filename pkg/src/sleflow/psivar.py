"""Gauge-function variation and modulus-of-continuity functionals.

The gauge family is psi(x) = x^p (log 1/x)^(-q) below a switch point x0,
extended above x0 so that psi^(1/p) continues along its tangent line; that
keeps psi convex, strictly increasing, and once-differentiable at x0 in
the psi^(1/p) scale.  For q = 0 the extension reproduces x^p exactly.

Variation values are suprema over increasing subsets of the sample
points, computed by dynamic programming; the modulus functional is a sup
of increment ratios against phi(t) = t^alpha (log* 1/t)^beta
ell(log* 1/t)^beta with ell(s) = (log* s)^(1+eps).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._kernels import impl as _K


def log_star(x: float) -> float:
    """max(log x, 1), defined for x > 0."""
    if x <= 0.0:
        raise ValueError(f"log_star requires x > 0, got {x}")
    return max(math.log(x), 1.0)


@dataclass(frozen=True)
class PsiSpec:
    """Parameters of the gauge psi_{p,q} with switch point x0."""

    p: float
    q: float = 0.0
    x0: float = 0.5

    def __post_init__(self):
        if self.p < 1.0:
            raise ValueError(f"p must be >= 1, got {self.p}")
        if self.q < 0.0:
            raise ValueError(f"q must be >= 0, got {self.q}")
        if not 0.0 < self.x0 < 1.0:
            raise ValueError(f"x0 must lie in (0,1), got {self.x0}")

    @property
    def lin_a(self) -> float:
        """psi(x0)^(1/p): the tangent-line value at the switch point."""
        l0 = -math.log(self.x0)
        return self.x0 * l0 ** (-self.q / self.p)

    @property
    def lin_b(self) -> float:
        """(psi^(1/p))'(x0): the tangent-line slope."""
        l0 = -math.log(self.x0)
        qp = self.q / self.p
        return l0 ** (-qp) * (1.0 + qp / l0)


def psi_eval(spec: PsiSpec, x: float) -> float:
    if x < 0.0:
        raise ValueError(f"psi_eval requires x >= 0, got {x}")
    if x == 0.0:
        return 0.0
    if x <= spec.x0:
        if spec.q == 0.0:
            return x ** spec.p
        return x ** spec.p * (-math.log(x)) ** (-spec.q)
    return (spec.lin_a + spec.lin_b * (x - spec.x0)) ** spec.p


def psi_inverse(spec: PsiSpec, y: float) -> float:
    """Inverse of the strictly increasing gauge, by bisection."""
    if y < 0.0:
        raise ValueError(f"psi_inverse requires y >= 0, got {y}")
    if y == 0.0:
        return 0.0
    hi = 1.0
    while psi_eval(spec, hi) < y:
        hi *= 2.0
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if psi_eval(spec, mid) < y:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def psi_upper_bound_check(spec: PsiSpec, x: float, y: float) -> float:
    """Ratio psi(xy) / [(xy)^p (log* 1/x)^(-q) (log* y)^q].

    Bounded-ratio diagnostic; returns nan when the denominator vanishes.
    """
    if x < 0.0 or y < 0.0:
        raise ValueError("psi_upper_bound_check requires x, y >= 0")
    xy = x * y
    if xy == 0.0:
        return math.nan
    denom = xy ** spec.p * log_star(1.0 / x) ** (-spec.q) * log_star(y) ** spec.q
    return psi_eval(spec, xy) / denom


@dataclass(frozen=True)
class ModulusSpec:
    """Parameters of phi(t) = t^alpha (log* 1/t)^beta ell(log* 1/t)^beta."""

    alpha: float
    beta: float = 0.0
    ell_epsilon: float = 0.1

    def __post_init__(self):
        if self.ell_epsilon <= 0.0:
            raise ValueError(f"ell_epsilon must be > 0, got {self.ell_epsilon}")

    def ell(self, s: float) -> float:
        return log_star(s) ** (1.0 + self.ell_epsilon)

    def phi(self, t: float) -> float:
        if t <= 0.0:
            raise ValueError(f"phi requires t > 0, got {t}")
        ls = log_star(1.0 / t)
        return t ** self.alpha * ls ** self.beta * self.ell(ls) ** self.beta


@dataclass(frozen=True)
class SampledPath:
    """A planar path sampled at strictly increasing times."""

    times: np.ndarray
    points: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        points = np.asarray(self.points, dtype=complex)
        if times.ndim != 1 or points.ndim != 1 or times.shape != points.shape:
            raise ValueError("times and points must be 1-d arrays of equal length")
        if times.shape[0] < 2:
            raise ValueError("a sampled path needs at least 2 samples")
        if not np.all(np.diff(times) > 0.0):
            raise ValueError("times must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "points", points)

    def __len__(self) -> int:
        return int(self.times.shape[0])


def psi_var_value(path: SampledPath, spec: PsiSpec, M: float) -> float:
    """Supremum of sum psi(|increment|/M) over increasing index subsets."""
    if M <= 0.0:
        raise ValueError(f"M must be > 0, got {M}")
    px = np.ascontiguousarray(path.points.real)
    py = np.ascontiguousarray(path.points.imag)
    return float(
        _K.psi_var_dp(px, py, 1.0 / M, spec.p, spec.q, spec.x0, spec.lin_a, spec.lin_b)
    )


def psi_var_constant(path: SampledPath, spec: PsiSpec, tol: float = 1e-6) -> float:
    """The M at which the subset supremum crosses 1, by bisection.

    The supremum is nonincreasing in M, so the crossing is unique.
    """
    if tol <= 0.0:
        raise ValueError(f"tol must be > 0, got {tol}")
    d = np.abs(np.diff(path.points))
    total = float(d.sum())
    if total == 0.0:
        return 0.0
    lo = float(d.max()) / psi_inverse(spec, 1.0)
    hi = total
    if hi <= lo:
        hi = lo * 2.0
    # the 1-variation end only brackets when psi(1) <= 1 (always true for
    # q = 0); expand geometrically otherwise
    while psi_var_value(path, spec, hi) > 1.0:
        hi *= 2.0
    while hi - lo > tol * lo:
        mid = 0.5 * (lo + hi)
        if psi_var_value(path, spec, mid) > 1.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def holder_ratio_sup(path: SampledPath, spec: ModulusSpec) -> float:
    """max over sampled pairs s < t of |x(t) - x(s)| / phi(t - s)."""
    times = path.times
    xs = np.ascontiguousarray(path.points.real)
    ys = np.ascontiguousarray(path.points.imag)
    gamma = (1.0 + spec.ell_epsilon) * spec.beta
    dts = np.diff(times)
    dt0 = dts[0]
    if np.all(np.abs(dts - dt0) <= 1e-12 * dt0):
        return float(_K.holder_sup(xs, ys, dt0, spec.alpha, spec.beta, gamma))
    # nonuniform grids take the generic pair scan
    sup2 = 0.0
    for j in range(1, len(times)):
        tt = times[j] - times[:j]
        l1 = np.maximum(-np.log(tt), 1.0)
        l2 = np.maximum(np.log(l1), 1.0)
        phi = tt ** spec.alpha * l1 ** spec.beta * l2 ** gamma
        d2 = np.abs(path.points[:j] - path.points[j]) ** 2
        m = float(np.max(d2 / (phi * phi)))
        if m > sup2:
            sup2 = m
    return math.sqrt(sup2)
