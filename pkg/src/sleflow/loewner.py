"""Forward chordal Loewner flow under a sampled driving function.

Discretisation: each step applies the exact vertical-slit elementary map
in the coordinate relative to the driving, with the driving increment as
a pre-shift (the zipper scheme).  Every step is an exact Loewner map, so
the composed hulls are genuine hulls and capacity adds exactly; the only
scheme error is the piecewise-constant reading of the driving, O(sqrt(dt))
at trace level.

Tracked state per point: relative coordinate (X, Y), the chain-rule
accumulator for log|g'|, and log of the conformal radius, which the slit
step updates exactly via log Y - log|g'|.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import io as _io
from ._kernels import impl as _K


def _uhp_sqrt(cr: float, ci: float) -> tuple[float, float]:
    """Principal sqrt of cr + i ci with image in the closed upper half-plane.

    Stabilised real arithmetic: the smaller component comes from a divide,
    never a subtraction."""
    r = math.sqrt(cr * cr + ci * ci)
    if cr >= 0.0:
        a = math.sqrt(0.5 * (r + cr))
        b = abs(ci) / (2.0 * a) if a > 0.0 else 0.0
    else:
        b = math.sqrt(0.5 * (r - cr))
        a = abs(ci) / (2.0 * b) if b > 0.0 else 0.0
    if ci < 0.0:
        a = -a
    return a, b


@dataclass(frozen=True)
class DrivingPath:
    """Uniformly sampled driving function on a capacity-time grid.

    xi has length n_steps+1 with xi[0] = 0 for the brownian and samples
    generators; the constant generator keeps its level at index 0 as well,
    which is documented as the one relaxation of that invariant.
    """

    dt: float
    xi: np.ndarray
    generator: str = "samples"
    kappa: float | None = None

    def __post_init__(self):
        xi = np.ascontiguousarray(self.xi, dtype=float)
        if self.dt <= 0.0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if xi.ndim != 1 or xi.shape[0] < 2:
            raise ValueError("xi must be a 1-d array of length >= 2")
        if not self.generator.startswith("constant") and xi[0] != 0.0:
            raise ValueError(f"xi[0] must be 0, got {xi[0]}")
        object.__setattr__(self, "xi", xi)

    @property
    def n_steps(self) -> int:
        return int(self.xi.shape[0]) - 1

    @property
    def total_time(self) -> float:
        return self.n_steps * self.dt

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt

    @cached_property
    def dxi(self) -> np.ndarray:
        """Increments aligned so dxi[j] = xi[j] - xi[j-1], dxi[0] = 0."""
        out = np.empty_like(self.xi)
        out[0] = 0.0
        np.subtract(self.xi[1:], self.xi[:-1], out=out[1:])
        return out

    @classmethod
    def brownian(cls, kappa: float, T: float, n_steps: int | None = None,
                 seed: int = 0) -> "DrivingPath":
        """xi = sqrt(kappa) B_t on [0, T]; default mesh dt = 1e-4 T."""
        if kappa < 0.0:
            raise ValueError(f"kappa must be >= 0, got {kappa}")
        if n_steps is None:
            n_steps = 10_000
        dt = T / n_steps
        rs = np.random.default_rng(seed)
        xi = np.empty(n_steps + 1)
        xi[0] = 0.0
        np.cumsum(rs.normal(0.0, math.sqrt(kappa * dt), n_steps), out=xi[1:])
        return cls(dt=dt, xi=xi, generator=f"brownian({kappa},{seed})", kappa=kappa)

    @classmethod
    def constant(cls, c: float, T: float, n_steps: int = 10_000) -> "DrivingPath":
        return cls(dt=T / n_steps, xi=np.full(n_steps + 1, float(c)),
                   generator=f"constant({c})")

    @classmethod
    def from_samples(cls, times: np.ndarray, xi: np.ndarray) -> "DrivingPath":
        times = np.asarray(times, dtype=float)
        dts = np.diff(times)
        if times[0] != 0.0 or not np.all(dts > 0.0):
            raise ValueError("times must start at 0 and increase")
        dt = dts[0]
        if not np.all(np.abs(dts - dt) <= 1e-9 * dt):
            raise ValueError("samples must be uniformly spaced")
        return cls(dt=float(dt), xi=np.asarray(xi, dtype=float), generator="samples")

    @classmethod
    def from_csv(cls, file) -> "DrivingPath":
        times, xi = _io.read_driving_csv(file)
        return cls.from_samples(times, xi)

    def to_csv(self, file) -> None:
        _io.write_driving_csv(file, self.times, self.xi)


class SwallowedPointError(ValueError):
    """Raised when an operation requires a point that is still alive."""


@dataclass
class FlowPoint:
    """One tracked point of the forward flow.

    X and Y are coordinates relative to the current driving value:
    X + iY = g_t(z0) - xi_t.  Y alone is Im g_t(z0).
    """

    z0: complex
    X: float
    Y: float
    log_gprime: float = 0.0
    log_upsilon: float = 0.0
    t_swallow: float | None = None
    eps_swallow: float = 0.0

    @property
    def status(self) -> str:
        if self.t_swallow is None:
            return "alive"
        return f"swallowed({self.t_swallow!r})"

    @property
    def alive(self) -> bool:
        return self.t_swallow is None


def flow_point(z0: complex, xi0: float = 0.0) -> FlowPoint:
    """Fresh tracked point; the swallowing threshold is relative to Im z0."""
    z0 = complex(z0)
    if z0.imag <= 0.0:
        raise ValueError(f"tracked points need Im z0 > 0, got {z0}")
    return FlowPoint(
        z0=z0,
        X=z0.real - xi0,
        Y=z0.imag,
        log_gprime=0.0,
        log_upsilon=math.log(z0.imag),
        eps_swallow=1e-12 * z0.imag,
    )


def advance_flow(points, xi_old: float, xi_new: float, dt: float,
                 t_new: float | None = None):
    """One elementary slit step for every alive point, in place.

    W = (X + iY) - (xi_new - xi_old); the new relative coordinate is
    sqrt(W^2 + 4 dt) in the closed upper half-plane; log|g'| gains
    log|W| - log|new|; a point whose Y falls below its threshold is
    marked swallowed (ties at the branch cut land there too).
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be > 0, got {dt}")
    d = xi_new - xi_old
    for pt in points:
        if not pt.alive:
            continue
        wr = pt.X - d
        wi = pt.Y
        a, b = _uhp_sqrt(wr * wr - wi * wi + 4.0 * dt, 2.0 * wr * wi)
        w2 = wr * wr + wi * wi
        z2 = a * a + b * b
        pt.X = a
        pt.Y = b
        if w2 > 0.0 and z2 > 0.0:
            pt.log_gprime += 0.5 * math.log(w2 / z2)
        if b < pt.eps_swallow or z2 == 0.0 or w2 == 0.0:
            pt.t_swallow = t_new if t_new is not None else math.nan
            pt.log_upsilon = -math.inf
        else:
            pt.log_upsilon = math.log(b) - pt.log_gprime
    return points


def run_flow(driving: DrivingPath, z0s, k: int | None = None):
    """Track a batch of points through steps 1..k of the driving path."""
    if k is None:
        k = driving.n_steps
    if not 0 <= k <= driving.n_steps:
        raise ValueError(f"k must lie in [0, {driving.n_steps}], got {k}")
    z0s = np.asarray(z0s, dtype=complex)
    xi0 = float(driving.xi[0])
    x0 = np.ascontiguousarray(z0s.real - xi0)
    y0 = np.ascontiguousarray(z0s.imag)
    if np.any(y0 <= 0.0):
        raise ValueError("tracked points need Im z0 > 0")
    eps = 1e-12 * y0
    X, Y, lg, ksw = _K.flow_march(x0, y0, driving.dxi, driving.dt, k, eps)
    out = []
    for i, z in enumerate(z0s):
        pt = FlowPoint(
            z0=complex(z), X=float(X[i]), Y=float(Y[i]),
            log_gprime=float(lg[i]), eps_swallow=float(eps[i]),
        )
        if ksw[i] >= 0:
            pt.t_swallow = float(ksw[i] * driving.dt)
            pt.log_upsilon = -math.inf
        else:
            pt.log_upsilon = math.log(pt.Y) - pt.log_gprime
        out.append(pt)
    return out


@dataclass(frozen=True)
class FlowHistory:
    """Per-step record of one tracked point: state and log|g'| at every
    step index up to swallowing (or the horizon).

    X[k] + iY[k] = g_{k dt}(z0) - xi_k, as in FlowPoint.
    """

    driving: DrivingPath
    z0: complex
    X: np.ndarray
    Y: np.ndarray
    log_gprime: np.ndarray
    n_valid: int
    k_swallow: int

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_valid) * self.driving.dt

    @property
    def t_swallow(self) -> float | None:
        if self.k_swallow < 0:
            return None
        return self.k_swallow * self.driving.dt

    @property
    def last_alive(self) -> int:
        """Largest step index with the point still alive and recorded."""
        if self.k_swallow < 0:
            return self.n_valid - 1
        # threshold swallowing records the terminal state, an exactly
        # singular step does not
        return min(self.k_swallow - 1, self.n_valid - 1)

    @property
    def log_upsilon(self) -> np.ndarray:
        v = self.n_valid
        return np.log(self.Y[:v]) - self.log_gprime[:v]


def track_flow(driving: DrivingPath, z0: complex) -> FlowHistory:
    z0 = complex(z0)
    if z0.imag <= 0.0:
        raise ValueError(f"tracked points need Im z0 > 0, got {z0}")
    eps = 1e-12 * z0.imag
    X, Y, lg, nvalid, ksw = _K.flow_history(
        z0.real - float(driving.xi[0]), z0.imag, driving.dxi, driving.dt, eps
    )
    return FlowHistory(
        driving=driving, z0=z0, X=X, Y=Y, log_gprime=lg,
        n_valid=int(nvalid), k_swallow=int(ksw),
    )


def log_gprime_direct(history: FlowHistory, k: int | None = None) -> float:
    """Trapezoid quadrature of -2 (X^2 - Y^2)/(X^2 + Y^2)^2 along the flow.

    Cross-checks the chain-rule accumulator; requires the point alive up
    to step k.
    """
    if k is None:
        k = history.last_alive
    if k > history.last_alive:
        if history.k_swallow < 0:
            raise ValueError(f"step {k} beyond recorded history ({history.n_valid} entries)")
        raise SwallowedPointError(
            f"point swallowed at t={history.t_swallow}; alive span ends at step {history.last_alive}"
        )
    if k == 0:
        return 0.0
    X = history.X[: k + 1]
    Y = history.Y[: k + 1]
    r2 = X * X + Y * Y
    integrand = -2.0 * (X * X - Y * Y) / (r2 * r2)
    return float(np.trapezoid(integrand, dx=history.driving.dt))


def conformal_radius(point: FlowPoint) -> float:
    """Upsilon_t(z) = exp(log_upsilon); Upsilon_0 = Im z0."""
    if not point.alive:
        raise SwallowedPointError(f"point swallowed at t={point.t_swallow}")
    return math.exp(point.log_upsilon)


def hcap_estimate(driving: DrivingPath, t_index: int | None = None, R: float = 1000.0) -> float:
    """Half-plane capacity from the hydrodynamic expansion at z = iR:
    Re((g_t(iR) - iR) * iR) = R (R - Im g_t(iR))."""
    if t_index is None:
        t_index = driving.n_steps
    if R <= 0.0:
        raise ValueError(f"R must be > 0, got {R}")
    X, Y, _, ksw = _K.flow_march(
        np.array([-float(driving.xi[0])]), np.array([R]),
        driving.dxi, driving.dt, t_index, np.array([1e-12 * R]),
    )
    if ksw[0] >= 0:
        raise ValueError(f"R={R} swallowed; far too small")
    im_g = float(Y[0])
    return R * (R - im_g)


def hcap_consistency(driving: DrivingPath, t_index: int,
                     R_pair=(100.0, 1000.0), tol: float = 0.05):
    """(estimate at the larger R, flag whether the two R values agree)."""
    lo = hcap_estimate(driving, t_index, min(R_pair))
    hi = hcap_estimate(driving, t_index, max(R_pair))
    scale = max(abs(hi), driving.dt)
    return hi, abs(hi - lo) <= tol * scale


@dataclass(frozen=True)
class HullReport:
    t: float
    hcap_est: float
    height_est: float
    diam_est: float


def hull_report(driving: DrivingPath, t_index: int | None = None, R: float = 1000.0) -> HullReport:
    """Capacity, height, and diameter estimates of the hull at step t_index.

    Height and diameter come from the sampled trace points (plus the
    driving's boundary interval), so they are sampling lower bounds.
    """
    if t_index is None:
        t_index = driving.n_steps
    sub = DrivingPath(
        dt=driving.dt, xi=driving.xi[: t_index + 1],
        generator=driving.generator, kappa=driving.kappa,
    ) if t_index < driving.n_steps else driving
    re, im, _ = _K.trace_chain(sub.dxi, sub.dt)
    re = re + float(driving.xi[0])
    height = float(im.max(initial=0.0))
    xs = np.concatenate((re, driving.xi[: t_index + 1]))
    ys = np.concatenate((im, np.zeros(t_index + 1)))
    # bounding-box diagonal; a sampling estimate of the diameter
    diam = math.hypot(float(xs.max() - xs.min()), float(ys.max()))
    return HullReport(
        t=t_index * driving.dt,
        hcap_est=hcap_estimate(driving, t_index, R),
        height_est=height,
        diam_est=diam,
    )


def snapshot_csv(file, points) -> None:
    _io.write_snapshot_csv(file, points)
