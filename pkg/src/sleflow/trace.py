"""Trace points and uniformising-map evaluation by backward composition.

The time-t hull map is inverted one elementary slit at a time: each
inverse step takes u to sqrt(u^2 - 4 dt) (upper-half-plane branch) and
then adds the driving increment of that step.  The tip w = 0 lies in the
exact image of every elementary step (0 maps to 2i sqrt(dt)), so trace
points need no regularisation.  Evaluations that pass within the
branch-cut guard band are flagged, not rejected.

Evaluating at many w for one time index amortises the O(k) chain over
the batch; there is no cross-k cache, so a full trace costs O(N^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import io as _io
from ._kernels import impl as _K
from .loewner import DrivingPath

# allowed distortion in the dyadic increment diagnostic; a Koebe-type
# comparison makes |fhat(2iv) - fhat(iv)| and v|fhat'(iv)| comparable
C_KOEBE = 3.0


@dataclass(frozen=True)
class Trace:
    """Tip samples gamma(t_k) for k = 0..n, with branch-guard flags."""

    times: np.ndarray
    points: np.ndarray
    flags: np.ndarray

    def __post_init__(self):
        if self.points[0] != 0.0:
            raise ValueError("trace must start at 0")
        if float(self.points.imag.min(initial=0.0)) < 0.0:
            raise ValueError("trace left the closed upper half-plane")

    @property
    def max_jump(self) -> float:
        """Largest increment between consecutive samples; the sampling
        resolution of the trace."""
        return float(np.abs(np.diff(self.points)).max(initial=0.0))

    def to_csv(self, file) -> None:
        _io.write_path_csv(file, self.times, self.points)


def compute_trace(driving: DrivingPath) -> Trace:
    re, im, flags = _K.trace_chain(driving.dxi, driving.dt)
    pts = np.empty(driving.n_steps + 1, complex)
    pts.real = re + float(driving.xi[0])
    pts.imag = im
    return Trace(times=driving.times, points=pts, flags=flags.astype(bool))


def _check_index(driving: DrivingPath, k: int) -> int:
    if not 0 <= k <= driving.n_steps:
        raise ValueError(f"t_index must lie in [0, {driving.n_steps}], got {k}")
    return int(k)


def fhat_batch(driving: DrivingPath, k: int, ws):
    """Evaluate the inverse chain and its derivative modulus at a batch
    of points.

    Returns (values, log_derivs, flags).  values[i] is the image of
    ws[i] under the k-step inverse; exp(log_derivs[i]) is the modulus of
    its derivative (-inf at the tip); flags[i] marks a pass through the
    branch-cut guard band.
    """
    k = _check_index(driving, k)
    ws = np.asarray(ws, dtype=complex)
    if np.any(ws.imag < 0.0) or np.any((ws.imag == 0.0) & (ws != 0.0)):
        raise ValueError("evaluation points need Im w > 0 (or w = 0 for the tip)")
    ur, ui, logd, flags = _K.fhat_apply(
        driving.dxi, driving.dt, k,
        np.ascontiguousarray(ws.real), np.ascontiguousarray(ws.imag),
    )
    vals = np.empty(ws.shape, complex)
    vals.real = ur + float(driving.xi[0])
    vals.imag = ui
    return vals, logd, flags.astype(bool)


def fhat_eval(driving: DrivingPath, k: int, w: complex) -> complex:
    """Image of w under the time-(k dt) inverse map, tip allowed (w = 0)."""
    vals, _, _ = fhat_batch(driving, k, [w])
    return complex(vals[0])


def trace_point(driving: DrivingPath, k: int) -> complex:
    """gamma(k dt): the inverse chain applied to the exact tip w = 0."""
    return fhat_eval(driving, k, 0.0)


def fhat_deriv(driving: DrivingPath, k: int, w: complex) -> float:
    """Derivative modulus of the inverse map at w, Im w > 0 required."""
    if complex(w).imag <= 0.0:
        raise ValueError(f"derivative needs Im w > 0, got {w}")
    _, logd, _ = fhat_batch(driving, k, [w])
    return math.exp(float(logd[0]))


def schwarz_envelope(t: float, v: float) -> float:
    """Upper bound sqrt(v^2 + 4t)/v for the derivative modulus at iv.

    Im fhat_t(iv) <= sqrt(v^2 + 4t) since the hull has capacity 2t, and
    the half-plane Schwarz lemma bounds the derivative by Im fhat / v.
    """
    if v <= 0.0:
        raise ValueError(f"v must be > 0, got {v}")
    return math.sqrt(v * v + 4.0 * t) / v


def dyadic_increment_bound_check(driving: DrivingPath, k: int, v: float) -> float:
    """Ratio |fhat(2iv) - fhat(iv)| / (v |fhat'(iv)|), v in (0, 1].

    The denominator is the conformal radius of the image point, so the
    ratio stays below a distortion constant (C_KOEBE) at every scale.
    """
    if not 0.0 < v <= 1.0:
        raise ValueError(f"v must lie in (0, 1], got {v}")
    vals, logd, _ = fhat_batch(driving, k, [1j * v, 2j * v])
    num = abs(complex(vals[1]) - complex(vals[0]))
    return num / (v * math.exp(float(logd[0])))


def deriv_scan(driving: DrivingPath, k: int, ws):
    """Rows (t, u, v, deriv, flagged) for the evaluation points ws."""
    k = _check_index(driving, k)
    ws = np.asarray(ws, dtype=complex)
    _, logd, flags = fhat_batch(driving, k, ws)
    t = k * driving.dt
    return [
        (t, float(w.real), float(w.imag), math.exp(float(ld)), bool(fl))
        for w, ld, fl in zip(ws, logd, flags)
    ]


def deriv_scan_csv(file, driving: DrivingPath, k: int, ws) -> None:
    _io.write_deriv_csv(file, deriv_scan(driving, k, ws))
