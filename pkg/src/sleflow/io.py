"""CSV interchange: paths, driving functions, flow snapshots, radial
records, witness events, and lattice-sum tables.

All writers emit a header row and round-trippable floats; readers demand
the exact header.  Rows are written in a deterministic order regardless
of how the producing computation was batched.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

PATH_HEADER = ["t", "re", "im"]
DRIVING_HEADER = ["t", "xi"]
SNAPSHOT_HEADER = ["re0", "im0", "X", "Y", "log_gprime", "status"]
RADIAL_HEADER = ["s", "sigma", "theta", "Y", "clock"]
WITNESS_HEADER = ["t", "v", "r", "z_re", "z_im", "gprime", "found"]
GRIDSUM_HEADER = ["h", "a", "zeta", "sum", "predicted"]
DERIV_HEADER = ["t", "u", "v", "deriv", "flagged"]
VARIATION_HEADER = ["n", "p", "q", "value"]
MODULUS_HEADER = ["n", "alpha", "beta", "sup"]
LAG_HEADER = ["seed", "delta", "sup"]
SUPSCALE_HEADER = ["seed", "v", "sup"]
SUITE_HEADER = ["metric", "value", "lo", "hi", "ok"]
EXPONENT_HEADER = ["kappa", "d", "alpha", "beta", "p"]


def _read_rows(file, expected_header):
    with open(file, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != expected_header:
        raise ValueError(
            f"{file}: expected header {expected_header}, got {rows[0] if rows else 'empty file'}"
        )
    return rows[1:]


def _write_rows(file, header, rows):
    Path(file).parent.mkdir(parents=True, exist_ok=True)
    with open(file, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def write_path_csv(file, times, points) -> None:
    points = np.asarray(points, dtype=complex)
    rows = [
        [repr(float(t)), repr(float(z.real)), repr(float(z.imag))]
        for t, z in zip(times, points)
    ]
    _write_rows(file, PATH_HEADER, rows)


def read_path_csv(file):
    rows = _read_rows(file, PATH_HEADER)
    times = np.array([float(r[0]) for r in rows])
    points = np.array([complex(float(r[1]), float(r[2])) for r in rows])
    return times, points


def write_driving_csv(file, times, xi) -> None:
    rows = [[repr(float(t)), repr(float(x))] for t, x in zip(times, xi)]
    _write_rows(file, DRIVING_HEADER, rows)


def read_driving_csv(file):
    rows = _read_rows(file, DRIVING_HEADER)
    times = np.array([float(r[0]) for r in rows])
    xi = np.array([float(r[1]) for r in rows])
    return times, xi


def write_snapshot_csv(file, points) -> None:
    """points: iterable of FlowPoint-like objects."""
    rows = []
    for pt in points:
        status = "alive" if pt.t_swallow is None else f"swallowed({pt.t_swallow!r})"
        rows.append(
            [
                repr(float(pt.z0.real)),
                repr(float(pt.z0.imag)),
                repr(float(pt.X)),
                repr(float(pt.Y)),
                repr(float(pt.log_gprime)),
                status,
            ]
        )
    _write_rows(file, SNAPSHOT_HEADER, rows)


def write_radial_csv(file, s_values, sigma, theta_hat, y_sigma, clock_int) -> None:
    rows = [
        [repr(float(a)), repr(float(b)), repr(float(c)), repr(float(d)), repr(float(e))]
        for a, b, c, d, e in zip(s_values, sigma, theta_hat, y_sigma, clock_int)
    ]
    _write_rows(file, RADIAL_HEADER, rows)


def write_witness_csv(file, events) -> None:
    """events: iterables of (t, v, r, z, gprime, found)."""
    rows = []
    for t, v, r, z, gp, found in events:
        rows.append(
            [
                repr(float(t)),
                repr(float(v)),
                repr(float(r)),
                repr(float(z.real)) if z is not None else "",
                repr(float(z.imag)) if z is not None else "",
                repr(float(gp)) if gp is not None else "",
                "1" if found else "0",
            ]
        )
    _write_rows(file, WITNESS_HEADER, rows)


def write_deriv_csv(file, records) -> None:
    """records: iterables of (t, u, v, deriv, flagged)."""
    rows = [
        [repr(float(t)), repr(float(u)), repr(float(v)), repr(float(d)),
         "1" if f else "0"]
        for t, u, v, d, f in records
    ]
    _write_rows(file, DERIV_HEADER, rows)


def write_gridsum_csv(file, records) -> None:
    """records: iterables of (h, a, zeta, total, predicted)."""
    rows = [
        [repr(float(h)), repr(float(a)), repr(float(z)), repr(float(s)), repr(float(p))]
        for h, a, z, s, p in records
    ]
    _write_rows(file, GRIDSUM_HEADER, rows)


def write_variation_csv(file, records) -> None:
    """records: iterables of (n, p, q, value)."""
    rows = [
        [str(int(n)), repr(float(p)), repr(float(q)), repr(float(v))]
        for n, p, q, v in records
    ]
    _write_rows(file, VARIATION_HEADER, rows)


def write_modulus_csv(file, records) -> None:
    """records: iterables of (n, alpha, beta, sup)."""
    rows = [
        [str(int(n)), repr(float(a)), repr(float(b)), repr(float(s))]
        for n, a, b, s in records
    ]
    _write_rows(file, MODULUS_HEADER, rows)


def write_lag_csv(file, records) -> None:
    """records: iterables of (seed, delta, sup)."""
    rows = [
        [str(int(s)), repr(float(d)), repr(float(m))] for s, d, m in records
    ]
    _write_rows(file, LAG_HEADER, rows)


def write_supscale_csv(file, records) -> None:
    """records: iterables of (seed, v, sup)."""
    rows = [
        [str(int(s)), repr(float(v)), repr(float(m))] for s, v, m in records
    ]
    _write_rows(file, SUPSCALE_HEADER, rows)


def write_suite_csv(file, records) -> None:
    """records: iterables of (metric, value, lo, hi, ok)."""
    rows = [
        [str(m), repr(float(v)), repr(float(lo)), repr(float(hi)),
         "1" if ok else "0"]
        for m, v, lo, hi, ok in records
    ]
    _write_rows(file, SUITE_HEADER, rows)


def write_exponent_csv(file, records) -> None:
    """records: iterables of (kappa, d, alpha, beta, p)."""
    rows = [
        [repr(float(k)), repr(float(d)), repr(float(a)), repr(float(b)),
         repr(float(p))]
        for k, d, a, b, p in records
    ]
    _write_rows(file, EXPONENT_HEADER, rows)
