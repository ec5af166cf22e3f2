"""Convolution algebra on fixed-horizon real signals.

Signals are 1-D float64 numpy arrays of length T (the horizon). Every
convolution here returns exactly T entries: linear convolutions are
truncated, circular ones wrap indices modulo T.
"""

import csv
import io
import json
from pathlib import Path

import numpy as np

from ._backend import kernels
from .errors import DimensionError, DomainError, RefusalError

#: Largest horizon for which dense T x T matrices are materialised.
DENSE_CAP = 4096

#: Horizon from which ``method="auto"`` switches to the FFT path.
FFT_THRESHOLD = 64


def as_signal(values, name="signal"):
    """Validate ``values`` and return a read-only float64 copy."""
    arr = np.array(values, dtype=np.float64, copy=True)
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.shape[0] < 1:
        raise DimensionError(f"{name} must have length >= 1")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains NaN or infinite entries")
    arr.setflags(write=False)
    return arr


def _pair(u, v):
    u = as_signal(u, "u")
    v = as_signal(v, "v")
    if u.shape != v.shape:
        raise DimensionError(f"length mismatch: {u.shape[0]} vs {v.shape[0]}")
    return u, v


def _use_fft(n, method):
    if method == "auto":
        return n >= FFT_THRESHOLD
    if method not in ("direct", "fft"):
        raise DomainError(f"unknown method {method!r}")
    return method == "fft"


def linear_convolve(u, v, method="auto"):
    """Truncated linear convolution ``(u * v)_t = sum_{s<=t} u_s v_{t-s}``."""
    u, v = _pair(u, v)
    n = u.shape[0]
    if _use_fft(n, method):
        m = 2 * n
        return np.fft.irfft(np.fft.rfft(u, m) * np.fft.rfft(v, m), m)[:n]
    return kernels.conv_linear(u, v)


def circular_convolve(u, v, method="auto"):
    """Circular convolution ``sum_s u_s v_{(t-s) mod T}``."""
    u, v = _pair(u, v)
    n = u.shape[0]
    if _use_fft(n, method):
        return np.fft.irfft(np.fft.rfft(u) * np.fft.rfft(v), n)
    return kernels.conv_circular(u, v)


def convolve(u, v, circular, method="auto"):
    return circular_convolve(u, v, method) if circular else linear_convolve(u, v, method)


def correlate_linear(q, v, method="auto"):
    """Apply the Toeplitz adjoint: ``(T_q^T v)_i = sum_s q_s v_{i+s}``."""
    q, v = _pair(q, v)
    if _use_fft(q.shape[0], method):
        return linear_convolve(q, v[::-1], "fft")[::-1].copy()
    return kernels.corr_linear(q, v)


def correlate_circular(q, v, method="auto"):
    """Apply the circulant adjoint: ``(C_q^T v)_i = sum_s q_s v_{(i+s) mod T}``."""
    q, v = _pair(q, v)
    if _use_fft(q.shape[0], method):
        return circular_convolve(np.roll(q[::-1], 1), v, "fft")
    return kernels.corr_circular(q, v)


def correlate(q, v, circular, method="auto"):
    return correlate_circular(q, v, method) if circular else correlate_linear(q, v, method)


def circular_extension(v, t):
    """Return ``v_{t mod T}``; ``t`` may be negative or an integer array."""
    v = np.asarray(v)
    return v[np.mod(t, v.shape[0])]


def _check_cap(n, cap):
    if n > cap:
        raise RefusalError(
            f"refusing to build a dense {n}x{n} matrix (cap {cap}); use the operator-form routines"
        )


def build_toeplitz(u, cap=DENSE_CAP):
    """Lower-triangular Toeplitz matrix with first column ``u``."""
    u = as_signal(u, "u")
    n = u.shape[0]
    _check_cap(n, cap)
    lag = np.arange(n)[:, None] - np.arange(n)[None, :]
    return np.where(lag >= 0, u[np.clip(lag, 0, None)], 0.0)


def build_circulant(u, cap=DENSE_CAP):
    """Circulant matrix with entry ``(t, s) = u_{(t-s) mod T}``."""
    u = as_signal(u, "u")
    n = u.shape[0]
    _check_cap(n, cap)
    lag = np.arange(n)[:, None] - np.arange(n)[None, :]
    return u[np.mod(lag, n)]


def toeplitz_adjoint(m):
    """Map a square matrix to ``s -> sum_{t>=s} M_{t, t-s}`` (sums of subdiagonals)."""
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    n = m.shape[0]
    return np.array([np.trace(m, offset=-s) for s in range(n)])


def load_signal(path):
    """Read a signal from a JSON array or a one-column CSV file."""
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".json" or text.lstrip().startswith("["):
        return as_signal(json.loads(text), path.name)
    values = []
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or not row[0].strip():
            continue
        try:
            values.append(float(row[0]))
        except ValueError:
            if lineno == 1:  # header
                continue
            raise DomainError(f"{path}:{lineno}: not a number: {row[0]!r}") from None
    return as_signal(values, path.name)


def dump_signal(values, path):
    """Write a signal as JSON (``.json``) or one-column CSV (anything else)."""
    path = Path(path)
    values = as_signal(values)
    if path.suffix.lower() == ".json":
        path.write_text(json.dumps([float(v) for v in values]))
    else:
        path.write_text("".join(f"{float(v)!r}\n" for v in values))
