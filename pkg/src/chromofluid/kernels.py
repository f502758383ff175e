"""Hot inner loops, with a numba path and a pure-numpy fallback.

Set ``CHROMOFLUID_DISABLE_NUMBA=1`` before import to force the numpy path.
Both paths are always importable as ``numpy_*`` / ``numba_*`` so tests and the
benchmark can compare them directly; the unprefixed names are the selected
implementation.
"""

from __future__ import annotations

import os

import numpy as np

_DISABLED = os.environ.get("CHROMOFLUID_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes"}

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not _DISABLED


# ---------------------------------------------------------------------------
# pointwise Lie bracket over many points
#
# x, y: (n, P) real arrays; structure constants given in sparse form
# (idx_a, idx_b, idx_c, val) with [e_a, e_b] = sum val * e_c.


def numpy_bracket_points(idx_a, idx_b, idx_c, val, x, y):
    out = np.zeros_like(x)
    if val.size == 0:
        return out
    contrib = val[:, None] * x[idx_a] * y[idx_b]
    np.add.at(out, idx_c, contrib)
    return out


def numpy_fourier_eval(coef_re, coef_im, modes, base, points):
    # coef: (F, M); modes: (M, d) integer mode numbers; base: (d,) wavenumber
    # of mode 1 per axis; points: (P, d) -> (F, P)
    phase = points @ (modes * base).T  # (P, M)
    return coef_re @ np.cos(phase).T - coef_im @ np.sin(phase).T


if HAVE_NUMBA:

    @numba.njit(cache=True)
    def numba_bracket_points(idx_a, idx_b, idx_c, val, x, y):
        n, npts = x.shape
        out = np.zeros((n, npts))
        nnz = val.shape[0]
        for p in range(npts):
            for t in range(nnz):
                out[idx_c[t], p] += val[t] * x[idx_a[t], p] * y[idx_b[t], p]
        return out

    @numba.njit(cache=True)
    def numba_fourier_eval(coef_re, coef_im, modes, base, points):
        # exp(i k.x) factorizes over axes, so each point needs only one table
        # of exp(i m base_j x_j) per axis instead of one sin/cos per mode
        nf, nm = coef_re.shape
        npts, d = points.shape
        out = np.zeros((nf, npts))
        if nm == 0:
            return out
        lo = np.empty(d, np.int64)
        width = 0
        for i in range(d):
            lo[i] = modes[:, i].min()
            width = max(width, modes[:, i].max() - lo[i] + 1)
        tre = np.empty((d, width))
        tim = np.empty((d, width))
        cre = np.ascontiguousarray(coef_re.T)
        cim = np.ascontiguousarray(coef_im.T)
        acc = np.empty(nf)
        for p in range(npts):
            for i in range(d):
                for j in range(width):
                    ph = (lo[i] + j) * base[i] * points[p, i]
                    tre[i, j] = np.cos(ph)
                    tim[i, j] = np.sin(ph)
            acc[:] = 0.0
            for m in range(nm):
                cr = 1.0
                ci = 0.0
                for i in range(d):
                    j = modes[m, i] - lo[i]
                    a = cr * tre[i, j] - ci * tim[i, j]
                    ci = cr * tim[i, j] + ci * tre[i, j]
                    cr = a
                for f in range(nf):
                    acc[f] += cre[m, f] * cr - cim[m, f] * ci
            out[:, p] = acc
        return out

else:  # pragma: no cover
    numba_bracket_points = numpy_bracket_points
    numba_fourier_eval = numpy_fourier_eval


if USE_NUMBA:
    bracket_points = numba_bracket_points
    fourier_eval = numba_fourier_eval
else:
    bracket_points = numpy_bracket_points
    fourier_eval = numpy_fourier_eval


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
