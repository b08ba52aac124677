"""Hot loops with a numba implementation and a pure-numpy fallback.

Set ``MEANREV_JD_DISABLE_NUMBA=1`` before import to force the numpy versions.
Both implementations are always importable as ``NUMPY_KERNELS`` and, when numba
is present, ``NUMBA_KERNELS``; the module-level names point at the active set.

Kernels:
    jump_decay_sums: per-cell sums of decayed jump sizes for the simulator.
    fourier_cos_sums: trapezoid Fourier inversion at observation points.
    gauss_jump_panels: cumulative integrals of the Gaussian jump CF along a
        decaying path, one panel per sampling interval.
"""

from __future__ import annotations

import os
from types import SimpleNamespace

import numpy as np

_DISABLE = os.environ.get("MEANREV_JD_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")


# --------------------------------------------------------------------------
# numpy versions
# --------------------------------------------------------------------------


def _np_jump_decay_sums(counts, ages, xi, alpha):
    ncell = counts.size
    if xi.size == 0:
        return np.zeros(ncell), np.zeros(ncell)
    cell = np.repeat(np.arange(ncell), counts)
    decayed = xi * np.exp(-alpha * ages)
    return (
        np.bincount(cell, weights=decayed, minlength=ncell),
        np.bincount(cell, weights=xi, minlength=ncell),
    )


def _np_fourier_cos_sums(x, rows, u, w, phi_re, phi_im):
    out = np.empty(x.size)
    step = max(1, 2_000_000 // max(u.size, 1))
    for s in range(0, x.size, step):
        xs = x[s : s + step]
        r = rows[s : s + step]
        arg = np.multiply.outer(xs, u)
        terms = np.cos(arg) * phi_re[r] + np.sin(arg) * phi_im[r]
        out[s : s + step] = (terms * w).sum(axis=1)
    return out


def _np_gauss_jump_panels(b, c_im, mu_j, sigma_j, alpha, delta, n_panels, sub, gl_x, gl_w):
    nb = b.size
    out = np.zeros((n_panels + 1, nb), dtype=complex)
    if n_panels == 0 or nb == 0:
        return out
    h = delta / sub
    half = 0.5 * h
    starts = np.arange(n_panels * sub) * h
    tau = (starts[:, None] + half * (1.0 + gl_x[None, :])).ravel()
    decay = np.exp(-alpha * tau)
    wts = np.tile(half * gl_w, n_panels * sub)
    step = max(1, 2_000_000 // tau.size)
    for s in range(0, nb, step):
        bs = b[s : s + step]
        z = 1j * c_im + bs[:, None] * decay[None, :]
        vals = np.exp(1j * mu_j * z - 0.5 * sigma_j**2 * z * z) * wts
        per_panel = vals.reshape(bs.size, n_panels, sub * gl_x.size).sum(axis=2)
        out[1:, s : s + step] = np.cumsum(per_panel, axis=1).T
    return out


NUMPY_KERNELS = SimpleNamespace(
    name="numpy",
    jump_decay_sums=_np_jump_decay_sums,
    fourier_cos_sums=_np_fourier_cos_sums,
    gauss_jump_panels=_np_gauss_jump_panels,
)

# --------------------------------------------------------------------------
# numba versions
# --------------------------------------------------------------------------

NUMBA_KERNELS = None
try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

if numba is not None:
    _jit = numba.njit(cache=True, fastmath=False)

    @_jit
    def _nb_jump_decay_sums(counts, ages, xi, alpha):
        ncell = counts.size
        wsum = np.zeros(ncell)
        vsum = np.zeros(ncell)
        pos = 0
        for c in range(ncell):
            acc_w = 0.0
            acc_v = 0.0
            for _ in range(counts[c]):
                acc_w += xi[pos] * np.exp(-alpha * ages[pos])
                acc_v += xi[pos]
                pos += 1
            wsum[c] = acc_w
            vsum[c] = acc_v
        return wsum, vsum

    @_jit
    def _nb_fourier_cos_sums(x, rows, u, w, phi_re, phi_im):
        out = np.empty(x.size)
        for i in range(x.size):
            r = rows[i]
            xi = x[i]
            acc = 0.0
            for k in range(u.size):
                a = u[k] * xi
                acc += w[k] * (np.cos(a) * phi_re[r, k] + np.sin(a) * phi_im[r, k])
            out[i] = acc
        return out

    @_jit
    def _nb_gauss_jump_panels(b, c_im, mu_j, sigma_j, alpha, delta, n_panels, sub, gl_x, gl_w):
        nb = b.size
        out = np.zeros((n_panels + 1, nb), dtype=np.complex128)
        h = delta / sub
        half = 0.5 * h
        order = gl_x.size
        nodes = n_panels * sub * order
        decay = np.empty(nodes)
        wts = np.empty(nodes)
        m = 0
        for p in range(n_panels * sub):
            for k in range(order):
                decay[m] = np.exp(-alpha * (p * h + half * (1.0 + gl_x[k])))
                wts[m] = half * gl_w[k]
                m += 1
        s2 = 0.5 * sigma_j * sigma_j
        per = sub * order
        for ib in range(nb):
            bb = b[ib]
            acc = 0.0 + 0.0j
            m = 0
            for p in range(n_panels):
                panel = 0.0 + 0.0j
                for _ in range(per):
                    z = 1j * c_im + bb * decay[m]
                    panel += wts[m] * np.exp(1j * mu_j * z - s2 * z * z)
                    m += 1
                acc += panel
                out[p + 1, ib] = acc
        return out

    NUMBA_KERNELS = SimpleNamespace(
        name="numba",
        jump_decay_sums=_nb_jump_decay_sums,
        fourier_cos_sums=_nb_fourier_cos_sums,
        gauss_jump_panels=_nb_gauss_jump_panels,
    )

ACTIVE = NUMPY_KERNELS if (_DISABLE or NUMBA_KERNELS is None) else NUMBA_KERNELS
BACKEND = ACTIVE.name

jump_decay_sums = ACTIVE.jump_decay_sums
fourier_cos_sums = ACTIVE.fourier_cos_sums
gauss_jump_panels = ACTIVE.gauss_jump_panels


def set_threads(n: int) -> None:
    """Forward a thread count to numba when it is the active backend."""
    if ACTIVE is NUMBA_KERNELS and n and n > 0:
        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
