"""Batched composite Gauss-Legendre quadrature with panel doubling.

Every characteristic-function evaluation in the package reduces to integrals
of the form ``int_0^t g(exp(-alpha*tau)) dtau`` for a whole vector of
frequencies at once. The routine here integrates a batch of such integrands
over a common interval, refines only the entries that have not converged yet
and reports the achieved error when it gives up.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import NumericalError

GL_ORDER = 16
_GL_X, _GL_W = np.polynomial.legendre.leggauss(GL_ORDER)

DEFAULT_TOL = 1e-10
DEFAULT_MAX_LEVEL = 20

# Upper bound on the number of (batch entry, node) pairs evaluated per call of
# the integrand, to keep memory bounded at deep refinement levels.
_MAX_WORK = 4_000_000


def gl_nodes(a: float, b: float, panels: int, order: int = GL_ORDER) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of composite Gauss-Legendre on [a, b]."""
    if order == GL_ORDER:
        x, w = _GL_X, _GL_W
    else:
        x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def integrate_batch(
    f: Callable[[np.ndarray, np.ndarray], np.ndarray],
    a: float,
    b: float,
    size: int,
    tol: float = DEFAULT_TOL,
    max_level: int = DEFAULT_MAX_LEVEL,
    rtol: float = 0.0,
    min_level: int = 0,
) -> np.ndarray:
    """Integrate ``size`` integrands over [a, b].

    Args:
        f: ``f(nodes, idx)`` returns an array of shape ``(len(idx), len(nodes))``
            with the integrands of batch entries ``idx`` at ``nodes``.
        a, b: Interval.
        size: Number of batch entries.
        tol: Absolute tolerance on each integral.
        max_level: Maximum number of panel doublings.
        rtol: Optional relative tolerance; an entry converges when the
            difference between successive levels is below
            ``max(tol, rtol*|I|)``.
        min_level: Level at which refinement starts (``2**min_level`` panels).

    Returns:
        Complex array of shape ``(size,)``.

    Raises:
        NumericalError: If some entry has not converged at ``max_level``.
    """
    out = np.zeros(size, dtype=complex)
    if size == 0 or a == b:
        return out
    active = np.arange(size)
    prev = _level_values(f, a, b, min_level, active)
    for level in range(min_level + 1, max_level + 1):
        cur = _level_values(f, a, b, level, active)
        err = np.abs(cur - prev)
        done = err <= np.maximum(tol, rtol * np.abs(cur))
        out[active[done]] = cur[done]
        active = active[~done]
        if active.size == 0:
            return out
        prev = cur[~done]
    raise NumericalError(
        f"quadrature did not converge after {max_level} refinement levels "
        f"({active.size} of {size} integrals unresolved)",
        error_estimate=float(np.max(err[~done])),
    )


def _level_values(f, a, b, level, idx):
    nodes, weights = gl_nodes(a, b, 2**level)
    step = max(1, _MAX_WORK // nodes.size)
    vals = np.empty(idx.size, dtype=complex)
    for s in range(0, idx.size, step):
        sel = idx[s : s + step]
        vals[s : s + step] = f(nodes, sel) @ weights
    return vals


def decay_integral(
    g: Callable[[np.ndarray, np.ndarray], np.ndarray],
    alpha: float,
    t: float,
    size: int,
    scale: float,
    g_inf: np.ndarray | None = None,
    tol: float = DEFAULT_TOL,
    max_level: int = DEFAULT_MAX_LEVEL,
) -> np.ndarray:
    """Integrate ``g(exp(-alpha*tau))`` over tau in [0, t] for a batch.

    Args:
        g: ``g(y, idx)`` with ``y`` the decay factors in (0, 1]; returns an
            array ``(len(idx), len(y))``.
        alpha: Decay rate.
        t: Horizon.
        size: Batch size.
        scale: Largest magnitude the decaying argument is multiplied by. It
            sets where the integrand has become constant to machine
            precision.
        g_inf: Limit values ``g(0)`` per entry. When given, the integral
            beyond the saturation point is added analytically, which keeps the
            refinement independent of ``alpha*t``.
    """
    tau_sat = (37.0 + np.log(max(1.0, scale))) / alpha
    if g_inf is None or t <= tau_sat:
        return integrate_batch(lambda tau, idx: g(np.exp(-alpha * tau), idx), 0.0, t, size, tol, max_level)
    ginf = np.asarray(g_inf, dtype=complex)

    def tail_removed(tau, idx):
        return g(np.exp(-alpha * tau), idx) - ginf[idx, None]

    head = integrate_batch(tail_removed, 0.0, tau_sat, size, tol, max_level)
    return head + ginf * t
