"""Panel-based quadrature tuned for piecewise-smooth radial integrands.

The integrands in this package are smooth except at known radii (LoS-step
breakpoints, footprint branch radii), so every integral pins panel edges at
those kinks and uses fixed-order Gauss-Legendre inside each panel. Error
estimates come from comparing two node orders; the Gauss-Kronrod 15(7) pair
serves the outer (expensive) integrals.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy.special import roots_legendre

from .errors import QuadratureFailure

# Gauss-Kronrod 15(7) nodes/weights on [-1, 1] (QUADPACK dqk15 constants).
_GK_NODES = np.array([
    -0.991455371120813, -0.949107912342759, -0.864864423359769,
    -0.741531185599394, -0.586087235467691, -0.405845151377397,
    -0.207784955007898, 0.0, 0.207784955007898, 0.405845151377397,
    0.586087235467691, 0.741531185599394, 0.864864423359769,
    0.949107912342759, 0.991455371120813,
])
_GK_WEIGHTS = np.array([
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728, 0.204432940075298,
    0.190350578064785, 0.169004726639267, 0.140653259715525,
    0.104790010322250, 0.063092092629979, 0.022935322010529,
])
_G7_WEIGHTS = np.array([
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469, 0.381830050505119, 0.279705391489277,
    0.129484966168870,
])
_G7_PICK = slice(1, 14, 2)  # the embedded 7-point Gauss nodes


@lru_cache(maxsize=16)
def gauss_legendre(order: int):
    nodes, weights = roots_legendre(order)
    return nodes, weights


def fixed_gl(f, a: float, b: float, order: int = 16) -> float:
    """Gauss-Legendre of a vectorized integrand on [a, b]."""
    if b <= a:
        return 0.0
    nodes, weights = gauss_legendre(order)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return half * float(np.dot(weights, f(mid + half * nodes)))


def gk15(f, a: float, b: float):
    """Gauss-Kronrod 15(7) estimate and error proxy on one panel."""
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    vals = np.asarray(f(mid + half * _GK_NODES), dtype=float)
    k15 = half * float(np.dot(_GK_WEIGHTS, vals))
    g7 = half * float(np.dot(_G7_WEIGHTS, vals[_G7_PICK]))
    return k15, abs(k15 - g7)


def adaptive_panels(f, edges, rtol: float = 1e-9, atol: float = 0.0, max_splits: int = 2000):
    """Adaptive GK15 over panels pinned at ``edges`` (sorted breakpoints).

    Splits the worst panel until the summed error estimate meets the target;
    raises QuadratureFailure if the split budget runs out first.
    """
    edges = np.asarray(edges, dtype=float)
    panels = [(edges[i], edges[i + 1]) for i in range(len(edges) - 1) if edges[i + 1] > edges[i]]
    if not panels:
        return 0.0, 0.0
    results = [gk15(f, a, b) for a, b in panels]
    for _ in range(max_splits):
        total = sum(v for v, _ in results)
        err = sum(e for _, e in results)
        if err <= max(rtol * abs(total), atol):
            return total, err
        worst = max(range(len(panels)), key=lambda i: results[i][1])
        a, b = panels[worst]
        mid = 0.5 * (a + b)
        if mid <= a or mid >= b:
            break
        panels[worst] = (a, mid)
        panels.append((mid, b))
        results[worst] = gk15(f, a, mid)
        results.append(gk15(f, mid, b))
    total = sum(v for v, _ in results)
    err = sum(e for _, e in results)
    raise QuadratureFailure(
        f"adaptive quadrature stalled at error {err:.3e} (target {max(rtol * abs(total), atol):.3e})"
    )


class PanelGrid:
    """Fixed node layout over panels, with a full-order and a check-order rule.

    Integrands are sampled once on the flat node arrays; integrals over
    [edge_i, edge_j] are then weighted dots over slices. The difference
    between the two orders is a per-integral error estimate. Orders may vary
    per panel (panels far from any integrand feature need very few nodes).
    """

    def __init__(self, edges, order=16, check_order=8):
        edges = np.unique(np.asarray(edges, dtype=float))
        if len(edges) < 2:
            raise ValueError("need at least two panel edges")
        self.edges = edges
        n_panels = len(edges) - 1
        self.order = order
        self.check_order = check_order
        orders = np.full(n_panels, order) if np.isscalar(order) else np.asarray(order)
        check_orders = (np.full(n_panels, check_order) if np.isscalar(check_order)
                        else np.asarray(check_order))
        self.x, self.w, self.starts = self._layout(orders)
        self.xc, self.wc, self.starts_c = self._layout(check_orders)

    def _layout(self, orders):
        lo, hi = self.edges[:-1], self.edges[1:]
        xs, ws = [], []
        starts = np.zeros(len(lo) + 1, dtype=np.intp)
        for i, n in enumerate(orders):
            nodes, weights = gauss_legendre(int(n))
            half = 0.5 * (hi[i] - lo[i])
            mid = 0.5 * (hi[i] + lo[i])
            xs.append(mid + half * nodes)
            ws.append(half * weights)
            starts[i + 1] = starts[i] + int(n)
        return np.concatenate(xs), np.concatenate(ws), starts

    def sample(self, f):
        """Evaluate a vectorized integrand on both node sets."""
        return f(self.x), f(self.xc)

    def edge_index(self, r: float, side: str = "above") -> int:
        """Index of the nearest panel edge at or above (below) ``r``."""
        i = int(np.searchsorted(self.edges, r, side="left"))
        if side == "above":
            return min(i, len(self.edges) - 1)
        j = int(np.searchsorted(self.edges, r, side="right")) - 1
        return max(j, 0)

    def dot_range(self, vals, vals_check, i_edge: int, j_edge: int):
        """Integral (and error proxy) over panels [edge_i, edge_j]."""
        if j_edge <= i_edge:
            return 0.0, 0.0
        full = float(np.dot(self.w[self.starts[i_edge]:self.starts[j_edge]],
                            vals[self.starts[i_edge]:self.starts[j_edge]]))
        chk = float(np.dot(self.wc[self.starts_c[i_edge]:self.starts_c[j_edge]],
                           vals_check[self.starts_c[i_edge]:self.starts_c[j_edge]]))
        return full, abs(full - chk)


def gcq_nodes(k: int):
    """Gauss-Chebyshev layout for integrals of P(t) / (1 + t) over t in (0, inf).

    Returns thresholds ``t_n`` and weights ``w_n`` such that the integral of
    f(t) dt is approximated by sum_n w_n f(t_n); the map is
    t = tan(pi/4 * cos(theta_n) + pi/4) with theta_n the Chebyshev angles.
    """
    n = np.arange(1, k + 1)
    theta = (2 * n - 1) * math.pi / (2 * k)
    angle = 0.25 * math.pi * np.cos(theta) + 0.25 * math.pi
    t = np.tan(angle)
    w = math.pi**2 * np.sin(theta) / (4 * k * np.cos(angle) ** 2)
    return t, w


def gcq_capacity(coverage_at, k: int) -> float:
    """Spectral efficiency (b/s/Hz): (1/ln 2) * integral of P_cov(t)/(1+t) dt
    by the Chebyshev rule with ``k`` nodes. ``coverage_at`` maps a linear SINR
    threshold to a coverage probability."""
    t, w = gcq_nodes(k)
    vals = np.array([coverage_at(float(ti)) for ti in t])
    return float(np.dot(w, vals / (1.0 + t))) / math.log(2.0)


def gcq_capacity_adaptive(coverage_at, start: int = 64, cap: int = 512, rtol: float = 1e-4) -> float:
    """Double the node count until two successive estimates agree to ``rtol``."""
    k = start
    prev = gcq_capacity(coverage_at, k)
    while 2 * k <= cap:
        k *= 2
        cur = gcq_capacity(coverage_at, k)
        if abs(cur - prev) <= rtol * max(abs(cur), 1e-300):
            return cur
        prev = cur
    return prev
