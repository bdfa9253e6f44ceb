#!/usr/bin/env python3

from collections import namedtuple

import numpy as np

from ..graph import ball, bracket

Stencil = namedtuple("Stencil", ["rows", "cols", "weights", "measure"])


def stencil(graph, x=None, radius=2):
    """
    The edge arrays and measure on which the gradient forms are evaluated.

    With x given, the stencil is the subgraph induced on B(x, radius),
    carrying the measure m of the full graph; forms evaluated at x from it
    agree exactly with the full-graph values when radius is 2.

    Returns:
        stencil: A Stencil of edge rows, columns, weights and the measure
        vertices: The graph vertices in stencil order
    """

    rows, cols, weights = graph.edges()
    if x is None:
        return Stencil(rows, cols, weights, graph.measure), np.arange(len(graph))

    vertices = ball(graph, x, radius).members
    position = np.full(len(graph), -1)
    position[vertices] = np.arange(len(vertices))
    inside = (position[rows] >= 0) & (position[cols] >= 0)
    return (
        Stencil(
            position[rows[inside]],
            position[cols[inside]],
            weights[inside],
            graph.measure[vertices],
        ),
        vertices,
    )


def _laplacian(st, f):
    flux = st.weights * (f[st.cols] - f[st.rows])
    return np.bincount(st.rows, weights=flux, minlength=len(st.measure)) / st.measure


def _gamma(st, f, h):
    products = st.weights * (f[st.cols] - f[st.rows]) * (h[st.cols] - h[st.rows])
    return np.bincount(st.rows, weights=products, minlength=len(st.measure)) / (
        2 * st.measure
    )


def _gamma2(st, f):
    laplacian_f = _laplacian(st, f)
    return 0.5 * (_laplacian(st, _gamma(st, f, f)) - 2 * _gamma(st, f, laplacian_f))


def _gamma2_tilde(st, f):
    gamma_f = _gamma(st, f, f)
    return _gamma2(st, f) - _gamma(st, f, gamma_f / f)


def gamma(graph, f, h=None):
    """
    The gradient form 2Γ(f, h)(x) = (1/m(x)) Σ_y ω_xy (f(y) - f(x))(h(y) - h(x));
    Γ(f) = Γ(f, f) when h is omitted.
    """
    f = np.asarray(f, dtype=float)
    h = f if h is None else np.asarray(h, dtype=float)
    return _gamma(stencil(graph)[0], f, h)


def dirichlet_energy(graph, f, h=None):
    """
    ⟨Γ(f, h)⟩ = Σ_x m(x) Γ(f, h)(x).
    """
    return bracket(graph, gamma(graph, f, h))


def _require_positive(graph, f, x):
    region = np.arange(len(graph)) if x is None else ball(graph, x, 2).members
    if (f[region] <= 0).any():
        where = "" if x is None else f" on B({graph.labels[x]}, 2)"
        raise ValueError(f"Γ̃₂ needs a strictly positive function{where}.")


def gamma2_pair(graph, f, x=None):
    """
    The iterated gradient form 2Γ₂(f) = ΔΓ(f) - 2Γ(f, Δf) and the modified
    form Γ̃₂(f) = Γ₂(f) - Γ(f, Γ(f)/f).

    Arguments:
        graph: The WeightedGraph.
        f: The function, one value per vertex.
        x: If given, evaluate only at x, requiring f > 0 on B(x, 2) alone;
           otherwise evaluate everywhere and require f > 0 everywhere.

    Returns:
        Γ₂(f), Γ̃₂(f): arrays over the vertices, or scalars when x is given
    """

    f = np.asarray(f, dtype=float)
    _require_positive(graph, f, x)
    if x is None:
        st, _ = stencil(graph)
        return _gamma2(st, f), _gamma2_tilde(st, f)

    st, vertices = stencil(graph, x)
    local_f = f[vertices]
    centre = np.searchsorted(vertices, x)
    return _gamma2(st, local_f)[centre], _gamma2_tilde(st, local_f)[centre]


def local_cde_residual(st, centre, f, n, K):
    """
    Γ̃₂(f) - (1/n) f² (Δ log f)² - K Γ(f) at a stencil vertex, normalized by f².
    """
    log_laplacian = _laplacian(st, np.log(f))[centre]
    raw = (
        _gamma2_tilde(st, f)[centre]
        - f[centre] ** 2 * log_laplacian**2 / n
        - K * _gamma(st, f, f)[centre]
    )
    return raw / f[centre] ** 2


def cde_residual(graph, f, x, n, K, raw=False):
    """
    The residual of the curvature-dimension inequality CDE'(x, n, K),

        Γ̃₂(f)(x) - (1/n) f(x)² (Δ log f)(x)² - K Γ(f)(x),

    divided by f(x)² so that it is invariant under f → λf.
    A negative value means f violates CDE'(x, n, K).

    Arguments:
        graph: The WeightedGraph.
        f: A function, strictly positive on B(x, 2).
        x: The vertex.
        n: The dimension parameter, positive.
        K: The curvature parameter.
        raw: Return the unnormalized residual instead.
    """

    if n <= 0:
        raise ValueError(f"The dimension n must be positive, not {n}.")
    f = np.asarray(f, dtype=float)
    _require_positive(graph, f, x)
    st, vertices = stencil(graph, x)
    local_f = f[vertices]
    centre = np.searchsorted(vertices, x)
    residual = local_cde_residual(st, centre, local_f, n, K)
    return residual * local_f[centre] ** 2 if raw else residual


def schwartz_p_power_gap(a, b, p):
    """
    p²/(4(p-1)) (a - b)(a^(p-1) - b^(p-1)) - (a^(p/2) - b^(p/2))²,
    which is nonnegative for a, b > 0 and p > 2.
    """
    a, b, p = np.asarray(a), np.asarray(b), np.asarray(p)
    return p**2 / (4 * (p - 1)) * (a - b) * (a ** (p - 1) - b ** (p - 1)) - (
        a ** (p / 2) - b ** (p / 2)
    ) ** 2


def schwartz_gamma_gap(graph, f, p):
    """
    p²/(4(p-1)) Γ(f^(p-1), f) - Γ(f^(p/2)) at every vertex, the pointwise
    consequence of schwartz_p_power_gap for a positive function f.
    """
    if p <= 2:
        raise ValueError(f"p must exceed 2, not {p}.")
    f = np.asarray(f, dtype=float)
    if (f <= 0).any():
        raise ValueError("The p-power gradient bound needs a strictly positive function.")
    st, _ = stencil(graph)
    return p**2 / (4 * (p - 1)) * _gamma(st, f ** (p - 1), f) - _gamma(
        st, f ** (p / 2), f ** (p / 2)
    )
