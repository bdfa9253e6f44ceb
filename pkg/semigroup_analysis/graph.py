#!/usr/bin/env python3

import hashlib
import json
import warnings
from collections import namedtuple
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix, diags
from scipy.sparse.csgraph import connected_components, shortest_path

from .stats.fits import fit_log_linear

SYMMETRY_TOLERANCE = 1e-12


class GuardError(ValueError):
    """
    Raised when a time or radius horizon would let mass or a ball reach
    a boundary-marked vertex.
    """


class WeightedGraph:
    """
    A finite graph with symmetric nonnegative weights ω_xy (loops allowed)
    and the vertex measure m(x) = Σ_y ω_xy, loop weight counted once.

    Instances are immutable once constructed.
    """

    def __init__(
        self,
        weights,
        name="explicit",
        parameters=None,
        boundary=None,
        labels=None,
        vertex_transitive=False,
    ):
        weights = csr_matrix(weights, dtype=float)
        weights.sum_duplicates()
        weights.eliminate_zeros()

        if weights.shape[0] != weights.shape[1]:
            raise ValueError(f"Weight matrix must be square, not {weights.shape}.")
        if weights.shape[0] == 0:
            raise ValueError("A graph needs at least one vertex.")
        if weights.nnz and weights.data.min() < 0:
            raise ValueError("Edge weights must be nonnegative.")

        asymmetry = abs(weights - weights.T)
        if asymmetry.nnz and asymmetry.max() > SYMMETRY_TOLERANCE * max(
            1.0, abs(weights).max()
        ):
            raise ValueError("Edge weights must be symmetric.")

        measure = np.asarray(weights.sum(axis=1)).ravel()
        if (measure <= 0).any():
            isolated = np.flatnonzero(measure <= 0).tolist()
            raise ValueError(f"Vertices {isolated} are isolated (m(x) = 0).")

        self.weights = weights
        self.measure = measure
        self.name = name
        self.parameters = dict(parameters or {})
        self.boundary = (
            np.zeros(len(measure), dtype=bool)
            if boundary is None
            else np.asarray(boundary, dtype=bool)
        )
        if len(self.boundary) != len(measure):
            raise ValueError("Boundary marks must cover every vertex.")
        self.labels = list(range(len(measure))) if labels is None else list(labels)
        self.vertex_transitive = vertex_transitive

        self.has_loops = bool(weights.diagonal().any())
        n_components, _ = connected_components(weights, directed=False)
        self.connected = n_components == 1

        for array in self.measure, self.boundary:
            array.flags.writeable = False

        self._transition = None
        self._distances = {}

    def __len__(self):
        return len(self.measure)

    def __repr__(self):
        return f"WeightedGraph({self.name}, {self.parameters}, {len(self)} vertices)"

    @property
    def num_vertices(self):
        return len(self.measure)

    @property
    def total_volume(self):
        return self.measure.sum()

    @property
    def has_boundary(self):
        return bool(self.boundary.any())

    @property
    def transition(self):
        """
        The transition operator p(x, y) = ω_xy / m(x) as a sparse matrix.
        """
        if self._transition is None:
            self._transition = (diags(1 / self.measure) @ self.weights).tocsr()
        return self._transition

    def edges(self):
        """
        Return the arrays (x, y, ω_xy) over every ordered adjacent pair,
        loops included once.
        """
        coo = self.weights.tocoo()
        return coo.row, coo.col, coo.data

    def vertex(self, label):
        """
        The vertex index carrying a label, e.g. a lattice coordinate tuple.
        """
        if label is None:
            return 0
        if isinstance(label, list):
            label = tuple(label)
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"No vertex labelled {label} in {self!r}.") from None

    def origin(self):
        """
        The vertex labelled by the zero coordinate on lattice windows, else 0.
        """
        if self.name == "lattice_window":
            return self.vertex((0,) * self.parameters["d"])
        return 0

    def check_vertex(self, x):
        if not 0 <= x < len(self):
            raise KeyError(f"Vertex {x} is not in {self!r}.")

    def distances(self, x):
        """
        Hop distances from x to every vertex (loops ignored, inf if unreachable).
        """
        self.check_vertex(x)
        if x not in self._distances:
            self._distances[x] = shortest_path(
                self.weights, directed=False, unweighted=True, indices=x
            )
        return self._distances[x]

    def boundary_distance(self, x):
        if not self.has_boundary:
            return np.inf
        return self.distances(x)[self.boundary].min()

    def check_guard(self, x, horizon, what="horizon"):
        """
        Require that a ball or walk of the given horizon around x stays
        clear of the boundary marks.

        Arguments:
            x: The base vertex.
            horizon: The number of steps or the radius used.
            what: A description of the horizon for the error message.
        """
        distance = self.boundary_distance(x)
        if horizon >= distance:
            raise GuardError(
                f"{what} {horizon} at vertex {self.labels[x]} reaches the boundary "
                f"of {self.name} (boundary distance {distance:g})."
            )

    def description(self):
        return {"generator": self.name, "parameters": self.parameters}

    def fingerprint(self):
        """
        An md5 digest identifying the weights, boundary marks and generator.
        """
        digest = hashlib.md5()
        digest.update(json.dumps(self.description(), sort_keys=True).encode("utf8"))
        coo = self.weights.tocoo()
        order = np.lexsort((coo.col, coo.row))
        for array in coo.row[order], coo.col[order], coo.data[order], self.boundary:
            digest.update(np.ascontiguousarray(array).tobytes())
        return digest.hexdigest()


def norm(graph, f, p=2):
    """
    The ℓ^p norm of f against the measure m; p may be np.inf.
    """
    f = np.abs(np.asarray(f, dtype=float))
    if p == np.inf:
        return f.max()
    return (graph.measure * f**p).sum() ** (1 / p)


def inner(graph, f, h):
    return (graph.measure * np.asarray(f) * np.asarray(h)).sum()


def bracket(graph, u):
    """
    ⟨u⟩ = Σ_x m(x) u(x).
    """
    return (graph.measure * np.asarray(u)).sum()


class VertexSet:
    """
    A set of distinct vertices of a graph together with its volume V(A).
    """

    def __init__(self, graph, members):
        members = np.unique(np.asarray(members, dtype=int))
        if len(members) and (members.min() < 0 or members.max() >= len(graph)):
            raise KeyError(f"Vertex set {members.tolist()} is not contained in {graph!r}.")
        self.graph = graph
        self.members = members
        self.volume = graph.measure[members].sum()

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members.tolist())

    def __contains__(self, x):
        return x in set(self.members.tolist())

    def __repr__(self):
        return f"VertexSet({self.members.tolist()}, volume={self.volume:g})"

    def issubset(self, other):
        return set(self.members.tolist()) <= set(other.members.tolist())

    def mask(self):
        result = np.zeros(len(self.graph), dtype=bool)
        result[self.members] = True
        return result


def ball(graph, x, r):
    if r < 0:
        raise ValueError(f"Ball radius must be nonnegative, not {r}.")
    return VertexSet(graph, np.flatnonzero(graph.distances(x) <= r))


def ball_volume(graph, x, r):
    """
    Return the ball B(x, r) and its volume V(x, r).
    """
    result = ball(graph, x, r)
    return result, result.volume


DeltaAlphaCheck = namedtuple("DeltaAlphaCheck", ["passed", "edge", "ratio"])


def check_delta_alpha(graph, alpha, loops_only=False):
    """
    Check the condition Δ(α): ω_xy ≥ α m(x) for every adjacent pair,
    loops included.

    Returns the verdict and the pair with the smallest ratio ω_xy / m(x);
    on failure that pair is a witness.
    """
    if alpha <= 0:
        raise ValueError(f"α must be positive, not {alpha}.")

    rows, cols, weights = graph.edges()
    if loops_only:
        selected = rows == cols
        rows, cols, weights = rows[selected], cols[selected], weights[selected]
    if len(weights) == 0:
        return DeltaAlphaCheck(False, None, 0.0)

    ratios = weights / graph.measure[rows]
    worst = ratios.argmin()
    passed = bool(ratios[worst] >= alpha * (1 - SYMMETRY_TOLERANCE))
    return DeltaAlphaCheck(passed, (int(rows[worst]), int(cols[worst])), ratios[worst])


def alpha_loop_transform(graph, alpha):
    """
    Add a loop at every vertex so that the walk stays put with
    probability 2α and otherwise moves as before.

    The new weights are ω'_xy = (1 - 2α) ω_xy for x ≠ y and ω'_xx = 2α m(x),
    which keeps m unchanged and gives p'(x, x) = 2α, p'(x, y) = (1 - 2α) p(x, y).
    """
    if graph.has_loops:
        raise ValueError(f"{graph!r} already has loops.")
    if not 0 < alpha <= 0.5:
        raise ValueError(f"α must lie in (0, 1/2], not {alpha}.")
    if alpha == 0.5:
        warnings.warn("α = 1/2 removes every edge; the transformed graph is disconnected.")

    weights = (1 - 2 * alpha) * graph.weights + diags(2 * alpha * graph.measure)
    parameters = dict(graph.parameters, alpha=alpha)
    return WeightedGraph(
        weights,
        name=graph.name,
        parameters=parameters,
        boundary=graph.boundary,
        labels=graph.labels,
        vertex_transitive=graph.vertex_transitive,
    )


@dataclass
class GrowthProfile:
    center: int
    radii: np.ndarray
    volumes: np.ndarray
    c: float
    D_est: object
    doubling_ratios: np.ndarray = field(default_factory=lambda: np.empty(0))
    C_est: float = np.nan

    def fitted_volumes(self):
        return self.c * self.radii**self.D_est.nominal_value


def growth_profile(graph, x, r_max):
    """
    Profile the volume growth V(x, r) for r = 1 .. r_max.

    The growth exponent D_est is the slope of log V(x, r) against
    log(r + 1/2), since the hop ball of radius r covers the continuum ball of
    radius r + 1/2. c = min_r V(x, r) / r^D_est, so V(x, r) ≥ c r^D_est holds
    on the profile. C_est is the largest doubling ratio V(x, 2r) / V(x, r)
    with 2r ≤ r_max.

    Arguments:
        graph: The WeightedGraph to profile.
        x: The centre vertex.
        r_max: The largest radius; at least 2, and clear of any boundary.
    """
    if r_max < 2:
        raise ValueError(f"r_max must be at least 2, not {r_max}.")
    graph.check_guard(x, r_max, what="radius")

    distances = graph.distances(x)
    radii = np.arange(1, r_max + 1)
    volumes = np.asarray([graph.measure[distances <= r].sum() for r in radii])

    _, slope, _ = fit_log_linear(np.log(radii + 0.5), np.log(volumes))
    c = (volumes / radii**slope.nominal_value).min()

    doubling_radii = radii[2 * radii <= r_max]
    doubling_ratios = volumes[2 * doubling_radii - 1] / volumes[doubling_radii - 1]

    return GrowthProfile(
        center=x,
        radii=radii,
        volumes=volumes,
        c=c,
        D_est=slope,
        doubling_ratios=doubling_ratios,
        C_est=doubling_ratios.max(),
    )


def dimension_from_doubling(C):
    """
    D = log_2 C, the volume growth dimension bounded by a doubling constant C.
    """
    if C <= 1:
        raise ValueError(f"A doubling constant must exceed 1, not {C}.")
    return np.log2(C)


def relative_fk_exponent(C):
    """
    ν = 2 / log_2 C, the relative Faber-Krahn exponent that follows from
    an on-diagonal heat kernel bound and doubling with constant C.
    """
    return 2 / dimension_from_doubling(C)
