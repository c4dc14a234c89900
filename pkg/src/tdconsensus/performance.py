"""Steady-state performance of noisy consensus networks under time delay.

The network integrates dx(t) = -L x(t - tau) dt + dW with unit-intensity
white noise and a performance output y = C x, C 1 = 0. The steady-state
squared output deviation decomposes over Laplacian modes: each eigenvalue
contributes its stationary variance weighted by how strongly the output
matrix observes that mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

from .errors import (
    DisconnectedGraph,
    DomainError,
    InvalidOutputMatrix,
    UnstableNetwork,
)
from .graphs import (
    EdgeFormCaches,
    SpectralCache,
    WeightedGraph,
    centering_matrix,
    edge_quadratic_form,
    eigendecompose,
)

# Fitted coefficients of the closed-form variance profile approximation:
# offset and slope of its affine correction term.
FIT_OFFSET = 0.18733
FIT_SLOPE = -0.01

# Tolerance below which a custom output matrix must annihilate the ones
# vector, relative to its largest entry.
OUTPUT_KERNEL_TOLERANCE = 1e-10


@lru_cache(maxsize=1)
def cosine_fixed_point(tolerance: float = 1e-12) -> float:
    """Unique root of cos(z) = z, by bisection on [0, pi/2].

    The returned value has |cos(z) - z| <= tolerance.
    """
    lo, hi = 0.0, math.pi / 2.0
    while True:
        mid = 0.5 * (lo + hi)
        residual = math.cos(mid) - mid
        if abs(residual) <= tolerance or hi - lo <= 1e-16:
            return mid
        if residual > 0.0:
            lo = mid
        else:
            hi = mid


class OutputKind(Enum):
    CENTERING = "centering"
    COMPLETE_INCIDENCE = "complete-incidence"
    ORTHONORMAL = "orthonormal"
    CUSTOM = "custom"


@dataclass(frozen=True)
class OutputSpec:
    """Performance output y = C x with C annihilating the ones vector.

    Named kinds avoid materializing C where the gram matrix CᵀC suffices:
    centering and orthonormal kinds share the centering projector as gram,
    the complete-incidence kind scales it by the node count.
    """

    kind: OutputKind
    node_count: int
    matrix: np.ndarray | None = None

    @classmethod
    def centering(cls, node_count: int) -> "OutputSpec":
        return cls(OutputKind.CENTERING, node_count)

    @classmethod
    def complete_incidence(cls, node_count: int) -> "OutputSpec":
        return cls(OutputKind.COMPLETE_INCIDENCE, node_count)

    @classmethod
    def orthonormal(cls, node_count: int) -> "OutputSpec":
        return cls(OutputKind.ORTHONORMAL, node_count)

    @classmethod
    def custom(cls, matrix: np.ndarray) -> "OutputSpec":
        matrix = np.asarray(matrix, dtype=float)
        if matrix.ndim != 2 or matrix.shape[1] < 2:
            raise InvalidOutputMatrix("output matrix must be 2-D with >= 2 columns")
        scale = float(np.abs(matrix).max())
        if scale == 0.0:
            raise InvalidOutputMatrix("output matrix is identically zero")
        row_sums = matrix.sum(axis=1)
        if float(np.abs(row_sums).max()) > OUTPUT_KERNEL_TOLERANCE * scale:
            raise InvalidOutputMatrix(
                "output matrix must annihilate the all-ones vector"
            )
        return cls(OutputKind.CUSTOM, matrix.shape[1], matrix)

    def output_matrix(self) -> np.ndarray:
        """Materialize C."""
        n = self.node_count
        if self.kind is OutputKind.CENTERING:
            return centering_matrix(n)
        if self.kind is OutputKind.COMPLETE_INCIDENCE:
            rows = []
            for u in range(n):
                for v in range(u + 1, n):
                    row = np.zeros(n)
                    row[u], row[v] = 1.0, -1.0
                    rows.append(row)
            return np.array(rows)
        if self.kind is OutputKind.ORTHONORMAL:
            # Helmert rows: row k has k leading entries 1, then -k, then zeros,
            # normalized; they are orthonormal and orthogonal to the ones vector.
            rows = []
            for k in range(1, n):
                row = np.zeros(n)
                row[:k] = 1.0
                row[k] = -k
                rows.append(row / math.sqrt(k * (k + 1)))
            return np.array(rows)
        assert self.matrix is not None
        return self.matrix

    def gram(self) -> np.ndarray:
        """CᵀC, the matrix through which the output enters every formula."""
        n = self.node_count
        if self.kind in (OutputKind.CENTERING, OutputKind.ORTHONORMAL):
            return centering_matrix(n)
        if self.kind is OutputKind.COMPLETE_INCIDENCE:
            return n * centering_matrix(n)
        assert self.matrix is not None
        return self.matrix.T @ self.matrix

    def frobenius_sq(self) -> float:
        """Squared Frobenius norm of C, equal to the trace of the gram."""
        n = self.node_count
        if self.kind in (OutputKind.CENTERING, OutputKind.ORTHONORMAL):
            return float(n - 1)
        if self.kind is OutputKind.COMPLETE_INCIDENCE:
            return float(n * (n - 1))
        assert self.matrix is not None
        return float(np.sum(self.matrix * self.matrix))

    def modal_weights(self, vectors: np.ndarray) -> np.ndarray:
        """diag(Qᵀ CᵀC Q) for an orthonormal column basis Q.

        For the centering-gram kinds this is 1 - (1ᵀq)²/n per column, exact
        for any orthonormal Q, so no O(n³) product is formed.
        """
        n = self.node_count
        if self.kind is OutputKind.CUSTOM:
            projected = self.matrix @ vectors
            return np.einsum("ji,ji->i", projected, projected)
        col_sums = vectors.sum(axis=0)
        weights = 1.0 - (col_sums * col_sums) / n
        if self.kind is OutputKind.COMPLETE_INCIDENCE:
            weights = n * weights
        return weights

    def gram_edge_form(self, u: int, v: int) -> float:
        """Quadratic form of the gram at the endpoint difference vector."""
        if self.kind in (OutputKind.CENTERING, OutputKind.ORTHONORMAL):
            return 2.0
        if self.kind is OutputKind.COMPLETE_INCIDENCE:
            return 2.0 * self.node_count
        return edge_quadratic_form(self.gram(), u, v)


def make_output_spec(kind: str, node_count: int, matrix: np.ndarray | None = None) -> OutputSpec:
    """Build an OutputSpec from its string kind name."""
    kind_enum = OutputKind(kind)
    if kind_enum is OutputKind.CUSTOM:
        if matrix is None:
            raise InvalidOutputMatrix("custom output kind requires a matrix")
        spec = OutputSpec.custom(matrix)
        if spec.node_count != node_count:
            raise InvalidOutputMatrix(
                f"output matrix has {spec.node_count} columns, graph has {node_count} nodes"
            )
        return spec
    return OutputSpec(kind_enum, node_count)


@dataclass(frozen=True)
class StabilityResult:
    stable: bool
    margin: float


def check_stability(spectrum: SpectralCache, delay: float) -> StabilityResult:
    """Delayed consensus is stable iff delay * lambda_max < pi/2, strictly.

    The margin is pi/(2 delay) - lambda_max, infinite at zero delay. The
    boundary counts as unstable.
    """
    if delay < 0.0:
        raise DomainError("delay must be nonnegative")
    lam_max = spectrum.lambda_max
    if delay == 0.0:
        return StabilityResult(stable=True, margin=math.inf)
    return StabilityResult(
        stable=delay * lam_max < math.pi / 2.0,
        margin=math.pi / (2.0 * delay) - lam_max,
    )


def _profile(x: np.ndarray | float) -> np.ndarray | float:
    """cos(x) / (1 - sin(x)) on [0, pi/2).

    Evaluated as cot((pi/2 - x)/2), which is algebraically identical and
    avoids the cancellation in 1 - sin(x) near the right endpoint.
    """
    half_gap = 0.5 * (math.pi / 2.0 - np.asarray(x, dtype=float))
    return np.cos(half_gap) / np.sin(half_gap)


def _profile_fit(x: np.ndarray | float) -> np.ndarray | float:
    """Closed-form fit of _profile(x)/(2x): 0.5 (1/x + (4/pi)/(pi/2 - x) + offset + slope x)."""
    x = np.asarray(x, dtype=float)
    return 0.5 * (
        1.0 / x
        + (4.0 / math.pi) / (math.pi / 2.0 - x)
        + FIT_OFFSET
        + FIT_SLOPE * x
    )


def mode_variance(lam: float, delay: float) -> float:
    """Stationary variance of one noisy mode dx = -lam x(t - delay) dt + dW.

    Equals cos(lam delay) / (2 lam (1 - sin(lam delay))); reduces to
    1/(2 lam) at zero delay. Defined for lam > 0 and lam * delay < pi/2.
    """
    if lam <= 0.0:
        raise DomainError(f"mode rate must be positive, got {lam}")
    if delay < 0.0:
        raise DomainError("delay must be nonnegative")
    if delay == 0.0:
        return 1.0 / (2.0 * lam)
    x = lam * delay
    if x >= math.pi / 2.0:
        raise DomainError(f"mode is unstable: lam * delay = {x} >= pi/2")
    return float(_profile(x)) / (2.0 * lam)


def mode_variance_fit(lam: float, delay: float) -> float:
    """Closed-form approximation of mode_variance, within 2e-4 relative below it."""
    if lam <= 0.0:
        raise DomainError(f"mode rate must be positive, got {lam}")
    if delay <= 0.0:
        raise DomainError("the fit requires a positive delay; use mode_variance at zero")
    x = lam * delay
    if x >= math.pi / 2.0:
        raise DomainError(f"mode is unstable: lam * delay = {x} >= pi/2")
    return delay * float(_profile_fit(x))


def _nonzero_modes(spectrum: SpectralCache, out: OutputSpec) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues and modal weights of the non-kernel modes.

    Requires a connected-graph spectrum: exactly one eigenvalue below the
    zero tolerance.
    """
    lam = spectrum.eigenvalues
    zero = np.abs(lam) < spectrum.zero_tolerance
    zero_count = int(np.count_nonzero(zero))
    if zero_count > 1:
        raise DisconnectedGraph(
            f"{zero_count} zero eigenvalues: the graph has {zero_count} components"
        )
    if zero_count == 0:
        raise DomainError("spectrum has no zero eigenvalue; not a connected Laplacian")
    weights = out.modal_weights(spectrum.vectors)
    return lam[~zero], weights[~zero]


def rho_exact(spectrum: SpectralCache, out: OutputSpec, delay: float) -> float:
    """Exact steady-state performance: sum of weighted modal variances."""
    stability = check_stability(spectrum, delay)
    if not stability.stable:
        raise UnstableNetwork(
            f"delay {delay} exceeds the stability threshold "
            f"{math.pi / (2.0 * spectrum.lambda_max)}"
        )
    lam, weights = _nonzero_modes(spectrum, out)
    if delay == 0.0:
        return float(np.sum(weights * 0.5 / lam))
    return float(np.sum(weights * _profile(lam * delay) * 0.5 / lam))


def rho_approx(spectrum: SpectralCache, out: OutputSpec, delay: float) -> float:
    """Closed-form performance fit; underestimates rho_exact by < 2e-4 relative.

    Raises DomainError at zero delay, where callers use rho_exact directly.
    """
    if delay == 0.0:
        raise DomainError("the fit requires a positive delay; use rho_exact at zero")
    stability = check_stability(spectrum, delay)
    if not stability.stable:
        raise UnstableNetwork(
            f"delay {delay} exceeds the stability threshold "
            f"{math.pi / (2.0 * spectrum.lambda_max)}"
        )
    lam, weights = _nonzero_modes(spectrum, out)
    return float(delay * np.sum(weights * _profile_fit(lam * delay)))


def rho_approx_from_caches(caches: EdgeFormCaches) -> float:
    """Trace-form evaluation of the performance fit from the design caches.

    Identical to the eigen-sum form of rho_approx. At zero delay it reduces
    to the exact measure 0.5 Tr[gram @ lap_pinv], which is what the design
    loop tracks there.
    """
    gram = caches.output_gram
    base = 0.5 * float(np.sum(gram * caches.lap_pinv.matrix))
    tau = caches.delay
    if tau == 0.0:
        return base
    return (
        base
        + (2.0 * tau / math.pi) * float(np.sum(gram * caches.shift_pinv.matrix))
        + 0.5 * FIT_SLOPE * tau * tau * float(np.sum(gram * caches.laplacian))
        + 0.5 * FIT_OFFSET * tau * float(np.trace(gram))
    )


@dataclass(frozen=True)
class HardLimit:
    value: float
    optimal_uniform_weight: float


def hard_limit(node_count: int, out: OutputSpec, delay: float) -> HardLimit:
    """Delay-induced performance floor over all connected weighted graphs.

    value = delay * ||C||_F^2 / (2 (1 - sin(z))), z the cosine fixed point.
    The complete graph with every weight z/(n delay) attains it.
    """
    if delay <= 0.0:
        raise DomainError("the hard limit requires a positive delay (it is 0 at delay 0)")
    if node_count < 2:
        raise DomainError("need at least two nodes")
    z = cosine_fixed_point()
    value = delay * out.frobenius_sq() / (2.0 * (1.0 - math.sin(z)))
    return HardLimit(value=value, optimal_uniform_weight=z / (node_count * delay))


def sensitivity(caches: EdgeFormCaches, edge: tuple[int, int]) -> float:
    """Derivative of the performance fit with respect to one edge weight.

    Valid for present edges (marginal reweighting) and absent edges
    (marginal addition). At zero delay it reduces to the exact derivative
    of 0.5 Tr[gram @ lap_pinv].
    """
    u, v = edge
    tau = caches.delay
    gram_form = edge_quadratic_form(caches.output_gram, u, v)
    q_lap_gram = caches.lap_pinv_gram.form(u, v)
    if tau == 0.0:
        return -0.5 * q_lap_gram
    q_shift_gram = caches.shift_pinv_gram.form(u, v)
    return (
        0.5 * FIT_SLOPE * tau * tau * gram_form
        - 0.5 * q_lap_gram
        + (2.0 * tau * tau / math.pi) * q_shift_gram
    )


def monotonicity_threshold(max_weighted_degree: float) -> float:
    """Delay below which adding any candidate edge cannot hurt performance.

    max_weighted_degree must cover every graph reachable during the design
    (base plus all candidate additions).
    """
    if max_weighted_degree <= 0.0:
        raise DomainError("max weighted degree must be positive")
    return cosine_fixed_point() / (2.0 * max_weighted_degree)


@dataclass(frozen=True)
class CrossoverResult:
    """Delay threshold past which the second graph outperforms the first.

    bracket is the final sign-certified bisection interval:
    difference(bracket_low) <= 0 < difference(bracket_high), where
    difference = rho(first) - rho(second). certified_dominance, when
    present, is the closed-form interval on which the second graph
    provably wins; the threshold lies at or left of its lower end.
    """

    tau_star: float
    bracket_low: float
    bracket_high: float
    difference_low: float
    difference_high: float
    certified_dominance: tuple[float, float] | None


def crossover_delay(
    graph_a: WeightedGraph,
    graph_b: WeightedGraph,
    out: OutputSpec,
    samples: int = 400,
) -> CrossoverResult | None:
    """Smallest delay past which graph_b beats graph_a at every sample.

    Scans a log-spaced grid over the common stability interval, then
    bisects the last sign change of rho(graph_a) - rho(graph_b). Returns
    None when the difference never changes sign on the grid, or when it is
    not positive at every sample past the last change.
    """
    if graph_a.node_count != graph_b.node_count:
        raise ValueError("graphs must share the node count")
    for g, name in ((graph_a, "first"), (graph_b, "second")):
        if not g.is_connected():
            raise DisconnectedGraph(f"{name} graph is disconnected")
    if samples < 2:
        raise ValueError("need at least two samples")
    spec_a = eigendecompose(graph_a.laplacian())
    spec_b = eigendecompose(graph_b.laplacian())
    lam_max = max(spec_a.lambda_max, spec_b.lambda_max)
    tau_hi = math.pi / (2.0 * lam_max)

    def difference(tau: float) -> float:
        return rho_exact(spec_a, out, tau) - rho_exact(spec_b, out, tau)

    taus = np.geomspace(1e-4 * tau_hi, (1.0 - 1e-9) * tau_hi, samples)
    diffs = np.array([difference(t) for t in taus])
    nonpos = np.flatnonzero(diffs <= 0.0)
    if len(nonpos) == 0 or nonpos[-1] == samples - 1:
        return None
    last = int(nonpos[-1])
    if not np.all(diffs[last + 1 :] > 0.0):
        return None

    lo, hi = float(taus[last]), float(taus[last + 1])
    d_lo, d_hi = float(diffs[last]), float(diffs[last + 1])
    while hi - lo > 1e-13 * tau_hi:
        mid = 0.5 * (lo + hi)
        d_mid = difference(mid)
        if d_mid > 0.0:
            hi, d_hi = mid, d_mid
        else:
            lo, d_lo = mid, d_mid

    dominance = None
    if spec_a.lambda_max > spec_b.lambda_max:
        edge_tau = math.pi / (2.0 * spec_a.lambda_max)
        p_hat = rho_exact(spec_b, out, edge_tau)
        dominance = (
            math.pi * p_hat / (2.0 * p_hat * spec_a.lambda_max + 1.0),
            edge_tau,
        )
    return CrossoverResult(
        tau_star=0.5 * (lo + hi),
        bracket_low=lo,
        bracket_high=hi,
        difference_low=d_lo,
        difference_high=d_hi,
        certified_dominance=dominance,
    )


def mode_variance_quadrature(lam: float, delay: float, rel_tol: float = 1e-9) -> float:
    """mode_variance computed by frequency-domain integration, no closed form.

    Integrates the squared magnitude of the mode's frequency response,
    1 / ((lam cos(delay w))² + (w - lam sin(delay w))²), over the real
    line divided by 2 pi. The integrand is even; beyond the resonance
    region it is handled one oscillation period at a time with fixed
    Gauss-Legendre panels until the analytic tail remainder
    1/W + O(lam/(delay W³)) is certified below rel_tol.
    """
    if lam <= 0.0:
        raise DomainError(f"mode rate must be positive, got {lam}")
    if delay < 0.0:
        raise DomainError("delay must be nonnegative")
    if delay * lam >= math.pi / 2.0:
        raise DomainError("mode is unstable; the integral diverges")

    def integrand(w):
        return 1.0 / (
            (lam * np.cos(delay * w)) ** 2 + (w - lam * np.sin(delay * w)) ** 2
        )

    if delay == 0.0:
        value, _ = quad(integrand, 0.0, np.inf, limit=200)
        return 2.0 * value / (2.0 * math.pi)

    period = 2.0 * math.pi / delay
    core_end = max(4.0 * lam, 2.0 * period)
    total, _ = quad(integrand, 0.0, core_end, limit=500, epsabs=0.0, epsrel=1e-12)
    nodes, gauss_w = np.polynomial.legendre.leggauss(24)
    omega = core_end
    while True:
        estimate = 2.0 * (total + 1.0 / omega)
        # Tail past omega equals 1/omega up to this certified remainder.
        remainder = 2.0 * (
            4.0 * lam / (delay * omega**3) + 2.1 * lam * lam / omega**3
        )
        if remainder <= rel_tol * abs(estimate):
            break
        mid = omega + 0.5 * period
        half = 0.5 * period
        total += half * float(np.sum(gauss_w * integrand(mid + half * nodes)))
        omega += period
    return 2.0 * (total + 1.0 / omega) / (2.0 * math.pi)


@dataclass(frozen=True)
class PerformanceReport:
    """Headline numbers for one graph at one delay."""

    rho_exact: float
    rho_approx: float
    relative_gap: float
    stability_margin: float
    hard_limit: float
    delta_weights: tuple[float, ...]


def performance_report(
    graph: WeightedGraph, out: OutputSpec, delay: float
) -> PerformanceReport:
    """Full exact-plus-fit analysis of one graph.

    At zero delay the fit column is filled with the exact value and the
    hard limit is 0 by convention.
    """
    if not graph.is_connected():
        raise DisconnectedGraph("analysis requires a connected graph")
    spectrum = eigendecompose(graph.laplacian())
    stability = check_stability(spectrum, delay)
    if not stability.stable:
        raise UnstableNetwork(
            f"delay {delay} exceeds the stability threshold "
            f"{math.pi / (2.0 * spectrum.lambda_max)}"
        )
    exact = rho_exact(spectrum, out, delay)
    if delay == 0.0:
        approx, limit = exact, 0.0
    else:
        approx = rho_approx(spectrum, out, delay)
        limit = hard_limit(graph.node_count, out, delay).value
    _, weights = _nonzero_modes(spectrum, out)
    return PerformanceReport(
        rho_exact=exact,
        rho_approx=approx,
        relative_gap=(exact - approx) / exact if exact != 0.0 else 0.0,
        stability_margin=stability.margin,
        hard_limit=limit,
        delta_weights=tuple(float(w) for w in weights),
    )
