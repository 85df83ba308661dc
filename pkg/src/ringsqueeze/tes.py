"""Photon-number assignment for detector voltage traces.

The pipeline mirrors how number-resolving calorimetric detector records are
processed: traces are reduced to scalar scores by projecting onto the
leading principal component of the record, the score histogram is fitted
with a sum of Gaussians, and the intersections of adjacent components
become the discretization boundaries that map each trace to an integer
photon number. A synthetic trace generator provides a forward model so the
whole chain can be validated round-trip against known counts.

:class:`TraceClassifier` wraps the chain in a scikit-learn style
fit/transform/predict estimator so it composes with the wider ecosystem;
the underlying stages are also exposed as plain functions.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .errors import DegenerateDataError, FitError
from .fitting import Parameter, levenberg_marquardt
from .photon_stats import CountSet
from .rng import STAGE_TRACE_IDLER, STAGE_TRACE_SIGNAL, uniform_block
from .validation import (
    as_trace_matrix,
    require_nonnegative,
    require_positive,
    require_seed,
)

logger = logging.getLogger(__name__)

MIN_BIN_COUNT = 8
_TRACE_CHUNK = 4096  # pulses per generation chunk; multiple of 4
_TAIL_SIGMAS = 4.0   # scores beyond mean + 4 sigma of the top class are "tail"


@dataclass(frozen=True)
class TraceSet:
    """Matrix of voltage traces, one row per pulse."""

    traces: np.ndarray
    sample_period: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "traces", as_trace_matrix(self.traces))
        require_positive("sample_period", self.sample_period)

    @property
    def num_pulses(self) -> int:
        return int(self.traces.shape[0])

    @property
    def num_samples(self) -> int:
        return int(self.traces.shape[1])


@dataclass(frozen=True)
class PulseTemplate:
    """Forward model of a single detector pulse.

    ``shape`` is the unit-peak pulse profile; a trace for ``n`` photons is
    ``per_photon_gain * f(n) * shape`` plus white Gaussian noise of standard
    deviation ``noise_sigma``. The response ``f`` is linear for
    ``nonlinearity_factor == 1``; for a factor ``c < 1`` each additional
    photon contributes ``c`` times the previous increment
    (``f(n) = (1 - c**n) / (1 - c)``), a soft saturation.
    """

    shape: np.ndarray
    per_photon_gain: float
    noise_sigma: float
    nonlinearity_factor: float = 1.0

    def __post_init__(self) -> None:
        shape = np.asarray(self.shape, dtype=np.float64)
        if shape.ndim != 1 or shape.size < 8:
            raise ValueError("shape must be 1-D with at least 8 samples")
        if not np.all(np.isfinite(shape)):
            raise ValueError("shape contains non-finite values")
        if abs(shape.max() - 1.0) > 1e-9:
            raise ValueError("shape must be normalized to unit peak")
        object.__setattr__(self, "shape", shape)
        require_positive("per_photon_gain", self.per_photon_gain)
        require_nonnegative("noise_sigma", self.noise_sigma)
        if not 0.0 < self.nonlinearity_factor <= 1.0:
            raise ValueError("nonlinearity_factor must lie in (0, 1]")

    @property
    def num_samples(self) -> int:
        return int(self.shape.size)

    def response(self, n: np.ndarray) -> np.ndarray:
        """Peak response (in photon-equivalent units) for counts ``n``."""
        n = np.asarray(n, dtype=np.float64)
        c = self.nonlinearity_factor
        if c == 1.0:
            return n
        return (1.0 - c**n) / (1.0 - c)


def default_pulse_shape(num_samples: int = 32, rise_fraction: float = 0.08,
                        fall_fraction: float = 0.35) -> np.ndarray:
    """Unit-peak double-exponential pulse profile."""
    if num_samples < 8:
        raise ValueError("num_samples must be at least 8")
    t = np.arange(num_samples, dtype=np.float64) / num_samples
    shape = np.exp(-t / fall_fraction) - np.exp(-t / rise_fraction)
    peak = shape.max()
    if peak <= 0:
        raise ValueError("degenerate pulse shape")
    return shape / peak


@dataclass(frozen=True)
class ScoreHistogram:
    """Histogram of trace scores with the record-size binning rule."""

    scores: np.ndarray
    bin_count: int
    bin_edges: np.ndarray
    bin_counts: np.ndarray

    @classmethod
    def from_scores(cls, scores, bins: int | None = None) -> "ScoreHistogram":
        scores = np.asarray(scores, dtype=np.float64)
        if bins is None:
            bins = bin_count(scores.size)
        counts, edges = np.histogram(scores, bins=bins)
        return cls(scores=scores, bin_count=int(bins), bin_edges=edges,
                   bin_counts=counts)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])


def bin_count(num_scores: int) -> int:
    """Histogram bin count for a record of ``num_scores`` traces.

    One quarter of the square root of the record size, truncated, with a
    floor of ``MIN_BIN_COUNT``. Records below 16 traces are rejected.
    """
    if num_scores < 16:
        raise ValueError("histogram rule needs at least 16 scores")
    return max(MIN_BIN_COUNT, int(np.sqrt(num_scores) / 4.0))


@dataclass(frozen=True)
class GaussianMixture:
    """Sum-of-Gaussians fit of a score histogram.

    ``components`` holds ``(amplitude, mean, sigma)`` triples in ascending
    mean order; ``boundaries`` are the discretization thresholds between
    adjacent components.
    """

    components: tuple[tuple[float, float, float], ...]
    boundaries: tuple[float, ...]

    def __post_init__(self) -> None:
        means = [c[1] for c in self.components]
        if any(b >= a for a, b in zip(means[1:], means[:-1])):
            raise ValueError("component means must be strictly ascending")
        if any(c[2] <= 0 for c in self.components):
            raise ValueError("component sigmas must be positive")
        if len(self.boundaries) != max(len(self.components) - 1, 0):
            raise ValueError("need exactly one boundary between adjacent "
                             "components")
        for (_, lo, _), b, (_, hi, _) in zip(self.components[:-1],
                                             self.boundaries,
                                             self.components[1:]):
            if not lo < b < hi:
                raise ValueError("boundaries must interleave component means")

    @property
    def component_count(self) -> int:
        return len(self.components)

    def evaluate(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=np.float64)
        total = np.zeros_like(s)
        for amplitude, mean, sigma in self.components:
            total += amplitude * np.exp(-0.5 * ((s - mean) / sigma) ** 2)
        return total


def generate_traces(counts: CountSet, template: PulseTemplate, seed: int,
                    arm: str = "signal",
                    sample_period: float = 1.0) -> TraceSet:
    """Synthesize one arm's detector traces for a count record.

    Deterministic per ``(counts, template, seed, arm)``: each pulse's noise
    samples come from fixed counter positions of the arm's substream.
    """
    seed = require_seed("seed", seed)
    n = counts.arm(arm)
    stage = STAGE_TRACE_SIGNAL if arm == "signal" else STAGE_TRACE_IDLER
    num_samples = template.num_samples
    amplitude = template.per_photon_gain * template.response(n)
    traces = np.empty((n.size, num_samples), dtype=np.float64)

    signal = np.outer(amplitude, template.shape)
    if template.noise_sigma == 0.0:
        traces[:] = signal
    else:
        for start in range(0, n.size, _TRACE_CHUNK):
            stop = min(start + _TRACE_CHUNK, n.size)
            u = uniform_block(seed, stage, start * num_samples,
                              (stop - start) * num_samples)
            noise = ndtri(np.maximum(u, 2.0**-64))
            traces[start:stop] = (signal[start:stop]
                                  + template.noise_sigma
                                  * noise.reshape(stop - start, num_samples))
    return TraceSet(traces=traces, sample_period=sample_period)


def _trace_matrix(traces) -> np.ndarray:
    if isinstance(traces, TraceSet):
        return traces.traces
    return as_trace_matrix(traces)


def principal_component(traces) -> tuple[np.ndarray, np.ndarray]:
    """Mean trace and leading principal component of a trace record.

    The eigenproblem is solved on the ``num_samples x num_samples`` second
    moment matrix of the mean-subtracted record (small side of the data).
    The component's sign is fixed so its overlap with the mean trace is
    nonnegative.
    """
    x = _trace_matrix(traces)
    if x.shape[0] < 2:
        raise ValueError("principal component needs at least 2 traces")
    mean = x.mean(axis=0)
    # Gram-style accumulation avoids materializing the centered copy.
    second_moment = x.T @ x - x.shape[0] * np.outer(mean, mean)
    second_moment = 0.5 * (second_moment + second_moment.T)
    eigenvalues, eigenvectors = np.linalg.eigh(second_moment)
    if eigenvalues[-1] <= 0.0:
        raise DegenerateDataError(
            "trace record has zero variance; no principal component")
    pc = eigenvectors[:, -1]
    overlap = float(pc @ mean)
    if overlap < 0.0:
        pc = -pc
    return mean, pc


def project_scores(traces, mean_trace: np.ndarray, pc: np.ndarray,
                   sample_period: float | None = None) -> np.ndarray:
    """Overlap scores of mean-subtracted traces with the principal component.

    Discrete inner product times the sample period. When ``traces`` is a
    :class:`TraceSet` its period is used unless one is passed explicitly.
    """
    if sample_period is None:
        sample_period = traces.sample_period if isinstance(traces, TraceSet) else 1.0
    x = _trace_matrix(traces)
    mean_trace = np.asarray(mean_trace, dtype=np.float64)
    pc = np.asarray(pc, dtype=np.float64)
    if x.shape[1] != mean_trace.size or x.shape[1] != pc.size:
        raise ValueError(
            f"dimension mismatch: traces have {x.shape[1]} samples, "
            f"mean has {mean_trace.size}, component has {pc.size}")
    return (x @ pc - mean_trace @ pc) * sample_period


def _bounded_exp(x) -> np.ndarray:
    # Wild trial steps may probe huge internal values; cap the argument so
    # candidate evaluation stays finite (such steps are rejected anyway).
    return np.exp(np.minimum(x, 600.0))


def _gaussian_sum_residuals(centers: np.ndarray, counts: np.ndarray,
                            weights: np.ndarray, amp_floor: float,
                            sigma_floor: float, mean_low: float,
                            mean_high: float):
    # Internal parameterization per component: (log amplitude, bounded mean,
    # log(sigma - sigma_floor)). The floors keep dying or over-narrow
    # components from zeroing out the normal equations, and confining the
    # means to the score window forbids the runaway where a distant huge
    # Gaussian imitates an exponential envelope.
    mean_span = mean_high - mean_low

    def unpack(theta: np.ndarray, j: int):
        amp = amp_floor + _bounded_exp(theta[3 * j])
        fraction = 1.0 / (1.0 + np.exp(-theta[3 * j + 1]))
        mu = mean_low + mean_span * fraction
        sigma = sigma_floor + _bounded_exp(theta[3 * j + 2])
        return amp, mu, sigma, fraction

    def residuals(theta: np.ndarray) -> np.ndarray:
        model = np.zeros_like(centers)
        for j in range(theta.size // 3):
            amp, mu, sigma, _ = unpack(theta, j)
            model += amp * np.exp(-0.5 * ((centers - mu) / sigma) ** 2)
        return (model - counts) / weights

    def jacobian(theta: np.ndarray) -> np.ndarray:
        jac = np.empty((centers.size, theta.size))
        for j in range(theta.size // 3):
            amp, mu, sigma, fraction = unpack(theta, j)
            z = (centers - mu) / sigma
            term = amp * np.exp(-0.5 * z**2)
            jac[:, 3 * j] = term * (amp - amp_floor) / amp
            jac[:, 3 * j + 1] = (term * z / sigma
                                 * mean_span * fraction * (1.0 - fraction))
            jac[:, 3 * j + 2] = term * z**2 * (sigma - sigma_floor) / sigma
        return jac / weights[:, None]

    return residuals, jacobian


def _peak_seeds(hist: ScoreHistogram,
                smoothing_window: int) -> list[tuple[float, float, float]]:
    """Component seeds (amplitude, mean, sigma) from the smoothed histogram.

    Local maxima of the moving-average-smoothed histogram mark candidate
    components. The histogram is segmented at the valleys between adjacent
    maxima, and each segment contributes moment-based seeds: the raw peak
    height, the raw peak position, and the mass-weighted spread of the
    segment. Seeds are sorted by amplitude, tallest first.
    """
    counts = hist.bin_counts.astype(np.float64)
    centers = hist.centers
    window = max(1, int(smoothing_window))
    kernel = np.ones(window) / window
    smoothed = np.convolve(counts, kernel, mode="same")

    maxima = []
    for i in range(smoothed.size):
        left = smoothed[i - 1] if i > 0 else -np.inf
        right = smoothed[i + 1] if i < smoothed.size - 1 else -np.inf
        if smoothed[i] > left and smoothed[i] >= right:
            maxima.append(i)
    if not maxima:
        maxima = [int(np.argmax(smoothed))]

    # Valleys between adjacent maxima bound each component's segment.
    cuts = [0]
    for a, b in zip(maxima[:-1], maxima[1:]):
        cuts.append(a + int(np.argmin(smoothed[a:b + 1])))
    cuts.append(smoothed.size)

    bin_width = float(centers[1] - centers[0]) if centers.size > 1 else 1.0
    seeds = []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        segment = counts[lo:hi]
        if segment.sum() <= 0:
            continue
        peak = lo + int(np.argmax(segment))
        mass = segment.sum()
        mean = float(np.sum(segment * centers[lo:hi]) / mass)
        var = float(np.sum(segment * (centers[lo:hi] - mean) ** 2) / mass)
        sigma = float(np.clip(np.sqrt(max(var, 0.0)),
                              0.75 * bin_width, (hi - lo) * bin_width))
        seeds.append((float(counts[peak]), float(centers[peak]), sigma))
    if not seeds:
        i = int(np.argmax(counts))
        seeds.append((float(max(counts[i], 1.0)), float(centers[i]),
                      2.0 * bin_width))
    seeds.sort(key=lambda s: s[0], reverse=True)
    return seeds


class _HistogramFitProblem:
    """Shared scales and model pieces for one histogram's mixture fits."""

    def __init__(self, hist: ScoreHistogram):
        self.centers = hist.centers
        self.counts = hist.bin_counts.astype(np.float64)
        self.weights = np.maximum(np.sqrt(self.counts), 1.0)  # Poisson, floor 1
        self.bin_width = (float(self.centers[1] - self.centers[0])
                          if self.centers.size > 1 else 1.0)
        self.span = (float(self.centers[-1] - self.centers[0])
                     if self.centers.size > 1 else 1.0)
        self.sigma_floor = 0.5 * self.bin_width
        self.amp_floor = 1e-6 * max(float(self.counts.max()), 1.0)
        self.mean_low = float(hist.bin_edges[0])
        self.mean_high = float(hist.bin_edges[-1])
        self.residuals, self.jacobian = _gaussian_sum_residuals(
            self.centers, self.counts, self.weights, self.amp_floor,
            self.sigma_floor, self.mean_low, self.mean_high)

    def model(self, triples: list[tuple[float, float, float]]) -> np.ndarray:
        total = np.zeros_like(self.centers)
        for amp, mu, sigma in triples:
            total += amp * np.exp(-0.5 * ((self.centers - mu) / sigma) ** 2)
        return total

    def fit(self, triples: list[tuple[float, float, float]]):
        """Refine the given component triples; returns (result, triples)."""
        margin = 1e-9 * max(self.span, 1.0)
        parameters = []
        for j, (amp0, mu0, sigma0) in enumerate(triples):
            parameters.extend([
                Parameter(f"amplitude_{j}", max(amp0, 2.0 * self.amp_floor),
                          "log", floor=self.amp_floor),
                Parameter(f"mean_{j}",
                          float(np.clip(mu0, self.mean_low + margin,
                                        self.mean_high - margin)),
                          "logit", low=self.mean_low, high=self.mean_high),
                Parameter(f"sigma_{j}",
                          max(sigma0, self.sigma_floor + margin),
                          "log", floor=self.sigma_floor),
            ])
        result = levenberg_marquardt(
            self.residuals, parameters, jacobian_fn=self.jacobian,
            condition_limit=None, details={"components": len(triples)})
        fitted = [(result[f"amplitude_{j}"], result[f"mean_{j}"],
                   result[f"sigma_{j}"]) for j in range(len(triples))]
        return result, fitted

    def residual_seed(
            self, triples: list[tuple[float, float, float]]
    ) -> tuple[float, float, float]:
        """One more component at the largest positive weighted residual."""
        model = self.model(triples)
        residual = (self.counts - model) / self.weights
        idx = int(np.argmax(residual))
        amp0 = max(self.counts[idx] - model[idx], 2.0 * self.amp_floor)
        return (float(amp0), float(self.centers[idx]), 2.0 * self.bin_width)


def _discrete_mixture(scores: np.ndarray,
                      max_components: int) -> GaussianMixture | None:
    """Exact-cluster mixture for effectively noiseless score sets.

    When the record contains no more distinct score values than the
    component budget (zero detector noise collapses every photon class to
    a single value), a least-squares polish adds nothing: each cluster
    becomes a component directly, with a width far below the cluster
    spacing so the boundary rule reduces to midpoints.
    """
    unique, multiplicity = np.unique(np.asarray(scores, dtype=np.float64),
                                     return_counts=True)
    if unique.size > max_components:
        return None
    if unique.size == 1:
        return GaussianMixture(
            components=((float(multiplicity[0]), float(unique[0]), 1.0),),
            boundaries=())
    sigma = float(np.min(np.diff(unique))) / 100.0
    components = tuple((float(a), float(m), sigma)
                       for a, m in zip(multiplicity, unique))
    return GaussianMixture(components=components,
                           boundaries=mixture_boundaries(components))


def fit_mixture(hist: ScoreHistogram, max_components: int,
                smoothing_window: int = 5) -> GaussianMixture:
    """Fit a sum of Gaussians to a score histogram.

    Component counts from 1 to ``max_components`` are scanned. Each count
    is fitted from peak seeds (the k tallest local maxima of the histogram
    smoothed with a short moving average, with amplitude and width taken
    from the raw counts around each maximum) and, when available, from the
    previous count's solution extended by a component at the largest
    unexplained residual; the better of the two starts wins. The selected
    count is the smallest one beyond which no further fit improves the
    weighted residual norm by at least 5%; improvements made after a fit
    already sits at the Poisson statistical floor (weighted residual norm
    of order the square root of the bin count) are noise chasing and do
    not count. Bins enter with Poisson weights (square root of counts,
    floored at one).
    """
    if hist.bin_count < 3:
        raise ValueError("mixture fit needs at least 3 bins")
    if max_components < 1:
        raise ValueError("max_components must be at least 1")

    discrete = _discrete_mixture(hist.scores, max_components)
    if discrete is not None:
        return discrete

    problem = _HistogramFitProblem(hist)
    seeds = _peak_seeds(hist, smoothing_window)

    outcomes: list[tuple] = []  # (result, triples) per component count
    previous = None
    for k in range(1, max_components + 1):
        starts = []
        if k <= len(seeds):
            starts.append(list(seeds[:k]))
        if previous is not None:
            starts.append(list(previous) + [problem.residual_seed(previous)])
        fitted = None
        for start in starts:
            try:
                candidate = problem.fit(start)
            except FitError as exc:
                logger.debug("mixture fit with %d components from one start "
                             "failed: %s", k, exc)
                continue
            if fitted is None or candidate[0].residual_norm < fitted[0].residual_norm:
                fitted = candidate
        if fitted is None:
            logger.warning("mixture fit with %d components failed from all "
                           "starts; stopping the scan", k)
            break
        outcomes.append(fitted)
        previous = fitted[1]

    if not outcomes:
        raise FitError("mixture fit failed for every component count")

    norms = np.array([result.residual_norm for result, _ in outcomes])
    # With Poisson weights a complete model leaves a weighted residual norm
    # of about sqrt(bin_count); gains below that floor only chase noise.
    floor = np.sqrt(hist.bin_count)
    chosen = 0
    for k in range(1, norms.size):
        improvement = (norms[k - 1] - norms[k]) / max(norms[k - 1],
                                                      np.finfo(float).tiny)
        if norms[k - 1] > floor and improvement >= 0.05:
            chosen = k
    best, best_triples = outcomes[chosen]
    logger.info("mixture scan selected %d of up to %d components "
                "(weighted residual norm %.4g)", chosen + 1,
                max_components, best.residual_norm)

    lo, hi = problem.mean_low, problem.mean_high
    kept = []
    for amp, mean, sigma in best_triples:
        # The optimizer parks unneeded components at the amplitude floor or
        # stretches them over the whole window; they carry no usable class.
        if amp <= 2.0 * problem.amp_floor or not lo <= mean <= hi \
                or sigma > problem.span:
            logger.info("dropping degenerate mixture component "
                        "(amp %.3g, mean %.3g, sigma %.3g)", amp, mean, sigma)
            continue
        kept.append((float(amp), float(mean), float(sigma)))
    if not kept:
        raise FitError("all mixture components degenerated during the fit")
    kept.sort(key=lambda t: t[1])
    components = tuple(kept)
    boundaries = mixture_boundaries(components)
    return GaussianMixture(components=components, boundaries=boundaries)


def mixture_boundaries(
        components: tuple[tuple[float, float, float], ...]) -> tuple[float, ...]:
    """Discretization thresholds between adjacent Gaussian components.

    Each threshold is the equal-density point between neighbours: the real
    root of the log-density equality lying between the two means. If no
    root falls between them (strongly overlapping or pathological fits) the
    midpoint is used and a warning logged.
    """
    boundaries = []
    for (a1, m1, s1), (a2, m2, s2) in zip(components[:-1], components[1:]):
        midpoint = 0.5 * (m1 + m2)
        a = 0.5 / s2**2 - 0.5 / s1**2
        b = m1 / s1**2 - m2 / s2**2
        c = (0.5 * m2**2 / s2**2 - 0.5 * m1**2 / s1**2
             - np.log(a2 / a1))
        if a == 0.0:
            if b == 0.0:
                logger.warning("identical components; boundary falls back "
                               "to the midpoint %.6g", midpoint)
                boundaries.append(midpoint)
                continue
            root = -c / b
            boundaries.append(root if m1 < root < m2 else midpoint)
            if not m1 < root < m2:
                logger.warning("no equal-density point between means %.6g "
                               "and %.6g; using midpoint", m1, m2)
            continue
        disc = b**2 - 4.0 * a * c
        if disc < 0.0:
            logger.warning("no real equal-density point between means %.6g "
                           "and %.6g; using midpoint", m1, m2)
            boundaries.append(midpoint)
            continue
        sqrt_disc = np.sqrt(disc)
        q = -0.5 * (b + np.copysign(sqrt_disc, b))
        roots = [q / a]
        if q != 0.0:
            roots.append(c / q)
        inside = [r for r in roots if m1 < r < m2]
        if inside:
            boundaries.append(float(min(inside, key=lambda r: abs(r - midpoint))))
        else:
            logger.warning("no equal-density root between means %.6g and "
                           "%.6g; using midpoint", m1, m2)
            boundaries.append(midpoint)
    return tuple(float(b) for b in boundaries)


def assign_numbers(scores, mixture: GaussianMixture) -> np.ndarray:
    """Photon numbers for scores given the fitted mixture boundaries.

    A score on the lower side of a boundary belongs to the lower class; a
    score exactly on a boundary is assigned to the lower class as well.
    Scores beyond the last boundary all map to the top class.
    """
    scores = np.asarray(scores, dtype=np.float64)
    boundaries = np.asarray(mixture.boundaries, dtype=np.float64)
    return np.searchsorted(boundaries, scores, side="left").astype(np.int64)


def tail_fraction(scores, mixture: GaussianMixture) -> float:
    """Fraction of scores far above the top mixture component.

    Traces out there most likely carry more photons than the top class can
    represent; the threshold is the top mean plus four of its sigmas.
    """
    scores = np.asarray(scores, dtype=np.float64)
    _, mean, sigma = mixture.components[-1]
    return float(np.mean(scores > mean + _TAIL_SIGMAS * sigma))


class TraceClassifier(BaseEstimator, TransformerMixin):
    """Scikit-learn style estimator assigning photon numbers to traces.

    ``fit`` learns the mean trace, principal component, score histogram and
    Gaussian-mixture boundaries from a trace record; ``transform`` maps
    traces to scores and ``predict`` to integer photon numbers.

    Parameters
    ----------
    max_components : int
        Upper limit of the mixture component scan.
    bins : int or None
        Histogram bin count; ``None`` applies the record-size rule.
    sample_period : float
        Sampling period used to scale scores (assignments are invariant).
    smoothing_window : int
        Moving-average window (in bins) for peak seeding.
    """

    def __init__(self, max_components: int = 12, bins: int | None = None,
                 sample_period: float = 1.0, smoothing_window: int = 5):
        self.max_components = max_components
        self.bins = bins
        self.sample_period = sample_period
        self.smoothing_window = smoothing_window

    def fit(self, X, y=None) -> "TraceClassifier":
        x = _trace_matrix(X)
        self.mean_trace_, self.component_ = principal_component(x)
        scores = project_scores(x, self.mean_trace_, self.component_,
                                self.sample_period)
        self.histogram_ = ScoreHistogram.from_scores(scores, self.bins)
        self.mixture_ = fit_mixture(self.histogram_, self.max_components,
                                    self.smoothing_window)
        self.tail_fraction_ = tail_fraction(scores, self.mixture_)
        return self

    def _check_fitted(self) -> None:
        if not hasattr(self, "mixture_"):
            raise NotFittedError(
                "this TraceClassifier instance is not fitted yet")

    def transform(self, X) -> np.ndarray:
        self._check_fitted()
        return project_scores(_trace_matrix(X), self.mean_trace_,
                              self.component_, self.sample_period)

    def predict(self, X) -> np.ndarray:
        return assign_numbers(self.transform(X), self.mixture_)

    def fit_predict(self, X, y=None) -> np.ndarray:
        return self.fit(X).predict(X)


def round_trip(counts: CountSet, template: PulseTemplate, seed: int,
               max_components: int = 12, bins: int | None = None) -> float:
    """End-to-end misclassification rate of the trace pipeline.

    Both arms are rendered to synthetic traces, pushed through the full
    assignment chain, and compared against the true counts; the rate is the
    fraction of pulses with a wrong recovered number in either arm.
    """
    wrong = np.zeros(counts.num_pulses, dtype=bool)
    for arm in ("signal", "idler"):
        traces = generate_traces(counts, template, seed, arm=arm)
        classifier = TraceClassifier(max_components=max_components, bins=bins)
        recovered = classifier.fit_predict(traces.traces)
        wrong |= recovered != counts.arm(arm)
    return float(wrong.mean())
