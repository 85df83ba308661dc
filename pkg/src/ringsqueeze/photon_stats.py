"""Photon-number statistics of lossy multimode squeezed vacuum.

Per-pulse signal/idler photon numbers are sampled exactly from the model
state: for each independent squeezed mode the pair number follows
``P(n) = (1 - q) q**n`` with ``q = tanh(r)**2``, each arm is thinned
binomially by its transmission, and an independent Poisson background is
added per arm. Every stage draws exactly one uniform per (pulse, mode) from
its own counter-based substream, so results are bit-identical for a fixed
``(spectrum, num_pulses, seed)`` no matter how the work is chunked or
threaded.

Estimators follow the subset protocol used for error bars: the record is
split into equal subsets, the statistic is evaluated per subset, and the
subset mean/standard deviation are reported. Pulses with more than
``SATURATION_THRESHOLD`` photons in either arm are kept in the record but
flagged; estimators skip them by default.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDataError
from .fitting import SubsetStats, split_subsets
from .rng import (
    STAGE_NOISE_IDLER,
    STAGE_NOISE_SIGNAL,
    STAGE_PAIR,
    STAGE_THIN_IDLER,
    STAGE_THIN_SIGNAL,
    uniform_block,
)
from .validation import (
    require_nonnegative,
    require_seed,
    require_unit_interval,
)

logger = logging.getLogger(__name__)

SATURATION_THRESHOLD = 10  # photon-number resolution limit per arm
PAIR_TAIL_MASS = 1e-12     # cumulative mass beyond the pair-number cap
_CHUNK = 65536             # pulses per work unit; multiple of 4 (counter blocks)


@dataclass(frozen=True)
class SchmidtSpectrum:
    """Independent squeezed temporal modes with per-arm loss and background.

    Parameters
    ----------
    squeezing_parameters : sequence of float
        One squeezing parameter per temporal mode, all >= 0.
    eta_signal, eta_idler : float
        Arm transmissions in [0, 1].
    noise_mean_signal, noise_mean_idler : float
        Mean Poisson background photons per pulse in each arm.
    """

    squeezing_parameters: tuple[float, ...]
    eta_signal: float = 1.0
    eta_idler: float = 1.0
    noise_mean_signal: float = 0.0
    noise_mean_idler: float = 0.0

    def __post_init__(self) -> None:
        values = tuple(float(r) for r in self.squeezing_parameters)
        if not values:
            raise ValueError("squeezing_parameters must be nonempty")
        for r in values:
            require_nonnegative("squeezing parameter", r)
        object.__setattr__(self, "squeezing_parameters", values)
        require_unit_interval("eta_signal", self.eta_signal)
        require_unit_interval("eta_idler", self.eta_idler)
        require_nonnegative("noise_mean_signal", self.noise_mean_signal)
        require_nonnegative("noise_mean_idler", self.noise_mean_idler)

    @property
    def mode_count(self) -> int:
        return len(self.squeezing_parameters)


@dataclass(frozen=True)
class CountSet:
    """Per-pulse integer photon numbers for both arms.

    ``saturated`` flags pulses whose signal or idler count exceeds
    ``SATURATION_THRESHOLD``; such counts are retained numerically.
    """

    n_signal: np.ndarray
    n_idler: np.ndarray
    seed: int
    saturated: np.ndarray

    def __post_init__(self) -> None:
        ns = np.asarray(self.n_signal, dtype=np.int64)
        ni = np.asarray(self.n_idler, dtype=np.int64)
        if ns.shape != ni.shape or ns.ndim != 1:
            raise ValueError("count arrays must be 1-D and equally long")
        if ns.size == 0:
            raise ValueError("count set must contain at least one pulse")
        if ns.min(initial=0) < 0 or ni.min(initial=0) < 0:
            raise ValueError("counts must be nonnegative")
        sat = np.asarray(self.saturated, dtype=bool)
        if sat.shape != ns.shape:
            raise ValueError("saturation flags must match the pulse count")
        object.__setattr__(self, "n_signal", ns)
        object.__setattr__(self, "n_idler", ni)
        object.__setattr__(self, "saturated", sat)

    @property
    def num_pulses(self) -> int:
        return int(self.n_signal.size)

    def arm(self, name: str) -> np.ndarray:
        if name == "signal":
            return self.n_signal
        if name == "idler":
            return self.n_idler
        raise ValueError(f"arm must be 'signal' or 'idler', got {name!r}")

    def select(self, include_saturated: bool = False) -> tuple[np.ndarray, np.ndarray]:
        """Signal/idler arrays, dropping flagged pulses unless requested."""
        if include_saturated:
            return self.n_signal, self.n_idler
        keep = ~self.saturated
        return self.n_signal[keep], self.n_idler[keep]


@dataclass(frozen=True)
class CountStatistics:
    """Subset-protocol summary of a count record."""

    n_tot: SubsetStats
    vardiff: SubsetStats
    nrf: SubsetStats
    g2_signal: SubsetStats
    g2_idler: SubsetStats
    num_pulses: int
    num_saturated: int
    subsets: int
    include_saturated: bool


def _thermal_pairs(u: np.ndarray, r: float) -> np.ndarray:
    """Inverse-CDF pair numbers for one squeezed mode.

    The distribution is geometric in form with ratio ``q = tanh(r)**2``; the
    inverse CDF is evaluated in closed form and capped where the cumulative
    mass reaches ``1 - PAIR_TAIL_MASS`` for exact tail control.
    """
    if r == 0.0:
        return np.zeros(u.shape, dtype=np.int64)
    q = np.tanh(r) ** 2
    cap = max(0, int(np.ceil(np.log(PAIR_TAIL_MASS) / np.log(q))) - 1)
    n = np.floor(np.log1p(-u) / np.log(q)).astype(np.int64)
    return np.clip(n, 0, cap)


def _binomial_thin(u: np.ndarray, n: np.ndarray, p: float) -> np.ndarray:
    """Inverse-CDF binomial thinning; one uniform per draw.

    The pmf is accumulated with the stable ratio recursion, vectorized over
    pulses, so each entry is the exact binomial quantile of its uniform.
    """
    if p <= 0.0:
        return np.zeros(n.shape, dtype=np.int64)
    if p >= 1.0:
        return n.astype(np.int64)
    kmax = int(n.max(initial=0))
    nf = n.astype(np.float64)
    pmf = np.exp(nf * np.log1p(-p))
    cum = pmf.copy()
    res = np.zeros(n.shape, dtype=np.int64)
    ratio = p / (1.0 - p)
    for k in range(1, kmax + 1):
        res += u > cum
        pmf *= np.maximum(nf - k + 1.0, 0.0) / k * ratio
        cum += pmf
    return np.minimum(res, n)


def _poisson_background(u: np.ndarray, mu: float) -> np.ndarray:
    """Inverse-CDF Poisson background; one uniform per draw."""
    if mu <= 0.0:
        return np.zeros(u.shape, dtype=np.int64)
    cap = int(np.ceil(mu + 10.0 * np.sqrt(mu) + 30.0))
    pmf = np.full(u.shape, np.exp(-mu))
    cum = pmf.copy()
    res = np.zeros(u.shape, dtype=np.int64)
    for k in range(1, cap + 1):
        res += u > cum
        pmf *= mu / k
        cum += pmf
    return res


def _sample_range(spec: SchmidtSpectrum, seed: int, start: int,
                  size: int) -> tuple[np.ndarray, np.ndarray]:
    ns = np.zeros(size, dtype=np.int64)
    ni = np.zeros(size, dtype=np.int64)
    for mode, r in enumerate(spec.squeezing_parameters):
        pairs = _thermal_pairs(
            uniform_block(seed, STAGE_PAIR + mode, start, size), r)
        ns += _binomial_thin(
            uniform_block(seed, STAGE_THIN_SIGNAL + mode, start, size),
            pairs, spec.eta_signal)
        ni += _binomial_thin(
            uniform_block(seed, STAGE_THIN_IDLER + mode, start, size),
            pairs, spec.eta_idler)
    ns += _poisson_background(
        uniform_block(seed, STAGE_NOISE_SIGNAL, start, size),
        spec.noise_mean_signal)
    ni += _poisson_background(
        uniform_block(seed, STAGE_NOISE_IDLER, start, size),
        spec.noise_mean_idler)
    return ns, ni


def sample_counts(spec: SchmidtSpectrum, num_pulses: int, seed: int,
                  threads: int | None = None) -> CountSet:
    """Sample per-pulse signal/idler photon numbers.

    Deterministic in ``(spec, num_pulses, seed)``: every pulse reads fixed
    counter positions of its substreams, so the result does not depend on
    chunking or the number of worker threads.
    """
    if num_pulses < 1:
        raise ValueError("num_pulses must be at least 1")
    seed = require_seed("seed", seed)

    n_signal = np.zeros(num_pulses, dtype=np.int64)
    n_idler = np.zeros(num_pulses, dtype=np.int64)
    ranges = [(start, min(start + _CHUNK, num_pulses))
              for start in range(0, num_pulses, _CHUNK)]

    def work(bounds: tuple[int, int]) -> None:
        start, stop = bounds
        ns, ni = _sample_range(spec, seed, start, stop - start)
        n_signal[start:stop] = ns
        n_idler[start:stop] = ni

    if threads and threads > 1 and len(ranges) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, ranges))
    else:
        for bounds in ranges:
            work(bounds)

    saturated = (n_signal > SATURATION_THRESHOLD) | (n_idler > SATURATION_THRESHOLD)
    return CountSet(n_signal=n_signal, n_idler=n_idler, seed=seed,
                    saturated=saturated)


def expected_means(spec: SchmidtSpectrum) -> tuple[float, float]:
    """Exact per-arm mean photon numbers (including background)."""
    total = sum(np.sinh(r) ** 2 for r in spec.squeezing_parameters)
    return (spec.eta_signal * total + spec.noise_mean_signal,
            spec.eta_idler * total + spec.noise_mean_idler)


def expected_vardiff_total(spec: SchmidtSpectrum) -> tuple[float, float]:
    """Exact number-difference variance and mean total photon number.

    Uses the general unequal-transmission expression for the lossy
    multimode pair state; independent Poisson backgrounds add their means
    to both the difference variance and the total.
    """
    s = np.array([np.sinh(r) ** 2 for r in spec.squeezing_parameters])
    c = s + 1.0  # cosh^2 = sinh^2 + 1
    es, ei = spec.eta_signal, spec.eta_idler
    vardiff = (es * np.sum(s * (es * s + 1.0))
               + ei * np.sum(s * (ei * s + 1.0))
               - 2.0 * es * ei * np.sum(s * c))
    vardiff += spec.noise_mean_signal + spec.noise_mean_idler
    n_tot = ((es + ei) * float(np.sum(s))
             + spec.noise_mean_signal + spec.noise_mean_idler)
    return float(vardiff), float(n_tot)


def vardiff_and_total(counts: CountSet,
                      include_saturated: bool = False) -> tuple[float, float]:
    """Sample number-difference variance (unbiased) and mean total count."""
    ns, ni = counts.select(include_saturated)
    if ns.size < 2:
        raise DegenerateDataError(
            "difference variance needs at least 2 pulses "
            f"(have {ns.size} after saturation filtering)")
    diff = ns.astype(np.float64) - ni.astype(np.float64)
    total = ns.astype(np.float64) + ni.astype(np.float64)
    return float(diff.var(ddof=1)), float(total.mean())


def _subset_pairs(counts: CountSet, subsets: int,
                  include_saturated: bool) -> list[tuple[np.ndarray, np.ndarray]]:
    ns, ni = counts.select(include_saturated)
    stacked = np.column_stack([ns, ni])
    return [(part[:, 0], part[:, 1]) for part in split_subsets(stacked, subsets)]


def nrf(counts: CountSet, subsets: int = 8,
        include_saturated: bool = False) -> SubsetStats:
    """Noise reduction factor (difference variance over mean total count).

    Estimated per subset; a value below one indicates nonclassical
    number-difference correlations. Raises
    :class:`~ringsqueeze.errors.DegenerateDataError` when a subset records
    no photons at all.
    """
    values = []
    for ns, ni in _subset_pairs(counts, subsets, include_saturated):
        diff = ns.astype(np.float64) - ni.astype(np.float64)
        total_mean = float((ns + ni).mean())
        if total_mean == 0.0:
            raise DegenerateDataError(
                "noise reduction factor undefined: subset has zero mean "
                "photon number")
        values.append(diff.var(ddof=1) / total_mean)
    return SubsetStats.from_values(values)


def g2(counts: CountSet, arm: str = "signal", subsets: int = 8,
       include_saturated: bool = False) -> SubsetStats:
    """Unheralded second-order correlation of one arm.

    ``(<n**2> - <n>) / <n>**2`` per subset. The estimator cannot fall below
    ``1 - 1/<n>``; a zero-mean arm raises
    :class:`~ringsqueeze.errors.DegenerateDataError` instead of returning
    NaN.
    """
    index = 0 if counts.arm(arm) is counts.n_signal else 1
    values = []
    for pair in _subset_pairs(counts, subsets, include_saturated):
        n = pair[index].astype(np.float64)
        mean = float(n.mean())
        if mean == 0.0:
            raise DegenerateDataError(
                f"second-order correlation undefined: {arm} arm has zero "
                "mean in a subset")
        values.append((float((n**2).mean()) - mean) / mean**2)
    return SubsetStats.from_values(values)


def count_statistics(counts: CountSet, subsets: int = 8,
                     include_saturated: bool = False) -> CountStatistics:
    """All subset-protocol estimators of a count record in one pass."""
    totals, vardiffs = [], []
    for ns, ni in _subset_pairs(counts, subsets, include_saturated):
        diff = ns.astype(np.float64) - ni.astype(np.float64)
        totals.append((ns + ni).mean())
        vardiffs.append(diff.var(ddof=1))
    return CountStatistics(
        n_tot=SubsetStats.from_values(totals),
        vardiff=SubsetStats.from_values(vardiffs),
        nrf=nrf(counts, subsets, include_saturated),
        g2_signal=g2(counts, "signal", subsets, include_saturated),
        g2_idler=g2(counts, "idler", subsets, include_saturated),
        num_pulses=counts.num_pulses,
        num_saturated=int(counts.saturated.sum()),
        subsets=subsets,
        include_saturated=include_saturated,
    )


def effective_mode_number(g2_value: float) -> float:
    """Equivalent number of equally squeezed modes for a measured g2.

    Assumes the equal-population model, under which ``K = 1 / (g2 - 1)``;
    report alongside that caveat. Values at or below 1 are outside the
    model and raise ``ValueError``.
    """
    g2_value = float(g2_value)
    if g2_value <= 1.0:
        raise ValueError(
            f"effective mode number undefined for g2 <= 1 (got {g2_value!r})")
    return 1.0 / (g2_value - 1.0)


def noise_degraded_g2(r: float, k_modes: float, noise_mean: float) -> float:
    """Predicted arm g2 for equal squeezed modes plus Poisson background.

    With ``k_modes`` equally squeezed modes the noiseless value is
    ``1 + 1/k_modes``; an independent Poisson background of mean
    ``noise_mean`` pulls it toward 1 by the squared fraction of thermal
    photons in the arm: ``1 + (g0 - 1) * (n_th / (n_th + n_p))**2``.
    """
    require_nonnegative("r", r)
    require_nonnegative("noise_mean", noise_mean)
    if k_modes <= 0:
        raise ValueError("k_modes must be positive")
    g0 = 1.0 + 1.0 / k_modes
    n_th = k_modes * np.sinh(r) ** 2
    if n_th == 0.0 and noise_mean == 0.0:
        return g0
    ratio = n_th / (n_th + noise_mean)
    return 1.0 + (g0 - 1.0) * ratio**2
