"""Closed-form spectral model of a microring squeezer.

Device parameters map to the frequency-resolved second moments of the output
channel, and from there to bichromatic-homodyne quadrature variances. The
model covers strongly pumped, below-threshold pair generation in a single
signal/idler resonance pair, with loss split into the ring escape efficiency
(inside the moment formulas) and a downstream collection factor (applied
multiplicatively afterwards).

Conventions
-----------
* Vacuum quadrature variance is normalized to 1; decibel values are
  ``10 * log10(V)``.
* The local oscillator carries one tone at the signal and one at the idler
  resonance, so variances depend on the LO phases only through their sum.
* Three pump detuning modes are supported: ``locked_zero`` (the effective
  detuning is held at zero), ``locked_shifted`` (the pump tracks its
  power-shifted resonance, leaving an effective detuning equal to the gain
  times the dissipation rate), and ``explicit`` (caller-supplied value).
  ``locked_shifted`` is the default, matching how a pump laser is operated
  when following the resonance at each power.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ThresholdSingularityError
from .validation import (
    require_nonnegative,
    require_positive,
    require_unit_interval,
)

HBAR = 1.054_571_817e-34  # J s

DETUNING_MODES = ("locked_zero", "locked_shifted", "explicit")


@dataclass(frozen=True)
class RingParams:
    """Physical device parameters of the microring squeezer.

    Parameters
    ----------
    loaded_q : float
        Loaded quality factor of the signal/idler resonances.
    omega : float
        Resonance angular frequency [rad/s].
    eta_escape_signal, eta_escape_idler : float
        Ring-to-channel escape efficiency per mode, in [0, 1].
    eta_downstream : float
        Collection and detection efficiency applied after the ring, in [0, 1].
    group_velocity : float
        Group velocity in the ring waveguide [m/s].
    nonlinear_parameter : float
        Waveguide nonlinear parameter [1/(W m)].
    round_trip_length : float
        Ring circumference [m].
    dissipation_signal, dissipation_idler : float, optional
        Amplitude dissipation rates [rad/s]. Default ``omega / (2 loaded_q)``.
    """

    loaded_q: float
    omega: float
    eta_escape_signal: float = 1.0
    eta_escape_idler: float = 1.0
    eta_downstream: float = 1.0
    group_velocity: float = 1.0
    nonlinear_parameter: float = 0.0
    round_trip_length: float = 1.0
    dissipation_signal: float | None = None
    dissipation_idler: float | None = None

    def __post_init__(self) -> None:
        require_positive("loaded_q", self.loaded_q)
        require_positive("omega", self.omega)
        require_unit_interval("eta_escape_signal", self.eta_escape_signal)
        require_unit_interval("eta_escape_idler", self.eta_escape_idler)
        require_unit_interval("eta_downstream", self.eta_downstream)
        require_positive("group_velocity", self.group_velocity)
        require_nonnegative("nonlinear_parameter", self.nonlinear_parameter)
        require_positive("round_trip_length", self.round_trip_length)
        default_rate = self.omega / (2.0 * self.loaded_q)
        if self.dissipation_signal is None:
            object.__setattr__(self, "dissipation_signal", default_rate)
        if self.dissipation_idler is None:
            object.__setattr__(self, "dissipation_idler", default_rate)
        require_positive("dissipation_signal", self.dissipation_signal)
        require_positive("dissipation_idler", self.dissipation_idler)

    @property
    def dissipation_mean(self) -> float:
        """Geometric-mean dissipation rate of signal and idler [rad/s]."""
        return float(np.sqrt(self.dissipation_signal * self.dissipation_idler))


@dataclass(frozen=True)
class PumpDrive:
    """Classical intraresonator pump driving the pair-generation process.

    Only the product ``pump_photon_number * nonlinear_coupling`` enters the
    output state, so either factor may carry the physical scale.

    Parameters
    ----------
    pump_photon_number : float
        Mean intraresonator pump photon number.
    nonlinear_coupling : float
        Pair-generation coupling rate per pump photon [rad/s].
    detuning_mode : {"locked_zero", "locked_shifted", "explicit"}
        How the effective pump detuning is determined.
    detuning : float
        Effective detuning [rad/s]; used only in ``explicit`` mode.
    """

    pump_photon_number: float
    nonlinear_coupling: float
    detuning_mode: str = "locked_shifted"
    detuning: float = 0.0

    def __post_init__(self) -> None:
        require_nonnegative("pump_photon_number", self.pump_photon_number)
        require_nonnegative("nonlinear_coupling", self.nonlinear_coupling)
        if self.detuning_mode not in DETUNING_MODES:
            raise ValueError(
                f"detuning_mode must be one of {DETUNING_MODES}, "
                f"got {self.detuning_mode!r}")

    @classmethod
    def from_gain(cls, params: RingParams, gain_value: float,
                  detuning_mode: str = "locked_shifted",
                  detuning: float = 0.0) -> "PumpDrive":
        """Drive with the requested dimensionless gain on ``params``.

        The coupling is pinned to the mean dissipation rate so the photon
        number equals the gain; the output state only depends on the product.
        """
        require_nonnegative("gain", gain_value)
        return cls(pump_photon_number=gain_value,
                   nonlinear_coupling=params.dissipation_mean,
                   detuning_mode=detuning_mode, detuning=detuning)


@dataclass(frozen=True)
class MomentSpectrum:
    """Second moments of the output channel at one sideband frequency.

    ``n_signal``/``n_idler`` are the photon-flux moments of each arm and
    ``m_signal_idler`` the pair coherence, all referenced to the detection
    plane (escape and downstream losses included).
    """

    sideband_frequency: float
    n_signal: float
    n_idler: float
    m_signal_idler: complex


@dataclass(frozen=True)
class VariancePoint:
    """Quadrature variance at one sideband frequency and LO phase sum."""

    sideband_frequency: float
    phase_sum: float
    variance: float

    @property
    def variance_db(self) -> float:
        return 10.0 * np.log10(self.variance)


def nonlinear_coupling_rate(omega_bar: float, group_velocity: float,
                            nonlinear_parameter: float,
                            round_trip_length: float) -> float:
    """Pair-generation coupling rate per pump photon [rad/s].

    ``hbar * omega_bar * v_g**2 * gamma_nl / L`` for a ring of circumference
    ``L``; zero group velocity or nonlinearity gives zero coupling.
    """
    require_nonnegative("omega_bar", omega_bar)
    require_nonnegative("group_velocity", group_velocity)
    require_nonnegative("nonlinear_parameter", nonlinear_parameter)
    require_positive("round_trip_length", round_trip_length)
    return (HBAR * omega_bar * group_velocity**2 * nonlinear_parameter
            / round_trip_length)


def lambda_coeff(params: RingParams, omega_signal: float | None = None,
                 omega_idler: float | None = None) -> float:
    """Nonlinear coupling rate of the device [rad/s].

    The frequency entering the rate is the geometric combination
    ``(omega_pump**2 * omega_signal * omega_idler) ** (1/4)``; when the
    signal/idler frequencies are omitted it collapses to the resonance
    frequency of ``params``.
    """
    omega_p = params.omega
    omega_s = params.omega if omega_signal is None else require_positive(
        "omega_signal", omega_signal)
    omega_i = params.omega if omega_idler is None else require_positive(
        "omega_idler", omega_idler)
    omega_bar = (omega_p**2 * omega_s * omega_i) ** 0.25
    return nonlinear_coupling_rate(omega_bar, params.group_velocity,
                                   params.nonlinear_parameter,
                                   params.round_trip_length)


def gain(params: RingParams, drive: PumpDrive) -> float:
    """Dimensionless parametric gain of the drive on this device.

    Coupling rate times pump photon number over the dissipation rate; for
    unequal signal/idler dissipation the geometric mean is used, which keeps
    the zero-detuning threshold exactly at gain 1. The value is not clamped:
    with the pump tracking its shifted resonance the model stays below
    threshold for any gain.
    """
    rate = params.dissipation_mean
    if rate <= 0.0:
        raise ValueError("dissipation rate must be positive")
    return drive.nonlinear_coupling * drive.pump_photon_number / rate


def dwell_time(params: RingParams) -> float:
    """Resonator dwelling time ``2 Q / omega`` [s]."""
    return 2.0 * params.loaded_q / params.omega


def effective_detuning(params: RingParams, drive: PumpDrive) -> float:
    """Effective pump detuning [rad/s] implied by the drive's mode."""
    if drive.detuning_mode == "locked_zero":
        return 0.0
    if drive.detuning_mode == "locked_shifted":
        return gain(params, drive) * params.dissipation_mean
    return float(drive.detuning)


def _pump_term(drive: PumpDrive) -> float:
    # |beta_P|^2 * Lambda, the only combination the output state depends on.
    return drive.pump_photon_number * drive.nonlinear_coupling


def _denominator(params: RingParams, drive: PumpDrive, omega: float) -> complex:
    delta = effective_detuning(params, drive)
    gamma_s = params.dissipation_signal - 1j * delta
    gamma_i = params.dissipation_idler - 1j * delta
    pump_sq = _pump_term(drive) ** 2
    cavity = (np.conj(gamma_i) - 1j * omega) * (gamma_s - 1j * omega)
    den = pump_sq - cavity
    scale = max(pump_sq, abs(cavity))
    if scale > 0.0 and abs(den) < 1e-12 * scale:
        raise ThresholdSingularityError(
            "on-threshold denominator: gain="
            f"{gain(params, drive):.6g}, detuning={delta:.6g} rad/s, "
            f"sideband={omega:.6g} rad/s")
    return den


def moment_spectrum(params: RingParams, drive: PumpDrive,
                    omega: float) -> MomentSpectrum:
    """Output-channel moments at sideband frequency ``omega`` [rad/s].

    Escape efficiencies enter the moment formulas; the downstream efficiency
    scales both moments afterwards. Raises
    :class:`~ringsqueeze.errors.ThresholdSingularityError` when the drive
    sits on the parametric threshold at this sideband.
    """
    delta = effective_detuning(params, drive)
    gamma_s = params.dissipation_signal - 1j * delta
    gamma_i = params.dissipation_idler - 1j * delta
    pump = _pump_term(drive)
    den_sq = abs(_denominator(params, drive, omega)) ** 2

    rate_product = params.dissipation_signal * params.dissipation_idler
    n_common = 4.0 * rate_product * pump**2 / den_sq
    m_num = pump**2 + (np.conj(gamma_s) + 1j * omega) * (
        np.conj(gamma_i) - 1j * omega)
    m_val = (2.0 * np.sqrt(params.eta_escape_signal
                           * params.eta_escape_idler * rate_product)
             * pump * m_num / den_sq)

    eta_dn = params.eta_downstream
    return MomentSpectrum(
        sideband_frequency=omega,
        n_signal=eta_dn * params.eta_escape_signal * n_common,
        n_idler=eta_dn * params.eta_escape_idler * n_common,
        m_signal_idler=eta_dn * m_val,
    )


def quadrature_variance(params: RingParams, drive: PumpDrive, phi_signal: float,
                        phi_idler: float, omega: float) -> VariancePoint:
    """Bichromatic-homodyne quadrature variance (vacuum = 1).

    Assembled from the output moments at both sideband signs; depends on the
    LO phases only through ``phi_signal + phi_idler``.
    """
    phase_sum = float(phi_signal) + float(phi_idler)
    n_sum, m_bar = _assembled_moments(params, drive, omega)
    variance = 1.0 + n_sum + 2.0 * np.real(np.exp(-1j * phase_sum) * m_bar)
    return VariancePoint(sideband_frequency=omega, phase_sum=phase_sum,
                         variance=float(variance))


def _assembled_moments(params: RingParams, drive: PumpDrive,
                       omega: float) -> tuple[float, complex]:
    upper = moment_spectrum(params, drive, omega)
    lower = moment_spectrum(params, drive, -omega)
    n_sum = 0.5 * (upper.n_signal + upper.n_idler
                   + lower.n_signal + lower.n_idler)
    m_bar = 0.5 * (upper.m_signal_idler + lower.m_signal_idler)
    return float(n_sum), complex(m_bar)


def extremal_from_moments(params: RingParams, drive: PumpDrive,
                          omega: float) -> tuple[float, float]:
    """Phase-extremized (max, min) variances assembled from the moments."""
    n_sum, m_bar = _assembled_moments(params, drive, omega)
    mag = 2.0 * abs(m_bar)
    return 1.0 + n_sum + mag, 1.0 + n_sum - mag


def extremal_variances(g, eta):
    """Extremal variances at zero sideband with the pump tracking its
    shifted resonance: ``1 + 4*eta*g*(2g ± sqrt(1 + 4g**2))``.

    Threshold-free: valid for any nonnegative gain. The product
    ``v_plus * v_minus`` equals 1 at unit efficiency, and the minimum is
    bounded below by ``1 - eta``.
    """
    g = np.asarray(g, dtype=np.float64)
    eta = np.asarray(eta, dtype=np.float64)
    if np.any(g < 0):
        raise ValueError("gain must be nonnegative")
    if np.any((eta < 0) | (eta > 1)):
        raise ValueError("efficiency must lie in [0, 1]")
    root = np.sqrt(1.0 + 4.0 * g**2)
    v_plus = 1.0 + 4.0 * eta * g * (2.0 * g + root)
    # 2g - root == -1/(2g + root) exactly; the left side cancels
    # catastrophically at large gain.
    v_minus = 1.0 - 4.0 * eta * g / (2.0 * g + root)
    if v_plus.ndim == 0:
        return float(v_plus), float(v_minus)
    return v_plus, v_minus


def variances_delta_zero(g, eta, omega_over_gamma):
    """Extremal variances at zero effective detuning.

    ``V± = 1 ± 4*g*eta / ((1 ∓ g)**2 + (omega/gamma)**2)``; the
    anti-squeezed branch diverges at the threshold ``g = 1`` on resonance,
    which raises :class:`~ringsqueeze.errors.ThresholdSingularityError`.
    """
    g = np.asarray(g, dtype=np.float64)
    eta = np.asarray(eta, dtype=np.float64)
    w = np.asarray(omega_over_gamma, dtype=np.float64)
    if np.any(g < 0):
        raise ValueError("gain must be nonnegative")
    if np.any((eta < 0) | (eta > 1)):
        raise ValueError("efficiency must lie in [0, 1]")
    if np.any((g >= 1.0) & (w == 0.0)):
        raise ThresholdSingularityError(
            f"zero-detuning threshold reached: gain={float(np.max(g)):.6g} >= 1 "
            "at zero sideband")
    v_plus = 1.0 + 4.0 * g * eta / ((1.0 - g)**2 + w**2)
    v_minus = 1.0 - 4.0 * g * eta / ((1.0 + g)**2 + w**2)
    if v_plus.ndim == 0:
        return float(v_plus), float(v_minus)
    return v_plus, v_minus


def extremal_variances_general(g, eta, omega_over_gamma, delta_over_gamma):
    """Phase-extremized variances for equal signal/idler dissipation.

    Closed form in the dimensionless gain, total efficiency, sideband
    frequency, and effective detuning (both in units of the dissipation
    rate). This is the model curve used by the spectrum fitters; it agrees
    with the moment-assembled route for symmetric devices.
    """
    g = np.asarray(g, dtype=np.float64)
    eta = np.asarray(eta, dtype=np.float64)
    w = np.asarray(omega_over_gamma, dtype=np.float64)
    d = np.asarray(delta_over_gamma, dtype=np.float64)
    interference = (1.0 + 1j * d) ** 2 + g**2 + w**2
    denom = (g**2 - (1.0 + d**2) + w**2) ** 2 + 4.0 * w**2
    if np.any(denom == 0.0):
        raise ThresholdSingularityError(
            "on-threshold denominator in closed-form variances")
    base = 4.0 * eta * g / denom
    mag = np.abs(interference)
    v_plus = 1.0 + base * (2.0 * g + mag)
    v_minus = 1.0 + base * (2.0 * g - mag)
    if v_plus.ndim == 0:
        return float(v_plus), float(v_minus)
    return v_plus, v_minus


def squeezing_spectrum(params: RingParams, drive: PumpDrive,
                       omega_grid) -> np.ndarray:
    """Phase-extremized squeezing spectrum over a sideband grid.

    Returns an array of shape ``(len(omega_grid), 3)`` with columns
    ``(omega [rad/s], anti-squeezed variance [dB], squeezed variance [dB])``.
    """
    omega_grid = np.atleast_1d(np.asarray(omega_grid, dtype=np.float64))
    out = np.empty((omega_grid.size, 3))
    for i, omega in enumerate(omega_grid):
        v_plus, v_minus = extremal_from_moments(params, drive, float(omega))
        out[i] = (omega, 10.0 * np.log10(v_plus), 10.0 * np.log10(v_minus))
    return out
