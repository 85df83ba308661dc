"""Least-squares fitters for model parameters.

A compact damped Gauss-Newton solver backs the nonlinear fits. Parameter
bounds are handled by reparameterization (logit for efficiencies, log for
positive scales) so the inner solver is unconstrained; standard errors are
propagated back through the transform. Linear fits (slopes of count
statistics, log-log power scaling) use ordinary least squares in closed form.

All decibel-to-linear conversions happen at the entry points: the spectrum
fitters operate on linear variances, which keeps residuals well scaled when
the squeezed branch sits far below unity.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ConditioningError, FitConvergenceError
from .ring import extremal_variances, extremal_variances_general

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1e-8
DEFAULT_MAX_ITERATIONS = 500

_TRANSFORMS = ("linear", "log", "logit")


@dataclass(frozen=True)
class Parameter:
    """One fit parameter: external name/initial value plus its transform.

    ``log`` keeps the external value above ``floor`` (default 0), ``logit``
    confines it to the open interval (``low``, ``high``) (default (0, 1)),
    ``linear`` leaves it unconstrained.
    """

    name: str
    initial: float
    transform: str = "linear"
    floor: float = 0.0
    low: float = 0.0
    high: float = 1.0

    def __post_init__(self) -> None:
        if self.transform not in _TRANSFORMS:
            raise ValueError(f"unknown transform {self.transform!r}")
        if self.floor != 0.0 and self.transform != "log":
            raise ValueError("floor is only meaningful for the log transform")
        if self.transform == "logit" and not self.low < self.high:
            raise ValueError("logit transform needs low < high")

    def encode(self, value: float) -> float:
        if self.transform == "log":
            if value <= self.floor:
                raise ValueError(
                    f"{self.name} must exceed {self.floor}, got {value!r}")
            return float(np.log(value - self.floor))
        if self.transform == "logit":
            if not self.low < value < self.high:
                raise ValueError(
                    f"{self.name} must lie strictly inside "
                    f"({self.low}, {self.high}), got {value!r}")
            fraction = (value - self.low) / (self.high - self.low)
            return float(np.log(fraction / (1.0 - fraction)))
        return float(value)

    def decode(self, theta: float) -> float:
        if self.transform == "log":
            return float(self.floor + np.exp(theta))
        if self.transform == "logit":
            fraction = 1.0 / (1.0 + np.exp(-theta))
            return float(self.low + (self.high - self.low) * fraction)
        return float(theta)

    def scale(self, theta: float) -> float:
        """``d external / d internal`` at ``theta`` (for error propagation)."""
        if self.transform == "log":
            return float(np.exp(theta))
        if self.transform == "logit":
            x = 1.0 / (1.0 + np.exp(-theta))
            return float((self.high - self.low) * x * (1.0 - x))
        return 1.0


@dataclass(frozen=True)
class FitResult:
    """Outcome of a least-squares fit.

    ``converged`` is true only when the residual gradient dropped below the
    tolerance; standard errors come from the residual-scaled normal
    equations at the solution.
    """

    names: tuple[str, ...]
    values: np.ndarray
    stderr: np.ndarray
    residual_norm: float
    iterations: int
    converged: bool
    details: dict = field(default_factory=dict)

    @property
    def params(self) -> dict[str, float]:
        return dict(zip(self.names, (float(v) for v in self.values)))

    @property
    def errors(self) -> dict[str, float]:
        return dict(zip(self.names, (float(e) for e in self.stderr)))

    def __getitem__(self, name: str) -> float:
        return self.params[name]


@dataclass(frozen=True)
class SubsetStats:
    """Per-subset values of an estimator with their mean and spread."""

    values: np.ndarray
    mean: float
    std: float

    @classmethod
    def from_values(cls, values) -> "SubsetStats":
        arr = np.asarray(values, dtype=np.float64)
        if arr.size < 2:
            raise ValueError("subset statistics need at least 2 subsets")
        return cls(values=arr, mean=float(arr.mean()),
                   std=float(arr.std(ddof=1)))


def subset_stats(values) -> SubsetStats:
    """Mean and sample standard deviation across subset-level values."""
    return SubsetStats.from_values(values)


def split_subsets(array: np.ndarray, subsets: int) -> list[np.ndarray]:
    """Split into ``subsets`` equal parts, dropping (and logging) a remainder."""
    if subsets < 2:
        raise ValueError("at least 2 subsets are required")
    array = np.asarray(array)
    size = array.shape[0] // subsets
    if size == 0:
        raise ValueError(
            f"cannot split {array.shape[0]} records into {subsets} subsets")
    dropped = array.shape[0] - size * subsets
    if dropped:
        logger.info("dropping %d records to form %d equal subsets",
                    dropped, subsets)
    return [array[i * size:(i + 1) * size] for i in range(subsets)]


def central_difference_jacobian(residual_fn, theta: np.ndarray) -> np.ndarray:
    """Central-difference Jacobian of a residual vector."""
    theta = np.asarray(theta, dtype=np.float64)
    r0 = np.asarray(residual_fn(theta))
    jac = np.empty((r0.size, theta.size))
    for j in range(theta.size):
        h = (np.finfo(float).eps ** (1.0 / 3.0)) * max(1.0, abs(theta[j]))
        up = theta.copy()
        up[j] += h
        down = theta.copy()
        down[j] -= h
        jac[:, j] = (np.asarray(residual_fn(up))
                     - np.asarray(residual_fn(down))) / (2.0 * h)
    return jac


def _check_conditioning(normal: np.ndarray, names: tuple[str, ...],
                        condition_limit: float | None) -> None:
    diag = np.diag(normal)
    if not np.all(np.isfinite(diag)):
        j = int(np.argmin(np.isfinite(diag)))
        raise ConditioningError(
            f"parameter '{names[j]}' produced non-finite derivatives",
            parameter_pair=(names[j], names[j]))
    if condition_limit is None:
        # Damping with a floored scale keeps flat directions harmless.
        return
    for j, d in enumerate(diag):
        if d == 0.0:
            raise ConditioningError(
                f"parameter '{names[j]}' has no effect on the residuals",
                parameter_pair=(names[j], names[j]))
    if np.linalg.cond(normal) > condition_limit:
        corr = normal / np.sqrt(np.outer(diag, diag))
        np.fill_diagonal(corr, 0.0)
        i, j = np.unravel_index(np.argmax(np.abs(corr)), corr.shape)
        raise ConditioningError(
            "singular normal equations: parameters "
            f"'{names[i]}' and '{names[j]}' are degenerate "
            f"(correlation {corr[i, j]:+.6f})",
            parameter_pair=(names[i], names[j]))


def levenberg_marquardt(residual_fn, parameters: list[Parameter], *,
                        jacobian_fn=None, tol: float = DEFAULT_TOLERANCE,
                        max_iter: int = DEFAULT_MAX_ITERATIONS,
                        condition_limit: float | None = 1e14,
                        residual_scale: float | None = None,
                        details: dict | None = None) -> FitResult:
    """Damped Gauss-Newton minimization of ``sum(residual_fn(theta)**2)``.

    ``residual_fn`` (and the optional analytic ``jacobian_fn``) operate in
    the internal, transformed parameter space. Convergence requires the
    residual gradient to drop below ``tol`` in the scale-free sense
    ``||J' r|| <= tol * ||J||_F * ||r||`` (the residual is orthogonal to
    the model tangent space to one part in ``1/tol``), or the residual
    itself to hit the floating-point floor, where the gradient is pure
    rounding noise; exceeding ``max_iter`` raises
    :class:`~ringsqueeze.errors.FitConvergenceError` with a residual report.
    Structurally singular normal equations (conditioning beyond
    ``condition_limit`` at the starting point, where the model is still
    healthy) raise :class:`~ringsqueeze.errors.ConditioningError` naming
    the most degenerate parameter pair; pass ``None`` to rely on damping
    alone. Transient ill-conditioning later in the descent is absorbed by
    the damping. ``residual_scale`` (the norm of the data vector behind
    the residuals) pins the residual floor at ``1e-12`` of the data scale.
    """
    names = tuple(p.name for p in parameters)
    theta = np.array([p.encode(p.initial) for p in parameters], dtype=np.float64)
    residual = np.asarray(residual_fn(theta), dtype=np.float64)
    cost = float(residual @ residual)
    cost_floor = ((8.0 * np.finfo(float).eps) ** 2 * residual.size
                  * max(1.0, cost))
    if residual_scale is not None:
        cost_floor = max(cost_floor, (1e-12 * residual_scale) ** 2)
    damping = 1e-3
    jac = None
    converged = False
    iterations = 0

    for iterations in range(1, max_iter + 1):
        if jacobian_fn is not None:
            jac = np.asarray(jacobian_fn(theta), dtype=np.float64)
        else:
            jac = central_difference_jacobian(residual_fn, theta)
        gradient = jac.T @ residual
        gradient_scale = max(np.linalg.norm(jac) * np.sqrt(cost),
                             np.finfo(float).tiny)
        if cost <= cost_floor or np.linalg.norm(gradient) <= tol * gradient_scale:
            converged = True
            break
        normal = jac.T @ jac
        _check_conditioning(normal, names,
                            condition_limit if iterations == 1 else None)
        diag = np.diag(normal)
        # Floored damping keeps near-flat directions regularized too.
        damping_scale = np.maximum(diag, 1e-9 * diag.max())

        improved = False
        growth = 2.0
        for _ in range(60):
            damped = normal + damping * np.diag(damping_scale)
            try:
                step = np.linalg.solve(damped, -gradient)
            except np.linalg.LinAlgError as exc:
                raise ConditioningError(
                    f"normal equations could not be solved: {exc}") from exc
            candidate = theta + step
            step_ok = (np.all(np.isfinite(candidate))
                       and np.linalg.norm(step)
                       <= 1e3 * (1.0 + np.linalg.norm(theta)))
            if step_ok:
                r_new = np.asarray(residual_fn(candidate), dtype=np.float64)
                cost_new = float(r_new @ r_new)
                predicted = float(step @ (damping * damping_scale * step)
                                  - step @ gradient)
                if np.isfinite(cost_new) and cost_new < cost:
                    # Gain-ratio damping update (smooth near the optimum).
                    ratio = (cost - cost_new) / max(predicted,
                                                    np.finfo(float).tiny)
                    factor = max(1.0 / 3.0, 1.0 - (2.0 * ratio - 1.0) ** 3)
                    damping = max(damping * factor, 1e-14)
                    theta, residual, cost = candidate, r_new, cost_new
                    improved = True
                    break
            damping *= growth
            growth *= 2.0
            if damping > 1e13:
                break
        if not improved:
            if cost <= cost_floor:
                converged = True
                break
            raise FitConvergenceError(
                f"fit stalled after {iterations} iterations: residual norm "
                f"{np.sqrt(cost):.6g}, gradient max {np.max(np.abs(gradient)):.3g}",
                residual_norm=float(np.sqrt(cost)), iterations=iterations)
    else:
        raise FitConvergenceError(
            f"fit did not converge within {max_iter} iterations: residual "
            f"norm {np.sqrt(cost):.6g}",
            residual_norm=float(np.sqrt(cost)), iterations=max_iter)

    values = np.array([p.decode(t) for p, t in zip(parameters, theta)])
    stderr = _standard_errors(jac, cost, parameters, theta)
    info = dict(details or {})
    return FitResult(names=names, values=values, stderr=stderr,
                     residual_norm=float(np.sqrt(cost)),
                     iterations=iterations, converged=converged, details=info)


def _standard_errors(jac: np.ndarray, cost: float,
                     parameters: list[Parameter],
                     theta: np.ndarray) -> np.ndarray:
    m, n = jac.shape
    dof = max(m - n, 1)
    try:
        cov = np.linalg.inv(jac.T @ jac) * (cost / dof)
        sigma_internal = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    except np.linalg.LinAlgError:
        sigma_internal = np.full(n, np.nan)
    scales = np.array([p.scale(t) for p, t in zip(parameters, theta)])
    return sigma_internal * scales


def _ols(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float, float, float]:
    """Slope/intercept with standard errors and residual norm."""
    m = x.size
    x_mean = x.mean()
    y_mean = y.mean()
    sxx = float(np.sum((x - x_mean) ** 2))
    if sxx == 0.0:
        raise ConditioningError(
            "singular normal equations: parameters 'slope' and 'intercept' "
            "are degenerate (all abscissae identical)",
            parameter_pair=("slope", "intercept"))
    slope = float(np.sum((x - x_mean) * (y - y_mean)) / sxx)
    intercept = float(y_mean - slope * x_mean)
    resid = y - slope * x - intercept
    rss = float(resid @ resid)
    sigma_sq = rss / max(m - 2, 1)
    slope_err = float(np.sqrt(sigma_sq / sxx))
    intercept_err = float(np.sqrt(sigma_sq * (1.0 / m + x_mean**2 / sxx)))
    return slope, intercept, slope_err, intercept_err, float(np.sqrt(rss))


def fit_nrf_slope(n_tot, vardiff) -> FitResult:
    """Slope of number-difference variance against mean total photon number.

    The efficiency estimate is one minus the slope; its standard error is
    the slope's. At least 3 points are required.
    """
    x = np.asarray(n_tot, dtype=np.float64)
    y = np.asarray(vardiff, dtype=np.float64)
    if x.size != y.size:
        raise ValueError("n_tot and vardiff must have equal length")
    if x.size < 3:
        raise ValueError("slope fit needs at least 3 points")
    slope, intercept, slope_err, intercept_err, rnorm = _ols(x, y)
    return FitResult(
        names=("slope", "intercept", "eta"),
        values=np.array([slope, intercept, 1.0 - slope]),
        stderr=np.array([slope_err, intercept_err, slope_err]),
        residual_norm=rnorm, iterations=1, converged=True,
        details={"method": "ols", "points": int(x.size)})


def fit_power_scaling(power, n_tot) -> FitResult:
    """Log-log slope of mean photon number against pump power."""
    p = np.asarray(power, dtype=np.float64)
    n = np.asarray(n_tot, dtype=np.float64)
    if p.size != n.size:
        raise ValueError("power and n_tot must have equal length")
    if p.size < 3:
        raise ValueError("power-scaling fit needs at least 3 points")
    if np.any(p <= 0) or np.any(n <= 0):
        raise ValueError("power-scaling fit needs strictly positive values")
    slope, intercept, slope_err, intercept_err, rnorm = _ols(np.log(p), np.log(n))
    return FitResult(
        names=("slope", "intercept"),
        values=np.array([slope, intercept]),
        stderr=np.array([slope_err, intercept_err]),
        residual_norm=rnorm, iterations=1, converged=True,
        details={"method": "ols-loglog", "points": int(p.size)})


_MODEL_MODES = ("locked_shifted", "locked_zero", "free")


def fit_spectrum(omega, v_db, branch, model_mode: str = "locked_shifted", *,
                 initial: dict[str, float] | None = None,
                 tol: float = DEFAULT_TOLERANCE,
                 max_iter: int = DEFAULT_MAX_ITERATIONS) -> FitResult:
    """Fit the squeezing-spectrum model to phase-extremized variance data.

    Parameters
    ----------
    omega : array
        Sideband frequencies [rad/s].
    v_db : array
        Measured variance in dB.
    branch : array
        +1 for the anti-squeezed branch, -1 for the squeezed branch.
    model_mode : {"locked_shifted", "locked_zero", "free"}
        Detuning handling: tied to the gain, zero, or a free parameter.

    Returns a :class:`FitResult` over ``(g, eta, gamma)`` plus ``delta`` in
    ``free`` mode. Fitting happens in linear variance space.
    """
    omega = np.asarray(omega, dtype=np.float64)
    v_db = np.asarray(v_db, dtype=np.float64)
    branch = np.asarray(branch, dtype=np.int64)
    if not (omega.size == v_db.size == branch.size):
        raise ValueError("omega, v_db and branch must have equal length")
    if omega.size < 4:
        raise ValueError("spectrum fit needs at least 4 points")
    if not np.all(np.isin(branch, (-1, 1))):
        raise ValueError("branch entries must be +1 or -1")
    if model_mode not in _MODEL_MODES:
        raise ValueError(f"model_mode must be one of {_MODEL_MODES}")

    abs_omega = np.abs(omega)
    positive = abs_omega[abs_omega > 0]
    span = (positive.max() / positive.min()) if positive.size else 1.0
    if span < 10.0:
        logger.warning(
            "spectrum points span %.2f decades (< 1); gamma may be "
            "poorly constrained", np.log10(max(span, 1.0)))

    v_lin = 10.0 ** (v_db / 10.0)
    plus = branch > 0

    # The variance is even in the detuning, so its derivative vanishes at
    # exactly zero; the free-mode search starts slightly off-center and can
    # only determine the detuning magnitude.
    init = {"g": 0.3, "eta": 0.5, "gamma": float(np.median(abs_omega)),
            "delta": 0.1}
    init.update(initial or {})
    parameters = [
        Parameter("g", init["g"], "log"),
        Parameter("eta", init["eta"], "logit"),
        Parameter("gamma", init["gamma"], "log"),
    ]
    if model_mode == "free":
        parameters.append(Parameter("delta", init["delta"], "linear"))

    def residuals(theta: np.ndarray) -> np.ndarray:
        g = np.exp(theta[0])
        eta = 1.0 / (1.0 + np.exp(-theta[1]))
        gamma = np.exp(theta[2])
        w = omega / gamma
        if model_mode == "locked_shifted":
            delta = g
        elif model_mode == "locked_zero":
            delta = 0.0
        else:
            delta = theta[3]
        v_plus, v_minus = extremal_variances_general(g, eta, w, delta)
        model = np.where(plus, v_plus, v_minus)
        return model - v_lin

    details = {"model_mode": model_mode, "points": int(omega.size),
               "span_decades": float(np.log10(max(span, 1.0)))}
    result = levenberg_marquardt(residuals, parameters, tol=tol,
                                 max_iter=max_iter,
                                 residual_scale=float(np.linalg.norm(v_lin)),
                                 details=details)
    if model_mode == "free":
        # delta was fitted in units of gamma; report it in rad/s
        gamma_val = result["gamma"]
        values = result.values.copy()
        stderr = result.stderr.copy()
        values[3] *= gamma_val
        stderr[3] *= gamma_val
        result = FitResult(names=result.names, values=values, stderr=stderr,
                           residual_norm=result.residual_norm,
                           iterations=result.iterations,
                           converged=result.converged, details=result.details)
    return result


def fit_variance_vs_power(power, v_plus_db, v_minus_db, *,
                          initial: dict[str, float] | None = None,
                          tol: float = DEFAULT_TOLERANCE,
                          max_iter: int = DEFAULT_MAX_ITERATIONS) -> FitResult:
    """Joint fit of both extremal-variance branches against pump power.

    The gain is constrained to be linear in power (``g = k * P``), so the
    fit returns the efficiency ``eta`` and the gain-per-power coefficient
    ``k``. Zero-power points are exactly 0 dB in the model.
    """
    p = np.asarray(power, dtype=np.float64)
    vp = np.asarray(v_plus_db, dtype=np.float64)
    vm = np.asarray(v_minus_db, dtype=np.float64)
    if not (p.size == vp.size == vm.size):
        raise ValueError("power and variance arrays must have equal length")
    if p.size < 3:
        raise ValueError("variance-vs-power fit needs at least 3 powers")
    if np.any(p < 0):
        raise ValueError("powers must be nonnegative")

    target = np.concatenate([10.0 ** (vp / 10.0), 10.0 ** (vm / 10.0)])
    p_max = p.max()
    if p_max <= 0:
        raise ValueError("at least one power must be positive")

    init = {"eta": 0.5, "k": 0.3 / p_max}
    init.update(initial or {})
    parameters = [
        Parameter("eta", init["eta"], "logit"),
        Parameter("k", init["k"], "log"),
    ]

    def residuals(theta: np.ndarray) -> np.ndarray:
        eta = 1.0 / (1.0 + np.exp(-theta[0]))
        k = np.exp(theta[1])
        v_plus, v_minus = extremal_variances(k * p, eta)
        return np.concatenate([v_plus, v_minus]) - target

    details = {"points": int(p.size)}
    return levenberg_marquardt(residuals, parameters, tol=tol,
                               max_iter=max_iter,
                               residual_scale=float(np.linalg.norm(target)),
                               details=details)
