"""Two-level-system loss: tan-delta bookkeeping, thermal saturation and
power-sweep fitting.

Internal loss is modeled as a saturable TLS channel on top of a
power-independent remainder:

    tan d(n) = tan_d_tls0 * tanh(h f / 2 k_B T) / (1 + n/n_c)^beta
               + tan_d_other

Loss channels add in tan delta, so fits run on 1/Q_in rather than Q_in.
A deliberate limitation: the model cannot produce a tan-delta rise at
high power; sweeps showing one (other loss mechanisms taking over) are
flagged through elevated tail residuals instead.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import fitting
from .constants import H_PLANCK, K_B
from .errors import DomainError, InsufficientDataError

__all__ = ["TlsFitParams", "PowerSweep", "PowerSweepFit",
           "tan_delta_from_q", "thermal_factor", "tls_tan_delta",
           "fit_power_sweep", "solve_endpoint_params"]

DEFAULT_BETA = 0.5


@dataclass(frozen=True)
class TlsFitParams:
    """Saturable-loss parameters.

    tan_delta_tls0: unsaturated TLS loss tangent; n_critical: photon
    number where saturation sets in; beta: saturation exponent in
    (0, 1], 0.5 is the standard weak-field value; tan_delta_other:
    power-independent residual loss.
    """

    tan_delta_tls0: float
    n_critical: float
    beta: float = DEFAULT_BETA
    tan_delta_other: float = 0.0

    def __post_init__(self):
        if self.tan_delta_tls0 < 0 or self.tan_delta_other < 0:
            raise DomainError("loss tangents must be non-negative")
        if not 0.0 < self.beta <= 1.0:
            raise DomainError("beta must lie in (0, 1]")
        if self.n_critical <= 0:
            raise DomainError("critical photon number must be positive")


@dataclass(frozen=True)
class PowerSweep:
    """Internal quality factor versus photon number for one resonator."""

    points: tuple[tuple[float, float, float], ...]  # (n, q_in, sigma_q)
    resonator_freq: float
    temperature: float

    def __post_init__(self):
        object.__setattr__(self, "points",
                           tuple((float(n), float(q), float(s))
                                 for n, q, s in self.points))
        object.__setattr__(self, "resonator_freq", float(self.resonator_freq))
        object.__setattr__(self, "temperature", float(self.temperature))
        ns = [n for n, _, _ in self.points]
        if any(n <= 0 for n in ns):
            raise DomainError("photon numbers must be positive")
        if any(b <= a for a, b in zip(ns, ns[1:])):
            raise DomainError("photon numbers must be strictly increasing")
        if any(q <= 0 or s <= 0 for _, q, s in self.points):
            raise DomainError("quality factors and sigmas must be positive")
        if self.resonator_freq <= 0 or self.temperature <= 0:
            raise DomainError("frequency and temperature must be positive")


@dataclass
class PowerSweepFit:
    """Result of a power-sweep fit, with warnings for ill-conditioned
    or model-violating data carried rather than raised."""

    params: TlsFitParams
    covariance: np.ndarray      # order: tls0, n_c, beta, other
    stderr: dict[str, float]
    converged: bool
    residual_norm: float
    warnings: list[str] = field(default_factory=list)


def tan_delta_from_q(q_internal: float) -> float:
    """Loss tangent 1/Q_in."""
    if q_internal <= 0:
        raise DomainError("internal quality factor must be positive")
    return 1.0 / q_internal


def thermal_factor(f: float, temperature: float) -> float:
    """TLS thermal-population factor tanh(h f / 2 k_B T), in (0, 1).

    Close to 1 for GHz frequencies at tens of millikelvin, which is why
    resonators across a 7-13 GHz chip show no frequency trend in loss.
    """
    if temperature <= 0:
        raise DomainError("temperature must be positive")
    if f < 0:
        raise DomainError("frequency must be non-negative")
    return math.tanh(H_PLANCK * f / (2.0 * K_B * temperature))


def tls_tan_delta(n, p: TlsFitParams, f: float, temperature: float):
    """Loss tangent at mean photon number n (scalar or array).

    Monotone non-increasing in n; tends to tan_delta_tls0 * thermal +
    other at n -> 0 and to tan_delta_other at full saturation.
    """
    n = np.asarray(n, dtype=float)
    if np.any(n < 0):
        raise DomainError("photon number must be non-negative")
    th = thermal_factor(f, temperature)
    out = p.tan_delta_tls0 * th / (1.0 + n / p.n_critical) ** p.beta \
        + p.tan_delta_other
    return out if out.ndim else float(out)


def solve_endpoint_params(q_low: float, n_low: float, q_high: float,
                          n_high: float, n_critical: float,
                          beta: float, f: float,
                          temperature: float) -> TlsFitParams:
    """TlsFitParams that hit two (n, Q_in) anchor points exactly.

    For chosen n_critical and beta the two loss tangents are linear in
    (tan_delta_tls0, tan_delta_other), so the anchors determine them.
    """
    th = thermal_factor(f, temperature)
    g_low = th / (1.0 + n_low / n_critical) ** beta
    g_high = th / (1.0 + n_high / n_critical) ** beta
    t_low = 1.0 / q_low
    t_high = 1.0 / q_high
    tls0 = (t_low - t_high) / (g_low - g_high)
    other = t_low - tls0 * g_low
    return TlsFitParams(tan_delta_tls0=tls0, n_critical=n_critical,
                        beta=beta, tan_delta_other=other)


def _sweep_decades(ns: np.ndarray) -> float:
    return math.log10(ns[-1] / ns[0])


def fit_power_sweep(sweep: PowerSweep, fit_beta: bool = True,
                    n_max: float | None = None) -> PowerSweepFit:
    """Weighted nonlinear fit of tan d(n) = 1/Q_in(n) over a sweep.

    Points above n_max (when given) are masked before fitting, for
    sweeps whose high-power tail is taken over by non-TLS mechanisms.
    With fit_beta False the exponent stays pinned at its starting value.
    """
    pts = [(n, q, s) for n, q, s in sweep.points
           if n_max is None or n <= n_max]
    if len(pts) < 4:
        raise InsufficientDataError("power-sweep fit needs at least 4 points")
    ns = np.array([p[0] for p in pts])
    tan_d = np.array([1.0 / p[1] for p in pts])
    sigma_tan = np.array([p[2] / p[1] ** 2 for p in pts])
    th = thermal_factor(sweep.resonator_freq, sweep.temperature)

    warnings: list[str] = []
    if _sweep_decades(ns) < 3.0:
        warnings.append("ill-conditioned fit: photon numbers span fewer "
                        "than 3 decades")

    other0 = float(tan_d.min())
    tls00 = max(float(tan_d[0] / th - other0), 0.1 * other0 + 1e-12)
    mid = 0.5 * (tan_d[0] + tan_d[-1])
    n_c0 = float(ns[np.argmin(np.abs(tan_d - mid))])
    n_c0 = min(max(n_c0, ns[0]), ns[-1])
    scale = tan_d.mean()

    def resid(p):
        tls0, n_c, beta, other = p * np.array([scale, 1.0, 1.0, scale])
        model = tls0 * th / (1.0 + ns / n_c) ** beta + other
        return model - tan_d

    lo_beta, hi_beta = (1e-2, 1.0) if fit_beta else (DEFAULT_BETA, DEFAULT_BETA)
    problem = fitting.FitProblem(
        residual=resid,
        initial_params=np.array([tls00 / scale, n_c0, DEFAULT_BETA,
                                 other0 / scale]),
        # n_c floor sits above the Jacobian differencing step so the
        # saturation term stays evaluable at the bound.
        bounds=[(0.0, math.inf), (max(1e-3, 1e-6 * ns[0]), 1e6 * ns[-1]),
                (lo_beta, hi_beta), (0.0, math.inf)],
        weights=1.0 / sigma_tan ** 2,
    )
    res = fitting.nonlinear_ls(problem)
    tls0, n_c, beta, other = res.params * np.array([scale, 1.0, 1.0, scale])
    jac_scale = np.array([scale, 1.0, 1.0, scale])
    cov = res.covariance * np.outer(jac_scale, jac_scale)
    err = np.sqrt(np.clip(np.diag(cov), 0.0, None))

    params = TlsFitParams(tan_delta_tls0=float(tls0), n_critical=float(n_c),
                          beta=float(beta), tan_delta_other=float(other))

    # Rising high-power tail cannot be produced by this model; flag it
    # when the top decade sits systematically above the fit.
    model = tls_tan_delta(ns, params, sweep.resonator_freq, sweep.temperature)
    tail = ns >= ns[-1] / 10.0
    if np.any(tail):
        excess = (tan_d[tail] - model[tail]) / sigma_tan[tail]
        if float(np.mean(excess)) > 2.0:
            warnings.append("high-power tail rises above the saturable "
                            "model: non-TLS loss suspected")

    stderr = {"tan_delta_tls0": float(err[0]), "n_critical": float(err[1]),
              "beta": float(err[2]), "tan_delta_other": float(err[3])}
    return PowerSweepFit(params=params, covariance=cov, stderr=stderr,
                         converged=res.converged,
                         residual_norm=res.residual_norm, warnings=warnings)
