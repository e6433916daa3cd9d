"""Parametric stationary latent-process families.

Families
--------
ar      : real AR(p), params (phi_1..phi_p, sigma), unit sampling
ma      : real MA(q), X_t = sigma*(e_t + theta_1 e_{t-1} + ... ), params
          (theta_1..theta_q, sigma)
car1    : complex AR(1), Z_t = r e^{i gamma} Z_{t-1} + e_t with proper
          complex innovations of variance sigma^2; params (r, sigma) and an
          optional rotation gamma (radians/sample, fixed or free)
ou      : complex Ornstein-Uhlenbeck sampled at interval delta (days);
          params (A, lam); optional fixed rotation in cycles/day
matern  : proper Matern background, spectral shape B^2/(w^2+h^2)^alpha;
          params (B, h, alpha); sampled at interval delta (days)

Spectral convention: the discrete-time spectral density is
``f_X(w) = sum_tau c_X(tau) exp(-i w tau)`` (w in radians per sample), so the
expected periodogram of an unmodulated sample tends to f_X.  Every likelihood
in this package works on the f_X scale.

For the continuous families the analytic spectral shapes
``A^2/((w - w_f)^2 + lam^2)`` and ``B^2/(w^2 + h^2)^alpha`` are interpreted
with their argument in radians per day, which makes them the exact Fourier
transforms of the autocovariances ``A^2/(2 lam) exp(-lam|t|) e^{i 2 pi w_f t}``
and the Bessel-form Matern autocovariance used below.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gamma as gamma_fn
from scipy.special import kv

from .core import ParameterVector

__all__ = [
    "LatentModel",
    "ar_model",
    "ma_model",
    "car1_model",
    "ou_model",
    "matern_model",
    "autocov",
    "sdf",
    "sdf_sampled",
    "ou_to_ar",
    "ar_to_ou",
    "model_to_json",
    "model_from_json",
]

_FAMILIES = ("ar", "ma", "car1", "ou", "matern")


@dataclass(frozen=True)
class LatentModel:
    """A stationary latent-process family with a concrete parameter vector."""

    family: str
    params: ParameterVector
    delta: float = 1.0
    # fixed rotation: radians/sample for car1, cycles/day for ou
    rotation: float = 0.0

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown model family {self.family!r}")
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        validate_stationary(self)

    def value(self, name: str) -> float:
        return float(self.params.values[self.params.names.index(name)])

    def with_values(self, values) -> "LatentModel":
        return LatentModel(
            family=self.family,
            params=self.params.replace(values),
            delta=self.delta,
            rotation=self.rotation,
        )


def _ar_coeffs(model: LatentModel):
    v = model.params.values
    return v[:-1], float(v[-1])


def validate_stationary(model: LatentModel):
    """Raise ValueError when the parameters leave the stationary region."""
    f = model.family
    if f == "ar":
        phi, sigma = _ar_coeffs(model)
        if sigma < 0:
            raise ValueError("innovation scale sigma must be non-negative")
        if phi.size:
            # roots of 1 - phi_1 z - ... - phi_p z^p must lie outside |z|=1
            roots = np.roots(np.concatenate(([1.0], -phi))[::-1])
            if roots.size and np.min(np.abs(roots)) <= 1.0 + 1e-12:
                raise ValueError("AR parameters are not stationary")
    elif f == "ma":
        _, sigma = _ar_coeffs(model)
        if sigma < 0:
            raise ValueError("innovation scale sigma must be non-negative")
    elif f == "car1":
        r, sigma = model.value("r"), model.value("sigma")
        if not (0.0 <= r < 1.0):
            raise ValueError("car1 requires 0 <= r < 1")
        if sigma <= 0:
            raise ValueError("car1 requires sigma > 0")
    elif f == "ou":
        if model.value("A") <= 0 or model.value("lam") <= 0:
            raise ValueError("ou requires A > 0 and lam > 0")
    elif f == "matern":
        if model.value("B") < 0 or model.value("h") <= 0:
            raise ValueError("matern requires B >= 0 and h > 0")
        if model.value("alpha") <= 0.5:
            raise ValueError("matern requires alpha > 1/2 (integrability)")


# ----------------------------------------------------------------------
# constructors
# ----------------------------------------------------------------------

def ar_model(phi, sigma: float) -> LatentModel:
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    names = [f"phi{j + 1}" for j in range(phi.size)] + ["sigma"]
    lower = np.concatenate((np.full(phi.size, -np.inf), [0.0]))
    pv = ParameterVector(names, np.concatenate((phi, [sigma])), lower=lower)
    return LatentModel("ar", pv)


def ma_model(theta, sigma: float) -> LatentModel:
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    names = [f"theta{j + 1}" for j in range(theta.size)] + ["sigma"]
    lower = np.concatenate((np.full(theta.size, -np.inf), [0.0]))
    pv = ParameterVector(names, np.concatenate((theta, [sigma])), lower=lower)
    return LatentModel("ma", pv)


def car1_model(r: float, sigma: float, rotation: float = 0.0) -> LatentModel:
    pv = ParameterVector(["r", "sigma"], [r, sigma], lower=[0.0, 0.0], upper=[1.0, np.inf])
    return LatentModel("car1", pv, rotation=rotation)


def ou_model(amp: float, lam: float, delta: float = 1.0 / 12.0,
             rotation_cpd: float = 0.0) -> LatentModel:
    pv = ParameterVector(["A", "lam"], [amp, lam], lower=[0.0, 0.0])
    return LatentModel("ou", pv, delta=delta, rotation=rotation_cpd)


def matern_model(b: float, h: float, alpha: float, delta: float = 1.0 / 12.0) -> LatentModel:
    pv = ParameterVector(["B", "h", "alpha"], [b, h, alpha],
                         lower=[0.0, 0.0, 0.5])
    return LatentModel("matern", pv, delta=delta)


# ----------------------------------------------------------------------
# OU <-> AR(1) parameter transform
# ----------------------------------------------------------------------

def ou_to_ar(amp: float, lam: float, delta: float) -> tuple[float, float]:
    """Map OU (A, lam) at sampling interval delta to AR(1) (r, sigma).

    r = exp(-lam*delta), sigma^2 = A^2 (1 - exp(-lam*delta)) / (2 lam delta).
    """
    if lam <= 0 or delta <= 0 or amp <= 0:
        raise ValueError("ou_to_ar requires A > 0, lam > 0, delta > 0")
    r = math.exp(-lam * delta)
    sigma2 = amp * amp * (1.0 - r) / (2.0 * lam * delta)
    return r, math.sqrt(sigma2)


def ar_to_ou(r: float, sigma: float, delta: float) -> tuple[float, float]:
    """Inverse of :func:`ou_to_ar`."""
    if not (0.0 < r < 1.0) or sigma <= 0 or delta <= 0:
        raise ValueError("ar_to_ou requires 0 < r < 1, sigma > 0, delta > 0")
    lam = -math.log(r) / delta
    amp2 = sigma * sigma * 2.0 * lam * delta / (1.0 - r)
    return math.sqrt(amp2), lam


# ----------------------------------------------------------------------
# autocovariance
# ----------------------------------------------------------------------

def _ar_autocov(phi: np.ndarray, sigma: float, nlags: int) -> np.ndarray:
    """AR(p) autocovariance c(0..nlags-1) via Yule-Walker then recursion."""
    p = phi.size
    if p == 0:
        c = np.zeros(nlags)
        c[0] = sigma * sigma
        return c
    # linear system for c(0..p): c(k) - sum_j phi_j c(|k-j|) = sigma^2 * (k==0)
    a = np.zeros((p + 1, p + 1))
    for k in range(p + 1):
        a[k, k] += 1.0
        for j in range(1, p + 1):
            a[k, abs(k - j)] -= phi[j - 1]
    rhs = np.zeros(p + 1)
    rhs[0] = sigma * sigma
    c_head = np.linalg.solve(a, rhs)
    n = max(nlags, p + 1)
    c = np.zeros(n)
    c[: p + 1] = c_head
    for k in range(p + 1, n):
        c[k] = phi @ c[k - 1: k - 1 - p: -1]
    return c[:nlags]


def _ma_autocov(theta: np.ndarray, sigma: float, nlags: int) -> np.ndarray:
    psi = np.concatenate(([1.0], theta))
    c = np.zeros(nlags)
    q = theta.size
    for tau in range(min(nlags, q + 1)):
        c[tau] = sigma * sigma * np.dot(psi[: psi.size - tau], psi[tau:])
    return c


@lru_cache(maxsize=64)
def _matern_acv_cached(b: float, h: float, alpha: float, delta: float,
                       nlags: int) -> np.ndarray:
    """Exact sampled Matern autocovariance at lags 0..nlags-1.

    c(t) = B^2 * 2^{3/2-alpha} / (2 sqrt(pi) Gamma(alpha) h^{2alpha-1})
               * (h|t|)^{alpha-1/2} K_{alpha-1/2}(h|t|),  t = tau*delta,
    with the tau=0 limit B^2 Gamma(alpha-1/2) / (2 sqrt(pi) Gamma(alpha)
    h^{2alpha-1}).  Matches B^2/(2h) exp(-h|t|) at alpha=1.
    """
    nu = alpha - 0.5
    t = np.arange(nlags) * delta
    scale = b * b / (2.0 * math.sqrt(math.pi) * gamma_fn(alpha) * h ** (2.0 * alpha - 1.0))
    c = np.empty(nlags)
    c[0] = scale * gamma_fn(nu)
    if nlags > 1:
        x = h * t[1:]
        c[1:] = scale * 2.0 ** (1.0 - nu) * x ** nu * kv(nu, x)
    c.setflags(write=False)
    return c


def matern_acv(b: float, h: float, alpha: float, delta: float, nlags: int) -> np.ndarray:
    return np.array(_matern_acv_cached(float(b), float(h), float(alpha),
                                       float(delta), int(nlags)))


def autocov(model: LatentModel, tau) -> np.ndarray | float | complex:
    """c_X(tau; theta) at non-negative integer lags (scalar or array).

    The Hermitian extension c(-tau) = conj(c(tau)) is implied; callers that
    need negative lags conjugate.
    """
    tau_arr = np.atleast_1d(np.asarray(tau))
    if not np.issubdtype(tau_arr.dtype, np.integer):
        if np.any(tau_arr != np.round(tau_arr)):
            raise ValueError("lags must be non-negative integers")
        tau_arr = tau_arr.astype(int)
    if np.any(tau_arr < 0):
        raise ValueError("lags must be non-negative integers")
    f = model.family
    if f in ("ar", "ma"):
        coefs, sigma = _ar_coeffs(model)
        nlags = int(tau_arr.max()) + 1
        table = _ar_autocov(coefs, sigma, nlags) if f == "ar" else \
            _ma_autocov(coefs, sigma, nlags)
        out = table[tau_arr]
    elif f == "car1":
        r, sigma = model.value("r"), model.value("sigma")
        base = sigma * sigma / (1.0 - r * r) * np.power(float(r), tau_arr.astype(float))
        out = base * np.exp(1j * model.rotation * tau_arr) if model.rotation else base
    elif f == "ou":
        r, sig = ou_to_ar(model.value("A"), model.value("lam"), model.delta)
        base = sig * sig / (1.0 - r * r) * np.power(r, tau_arr.astype(float))
        rot = 2.0 * np.pi * model.delta * model.rotation
        out = base * np.exp(1j * rot * tau_arr) if model.rotation else base
    elif f == "matern":
        nlags = int(tau_arr.max()) + 1
        table = matern_acv(model.value("B"), model.value("h"),
                           model.value("alpha"), model.delta, nlags)
        out = table[tau_arr]
    else:  # pragma: no cover
        raise ValueError(f"unknown family {f!r}")
    if np.isscalar(tau) or np.ndim(tau) == 0:
        return out[0]
    return out


def autocov_sequence(model: LatentModel, nlags: int) -> np.ndarray:
    """c_X(0..nlags-1) as one array (the hot path for expected periodograms)."""
    return np.asarray(autocov(model, np.arange(nlags)))


# ----------------------------------------------------------------------
# spectral densities
# ----------------------------------------------------------------------

def sdf(model: LatentModel, omega) -> np.ndarray | float:
    """Model spectral density.

    For the discrete families (ar, ma, car1) omega is in radians per sample
    and the value is f_X(w) = sum_tau c(tau) e^{-i w tau}.  For ou and matern
    omega is the continuous-model frequency argument (the inertial peak sits
    at the rotation frequency; see module docstring for the unit bookkeeping)
    and the analytic shapes A^2/((w-w_f)^2+lam^2), B^2/(w^2+h^2)^alpha are
    returned.
    """
    w = np.asarray(omega, dtype=float)
    f = model.family
    if f == "ar":
        phi, sigma = _ar_coeffs(model)
        z = np.exp(-1j * np.multiply.outer(w, np.arange(1, phi.size + 1)))
        denom = np.abs(1.0 - z @ phi) ** 2 if phi.size else np.ones_like(w)
        out = sigma * sigma / denom
    elif f == "ma":
        theta, sigma = _ar_coeffs(model)
        z = np.exp(-1j * np.multiply.outer(w, np.arange(1, theta.size + 1)))
        out = sigma * sigma * np.abs(1.0 + (z @ theta if theta.size else 0.0)) ** 2
    elif f == "car1":
        r, sigma = model.value("r"), model.value("sigma")
        out = sigma * sigma / (1.0 + r * r - 2.0 * r * np.cos(w - model.rotation))
    elif f == "ou":
        amp, lam = model.value("A"), model.value("lam")
        out = amp * amp / ((w - model.rotation) ** 2 + lam * lam)
    elif f == "matern":
        b, h, alpha = model.value("B"), model.value("h"), model.value("alpha")
        out = b * b / (w * w + h * h) ** alpha
    else:  # pragma: no cover
        raise ValueError(f"unknown family {f!r}")
    return out if np.ndim(omega) else float(out)


def _matern_sdf_lag_cap(h: float, delta: float) -> int:
    # exponential envelope e^{-h delta tau}: run until the tail is negligible
    cap = int(min(math.ceil(40.0 / (h * delta)) + 1, 1 << 18))
    return max(cap, 8)


def sdf_sampled(model: LatentModel, omega) -> np.ndarray | float:
    """Discrete-time sdf f_X(w) = sum_tau c(tau) e^{-i w tau}, w rad/sample.

    Exact closed forms for ar/ma/car1/ou; for matern a Hermitian lag sum
    truncated where the autocovariance has decayed below working precision.
    """
    w = np.asarray(omega, dtype=float)
    f = model.family
    if f in ("ar", "ma", "car1"):
        out = sdf(model, w)
    elif f == "ou":
        r, sig = ou_to_ar(model.value("A"), model.value("lam"), model.delta)
        rot = 2.0 * np.pi * model.delta * model.rotation
        out = sig * sig / (1.0 + r * r - 2.0 * r * np.cos(w - rot))
    elif f == "matern":
        nlags = _matern_sdf_lag_cap(model.value("h"), model.delta)
        c = matern_acv(model.value("B"), model.value("h"), model.value("alpha"),
                       model.delta, nlags)
        taus = np.arange(1, nlags)
        out = c[0] + 2.0 * np.cos(np.multiply.outer(w, taus)) @ c[1:]
    else:  # pragma: no cover
        raise ValueError(f"unknown family {f!r}")
    return out if np.ndim(omega) else float(out)


# ----------------------------------------------------------------------
# JSON round trip
# ----------------------------------------------------------------------

def model_to_json(model: LatentModel) -> str:
    payload = {
        "family": model.family,
        "params": model.params.asdict(),
        "bounds": {
            n: [_num(lo), _num(hi)]
            for n, lo, hi in zip(model.params.names, model.params.lower,
                                 model.params.upper)
        },
        "delta": model.delta,
        "rotation": model.rotation,
    }
    return json.dumps(payload)


def _num(x: float):
    return None if not np.isfinite(x) else float(x)


def model_from_json(text: str | dict) -> LatentModel:
    obj = json.loads(text) if isinstance(text, str) else dict(text)
    family = obj["family"]
    params = obj["params"]
    names = list(params.keys())
    values = np.array([params[n] for n in names], dtype=float)
    bounds = obj.get("bounds", {})
    lower = np.array([
        -np.inf if bounds.get(n, [None, None])[0] is None else bounds[n][0]
        for n in names
    ])
    upper = np.array([
        np.inf if bounds.get(n, [None, None])[1] is None else bounds[n][1]
        for n in names
    ])
    pv = ParameterVector(names, values, lower=lower, upper=upper)
    return LatentModel(family, pv, delta=float(obj.get("delta", 1.0)),
                       rotation=float(obj.get("rotation", 0.0)))
