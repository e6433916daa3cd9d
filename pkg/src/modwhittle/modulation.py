"""Modulating sequences g_t and their sample autocovariance c_g.

A modulator is a known bounded deterministic sequence: a 0/1 missing-data
mask, a unit-modulus frequency modulator exp(i * cumulative phase), or any
user sequence.  The sample autocovariance

    c_g(tau) = (1/N) sum_{t=0}^{N-1-tau} conj(g_t) g_{t+tau},

is the kernel that multiplies the latent autocovariance in the expected
periodogram.  It is computed here by zero-padded FFT autocorrelation in
O(N log N); the direct O(N^2) sum is kept as a test oracle.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Modulator",
    "CgSequence",
    "cg_sequence",
    "cg_direct",
    "constant_modulator",
    "custom_modulator",
    "periodic_missing_mask",
    "bernoulli_mask",
    "cosine_probabilities",
    "cosine_bernoulli_mask",
    "frequency_modulator",
    "linear_frequency_modulator",
    "linear_beta",
    "cg_linear_closed_form",
    "significant_correlation_diagnostic",
    "stationarity_check",
    "modulator_to_json",
    "modulator_from_json",
]


@dataclass(frozen=True)
class Modulator:
    """A known modulating sequence with its generator tag and bound on |g|."""

    g: np.ndarray
    generator: str = "custom"
    params: dict = field(default_factory=dict)
    seed: int | None = None

    def __post_init__(self):
        g = np.asarray(self.g)
        if g.ndim != 1 or g.size < 1:
            raise ValueError("modulating sequence must be non-empty and 1-d")
        if not np.all(np.isfinite(g)):
            raise ValueError("modulating sequence must be bounded (finite)")
        g = np.asarray(g, dtype=complex) if np.iscomplexobj(g) else np.asarray(g, dtype=float)
        g.setflags(write=False)
        object.__setattr__(self, "g", g)

    def __len__(self) -> int:
        return self.g.size

    @property
    def n(self) -> int:
        return self.g.size

    @property
    def gmax(self) -> float:
        return float(np.max(np.abs(self.g)))

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.g)


@dataclass(frozen=True)
class CgSequence:
    """Sample autocovariance of a modulating sequence at lags 0..N-1."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.size

    @property
    def n(self) -> int:
        return self.values.size


def cg_direct(g: np.ndarray) -> np.ndarray:
    """O(N^2) direct-sum c_g, the oracle for the FFT path."""
    g = np.asarray(g)
    n = g.size
    out = np.empty(n, dtype=complex)
    for tau in range(n):
        out[tau] = np.sum(np.conj(g[: n - tau]) * g[tau:]) / n
    return out


def cg_sequence(mod: Modulator) -> CgSequence:
    """c_g(tau) for tau = 0..N-1 via zero-padded FFT autocorrelation."""
    g = np.asarray(mod.g, dtype=complex)
    n = g.size
    m = 1 << int(np.ceil(np.log2(2 * n))) if n > 1 else 2
    fg = np.fft.fft(g, m)
    acorr = np.fft.ifft(np.abs(fg) ** 2)[:n] / n
    if not mod.is_complex:
        acorr = acorr.real
    return CgSequence(values=acorr)


# ----------------------------------------------------------------------
# generators
# ----------------------------------------------------------------------

def constant_modulator(n: int, value: float = 1.0) -> Modulator:
    if n < 1:
        raise ValueError("length must be positive")
    return Modulator(np.full(n, value, dtype=float), generator="constant",
                     params={"value": value, "N": n})


def custom_modulator(g) -> Modulator:
    return Modulator(np.asarray(g), generator="custom", params={"N": np.asarray(g).size})


def periodic_missing_mask(k: int, l: int, n: int) -> Modulator:
    """Mask observing k samples then missing l, repeated to length n."""
    if k < 1:
        raise ValueError("observe-run k must be >= 1 (nothing is ever observed)")
    if l < 0:
        raise ValueError("miss-run l must be >= 0")
    if n < 1:
        raise ValueError("length must be positive")
    period = np.concatenate((np.ones(k), np.zeros(l)))
    reps = int(np.ceil(n / period.size))
    mask = np.tile(period, reps)[:n]
    return Modulator(mask, generator="periodic-missing",
                     params={"k": k, "l": l, "N": n})


def bernoulli_mask(p, seed: int, n: int | None = None) -> Modulator:
    """Independent Bernoulli(p_t) 0/1 mask, reproducible from the seed.

    p may be a scalar probability or a length-n sequence.  The mask is drawn
    from a counter-based generator (Philox keyed by the seed), so g_t is a
    fixed function of (seed, t) regardless of how many values are consumed.
    """
    p_arr = np.asarray(p, dtype=float)
    scalar_p = p_arr.ndim == 0
    if scalar_p:
        if n is None:
            raise ValueError("scalar probability needs an explicit length")
        p_arr = np.full(n, float(p_arr))
    if np.any((p_arr < 0.0) | (p_arr > 1.0)):
        raise ValueError("probabilities must lie in [0, 1]")
    rng = np.random.Generator(np.random.Philox(key=seed))
    u = rng.random(p_arr.size)
    mask = (u < p_arr).astype(float)
    params = {"p": float(p) if scalar_p else p_arr, "N": p_arr.size}
    return Modulator(mask, generator="bernoulli", params=params, seed=seed)


def cosine_probabilities(mean_p: float, amp_p: float, omega_p: float, n: int) -> np.ndarray:
    """p_t = P + A_p cos(omega_p t); requires 0 < P - A_p and P + A_p <= 1."""
    if not (0.0 < mean_p < 1.0):
        raise ValueError("mean probability must be in (0, 1)")
    if amp_p < 0 or amp_p >= min(mean_p, 1.0 - mean_p) + 1e-15:
        raise ValueError("amplitude must satisfy 0 <= A_p < min(P, 1-P)")
    t = np.arange(n)
    return mean_p + amp_p * np.cos(omega_p * t)


def cosine_bernoulli_mask(mean_p: float, amp_p: float, omega_p: float,
                          n: int, seed: int) -> Modulator:
    """Bernoulli mask with periodically oscillating observation probability."""
    p = cosine_probabilities(mean_p, amp_p, omega_p, n)
    mod = bernoulli_mask(p, seed=seed)
    return Modulator(mod.g, generator="cosine-bernoulli",
                     params={"mean_p": mean_p, "amp_p": amp_p,
                             "omega_p": omega_p, "N": n}, seed=seed)


def frequency_modulator(beta) -> Modulator:
    """Unit-modulus g with g_0 = 1 and g_t = exp(i sum_{u=1}^{t} beta_u).

    beta holds the per-step phase increments beta_1..beta_{N-1}; the output
    has length N = len(beta) + 1.  The running phase is reduced mod 2*pi at
    every step so |g_t| stays within 1e-12 of 1 even for N ~ 1e6.
    """
    beta = np.asarray(beta, dtype=float)
    if beta.ndim != 1:
        raise ValueError("beta must be a 1-d sequence of phase increments")
    if not np.all(np.isfinite(beta)):
        raise ValueError("beta must be finite")
    # accumulate in blocks, reducing the carry mod 2*pi between blocks, so the
    # running phase never grows and precision is kept for N ~ 1e6
    phase = np.empty(beta.size)
    carry = 0.0
    block = 8192
    steps = np.mod(beta, 2.0 * np.pi)
    for start in range(0, beta.size, block):
        chunk = np.cumsum(steps[start:start + block]) + carry
        chunk = np.mod(chunk, 2.0 * np.pi)
        phase[start:start + block] = chunk
        carry = chunk[-1]
    g = np.exp(1j * np.concatenate(([0.0], phase)))
    return Modulator(g, generator="frequency",
                     params={"beta": beta, "N": g.size})


def linear_beta(gamma: float, span: float, n: int) -> np.ndarray:
    """beta_t = gamma + span*(2t-(N-1))/(2(N-1)) for t = 1..N-1.

    The increments ramp linearly from gamma - span/2 to gamma + span/2 over
    the sample; span must satisfy 0 < span < pi so the resulting modulated
    process keeps a significant correlation contribution.
    """
    if not (-np.pi <= gamma < np.pi):
        raise ValueError("gamma must lie in [-pi, pi)")
    if not (0.0 < span < np.pi):
        raise ValueError("span must lie in (0, pi)")
    if n < 2:
        raise ValueError("need at least two samples for a linear ramp")
    t = np.arange(1, n)
    return gamma + span * (2.0 * t - (n - 1)) / (2.0 * (n - 1))


def linear_frequency_modulator(gamma: float, span: float, n: int) -> Modulator:
    """Frequency modulator with the linear-ramp increments of :func:`linear_beta`."""
    mod = frequency_modulator(linear_beta(gamma, span, n))
    return Modulator(mod.g, generator="linear-frequency",
                     params={"gamma": gamma, "span": span, "N": n})


def cg_linear_closed_form(gamma: float, span: float, n: int, tau) -> np.ndarray | complex:
    """Closed-form c_g(tau) for the linear-ramp frequency modulator.

    c_g(tau) = sin[span*tau*(N-tau)/(2(N-1))] / (N sin[span*tau/(2(N-1))])
               * exp{i (gamma*tau + span*tau/(2(N-1)))},
    with c_g(0) = 1 by continuity.  O(1) per lag, O(N) for all lags.
    """
    if not (0.0 < span < np.pi):
        raise ValueError("span must lie in (0, pi)")
    tau_arr = np.atleast_1d(np.asarray(tau, dtype=float))
    if np.any(tau_arr < 0) or np.any(tau_arr > n - 1):
        raise ValueError("lags must lie in [0, N-1]")
    a = span * tau_arr / (2.0 * (n - 1))
    with np.errstate(invalid="ignore", divide="ignore"):
        mag = np.sin(a * (n - tau_arr)) / (n * np.sin(a))
    mag = np.where(tau_arr == 0, 1.0, mag)
    out = mag * np.exp(1j * (gamma * tau_arr + a))
    if np.ndim(tau) == 0:
        return complex(out[0])
    return out


# ----------------------------------------------------------------------
# diagnostics
# ----------------------------------------------------------------------

def significant_correlation_diagnostic(mod: Modulator, lags, n_grid,
                                       tol: float = 1e-3) -> dict:
    """Empirical check of the significant-correlation condition.

    For each lag tau in `lags`, reports min over N in `n_grid` of
    |c_g^(N)(tau)| computed from the leading N samples of g, and flags lags
    whose minimum falls below tol.  A finite-N stand-in for the liminf
    condition: it certifies the lags the estimator actually leans on.
    """
    lags = sorted(int(t) for t in lags)
    n_grid = sorted(int(m) for m in n_grid)
    if min(n_grid) < 1 or max(n_grid) > mod.n:
        raise ValueError("grid lengths must lie in [1, len(g)]")
    if lags and lags[-1] >= min(n_grid):
        raise ValueError("all lags must be smaller than the smallest grid length")
    mins = {tau: np.inf for tau in lags}
    for m in n_grid:
        cg = cg_sequence(Modulator(mod.g[:m])).values
        for tau in lags:
            mins[tau] = min(mins[tau], float(np.abs(cg[tau])))
    return {
        "min_abs_cg": {tau: mins[tau] for tau in lags},
        "flagged": [tau for tau in lags if mins[tau] < tol],
        "tol": tol,
    }


def stationarity_check(mod: Modulator, mu: int | None = None,
                       tol: float = 1e-8) -> tuple[bool, tuple[float, float] | None]:
    """Decide whether modulation by g leaves a latent process stationary.

    True iff |g_t| is constant and the phases satisfy
    phi_t = phi_{t mod mu} + gamma*floor(t/mu) (mod 2*pi) for some gamma,
    fitted from the first full period and verified at every t.  mu is the
    gcd of the latent model's nonzero-covariance lags; mu=None denotes the
    white-noise case where only constant modulus is required.

    Returns (flag, (a, gamma)) with the witness when the check passes.
    """
    g = np.asarray(mod.g, dtype=complex)
    mags = np.abs(g)
    a = float(mags[0])
    if np.max(np.abs(mags - a)) > tol * max(a, 1.0):
        return False, None
    if a <= tol:
        return True, (0.0, 0.0)
    if mu is None:
        return True, (a, 0.0)
    if mu < 1:
        raise ValueError("mu must be a positive integer")
    phi = np.angle(g)
    n = g.size
    if n <= mu:
        return True, (a, 0.0)
    gamma = float(np.angle(g[mu] / g[0]))
    t = np.arange(n)
    expected = phi[t % mu] + gamma * (t // mu)
    err = np.abs(np.exp(1j * (phi - expected)) - 1.0)
    if np.max(err) > tol:
        return False, None
    gamma = float(np.mod(gamma + np.pi, 2.0 * np.pi) - np.pi)
    return True, (a, gamma)


# ----------------------------------------------------------------------
# serialization
# ----------------------------------------------------------------------

def modulator_to_json(mod: Modulator) -> str:
    params = {k: (v.tolist() if isinstance(v, np.ndarray) else v)
              for k, v in mod.params.items()}
    payload = {"generator": mod.generator, "params": params,
               "seed": mod.seed, "N": mod.n}
    if mod.generator == "custom":
        payload["g_re"] = np.real(mod.g).tolist()
        payload["g_im"] = np.imag(mod.g).tolist()
    return json.dumps(payload)


def modulator_from_json(text: str | dict) -> Modulator:
    obj = json.loads(text) if isinstance(text, str) else dict(text)
    gen = obj["generator"]
    params = obj.get("params", {})
    n = int(obj.get("N", params.get("N", 0)))
    if gen == "constant":
        return constant_modulator(n, params.get("value", 1.0))
    if gen == "periodic-missing":
        return periodic_missing_mask(params["k"], params["l"], n)
    if gen == "bernoulli":
        return bernoulli_mask(params.get("p", 0.5), seed=obj["seed"], n=n)
    if gen == "cosine-bernoulli":
        return cosine_bernoulli_mask(params["mean_p"], params["amp_p"],
                                     params["omega_p"], n, seed=obj["seed"])
    if gen == "frequency":
        return frequency_modulator(np.asarray(params["beta"], dtype=float))
    if gen == "linear-frequency":
        return frequency_modulator(linear_beta(params["gamma"], params["span"], n))
    if gen == "custom":
        g = np.asarray(obj["g_re"], dtype=float) + 1j * np.asarray(obj["g_im"], dtype=float)
        if not np.any(g.imag):
            g = g.real
        return Modulator(g, generator=gen, params=params, seed=obj.get("seed"))
    raise ValueError(f"unknown modulator generator {gen!r}")
