"""Exact simulation of latent and modulated processes, plus the Monte Carlo
study harness producing bias/variance/MSE tables.

Simulation notes
----------------
* Complex normal N_C(0, s^2) means independent real and imaginary parts each
  of variance s^2/2.
* The frequency-modulated complex AR(1) is generated through its modulated
  representation: a stationary complex AR(1) driven by fresh proper noise,
  multiplied by the unit-modulus modulator.  This is identical in law to the
  literal rotation recursion (and identical path-wise when the innovations
  are rotated accordingly, which the tests exercise).
* Per-replicate RNG streams come from SeedSequence spawn keys of the master
  seed, so parallel execution order can never change results.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy.signal import lfilter, lfiltic

from .core import Series
from .likelihood import (
    Ar1ModulatedObjective,
    Car1ModulatedObjective,
    Car1WhittleObjective,
    LinearBetaCar1ExactObjective,
    LinearBetaCar1Objective,
    Objective,
)
from .models import LatentModel, ar_model, autocov_sequence
from .modulation import (
    cosine_bernoulli_mask,
    frequency_modulator,
    linear_beta,
)
from .optimize import FitFailure, fit, mom_ar1, mom_car1

__all__ = [
    "SimulationError",
    "simulate_ar",
    "simulate_complex_ar1",
    "simulate_from_acv",
    "bounded_random_walk_beta",
    "McStudy",
    "McReport",
    "run_study",
]


class SimulationError(RuntimeError):
    pass


def _rng_of(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def complex_normal(rng: np.random.Generator, size, variance: float = 1.0) -> np.ndarray:
    """Proper complex Gaussian draws with E|z|^2 = variance."""
    scale = np.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(size) + 1j * rng.standard_normal(size))


def simulate_ar(model: LatentModel, n: int, seed) -> Series:
    """Exact draw of a real AR(p) or MA(q) sample with stationary start."""
    if model.family not in ("ar", "ma"):
        raise ValueError("simulate_ar handles the real ar/ma families")
    rng = _rng_of(seed)
    coefs = model.params.values[:-1]
    sigma = float(model.params.values[-1])
    if model.family == "ma":
        q = coefs.size
        eps = rng.standard_normal(n + q)
        psi = sigma * np.concatenate(([1.0], coefs))
        x = np.convolve(eps, psi, mode="full")[q: q + n]
        return Series(x, delta=model.delta, kind="real")
    p = coefs.size
    if sigma == 0.0:
        return Series(np.zeros(n), delta=model.delta, kind="real")
    if p == 0:
        return Series(sigma * rng.standard_normal(n), delta=model.delta, kind="real")
    # first p values from the exact stationary covariance, then the recursion
    head_cov = np.asarray(autocov_sequence(model, p))
    cov = head_cov[np.abs(np.subtract.outer(np.arange(p), np.arange(p)))]
    head = np.linalg.cholesky(cov) @ rng.standard_normal(p)
    if n <= p:
        return Series(head[:n], delta=model.delta, kind="real")
    eps = sigma * rng.standard_normal(n - p)
    b = [1.0]
    a = np.concatenate(([1.0], -coefs))
    zi = lfiltic(b, a, y=head[::-1])
    tail, _ = lfilter(b, a, eps, zi=zi)
    return Series(np.concatenate((head, tail)), delta=model.delta, kind="real")


def simulate_complex_ar1(r: float, sigma: float, beta, n: int, seed) -> Series:
    """Draw z_t = r e^{i beta_t} z_{t-1} + eps_t with stationary start.

    beta supplies the rotations for transitions t = 1..n-1 (length n-1, or
    length n in which case beta[0] is ignored); eps_t is proper complex with
    variance sigma^2 and z_0 ~ N_C(0, sigma^2/(1-r^2)).
    """
    if not (0.0 <= r < 1.0):
        raise ValueError("requires 0 <= r < 1")
    if sigma <= 0:
        raise ValueError("requires sigma > 0")
    beta = np.asarray(beta, dtype=float)
    if beta.size == n:
        beta = beta[1:]
    if beta.size != n - 1:
        raise ValueError("need one rotation per transition (length n-1)")
    rng = _rng_of(seed)
    z0 = complex_normal(rng, (), sigma * sigma / (1.0 - r * r))
    eps = complex_normal(rng, n - 1, sigma * sigma)
    x = np.concatenate(([z0], eps))
    latent = lfilter([1.0], [1.0, -r], x)
    g = frequency_modulator(beta).g
    return Series(g * latent, delta=1.0, kind="complex")


def simulate_from_acv(acv, n: int, seed, kind: str = "real") -> Series:
    """Exact Gaussian draw with a given autocovariance via circulant embedding.

    kind "real" needs a real acv; kind "complex" draws a proper complex
    process with E{z_t conj(z_{t+tau})} = conj(acv(tau)).  Falls back to a
    dense Cholesky (n <= 2048) when the minimal embedding is not PSD.
    """
    acv = np.asarray(acv)
    if acv.size < n:
        raise ValueError("need autocovariances at lags 0..n-1")
    if kind == "real" and np.iscomplexobj(acv) and np.any(acv.imag != 0):
        raise ValueError("real simulation needs a real autocovariance")
    rng = _rng_of(seed)
    c = np.asarray(acv[:n], dtype=complex)
    if n == 1:
        val = complex_normal(rng, (), float(c[0].real))
        return (Series(np.array([np.sqrt(2.0) * val.real]), kind="real")
                if kind == "real" else Series(np.array([val]), kind="complex"))
    ring = np.concatenate((c, np.conj(c[-2:0:-1])))
    lam = np.fft.fft(ring).real
    m = ring.size
    if np.min(lam) >= -1e-10 * max(np.max(lam), 1.0):
        lam = np.maximum(lam, 0.0)
        w = complex_normal(rng, m, 1.0)
        x = np.sqrt(m) * np.fft.ifft(np.sqrt(lam) * w)
        z = x[:n]
    else:
        if n > 2048:
            raise SimulationError("embedding not PSD and n too large for Cholesky")
        lagmat = np.subtract.outer(np.arange(n), np.arange(n))
        cmat = np.where(lagmat >= 0, c[np.abs(lagmat)], np.conj(c[np.abs(lagmat)]))
        try:
            chol = np.linalg.cholesky(cmat)
        except np.linalg.LinAlgError as exc:
            raise SimulationError("autocovariance is not positive definite") from exc
        z = chol @ complex_normal(rng, n, 1.0)
    if kind == "real":
        return Series(np.sqrt(2.0) * z.real, kind="real")
    return Series(z, kind="complex")


def bounded_random_walk_beta(gamma: float, span: float, amp: float, n: int, seed) -> np.ndarray:
    """Random-walk frequencies clamped to [gamma-span, gamma+span].

    beta_0 = clamp(gamma + amp*e_0), beta_t = clamp(beta_{t-1} + amp*e_t)
    with standard normal e_t.
    """
    if span <= 0 or amp < 0:
        raise ValueError("requires span > 0 and amp >= 0")
    rng = _rng_of(seed)
    eps = rng.standard_normal(n)
    lo, hi = gamma - span, gamma + span
    out = np.empty(n)
    prev = min(max(gamma + amp * eps[0], lo), hi)
    out[0] = prev
    for t in range(1, n):
        prev = min(max(prev + amp * eps[t], lo), hi)
        out[t] = prev
    return out


# ----------------------------------------------------------------------
# Monte Carlo studies
# ----------------------------------------------------------------------

@dataclass
class McStudy:
    """Specification of one bias/variance/MSE simulation study.

    kind selects the generating process and the meaning of `process`:
      ar1-bernoulli-mask : real AR(1) observed through a random cosine-
                           Bernoulli mask; process = {mean_p, amp_p, omega_p}
      car1-bounded-walk  : complex AR(1) with bounded-random-walk rotations;
                           process = {gamma, span, amp}
      car1-linear-beta   : complex AR(1) with a linear rotation ramp whose
                           (gamma, span) are estimated alongside (r, sigma)
    """

    kind: str
    true_params: dict
    process: dict
    estimators: list
    n_grid: list
    replicates: int
    seed: int = 0
    fit_options: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_json_dict(obj: dict) -> "McStudy":
        fields = {k: obj[k] for k in ("kind", "true_params", "process",
                                      "estimators", "n_grid", "replicates")}
        return McStudy(seed=int(obj.get("seed", 0)),
                       fit_options=dict(obj.get("fit_options", {})), **fields)


@dataclass
class McReport:
    """Aggregated study output: one row per (estimator, N, parameter)."""

    rows: list
    failures: dict
    replicates: int

    def as_csv_rows(self) -> list:
        head = ["estimator", "N", "param", "bias", "var", "mse", "cpu"]
        out = [head]
        for r in self.rows:
            out.append([r["estimator"], r["N"], r["param"], r["bias"],
                        r["var"], r["mse"], r["cpu"]])
        return out

    def row(self, estimator: str, n: int, param: str) -> dict:
        for r in self.rows:
            if r["estimator"] == estimator and r["N"] == n and r["param"] == param:
                return r
        raise KeyError((estimator, n, param))


def _rep_seed(master: int, n: int, rep: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=master, spawn_key=(n, rep))


def _simulate_case(study: McStudy, n: int, rep: int):
    """Returns (data, aux) for one replicate; aux carries the known modulator."""
    ss = _rep_seed(study.seed, n, rep)
    child_mod, child_noise = ss.spawn(2)
    p = study.true_params
    if study.kind == "ar1-bernoulli-mask":
        pr = study.process
        mask_seed = int(child_mod.generate_state(1, np.uint64)[0])
        mask = cosine_bernoulli_mask(pr["mean_p"], pr["amp_p"], pr["omega_p"],
                                     n, seed=mask_seed)
        latent = simulate_ar(ar_model([p["a"]], p["sigma"]), n,
                             np.random.default_rng(child_noise))
        data = Series(mask.g * latent.values, kind="real")
        return data, {"modulator": mask}
    if study.kind == "car1-bounded-walk":
        pr = study.process
        walk = bounded_random_walk_beta(pr["gamma"], pr["span"], pr["amp"], n,
                                        np.random.default_rng(child_mod))
        beta = walk[1:]
        data = simulate_complex_ar1(p["r"], p["sigma"], beta, n,
                                    np.random.default_rng(child_noise))
        return data, {"beta": beta}
    if study.kind == "car1-linear-beta":
        beta = linear_beta(p["gamma"], p["span"], n)
        data = simulate_complex_ar1(p["r"], p["sigma"], beta, n,
                                    np.random.default_rng(child_noise))
        return data, {"beta": beta}
    raise ValueError(f"unknown study kind {study.kind!r}")


def _fit_estimator(study: McStudy, estimator: str, data: Series, aux: dict):
    """Returns (names, values, wall_time) for one estimator on one replicate."""
    opts = dict(study.fit_options)
    kind = study.kind
    if kind == "ar1-bernoulli-mask":
        if estimator == "modulated":
            obj = Ar1ModulatedObjective(data, aux["modulator"])
            init = mom_ar1(data, aux["modulator"])
        elif estimator == "stationary":
            stat_obj = Objective("whittle", data, ar_model([0.5], 1.0))
            init = mom_ar1(data, None)
            res = fit(stat_obj, stat_obj.init_params.replace(init), **opts)
            return res.theta_hat.names, res.theta_hat.values, res.wall_time
        else:
            raise ValueError(f"unknown estimator {estimator!r} for {kind}")
        res = fit(obj, init, **opts)
        return ["a", "sigma"], res.theta_hat.values, res.wall_time
    if kind == "car1-bounded-walk":
        beta = aux["beta"]
        if estimator == "modulated":
            mod = frequency_modulator(beta)
            obj = Car1ModulatedObjective(data, mod)
            init = mom_car1(data, mod)
        elif estimator == "stationary":
            obj = Car1WhittleObjective(data, rotation=float(np.mean(beta)))
            init = mom_car1(data, None)
        else:
            raise ValueError(f"unknown estimator {estimator!r} for {kind}")
        res = fit(obj, init, lower=obj.lower, upper=obj.upper, **opts)
        return list(obj.names), res.theta_hat.values, res.wall_time
    if kind == "car1-linear-beta":
        y = np.asarray(data.values)
        n = y.size
        c0 = float(np.mean(np.abs(y) ** 2))
        c1 = np.sum(np.conj(y[:-1]) * y[1:]) / n
        r0 = float(np.clip(np.abs(c1) / (0.95 * c0), 0.05, 0.99))
        gamma0 = float(np.angle(c1))
        sigma0 = float(np.sqrt(max(c0 * (1.0 - r0 * r0), 1e-10)))
        if estimator == "modulated":
            obj = LinearBetaCar1Objective(data)
            init = np.array([r0, sigma0, gamma0, np.pi / 3.0])
        elif estimator == "exact":
            obj = LinearBetaCar1ExactObjective(data)
            init = np.array([r0, sigma0, gamma0, np.pi / 3.0])
        elif estimator == "stationary":
            obj = Car1WhittleObjective(data, rotation=None)
            init = np.array([r0, sigma0, gamma0])
        else:
            raise ValueError(f"unknown estimator {estimator!r} for {kind}")
        res = fit(obj, init, lower=obj.lower, upper=obj.upper, **opts)
        return list(obj.names), res.theta_hat.values, res.wall_time
    raise ValueError(f"unknown study kind {kind!r}")


def _run_chunk(study_dict: dict, n: int, reps: list) -> list:
    """Worker: run a chunk of replicates, return raw per-fit records."""
    study = McStudy.from_json_dict(study_dict)
    out = []
    for rep in reps:
        data, aux = _simulate_case(study, n, rep)
        rec = {}
        for est in study.estimators:
            t0 = time.perf_counter()
            try:
                names, values, wall = _fit_estimator(study, est, data, aux)
                rec[est] = {"names": list(names),
                            "values": [float(v) for v in values],
                            "cpu": wall}
            except (FitFailure, ValueError, np.linalg.LinAlgError) as exc:
                rec[est] = {"error": f"{type(exc).__name__}: {exc}",
                            "cpu": time.perf_counter() - t0}
        out.append((rep, rec))
    return out


def run_study(study: McStudy, threads: int = 1) -> McReport:
    """Run all replicates of a study and aggregate bias/variance/MSE/CPU.

    Deterministic for a fixed master seed regardless of `threads`; individual
    fit failures are excluded and counted, and more than 1% of failures for
    any estimator fails the study.
    """
    if study.replicates < 1:
        raise ValueError("need at least one replicate")
    study_dict = study.to_json_dict()
    records = {}
    for n in study.n_grid:
        reps = list(range(study.replicates))
        if threads > 1:
            chunks = [reps[i::threads] for i in range(threads)]
            chunks = [c for c in chunks if c]
            with ProcessPoolExecutor(max_workers=threads) as pool:
                parts = pool.map(_run_chunk, [study_dict] * len(chunks),
                                 [n] * len(chunks), chunks)
            merged = [item for part in parts for item in part]
        else:
            merged = _run_chunk(study_dict, n, reps)
        merged.sort(key=lambda item: item[0])
        records[n] = [rec for _, rec in merged]

    rows = []
    failures = {}
    for n in study.n_grid:
        for est in study.estimators:
            good = [rec[est] for rec in records[n] if "error" not in rec[est]]
            bad = [rec[est] for rec in records[n] if "error" in rec[est]]
            failures[(est, n)] = len(bad)
            if len(bad) / study.replicates >= 0.01 and len(bad) > 0:
                raise RuntimeError(
                    f"estimator {est!r} failed on {len(bad)}/{study.replicates} "
                    f"replicates at N={n}; first error: {bad[0]['error']}")
            if not good:
                raise RuntimeError(f"estimator {est!r} produced no fits at N={n}")
            names = good[0]["names"]
            cpu = float(np.mean([g["cpu"] for g in good]))
            values = np.array([g["values"] for g in good])
            for j, name in enumerate(names):
                if name not in study.true_params:
                    continue
                est_vals = values[:, j]
                truth = float(study.true_params[name])
                bias = float(np.mean(est_vals) - truth)
                var = float(np.var(est_vals))
                mse = float(np.mean((est_vals - truth) ** 2))
                rows.append({"estimator": est, "N": n, "param": name,
                             "bias": bias, "var": var, "mse": mse, "cpu": cpu})
    return McReport(rows=rows, failures={f"{k[0]}@{k[1]}": v
                                         for k, v in failures.items()},
                    replicates=study.replicates)
