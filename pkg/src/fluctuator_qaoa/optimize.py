"""Basin-hopping optimization of landscapes and the AR metric pipeline.

The protocol: independent restarts draw initial angles uniformly in a tiny
interval around the origin, locally minimize, then alternate random
perturbations with local minimization under Metropolis acceptance.  All
randomness comes from counter-based streams keyed by (seed, restart, hop),
so results are identical for any scheduling of the restarts.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy import optimize as sciopt

from .executor import Landscape, NoiseModel, noiseless_model
from .sk import AnsatzCircuit, Params, SkInstance, brute_force_optimum, build_swap_network

LOCAL_QUASI_NEWTON = "quasi-newton"
LOCAL_SIMPLEX = "simplex"


@dataclass(frozen=True)
class OptimizerConfig:
    """Basin-hopping meta-parameters (defaults follow the study protocol)."""

    restarts: int = 32
    hops: int = 4
    hop_step: float = 0.5
    hop_temperature: float = 1.0
    init_halfwidth: float = 0.5e-3
    local_method: str = LOCAL_QUASI_NEWTON
    local_tol: float = 1e-8
    local_max_iter: int = 500
    gradient_step: float = 1e-6
    seed: int = 0
    workers: int = 1

    def __post_init__(self) -> None:
        if self.restarts < 1 or self.hops < 0 or self.local_max_iter < 1:
            raise ValueError("counts must be positive (hops may be zero)")
        if self.hop_step <= 0 or self.init_halfwidth <= 0 or self.gradient_step <= 0:
            raise ValueError("step widths must be positive")
        if self.hop_temperature <= 0:
            raise ValueError("hop temperature must be positive")
        if self.local_method not in (LOCAL_QUASI_NEWTON, LOCAL_SIMPLEX):
            raise ValueError(f"unknown local method {self.local_method!r}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass(frozen=True)
class RestartRecord:
    """Outcome of one independent basin-hopping restart."""

    index: int
    value: float
    params: tuple[float, ...]
    converged: bool
    acceptances: tuple[bool, ...]


@dataclass(frozen=True)
class OptimizationResult:
    best_params: tuple[float, ...]
    best_value: float
    per_restart: tuple[RestartRecord, ...]

    @property
    def converged_restarts(self) -> int:
        return sum(rec.converged for rec in self.per_restart)

    def best_as_params(self) -> Params:
        return Params.from_array(np.array(self.best_params))


def central_difference_gradient(
    fn: Callable[[np.ndarray], float], x: np.ndarray, step: float
) -> np.ndarray:
    grad = np.empty_like(x)
    for i in range(x.size):
        shift = np.zeros_like(x)
        shift[i] = step
        grad[i] = (fn(x + shift) - fn(x - shift)) / (2.0 * step)
    return grad


def _bfgs_minimize(fn, x0: np.ndarray, config: OptimizerConfig, h_inv=None):
    """BFGS with central-difference gradients and Armijo backtracking.

    Line-search trials cost one function evaluation each (no gradient), so
    an iteration costs 2*dim + O(1) evaluations.  Finite-difference
    gradients bottom out near eval_noise/step, so besides the gradient test
    the loop stops once function decrease stalls below tol; both count as
    convergence, hitting max_iter does not.

    Two standard accelerations: when the directional slope is numerically
    flat (a near-stationary start, e.g. the symmetry saddle at the origin)
    the line search opens with a long step and backtracks, instead of
    crawling out at gradient scale; and a caller may pass in the inverse
    Hessian of a previous minimization as a warm start.
    """
    dim = x0.size
    x = x0.astype(float)
    f = fn(x)
    gradient = getattr(fn, "gradient", None)
    if gradient is None:
        gradient = lambda x, step: central_difference_gradient(fn, x, step)
    grad = gradient(x, config.gradient_step)
    warm = h_inv is not None
    h_inv = np.eye(dim) if h_inv is None else h_inv.copy()
    stall = 0
    converged = False
    for iteration in range(config.local_max_iter):
        if np.abs(grad).max() <= config.local_tol:
            converged = True
            break
        direction = -h_inv @ grad
        slope = float(grad @ direction)
        if slope >= 0.0:  # curvature update went bad; reset to steepest descent
            h_inv = np.eye(dim)
            direction = -grad
            slope = float(grad @ direction)
        alpha = 1.0
        if slope > -1e-6 * (1.0 + abs(f)):
            # Numerically flat start: open far out (2 rad along the largest
            # component) and backtrack, rather than inching off the saddle.
            alpha = max(1.0, 2.0 / max(np.abs(direction).max(), 1e-12))
        f_new = None
        for _ in range(60):
            candidate = x + alpha * direction
            f_try = fn(candidate)
            if f_try <= f + 1e-4 * alpha * slope:
                f_new = f_try
                break
            alpha *= 0.25
        if f_new is None:
            converged = True  # no descent left at the numerical floor
            break
        x_new = x + alpha * direction
        grad_new = gradient(x_new, config.gradient_step)
        s = x_new - x
        y = grad_new - grad
        ys = float(y @ s)
        if ys > 1e-14:
            if iteration == 0 and not warm:
                h_inv = np.eye(dim) * (ys / float(y @ y))
            rho = 1.0 / ys
            left = np.eye(dim) - rho * np.outer(s, y)
            h_inv = left @ h_inv @ left.T + rho * np.outer(s, s)
        stall = stall + 1 if f - f_new <= config.local_tol * (1.0 + abs(f)) else 0
        x, f, grad = x_new, f_new, grad_new
        if stall >= 2:
            converged = True
            break
    return x, float(f), converged, h_inv


def _local_minimize(fn, x0: np.ndarray, config: OptimizerConfig, h_inv=None):
    if config.local_method == LOCAL_QUASI_NEWTON:
        return _bfgs_minimize(fn, x0, config, h_inv=h_inv)
    result = sciopt.minimize(
        fn,
        x0,
        method="Nelder-Mead",
        options={
            "xatol": config.local_tol,
            "fatol": config.local_tol,
            "maxiter": config.local_max_iter * x0.size,
        },
    )
    return np.asarray(result.x, dtype=float), float(result.fun), bool(result.success), None


def _stream(*key: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))


def run_restart(fn, n_params: int, config: OptimizerConfig, index: int) -> RestartRecord:
    """One restart: init draw, local minimize, then hop/minimize/accept cycles."""
    rng = _stream(config.seed, index)
    x0 = rng.uniform(-config.init_halfwidth, config.init_halfwidth, n_params)
    x, value, ok, h_inv = _local_minimize(fn, x0, config)
    best_x, best_value = x, value
    converged = ok
    acceptances = []
    for hop in range(1, config.hops + 1):
        hop_rng = _stream(config.seed, index, hop)
        proposal = x + hop_rng.uniform(-config.hop_step, config.hop_step, n_params)
        x_new, value_new, ok, h_inv = _local_minimize(fn, proposal, config, h_inv=h_inv)
        converged = converged and ok
        if value_new < best_value:
            best_x, best_value = x_new, value_new
        delta = value_new - value
        accept = delta < 0 or hop_rng.random() < math.exp(
            -delta / config.hop_temperature
        )
        if accept:
            x, value = x_new, value_new
        acceptances.append(accept)
    return RestartRecord(
        index=index,
        value=float(best_value),
        params=tuple(float(v) for v in best_x),
        converged=converged,
        acceptances=tuple(acceptances),
    )


def basin_hop(fn, r: int, config: OptimizerConfig) -> OptimizationResult:
    """Minimize a 2r-parameter landscape by restarted basin hopping.

    Deterministic given config.seed; with workers > 1 the restarts run in
    parallel processes (fn must then be picklable, e.g. a Landscape).
    """
    n_params = 2 * r
    indices = range(config.restarts)
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            records = list(
                pool.map(
                    _restart_task,
                    [(fn, n_params, config, i) for i in indices],
                )
            )
    else:
        records = [run_restart(fn, n_params, config, i) for i in indices]
    best = min(records, key=lambda rec: (rec.value, rec.index))
    return OptimizationResult(
        best_params=best.params,
        best_value=best.value,
        per_restart=tuple(records),
    )


def _restart_task(args) -> RestartRecord:
    fn, n_params, config, index = args
    return run_restart(fn, n_params, config, index)


class ArMetrics(NamedTuple):
    ar: float
    ar0: float
    dar: float


def metrics(c_tilde_opt: float, c_tilde_noise_unaware: float, c_star: float) -> ArMetrics:
    """AR, noise-unaware AR, and their difference (noise adaptivity)."""
    if c_star == 0:
        raise ZeroDivisionError("C* must be nonzero")
    ar = c_tilde_opt / c_star
    ar0 = c_tilde_noise_unaware / c_star
    return ArMetrics(ar=ar, ar0=ar0, dar=ar - ar0)


@dataclass(frozen=True)
class QaoaRun:
    """Noisy + noiseless optimization of one instance and the derived metrics."""

    instance: SkInstance
    model: NoiseModel
    noisy: OptimizationResult
    noiseless: OptimizationResult
    c_star: int
    c_tilde_opt: float
    c_tilde_unaware: float
    ar: float
    ar0: float
    dar: float


def run_qaoa(
    instance: SkInstance,
    r: int,
    model: NoiseModel,
    config: OptimizerConfig,
    noiseless_result: OptimizationResult | None = None,
    circuit: AnsatzCircuit | None = None,
) -> QaoaRun:
    """Optimize the noisy landscape and score it against the exact optimum.

    The noise-unaware baseline re-optimizes the noiseless landscape (unless a
    cached result is supplied) and evaluates the noisy landscape at those
    angles; noise-aware and noise-unaware parameters are found independently.
    """
    circuit = circuit or build_swap_network(instance, r)
    noisy_fn = Landscape(instance, circuit, model)
    if noiseless_result is None:
        noiseless_result = basin_hop(
            Landscape(instance, circuit, noiseless_model()), r, config
        )
    noisy_result = basin_hop(noisy_fn, r, config)
    c_star, _ = brute_force_optimum(instance)
    c_unaware = noisy_fn(np.array(noiseless_result.best_params))
    m = metrics(noisy_result.best_value, c_unaware, c_star)
    return QaoaRun(
        instance=instance,
        model=model,
        noisy=noisy_result,
        noiseless=noiseless_result,
        c_star=c_star,
        c_tilde_opt=noisy_result.best_value,
        c_tilde_unaware=c_unaware,
        ar=m.ar,
        ar0=m.ar0,
        dar=m.dar,
    )
