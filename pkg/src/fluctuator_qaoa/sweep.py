"""Experiment sweeps over (instance, model, p, kappa) with persisted results.

Each grid point gets a seed derived from the global seed and its grid
coordinates, so outputs are byte-stable for any worker count (wall-clock
timings excepted).  The noiseless optimization runs once per instance and
is reused for every noise-unaware evaluation; the susceptibility is
evaluated once per (instance, model, kappa) from a chain-expectation table
built at the noiseless optimum.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .executor import (
    MODES,
    SCHEDULES,
    Landscape,
    NoiseModel,
    noiseless_model,
)
from .optimize import OptimizerConfig, basin_hop, metrics
from .sk import Params, brute_force_optimum, build_swap_network, parse_instance
from .susceptibility import build_chain_table, chi_from_table, linearized_ar

CSV_HEADER = (
    "instance,model,p,kappa,AR,AR0,dAR,chi,AR_lin,C_star,c_tilde,"
    "betas,gammas,seed,converged,wall_time_s"
)


@dataclass(frozen=True)
class SweepConfig:
    """Full description of one sweep campaign."""

    instances: tuple[str, ...]
    r: int
    models: tuple[str, ...] = ("temporal", "spatial")
    p_values: tuple[float, ...] = (0.001, 0.01)
    kappa_values: tuple[float, ...] = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)
    error_op: str = "Y"
    schedule: str = "active-gates"
    include_boundary_slot: bool = False
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    seed: int = 0
    workers: int = 1
    csv_path: str | None = None
    json_path: str | None = None
    plot_path: str | None = None

    def __post_init__(self) -> None:
        if not self.instances or not self.models:
            raise ValueError("need at least one instance and one model")
        if not self.p_values or not self.kappa_values:
            raise ValueError("need nonempty p and kappa grids")
        unknown = set(self.models) - set(MODES)
        if unknown:
            raise ValueError(f"unknown models {sorted(unknown)}")
        if self.schedule not in SCHEDULES:
            raise ValueError(f"schedule must be one of {SCHEDULES}")
        if any(not 0 <= v <= 1 for v in self.p_values + self.kappa_values):
            raise ValueError("p and kappa values must lie in [0, 1]")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    def to_dict(self) -> dict:
        out = asdict(self)
        out["optimizer"] = asdict(self.optimizer)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "SweepConfig":
        data = dict(data)
        if "optimizer" in data and isinstance(data["optimizer"], dict):
            data["optimizer"] = OptimizerConfig(**data["optimizer"])
        for key in ("instances", "models", "p_values", "kappa_values"):
            if key in data and data[key] is not None:
                data[key] = tuple(data[key])
        return cls(**data)

    @classmethod
    def from_json_file(cls, path: str) -> "SweepConfig":
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
        return cls.from_dict(payload.get("config", payload))

    def noise_model(self, mode: str, p: float, kappa: float) -> NoiseModel:
        if mode == "none":
            return noiseless_model()
        return NoiseModel(
            mode=mode,
            p=p,
            kappa=kappa,
            error_op=self.error_op,
            schedule=self.schedule,
            include_boundary_slot=self.include_boundary_slot,
        )


@dataclass(frozen=True)
class ExperimentRecord:
    """One sweep point: metrics, optimal angles, provenance."""

    instance: str
    model: str
    p: float
    kappa: float
    ar: float
    ar0: float
    dar: float
    chi: float
    ar_lin: float
    c_star: int
    c_tilde: float
    betas: tuple[float, ...]
    gammas: tuple[float, ...]
    seed: int
    converged: int
    wall_time_s: float
    error: str = ""


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _fmt_list(values) -> str:
    return ";".join(_fmt(v) for v in values)


def record_to_csv_row(rec: ExperimentRecord) -> str:
    return ",".join(
        [
            rec.instance,
            rec.model,
            _fmt(rec.p),
            _fmt(rec.kappa),
            _fmt(rec.ar),
            _fmt(rec.ar0),
            _fmt(rec.dar),
            _fmt(rec.chi),
            _fmt(rec.ar_lin),
            str(rec.c_star),
            _fmt(rec.c_tilde),
            _fmt_list(rec.betas),
            _fmt_list(rec.gammas),
            str(rec.seed),
            str(rec.converged),
            _fmt(rec.wall_time_s),
        ]
    )


def write_csv(records, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(CSV_HEADER + "\n")
        for rec in records:
            fh.write(record_to_csv_row(rec) + "\n")


def write_json(config: SweepConfig, records, path: str) -> None:
    payload = {
        "config": config.to_dict(),
        "records": [asdict(rec) for rec in records],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1)


def _derived_seed(*key: int) -> int:
    return int(np.random.SeedSequence(key).generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class _PointJob:
    index: tuple[int, int, int, int]
    instance_text: str
    r: int
    mode: str
    p: float
    kappa: float
    config: SweepConfig
    optimizer: OptimizerConfig
    noiseless_params: tuple[float, ...]
    ar_at_zero: float
    c_star: int
    chi: float


def _run_point(job: _PointJob) -> ExperimentRecord:
    start = time.perf_counter()
    try:
        instance = parse_instance(job.instance_text)
        circuit = build_swap_network(instance, job.r)
        model = job.config.noise_model(job.mode, job.p, job.kappa)
        fn = Landscape(instance, circuit, model)
        result = basin_hop(fn, job.r, job.optimizer)
        c_unaware = fn(np.array(job.noiseless_params))
        m = metrics(result.best_value, c_unaware, job.c_star)
        params = Params.from_array(np.array(result.best_params))
        return ExperimentRecord(
            instance=job.instance_text,
            model=job.mode,
            p=job.p,
            kappa=job.kappa,
            ar=m.ar,
            ar0=m.ar0,
            dar=m.dar,
            chi=job.chi,
            ar_lin=linearized_ar(job.ar_at_zero, job.chi, job.c_star, job.p),
            c_star=job.c_star,
            c_tilde=result.best_value,
            betas=params.betas,
            gammas=params.gammas,
            seed=job.optimizer.seed,
            converged=result.converged_restarts,
            wall_time_s=time.perf_counter() - start,
        )
    except Exception as exc:  # keep the sweep going; the record carries the error
        nan = float("nan")
        return ExperimentRecord(
            instance=job.instance_text,
            model=job.mode,
            p=job.p,
            kappa=job.kappa,
            ar=nan,
            ar0=nan,
            dar=nan,
            chi=job.chi,
            ar_lin=nan,
            c_star=job.c_star,
            c_tilde=nan,
            betas=(),
            gammas=(),
            seed=job.optimizer.seed,
            converged=0,
            wall_time_s=time.perf_counter() - start,
            error=f"{type(exc).__name__}: {exc}",
        )


def sweep(config: SweepConfig) -> list[ExperimentRecord]:
    """Run the full grid and return records in grid order.

    Grid order is (instance, model, p, kappa); per-point seeds derive from
    the global seed and the grid index only.
    """
    jobs: list[_PointJob] = []
    for ii, text in enumerate(config.instances):
        instance = parse_instance(text)
        circuit = build_swap_network(instance, config.r)
        c_star, _ = brute_force_optimum(instance)
        noiseless_cfg = replace(
            config.optimizer, seed=_derived_seed(config.seed, ii), workers=1
        )
        noiseless = basin_hop(
            Landscape(instance, circuit, noiseless_model()), config.r, noiseless_cfg
        )
        ar_at_zero = noiseless.best_value / c_star
        best_params = Params.from_array(np.array(noiseless.best_params))
        for im, mode in enumerate(config.models):
            chi_by_kappa = {}
            if mode != "none":
                table = build_chain_table(
                    instance,
                    circuit,
                    best_params,
                    config.noise_model(mode, 0.0, 0.0),
                )
                for kappa in config.kappa_values:
                    chi_by_kappa[kappa] = chi_from_table(table, kappa).chi
            for ip, p in enumerate(config.p_values):
                for ik, kappa in enumerate(config.kappa_values):
                    point_seed = _derived_seed(config.seed, ii, im, ip, ik)
                    jobs.append(
                        _PointJob(
                            index=(ii, im, ip, ik),
                            instance_text=text,
                            r=config.r,
                            mode=mode,
                            p=p,
                            kappa=kappa,
                            config=config,
                            optimizer=replace(
                                config.optimizer, seed=point_seed, workers=1
                            ),
                            noiseless_params=noiseless.best_params,
                            ar_at_zero=ar_at_zero,
                            c_star=c_star,
                            chi=chi_by_kappa.get(kappa, 0.0),
                        )
                    )
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            records = list(pool.map(_run_point, jobs))
    else:
        records = [_run_point(job) for job in jobs]
    if config.csv_path:
        write_csv(records, config.csv_path)
    if config.json_path:
        write_json(config, records, config.json_path)
    if config.plot_path:
        write_plot_svg(records, config.plot_path)
    return records


def sweep_from_json(path: str) -> list[ExperimentRecord]:
    """Re-run a sweep from an emitted JSON output (provenance round trip)."""
    return sweep(SweepConfig.from_json_file(path))


def write_plot_svg(records, path: str) -> None:
    """AR vs p and AR vs kappa panels, one line per (model, fixed other axis)."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    ok = [r for r in records if not r.error]
    fig, (ax_p, ax_k) = plt.subplots(1, 2, figsize=(9, 3.6))
    by_pk: dict[tuple[str, float], list[ExperimentRecord]] = {}
    for r in ok:
        by_pk.setdefault((r.model, r.kappa), []).append(r)
    for (model, kappa), group in sorted(by_pk.items()):
        group = sorted(group, key=lambda r: r.p)
        if len({r.p for r in group}) > 1:
            ax_p.plot(
                [r.p for r in group],
                [r.ar for r in group],
                marker="o",
                label=f"{model}, kappa={kappa:g}",
            )
    ax_p.set_xlabel("p")
    ax_p.set_ylabel("AR")
    ax_p.legend(fontsize=6)
    by_kp: dict[tuple[str, float], list[ExperimentRecord]] = {}
    for r in ok:
        by_kp.setdefault((r.model, r.p), []).append(r)
    for (model, p), group in sorted(by_kp.items()):
        group = sorted(group, key=lambda r: r.kappa)
        if len({r.kappa for r in group}) > 1:
            ax_k.plot(
                [r.kappa for r in group],
                [r.ar for r in group],
                marker="o",
                label=f"{model}, p={p:g}",
            )
    ax_k.set_xlabel("kappa")
    ax_k.set_ylabel("AR")
    ax_k.legend(fontsize=6)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
