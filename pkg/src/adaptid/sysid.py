"""Reference plants, experiment orchestration, convergence metrics, reports."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from ._curve import mse_db as _mse_db
from .errors import ConfigError, InvalidArgumentError, InvalidPlantError
from .signals import RngStream, as_signal, color, gen_four_level, standard_lpf_8tap


@dataclass(frozen=True)
class Plant:
    """A known reference system to identify: FIR taps, optional feedback."""

    b: np.ndarray
    a: np.ndarray

    @classmethod
    def fir(cls, taps) -> "Plant":
        return cls(b=as_signal(taps, "b"), a=np.empty(0))

    @classmethod
    def iir(cls, b, a) -> "Plant":
        from .adaptive_iir import pole_radii

        b = as_signal(b, "b")
        a = as_signal(a, "a")
        if a.size and np.max(pole_radii(a)) >= 1.0:
            raise InvalidPlantError("IIR plant has poles on or outside the unit circle")
        return cls(b=b, a=a)

    @property
    def kind(self) -> str:
        return "iir" if self.a.size else "fir"


def standard_fir_plant() -> Plant:
    """The 4-tap benchmark plant [0.03, 0.24, 0.54, 0.8]."""
    return Plant.fir([0.03, 0.24, 0.54, 0.8])


def standard_iir_plant() -> Plant:
    """The first-order benchmark plant 0.6 / (1 - 0.2 z^-1)."""
    return Plant.iir([0.6], [0.2])


@dataclass
class ExperimentReport:
    """Run outcome: learning curve, convergence point, final coefficients.

    ``final_weights`` is a weight array for transversal filters and a
    ``{"b": ..., "a": ...}`` pair for recursive ones.  ``max_pole_radius``
    and ``delta_e_checks`` are in-memory diagnostics and are not part of
    the serialized report.
    """

    curve_eps2: np.ndarray
    curve_mse_db: np.ndarray
    converged_at: Optional[int]
    final_weights: Any
    final_mse_db: Optional[float]
    trigger_events: list = field(default_factory=list)
    seed: Optional[int] = None
    config: Optional[dict] = None
    max_pole_radius: Optional[float] = None
    delta_e_checks: list = field(default_factory=list)


def plant_response(plant: Plant, x) -> np.ndarray:
    """Noiseless plant output for the given input record.

    Runs the same per-sample filter arithmetic as the adaptive filters, so
    an adaptive filter whose coefficients exactly match the plant produces
    a bit-identical output (the error floor reaches exactly zero).
    """
    from .adaptive_iir import IirFilterState, iir_output, pole_radii

    x = as_signal(x, "x")
    b = plant.b
    if plant.kind == "fir":
        out = np.empty(x.size)
        line = np.zeros(b.size)
        for n in range(x.size):
            line[1:] = line[:-1]
            line[0] = x[n]
            out[n] = np.dot(b, line)
        return out
    if np.max(pole_radii(plant.a)) >= 1.0:
        raise InvalidPlantError("IIR plant has poles on or outside the unit circle")
    state = IirFilterState.with_coefficients(plant.b, plant.a)
    out = np.empty(x.size)
    for n in range(x.size):
        out[n] = iir_output(state, x[n])
    return out


def mse_db(mse: float) -> float:
    """Mean-square error in dB; zero clamps to the -400 dB floor."""
    return _mse_db(mse)


def convergence_iterations(curve, threshold_db: float, hold: int) -> Optional[int]:
    """First iteration whose windowed-MSE dB value crosses the threshold
    and stays at or below it for the next ``hold`` iterations."""
    if hold < 1:
        raise InvalidArgumentError("hold must be >= 1")
    db = np.asarray(getattr(curve, "curve_mse_db", curve), dtype=np.float64)
    if db.size < hold + 1:
        return None
    below = (db <= threshold_db).astype(np.int64)
    runs = np.convolve(below, np.ones(hold + 1, dtype=np.int64), mode="valid")
    hits = np.flatnonzero(runs == hold + 1)
    return int(hits[0]) if hits.size else None


def theoretical_cost(kind: str, *, n: int = 0, m: int = 0, l: int = 0, p: int = 0) -> int:
    """Multiplications per adaptation iteration for each filter/input pairing."""
    if min(n, m, l, p) < 0:
        raise InvalidArgumentError("dimensions must be >= 0")
    if kind == "fir_white":
        return 2 * n
    if kind == "iir":
        return (m + l) * (l + 2)
    if kind == "fir_colored":
        return n * p + 2 * n
    raise InvalidArgumentError(f"unknown cost kind: {kind!r}")


@dataclass
class ExperimentConfig:
    """Validated, structured description of one identification run."""

    method: str
    plant: Plant
    order_n: Optional[int] = None
    order_m: Optional[int] = None
    order_l: Optional[int] = None
    colored: bool = False
    lpf: Optional[np.ndarray] = None
    mu: float = 0.045
    seed: int = 1
    n_samples: int = 10_000
    max_iterations: int = 10_000
    threshold_db: Optional[float] = -140.0
    hold: int = 8
    mse_window: int = 8
    lms_ga_m: int = 5
    lms_ga_offset_d: float = 0.02
    lms_ga_gamma: int = 8
    lms_ga_gt: Any = "auto"
    lms_ga_t_e: int = 8
    ga: Any = None
    noise_std: float = 0.0
    echo: Optional[dict] = None

    def validate(self) -> None:
        if self.method not in ("lms_fir", "lms_iir", "lms_ga", "ga"):
            raise ConfigError(f"unknown method {self.method!r}")
        needs_fir = self.method == "lms_fir" or (
            self.method in ("lms_ga", "ga") and self.order_n is not None
        )
        if needs_fir and (self.order_n is None or self.order_n < 1):
            raise ConfigError("order N must be >= 1")
        if not needs_fir:
            if self.order_m is None or self.order_l is None:
                raise ConfigError("orders M and L are required for recursive filters")
            if self.order_m < 0 or self.order_l < 0 or self.order_m + self.order_l < 1:
                raise ConfigError("need M >= 0, L >= 0, M + L >= 1")
        if self.n_samples < 1 or self.max_iterations < 0:
            raise ConfigError("n_samples must be >= 1 and max_iterations >= 0")
        if self.method == "lms_ga":
            if not (self.lms_ga_gt == "auto" or isinstance(self.lms_ga_gt, (int, float))):
                raise ConfigError("gt must be a number or 'auto'")

    def structure(self):
        if self.order_n is not None:
            return self.order_n
        return (self.order_m, self.order_l)


def _resolve_gt(cfg: ExperimentConfig, x, d, run_cfg) -> float:
    """Calibrate the stall threshold from a full-length plain-LMS run."""
    from .adaptive_fir import LmsRunConfig, run_fir_lms
    from .adaptive_iir import run_iir_lms
    from .evolution import estimate_gt

    probe_cfg = LmsRunConfig(
        mu=cfg.mu,
        max_iterations=cfg.max_iterations,
        convergence_threshold_db=None,
        mse_window=cfg.mse_window,
        hold=cfg.hold,
    )
    if cfg.order_n is not None:
        probe = run_fir_lms(x, d, cfg.order_n, probe_cfg)
    else:
        probe = run_iir_lms(x, d, cfg.order_m, cfg.order_l, probe_cfg)
    gt, _ = estimate_gt(probe.curve_mse_db, cfg.lms_ga_gamma)
    return gt


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Generate the seeded record, drive the configured learner, report.

    Identical config and seed produce a bit-identical report.
    """
    from .adaptive_fir import LmsRunConfig, run_fir_lms
    from .adaptive_iir import run_iir_lms
    from .evolution import GaConfig, LmsGaConfig, ga_baseline_run, lms_ga_run

    cfg.validate()
    rng = RngStream(cfg.seed)
    x = gen_four_level(cfg.n_samples, rng)
    if cfg.colored:
        x = color(x, cfg.lpf if cfg.lpf is not None else standard_lpf_8tap())
    d = plant_response(cfg.plant, x)
    if cfg.noise_std > 0.0:
        # uniform noise shaped to the requested standard deviation
        noise = rng.uniform_block(d.size)
        d = d + cfg.noise_std * math.sqrt(3.0) * (2.0 * noise - 1.0)

    run_cfg = LmsRunConfig(
        mu=cfg.mu,
        max_iterations=cfg.max_iterations,
        convergence_threshold_db=cfg.threshold_db,
        mse_window=cfg.mse_window,
        hold=cfg.hold,
    )
    if cfg.method == "lms_fir":
        report = run_fir_lms(x, d, cfg.order_n, run_cfg)
    elif cfg.method == "lms_iir":
        report = run_iir_lms(x, d, cfg.order_m, cfg.order_l, run_cfg)
    elif cfg.method == "lms_ga":
        gt = cfg.lms_ga_gt
        if gt == "auto":
            gt = _resolve_gt(cfg, x, d, run_cfg)
        hybrid_cfg = LmsGaConfig(
            mu=cfg.mu,
            m=cfg.lms_ga_m,
            offset_d=cfg.lms_ga_offset_d,
            gamma=cfg.lms_ga_gamma,
            gradient_threshold=float(gt),
            t_e=cfg.lms_ga_t_e,
        )
        report = lms_ga_run(x, d, cfg.structure(), hybrid_cfg, run_cfg, rng)
    elif cfg.method == "ga":
        knobs = cfg.ga if isinstance(cfg.ga, GaConfig) else GaConfig()
        report = ga_baseline_run(
            x, d, cfg.structure(), knobs.population_size, knobs.generations, rng, knobs
        )
    else:  # pragma: no cover - validate() rejects earlier
        raise ConfigError(f"unknown method {cfg.method!r}")
    report.seed = cfg.seed
    report.config = cfg.echo if cfg.echo is not None else _config_dict(cfg)
    return report


def _config_dict(cfg: ExperimentConfig) -> dict:
    doc = {
        "method": cfg.method,
        "plant": {"b": cfg.plant.b.tolist(), "a": cfg.plant.a.tolist()},
        "input": {
            "kind": "four_level",
            "colored": cfg.colored,
            "lpf": "standard8" if cfg.lpf is None else np.asarray(cfg.lpf).tolist(),
        },
        "mu": cfg.mu,
        "seed": cfg.seed,
        "run": {
            "max_iterations": cfg.max_iterations,
            "threshold_db": cfg.threshold_db,
            "hold": cfg.hold,
        },
    }
    if cfg.order_n is not None:
        doc["orders"] = {"N": cfg.order_n}
    else:
        doc["orders"] = {"M": cfg.order_m, "L": cfg.order_l}
    if cfg.method == "lms_ga":
        doc["lms_ga"] = {
            "m": cfg.lms_ga_m,
            "D": cfg.lms_ga_offset_d,
            "gamma": cfg.lms_ga_gamma,
            "gt": cfg.lms_ga_gt,
            "t_e": cfg.lms_ga_t_e,
        }
    return doc


def _weights_doc(final_weights) -> Any:
    if isinstance(final_weights, dict):
        return {k: np.asarray(v).tolist() for k, v in final_weights.items()}
    return np.asarray(final_weights).tolist()


def write_curve_csv(report: ExperimentReport, path) -> None:
    """Learning curve as ``iteration,eps_squared,mse_db_window``."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("iteration,eps_squared,mse_db_window\n")
        for i, (e2, db) in enumerate(zip(report.curve_eps2, report.curve_mse_db)):
            fh.write(f"{i},{float(e2)!r},{float(db)!r}\n")


def write_report_json(report: ExperimentReport, path, curve_file: str) -> None:
    """Serialized report document; field set is fixed."""
    doc = {
        "config": report.config,
        "seed": report.seed,
        "converged_at": report.converged_at,
        "final_weights": _weights_doc(report.final_weights),
        "final_mse_db": report.final_mse_db,
        "trigger_events": report.trigger_events,
        "curve_file": curve_file,
    }
    with open(path, "w", encoding="utf-8", newline="") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_coefficients_csv(report: ExperimentReport, path) -> None:
    """Final recursive-filter coefficients as two padded CSV columns."""
    if not isinstance(report.final_weights, dict):
        raise InvalidArgumentError("coefficient CSV applies to recursive filters only")
    b = np.asarray(report.final_weights["b"])
    a = np.asarray(report.final_weights["a"])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("b,a\n")
        for i in range(max(b.size, a.size)):
            bs = repr(float(b[i])) if i < b.size else ""
            as_ = repr(float(a[i])) if i < a.size else ""
            fh.write(f"{bs},{as_}\n")


def write_trigger_log_csv(report: ExperimentReport, path) -> None:
    """Stall-check log as ``iteration,delta_e,triggered,best_candidate_mse_db``."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("iteration,delta_e,triggered,best_candidate_mse_db\n")
        for it, delta_e, fired, best_db in report.delta_e_checks:
            tail = repr(float(best_db)) if fired else ""
            fh.write(f"{it},{float(delta_e)!r},{int(fired)},{tail}\n")


def read_curve_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Read back a learning-curve CSV; returns (eps_squared, mse_db_window)."""
    data = np.genfromtxt(path, delimiter=",", skip_header=1, dtype=np.float64)
    data = np.atleast_2d(data)
    if data.size == 0:
        return np.empty(0), np.empty(0)
    return data[:, 1].copy(), data[:, 2].copy()
