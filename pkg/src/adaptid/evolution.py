"""Evolutionary search primitives and the hybrid gradient/evolution learner.

The hybrid controller runs plain LMS and watches the slope of the windowed
error curve.  Whenever progress stalls (|slope| below a calibrated
threshold) it spawns a batch of randomly offset coefficient vectors,
scores every candidate on the next block of samples with adaptation
frozen, and resumes LMS from the best one.  A real-coded GA over the same
coefficient space serves as the population-based baseline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._curve import CurveTracker, mse_db
from .adaptive_fir import FirFilterState, LmsRunConfig, lms_step
from .adaptive_iir import IirFilterState, iir_gradient_step, iir_output, stabilize_poles
from .errors import InvalidArgumentError, NoPlateauError
from .signals import RngStream, as_signal

# plateau detector: trailing band this wide, sustained this many delta-windows
_PLATEAU_BAND_DB = 10.0
_PLATEAU_SUSTAIN = 5


@dataclass
class Chromosome:
    """A candidate coefficient vector with an optional cached score."""

    genes: np.ndarray
    cached_mse: Optional[float] = None


@dataclass
class LmsGaConfig:
    """Hybrid-search knobs.

    ``gamma`` is the slope-estimation window (iterations between checks),
    ``gradient_threshold`` the stall threshold in dB per iteration, ``t_e``
    the per-candidate evaluation block, ``offset_d`` the per-gene offset
    bound of each spawned candidate.
    """

    mu: float
    m: int = 5
    offset_d: float = 0.02
    gamma: int = 8
    gradient_threshold: float = 0.0
    t_e: int = 8

    def __post_init__(self):
        if self.m < 1:
            raise InvalidArgumentError("m must be >= 1")
        if self.offset_d < 0:
            raise InvalidArgumentError("offset_d must be >= 0")
        if self.gamma < 1:
            raise InvalidArgumentError("gamma must be >= 1")
        if self.t_e < 1:
            raise InvalidArgumentError("t_e must be >= 1")


def windowed_mse(errors, t_e: int) -> float:
    """Mean of the last ``t_e`` squared errors."""
    errors = np.asarray(errors, dtype=np.float64)
    if t_e < 1:
        raise InvalidArgumentError("t_e must be >= 1")
    if errors.size < t_e:
        raise InvalidArgumentError(
            f"window holds {errors.size} entries, need at least {t_e}"
        )
    tail = errors[-t_e:]
    return float(np.mean(tail * tail))


def fitness(cost: float) -> float:
    """Map a non-negative cost to (0, 1]: F = 1 / (1 + cost)."""
    if cost < 0 or math.isnan(cost):
        raise InvalidArgumentError("cost must be >= 0")
    return 1.0 / (1.0 + cost)


def spawn_offsprings(parent, m: int, offset_d: float, rng: RngStream) -> list[Chromosome]:
    """``m`` random offsets of the parent, each gene moved by at most D.

    Every gene gets its own uniform offset factor in [-1, +1]; a shared
    scalar would only ever move the vector along one diagonal of the
    search space.
    """
    genes = parent.genes if isinstance(parent, Chromosome) else as_signal(parent, "parent")
    if m < 1:
        raise InvalidArgumentError("m must be >= 1")
    if offset_d < 0:
        raise InvalidArgumentError("offset_d must be >= 0")
    offsprings = []
    for _ in range(m):
        sigma = np.array([2.0 * rng.uniform() - 1.0 for _ in range(genes.size)])
        offsprings.append(Chromosome(genes=genes + sigma * offset_d))
    return offsprings


def estimate_gt(curve, delta: int) -> tuple[float, int]:
    """Stall threshold from a pure-LMS learning curve's plateau.

    The plateau starts at the earliest point after which the windowed-MSE
    dB trace stays inside a 10 dB band for at least 5*delta iterations;
    the threshold is the fluctuation band of the trailing 5*delta window
    (the settled steady state, free of descent-tail samples) divided by
    ``delta``.  Divergent or still-descending curves have no qualifying
    tail and raise :class:`NoPlateauError`.
    """
    db = np.asarray(getattr(curve, "curve_mse_db", curve), dtype=np.float64)
    if delta < 1:
        raise InvalidArgumentError("delta must be >= 1")
    if db.size == 0:
        raise InvalidArgumentError("curve is empty")
    sustain = _PLATEAU_SUSTAIN * delta
    if db.size >= sustain:
        suffix_max = np.maximum.accumulate(db[::-1])[::-1]
        suffix_min = np.minimum.accumulate(db[::-1])[::-1]
        band = suffix_max - suffix_min
        for start in range(db.size - sustain + 1):
            if band[start] <= _PLATEAU_BAND_DB:
                steady = band[db.size - sustain]
                return float(steady / delta), start
    raise NoPlateauError("learning curve never settles into a plateau")


class _FirAdapter:
    """Uniform step/evaluate interface over the transversal filter."""

    def __init__(self, order: int, initial=None):
        if initial is None:
            self.state = FirFilterState.zeros(order)
        else:
            self.state = FirFilterState.with_weights(initial)
            if self.state.weights.size != order:
                raise InvalidArgumentError("initial weights do not match the order")

    def adapt(self, x, d, mu):
        _, _, eps = lms_step(self.state, x, d, mu)
        return eps

    def genes(self) -> np.ndarray:
        return self.state.weights.copy()

    def candidate_states(self, gene_sets):
        for genes in gene_sets:
            st = FirFilterState(weights=np.asarray(genes, dtype=np.float64).copy(),
                                delay_line=self.state.delay_line.copy())
            yield st

    @staticmethod
    def frozen_error(state, x, d) -> float:
        line = state.delay_line
        line[1:] = line[:-1]
        line[0] = x
        return d - float(np.dot(state.weights, line))

    def adopt(self, state) -> None:
        self.state = state


class _IirAdapter:
    """Uniform step/evaluate interface over the recursive filter."""

    def __init__(self, m: int, l: int, initial=None):
        if initial is None:
            self.state = IirFilterState.zeros(m, l)
        else:
            self.state = IirFilterState.with_coefficients(*initial)
            if self.state.order_m != m or self.state.order_l != l:
                raise InvalidArgumentError("initial coefficients do not match (M, L)")
        self.m = m
        self.l = l

    def adapt(self, x, d, mu):
        _, _, eps = iir_gradient_step(self.state, x, d, mu)
        return eps

    def genes(self) -> np.ndarray:
        return self.state.coefficient_vector()

    def candidate_states(self, gene_sets):
        for genes in gene_sets:
            genes = np.asarray(genes, dtype=np.float64)
            st = IirFilterState(
                b=genes[: self.m + 1].copy(),
                a=stabilize_poles(genes[self.m + 1 :]),
                input_line=self.state.input_line.copy(),
                output_line=self.state.output_line.copy(),
                alpha=self.state.alpha.copy(),
                beta=self.state.beta.copy(),
            )
            yield st

    @staticmethod
    def frozen_error(state, x, d) -> float:
        return d - iir_output(state, x)

    def adopt(self, state) -> None:
        self.state = state


def _make_adapter(structure, initial=None):
    if isinstance(structure, (tuple, list)):
        m, l = structure
        return _IirAdapter(int(m), int(l), initial)
    return _FirAdapter(int(structure), initial)


def lms_ga_run(x, d, structure, cfg: LmsGaConfig, run_cfg: LmsRunConfig, rng: RngStream,
               initial=None):
    """LMS with evolutionary restarts on stalled progress.

    Every ``gamma`` iterations the slope of the windowed-MSE dB trace is
    checked; when its magnitude falls below ``gradient_threshold``, the
    parent and ``m`` random offsets are scored over the next ``t_e``
    samples with adaptation frozen, and learning continues from the block's
    best candidate.  With a non-positive threshold the trigger can never
    fire and the run is identical to plain LMS (no extra RNG draws).
    """
    from .sysid import ExperimentReport

    x = as_signal(x, "x")
    d = as_signal(d, "d")
    if x.size != d.size:
        raise InvalidArgumentError("x and d must have equal length")
    adapter = _make_adapter(structure, initial)
    tracker = CurveTracker(run_cfg.mse_window, run_cfg.convergence_threshold_db, run_cfg.hold)
    n_iter = min(x.size, run_cfg.max_iterations)
    gt = cfg.gradient_threshold
    trigger_events: list[dict] = []
    checks: list[tuple] = []
    n = 0  # next unconsumed sample
    done = False
    while not done and len(tracker.eps2) < n_iter and n < x.size:
        eps = adapter.adapt(x[n], d[n], cfg.mu)
        n += 1
        if tracker.push(eps):
            break
        it = len(tracker.eps2)
        if gt > 0.0 and it % cfg.gamma == 0 and it > cfg.gamma:
            delta_e = (tracker.db[-1] - tracker.db[-1 - cfg.gamma]) / cfg.gamma
            fire = abs(delta_e) < gt and n + cfg.t_e <= x.size \
                and it + cfg.t_e <= n_iter
            checks.append((it, delta_e, fire, None))
            if not fire:
                continue
            parent = Chromosome(genes=adapter.genes())
            candidates = [parent] + spawn_offsprings(parent, cfg.m, cfg.offset_d, rng)
            block_x = x[n : n + cfg.t_e]
            block_d = d[n : n + cfg.t_e]
            best = None
            for cand, state in zip(candidates, adapter.candidate_states(
                    c.genes for c in candidates)):
                errs = np.empty(cfg.t_e)
                for t in range(cfg.t_e):
                    errs[t] = adapter.frozen_error(state, block_x[t], block_d[t])
                cand.cached_mse = windowed_mse(errs, cfg.t_e)
                if best is None or cand.cached_mse < best[0].cached_mse:
                    best = (cand, state, errs)
            best_cand, best_state, best_errs = best
            adapter.adopt(best_state)
            best_db = mse_db(best_cand.cached_mse)
            trigger_events.append(
                {"iteration": it, "delta_e": delta_e, "best_candidate_mse_db": best_db}
            )
            checks[-1] = (it, delta_e, True, best_db)
            n += cfg.t_e
            for err in best_errs:
                if tracker.push(err):
                    done = True
                    break
    if isinstance(adapter, _IirAdapter):
        final = {"b": adapter.state.b.copy(), "a": adapter.state.a.copy()}
    else:
        final = adapter.state.weights.copy()
    return ExperimentReport(
        curve_eps2=np.asarray(tracker.eps2),
        curve_mse_db=np.asarray(tracker.db),
        converged_at=tracker.converged_at,
        final_weights=final,
        final_mse_db=tracker.final_mse_db,
        trigger_events=trigger_events,
        delta_e_checks=checks,
    )


@dataclass
class GaConfig:
    """Baseline real-coded GA knobs."""

    population_size: int = 40
    generations: int = 200
    tournament_size: int = 2
    crossover_rate: float = 0.9
    mutation_rate: float = 0.1
    mutation_width: float = 0.1
    init_range: float = 1.0
    eval_len: int = 256

    def __post_init__(self):
        if self.population_size < 2:
            raise InvalidArgumentError("population_size must be >= 2")
        if self.generations < 1:
            raise InvalidArgumentError("generations must be >= 1")


def _ga_mse(genes: np.ndarray, structure, x, d, eval_len: int) -> float:
    """Deterministic score of one chromosome over the leading record block."""
    if isinstance(structure, (tuple, list)):
        m, l = int(structure[0]), int(structure[1])
        st = IirFilterState.with_coefficients(
            genes[: m + 1], stabilize_poles(genes[m + 1 :])
        )
        errs = np.empty(eval_len)
        for t in range(eval_len):
            errs[t] = d[t] - iir_output(st, x[t])
    else:
        order = int(structure)
        st = FirFilterState.with_weights(genes[:order])
        errs = np.empty(eval_len)
        for t in range(eval_len):
            line = st.delay_line
            line[1:] = line[:-1]
            line[0] = x[t]
            errs[t] = d[t] - float(np.dot(st.weights, line))
    return float(np.mean(errs * errs))


def ga_baseline_run(x, d, structure, population_size: int, generations: int,
                    rng: RngStream, knobs: GaConfig | None = None,
                    initial_population=None):
    """Population GA over filter coefficients; returns the elite's report.

    Tournament selection (size 2), per-gene arithmetic crossover, additive
    uniform mutation, elitism of one.  Fitness is 1/(1 + MSE) with MSE
    evaluated on a fixed leading block of the record, so the elite's score
    can never worsen across generations.  ``initial_population`` seeds the
    first generation; missing slots are filled with random draws.
    """
    from .sysid import ExperimentReport

    x = as_signal(x, "x")
    d = as_signal(d, "d")
    knobs = knobs or GaConfig()
    if population_size < 2:
        raise InvalidArgumentError("population_size must be >= 2")
    if isinstance(structure, (tuple, list)):
        n_genes = int(structure[0]) + 1 + int(structure[1])
    else:
        n_genes = int(structure)
    eval_len = min(knobs.eval_len, x.size)

    pop = []
    for seeded in initial_population or []:
        seeded = as_signal(seeded, "initial_population")
        if seeded.size != n_genes:
            raise InvalidArgumentError("seeded chromosome has the wrong gene count")
        pop.append(Chromosome(genes=seeded.copy()))
    pop = pop[:population_size]
    while len(pop) < population_size:
        pop.append(Chromosome(genes=np.array(
            [(2.0 * rng.uniform() - 1.0) * knobs.init_range for _ in range(n_genes)])))
    eps_min_curve = []
    elite = None
    for _ in range(generations):
        for chrom in pop:
            if chrom.cached_mse is None:
                chrom.cached_mse = _ga_mse(chrom.genes, structure, x, d, eval_len)
        pop.sort(key=lambda c: c.cached_mse)
        if elite is None or pop[0].cached_mse < elite.cached_mse:
            elite = Chromosome(genes=pop[0].genes.copy(), cached_mse=pop[0].cached_mse)
        eps_min_curve.append(elite.cached_mse)

        def tournament() -> Chromosome:
            best = None
            for _ in range(knobs.tournament_size):
                pick = pop[min(int(rng.uniform() * population_size), population_size - 1)]
                if best is None or pick.cached_mse < best.cached_mse:
                    best = pick
            return best

        next_pop = [Chromosome(genes=elite.genes.copy(), cached_mse=elite.cached_mse)]
        while len(next_pop) < population_size:
            p1, p2 = tournament(), tournament()
            if rng.uniform() < knobs.crossover_rate:
                mix = np.array([rng.uniform() for _ in range(n_genes)])
                genes = mix * p1.genes + (1.0 - mix) * p2.genes
            else:
                genes = p1.genes.copy()
            for j in range(n_genes):
                if rng.uniform() < knobs.mutation_rate:
                    genes[j] += (2.0 * rng.uniform() - 1.0) * knobs.mutation_width
            next_pop.append(Chromosome(genes=genes))
        pop = next_pop

    curve = np.asarray(eps_min_curve)
    db = np.array([mse_db(v) for v in curve])
    if isinstance(structure, (tuple, list)):
        m = int(structure[0])
        final = {"b": elite.genes[: m + 1].copy(),
                 "a": stabilize_poles(elite.genes[m + 1 :])}
    else:
        final = elite.genes.copy()
    return ExperimentReport(
        curve_eps2=curve,
        curve_mse_db=db,
        converged_at=None,
        final_weights=final,
        final_mse_db=float(db[-1]) if db.size else None,
    )
