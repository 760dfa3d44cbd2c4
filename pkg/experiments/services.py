"""
Campaign service: success probabilities, pump sweeps, cubic surveys, G-set benchmarks
and the interferometer experiments of the 4-OPO machine.
"""
import logging
import math
import time
from collections import Counter
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from core.base import Service
from core.exceptions import CapabilityError, CimError, DomainError
from core.utils.stats import binomial_interval, summarize, uniformity_pvalue, within_band
from dynamics.integrators import assemble_couplings, assemble_phase_couplings
from dynamics.models import PUMP_LINEAR_RAMP, PumpSchedule, SimConfig, TrialResult
from dynamics.services import normalized_to_seconds
from graphs.cubic import canonical_form, random_cubic_graph
from graphs.ising import cut_value, graph_to_ising, ising_energy, local_improvement, normalized_cut_score
from graphs.models import DelaySpec, IsingProblem, WeightedGraph
from graphs.services import GraphService
from graphs.topology import delay_line_topology
from readout.services import (
    MAX_ENUMERATED_SLOTS,
    accumulate_histogram,
    all_phase_states,
    classify_pattern,
    exhaustive_level_distribution,
    interferometer_pattern,
    scenario_expectations,
    slow_level_distribution,
)

from .models import (
    G1_REFERENCE,
    OUTPUT_HISTOGRAM,
    OUTPUT_LEVELS,
    OUTPUT_TRAJECTORIES,
    PROBLEM_CUBIC,
    PROBLEM_DELAY,
    PROBLEM_GSET,
    PROBLEM_INLINE,
    AcceptanceViolation,
    CampaignSpec,
    CampaignStats,
    GsetEntry,
    IndependentResult,
    PhaseScanPoint,
    ProblemSource,
    ScenarioResult,
    SurveyEntry,
    SurveyOrder,
    SurveyResult,
    SweepPoint,
    SweepResult,
    TrialRecord,
)
from .runner import TrialRunner

logger = logging.getLogger(__name__)

# trajectories kept for export per campaign
TRAJECTORY_EXPORT_LIMIT = 10


def _same_energy(energy: float, ground: float) -> bool:
    return math.isclose(energy, ground, rel_tol=1e-9, abs_tol=1e-9)


def resolve_problem(
    source: ProblemSource, graph_service: GraphService
) -> Tuple[Optional[WeightedGraph], IsingProblem]:
    """Graph (when the problem has one) and Ising problem of a campaign."""
    if source.kind == PROBLEM_INLINE:
        return None, source.problem
    if source.kind == PROBLEM_GSET:
        return graph_service.load_problem(Path(source.path))
    if source.kind == PROBLEM_CUBIC:
        if source.cubic_seed is not None:
            graph = random_cubic_graph(source.n, source.cubic_seed)
        else:
            catalogue = graph_service.cubic_catalogue(source.n)
            index = source.cubic_index or 0
            if not 0 <= index < len(catalogue):
                raise DomainError(f"Order {source.n} has {len(catalogue)} cubic graphs, no index {index}")
            graph = catalogue[index]
        return graph, graph_to_ising(graph)
    if source.kind == PROBLEM_DELAY:
        return None, delay_line_topology(source.delay)
    return None, IsingProblem.zeros(source.n, name=f"uncoupled{source.n}")


def run_problem_campaign(
    problem: IsingProblem,
    cfg: SimConfig,
    n_trials: int,
    graph_service: GraphService,
    runner: Optional[TrialRunner] = None,
    graph: Optional[WeightedGraph] = None,
    apply_local_improvement: bool = True,
    success_probability: bool = True,
    outputs: Sequence[str] = (),
    name: Optional[str] = None,
) -> CampaignStats:
    """
    Run n_trials independent trials of one problem and aggregate them.

    A trial counts towards q when its energy equals the oracle minimum and a build-up time
    was detected; failed trials count against q and are reported separately.
    """
    if n_trials < 1:
        raise DomainError("A campaign needs at least one trial")
    runner = runner or TrialRunner()
    name = name or problem.name or f"problem{problem.n}"

    ground = degeneracy = None
    if success_probability:
        if not graph_service.oracle_available(problem):
            raise CapabilityError(
                f"{name} has {problem.n} spins; the exact oracle is capped at {graph_service.oracle_max_spins}"
            )
        ground, ground_set = graph_service.ground_states(problem)
        degeneracy = len(ground_set)

    if OUTPUT_TRAJECTORIES in outputs:
        cfg = cfg.replace(keep_trajectory=True)

    started = time.perf_counter()
    xi = assemble_couplings(problem, cfg.xi_scale, cfg.coupling_mode)
    results = runner.run(problem, cfg, range(n_trials), graph=graph, xi=xi)

    records = [_record(problem, result, ground, apply_local_improvement) for result in results]
    build_ups = [r.build_up_time for r in records if r.build_up_time is not None]
    n_failed = sum(1 for r in records if r.failure)

    stats = CampaignStats(
        name=name,
        n_trials=n_trials,
        records=records,
        ground_energy=ground,
        ground_degeneracy=degeneracy,
        build_up=summarize(build_ups),
        n_build_up=len(build_ups),
        n_no_build_up=n_trials - n_failed - len(build_ups),
        n_failed=n_failed,
    )
    if build_ups:
        stats.t_mean = stats.build_up["mean"]
        stats.t_seconds = normalized_to_seconds(stats.t_mean, cfg.gamma_s)

    if ground is not None:
        raw = sum(1 for r in records if r.is_ground and r.build_up_time is not None)
        improved = sum(1 for r in records if r.is_ground_improved and r.build_up_time is not None)
        stats.q_raw, stats.q_improved = raw / n_trials, improved / n_trials
        stats.q_raw_ci = binomial_interval(raw, n_trials)
        stats.q_improved_ci = binomial_interval(improved, n_trials)

    completed = [result for result in results if result.ok]
    if completed and OUTPUT_HISTOGRAM in outputs:
        stats.histogram = accumulate_histogram(completed)
    if completed and OUTPUT_LEVELS in outputs:
        stats.levels = slow_level_distribution(completed)
    if OUTPUT_TRAJECTORIES in outputs:
        stats.trajectories = {r.trial_index: r.trajectory for r in completed[:TRAJECTORY_EXPORT_LIMIT]}

    stats.wall_clock = time.perf_counter() - started
    logger.info(
        "Campaign %s: %d trials, q_raw=%s q_improved=%s, %d without build-up, %d failed, %.1fs wall-clock",
        name,
        n_trials,
        stats.q_raw,
        stats.q_improved,
        stats.n_no_build_up,
        n_failed,
        stats.wall_clock,
    )
    return stats


def _record(
    problem: IsingProblem, result: TrialResult, ground: Optional[float], apply_local_improvement: bool
) -> TrialRecord:
    if not result.ok:
        return TrialRecord(
            trial=result.trial_index,
            energy=None,
            energy_improved=None,
            cut=None,
            build_up_time=None,
            is_ground=False if ground is not None else None,
            is_ground_improved=False if ground is not None else None,
            spins=None,
            failure=result.failure,
        )

    energy = result.final_energy
    energy_improved = energy
    if apply_local_improvement:
        energy_improved = ising_energy(problem, local_improvement(problem, result.spins))
    return TrialRecord(
        trial=result.trial_index,
        energy=energy,
        energy_improved=energy_improved,
        cut=result.final_cut,
        build_up_time=result.build_up_time,
        is_ground=_same_energy(energy, ground) if ground is not None else None,
        is_ground_improved=_same_energy(energy_improved, ground) if ground is not None else None,
        spins=result.spins.to_string(),
    )


def run_campaign(
    spec: CampaignSpec, graph_service: GraphService, runner: Optional[TrialRunner] = None
) -> CampaignStats:
    graph, problem = resolve_problem(spec.problem, graph_service)
    return run_problem_campaign(
        problem,
        spec.sim,
        spec.n_trials,
        graph_service,
        runner=runner,
        graph=graph,
        apply_local_improvement=spec.apply_local_improvement,
        success_probability=spec.success_probability,
        outputs=spec.outputs,
        name=spec.problem.describe(),
    )


def sweep_pump(
    problem: IsingProblem,
    p_grid: Sequence[float],
    cfg: SimConfig,
    n_trials: int,
    graph_service: GraphService,
    runner: Optional[TrialRunner] = None,
) -> SweepResult:
    """q at each constant pump rate; every point reuses the same trial streams."""
    if not p_grid:
        raise DomainError("Pump grid is empty")
    points = []
    for p in p_grid:
        stats = run_problem_campaign(
            problem,
            cfg.replace(pump=PumpSchedule.constant(p)),
            n_trials,
            graph_service,
            runner=runner,
            apply_local_improvement=False,
            name=f"{problem.name} p={p:g}",
        )
        low, high = stats.q_raw_ci
        points.append(SweepPoint(p=float(p), q=stats.q_raw, q_low=low, q_high=high, n_trials=n_trials))
    result = SweepResult(points=points)
    logger.info("Pump sweep on %s: p_opt=%g q_opt=%.3f", problem.name, result.p_opt, result.q_opt)
    return result


def cubic_survey(
    orders: Sequence[int],
    cfg: SimConfig,
    n_trials: int,
    graph_service: GraphService,
    runner: Optional[TrialRunner] = None,
) -> SurveyResult:
    """Every non-isomorphic cubic graph of each order, with the per-order worst case."""
    entries: List[SurveyEntry] = []
    order_rows: List[SurveyOrder] = []
    for n in orders:
        catalogue = graph_service.cubic_catalogue(n)
        pooled: List[float] = []
        order_entries = []
        for index, graph in enumerate(catalogue):
            stats = run_problem_campaign(
                graph_to_ising(graph),
                cfg,
                n_trials,
                graph_service,
                runner=runner,
                graph=graph,
                apply_local_improvement=False,
                name=graph.name,
            )
            pooled.extend(r.build_up_time for r in stats.records if r.build_up_time is not None)
            order_entries.append(
                SurveyEntry(
                    order=n,
                    graph_index=index,
                    canonical_form=canonical_form(graph),
                    q=stats.q_raw,
                    median_build_up=stats.build_up.get("median"),
                    n_build_up=stats.n_build_up,
                )
            )
        worst = min(order_entries, key=lambda entry: entry.q) if order_entries else None
        order_rows.append(
            SurveyOrder(
                order=n,
                n_graphs=len(catalogue),
                q_min=worst.q if worst else None,
                worst_index=worst.graph_index if worst else None,
                median_build_up=summarize(pooled)["median"],
            )
        )
        entries.extend(order_entries)
        logger.info("Order %d: %d graphs, q_min=%s", n, len(catalogue), worst.q if worst else None)
    return SurveyResult(entries=entries, orders=order_rows)


def benchmark_gset(
    paths: Sequence[Path],
    cfg: SimConfig,
    n_runs: int,
    graph_service: GraphService,
    runner: Optional[TrialRunner] = None,
) -> List[GsetEntry]:
    """Normalized O_max / O_avg per instance, raw and after local improvement."""
    if n_runs < 1:
        raise DomainError("A benchmark needs at least one run per instance")
    runner = runner or TrialRunner()
    entries = []
    for path in paths:
        path = Path(path)
        meta = graph_service.metadata_for(path)
        if meta is None:
            logger.warning("Skipping %s: no U_SDP / E_neg metadata", path)
            continue
        try:
            graph, problem = graph_service.load_problem(path)
        except CimError as e:
            logger.warning("Skipping %s: %s", path, e)
            continue
        if graph.n != meta.v or graph.num_edges != meta.e:
            logger.warning(
                "%s: file has V=%d E=%d, metadata says V=%d E=%d", meta.name, graph.n, graph.num_edges, meta.v, meta.e
            )

        started = time.perf_counter()
        xi = assemble_couplings(problem, cfg.xi_scale, cfg.coupling_mode)
        results = [r for r in runner.run(problem, cfg, range(n_runs), graph=graph, xi=xi) if r.ok]
        if not results:
            logger.warning("Skipping %s: every run failed", meta.name)
            continue

        raw = [normalized_cut_score(r.final_cut, meta.e_neg, meta.u_sdp) for r in results]
        improved = [
            normalized_cut_score(cut_value(graph, local_improvement(problem, r.spins)), meta.e_neg, meta.u_sdp)
            for r in results
        ]
        build_ups = [r.build_up_time for r in results if r.build_up_time is not None]
        entry = GsetEntry(
            instance=meta.name,
            v=meta.v,
            e=meta.e,
            u_sdp=meta.u_sdp,
            e_neg=meta.e_neg,
            o_max=max(raw),
            o_avg=math.fsum(raw) / len(raw),
            o_max_improved=max(improved),
            o_avg_improved=math.fsum(improved) / len(improved),
            t_mean=summarize(build_ups)["mean"],
        )
        entries.append(entry)
        logger.info(
            "%s: O_max=%.4f O_avg=%.4f (improved %.4f / %.4f), %d runs in %.1fs",
            meta.name,
            entry.o_max,
            entry.o_avg,
            entry.o_max_improved,
            entry.o_avg_improved,
            len(results),
            time.perf_counter() - started,
        )
        if meta.name == "G1":
            logger.info("G1 O_avg gap to the published %.4f: %+.4f", G1_REFERENCE, entry.o_avg - G1_REFERENCE)
    return entries


def expected_class_probabilities(n: int) -> Dict[str, float]:
    """Probability of each rotation class when all phase states are equally likely."""
    counts = Counter(classify_pattern(interferometer_pattern(ps)).label() for ps in all_phase_states(n))
    total = 2**n
    return {key: count / total for key, count in counts.items()}


def independent_opo_experiment(
    n: int,
    cfg: SimConfig,
    n_trials: int,
    graph_service: GraphService,
    runner: Optional[TrialRunner] = None,
) -> IndependentResult:
    """Uncoupled oscillators under gradual pumping; their phases should be uniform."""
    if n > MAX_ENUMERATED_SLOTS:
        raise CapabilityError(f"Independent-OPO statistics need n <= {MAX_ENUMERATED_SLOTS}, got {n}")
    if cfg.pump.kind != PUMP_LINEAR_RAMP:
        logger.warning("Independent OPOs are pumped gradually; replacing %s with a ramp", cfg.pump.describe())
        ramp = PumpSchedule(kind=PUMP_LINEAR_RAMP)
        cfg = cfg.replace(pump=ramp, t_max=max(cfg.t_max, ramp.t_ramp))

    problem = IsingProblem.zeros(n, name=f"uncoupled{n}")
    stats = run_problem_campaign(
        problem,
        cfg.replace(xi_scale=0.0),
        n_trials,
        graph_service,
        runner=runner,
        apply_local_improvement=False,
        success_probability=False,
        outputs=(OUTPUT_HISTOGRAM, OUTPUT_LEVELS),
        name=problem.name,
    )
    if stats.histogram is None:
        raise DomainError("Every independent-OPO trial failed")
    histogram, levels = stats.histogram, stats.levels

    expected = expected_class_probabilities(n)
    keys = sorted(expected)
    pvalue = uniformity_pvalue([histogram.counts.get(k, 0) for k in keys], [expected[k] for k in keys])
    entries_ok = all(within_band(histogram.fraction(k), expected[k], histogram.total) for k in keys)

    expected_levels = exhaustive_level_distribution(n).frequencies()
    levels_ok = all(within_band(levels.frequency(lv), p, levels.total) for lv, p in expected_levels.items())
    logger.info(
        "Independent OPOs (n=%d): uniformity p=%.3g, entries in band=%s, levels in band=%s",
        n,
        pvalue,
        entries_ok,
        levels_ok,
    )
    return IndependentResult(
        histogram=histogram,
        levels=levels,
        uniformity_pvalue=pvalue,
        entries_within_band=entries_ok,
        levels_within_band=levels_ok,
        expected_levels=expected_levels,
    )


def delay_scenarios(
    configs: Sequence[DelaySpec],
    cfg: SimConfig,
    n_trials: int,
    graph_service: GraphService,
    runner: Optional[TrialRunner] = None,
) -> List[ScenarioResult]:
    """Slow-detector distribution per delay-phase setting against its ground-state prediction."""
    results = []
    for d in configs:
        expected = scenario_expectations(d)
        stats = run_problem_campaign(
            delay_line_topology(d),
            cfg,
            n_trials,
            graph_service,
            runner=runner,
            apply_local_improvement=False,
            success_probability=False,
            outputs=(OUTPUT_LEVELS,),
            name=d.label(),
        )
        if stats.levels is None:
            raise DomainError(f"Every trial of scenario {d.label()} failed")
        observed = stats.levels
        ok = all(within_band(observed.frequency(level), p, observed.total) for level, p in expected.items())
        logger.info("Scenario %s: observed %s, expected %s", d.label(), observed.frequencies(), expected)
        results.append(ScenarioResult(label=d.label(), expected=expected, observed=observed, within_band=ok))
    return results


def phase_scan(
    base: DelaySpec,
    delay: int,
    phases: Sequence[float],
    cfg: SimConfig,
    n_trials: int,
    runner: Optional[TrialRunner] = None,
) -> List[PhaseScanPoint]:
    """
    Slow-detector level frequencies while one delay's injection phase sweeps the grid.

    The other delays keep their phase from base; blocked delays stay blocked.
    """
    if not any(line.m == delay and line.enabled for line in base.lines):
        raise DomainError(f"Delay {delay} is not an enabled line of {base.to_string()}")
    runner = runner or TrialRunner()
    magnitude = abs(cfg.xi_scale)
    points = []
    for theta in phases:
        lines = [
            (line.m, float(theta) if line.m == delay else line.phase, line.amplitude)
            for line in base.lines
            if line.enabled
        ]
        xi, xi_quad = assemble_phase_couplings(base.n, lines, cfg.xi_scale)
        j = xi / magnitude if magnitude else np.zeros_like(xi)
        problem = IsingProblem.from_dense(j, name=f"scan{base.n}@{theta:g}")
        results = [r for r in runner.run(problem, cfg, range(n_trials), xi=xi, xi_quad=xi_quad) if r.ok]
        if not results:
            raise DomainError(f"Every trial at phase {theta:g} failed")
        levels = slow_level_distribution(results)
        points.append(PhaseScanPoint(phase=float(theta), frequencies=levels.frequencies(), n_trials=levels.total))
        logger.debug("Phase %.4f: %s", theta, levels.frequencies())
    return points


def check_acceptance(
    metrics: Mapping[str, Optional[float]], bands: Mapping[str, Tuple[float, float]]
) -> List[AcceptanceViolation]:
    """Bands whose metric is missing or falls outside [lo, hi]."""
    violations = []
    for metric, (low, high) in sorted(bands.items()):
        value = metrics.get(metric)
        if value is None or not low <= value <= high:
            violations.append(AcceptanceViolation(metric=metric, value=value, low=low, high=high))
    return violations


class CampaignService(Service):
    """Service layer for campaigns; owns the worker pool size."""

    def __init__(self, graph_service: GraphService, workers: int = 1):
        super().__init__(graph_service.repository)
        self.graph_service = graph_service
        self.runner = TrialRunner(workers)

    def run(self, spec: CampaignSpec) -> CampaignStats:
        try:
            return run_campaign(spec, self.graph_service, self.runner)
        except CimError as e:
            logger.error("Campaign %s failed: %s", spec.problem.describe(), e)
            raise

    def sweep(self, problem: IsingProblem, p_grid: Sequence[float], cfg: SimConfig, n_trials: int) -> SweepResult:
        return sweep_pump(problem, p_grid, cfg, n_trials, self.graph_service, self.runner)

    def survey(self, orders: Sequence[int], cfg: SimConfig, n_trials: int) -> SurveyResult:
        return cubic_survey(orders, cfg, n_trials, self.graph_service, self.runner)

    def benchmark(self, paths: Sequence[Path], cfg: SimConfig, n_runs: int) -> List[GsetEntry]:
        return benchmark_gset(paths, cfg, n_runs, self.graph_service, self.runner)

    def independent(self, n: int, cfg: SimConfig, n_trials: int) -> IndependentResult:
        return independent_opo_experiment(n, cfg, n_trials, self.graph_service, self.runner)

    def scenarios(self, configs: Sequence[DelaySpec], cfg: SimConfig, n_trials: int) -> List[ScenarioResult]:
        return delay_scenarios(configs, cfg, n_trials, self.graph_service, self.runner)

    def phase_scan(
        self, base: DelaySpec, delay: int, phases: Sequence[float], cfg: SimConfig, n_trials: int
    ) -> List[PhaseScanPoint]:
        return phase_scan(base, delay, phases, cfg, n_trials, self.runner)
