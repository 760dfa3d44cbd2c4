"""
Django management command running the simulator's experiments.
Usage: python manage.py cim <subcommand> --config PATH [--out DIR] [--seed N] [--workers N] [--check]
"""
import logging
import math
import time
from pathlib import Path
from typing import Any, Dict, Optional

from django.conf import settings
from django.core.exceptions import ValidationError
from django.core.management.base import BaseCommand, CommandError

from core.dependencies.service_registry import service_registry
from core.exceptions import CimError, ConfigError
from core.utils.env_config import RunConfig
from core.utils.seeding import MAX_SEED
from dynamics.repositories import sim_config_from
from experiments.repositories import (
    DEFAULT_N_SPINS,
    DEFAULT_ORDERS,
    DEFAULT_P_GRID,
    DEFAULT_P_VALUES,
    CampaignConfigRepository,
    ReportRepository,
    campaign_spec_from,
    float_list,
    int_list,
    n_trials_from,
    phase_scan_from,
    problem_source_from,
    scenarios_from,
    squeezing_config_from,
)
from experiments.services import check_acceptance, resolve_problem

logger = logging.getLogger(__name__)

EXIT_CONFIG = 1
EXIT_RUNTIME = 2
EXIT_ACCEPTANCE = 3

SUBCOMMANDS = {
    "solve": "Success probability of one problem",
    "survey-cubic": "Every non-isomorphic cubic graph of the configured orders",
    "bench-gset": "Normalized cut scores on G-set instances",
    "squeeze": "Positive-P against c-number Langevin quadrature variances",
    "readout-table": "Phase state, pulse train and slow-detector level of every 4-OPO state",
    "independent": "Uncoupled oscillators: state histogram and slow-detector levels",
    "sweep-pump": "Success probability over a pump-rate grid",
    "scenarios": "Slow-detector distributions for delay-phase settings",
    "phase-scan": "Slow-detector levels while one delay's phase is scanned",
}
# subcommands that run without a config file
CONFIG_OPTIONAL = {"readout-table"}


class Command(BaseCommand):
    help = "Run coherent Ising machine experiments and write their data tables"

    def add_arguments(self, parser):
        subparsers = parser.add_subparsers(dest="subcommand", required=True)
        for name, help_text in SUBCOMMANDS.items():
            sub = subparsers.add_parser(name, help=help_text)
            sub.add_argument("--config", type=Path, help="Run config file (KEY=value lines)")
            sub.add_argument("--out", type=Path, help="Output directory (default: CIM_OUTPUT_DIR/<subcommand>)")
            sub.add_argument("--seed", type=int, help="Campaign seed, overrides SEED")
            sub.add_argument("--trials", type=int, help="Trials per campaign, overrides N_TRIALS")
            sub.add_argument("--workers", type=int, help="Worker processes (default: CIM_WORKERS)")
            sub.add_argument("--check", action="store_true", help="Exit 3 when a metric leaves its ACCEPT_ band")

    def handle(self, *args, **options):
        """Main command handler."""
        subcommand = options["subcommand"]
        self._configure_logging(options["verbosity"])

        try:
            config = self._load_config(subcommand, options)
            workers = options["workers"] or settings.CIM_WORKERS
            if workers < 1:
                raise ConfigError(f"--workers must be at least 1, got {workers}")
            out_dir = options["out"] or settings.CIM_OUTPUT_DIR / subcommand
            reports = ReportRepository(out_dir)

            started = time.perf_counter()
            handler = getattr(self, "run_" + subcommand.replace("-", "_"))
            metrics = handler(config, reports, workers)
            logger.info("%s finished in %.1fs wall-clock", subcommand, time.perf_counter() - started)
        except (ConfigError, ValidationError) as e:
            message = "; ".join(e.messages) if isinstance(e, ValidationError) else str(e)
            raise CommandError(f"configuration error: {message}", returncode=EXIT_CONFIG) from e
        except CimError as e:
            raise CommandError(f"{subcommand} failed: {e}", returncode=EXIT_RUNTIME) from e

        for path in reports.written:
            self.stdout.write(f"wrote {path}")
        self.stdout.write(self.style.SUCCESS(f"{subcommand} completed"))

        if options["check"]:
            self._check(config, metrics)

    def _configure_logging(self, verbosity: int) -> None:
        if verbosity >= 2:
            for name in ("experiments", "dynamics", "quantum", "readout", "graphs"):
                logging.getLogger(name).setLevel(logging.DEBUG)

    def _load_config(self, subcommand: str, options: Dict[str, Any]) -> RunConfig:
        overrides = {}
        if options["seed"] is not None:
            if not 0 <= options["seed"] <= MAX_SEED:
                raise ConfigError(f"--seed must be an unsigned 64-bit integer, got {options['seed']}")
            overrides["SEED"] = options["seed"]
        if options["trials"] is not None:
            overrides["N_TRIALS"] = options["trials"]

        if options["config"] is None:
            if subcommand in CONFIG_OPTIONAL:
                return RunConfig.from_mapping(overrides)
            raise ConfigError(f"{subcommand} needs --config")
        return CampaignConfigRepository(settings.CIM_CONFIG_DIR).load(options["config"], overrides)

    def _check(self, config: RunConfig, metrics: Dict[str, Optional[float]]) -> None:
        bands = config.acceptance_bands()
        if not bands:
            self.stdout.write(self.style.WARNING("--check given but the config declares no ACCEPT_ bands"))
            return
        violations = check_acceptance(metrics, bands)
        for violation in violations:
            self.stderr.write(violation.describe())
        if violations:
            raise CommandError(f"{len(violations)} acceptance band(s) violated", returncode=EXIT_ACCEPTANCE)
        self.stdout.write(self.style.SUCCESS(f"all {len(bands)} acceptance bands satisfied"))

    def run_solve(self, config: RunConfig, reports: ReportRepository, workers: int) -> Dict[str, float]:
        spec = campaign_spec_from(config)
        stats = service_registry.get_campaign_service(workers).run(spec)
        reports.campaign(stats, spec.outputs)
        self.stdout.write(f"q_raw={stats.q_raw} q_improved={stats.q_improved} T={stats.t_mean}")
        return stats.metrics()

    def run_sweep_pump(self, config: RunConfig, reports: ReportRepository, workers: int) -> Dict[str, float]:
        cfg = sim_config_from(config)
        _, problem = resolve_problem(problem_source_from(config), service_registry.get_graph_service())
        grid = float_list(config, "P_GRID", DEFAULT_P_GRID)
        result = service_registry.get_campaign_service(workers).sweep(problem, grid, cfg, n_trials_from(config, 500))
        reports.sweep(result)
        self.stdout.write(f"p_opt={result.p_opt:g} q_opt={result.q_opt:.3f}")
        return {"p_opt": result.p_opt, "q_opt": result.q_opt}

    def run_survey_cubic(self, config: RunConfig, reports: ReportRepository, workers: int) -> Dict[str, float]:
        cfg = sim_config_from(config)
        orders = int_list(config, "ORDERS", DEFAULT_ORDERS)
        result = service_registry.get_campaign_service(workers).survey(orders, cfg, n_trials_from(config, 200))
        reports.survey(result)

        metrics: Dict[str, float] = {}
        medians = []
        for order in result.orders:
            metrics[f"n_graphs_{order.order}"] = order.n_graphs
            if order.q_min is not None:
                metrics[f"q_min_{order.order}"] = order.q_min
            if order.median_build_up is not None:
                metrics[f"median_build_up_{order.order}"] = order.median_build_up
                medians.append(order.median_build_up)
        if medians:
            metrics["median_build_up"] = sorted(medians)[len(medians) // 2]
            metrics["build_up_spread"] = max(medians) / min(medians) if min(medians) > 0 else math.inf
        return metrics

    def run_bench_gset(self, config: RunConfig, reports: ReportRepository, workers: int) -> Dict[str, float]:
        cfg = sim_config_from(config)
        paths = [Path(p) for p in config.require("list", "GSET_PATHS")]
        entries = service_registry.get_campaign_service(workers).benchmark(paths, cfg, n_trials_from(config, 100))
        reports.gset(entries)
        metrics: Dict[str, float] = {}
        for entry in entries:
            key = entry.instance.lower()
            metrics[f"o_avg_{key}"] = entry.o_avg
            metrics[f"o_max_{key}"] = entry.o_max
            metrics[f"o_avg_improved_{key}"] = entry.o_avg_improved
        return metrics

    def run_squeeze(self, config: RunConfig, reports: ReportRepository, workers: int) -> Dict[str, float]:
        cfg = squeezing_config_from(config)
        p_values = float_list(config, "P_VALUES", DEFAULT_P_VALUES)
        table = service_registry.get_squeezing_service().compare(p_values, cfg)
        reports.squeezing(table)

        errors = []
        for row in table:
            if row.predicted_a1 is not None:
                errors.append(abs(row.qfpe.var_a1 / row.predicted_a1 - 1.0))
            errors.append(abs(row.qfpe.var_a2 / row.predicted_a2 - 1.0))
            if row.flagged:
                self.stdout.write(self.style.WARNING(f"p={row.p:g}: z1={row.z1:.2f} z2={row.z2:.2f}"))
        return {
            "max_abs_z": max(max(abs(row.z1), abs(row.z2)) for row in table),
            "max_prediction_error": max(errors) if errors else 0.0,
            "max_rejected_fraction": max(row.rejected_fraction for row in table),
        }

    def run_readout_table(self, config: RunConfig, reports: ReportRepository, workers: int) -> Dict[str, float]:
        table = service_registry.get_readout_service().table()
        reports.readout_table(table)
        for row in table:
            self.stdout.write(f"{row['state']}  {row['pulse_train']}  {row['slow_detector']}")
        return {"rows": len(table)}

    def run_independent(self, config: RunConfig, reports: ReportRepository, workers: int) -> Dict[str, float]:
        cfg = sim_config_from(config)
        n = config.require("int", "N_SPINS", default=DEFAULT_N_SPINS)
        result = service_registry.get_campaign_service(workers).independent(n, cfg, n_trials_from(config))
        reports.independent(result)
        metrics = result.metrics()
        for level, frequency in result.levels.frequencies().items():
            metrics[f"level_{level.numerator}_{level.denominator}"] = frequency
        return metrics

    def run_scenarios(self, config: RunConfig, reports: ReportRepository, workers: int) -> Dict[str, float]:
        cfg = sim_config_from(config)
        results = service_registry.get_campaign_service(workers).scenarios(
            scenarios_from(config), cfg, n_trials_from(config, 500)
        )
        reports.scenarios(results)
        for result in results:
            style = self.style.SUCCESS if result.within_band else self.style.WARNING
            self.stdout.write(style(f"{result.label}: within 3 sigma = {result.within_band}"))
        return {"scenarios_within_band": sum(r.within_band for r in results) / len(results)}

    def run_phase_scan(self, config: RunConfig, reports: ReportRepository, workers: int) -> Dict[str, float]:
        cfg = sim_config_from(config)
        scan = phase_scan_from(config)
        points = service_registry.get_campaign_service(workers).phase_scan(
            scan["base"], scan["delay"], scan["phases"], cfg, n_trials_from(config, 200)
        )
        reports.phase_scan(points)
        return {}
