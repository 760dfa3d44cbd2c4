"""
Run-config readers for campaigns and writers for their reports.
"""
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from django.core.exceptions import ValidationError

from core.base import Repository
from core.exceptions import ConfigError
from core.utils.env_config import RunConfig
from core.utils.reports import ReportWriter
from dynamics.models import SimConfig
from dynamics.repositories import sim_config_from, trajectory_frame
from graphs.ising import graph_to_ising
from graphs.models import PHASE_PI, PHASE_ZERO, DelaySpec, WeightedGraph
from quantum.models import SqueezingConfig, SqueezingRow

from .models import (
    OUTPUT_CAMPAIGN,
    OUTPUT_HISTOGRAM,
    OUTPUT_LEVELS,
    OUTPUT_TRAJECTORIES,
    PROBLEM_CUBIC,
    PROBLEM_DELAY,
    PROBLEM_GSET,
    PROBLEM_INLINE,
    PROBLEM_UNCOUPLED,
    CampaignSpec,
    CampaignStats,
    GsetEntry,
    IndependentResult,
    PhaseScanPoint,
    ProblemSource,
    ScenarioResult,
    SurveyResult,
    SweepResult,
    rows,
)

logger = logging.getLogger(__name__)

DEFAULT_TRIALS = 1000
DEFAULT_N_SPINS = 4
DEFAULT_SCAN_POINTS = 25
DEFAULT_P_GRID = (1.0, 1.05, 1.1, 1.2, 1.3)
DEFAULT_P_VALUES = (0.0, 0.5, 0.9)
DEFAULT_ORDERS = (4, 6, 8)
# delay-phase settings of delays 1, 2, 3 on the 4-slot ring
DEFAULT_SCENARIOS = ("pi/0/pi", "0/pi/pi", "pi/pi/0", "pi/pi/pi")

SQUEEZE_KEYS = {
    "A_S": ("a_s", "float"),
    "SQUEEZE_DT": ("dt", "float"),
    "N_SAMPLES": ("n_samples", "int"),
    "TRAJECTORIES": ("trajectories", "int"),
    "GUARD": ("guard", "float"),
    "BURN_IN_FACTOR": ("burn_in_factor", "float"),
    "SAMPLE_INTERVAL": ("sample_interval", "float"),
    "SEED": ("seed", "int"),
}

PHASE_TOKENS = {"0": PHASE_ZERO, "zero": PHASE_ZERO, "pi": PHASE_PI, "π": PHASE_PI, "off": None}


def _build(factory, **kwargs):
    """Construct a model, reporting invariant violations as configuration errors."""
    try:
        return factory(**kwargs)
    except ValidationError as e:
        raise ConfigError("; ".join(e.messages)) from e


def parse_edges(n: int, text: str) -> WeightedGraph:
    """Inline graph from "u:v[:w]" tokens, 1-indexed."""
    edges = []
    for token in filter(None, (part.strip() for part in text.split(","))):
        parts = token.split(":")
        try:
            u, v = int(parts[0]), int(parts[1])
            w = float(parts[2]) if len(parts) == 3 else 1.0
        except (ValueError, IndexError) as e:
            raise ConfigError(f"Invalid edge token {token!r}; expected u:v or u:v:w") from e
        if len(parts) > 3:
            raise ConfigError(f"Invalid edge token {token!r}; expected u:v or u:v:w")
        edges.append((u - 1, v - 1, w))
    return _build(WeightedGraph, n=n, edges=tuple(edges), name=f"inline{n}")


def parse_phase_setting(text: str) -> DelaySpec:
    """Phases of delays 1..n-1 separated by '/', e.g. "pi/0/pi" for a 4-slot ring."""
    phases = []
    for token in text.split("/"):
        key = token.strip().lower()
        if key not in PHASE_TOKENS:
            raise ConfigError(f"Invalid delay phase {token!r} in {text!r}; expected 0, pi or off")
        phases.append(PHASE_TOKENS[key])
    return _build(DelaySpec.from_phases, phases=phases)


def _delay_spec(config: RunConfig) -> DelaySpec:
    n = config.require("int", "DELAY_N", default=DEFAULT_N_SPINS)
    return _build(DelaySpec.from_string, n=n, text=config.require("str", "DELAY_LINES"))


def problem_source_from(config: RunConfig) -> ProblemSource:
    kind = config.require("str", "PROBLEM_KIND", default=PROBLEM_CUBIC).lower()
    if kind == PROBLEM_INLINE:
        graph = parse_edges(config.require("int", "N_SPINS"), config.require("str", "EDGES"))
        return _build(ProblemSource, kind=kind, problem=graph_to_ising(graph))
    if kind == PROBLEM_GSET:
        return _build(ProblemSource, kind=kind, path=config.require("str", "PROBLEM_PATH"))
    if kind == PROBLEM_CUBIC:
        seed = config.require("int", "CUBIC_SEED") if "CUBIC_SEED" in config else None
        return _build(
            ProblemSource,
            kind=kind,
            n=config.require("int", "CUBIC_N", default=4),
            cubic_index=config.require("int", "CUBIC_INDEX", default=0),
            cubic_seed=seed,
        )
    if kind == PROBLEM_DELAY:
        return _build(ProblemSource, kind=kind, delay=_delay_spec(config))
    if kind == PROBLEM_UNCOUPLED:
        return _build(ProblemSource, kind=kind, n=config.require("int", "N_SPINS", default=DEFAULT_N_SPINS))
    raise ConfigError(f"Unknown PROBLEM_KIND {kind!r}")


def campaign_spec_from(config: RunConfig, sim: Optional[SimConfig] = None) -> CampaignSpec:
    sim = sim or _build(sim_config_from, config=config)
    outputs = config.require("list", "OUTPUTS", default=[OUTPUT_CAMPAIGN])
    return _build(
        CampaignSpec,
        problem=problem_source_from(config),
        sim=sim,
        n_trials=n_trials_from(config),
        apply_local_improvement=config.require("bool", "APPLY_LOCAL_IMPROVEMENT", default=True),
        outputs=tuple(item.strip().lower() for item in outputs if item.strip()),
        success_probability=config.require("bool", "SUCCESS_PROBABILITY", default=True),
    )


def n_trials_from(config: RunConfig, default: int = DEFAULT_TRIALS) -> int:
    n = config.require("int", "N_TRIALS", default=default)
    if n < 1:
        raise ConfigError(f"N_TRIALS must be at least 1, got {n}")
    return n


def float_list(config: RunConfig, key: str, default: Sequence[float]) -> List[float]:
    values = config.require("list", key, cast=float, default=list(default))
    if not values:
        raise ConfigError(f"{key} is empty")
    return [float(v) for v in values]


def int_list(config: RunConfig, key: str, default: Sequence[int]) -> List[int]:
    values = config.require("list", key, cast=int, default=list(default))
    if not values:
        raise ConfigError(f"{key} is empty")
    return [int(v) for v in values]


def scenarios_from(config: RunConfig) -> List[DelaySpec]:
    settings = config.require("list", "SCENARIOS", default=list(DEFAULT_SCENARIOS))
    specs = [parse_phase_setting(item) for item in settings if item.strip()]
    if not specs:
        raise ConfigError("SCENARIOS is empty")
    return specs


def phase_grid_from(config: RunConfig) -> List[float]:
    """Explicit SCAN_PHASES in radians, else SCAN_POINTS evenly spaced over [0, 2 pi]."""
    if "SCAN_PHASES" in config:
        return float_list(config, "SCAN_PHASES", ())
    points = config.require("int", "SCAN_POINTS", default=DEFAULT_SCAN_POINTS)
    if points < 2:
        raise ConfigError("SCAN_POINTS must be at least 2")
    return np.linspace(0.0, 2.0 * math.pi, points).tolist()


def phase_scan_from(config: RunConfig) -> Dict[str, Any]:
    return {
        "base": _delay_spec(config),
        "delay": config.require("int", "SCAN_DELAY", default=1),
        "phases": phase_grid_from(config),
    }


def squeezing_config_from(config: RunConfig) -> SqueezingConfig:
    changes = {attr: config.require(getter, key) for key, (attr, getter) in SQUEEZE_KEYS.items() if key in config}
    return _build(SqueezingConfig, **changes)


class CampaignConfigRepository(Repository):
    """Run-config files of campaigns."""

    def get(self, key: str) -> RunConfig:
        return self.load(self.resolve(key))

    def list(self) -> List[Path]:
        if self.root is None or not self.root.is_dir():
            return []
        return sorted(self.root.glob("*.env"))

    def load(self, path: Path, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
        config = RunConfig.from_file(path, overrides)
        logger.info("Loaded run config %s (%d keys)", path, len(list(config.keys())))
        return config


class ReportRepository:
    """Turns experiment results into report tables under one output directory."""

    def __init__(self, out_dir: Path):
        self.writer = ReportWriter(out_dir)

    @property
    def written(self) -> List[Path]:
        return self.writer.written

    def campaign(self, stats: CampaignStats, outputs: Sequence[str] = (OUTPUT_CAMPAIGN,)) -> None:
        if OUTPUT_CAMPAIGN in outputs:
            self.writer.write_csv("campaign", pd.DataFrame([record.to_row() for record in stats.records]))
            self.writer.write_json("campaign", stats.summary())
        if OUTPUT_HISTOGRAM in outputs and stats.histogram is not None:
            self.writer.write_csv("histogram", pd.DataFrame(stats.histogram.rows()))
        if OUTPUT_LEVELS in outputs and stats.levels is not None:
            self.writer.write_csv("levels", pd.DataFrame(stats.levels.rows()))
        if OUTPUT_TRAJECTORIES in outputs:
            for index, trajectory in sorted(stats.trajectories.items()):
                self.writer.write_csv(f"trajectory_{index:04d}", trajectory_frame(trajectory))

    def sweep(self, result: SweepResult) -> None:
        self.writer.write_csv("sweep", pd.DataFrame(rows(result.points)))
        self.writer.write_json(
            "sweep", {"p_opt": result.p_opt, "q_opt": result.q_opt, "points": len(result.points)}
        )

    def survey(self, result: SurveyResult) -> None:
        self.writer.write_csv("survey", pd.DataFrame(rows(result.entries)))
        self.writer.write_csv("survey_orders", pd.DataFrame(rows(result.orders)))

    def gset(self, entries: Sequence[GsetEntry]) -> None:
        columns = ["instance", "V", "E", "U_SDP", "E_neg", "O_max", "O_avg", "O_max_improved", "O_avg_improved"]
        self.writer.write_csv("gset", pd.DataFrame(rows(entries), columns=columns + ["T", "gw_margin"]))

    def squeezing(self, table: Sequence[SqueezingRow]) -> None:
        self.writer.write_csv("squeezing", pd.DataFrame([row.to_row() for row in table]))
        self.writer.write_json(
            "squeezing",
            {
                "rows": [
                    {
                        "p": row.p,
                        "qfpe": row.qfpe.to_dict(),
                        "clge": row.clge.to_dict(),
                        "ratio_a1": row.ratio_a1,
                        "ratio_a2": row.ratio_a2,
                        "predicted_a1": row.predicted_a1,
                        "predicted_a2": row.predicted_a2,
                        "flagged": row.flagged,
                        "clamp_events": row.clamp_events,
                    }
                    for row in table
                ]
            },
        )

    def readout_table(self, table: Sequence[Dict[str, str]]) -> None:
        self.writer.write_csv("readout_table", pd.DataFrame(table, columns=["state", "pulse_train", "slow_detector"]))

    def independent(self, result: IndependentResult) -> None:
        self.writer.write_csv("histogram", pd.DataFrame(result.histogram.rows()))
        self.writer.write_csv("levels", pd.DataFrame(result.levels.rows()))
        self.writer.write_json(
            "independent",
            {
                **result.metrics(),
                "n_trials": result.histogram.total,
                "expected_levels": {str(level): p for level, p in sorted(result.expected_levels.items())},
            },
        )

    def scenarios(self, results: Sequence[ScenarioResult]) -> None:
        table = [row for result in results for row in result.to_rows()]
        self.writer.write_csv("scenarios", pd.DataFrame(table))

    def phase_scan(self, points: Sequence[PhaseScanPoint]) -> None:
        self.writer.write_csv("phase_scan", pd.DataFrame(rows(points)).fillna(0.0))
