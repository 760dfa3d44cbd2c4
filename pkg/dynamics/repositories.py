"""
SimConfig persistence and trajectory export.
"""
import dataclasses
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

import pandas as pd

from core.base import Repository
from core.utils.env_config import RunConfig
from core.utils.reports import ReportWriter

from .models import SimConfig, Trajectory

logger = logging.getLogger(__name__)

# run-config key -> (SimConfig field, environ getter)
SIM_KEYS = {
    "XI_SCALE": ("xi_scale", "float"),
    "A_S": ("a_s", "float"),
    "INTEGRATOR": ("integrator", "str"),
    "DT": ("dt", "float"),
    "REL_TOL": ("rel_tol", "float"),
    "ABS_TOL": ("abs_tol", "float"),
    "MAX_STEP": ("max_step", "float"),
    "T_MAX": ("t_max", "float"),
    "SEED": ("seed", "int"),
    "SAMPLE_STRIDE": ("sample_stride", "int"),
    "COUPLING_MODE": ("coupling_mode", "str"),
    "BUILD_UP_FRACTION": ("build_up_fraction", "float"),
    "BUILD_UP_WINDOW": ("build_up_window", "float"),
    "KEEP_TRAJECTORY": ("keep_trajectory", "bool"),
    "GAMMA_S": ("gamma_s", "float"),
}
PUMP_KEYS = {
    "PUMP_KIND": ("kind", "str"),
    "PUMP_P": ("p", "float"),
    "PUMP_START": ("p_start", "float"),
    "PUMP_END": ("p_end", "float"),
    "PUMP_RAMP": ("t_ramp", "float"),
}


def sim_config_from(config: RunConfig, base: Optional[SimConfig] = None) -> SimConfig:
    """Overlay the SimConfig keys present in a run config onto base (defaults when None)."""
    base = base or SimConfig()

    pump_changes: Dict[str, Any] = {
        attr: config.require(getter, key) for key, (attr, getter) in PUMP_KEYS.items() if key in config
    }
    changes: Dict[str, Any] = {
        attr: config.require(getter, key) for key, (attr, getter) in SIM_KEYS.items() if key in config
    }
    if pump_changes:
        changes["pump"] = dataclasses.replace(base.pump, **pump_changes)
    return base.replace(**changes)


def sim_config_lines(cfg: SimConfig) -> List[str]:
    """KEY=value lines that sim_config_from reads back to an equal SimConfig."""
    lines = []
    for key, (attr, _) in PUMP_KEYS.items():
        lines.append(f"{key}={_format(getattr(cfg.pump, attr))}")
    for key, (attr, _) in SIM_KEYS.items():
        value = getattr(cfg, attr)
        if value is not None:
            lines.append(f"{key}={_format(value)}")
    return lines


def _format(value: Any) -> str:
    if isinstance(value, bool):
        return "True" if value else "False"
    if isinstance(value, float):
        return repr(value)
    return str(value)


class SimConfigRepository(Repository):
    """Repository for SimConfig files in the run-config format."""

    def get(self, key: str) -> SimConfig:
        return self.load(self.resolve(key))

    def list(self) -> List[Path]:
        if self.root is None or not self.root.is_dir():
            return []
        return sorted(self.root.glob("*.env"))

    def load(self, path: Path, overrides: Optional[Dict[str, Any]] = None) -> SimConfig:
        return sim_config_from(RunConfig.from_file(path, overrides))

    def save(self, cfg: SimConfig, path: Path) -> Path:
        path = Path(path)
        writer = ReportWriter(path.parent)
        text = "\n".join(sim_config_lines(cfg)) + "\n"
        return writer.write_text(path.name, text)


def trajectory_frame(trajectory: Trajectory) -> pd.DataFrame:
    """Columns t, c_1..c_n, s_1..s_n."""
    n = trajectory.n
    frame = pd.DataFrame(trajectory.c, columns=[f"c_{j + 1}" for j in range(n)])
    for j in range(n):
        frame[f"s_{j + 1}"] = trajectory.s[:, j]
    frame.insert(0, "t", trajectory.times)
    return frame


def export_trajectory_csv(trajectory: Trajectory, path: Path) -> Path:
    path = Path(path)
    return ReportWriter(path.parent).write_csv(path.stem, trajectory_frame(trajectory))
