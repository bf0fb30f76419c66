# Copyright 2024 Magnopus LLC

# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at

#     https://www.apache.org/licenses/LICENSE-2.0

# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
import json
import logging
import pathlib

import pandas as pd

from pilotwalk import __version__
from pilotwalk.models import *
from pilotwalk.stability import lowmem_report, omega_onset, r_critical, stability_report

logger = logging.getLogger(__name__)


def _prepare(path) -> pathlib.Path:
    output_path = pathlib.Path(path)
    output_path.resolve(strict=False).parent.mkdir(parents=True, exist_ok=True)
    return output_path


def write_csv(frame: pd.DataFrame, path) -> pathlib.Path:
    """
    Write a table with a header row, 17 significant digits, '\\n' line endings and empty cells for missing
    values, so that identical results give byte-identical files.
    """
    output_path = _prepare(path)
    frame.to_csv(output_path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator=CSV_LINE_TERMINATOR,
                 na_rep="")
    logger.info(f"Wrote {len(frame)} rows to {output_path}")
    return output_path


def write_json(document: dict, path) -> pathlib.Path:
    output_path = _prepare(path)
    with open(output_path, "w", newline="\n") as handle:
        handle.write(json.dumps(document, sort_keys=True, indent=2))
        handle.write("\n")
    logger.info(f"Wrote {output_path}")
    return output_path


def sidecar_path(output_path, suffix: str) -> pathlib.Path:
    output_path = pathlib.Path(output_path)
    return output_path.with_name(output_path.name + suffix)


def write_provenance(output_path, command: str, config: BaseModel, result: dict | None = None) -> pathlib.Path:
    document = {
        "command": str(command),
        "config": config.model_dump(mode="json"),
        "version": __version__,
    }
    if result is not None:
        document["result"] = result

    return write_json(document, sidecar_path(output_path, PROVENANCE_SUFFIX))


def trajectory_frame(traj: Trajectory) -> pd.DataFrame:
    frame = pd.DataFrame(traj.states, columns=traj.labels)
    frame.insert(0, TIME_COL, traj.times)
    return frame


def sweep_frame(result: SweepResult) -> pd.DataFrame:
    axis1_name, axis2_name = result.spec.plane.axis_names
    rows = []

    for cell in result.flat_cells():
        rows.append({
            axis1_name: cell.axis1,
            axis2_name: cell.axis2,
            CLASS_COL: str(cell.behavior) if cell.behavior is not None else None,
            AVG_SPEED_COL: cell.avg_speed,
            LLE_COL: cell.lle,
            WELL_HOPS_COL: cell.well_hops,
            ERROR_COL: cell.error,
        })

    columns = [axis1_name, axis2_name, CLASS_COL, AVG_SPEED_COL, LLE_COL, WELL_HOPS_COL, ERROR_COL]
    frame = pd.DataFrame(rows, columns=columns)
    frame[WELL_HOPS_COL] = frame[WELL_HOPS_COL].astype("Int64")
    return frame


def velocity_frame(points: list[VelocityCurvePoint]) -> pd.DataFrame:
    rows = [{
        B_COL: point.B,
        X0_COL: point.X0,
        AVG_SPEED_COL: point.avg_speed,
        AVG_SPEED_NORM_COL: point.avg_speed_normalized,
        CLASS_COL: str(point.behavior) if point.behavior is not None else None,
        ERROR_COL: point.error,
    } for point in points]

    return pd.DataFrame(rows, columns=[B_COL, X0_COL, AVG_SPEED_COL, AVG_SPEED_NORM_COL, CLASS_COL, ERROR_COL])


def boundary_frame(curve: list[tuple[float, float]]) -> pd.DataFrame:
    return pd.DataFrame(curve, columns=[SIGMA_COL, R_CRITICAL_COL])


def _report_entry(report: EquilibriumReport) -> dict:
    entry = {
        "k": report.k,
        "x_eq": report.x_eq,
        "kind": str(report.parity),
        "eigenvalues": [[eigenvalue.re, eigenvalue.im] for eigenvalue in report.eigenvalues],
        "verdict": str(report.verdict),
        "mechanism": str(report.mechanism),
    }
    if report.discriminant is not None:
        entry["discriminant"] = report.discriminant
    return entry


def stability_document(p: Params, k_min: int, k_max: int) -> dict:
    """Equilibria k_min..k_max of both systems with their spectra, plus the trough boundary and onset frequency."""
    ks = range(k_min, k_max + 1)

    return {
        "params": p.model_dump(),
        "r_c": r_critical(p),
        "omega": omega_onset(p),
        "equilibria": [_report_entry(stability_report(p, k)) for k in ks],
        "lowmem": [_report_entry(lowmem_report(p, k)) for k in ks],
    }
