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
import argparse
import logging
import sys

from pydantic import ValidationError

from pilotwalk import __version__
from pilotwalk.analysis import TrajectoryTooShortError, average_speed, classify, well_hops
from pilotwalk.configuration import (ConfigSyntaxError, ConfigValueError, default_workers, load_config,
                                     read_default_config)
from pilotwalk.dynamics import system_for
from pilotwalk.integrator import IntegrationError, integrate
from pilotwalk.memory_kernel import integrate_memory
from pilotwalk.models import *
from pilotwalk.output_utils import (boundary_frame, sidecar_path, stability_document, sweep_frame,
                                    trajectory_frame, velocity_frame, write_csv, write_json, write_provenance)
from pilotwalk.sheets import SweepWorkbookWriter
from pilotwalk.stability import boundary_curve
from pilotwalk.sweep import init_state, run_lowmem_sweep, run_sweep, velocity_vs_B

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def run_simulate(cfg: RunConfig, workers: int) -> dict:
    section = cfg.simulate or SimulateSection()
    p = cfg.params

    if section.system is SystemKind.MEMORY:
        s0 = init_state(section.init_rule, p, x0=section.x0, X0=section.X0, explicit_state=section.explicit_state)
        traj = integrate_memory(s0, p, cfg.integrator, dt=section.memory_dt)
    else:
        s0 = init_state(section.init_rule, p, x0=section.x0, X0=section.X0, explicit_state=section.explicit_state,
                        system=section.system)
        traj = integrate(system_for(section.system, p), s0, cfg.integrator)

    write_csv(trajectory_frame(traj), cfg.output_path)

    window = cfg.classifier.window_fraction
    summary = {
        "avg_speed": average_speed(traj, window),
        "well_hops": well_hops(traj, p, window),
    }

    try:
        summary["class"] = str(classify(traj, p, cfg.classifier))
    except TrajectoryTooShortError as e:
        logger.warning(f"Skipping classification: {e}")

    logger.info(f"Simulation finished: {summary}")
    return summary


def run_stability(cfg: RunConfig, workers: int) -> dict:
    section = cfg.stability or StabilitySection()
    document = stability_document(cfg.params, section.k_min, section.k_max)
    write_json(document, cfg.output_path)

    curve = boundary_curve(cfg.params, (section.sigma_min, section.sigma_max), section.n_points)
    write_csv(boundary_frame(curve), sidecar_path(cfg.output_path, BOUNDARY_SUFFIX))

    return {"r_c": document["r_c"], "omega": document["omega"]}


def run_grid(cfg: RunConfig, workers: int) -> dict:
    spec = cfg.sweep_spec()

    if cfg.command is Command.LOWMEM_SWEEP:
        result = run_lowmem_sweep(spec, workers)
    else:
        result = run_sweep(spec, workers)

    write_csv(sweep_frame(result), cfg.output_path)

    if spec.plane is SweepPlane.SIGMA_R:
        curve = boundary_curve(spec.params, (spec.axis1.min, spec.axis1.max), spec.axis1.n)
        write_csv(boundary_frame(curve), sidecar_path(cfg.output_path, BOUNDARY_SUFFIX))

    if cfg.workbook_path:
        SweepWorkbookWriter(cfg.workbook_path).add_sweep(result, f"{cfg.command} {spec.plane}")

    counts = {str(behavior): result.count(behavior) for behavior in BehaviorClass}
    counts["failed"] = len(result.failed_cells)
    return counts


def run_velocity_curve(cfg: RunConfig, workers: int) -> dict:
    section = cfg.velocity or VelocitySection()
    B_range = AxisRange(min=section.B_min, max=section.B_max, n=section.B_n)
    points = velocity_vs_B(cfg.params, B_range, section.X0_values, cfg.integrator, cfg.classifier, workers)

    write_csv(velocity_frame(points), cfg.output_path)
    return {"points": len(points), "failed": sum(1 for point in points if point.error)}


COMMANDS = {
    Command.SIMULATE: run_simulate,
    Command.STABILITY: run_stability,
    Command.SWEEP: run_grid,
    Command.BASIN: run_grid,
    Command.LOWMEM_SWEEP: run_grid,
    Command.VELOCITY_CURVE: run_velocity_curve,
}


def execute(cfg: RunConfig, workers: int | None = None) -> int:
    """
    Run one command and write its output file plus the provenance sidecar. Returns the process exit status;
    per-cell sweep failures do not make it nonzero.
    """
    try:
        worker_count = default_workers(cfg.workers, workers)
        logger.info(f"Running {cfg.command} (pilotwalk {__version__}) into {cfg.output_path}")

        summary = COMMANDS[cfg.command](cfg, worker_count)
        write_provenance(cfg.output_path, cfg.command, cfg, summary)
    except (ConfigValueError, ValidationError, IntegrationError) as e:
        logger.error(f"{cfg.command} failed: {e}")
        return EXIT_FAILURE
    except (ValueError, RuntimeError, OSError) as e:
        logger.error(f"{cfg.command} failed: {type(e).__name__}: {e}")
        return EXIT_FAILURE

    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    commands = [str(command) for command in Command]

    parser = argparse.ArgumentParser(prog="pilotwalk",
                                     description="Simulate and analyse a walking droplet in a sinusoidal potential.")
    parser.add_argument("command", nargs="?", choices=commands)
    parser.add_argument("--config", help="INI run configuration")
    parser.add_argument("--output", help="output path, overrides [run] output_path")
    parser.add_argument("--workers", type=int, help=f"worker processes, overrides [run] workers and "
                                                    f"${WORKERS_ENV_VAR}")
    parser.add_argument("--print-defaults", metavar="COMMAND", choices=commands,
                        help="print the default configuration of COMMAND and exit")
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    logging.basicConfig(stream=sys.stdout, level=logging.DEBUG if args.verbose else logging.INFO)

    if args.print_defaults:
        print(read_default_config(args.print_defaults), end="")
        return EXIT_OK

    if args.command is None or args.config is None:
        parser.print_usage(sys.stderr)
        print("pilotwalk: error: a command and --config are required", file=sys.stderr)
        return EXIT_USAGE

    try:
        cfg = load_config(args.config)
    except (ConfigSyntaxError, ConfigValueError) as e:
        logger.error(f"Invalid config {args.config}: {e}")
        return EXIT_USAGE

    if cfg.command != args.command:
        logger.error(f"Config {args.config} is for the {cfg.command} command, not {args.command}")
        return EXIT_USAGE

    if args.output:
        cfg = cfg.model_copy(update={"output_path": args.output})

    return execute(cfg, args.workers)


if __name__ == "__main__":
    sys.exit(main())
