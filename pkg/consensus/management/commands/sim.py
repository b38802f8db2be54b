from pathlib import Path

import numpy as np
from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from consensus.exceptions import ConsensusError, NumericalError
from consensus.scenarios import SWEEP_PARAMETERS, cmd_check, cmd_montecarlo, cmd_run, cmd_sweep, parse_scenario
from consensus.tasks import dispatch_paths


class Command(BaseCommand):
    help = "Check, simulate, sweep or Monte-Carlo a consensus scenario file (*.scn)."

    def add_arguments(self, parser):
        actions = parser.add_subparsers(dest="action", required=True)

        check = actions.add_parser("check", help="evaluate the feasibility criteria only")
        check.add_argument("file")
        check.add_argument("--out", help="write report.txt and summary.json here")

        run = actions.add_parser("run", help="check, then simulate the closed loop")
        run.add_argument("file")
        run.add_argument("--out", help="output directory (default: SIM_OUT_DIR/<scenario name>)")
        run.add_argument("--strict", action="store_true", help="fail with exit code 3 when the criteria fail")

        sweep = actions.add_parser("sweep", help="tabulate q and settling against one parameter")
        sweep.add_argument("file")
        sweep.add_argument("--param", required=True, choices=SWEEP_PARAMETERS)
        sweep.add_argument("--grid", required=True, help="a:b:n")
        sweep.add_argument("--out")
        sweep.add_argument("--no-sim", action="store_true", help="criteria only, no simulated settling times")

        mc = actions.add_parser("mc", help="Monte-Carlo batch of a stochastic scenario")
        mc.add_argument("file")
        mc.add_argument("--runs", type=int, required=True)
        mc.add_argument("--seed", type=int, required=True)
        mc.add_argument("--out")

    def _out_dir(self, options, scenario) -> Path:
        if options.get("out"):
            return Path(options["out"])
        return Path(settings.SIM_OUT_DIR) / scenario.name

    def handle(self, *args, **options):
        action = options["action"]
        try:
            scenario = parse_scenario(options["file"])
            if action == "check":
                summary = cmd_check(scenario, Path(options["out"]) if options.get("out") else None)
                self.stdout.write(summary.format_text())
            elif action == "run":
                summary = cmd_run(scenario, self._out_dir(options, scenario), strict=options["strict"])
                self.stdout.write(summary.format_text())
                self._report_outputs(summary.outputs)
                if not summary.feasible:
                    self.stdout.write(self.style.WARNING("criteria infeasible: no finite-time consensus claimed"))
            elif action == "sweep":
                result = cmd_sweep(scenario, options["param"], options["grid"], self._out_dir(options, scenario),
                                   simulate=not options["no_sim"])
                self._write_sweep(result)
            else:
                runner = dispatch_paths if settings.USE_CELERY else None
                summary = cmd_montecarlo(scenario, options["runs"], options["seed"],
                                         self._out_dir(options, scenario), path_runner=runner)
                self.stdout.write(summary.format_text())
                self._report_outputs(summary.outputs)
        except ConsensusError as exc:
            raise CommandError(exc.message, returncode=exc.exit_code) from exc
        except (np.linalg.LinAlgError, FloatingPointError, ValueError) as exc:
            error = NumericalError(f"numerical failure: {exc}")
            raise CommandError(error.message, returncode=error.exit_code) from exc

    def _report_outputs(self, outputs):
        for label, path in outputs.items():
            self.stdout.write(self.style.SUCCESS(f"{label}: {path}"))

    def _write_sweep(self, result):
        self.stdout.write(f"parameter = {result.parameter}")
        for row in result.rows:
            bound = "none" if row["settling_bound"] is None else f"{row['settling_bound']:.6g}"
            settled = "none" if row["settling_time"] is None else f"{row['settling_time']:.6g}"
            if row["q"] is None:
                self.stdout.write(self.style.WARNING(f"{row['value']:.6g}  infeasible: {row['reason']}"))
                continue
            self.stdout.write(f"{row['value']:.6g}  q={row['q']:.6g}  bound={bound}  settled={settled}")
        if result.critical_gamma is not None:
            self.stdout.write(f"critical_gamma = {result.critical_gamma:.10g}")
        self._report_outputs(result.outputs)
