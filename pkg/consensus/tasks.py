import json
import logging
from pathlib import Path

import numpy as np
from celery import group, shared_task
from django.conf import settings
from django.core.serializers.json import DjangoJSONEncoder
from django.utils import timezone

from .exceptions import ConsensusError
from .models import ScenarioRun
from .scenarios import build_scenario, cmd_check, cmd_montecarlo, cmd_run, cmd_sweep, validate_document
from .simulator import simulate_path as simulate_scenario_path

logger = logging.getLogger(__name__)


def run_directory(run: ScenarioRun) -> Path:
    return Path(settings.SIM_OUT_DIR) / f"run_{run.pk}"


def _jsonable(data: dict) -> dict:
    return json.loads(json.dumps(data, cls=DjangoJSONEncoder))


@shared_task
def execute_run(run_id):
    run = ScenarioRun.objects.get(pk=run_id)
    run.status = "running"
    run.save(update_fields=["status"])

    options = run.options or {}
    out_dir = run_directory(run)
    try:
        scenario = build_scenario(validate_document(run.scenario))
        if run.command == "check":
            summary = cmd_check(scenario, out_dir).as_dict()
        elif run.command == "run":
            summary = cmd_run(scenario, out_dir, strict=options.get("strict", False)).as_dict()
        elif run.command == "sweep":
            summary = cmd_sweep(scenario, options["parameter"], options["grid"], out_dir,
                                simulate=options.get("simulate", False)).as_dict()
        else:
            # paths run in-process; a worker must not block on a group of its own subtasks
            summary = cmd_montecarlo(scenario, options.get("runs", 100), options.get("seed", 0), out_dir).as_dict()
    except ConsensusError as exc:
        logger.warning("Run %s (%s) failed: %s", run.pk, run.command, exc.message)
        run.status = "failed"
        run.error = exc.message
    else:
        run.status = "done"
        run.summary = _jsonable(summary)
    run.finished_at = timezone.now()
    run.save(update_fields=["status", "summary", "error", "finished_at"])
    return run.status


@shared_task
def simulate_path(document, root_seed, index):
    """One Monte-Carlo path of a scenario document, reduced to its ``‖e(t)‖`` curve."""
    scenario = build_scenario(validate_document(document))
    trajectory = simulate_scenario_path(scenario, root_seed, index)
    return {"index": index, "times": trajectory.times.tolist(), "e_norm": trajectory.e_norm.tolist()}


def dispatch_paths(document, root_seed, indices):
    """Fan Monte-Carlo paths out over the workers and collect them in index order."""
    payload = document.model_dump(mode="json")
    logger.info("Dispatching %d Monte-Carlo paths of %s", len(indices), document.name)
    results = group(simulate_path.s(payload, root_seed, index) for index in indices).apply_async().get()
    results = sorted(results, key=lambda item: item["index"])
    return [(np.asarray(item["times"]), np.asarray(item["e_norm"])) for item in results]
