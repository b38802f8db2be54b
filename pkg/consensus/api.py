import logging
from pathlib import Path

from django.conf import settings
from django.http import JsonResponse
from ninja import NinjaAPI

from .exceptions import ConsensusError
from .models import ScenarioRun
from .scenarios import build_scenario, cmd_check, echo_scenario, parse_grid, parse_scenario, validate_document
from .schemas import CheckIn, MonteCarloIn, RunIn, RunOut, ScenarioName, SweepIn
from .tasks import execute_run

logger = logging.getLogger(__name__)

api = NinjaAPI(
    csrf=False,
    title="ConsensusLab API",
    description="""
Simulation and verification service for robust finite-time consensus of nonlinear multi-agent
systems under bounded, time-varying communication delays.

Included operations:

- List and inspect the shipped benchmark scenarios
- Evaluate the delay-dependent feasibility criteria and settling-time bounds of a scenario
- Launch closed-loop simulations, parameter sweeps and Monte-Carlo batches as background runs
- Inspect run status and summaries

Built with:
- Django
- Django Ninja
- Celery
- NumPy / SciPy
""",
    version="0.2.0"
)


def _error(exc: ConsensusError):
    logger.error("Request failed: %s", exc.message, exc_info=True)
    status = 422 if exc.exit_code == 4 else 400
    return JsonResponse({"error": exc.message, "code": exc.exit_code}, status=status)


def _scenario_path(name: str) -> Path | None:
    directory = Path(settings.SIM_SCENARIO_DIR)
    matches = [path for path in directory.glob("*.scn") if path.stem == name]
    return matches[0] if matches else None


# --- Scenarios ---

@api.get("/scenarios", response=list[ScenarioName], tags=["Scenarios"])
def list_scenarios(request):
    """Return the shipped scenario files."""
    directory = Path(settings.SIM_SCENARIO_DIR)
    return [{"name": path.stem, "path": path.name} for path in sorted(directory.glob("*.scn"))]


@api.get("/scenarios/{name}", tags=["Scenarios"])
def get_scenario(request, name: str):
    """Return a shipped scenario with every default applied."""
    path = _scenario_path(name)
    if path is None:
        return JsonResponse({"error": "Scenario not found"}, status=404)
    try:
        scenario = parse_scenario(path)
    except ConsensusError as exc:
        return _error(exc)
    return {
        "name": name,
        "document": scenario.document.model_dump(mode="json"),
        "text": echo_scenario(scenario),
    }


# --- Criteria ---

@api.post("/check", tags=["Criteria"])
def check_scenario(request, payload: CheckIn):
    """Evaluate the feasibility criteria of a scenario document without simulating."""
    try:
        summary = cmd_check(build_scenario(validate_document(payload.scenario)))
    except ConsensusError as exc:
        return _error(exc)
    return summary.as_dict()


# --- Runs ---

def _create_run(document: dict, command: str, options: dict):
    try:
        validated = validate_document(document)
        build_scenario(validated)
    except ConsensusError as exc:
        return _error(exc)
    run = ScenarioRun.objects.create(
        name=validated.name,
        command=command,
        scenario=validated.model_dump(mode="json"),
        options=options,
    )
    execute_run.delay(run.pk)
    run.refresh_from_db()
    return run


@api.post("/runs", response=RunOut, tags=["Runs"])
def create_run(request, payload: RunIn):
    """Simulate a scenario in the background."""
    return _create_run(payload.scenario, "run", {"strict": payload.strict})


@api.post("/montecarlo", response=RunOut, tags=["Runs"])
def create_monte_carlo(request, payload: MonteCarloIn):
    """Run a Monte-Carlo batch of a stochastic scenario in the background."""
    return _create_run(payload.scenario, "mc", {"runs": payload.runs, "seed": payload.seed})


@api.post("/sweeps", response=RunOut, tags=["Runs"])
def create_sweep(request, payload: SweepIn):
    """Sweep one parameter of a scenario in the background."""
    try:
        parse_grid(payload.grid)
    except ConsensusError as exc:
        return _error(exc)
    return _create_run(payload.scenario, "sweep", {
        "parameter": payload.parameter, "grid": payload.grid, "simulate": payload.simulate,
    })


@api.get("/runs", response=list[RunOut], tags=["Runs"])
def list_runs(request, limit: int = 50):
    """Return the most recent runs."""
    return list(ScenarioRun.objects.all()[:limit])


@api.get("/runs/{run_id}", response=RunOut, tags=["Runs"])
def get_run(request, run_id: int):
    """Return one run with its summary."""
    try:
        return ScenarioRun.objects.get(pk=run_id)
    except ScenarioRun.DoesNotExist:
        return JsonResponse({"error": "Run not found"}, status=404)
