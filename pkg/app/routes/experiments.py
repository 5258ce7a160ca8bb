from typing import Any, Dict, Optional

from fastapi import APIRouter, HTTPException
from pydantic import BaseModel, Field

from app.constants import Method
from app.errors import ConfigError, NonConvergenceError
from app.harness.runner import rate_table, ramsey_with_reference, spam_report
from app.harness.settings import build_run_config, merge_tree, read_config_file
from app.logger import log
from app.schemas import RunConfig

router = APIRouter(prefix="/api")


class ExperimentRequest(BaseModel):
    method: Optional[Method] = None
    seed: Optional[int] = None
    trials: Optional[int] = Field(default=None, ge=1, le=1_000_000)
    config: Dict[str, Any] = Field(default_factory=dict, description="partial config tree, same keys as the JSON file")


def _resolve(request: ExperimentRequest) -> RunConfig:
    tree = merge_tree(read_config_file(), request.config)
    if request.method is not None:
        tree["method"] = request.method.value
    if request.seed is not None:
        tree["seed"] = request.seed
    if request.trials is not None:
        tree["trials"] = request.trials
    return build_run_config(tree)


def _run(label: str, request: ExperimentRequest, work):
    try:
        config = _resolve(request)
        return work(config)
    except ConfigError as e:
        raise HTTPException(status_code=422, detail={"field": e.field, "error": str(e)})
    except NonConvergenceError as e:
        log(f"{label}: {e}", "ERROR")
        raise HTTPException(status_code=500, detail=str(e))


@router.post("/rates")
def rates(request: ExperimentRequest):
    return _run("rates", request, rate_table)


@router.post("/spam")
def spam(request: ExperimentRequest):
    return _run("spam", request, lambda config: spam_report(config).model_dump(mode="json"))


@router.post("/ramsey")
def ramsey(request: ExperimentRequest):
    def work(config: RunConfig):
        result, reference = ramsey_with_reference(config)
        return {
            "method": config.ramsey.method.value if config.ramsey.method else None,
            "distance_um": config.ramsey.distance_um,
            "phases": result.phases,
            "p_f1": result.p_f1,
            "p_f1_err": result.p_f1_err,
            "contrast": result.contrast,
            "phase_offset": result.phase_offset,
            "reference_contrast": reference.contrast,
            "normalized_contrast": result.normalized_contrast,
        }

    return _run("ramsey", request, work)
