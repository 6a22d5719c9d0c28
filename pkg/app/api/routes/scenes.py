import logging

from fastapi import APIRouter

from app.api.schemas.scene_schemas import SceneListResponse, SceneSummary
from app.repositories.scene_repository import SceneRepository

logger = logging.getLogger(__name__)
router = APIRouter()


@router.get("", response_model=SceneListResponse)
def list_scenes():
    """
    内置场景列表
    """
    repository = SceneRepository()
    summaries = []
    for name in repository.list_builtins():
        scene = repository.load(name)
        summaries.append(SceneSummary(
            name=scene.name,
            shape=scene.carrier.shape,
            n=scene.carrier.n,
            closed=scene.carrier.closed,
            length_scale=scene.carrier.length_scale,
            density=None if scene.measure.density is None else scene.measure.density.describe(),
            atoms=len(scene.measure.atoms),
        ))
    return SceneListResponse(scenes=summaries, total=len(summaries))
