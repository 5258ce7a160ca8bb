from fastapi import APIRouter

from app.config import DEFAULT_CONFIG_PATH, TOOL_VERSION
from app.model_config import METHOD_CONFIGS

router = APIRouter()


@router.get("/")
async def root():
    return {
        "status": "running",
        "service": "Cavity Readout Simulator API",
        "version": TOOL_VERSION,
        "docs": "/docs",
        "health": "/health",
    }


@router.get("/health")
async def health_check():
    return {
        "status": "healthy",
        "version": TOOL_VERSION,
        "methods": sorted(METHOD_CONFIGS),
        "default_config": "present" if DEFAULT_CONFIG_PATH.exists() else "missing",
    }
