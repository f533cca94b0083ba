from .app import build_app, build_app_from_orchestrator
from .config import PlannerSettings, ServiceConfig

__all__ = ["PlannerSettings", "ServiceConfig", "build_app", "build_app_from_orchestrator"]
