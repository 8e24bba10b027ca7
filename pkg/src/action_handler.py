import logging
from typing import Any, Callable, Dict, List

logger = logging.getLogger("action_handler")


class PlannerError(Exception):
    """Raised when an analysis step cannot run on the loaded case"""
    pass


action_registry: Dict[str, Callable[..., Any]] = {}


def register_action(action_name: str):
    """Register an analysis step under a name usable from the CLI."""
    def decorator(func):
        if action_name in action_registry:
            raise ValueError(f"Action {action_name} registered twice")
        action_registry[action_name] = func
        return func

    return decorator


def list_actions() -> List[str]:
    return sorted(action_registry)


def execute_action(planner, action_name: str, **kwargs) -> Any:
    if action_name in action_registry:
        return action_registry[action_name](planner, **kwargs)
    logger.error(f"Action {action_name} not found. Available: {', '.join(list_actions())}")
    return None
