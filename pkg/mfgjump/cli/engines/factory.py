from typing import Optional
from .base import EngineSuite

_suite: Optional[EngineSuite] = None

def get_engine_suite() -> EngineSuite:
    """Get the current engine suite."""
    global _suite
    if _suite is None:
        from .analytic import AnalyticEngineSuite
        _suite = AnalyticEngineSuite()
    return _suite

def set_engine_suite(suite: Optional[EngineSuite]) -> None:
    """Set the engine suite (used for testing)."""
    global _suite
    _suite = suite
