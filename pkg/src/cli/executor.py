"""
Command execution and management.
"""
import time
import logging
from typing import Any, Callable, Dict, Optional

from src.observability.metrics import MetricsTracker

logger = logging.getLogger(__name__)


class CommandExecutor:
    """Registers subcommand handlers and runs them with stage metrics"""

    def __init__(self):
        self.commands: Dict[str, Dict[str, Any]] = {}

    def register_command(self, name: str, handler: Callable[..., Any], description: str) -> None:
        """Register a new subcommand"""
        self.commands[name] = {
            "handler": handler,
            "description": description,
        }

    def describe(self, name: str) -> str:
        if name not in self.commands:
            raise ValueError(f"Command {name} not found")
        return self.commands[name]["description"]

    def execute_command(
        self,
        name: str,
        args: Any,
        output_dir: str,
        metadata: Optional[Dict[str, Any]] = None,
    ) -> Any:
        """
        Execute a registered subcommand and record it in the run metadata.

        Unlike a tool call the failure is re-raised after tracking, so the
        caller can map it to an exit code.
        """
        if name not in self.commands:
            raise ValueError(f"Command {name} not found")
        metrics = MetricsTracker(output_dir)
        start_time = time.time()
        try:
            result = self.commands[name]["handler"](args)
        except Exception as e:
            metrics.track_stage(name, start_time, success=False, error=str(e), metadata=metadata)
            raise
        metrics.track_stage(name, start_time, success=True, metadata=metadata)
        return result
