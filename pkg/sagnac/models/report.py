"""
Pydantic model for the outcome of one command.
"""
from typing import Any, List, Tuple

from pydantic import BaseModel, Field


class CommandReport(BaseModel):
    """Summary entries and written files of one experiment command."""

    command: str = Field(..., description="Command name")
    entries: List[Tuple[str, Any]] = Field(default_factory=list, description="Ordered key=value entries")
    artifacts: List[str] = Field(default_factory=list, description="Files written")

    def value(self, key: str) -> Any:
        for name, value in self.entries:
            if name == key:
                return value
        raise KeyError(key)
