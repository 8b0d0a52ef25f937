from __future__ import annotations

from enum import Enum


class AgentRole(str, Enum):
    OUTPATIENT = "outpatient"
    LABORATORY = "laboratory"
    RADIOLOGY = "radiology"
    PATHOLOGY = "pathology"
    MODERATOR = "moderator"

    @property
    def display(self) -> str:
        return self.value.capitalize()

    @property
    def is_specialist(self) -> bool:
        return self is not AgentRole.MODERATOR

    @classmethod
    def parse(cls, name: str) -> "AgentRole":
        key = name.strip().lower()
        for role in cls:
            if role.value == key:
                return role
        raise ValueError(f"unknown role {name!r}")


# fixed iteration order of the discussion loop
SPECIALISTS: tuple[AgentRole, ...] = (
    AgentRole.OUTPATIENT,
    AgentRole.LABORATORY,
    AgentRole.RADIOLOGY,
    AgentRole.PATHOLOGY,
)
