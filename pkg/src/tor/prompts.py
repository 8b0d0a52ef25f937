"""Prompt templates: packaged text resources with ``{slot}`` placeholders."""

from __future__ import annotations

import re
from importlib import resources
from pathlib import Path
from typing import Mapping

from .errors import TemplateError

TEMPLATE_VERSION = "1"
TEMPLATE_NAMES = (
    "outpatient", "laboratory", "radiology", "pathology",
    "outpatient_freetext", "laboratory_freetext", "radiology_freetext", "pathology_freetext",
    "participate", "opinion", "update", "update_freetext", "final",
)

# only lowercase identifiers are slots, so literal JSON braces pass through
_SLOT = re.compile(r"\{([a-z_][a-z0-9_]*)\}")


def slots(template: str) -> list[str]:
    return list(dict.fromkeys(_SLOT.findall(template)))


def fill(template: str, values: Mapping[str, object]) -> str:
    missing = [name for name in slots(template) if name not in values]
    if missing:
        raise TemplateError(f"missing slot(s): {', '.join(missing)}")
    return _SLOT.sub(lambda m: str(values[m.group(1)]), template)


class TemplateSet:
    """Packaged templates, optionally shadowed by files in ``override_dir``."""

    def __init__(self, override_dir: str | Path | None = None):
        self.override_dir = Path(override_dir) if override_dir else None
        self._cache: dict[str, str] = {}

    def get(self, name: str) -> str:
        if name not in self._cache:
            self._cache[name] = self._load(name)
        return self._cache[name]

    def _load(self, name: str) -> str:
        if self.override_dir is not None:
            path = self.override_dir / f"{name}.txt"
            if path.exists():
                return path.read_text(encoding="utf-8")
        try:
            return resources.files("tor").joinpath("templates", f"{name}.txt").read_text(
                encoding="utf-8"
            )
        except FileNotFoundError:
            raise TemplateError(f"no template named {name!r}") from None

    def check(self) -> list[str]:
        """Problems with the active template set (unreadable or slot-less)."""
        problems = []
        for name in TEMPLATE_NAMES:
            try:
                text = self.get(name)
            except TemplateError as exc:
                problems.append(str(exc))
                continue
            if not slots(text):
                problems.append(f"template {name!r} has no slots")
        return problems
