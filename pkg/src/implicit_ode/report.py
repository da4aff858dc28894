"""Structured reports rendered either as aligned text or as JSON."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np


def format_value(v: Any) -> str:
    """Deterministic text for report values; floats use the shortest round-trip form."""
    if isinstance(v, (bool, np.bool_)):
        return "yes" if v else "no"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        return repr(v + 0.0)
    if isinstance(v, (list, tuple, np.ndarray)):
        return "[" + ", ".join(format_value(x) for x in v) + "]"
    return str(v)


def _jsonable(v: Any):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in v]
    return str(v)


@dataclass
class Section:
    name: str
    entries: list[tuple[str, Any]] = field(default_factory=list)


@dataclass
class Report:
    """Ordered sections of ``label: value`` lines plus free-form flags."""

    title: str
    sections: list[Section] = field(default_factory=list)
    flags: list[str] = field(default_factory=list)

    def section(self, name: str) -> Report:
        self.sections.append(Section(name))
        return self

    def add(self, label: str, value: Any) -> Report:
        if not self.sections:
            self.section("")
        self.sections[-1].entries.append((label, value))
        return self

    def flag(self, message: str) -> Report:
        self.flags.append(message)
        return self

    def value(self, section: str, label: str) -> Any:
        for s in self.sections:
            if s.name == section:
                for k, v in s.entries:
                    if k == label:
                        return v
        raise KeyError(f"{section}/{label}")

    def extend(self, other: Report) -> Report:
        self.sections.extend(other.sections)
        self.flags.extend(other.flags)
        return self

    def render(self) -> str:
        lines = [self.title, "=" * len(self.title)]
        for s in self.sections:
            lines.append("")
            if s.name:
                lines.append(f"[{s.name}]")
            width = max((len(k) for k, _ in s.entries), default=0)
            for k, v in s.entries:
                lines.append(f"  {k.ljust(width)} : {format_value(v)}")
        if self.flags:
            lines.append("")
            lines.append("[flags]")
            lines.extend(f"  ! {f}" for f in self.flags)
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "title": self.title,
            "sections": [
                {"name": s.name, "entries": [[k, _jsonable(v)] for k, v in s.entries]} for s in self.sections
            ],
            "flags": list(self.flags),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n"
