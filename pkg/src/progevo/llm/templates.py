"""Prompt templates stored as text assets, rendered by named placeholder."""

from __future__ import annotations

import re
from functools import lru_cache
from importlib import resources
from typing import Mapping

from progevo.errors import RenderError

TEMPLATE_NAMES = (
    "idea_generation",
    "idea_classification",
    "idea_selection",
    "history_summarization",
    "idea_capping",
)

_PLACEHOLDER = re.compile(r"\{([a-z_]+)\}")


@lru_cache(maxsize=None)
def load_template(name: str) -> str:
    if name not in TEMPLATE_NAMES:
        raise KeyError(f"unknown template {name!r}")
    return resources.files("progevo.llm").joinpath("templates", f"{name}.txt").read_text(encoding="utf-8")


def placeholders(name: str) -> list[str]:
    return list(dict.fromkeys(_PLACEHOLDER.findall(load_template(name))))


def render(name: str, bindings: Mapping[str, object]) -> str:
    """Substitute every ``{placeholder}``; an unbound one raises RenderError.

    Substitution is single-pass, so braces inside bound values are left alone.
    """
    body = load_template(name)
    for ph in placeholders(name):
        if ph not in bindings or bindings[ph] is None:
            raise RenderError(ph)
    return _PLACEHOLDER.sub(lambda m: str(bindings[m.group(1)]), body)
