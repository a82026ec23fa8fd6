from progevo.llm.parsing import (
    Classification,
    ParsedGeneration,
    ParsedSelection,
    parse_capping,
    parse_classification,
    parse_generation,
    parse_selection,
    parse_summary,
)
from progevo.llm.templates import TEMPLATE_NAMES, load_template, render

__all__ = [
    "Classification",
    "ParsedGeneration",
    "ParsedSelection",
    "parse_capping",
    "parse_classification",
    "parse_generation",
    "parse_selection",
    "parse_summary",
    "TEMPLATE_NAMES",
    "load_template",
    "render",
]
