"""Line-oriented parsers for the response grammars of each template.

Keywords are matched case-insensitively at line start, after stripping
markdown decoration (``**``, ``#``, bullets). Every parser either returns a
value or raises :class:`ParseError`; nothing else escapes.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from progevo.errors import ParseError

_DECOR = re.compile(r"^[\s>*#`_]*(?:[-+]\s+)?[\s*_`]*")
_FENCE = re.compile(r"```[^\n]*\n(.*?)```", re.S)


def _as_text(text) -> str:
    if isinstance(text, (bytes, bytearray)):
        return bytes(text).decode("utf-8", errors="replace")
    if not isinstance(text, str):
        raise ParseError(f"expected text, got {type(text).__name__}", repr(text))
    return text


def _clean(line: str) -> str:
    return _DECOR.sub("", line).strip()


def _unbold(value: str) -> str:
    # "**Key:** value" leaves nothing behind; "**Key: value**" leaves a dangling marker
    for mark in ("**", "__"):
        if value.count(mark) % 2 == 1 and value.endswith(mark):
            value = value[: -len(mark)]
    return value.strip()


def _keyword(line: str, *keys: str) -> tuple[str, str] | None:
    """Return (key, value) if the cleaned line starts with ``key:``.

    Emphasis markers are only stripped around the keyword so values such
    as ``x**2`` survive intact.
    """
    cleaned = _clean(line)
    low = cleaned.lower()
    for key in keys:
        m = re.match(rf"{re.escape(key)}\s*(?:\*\*|__)?\s*:\s*(?:\*\*|__)?\s*", low)
        if m:
            return key, _unbold(cleaned[m.end():])
    return None


def _strip_fences(text: str) -> str:
    # drop a single wrapping fence around the whole reply, keep inner text
    m = re.fullmatch(r"\s*```[^\n]*\n(.*)```\s*", text, re.S)
    return m.group(1) if m else text


@dataclass
class ParsedGeneration:
    ideas: list[tuple[str, str]] = field(default_factory=list)


@dataclass
class Classification:
    exists: bool
    idea_id: int | None = None
    updated_description: str | None = None
    new_description: str | None = None


@dataclass
class ParsedSelection:
    idea_id: int
    experiment_description: str
    candidate_payload: str


def _collect(lines: list[str], keys: tuple[str, ...], stop: tuple[str, ...]) -> list[tuple[str, str]]:
    """Gather keyword blocks; a value continues over following lines until
    a blank line, another keyword, or a stop pattern."""
    out: list[tuple[str, str]] = []
    current: list | None = None
    for raw in lines:
        hit = _keyword(raw, *keys)
        if hit:
            current = [hit[0], [hit[1]] if hit[1] else []]
            out.append(current)  # type: ignore[arg-type]
            continue
        cleaned = _clean(raw)
        if current is None:
            continue
        if not cleaned or any(re.match(p, cleaned, re.I) for p in stop) or raw.lstrip().startswith("```"):
            current = None
            continue
        current[1].append(cleaned)
    return [(k, " ".join(v).strip()) for k, v in out]


def parse_generation(text) -> ParsedGeneration:
    text = _strip_fences(_as_text(text))
    blocks = _collect(text.splitlines(), ("idea", "reasoning"), (r"idea\s+\d+\s*$",))
    ideas: list[tuple[str, str]] = []
    for key, value in blocks:
        if key == "idea":
            if value:
                ideas.append((value, ""))
        elif ideas and not ideas[-1][1]:
            ideas[-1] = (ideas[-1][0], value)
    if not ideas:
        raise ParseError("no 'Idea:' entries found", text)
    return ParsedGeneration(ideas)


def _parse_int(value: str, what: str, text: str) -> int:
    m = re.fullmatch(r"\[?\s*#?\s*([+-]?\d+)\s*\]?\.?", value.strip())
    if not m:
        raise ParseError(f"{what} is not an integer: {value!r}", text)
    return int(m.group(1))


def parse_classification(text) -> Classification:
    text = _strip_fences(_as_text(text))
    fields: dict[str, str] = {}
    for key, value in _collect(
        text.splitlines(), ("idea exists", "idea id", "updated description", "idea description"), ()
    ):
        fields.setdefault(key, value)
    if "idea exists" not in fields:
        raise ParseError("missing 'Idea Exists:' line", text)
    flag = fields["idea exists"].strip().rstrip(".").lower()
    if flag not in ("true", "false"):
        raise ParseError(f"'Idea Exists' must be True or False, got {flag!r}", text)
    if flag == "false":
        return Classification(False, new_description=fields.get("idea description") or None)
    if "idea id" not in fields:
        raise ParseError("'Idea Exists: True' without 'Idea ID:'", text)
    idea_id = _parse_int(fields["idea id"], "Idea ID", text)
    return Classification(True, idea_id=idea_id, updated_description=fields.get("updated description") or None)


def parse_selection(text) -> ParsedSelection:
    text = _as_text(text)
    fences = _FENCE.findall(text)
    outside = _FENCE.sub("\n", text)
    fields: dict[str, str] = {}
    for key, value in _collect(outside.splitlines(), ("idea id", "experiment description"), ()):
        fields.setdefault(key, value)
    if "idea id" not in fields:
        raise ParseError("missing 'Idea ID:' line", text)
    idea_id = _parse_int(fields["idea id"], "Idea ID", text)
    description = fields.get("experiment description", "")
    if not description:
        raise ParseError("missing 'Experiment description:'", text)
    if not fences:
        raise ParseError("no fenced candidate block", text)
    return ParsedSelection(idea_id, description, fences[-1].strip("\n"))


def parse_summary(text) -> str:
    text = _strip_fences(_as_text(text))
    for key, value in _collect(text.splitlines(), ("results",), ()):
        if value:
            return value
    raise ParseError("missing '- Results:' line", text)


def parse_capping(text) -> list[int]:
    text = _strip_fences(_as_text(text))
    for line in text.splitlines():
        hit = _keyword(line, "dropping ideas")
        if not hit:
            continue
        body = hit[1].strip().rstrip(".")
        if body.startswith("[") or body.endswith("]"):
            if not (body.startswith("[") and body.endswith("]")):
                raise ParseError(f"unbalanced list {body!r}", text)
            body = body[1:-1]
        items = [x.strip() for x in body.split(",") if x.strip()]
        out = []
        for item in items:
            if not re.fullmatch(r"[+-]?\d+", item):
                raise ParseError(f"non-integer idea id {item!r}", text)
            out.append(int(item))
        return out
    raise ParseError("missing 'Dropping Ideas:' line", text)
