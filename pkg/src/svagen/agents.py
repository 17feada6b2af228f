"""Agent operations for the search and combination stages: weak-answer
generation, critique with score suppression, refinement, syntax correction
and deduplication.

Everything here is stateless over a ChatBackend; the wire conventions the
models must follow are (a) assertions travel inside fenced code blocks and
(b) the critic ends with a `[SCORE: n]` marker, of which the last occurrence
wins so chain-of-thought preambles cannot confuse the parse.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from svagen.backends import ChatBackend
from svagen.bank import SignalInfo
from svagen.prompts import DEFAULT_TEMPLATES, PromptTemplate, render_prompt
from svagen.sva.checker import AssertionRecord
from svagen.tree import AnswerContent, SearchParams


class ScoreParseError(ValueError):
    """No usable score marker in the critic's reply."""

    def __init__(self, message: str, raw_text: str) -> None:
        super().__init__(message)
        self.raw_text = raw_text


class ScoreRangeError(ScoreParseError):
    """Score marker present but outside the legal range."""


@dataclass(frozen=True)
class CritiqueResult:
    feedback: str
    raw_score: float
    suppressed_score: float


_SCORE_RE = re.compile(r"\[\s*score\s*:\s*([+-]?\d+(?:\.\d+)?)\s*\]", re.IGNORECASE)
_FENCE_RE = re.compile(r"```[^\n`]*\n(.*?)```", re.DOTALL)


def parse_score(text: str, score_min: float = -100.0, score_max: float = 100.0) -> float:
    """Extract the last `[SCORE: n]` marker; value must lie in range."""
    matches = _SCORE_RE.findall(text)
    if not matches:
        raise ScoreParseError("no [SCORE: n] marker found in critic reply", text)
    value = float(matches[-1])
    if not (score_min <= value <= score_max):
        raise ScoreRangeError(
            f"score {value} outside [{score_min}, {score_max}]", text
        )
    return value


def suppress_score(score: float, params: SearchParams) -> float:
    """Full-score suppression: clamp optimistic scores down to the cap."""
    return min(score, params.score_cap)


# --------------------------------------------------------------------------
# Answer wire format: fenced code blocks, split into assertion units.


def extract_assertions(text: str) -> list[str]:
    """Pull assertion units out of fenced code blocks, in order.

    A unit is a `property ... endproperty` block together with the assert
    statement that immediately follows it, or a bare
    `assert/assume/cover property (...);` statement. No fences, no units.
    """
    units: list[str] = []
    for block in _FENCE_RE.findall(text):
        units.extend(split_assertion_units(block))
    return units


def commentary_of(text: str) -> str:
    """Everything outside the fenced code blocks (the model's reasoning)."""
    return _FENCE_RE.sub("", text).strip()


def parse_answer(text: str) -> AnswerContent:
    assertions = extract_assertions(text)
    commentary = text.strip() if not assertions else commentary_of(text)
    return AnswerContent(assertions=assertions, commentary=commentary)


_UNIT_START_RE = re.compile(
    r"^\s*(property\b|(?:\w+\s*:\s*)?(?:assert|assume|cover)\b)"
)


def split_assertion_units(code: str) -> list[str]:
    lines = code.splitlines()
    units: list[str] = []
    current: list[str] = []
    in_property = False
    in_statement = False  # inside an assert-like statement, waiting for ';'

    def flush() -> None:
        nonlocal current
        unit = "\n".join(current).strip()
        if unit:
            units.append(unit)
        current = []

    for line in lines:
        stripped = line.strip()
        if in_property:
            current.append(line)
            if re.search(r"\bendproperty\b", stripped):
                in_property = False
            continue
        if in_statement:
            current.append(line)
            if ";" in stripped:
                flush()
                in_statement = False
            continue
        m = _UNIT_START_RE.match(line)
        if m is None:
            # stray text between units (comments, blank lines) is dropped
            continue
        if m.group(1).startswith("property"):
            if current:
                flush()  # property not preceded by its assert: new unit
            current.append(line)
            in_property = True
            if re.search(r"\bendproperty\b", stripped):
                in_property = False
        else:
            # assert statement; attaches to a pending property block
            current.append(line)
            if ";" in stripped:
                flush()
            else:
                in_statement = True
    flush()
    return units


# --------------------------------------------------------------------------
# Normalization pre-pass used before deduplication.

_NORM_STRIP_RE = re.compile(
    r'("(?:\\.|[^"\\])*")|//[^\n]*|/\*.*?\*/', re.DOTALL
)


def normalize_assertion(text: str) -> str:
    """Canonical form for equality: comments stripped, whitespace collapsed
    (string literals kept verbatim), trailing semicolons dropped."""
    parts: list[str] = []

    def add_code(segment: str) -> None:
        collapsed = re.sub(r"\s+", " ", segment)
        if parts and parts[-1].endswith(" ") and collapsed.startswith(" "):
            collapsed = collapsed[1:]
        if collapsed:
            parts.append(collapsed)

    pos = 0
    for m in _NORM_STRIP_RE.finditer(text):
        add_code(text[pos : m.start()])
        if m.group(1) is not None:
            parts.append(m.group(1))
        else:
            add_code(" ")
        pos = m.end()
    add_code(text[pos:])
    result = "".join(parts).strip()
    while result.endswith(";"):
        result = result[:-1].rstrip()
    return result


def merge_normalized(pool: list[str]) -> list[str]:
    """Drop later entries whose normalized text already occurred; keeps the
    first original spelling."""
    seen: set[str] = set()
    out: list[str] = []
    for text in pool:
        key = normalize_assertion(text)
        if key and key not in seen:
            seen.add(key)
            out.append(text)
    return out


# --------------------------------------------------------------------------
# Agent operations


def generate_weak_answer(
    backend: ChatBackend,
    signal: SignalInfo,
    workflow: str,
    templates: dict[str, PromptTemplate] | None = None,
) -> AnswerContent:
    """First, deliberately short assertion set seeding the tree root."""
    if not signal.verilog_name or not (signal.description or signal.definition or signal.functionality):
        raise ValueError("weak answer needs a named, described signal")
    templates = templates or DEFAULT_TEMPLATES
    messages = render_prompt(
        templates["sva_weak"],
        {
            "workflow_info": workflow,
            "signal_name": signal.verilog_name,
            "specification_text": signal.describe(),
        },
    )
    return parse_answer(backend.complete(messages))


def critique(
    backend: ChatBackend,
    signal: SignalInfo,
    spec_excerpt: str,
    answer: AnswerContent,
    syntax_log: str,
    params: SearchParams,
    workflow: str = "",
    templates: dict[str, PromptTemplate] | None = None,
) -> CritiqueResult:
    """Score an assertion set; the returned suppressed_score is what feeds
    the tree. Raises ScoreParseError when the reply carries no usable score.
    """
    templates = templates or DEFAULT_TEMPLATES
    messages = render_prompt(
        templates["critic"],
        {
            "workflow_info": workflow,
            "signal_name": signal.verilog_name,
            "specification_text": spec_excerpt,
            "assertions": "\n\n".join(answer.assertions) or "(no assertions)",
            "syntax_log": syntax_log or "(not available)",
        },
    )
    reply = backend.complete(messages)
    raw = parse_score(reply, params.score_min, params.score_max)
    return CritiqueResult(
        feedback=reply,
        raw_score=raw,
        suppressed_score=suppress_score(raw, params),
    )


def refine(
    backend: ChatBackend,
    signal: SignalInfo,
    answer: AnswerContent,
    critic_feedback: str,
    syntax_log: str,
    rag_context: str,
    workflow: str,
    templates: dict[str, PromptTemplate] | None = None,
) -> AnswerContent:
    """Produce an improved assertion set from both feedback channels.

    The input answer is read-only; the result is a fresh AnswerContent.
    """
    templates = templates or DEFAULT_TEMPLATES
    messages = render_prompt(
        templates["sva_refine"],
        {
            "workflow_info": workflow,
            "signal_name": signal.verilog_name,
            "specification_text": signal.describe(),
            "assertions": "\n\n".join(answer.assertions) or "(no assertions yet)",
            "feedback": critic_feedback or "(none)",
            "syntax_log": syntax_log or "(none)",
            "rag_context": rag_context or "(none)",
        },
    )
    return parse_answer(backend.complete(messages))


def format_bad_assertions(records: list[AssertionRecord]) -> str:
    """Render failing assertions with their diagnostics, verbatim, for the
    correction prompt."""
    blocks = []
    for i, record in enumerate(records, start=1):
        lines = [f"Assertion {i}:", record.text, "Syntax issues:"]
        lines += [f"  {d.render()}" for d in record.diagnostics]
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks)


def correct_syntax(
    backend: ChatBackend,
    bad: list[AssertionRecord],
    spec_excerpt: str,
    signal_name: str,
    templates: dict[str, PromptTemplate] | None = None,
) -> list[str]:
    """Ask the correction agent to fix failing assertions.

    Every input record must carry diagnostics. An empty input returns empty
    without touching the backend.
    """
    if not bad:
        return []
    for record in bad:
        if not record.diagnostics:
            raise ValueError(
                "correction input must carry at least one diagnostic per assertion"
            )
    templates = templates or DEFAULT_TEMPLATES
    messages = render_prompt(
        templates["syntax_correction"],
        {
            "specification_text": spec_excerpt,
            "assertions": format_bad_assertions(bad),
            "signal_name": signal_name,
        },
    )
    return extract_assertions(backend.complete(messages))


def deduplicate(
    backend: ChatBackend,
    pool: list[str],
    spec_excerpt: str,
    signal_name: str,
    templates: dict[str, PromptTemplate] | None = None,
) -> tuple[list[str], list[str]]:
    """Ask the deduplication agent which pool entries to retain.

    The output is constrained to be a subset of the pool under normalized
    equality; a reply that modifies or invents assertions is rejected and
    the whole pool kept, with a warning. Returns (assertions, warnings).
    """
    if len(pool) <= 1:
        return list(pool), []
    templates = templates or DEFAULT_TEMPLATES
    messages = render_prompt(
        templates["deduplication"],
        {
            "specification_text": spec_excerpt,
            "assertions": "\n\n".join(pool),
            "signal_name": signal_name,
        },
    )
    reply_assertions = extract_assertions(backend.complete(messages))
    by_norm = {normalize_assertion(t): t for t in pool}
    kept_norms: list[str] = []
    for text in reply_assertions:
        key = normalize_assertion(text)
        if key not in by_norm:
            return list(pool), [
                f"deduplication reply contained an assertion not in the pool; pool kept as-is: {text[:80]!r}"
            ]
        if key not in kept_norms:
            kept_norms.append(key)
    if not kept_norms:
        return list(pool), [
            "deduplication reply contained no assertions; pool kept as-is"
        ]
    # preserve pool order, keep the pool's original spelling
    kept_set = set(kept_norms)
    return [t for t in pool if normalize_assertion(t) in kept_set], []
