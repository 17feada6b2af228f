"""Syntax checking behind one interface: the built-in subset parser and an
adapter that shells out to an external verification tool.

The built-in checker is pure (same text, same diagnostics) so scripted runs
replay byte-identically. The external adapter writes the assertion to a temp
file, runs a configurable command, and maps tool output to diagnostics via a
configurable regex profile.
"""

from __future__ import annotations

import os
import re
import shlex
import subprocess
import tempfile
from dataclasses import dataclass, field
from typing import Protocol

from svagen.sva.parser import Diagnostic, parse_assertion


class CheckerUnavailableError(RuntimeError):
    """The checker itself failed to run (tool missing, timeout); distinct
    from the assertion failing its syntax check."""


class SyntaxChecker(Protocol):
    def check(self, assertion_text: str) -> list[Diagnostic]: ...


@dataclass
class AssertionRecord:
    text: str
    signal: str = ""
    node_id: int | None = None
    status: str = "unchecked"  # unchecked | pass | fail
    diagnostics: list[Diagnostic] = field(default_factory=list)

    def apply_check(self, diagnostics: list[Diagnostic]) -> None:
        self.diagnostics = diagnostics
        has_error = any(d.severity == "error" for d in diagnostics)
        self.status = "fail" if has_error else "pass"


class BuiltinChecker:
    """Lint-level checker backed by the subset parser."""

    def check(self, assertion_text: str) -> list[Diagnostic]:
        _, diagnostics = parse_assertion(assertion_text)
        return diagnostics


@dataclass
class DiagnosticPattern:
    """One regex of an external tool's log profile.

    The pattern may define named groups `line`, `column`, and `message`;
    missing positions default to 1:1.
    """

    pattern: str
    severity: str = "error"
    code: str = "external-tool"

    def match_all(self, output: str) -> list[Diagnostic]:
        out = []
        for m in re.finditer(self.pattern, output, re.MULTILINE):
            groups = m.groupdict()
            line = int(groups.get("line") or 1)
            column = int(groups.get("column") or 1)
            message = groups.get("message") or m.group(0)
            out.append(Diagnostic(self.severity, line, column, self.code, message.strip()))
        return out


# Matches the common "ERROR (line N): ..." shape; real tool profiles are
# supplied through config.
DEFAULT_EXTERNAL_PATTERNS = [
    DiagnosticPattern(pattern=r"ERROR \(line (?P<line>\d+)\): (?P<message>.+)", severity="error"),
    DiagnosticPattern(pattern=r"WARNING \(line (?P<line>\d+)\): (?P<message>.+)", severity="warning"),
]


class ExternalChecker:
    """Adapter around an external syntax tool.

    `command_template` must contain `{file}`, replaced with the path of a
    temp file holding the assertion text.
    """

    def __init__(
        self,
        command_template: str,
        patterns: list[DiagnosticPattern] | None = None,
        timeout_s: float = 30.0,
    ) -> None:
        if "{file}" not in command_template:
            raise ValueError("command_template must contain a {file} placeholder")
        self.command_template = command_template
        self.patterns = patterns if patterns is not None else list(DEFAULT_EXTERNAL_PATTERNS)
        self.timeout_s = timeout_s

    def check(self, assertion_text: str) -> list[Diagnostic]:
        fd, path = tempfile.mkstemp(suffix=".sv", prefix="svagen_")
        try:
            with os.fdopen(fd, "w") as f:
                f.write(assertion_text)
            argv = [
                part.replace("{file}", path)
                for part in shlex.split(self.command_template)
            ]
            try:
                proc = subprocess.run(
                    argv,
                    capture_output=True,
                    text=True,
                    timeout=self.timeout_s,
                )
            except FileNotFoundError as err:
                raise CheckerUnavailableError(f"checker command not found: {argv[0]}") from err
            except subprocess.TimeoutExpired as err:
                raise CheckerUnavailableError(
                    f"checker timed out after {self.timeout_s}s"
                ) from err
            output = proc.stdout + proc.stderr
            diagnostics: list[Diagnostic] = []
            for pattern in self.patterns:
                diagnostics.extend(pattern.match_all(output))
            if proc.returncode != 0 and not any(d.severity == "error" for d in diagnostics):
                # Failing exit without a recognizable message must not pass.
                diagnostics.append(
                    Diagnostic(
                        "error",
                        1,
                        1,
                        "external-exit",
                        f"tool exited with status {proc.returncode}",
                    )
                )
            return diagnostics
        finally:
            try:
                os.unlink(path)
            except OSError:
                pass


def partition(
    records: list[AssertionRecord], checker: SyntaxChecker
) -> tuple[list[AssertionRecord], list[AssertionRecord]]:
    """Check every record once and split into (passing, failing).

    Order is preserved within each group. If the checker is unavailable for
    any record, all records are still attempted, the failures stay marked
    `unchecked`, and one aggregate error is raised naming them.
    """
    passing: list[AssertionRecord] = []
    failing: list[AssertionRecord] = []
    unchecked: list[AssertionRecord] = []
    for record in records:
        try:
            record.apply_check(checker.check(record.text))
        except CheckerUnavailableError:
            record.status = "unchecked"
            unchecked.append(record)
            continue
        (passing if record.status == "pass" else failing).append(record)
    if unchecked:
        names = ", ".join(
            f"{r.signal or '?'}#{i}" for i, r in enumerate(unchecked)
        )
        raise CheckerUnavailableError(
            f"{len(unchecked)} assertion(s) could not be checked: {names}"
        )
    return passing, failing


def format_log(records: list[AssertionRecord]) -> str:
    """Render checked records as the stable text log fed back to the agents.

    One block per assertion: 1-based index, verdict, then one `line:col`
    entry per diagnostic.
    """
    blocks: list[str] = []
    for i, record in enumerate(records, start=1):
        verdict = record.status.upper()
        lines = [f"[{i}] {verdict}"]
        for d in record.diagnostics:
            lines.append(f"  {d.render()}")
        blocks.append("\n".join(lines))
    return "\n".join(blocks)
