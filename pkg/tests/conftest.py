"""Shared test fixtures: canned model replies and script builders for
deterministic full-pipeline runs."""

from __future__ import annotations

import os

import pytest

from svagen.backends import ScriptEntry, ScriptedBackend
from svagen.bank import InformationBank, SignalInfo
from svagen.config import RunConfig
from svagen.tree import SearchParams

# A syntactically valid assertion pair (property + assert).
VALID_PROPERTY_UNIT = """\
property p_handshake;
  @(posedge clk_i) disable iff (rst_i)
  req_i |-> ##1 ack_o;
endproperty
assert property (p_handshake);"""

VALID_BARE_ASSERT = "assert property (@(posedge clk_i) !rst_i |-> $stable(cfg_q));"

INVALID_ASSERT = "assert property (@(posedge clk_i) req_i |-> );"

CORRECTED_ASSERT = "assert property (@(posedge clk_i) req_i |-> ack_o);"


def fenced(*units: str) -> str:
    blocks = "\n\n".join(units)
    return f"```systemverilog\n{blocks}\n```"


def critic_reply(score: float, feedback: str = "Needs work on completeness.") -> str:
    return f"{feedback}\n[SCORE: {score:g}]"


def make_signal(name: str = "ack_o") -> SignalInfo:
    return SignalInfo(
        verilog_name=name,
        spec_name=name,
        description=f"{name} handshake output",
        definition="1-bit output",
        functionality="acknowledges an accepted request",
    )


def make_bank(signal_names: list[str] | None = None) -> InformationBank:
    names = signal_names or ["ack_o"]
    return InformationBank(
        design_name="demo",
        workflow_info="[Signal Mapping]\n"
        + "\n".join(f"{n}: mapped signal" for n in names),
        signals=[make_signal(n) for n in names],
    )


def stage2_script(
    signal: str,
    weak_answer: str,
    rollout_answers: list[str],
    scores: list[float],
    keyed: bool = False,
) -> list[ScriptEntry]:
    """Script for one signal's stage 2.

    `scores` holds 1 + 3 * len(rollout_answers) values: the root evaluation,
    then per rollout (re-sample, expansion feedback, child evaluation).
    """
    assert len(scores) == 1 + 3 * len(rollout_answers)
    match = f"Signal name: {signal}" if keyed else None
    entries = [
        ScriptEntry(response=weak_answer, match=match),
        ScriptEntry(response=critic_reply(scores[0]), match=match),
    ]
    for i, answer in enumerate(rollout_answers):
        resample, feedback, evaluation = scores[1 + 3 * i : 4 + 3 * i]
        entries += [
            ScriptEntry(response=critic_reply(resample), match=match),
            ScriptEntry(response=critic_reply(feedback), match=match),
            ScriptEntry(response=answer, match=match),
            ScriptEntry(response=critic_reply(evaluation), match=match),
        ]
    return entries


def correction_entry(signal: str, response: str, keyed: bool = False) -> ScriptEntry:
    # the correction prompt ends "...corrected assertions for <signal>"
    return ScriptEntry(
        response=response,
        match=f"corrected assertions for {signal}" if keyed else None,
    )


def dedup_entry(signal: str, response: str, keyed: bool = False) -> ScriptEntry:
    # the deduplication prompt says "...from this list for the <signal>"
    return ScriptEntry(
        response=response, match=f"for the {signal}" if keyed else None
    )


def full_signal_script(
    signal: str,
    n_rollouts: int = 4,
    keyed: bool = False,
    with_bad_assertion: bool = True,
) -> list[ScriptEntry]:
    """A complete stage 2+3 script for one signal hitting the full budget:
    18 stage-2 calls (for 4 rollouts) plus correction and deduplication."""
    weak = fenced(VALID_PROPERTY_UNIT)
    last_units = [VALID_PROPERTY_UNIT, VALID_BARE_ASSERT]
    if with_bad_assertion:
        last_units.append(INVALID_ASSERT)
    rollout_answers = [fenced(VALID_PROPERTY_UNIT, VALID_BARE_ASSERT)] * (n_rollouts - 1)
    rollout_answers.append(fenced(*last_units))
    scores = [30.0] + [float(40 + i) for i in range(3 * n_rollouts)]
    entries = stage2_script(signal, weak, rollout_answers, scores, keyed=keyed)
    if with_bad_assertion:
        entries.append(correction_entry(signal, fenced(CORRECTED_ASSERT), keyed))
    entries.append(
        dedup_entry(signal, fenced(VALID_PROPERTY_UNIT, VALID_BARE_ASSERT), keyed)
    )
    return entries


@pytest.fixture
def signal() -> SignalInfo:
    return make_signal()


@pytest.fixture
def bank() -> InformationBank:
    return make_bank()


@pytest.fixture
def params() -> SearchParams:
    return SearchParams()


def config_for(tmp_path, n_rollouts: int = 4, **kwargs) -> RunConfig:
    os.makedirs(tmp_path, exist_ok=True)
    config = RunConfig(search=SearchParams(n_rollouts=n_rollouts), **kwargs)
    config.paths.bank_file = str(tmp_path / "bank.json")
    config.paths.output_dir = str(tmp_path / "out")
    return config


def scripted(entries: list[ScriptEntry]) -> ScriptedBackend:
    return ScriptedBackend(entries)
