"""Agent-layer tests: prompt rendering, score parsing and suppression,
assertion extraction, normalization, and the agent operations over a
scripted backend."""

from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from svagen.agents import (
    CritiqueResult,
    ScoreParseError,
    ScoreRangeError,
    correct_syntax,
    critique,
    deduplicate,
    extract_assertions,
    generate_weak_answer,
    merge_normalized,
    normalize_assertion,
    parse_answer,
    parse_score,
    refine,
    split_assertion_units,
    suppress_score,
)
from svagen.backends import BackendError, ScriptEntry, ScriptedBackend
from svagen.prompts import DEFAULT_TEMPLATES, PromptTemplate, RenderError, render_prompt
from svagen.sva.checker import AssertionRecord, BuiltinChecker
from svagen.tree import AnswerContent, SearchParams

from conftest import (
    INVALID_ASSERT,
    VALID_BARE_ASSERT,
    VALID_PROPERTY_UNIT,
    critic_reply,
    fenced,
)

ASSERTION_1 = """\
property mtime_intr_p;
  @(posedge clk_i) disable iff (!rst_ni)
  (mtime >= mtimecmp[0]) |-> intr[0];
endproperty
assert property (mtime_intr_p);"""


class RecordingBackend:
    """Wraps a scripted backend and keeps every prompt it saw."""

    supports_files = False
    supports_images = False

    def __init__(self, responses: list[str]) -> None:
        self._inner = ScriptedBackend.from_responses(responses)
        self.prompts: list[str] = []

    def complete(self, messages):
        self.prompts.append("\n".join(m["content"] for m in messages))
        return self._inner.complete(messages)


class TestRenderPrompt:
    def test_substitution(self):
        messages = render_prompt(
            DEFAULT_TEMPLATES["critic"],
            {
                "workflow_info": "w",
                "signal_name": "wb_rst_i",
                "specification_text": "reset description",
                "assertions": "assert property (x);",
                "syntax_log": "[1] PASS",
            },
        )
        assert len(messages) == 2
        assert messages[0]["role"] == "system"
        assert "wb_rst_i" in messages[1]["content"]

    def test_missing_placeholder_named(self):
        with pytest.raises(RenderError) as err:
            render_prompt(
                DEFAULT_TEMPLATES["critic"],
                {"workflow_info": "w", "signal_name": "s", "specification_text": "t",
                 "syntax_log": ""},
            )
        assert err.value.placeholder == "assertions"

    def test_no_other_transformation(self):
        # braces in substituted values and non-placeholder braces pass through
        template = PromptTemplate("sva", "sys", "A {x} B {NOT_A_KEY} C {3{SIG}} D")
        messages = render_prompt(template, {"x": "a && {b, c}"})
        assert messages[1]["content"] == "A a && {b, c} B {NOT_A_KEY} C {3{SIG}} D"

    def test_rendering_is_pure(self):
        context = {"specification_text": "s", "signal_name": "n"}
        first = render_prompt(DEFAULT_TEMPLATES["spec_analyzer"], context)
        second = render_prompt(DEFAULT_TEMPLATES["spec_analyzer"], context)
        assert first == second


class TestTemplateFidelity:
    """The shipped templates carry the role-defining anchor phrases."""

    def test_signal_mapper_anchor(self):
        assert DEFAULT_TEMPLATES["signal_mapper"].system_text.startswith(
            "Please act as a signal name mapping tool"
        )

    def test_spec_analyzer_anchor(self):
        assert "professional VLSI specification analyzer" in DEFAULT_TEMPLATES[
            "spec_analyzer"
        ].system_text

    def test_waveform_analyzer_anchor(self):
        system = DEFAULT_TEMPLATES["waveform_analyzer"].system_text
        assert "professional waveform analyzer" in system
        for section in (
            "[Timing Relationship]",
            "[Causal Dependencies]",
            "[State Transitions]",
        ):
            assert section in system

    def test_critic_anchors(self):
        system = DEFAULT_TEMPLATES["critic"].system_text
        assert system.startswith("Please act as a critic to a professional")
        for anchor in ("CORRECTNESS", "CONSISTENCY", "COMPLETENESS"):
            assert anchor in system

    def test_sva_anchors(self):
        system = DEFAULT_TEMPLATES["sva_refine"].system_text
        assert "write all the corresponding SVAs" in system
        assert "[width] [connectivity] [function]" in system
        for anchor in ("CORRECTNESS", "CONSISTENCY", "COMPLETENESS"):
            assert anchor in system

    def test_correction_anchor(self):
        assert "with their syntax issue fixed" in DEFAULT_TEMPLATES[
            "syntax_correction"
        ].user_text_template

    def test_deduplication_anchor(self):
        assert "Extract all unique and valid assertions" in DEFAULT_TEMPLATES[
            "deduplication"
        ].user_text_template


class TestParseScore:
    def test_last_marker_wins(self):
        assert parse_score("...[SCORE: 40]... [SCORE: 55]") == 55.0

    def test_case_insensitive_boundary(self):
        assert parse_score("[score: -100]") == -100.0

    def test_out_of_range(self):
        with pytest.raises(ScoreRangeError):
            parse_score("[SCORE: 150]")

    def test_no_marker(self):
        with pytest.raises(ScoreParseError) as err:
            parse_score("no score here")
        assert err.value.raw_text == "no score here"

    def test_decimals_and_sign(self):
        assert parse_score("[SCORE: +12.5]") == 12.5


class TestSuppression:
    def test_above_cap_clamped(self, params):
        assert suppress_score(97.0, params) == 95.0

    def test_in_range_untouched(self, params):
        assert suppress_score(-20.0, params) == -20.0

    @given(score=st.floats(min_value=-100, max_value=100, allow_nan=False))
    @settings(max_examples=200, deadline=None)
    def test_suppression_law(self, score):
        params = SearchParams()
        suppressed = suppress_score(score, params)
        assert suppressed == min(score, 95.0)
        assert suppressed <= 95.0


class TestExtractAssertions:
    def test_assertion_listing_single_unit(self):
        units = extract_assertions(fenced(ASSERTION_1))
        assert len(units) == 1
        assert "mtime_intr_p" in units[0]

    def test_two_bare_asserts(self):
        text = fenced("assert property (a);\nassert property (b);")
        assert len(extract_assertions(text)) == 2

    def test_no_fences(self):
        assert extract_assertions("just prose, no code") == []

    def test_multiline_assert_statement(self):
        unit = "assert property (@(posedge clk)\n  a |-> b);"
        assert extract_assertions(fenced(unit)) == [unit]

    def test_property_without_assert_is_a_unit(self):
        prop = "property p;\n  a |-> b;\nendproperty"
        assert extract_assertions(fenced(prop)) == [prop]

    def test_commentary_conventions(self):
        answer = parse_answer("prose only")
        assert answer.assertions == []
        assert answer.commentary == "prose only"
        answer2 = parse_answer("before\n" + fenced(VALID_BARE_ASSERT) + "\nafter")
        assert len(answer2.assertions) == 1
        assert "before" in answer2.commentary and "after" in answer2.commentary
        assert VALID_BARE_ASSERT not in answer2.commentary

    def test_split_units_plain_text(self):
        units = split_assertion_units(VALID_PROPERTY_UNIT + "\n" + VALID_BARE_ASSERT)
        assert len(units) == 2


class TestNormalization:
    def test_comments_whitespace_semicolons(self):
        a = "assert property (x);  // trailing comment"
        b = "assert  property\n(x)"
        assert normalize_assertion(a) == normalize_assertion(b)

    def test_block_comment_stripped(self):
        assert normalize_assertion("assert /* note */ property (x);") == "assert property (x)"

    def test_strings_preserved(self):
        a = 'assert property (x) else $error("a  b");'
        assert '"a  b"' in normalize_assertion(a)

    def test_merge_drops_byte_identical(self):
        pool = [VALID_BARE_ASSERT, VALID_BARE_ASSERT]
        assert merge_normalized(pool) == [VALID_BARE_ASSERT]

    def test_merge_keeps_first_spelling(self):
        pool = ["assert property (x);", "assert property (x)"]
        assert merge_normalized(pool) == ["assert property (x);"]


class TestGenerateWeakAnswer:
    def test_single_assertion(self, signal):
        backend = ScriptedBackend.from_responses([fenced(VALID_BARE_ASSERT)])
        answer = generate_weak_answer(backend, signal, workflow="w")
        assert answer.assertions == [VALID_BARE_ASSERT]

    def test_prose_reply_gives_degenerate_answer(self, signal):
        backend = ScriptedBackend.from_responses(["cannot comply"])
        answer = generate_weak_answer(backend, signal, workflow="w")
        assert answer.assertions == []
        assert answer.commentary == "cannot comply"

    def test_exhausted_backend(self, signal):
        backend = ScriptedBackend.from_responses([])
        with pytest.raises(BackendError):
            generate_weak_answer(backend, signal, workflow="w")

    def test_prompt_carries_brevity_instruction(self, signal):
        backend = RecordingBackend([fenced(VALID_BARE_ASSERT)])
        generate_weak_answer(backend, signal, workflow="w")
        assert "short" in backend.prompts[0]


class TestCritique:
    def test_suppression_applied(self, signal, params):
        backend = ScriptedBackend.from_responses([critic_reply(97)])
        result = critique(
            backend, signal, signal.describe(), AnswerContent(assertions=["a"]),
            "", params,
        )
        assert isinstance(result, CritiqueResult)
        assert result.raw_score == 97.0
        assert result.suppressed_score == 95.0

    def test_in_range_score(self, signal, params):
        backend = ScriptedBackend.from_responses([critic_reply(-20)])
        result = critique(
            backend, signal, signal.describe(), AnswerContent(assertions=["a"]),
            "", params,
        )
        assert result.suppressed_score == -20.0

    def test_missing_marker(self, signal, params):
        backend = ScriptedBackend.from_responses(["no score at all"])
        with pytest.raises(ScoreParseError):
            critique(
                backend, signal, signal.describe(), AnswerContent(assertions=["a"]),
                "", params,
            )

    def test_feedback_is_full_reply(self, signal, params):
        reply = critic_reply(10, feedback="The reset polarity is wrong.")
        backend = ScriptedBackend.from_responses([reply])
        result = critique(
            backend, signal, signal.describe(), AnswerContent(assertions=["a"]),
            "", params,
        )
        assert result.feedback == reply


class TestRefine:
    def test_three_assertions(self, signal):
        reply = fenced(VALID_PROPERTY_UNIT, VALID_BARE_ASSERT, INVALID_ASSERT)
        backend = ScriptedBackend.from_responses([reply])
        answer = refine(
            backend, signal, AnswerContent(assertions=["assert property (a);"]),
            "feedback", "", "", "w",
        )
        assert len(answer.assertions) == 3

    def test_empty_feedback_channels_allowed(self, signal):
        backend = ScriptedBackend.from_responses([fenced(VALID_BARE_ASSERT)])
        answer = refine(backend, signal, AnswerContent(), "", "", "", "")
        assert len(answer.assertions) == 1

    def test_prompt_contains_prior_assertions(self, signal):
        backend = RecordingBackend([fenced(VALID_BARE_ASSERT)])
        prior = AnswerContent(assertions=["assert property (q_old);"])
        refine(backend, signal, prior, "fb", "log", "rag", "w")
        assert "assert property (q_old);" in backend.prompts[0]

    def test_input_answer_not_mutated(self, signal):
        backend = ScriptedBackend.from_responses([fenced(VALID_BARE_ASSERT)])
        prior = AnswerContent(assertions=["assert property (q_old);"], commentary="c")
        refine(backend, signal, prior, "fb", "log", "rag", "w")
        assert prior.assertions == ["assert property (q_old);"]
        assert prior.commentary == "c"


def _bad_records() -> list[AssertionRecord]:
    checker = BuiltinChecker()
    records = [
        AssertionRecord(text=INVALID_ASSERT, signal="s"),
        AssertionRecord(text="property p; a |-> ; endproperty", signal="s"),
    ]
    for r in records:
        r.apply_check(checker.check(r.text))
    return records


class TestCorrectSyntax:
    def test_empty_input_no_backend_call(self):
        backend = ScriptedBackend.from_responses([])  # would raise if called
        assert correct_syntax(backend, [], "spec", "s") == []

    def test_two_fixed(self):
        backend = ScriptedBackend.from_responses(
            [fenced("assert property (a);", "assert property (b);")]
        )
        fixed = correct_syntax(backend, _bad_records(), "spec", "s")
        assert len(fixed) == 2

    def test_prompt_contains_diagnostics_verbatim(self):
        backend = RecordingBackend([fenced("assert property (a);")])
        records = _bad_records()
        correct_syntax(backend, records, "spec", "s")
        for record in records:
            for diagnostic in record.diagnostics:
                assert diagnostic.message in backend.prompts[0]

    def test_record_without_diagnostics_rejected(self):
        backend = ScriptedBackend.from_responses([])
        with pytest.raises(ValueError):
            correct_syntax(backend, [AssertionRecord(text="assert property (a);")], "spec", "s")


class TestDeduplicate:
    def test_singleton_skips_backend(self):
        backend = ScriptedBackend.from_responses([])
        kept, warnings = deduplicate(backend, ["assert property (a);"], "spec", "s")
        assert kept == ["assert property (a);"]
        assert warnings == []

    def test_subset_retained_in_pool_order(self):
        pool = ["assert property (a);", "assert property (b);", "assert property (c);"]
        backend = ScriptedBackend.from_responses(
            [fenced("assert property (c);", "assert property (a);")]
        )
        kept, warnings = deduplicate(backend, pool, "spec", "s")
        assert kept == ["assert property (a);", "assert property (c);"]
        assert warnings == []

    def test_non_subset_reply_rejected(self):
        pool = ["assert property (a);", "assert property (b);"]
        backend = ScriptedBackend.from_responses([fenced("assert property (zzz);")])
        kept, warnings = deduplicate(backend, pool, "spec", "s")
        assert kept == pool
        assert len(warnings) == 1

    def test_normalized_match_keeps_pool_spelling(self):
        pool = ["assert property (a);  // keep me"]
        pool.append("assert property (b);")
        backend = ScriptedBackend.from_responses([fenced("assert  property (a)")])
        kept, _ = deduplicate(backend, pool, "spec", "s")
        assert kept == ["assert property (a);  // keep me"]


class TestScriptedBackend:
    def test_keyed_entries(self):
        backend = ScriptedBackend(
            [
                # keyed entry for another signal is skipped over
                ScriptEntry(response="for-b", match="signal-b"),
                ScriptEntry(response="for-a", match="signal-a"),
            ]
        )
        assert backend.complete([{"role": "user", "content": "about signal-a"}]) == "for-a"
        assert backend.complete([{"role": "user", "content": "about signal-b"}]) == "for-b"

    def test_exhaustion_raises(self):
        backend = ScriptedBackend.from_responses(["only one"])
        backend.complete([{"role": "user", "content": "x"}])
        with pytest.raises(BackendError):
            backend.complete([{"role": "user", "content": "x"}])
