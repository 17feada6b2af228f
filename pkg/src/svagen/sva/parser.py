"""Recursive-descent parser for the SVA subset.

Covers property declarations with clocking events and `disable iff`,
implication (|->, |=>), sequence and/or/not, bounded and unbounded delays
(##N, ##[m:n], ##[m:$]), repetition ([*n], [*m:n]), the usual boolean,
relational, shift and arithmetic operator ladder, concatenation and
replication, indexing and part-selects, and system-function calls.

The parser is permissive where RTL context would be needed: identifier
references are never resolved, so unknown names lint as warnings rather
than errors. Every AST node re-serializes to the exact token stream it was
parsed from (checked by the round-trip tests).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from svagen.sva.tokens import Token, tokenize

DIAGNOSTIC_VERSION = 1

KNOWN_SYSTEM_FUNCTIONS = frozenset(
    {
        "$rose",
        "$fell",
        "$stable",
        "$changed",
        "$past",
        "$sampled",
        "$onehot",
        "$onehot0",
        "$countones",
        "$isunknown",
        "$error",
        "$warning",
        "$info",
        "$fatal",
        "$display",
    }
)

TokenSig = tuple[str, str]

# Sampled-value and counting functions need an operand to sample.
_MIN_CALL_ARITY = {
    "$rose": 1,
    "$fell": 1,
    "$stable": 1,
    "$changed": 1,
    "$sampled": 1,
    "$past": 1,
    "$onehot": 1,
    "$onehot0": 1,
    "$countones": 1,
    "$isunknown": 1,
}


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    line: int
    column: int
    code: str
    message: str

    def render(self) -> str:
        return f"{self.line}:{self.column} {self.severity} [{self.code}] {self.message}"


def _kw(text: str) -> TokenSig:
    return ("keyword", text)


def _op(text: str) -> TokenSig:
    return ("operator", text)


def _p(text: str) -> TokenSig:
    return ("punctuation", text)


# --------------------------------------------------------------------------
# AST nodes. Each node serializes back to tokens via to_tokens().


@dataclass
class Identifier:
    name: str

    def to_tokens(self) -> list[TokenSig]:
        return [("identifier", self.name)]


@dataclass
class Number:
    text: str

    def to_tokens(self) -> list[TokenSig]:
        return [("number", self.text)]


@dataclass
class StringLit:
    text: str  # includes the quotes

    def to_tokens(self) -> list[TokenSig]:
        return [("string", self.text)]


@dataclass
class Paren:
    inner: object

    def to_tokens(self) -> list[TokenSig]:
        return [_p("(")] + self.inner.to_tokens() + [_p(")")]


@dataclass
class Unary:
    op: str  # ! ~ - + & | ^ or keyword "not"
    operand: object

    def to_tokens(self) -> list[TokenSig]:
        head = _kw(self.op) if self.op == "not" else _op(self.op)
        return [head] + self.operand.to_tokens()


@dataclass
class Binary:
    op: str  # operator lexeme, or keyword "and"/"or"
    left: object
    right: object

    def to_tokens(self) -> list[TokenSig]:
        mid = _kw(self.op) if self.op in ("and", "or") else _op(self.op)
        return self.left.to_tokens() + [mid] + self.right.to_tokens()


@dataclass
class Ternary:
    cond: object
    if_true: object
    if_false: object

    def to_tokens(self) -> list[TokenSig]:
        return (
            self.cond.to_tokens()
            + [_op("?")]
            + self.if_true.to_tokens()
            + [_op(":")]
            + self.if_false.to_tokens()
        )


@dataclass
class Implication:
    op: str  # "|->" | "|=>"
    antecedent: object
    consequent: object

    def to_tokens(self) -> list[TokenSig]:
        return self.antecedent.to_tokens() + [_op(self.op)] + self.consequent.to_tokens()


@dataclass
class DelayBounds:
    low: str  # number lexeme
    high: str | None = None  # number lexeme or "$"; None for a plain ##N
    ranged: bool = False

    def to_tokens(self) -> list[TokenSig]:
        if not self.ranged:
            return [("number", self.low)]
        high = ("identifier", "$") if self.high == "$" else ("number", self.high)
        return [_p("["), ("number", self.low), _op(":"), high, _p("]")]


@dataclass
class Delay:
    """Sequence delay: `lhs ##bounds rhs`; lhs is None for a leading delay."""

    lhs: object | None
    bounds: DelayBounds
    rhs: object

    def to_tokens(self) -> list[TokenSig]:
        out: list[TokenSig] = []
        if self.lhs is not None:
            out += self.lhs.to_tokens()
        out.append(_op("##"))
        out += self.bounds.to_tokens()
        out += self.rhs.to_tokens()
        return out


@dataclass
class Repetition:
    """Consecutive repetition suffix: expr[*], expr[*n], expr[*m:n]."""

    operand: object
    low: str | None = None
    high: str | None = None  # number lexeme or "$"

    def to_tokens(self) -> list[TokenSig]:
        out = self.operand.to_tokens() + [_p("["), _op("*")]
        if self.low is not None:
            out.append(("number", self.low))
            if self.high is not None:
                high = ("identifier", "$") if self.high == "$" else ("number", self.high)
                out += [_op(":"), high]
        out.append(_p("]"))
        return out


@dataclass
class Index:
    base: object
    low: object
    high: object | None = None  # part-select when present

    def to_tokens(self) -> list[TokenSig]:
        out = self.base.to_tokens() + [_p("[")] + self.low.to_tokens()
        if self.high is not None:
            out += [_op(":")] + self.high.to_tokens()
        out.append(_p("]"))
        return out


@dataclass
class Call:
    name: str
    args: list = field(default_factory=list)
    parenthesized: bool = True  # $fatal; is a call without parens

    def to_tokens(self) -> list[TokenSig]:
        out: list[TokenSig] = [("identifier", self.name)]
        if self.parenthesized:
            out.append(_p("("))
            for i, a in enumerate(self.args):
                if i:
                    out.append(_p(","))
                out += a.to_tokens()
            out.append(_p(")"))
        return out


@dataclass
class Concat:
    parts: list

    def to_tokens(self) -> list[TokenSig]:
        out: list[TokenSig] = [_p("{")]
        for i, part in enumerate(self.parts):
            if i:
                out.append(_p(","))
            out += part.to_tokens()
        out.append(_p("}"))
        return out


@dataclass
class Replication:
    count: object
    inner: Concat

    def to_tokens(self) -> list[TokenSig]:
        return [_p("{")] + self.count.to_tokens() + self.inner.to_tokens() + [_p("}")]


@dataclass
class Clocking:
    edge: str  # "posedge" | "negedge"; the subset requires an explicit edge
    expr: object

    def to_tokens(self) -> list[TokenSig]:
        return (
            [_p("@"), _p("("), _kw(self.edge)]
            + self.expr.to_tokens()
            + [_p(")")]
        )


@dataclass
class PropertySpec:
    clocking: Clocking | None
    disable_expr: object | None
    body: object

    def to_tokens(self) -> list[TokenSig]:
        out: list[TokenSig] = []
        if self.clocking is not None:
            out += self.clocking.to_tokens()
        if self.disable_expr is not None:
            out += [_kw("disable"), _kw("iff"), _p("(")]
            out += self.disable_expr.to_tokens()
            out.append(_p(")"))
        out += self.body.to_tokens()
        return out


@dataclass
class AssertStmt:
    kind = "assert_stmt"
    spec: PropertySpec
    label: str | None = None
    verb: str = "assert"  # assert | assume | cover
    else_action: Call | None = None

    @property
    def name(self) -> str | None:
        return self.label

    @property
    def clocking(self) -> Clocking | None:
        return self.spec.clocking

    @property
    def disable_expr(self):
        return self.spec.disable_expr

    @property
    def body(self):
        return self.spec.body

    def to_tokens(self) -> list[TokenSig]:
        out: list[TokenSig] = []
        if self.label:
            out += [("identifier", self.label), _op(":")]
        out += [_kw(self.verb), _kw("property"), _p("(")]
        out += self.spec.to_tokens()
        out.append(_p(")"))
        if self.else_action is not None:
            out += [_kw("else")] + self.else_action.to_tokens()
        out.append(_p(";"))
        return out


@dataclass
class PropertyDecl:
    kind = "property_decl"
    name: str
    spec: PropertySpec
    attached_assert: AssertStmt | None = None

    @property
    def clocking(self) -> Clocking | None:
        return self.spec.clocking

    @property
    def disable_expr(self):
        return self.spec.disable_expr

    @property
    def body(self):
        return self.spec.body

    def to_tokens(self) -> list[TokenSig]:
        out: list[TokenSig] = [_kw("property"), ("identifier", self.name), _p(";")]
        out += self.spec.to_tokens()
        out.append(_p(";"))
        out.append(_kw("endproperty"))
        if self.attached_assert is not None:
            out += self.attached_assert.to_tokens()
        return out


SvaAst = PropertyDecl | AssertStmt


# --------------------------------------------------------------------------
# Parser


class _ParseError(Exception):
    def __init__(self, diagnostic: Diagnostic) -> None:
        super().__init__(diagnostic.message)
        self.diagnostic = diagnostic


class _Parser:
    def __init__(self, tokens: list[Token], source_lines: int) -> None:
        self.tokens = tokens
        self.pos = 0
        self.diagnostics: list[Diagnostic] = []
        self._eof_line = tokens[-1].line if tokens else max(source_lines, 1)
        self._eof_col = tokens[-1].column + len(tokens[-1].lexeme) if tokens else 1

    # -- token helpers

    def peek(self, offset: int = 0) -> Token | None:
        i = self.pos + offset
        return self.tokens[i] if i < len(self.tokens) else None

    def at(self, kind: str, lexeme: str | None = None, offset: int = 0) -> bool:
        t = self.peek(offset)
        if t is None or t.kind != kind:
            return False
        return lexeme is None or t.lexeme == lexeme

    def take(self) -> Token:
        t = self.peek()
        if t is None:
            raise self.error("parse-unexpected-eof", "unexpected end of input")
        self.pos += 1
        if t.kind == "error":
            raise _ParseError(
                Diagnostic("error", t.line, t.column, "lex-error", t.lexeme)
            )
        return t

    def expect(self, kind: str, lexeme: str, what: str | None = None) -> Token:
        t = self.peek()
        if t is None or t.kind == "error":
            if t is not None:
                self.pos += 1
                raise _ParseError(
                    Diagnostic("error", t.line, t.column, "lex-error", t.lexeme)
                )
            raise self.error(
                "parse-expected", f"expected {what or lexeme!r} but reached end of input"
            )
        if t.kind != kind or t.lexeme != lexeme:
            raise self.error(
                "parse-expected",
                f"expected {what or lexeme!r}, found {t.lexeme!r}",
                t,
            )
        self.pos += 1
        return t

    def error(self, code: str, message: str, token: Token | None = None) -> _ParseError:
        if token is None:
            token = self.peek()
        if token is not None:
            line, col = token.line, token.column
        else:
            line, col = self._eof_line, self._eof_col
        return _ParseError(Diagnostic("error", line, col, code, message))

    def warn(self, code: str, message: str, token: Token | None = None) -> None:
        line = token.line if token else self._eof_line
        col = token.column if token else self._eof_col
        self.diagnostics.append(Diagnostic("warning", line, col, code, message))

    # -- entry points

    def parse_units(self) -> list[SvaAst]:
        units: list[SvaAst] = []
        while self.peek() is not None:
            start = self.pos
            try:
                units.append(self.parse_unit())
            except _ParseError as err:
                self.diagnostics.append(err.diagnostic)
                if self.pos == start:
                    self.pos += 1
                self._resync()
        self._lint(units)
        return units

    def parse_unit(self) -> SvaAst:
        if self.at("keyword", "property"):
            return self.parse_property_decl()
        if (
            self.at("keyword", "assert")
            or self.at("keyword", "assume")
            or self.at("keyword", "cover")
            or (self.at("identifier") and self.at("operator", ":", 1))
        ):
            return self.parse_assert_stmt()
        t = self.peek()
        raise self.error(
            "parse-expected",
            f"expected 'property' or an assert statement, found {t.lexeme!r}"
            if t
            else "expected 'property' or an assert statement",
            t,
        )

    def _resync(self) -> None:
        """Skip ahead to a plausible unit boundary after an error."""
        while self.peek() is not None:
            t = self.peek()
            if t.kind == "keyword" and t.lexeme in ("property", "assert", "assume", "cover"):
                return
            self.pos += 1
            if t.kind == "punctuation" and t.lexeme == ";":
                # swallow an endproperty closing the broken declaration
                if self.at("keyword", "endproperty"):
                    self.pos += 1
                return
            if t.kind == "keyword" and t.lexeme == "endproperty":
                return

    # -- declarations and statements

    def parse_property_decl(self) -> PropertyDecl:
        self.expect("keyword", "property")
        name_tok = self.peek()
        if name_tok is None or name_tok.kind != "identifier":
            raise self.error("parse-expected", "expected property name after 'property'")
        self.take()
        if self.at("punctuation", "("):
            raise self.error(
                "parse-unsupported",
                "property port lists are not supported by this checker",
            )
        self.expect("punctuation", ";", "';' after property name")
        spec = self.parse_property_spec()
        self.expect("punctuation", ";", "';' after the property body")
        self.expect("keyword", "endproperty")
        decl = PropertyDecl(name=name_tok.lexeme, spec=spec)
        if self._at_assert_for():
            decl.attached_assert = self.parse_assert_stmt()
        return decl

    def _at_assert_for(self) -> bool:
        if self.at("keyword", "assert") or self.at("keyword", "assume") or self.at("keyword", "cover"):
            return True
        return self.at("identifier") and self.at("operator", ":", 1)

    def parse_assert_stmt(self) -> AssertStmt:
        label = None
        if self.at("identifier") and self.at("operator", ":", 1):
            label = self.take().lexeme
            self.take()  # ':'
        verb_tok = self.peek()
        if verb_tok is None or verb_tok.kind != "keyword" or verb_tok.lexeme not in (
            "assert",
            "assume",
            "cover",
        ):
            raise self.error("parse-expected", "expected 'assert', 'assume' or 'cover'")
        self.take()
        self.expect("keyword", "property", "'property' after 'assert'")
        self.expect("punctuation", "(")
        spec = self.parse_property_spec()
        self.expect("punctuation", ")")
        else_action = None
        if self.at("keyword", "else"):
            self.take()
            else_action = self.parse_action_call()
        self.expect("punctuation", ";", "';' terminating the assert statement")
        return AssertStmt(spec=spec, label=label, verb=verb_tok.lexeme, else_action=else_action)

    def parse_action_call(self) -> Call:
        t = self.peek()
        if t is None or t.kind != "identifier":
            raise self.error("parse-expected", "expected a task call after 'else'")
        self.take()
        if not t.lexeme.startswith("$"):
            self.warn(
                "lint-action-call",
                f"action block calls a non-system task {t.lexeme!r}",
                t,
            )
        args: list = []
        parenthesized = False
        if self.at("punctuation", "("):
            parenthesized = True
            self.take()
            if not self.at("punctuation", ")"):
                args.append(self.parse_expr())
                while self.at("punctuation", ","):
                    self.take()
                    args.append(self.parse_expr())
            self.expect("punctuation", ")")
        return Call(name=t.lexeme, args=args, parenthesized=parenthesized)

    def parse_property_spec(self) -> PropertySpec:
        clocking = None
        if self.at("punctuation", "@"):
            clocking = self.parse_clocking()
        disable_expr = None
        if self.at("keyword", "disable"):
            self.take()
            self.expect("keyword", "iff", "'iff' after 'disable'")
            self.expect("punctuation", "(")
            disable_expr = self.parse_expr()
            self.expect("punctuation", ")")
        body = self.parse_property_expr()
        return PropertySpec(clocking=clocking, disable_expr=disable_expr, body=body)

    def parse_clocking(self) -> Clocking:
        self.expect("punctuation", "@")
        self.expect("punctuation", "(")
        if not (self.at("keyword", "posedge") or self.at("keyword", "negedge")):
            raise self.error(
                "parse-expected", "expected 'posedge' or 'negedge' in clocking event"
            )
        edge = self.take().lexeme
        expr = self.parse_expr()
        self.expect("punctuation", ")", "')' closing the clocking event")
        return Clocking(edge=edge, expr=expr)

    # -- property / sequence expression ladder (lowest precedence first)

    def parse_property_expr(self):
        lhs = self.parse_prop_or()
        t = self.peek()
        if t is not None and t.kind == "operator" and t.lexeme in ("|->", "|=>"):
            self.take()
            before = self.pos
            try:
                rhs = self.parse_property_expr()  # right associative
            except _ParseError as err:
                if self.pos == before:
                    # nothing consumable followed the implication operator
                    d = err.diagnostic
                    raise _ParseError(
                        Diagnostic(
                            "error",
                            d.line,
                            d.column,
                            "parse-expected",
                            f"expected expression after {t.lexeme}",
                        )
                    ) from err
                raise
            return Implication(op=t.lexeme, antecedent=lhs, consequent=rhs)
        return lhs

    def parse_prop_or(self):
        node = self.parse_prop_and()
        while self.at("keyword", "or"):
            self.take()
            node = Binary(op="or", left=node, right=self.parse_prop_and())
        return node

    def parse_prop_and(self):
        node = self.parse_prop_not()
        while self.at("keyword", "and"):
            self.take()
            node = Binary(op="and", left=node, right=self.parse_prop_not())
        return node

    def parse_prop_not(self):
        if self.at("keyword", "not"):
            self.take()
            return Unary(op="not", operand=self.parse_prop_not())
        return self.parse_delay_seq()

    def parse_delay_seq(self):
        if self.at("operator", "##"):
            self.take()
            bounds = self.parse_delay_bounds()
            node = Delay(lhs=None, bounds=bounds, rhs=self.parse_expr())
        else:
            node = self.parse_expr()
        while self.at("operator", "##"):
            self.take()
            bounds = self.parse_delay_bounds()
            node = Delay(lhs=node, bounds=bounds, rhs=self.parse_expr())
        return node

    def parse_delay_bounds(self) -> DelayBounds:
        if self.at("number"):
            return DelayBounds(low=self.take().lexeme)
        if self.at("punctuation", "["):
            self.take()
            low_tok = self.peek()
            if low_tok is None or low_tok.kind != "number":
                raise self.error("parse-expected", "expected lower delay bound")
            self.take()
            self.expect("operator", ":", "':' in delay range")
            high_tok = self.peek()
            if high_tok is not None and high_tok.kind == "number":
                high = self.take().lexeme
            elif high_tok is not None and high_tok.kind == "identifier" and high_tok.lexeme == "$":
                self.take()
                high = "$"
            else:
                raise self.error("parse-expected", "expected upper delay bound or '$'")
            self.expect("punctuation", "]")
            return DelayBounds(low=low_tok.lexeme, high=high, ranged=True)
        raise self.error("parse-expected", "expected delay count or '[' after '##'")

    # -- boolean expression ladder

    def parse_expr(self):
        cond = self.parse_lor()
        if self.at("operator", "?"):
            self.take()
            if_true = self.parse_expr()
            self.expect("operator", ":", "':' in conditional expression")
            if_false = self.parse_expr()
            return Ternary(cond=cond, if_true=if_true, if_false=if_false)
        return cond

    def _binary_level(self, sub, ops: tuple[str, ...]):
        node = sub()
        while True:
            t = self.peek()
            if t is None or t.kind != "operator" or t.lexeme not in ops:
                return node
            self.take()
            node = Binary(op=t.lexeme, left=node, right=sub())

    def parse_lor(self):
        return self._binary_level(self.parse_land, ("||",))

    def parse_land(self):
        return self._binary_level(self.parse_bor, ("&&",))

    def parse_bor(self):
        return self._binary_level(self.parse_bxor, ("|",))

    def parse_bxor(self):
        return self._binary_level(self.parse_band, ("^", "~^", "^~"))

    def parse_band(self):
        return self._binary_level(self.parse_eq, ("&",))

    def parse_eq(self):
        return self._binary_level(self.parse_rel, ("==", "!=", "===", "!=="))

    def parse_rel(self):
        return self._binary_level(self.parse_shift, ("<", "<=", ">", ">="))

    def parse_shift(self):
        return self._binary_level(self.parse_add, ("<<", ">>", "<<<", ">>>"))

    def parse_add(self):
        return self._binary_level(self.parse_mul, ("+", "-"))

    def parse_mul(self):
        return self._binary_level(self.parse_unary, ("*", "/", "%"))

    def parse_unary(self):
        t = self.peek()
        if t is not None and t.kind == "operator" and t.lexeme in ("!", "~", "-", "+", "&", "|", "^"):
            self.take()
            return Unary(op=t.lexeme, operand=self.parse_unary())
        return self.parse_postfix()

    def parse_postfix(self):
        node = self.parse_primary()
        while self.at("punctuation", "["):
            if self.at("operator", "*", 1):
                node = self.parse_repetition(node)
                continue
            self.take()
            low = self.parse_expr()
            high = None
            if self.at("operator", ":"):
                self.take()
                high = self.parse_expr()
            self.expect("punctuation", "]", "']' closing the index")
            node = Index(base=node, low=low, high=high)
        return node

    def parse_repetition(self, operand) -> Repetition:
        self.expect("punctuation", "[")
        self.expect("operator", "*")
        low = None
        high = None
        if self.at("number"):
            low = self.take().lexeme
            if self.at("operator", ":"):
                self.take()
                t = self.peek()
                if t is not None and t.kind == "number":
                    high = self.take().lexeme
                elif t is not None and t.kind == "identifier" and t.lexeme == "$":
                    self.take()
                    high = "$"
                else:
                    raise self.error("parse-expected", "expected repetition upper bound or '$'")
        self.expect("punctuation", "]", "']' closing the repetition")
        return Repetition(operand=operand, low=low, high=high)

    def parse_primary(self):
        t = self.peek()
        if t is None:
            raise self.error("parse-expected", "expected an expression")
        if t.kind == "error":
            self.pos += 1
            raise _ParseError(Diagnostic("error", t.line, t.column, "lex-error", t.lexeme))
        if t.kind == "punctuation" and t.lexeme == "(":
            self.take()
            inner = self.parse_property_expr()
            self.expect("punctuation", ")", "')' closing the parenthesized expression")
            return Paren(inner=inner)
        if t.kind == "punctuation" and t.lexeme == "{":
            return self.parse_concat()
        if t.kind == "number":
            self.take()
            return Number(text=t.lexeme)
        if t.kind == "string":
            self.take()
            return StringLit(text=t.lexeme)
        if t.kind == "identifier":
            self.take()
            if self.at("punctuation", "("):
                if not t.lexeme.startswith("$"):
                    # no sequence/property declarations in the subset, so an
                    # identifier call can never resolve
                    raise self.error(
                        "parse-unsupported",
                        f"call of {t.lexeme!r}: only system functions may be called",
                        t,
                    )
                if t.lexeme not in KNOWN_SYSTEM_FUNCTIONS:
                    self.warn(
                        "lint-unknown-system-function",
                        f"unknown system function {t.lexeme!r}",
                        t,
                    )
                self.take()
                args: list = []
                if not self.at("punctuation", ")"):
                    args.append(self.parse_expr())
                    while self.at("punctuation", ","):
                        self.take()
                        args.append(self.parse_expr())
                self.expect("punctuation", ")", "')' closing the call")
                if len(args) < _MIN_CALL_ARITY.get(t.lexeme, 0):
                    raise self.error(
                        "parse-arity",
                        f"{t.lexeme} expects at least {_MIN_CALL_ARITY[t.lexeme]} argument(s)",
                        t,
                    )
                return Call(name=t.lexeme, args=args)
            return Identifier(name=t.lexeme)
        raise self.error(
            "parse-expected", f"expected an expression, found {t.lexeme!r}", t
        )

    def parse_concat(self):
        self.expect("punctuation", "{")
        first = self.parse_expr()
        if self.at("punctuation", "{"):
            inner = self.parse_concat()
            self.expect("punctuation", "}", "'}' closing the replication")
            return Replication(count=first, inner=inner)
        parts = [first]
        while self.at("punctuation", ","):
            self.take()
            parts.append(self.parse_expr())
        self.expect("punctuation", "}", "'}' closing the concatenation")
        return Concat(parts=parts)

    # -- lint pass

    def _lint(self, units: list[SvaAst]) -> None:
        declared = {u.name for u in units if isinstance(u, PropertyDecl)}
        attached = [u.attached_assert for u in units if isinstance(u, PropertyDecl) and u.attached_assert]
        for stmt in [u for u in units if isinstance(u, AssertStmt)] + attached:
            spec = stmt.spec
            if (
                isinstance(spec.body, Identifier)
                and spec.clocking is None
                and spec.disable_expr is None
                and spec.body.name not in declared
            ):
                self.warn(
                    "lint-unresolved-property",
                    f"unresolved property reference {spec.body.name!r}",
                )


# --------------------------------------------------------------------------
# Public API


def parse_units(source: str) -> tuple[list[SvaAst], list[Diagnostic]]:
    """Parse a file of one or more assertion units.

    Returns (units, diagnostics). A unit is a property declaration (with any
    immediately-following assert statement attached) or a bare assert
    statement. Errors never abort the parse; they land in diagnostics and the
    parser resynchronizes at the next plausible boundary.
    """
    tokens = tokenize(source)
    parser = _Parser(tokens, source.count("\n") + 1)
    units = parser.parse_units()
    return units, parser.diagnostics


def parse_assertion(source: str) -> tuple[SvaAst | None, list[Diagnostic]]:
    """Parse exactly one assertion unit.

    Returns (ast, diagnostics); ast is None when error-severity diagnostics
    were produced. Text containing more than one unit is rejected, since a
    unit is the granularity the checker and the combination stage work at.
    """
    units, diagnostics = parse_units(source)
    if any(d.severity == "error" for d in diagnostics):
        return None, diagnostics
    if not units:
        diagnostics = diagnostics + [
            Diagnostic("error", 1, 1, "parse-empty", "no assertion unit found")
        ]
        return None, diagnostics
    if len(units) > 1:
        diagnostics = diagnostics + [
            Diagnostic(
                "error",
                1,
                1,
                "parse-multiple-units",
                f"expected a single assertion unit, found {len(units)}",
            )
        ]
        return None, diagnostics
    return units[0], diagnostics


def units_to_token_signature(units: list[SvaAst]) -> list[TokenSig]:
    out: list[TokenSig] = []
    for u in units:
        out += u.to_tokens()
    return out
