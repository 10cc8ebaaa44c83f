"""Textual statechart language for fault-mitigation behavior.

Parser, static validator and deterministic single-step interpreter for a
flat statechart notation::

    statechart worker_vla {
      initial Idle;
      state Idle {
        on crossing_start -> Timing do arm_timer(estimate);
      }
      state Timing {
        on pa_complete -> Idle do stop_timer;
        on deadline_expired -> Grace do notify_pa, arm_timer(grace);
      }
    }

Guards are a restricted predicate language (comparisons over named context
variables, ``authority(<strategy>)`` tests, and/or/not, parentheses), never
general code, so stepping a chart is side-effect-free and reproducible.
Actions come from a fixed vocabulary; arguments are either bare names or
arithmetic expressions over context variables. ``#`` starts a comment.

Hierarchical and orthogonal states are deliberately not supported; the
shipped charts need none and flat charts keep validation decidable.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Mapping

__all__ = [
    "ACTION_SIGNATURES",
    "Diagnostic",
    "DslError",
    "DslEvalError",
    "DslSyntaxError",
    "NondeterminismError",
    "ResolvedAction",
    "StatechartSpec",
    "StepContext",
    "Transition",
    "format_statechart",
    "parse",
    "step",
    "validate",
]


class DslError(Exception):
    """Base class for statechart language errors."""


class DslSyntaxError(DslError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{message} (line {line}, column {col})")
        self.line = line
        self.col = col


class DslEvalError(DslError):
    """A guard or expression referenced something missing from the context."""


class NondeterminismError(DslError):
    """More than one transition was enabled for the same state and event."""


# arg kinds: "expr" evaluates to a number, "name" must be a bare identifier
ACTION_SIGNATURES: dict[str, tuple[str, ...]] = {
    "notify_pa": (),
    "arm_timer": ("expr",),
    "stop_timer": (),
    "reset_pa": (),
    "escalate": ("name", "name"),
    "set_prescale": ("expr",),
    "reroute": ("name", "name"),
    "quarantine": ("name",),
    "forward": ("name",),
}

_COMPARE_COMPLEMENT = {
    "==": "!=",
    "!=": "==",
    "<": ">=",
    ">=": "<",
    ">": "<=",
    "<=": ">",
}


# ----------------------------------------------------------------------
# AST
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class BinOp:
    op: str  # + - * /
    left: "Expr"
    right: "Expr"


Expr = Num | Var | BinOp


@dataclass(frozen=True)
class Lit:
    value: bool


@dataclass(frozen=True)
class AuthorityTest:
    strategy: str


@dataclass(frozen=True)
class Compare:
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Not:
    operand: "Guard"


@dataclass(frozen=True)
class And:
    items: tuple["Guard", ...]


@dataclass(frozen=True)
class Or:
    items: tuple["Guard", ...]


Guard = Lit | AuthorityTest | Compare | Not | And | Or


@dataclass(frozen=True)
class ActionSpec:
    name: str
    args: tuple[Expr, ...] = ()


@dataclass(frozen=True)
class Transition:
    from_state: str
    event: str
    guard: Guard | None
    to_state: str
    actions: tuple[ActionSpec, ...]


@dataclass(frozen=True)
class StatechartSpec:
    name: str
    states: tuple[str, ...]
    initial: str
    transitions: tuple[Transition, ...]

    @property
    def events(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for tr in self.transitions:
            seen.setdefault(tr.event, None)
        return tuple(seen)


@dataclass(frozen=True)
class ResolvedAction:
    """An action with its arguments evaluated against the step context."""

    name: str
    args: tuple = ()


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning" | "info"
    code: str
    message: str


@dataclass
class StepContext:
    variables: Mapping[str, float] = field(default_factory=dict)
    authority: frozenset[str] = frozenset()


# ----------------------------------------------------------------------
# tokenizer
# ----------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
      (?P<ws>[ \t\r\n]+)
    | (?P<comment>\#[^\n]*)
    | (?P<arrow>->)
    | (?P<cmp><=|>=|==|!=|<|>)
    | (?P<number>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
    | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
    | (?P<punct>[{}();,\[\]+\-*/])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    type: str
    value: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    line = 1
    line_start = 0
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise DslSyntaxError(
                f"unexpected character {text[pos]!r}", line, pos - line_start + 1
            )
        kind = m.lastgroup
        value = m.group()
        if kind in ("ws", "comment"):
            newlines = value.count("\n")
            if newlines:
                line += newlines
                line_start = pos + value.rfind("\n") + 1
        else:
            token_type = value if kind == "punct" else kind
            tokens.append(_Token(token_type, value, line, pos - line_start + 1))
        pos = m.end()
    tokens.append(_Token("eof", "", line, pos - line_start + 1))
    return tokens


# ----------------------------------------------------------------------
# parser
# ----------------------------------------------------------------------


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def next(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def error(self, message: str, tok: _Token | None = None) -> DslSyntaxError:
        tok = tok or self.peek()
        return DslSyntaxError(message, tok.line, tok.col)

    def expect(self, type_: str) -> _Token:
        tok = self.peek()
        if tok.type != type_:
            raise self.error(f"expected {type_!r}, found {tok.value!r}")
        return self.next()

    def expect_ident(self, keyword: str | None = None) -> _Token:
        tok = self.expect("ident")
        if keyword is not None and tok.value != keyword:
            raise self.error(f"expected {keyword!r}, found {tok.value!r}", tok)
        return tok

    # statechart <name> { initial <S>; state <S> { ... } ... }
    def parse_statechart(self) -> StatechartSpec:
        self.expect_ident("statechart")
        name = self.expect("ident").value
        self.expect("{")
        self.expect_ident("initial")
        initial = self.expect("ident").value
        self.expect(";")
        states: list[str] = []
        transitions: list[Transition] = []
        while self.peek().type != "}":
            tok = self.expect_ident("state")
            state_name_tok = self.expect("ident")
            state_name = state_name_tok.value
            if state_name in states:
                raise self.error(f"duplicate state {state_name!r}", state_name_tok)
            states.append(state_name)
            self.expect("{")
            while self.peek().type != "}":
                transitions.append(self.parse_transition(state_name))
            self.expect("}")
            del tok
        self.expect("}")
        if self.peek().type != "eof":
            raise self.error("trailing input after statechart body")
        if initial not in states:
            raise DslSyntaxError(f"initial state {initial!r} is not defined", 1, 1)
        for tr in transitions:
            if tr.to_state not in states:
                raise DslSyntaxError(
                    f"transition from {tr.from_state!r} targets undefined state {tr.to_state!r}",
                    1,
                    1,
                )
        return StatechartSpec(name, tuple(states), initial, tuple(transitions))

    # on <event> [<guard>] -> <S'> do <action>(, <action>)* ;
    def parse_transition(self, from_state: str) -> Transition:
        self.expect_ident("on")
        event = self.expect("ident").value
        guard = None
        if self.peek().type == "[":
            self.next()
            guard = self.parse_guard()
            self.expect("]")
        self.expect("arrow")
        to_state = self.expect("ident").value
        actions: list[ActionSpec] = []
        if self.peek().type == "ident" and self.peek().value == "do":
            self.next()
            actions.append(self.parse_action())
            while self.peek().type == ",":
                self.next()
                actions.append(self.parse_action())
        self.expect(";")
        return Transition(from_state, event, guard, to_state, tuple(actions))

    def parse_action(self) -> ActionSpec:
        tok = self.expect("ident")
        name = tok.value
        if name not in ACTION_SIGNATURES:
            raise self.error(f"unknown action name {name!r}", tok)
        signature = ACTION_SIGNATURES[name]
        args: list[Expr] = []
        if self.peek().type == "(":
            self.next()
            if self.peek().type != ")":
                args.append(self.parse_expr())
                while self.peek().type == ",":
                    self.next()
                    args.append(self.parse_expr())
            self.expect(")")
        if len(args) != len(signature):
            raise self.error(
                f"action {name!r} takes {len(signature)} argument(s), got {len(args)}", tok
            )
        for arg, kind in zip(args, signature):
            if kind == "name" and not isinstance(arg, Var):
                raise self.error(f"action {name!r} expects a bare name argument", tok)
        return ActionSpec(name, tuple(args))

    # guards
    def parse_guard(self) -> Guard:
        return self.parse_or()

    def parse_or(self) -> Guard:
        items = [self.parse_and()]
        while self.peek().type == "ident" and self.peek().value == "or":
            self.next()
            items.append(self.parse_and())
        if len(items) == 1:
            return items[0]
        flat: list[Guard] = []
        for item in items:
            flat.extend(item.items if isinstance(item, Or) else [item])
        return Or(tuple(flat))

    def parse_and(self) -> Guard:
        items = [self.parse_unary()]
        while self.peek().type == "ident" and self.peek().value == "and":
            self.next()
            items.append(self.parse_unary())
        if len(items) == 1:
            return items[0]
        flat: list[Guard] = []
        for item in items:
            flat.extend(item.items if isinstance(item, And) else [item])
        return And(tuple(flat))

    def parse_unary(self) -> Guard:
        tok = self.peek()
        if tok.type == "ident" and tok.value == "not":
            self.next()
            return Not(self.parse_unary())
        return self.parse_guard_atom()

    def parse_guard_atom(self) -> Guard:
        tok = self.peek()
        if tok.type == "(":
            self.next()
            inner = self.parse_or()
            self.expect(")")
            return inner
        if tok.type == "ident" and tok.value == "true":
            self.next()
            return Lit(True)
        if tok.type == "ident" and tok.value == "false":
            self.next()
            return Lit(False)
        if tok.type == "ident" and tok.value == "authority":
            self.next()
            self.expect("(")
            strategy = self.expect("ident").value
            self.expect(")")
            return AuthorityTest(strategy)
        left = self.parse_expr()
        op_tok = self.peek()
        if op_tok.type != "cmp":
            raise self.error("expected a comparison operator in guard", op_tok)
        self.next()
        right = self.parse_expr()
        return Compare(op_tok.value, left, right)

    # arithmetic expressions
    def parse_expr(self) -> Expr:
        left = self.parse_term()
        while self.peek().type in ("+", "-"):
            op = self.next().type
            right = self.parse_term()
            left = BinOp(op, left, right)
        return left

    def parse_term(self) -> Expr:
        left = self.parse_factor()
        while self.peek().type in ("*", "/"):
            op = self.next().type
            right = self.parse_factor()
            left = BinOp(op, left, right)
        return left

    def parse_factor(self) -> Expr:
        tok = self.peek()
        if tok.type == "(":
            self.next()
            inner = self.parse_expr()
            self.expect(")")
            return inner
        if tok.type == "number":
            self.next()
            return Num(float(tok.value))
        if tok.type == "ident":
            self.next()
            return Var(tok.value)
        raise self.error("expected a number, name or parenthesized expression", tok)


def parse(text: str) -> StatechartSpec:
    return _Parser(text).parse_statechart()


# ----------------------------------------------------------------------
# printer (canonical form; parse(format(spec)) == spec)
# ----------------------------------------------------------------------


def _format_expr(expr: Expr, parent_op: str | None = None) -> str:
    if isinstance(expr, Num):
        return repr(expr.value)
    if isinstance(expr, Var):
        return expr.name
    text = f"{_format_expr(expr.left, expr.op)} {expr.op} {_format_expr(expr.right, expr.op)}"
    if parent_op is not None:
        return f"({text})"
    return text


def _format_guard(guard: Guard, parenthesize: bool = False) -> str:
    if isinstance(guard, Lit):
        text = "true" if guard.value else "false"
    elif isinstance(guard, AuthorityTest):
        text = f"authority({guard.strategy})"
    elif isinstance(guard, Compare):
        text = f"{_format_expr(guard.left)} {guard.op} {_format_expr(guard.right)}"
    elif isinstance(guard, Not):
        inner_needs = isinstance(guard.operand, (And, Or))
        text = f"not {_format_guard(guard.operand, inner_needs)}"
    elif isinstance(guard, And):
        text = " and ".join(_format_guard(g, isinstance(g, Or)) for g in guard.items)
    else:
        text = " or ".join(_format_guard(g, False) for g in guard.items)
    if parenthesize:
        return f"({text})"
    return text


def _format_action(action: ActionSpec) -> str:
    if not action.args:
        return action.name
    args = ", ".join(_format_expr(a) for a in action.args)
    return f"{action.name}({args})"


def format_statechart(spec: StatechartSpec) -> str:
    lines = [f"statechart {spec.name} {{", f"  initial {spec.initial};"]
    for state in spec.states:
        lines.append(f"  state {state} {{")
        for tr in spec.transitions:
            if tr.from_state != state:
                continue
            guard = f" [{_format_guard(tr.guard)}]" if tr.guard is not None else ""
            doing = ""
            if tr.actions:
                doing = " do " + ", ".join(_format_action(a) for a in tr.actions)
            lines.append(f"    on {tr.event}{guard} -> {tr.to_state}{doing};")
        lines.append("  }")
    lines.append("}")
    return "\n".join(lines) + "\n"


# ----------------------------------------------------------------------
# validation
# ----------------------------------------------------------------------


def _conjunction_atoms(guard: Guard) -> tuple[Guard, ...]:
    if isinstance(guard, And):
        return guard.items
    return (guard,)


def _complementary(a: Guard, b: Guard) -> bool:
    if isinstance(a, Not) and a.operand == b:
        return True
    if isinstance(b, Not) and b.operand == a:
        return True
    if isinstance(a, Compare) and isinstance(b, Compare):
        return (
            a.left == b.left
            and a.right == b.right
            and _COMPARE_COMPLEMENT[a.op] == b.op
        )
    if isinstance(a, Lit) and isinstance(b, Lit):
        return a.value != b.value
    return False


def _provably_disjoint(g1: Guard | None, g2: Guard | None) -> bool:
    """Sound but incomplete: true only when some conjunct of one guard is the
    exact complement of a conjunct of the other (negation, or a comparison
    with complementary operator over identical operands)."""
    if g1 is None or g2 is None:
        return False
    atoms1 = _conjunction_atoms(g1)
    atoms2 = _conjunction_atoms(g2)
    return any(_complementary(a, b) for a in atoms1 for b in atoms2)


def validate(spec: StatechartSpec) -> list[Diagnostic]:
    diagnostics: list[Diagnostic] = []

    # reachability from the initial state
    adjacency: dict[str, list[str]] = {s: [] for s in spec.states}
    for tr in spec.transitions:
        adjacency[tr.from_state].append(tr.to_state)
    reached = {spec.initial}
    frontier = [spec.initial]
    while frontier:
        current = frontier.pop()
        for nxt in adjacency[current]:
            if nxt not in reached:
                reached.add(nxt)
                frontier.append(nxt)
    for state in spec.states:
        if state not in reached:
            diagnostics.append(
                Diagnostic("warning", "unreachable-state", f"state {state!r} is unreachable")
            )

    # nondeterminism: same (state, event) with guards not provably disjoint
    grouped: dict[tuple[str, str], list[Transition]] = {}
    for tr in spec.transitions:
        grouped.setdefault((tr.from_state, tr.event), []).append(tr)
    for (state, event), group in grouped.items():
        for i in range(len(group)):
            for j in range(i + 1, len(group)):
                if not _provably_disjoint(group[i].guard, group[j].guard):
                    diagnostics.append(
                        Diagnostic(
                            "error",
                            "nondeterministic",
                            f"transitions {i} and {j} on ({state!r}, {event!r}) "
                            "can be enabled together",
                        )
                    )

    used_actions = {a.name for tr in spec.transitions for a in tr.actions}
    unused = [name for name in ACTION_SIGNATURES if name not in used_actions]
    if unused:
        diagnostics.append(
            Diagnostic(
                "info",
                "unused-actions",
                "vocabulary actions never used: " + ", ".join(unused),
            )
        )
    return diagnostics


# ----------------------------------------------------------------------
# interpreter
# ----------------------------------------------------------------------


def _eval_expr(expr: Expr, variables: Mapping[str, float]) -> float:
    if isinstance(expr, Num):
        return expr.value
    if isinstance(expr, Var):
        try:
            return float(variables[expr.name])
        except KeyError:
            raise DslEvalError(f"unknown context variable {expr.name!r}") from None
    left = _eval_expr(expr.left, variables)
    right = _eval_expr(expr.right, variables)
    if expr.op == "+":
        return left + right
    if expr.op == "-":
        return left - right
    if expr.op == "*":
        return left * right
    return left / right


def _eval_guard(guard: Guard, ctx: StepContext) -> bool:
    if isinstance(guard, Lit):
        return guard.value
    if isinstance(guard, AuthorityTest):
        return guard.strategy in ctx.authority
    if isinstance(guard, Compare):
        left = _eval_expr(guard.left, ctx.variables)
        right = _eval_expr(guard.right, ctx.variables)
        return {
            "==": left == right,
            "!=": left != right,
            "<": left < right,
            "<=": left <= right,
            ">": left > right,
            ">=": left >= right,
        }[guard.op]
    if isinstance(guard, Not):
        return not _eval_guard(guard.operand, ctx)
    if isinstance(guard, And):
        return all(_eval_guard(g, ctx) for g in guard.items)
    return any(_eval_guard(g, ctx) for g in guard.items)


def _resolve_action(action: ActionSpec, ctx: StepContext) -> ResolvedAction:
    signature = ACTION_SIGNATURES[action.name]
    resolved = []
    for arg, kind in zip(action.args, signature):
        if kind == "name":
            resolved.append(arg.name)  # type: ignore[union-attr]
        else:
            resolved.append(_eval_expr(arg, ctx.variables))
    return ResolvedAction(action.name, tuple(resolved))


def step(
    spec: StatechartSpec, current: str, event: str, ctx: StepContext
) -> tuple[str, tuple[ResolvedAction, ...]]:
    """Take the unique enabled transition for (current, event, ctx).

    No enabled transition is the identity: the state is unchanged and no
    actions are emitted. More than one enabled transition raises
    NondeterminismError (validate() flags these statically).
    """
    if current not in spec.states:
        raise ValueError(f"state {current!r} is not part of statechart {spec.name!r}")
    enabled = [
        tr
        for tr in spec.transitions
        if tr.from_state == current
        and tr.event == event
        and (tr.guard is None or _eval_guard(tr.guard, ctx))
    ]
    if not enabled:
        return current, ()
    if len(enabled) > 1:
        raise NondeterminismError(
            f"{len(enabled)} transitions enabled on ({current!r}, {event!r})"
        )
    transition = enabled[0]
    actions = tuple(_resolve_action(a, ctx) for a in transition.actions)
    return transition.to_state, actions
