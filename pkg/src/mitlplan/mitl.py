"""MITL formulas: abstract syntax, a concrete-text parser, and a point-wise
evaluator over lasso timed words.

The evaluator is the ground-truth oracle for the rest of the pipeline.

Semantics (point-wise, positions are word indices).  A judgment carries the
position ``i`` and an *anchor* time ``a``; the top-level judgment anchors at
the timestamp of the evaluated position.

- atoms and boolean connectives: as usual, anchor unchanged;
- ``X[I] f``  holds at (i, a) iff f holds at (i+1, a) and t(i+1) - t(i) in I;
- ``F[I] f``  holds at (i, a) iff f holds at some (j, t(j)), j >= i, with
  t(j) - a in I;
- ``G[I] f``  dually for all such j;
- ``f U[I] g`` holds at (i, a) iff g holds at some (j, t(j)), j >= i, with
  t(j) - a in I, and f holds at every (k, t(k)) for i <= k < j.

Quantifiers re-anchor at the position they bind; the next operator passes
its anchor through.  For formulas without a temporal operator nested
directly under ``X`` this coincides with the textbook clauses where every
window measures from the evaluation position.  The anchor-preserving next
means that in ``G(p -> X G[0,c] !p)`` the inner window starts at the
position where ``p`` held, which is the "no revisit within c time units"
reading; see the README for a worked example.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .core import (INFINITY, LassoTimedWord, TimeInterval, UNIT_INTERVAL,
                   format_rational, parse_rational)


class MitlError(Exception):
    pass


class MitlSyntaxError(MitlError):
    def __init__(self, message, line=1, column=0):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column


class PunctualIntervalError(MitlError):
    """A temporal operator carries a single-point interval, excluded from MITL."""


class Formula:
    pass


@dataclass(frozen=True)
class Atom(Formula):
    name: str


@dataclass(frozen=True)
class TrueFormula(Formula):
    pass


@dataclass(frozen=True)
class FalseFormula(Formula):
    pass


@dataclass(frozen=True)
class Not(Formula):
    operand: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Next(Formula):
    interval: TimeInterval
    operand: Formula


@dataclass(frozen=True)
class Eventually(Formula):
    interval: TimeInterval
    operand: Formula


@dataclass(frozen=True)
class Always(Formula):
    interval: TimeInterval
    operand: Formula


@dataclass(frozen=True)
class Until(Formula):
    interval: TimeInterval
    left: Formula
    right: Formula


def normalize(formula: Formula) -> Formula:
    """Desugar Or/Implies so downstream passes see only the core grammar."""
    match formula:
        case Atom() | TrueFormula() | FalseFormula():
            return formula
        case Not(operand):
            return Not(normalize(operand))
        case And(left, right):
            return And(normalize(left), normalize(right))
        case Or(left, right):
            return Not(And(Not(normalize(left)), Not(normalize(right))))
        case Implies(left, right):
            return Not(And(normalize(left), Not(normalize(right))))
        case Next(interval, operand):
            return Next(interval, normalize(operand))
        case Eventually(interval, operand):
            return Eventually(interval, normalize(operand))
        case Always(interval, operand):
            return Always(interval, normalize(operand))
        case Until(interval, left, right):
            return Until(interval, normalize(left), normalize(right))
    raise TypeError(f"not a formula: {formula!r}")


def atoms_of(formula: Formula) -> frozenset[str]:
    match formula:
        case Atom(name):
            return frozenset({name})
        case TrueFormula() | FalseFormula():
            return frozenset()
        case Not(operand) | Next(_, operand) | Eventually(_, operand) | Always(_, operand):
            return atoms_of(operand)
        case And(left, right) | Or(left, right) | Implies(left, right):
            return atoms_of(left) | atoms_of(right)
        case Until(_, left, right):
            return atoms_of(left) | atoms_of(right)
    raise TypeError(f"not a formula: {formula!r}")


def is_propositional(formula: Formula) -> bool:
    match formula:
        case Atom() | TrueFormula() | FalseFormula():
            return True
        case Not(operand):
            return is_propositional(operand)
        case And(left, right) | Or(left, right) | Implies(left, right):
            return is_propositional(left) and is_propositional(right)
        case _:
            return False


def evaluate_propositional(formula: Formula, atoms: frozenset[str]) -> bool:
    match formula:
        case Atom(name):
            return name in atoms
        case TrueFormula():
            return True
        case FalseFormula():
            return False
        case Not(operand):
            return not evaluate_propositional(operand, atoms)
        case And(left, right):
            return (evaluate_propositional(left, atoms)
                    and evaluate_propositional(right, atoms))
        case Or(left, right):
            return (evaluate_propositional(left, atoms)
                    or evaluate_propositional(right, atoms))
        case Implies(left, right):
            return ((not evaluate_propositional(left, atoms))
                    or evaluate_propositional(right, atoms))
    raise ValueError(f"not propositional: {formula!r}")


# --- concrete syntax ---------------------------------------------------

_KEYWORDS = {"U", "X", "F", "G", "true", "false", "inf"}


def _is_untimed(interval: TimeInterval) -> bool:
    return (interval.lower == 0 and interval.lower_closed
            and interval.upper is INFINITY)


class _Tokenizer:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.line = 1
        self.col = 0

    def error(self, message):
        raise MitlSyntaxError(message, self.line, self.col)

    def _advance(self, n=1):
        for _ in range(n):
            if self.pos < len(self.text) and self.text[self.pos] == "\n":
                self.line += 1
                self.col = 0
            else:
                self.col += 1
            self.pos += 1

    def tokens(self):
        out = []
        while self.pos < len(self.text):
            ch = self.text[self.pos]
            if ch.isspace():
                self._advance()
                continue
            start = (self.line, self.col)
            if self.text.startswith("->", self.pos):
                out.append(("->", "->", start))
                self._advance(2)
            elif self.text.startswith("<=", self.pos):
                out.append(("<=", "<=", start))
                self._advance(2)
            elif ch in "!&|()[],":
                out.append((ch, ch, start))
                self._advance()
            elif ch.isdigit():
                j = self.pos
                while j < len(self.text) and (self.text[j].isdigit()
                                              or self.text[j] in "./"):
                    j += 1
                number = self.text[self.pos:j]
                self._advance(j - self.pos)
                out.append(("number", number, start))
            elif ch.isalpha() or ch == "_":
                j = self.pos
                while j < len(self.text) and (self.text[j].isalnum()
                                              or self.text[j] == "_"):
                    j += 1
                word = self.text[self.pos:j]
                self._advance(j - self.pos)
                kind = word if word in _KEYWORDS else "name"
                out.append((kind, word, start))
            else:
                self.error(f"unknown token {ch!r}")
        out.append(("end", "", (self.line, self.col)))
        return out


class _Parser:
    """Recursive descent for: unary (!, X, F, G) > U > & > | > -> ."""

    def __init__(self, text: str):
        self.tokens = _Tokenizer(text).tokens()
        self.index = 0

    def peek(self):
        return self.tokens[self.index]

    def take(self, kind=None):
        token = self.tokens[self.index]
        if kind is not None and token[0] != kind:
            self.error(f"expected {kind!r}, found {token[1]!r}" if token[1]
                       else f"expected {kind!r}, found end of input", token)
        self.index += 1
        return token

    def error(self, message, token=None):
        token = token or self.peek()
        line, col = token[2]
        raise MitlSyntaxError(message, line, col)

    def parse(self) -> Formula:
        formula = self.implication()
        if self.peek()[0] != "end":
            self.error(f"unexpected {self.peek()[1]!r}")
        return formula

    def implication(self) -> Formula:
        left = self.disjunction()
        if self.peek()[0] == "->":
            self.take()
            return Implies(left, self.implication())
        return left

    def disjunction(self) -> Formula:
        left = self.conjunction()
        while self.peek()[0] == "|":
            self.take()
            left = Or(left, self.conjunction())
        return left

    def conjunction(self) -> Formula:
        left = self.until()
        while self.peek()[0] == "&":
            self.take()
            left = And(left, self.until())
        return left

    def until(self) -> Formula:
        left = self.unary()
        if self.peek()[0] == "U":
            self.take()
            interval = self.maybe_interval()
            right = self.until()  # right-associative
            return Until(interval, left, right)
        return left

    def unary(self) -> Formula:
        kind, _, _ = self.peek()
        if kind == "!":
            self.take()
            return Not(self.unary())
        if kind == "X":
            self.take()
            return Next(self.maybe_interval(), self.unary())
        if kind == "F":
            self.take()
            return Eventually(self.maybe_interval(), self.unary())
        if kind == "G":
            self.take()
            return Always(self.maybe_interval(), self.unary())
        if kind == "(":
            self.take()
            inner = self.implication()
            self.take(")")
            return inner
        if kind == "true":
            self.take()
            return TrueFormula()
        if kind == "false":
            self.take()
            return FalseFormula()
        if kind == "name":
            return Atom(self.take()[1])
        self.error(f"unexpected {self.peek()[1]!r}" if self.peek()[1]
                   else "unexpected end of input")

    def maybe_interval(self) -> TimeInterval:
        # an open paren starts an interval only when a bound follows;
        # otherwise it groups a subformula, as in "G(red -> ...)"
        kind = self.peek()[0]
        if kind == "(" and self.tokens[self.index + 1][0] not in ("number", "<="):
            return UNIT_INTERVAL
        if kind not in ("[", "("):
            return UNIT_INTERVAL
        open_token = self.take()
        lower_closed = open_token[0] == "["
        if self.peek()[0] == "<=":
            if not lower_closed:
                self.error("the <= shorthand requires [<=b]")
            self.take()
            bound = self.rational()
            close = self.take()
            if close[0] != "]":
                self.error("the <= shorthand requires [<=b]", close)
            return self.build_interval(Fraction(0), bound, True, True, open_token)
        lower = self.rational()
        self.take(",")
        if self.peek()[0] == "inf":
            self.take()
            upper = INFINITY
        else:
            upper = self.rational()
        close = self.take()
        if close[0] not in ("]", ")"):
            self.error(f"expected interval close, found {close[1]!r}", close)
        upper_closed = close[0] == "]"
        return self.build_interval(lower, upper, lower_closed, upper_closed,
                                   open_token)

    def build_interval(self, lower, upper, lower_closed, upper_closed, token):
        lo = "[" if lower_closed else "("
        hi = "]" if upper_closed else ")"
        text = (f"{lo}{format_rational(lower)},"
                f"{format_rational(upper)}{hi}")
        if upper is not INFINITY:
            if lower == upper:
                raise PunctualIntervalError(
                    f"punctual interval {text} is not allowed on temporal operators")
            if lower > upper:
                self.error(f"malformed interval {text}: lower bound exceeds upper",
                           token)
        try:
            return TimeInterval(lower, upper, lower_closed, upper_closed)
        except ValueError as exc:
            self.error(f"malformed interval {text}: {exc}", token)

    def rational(self) -> Fraction:
        token = self.take()
        if token[0] != "number":
            self.error(f"expected a number, found {token[1]!r}", token)
        try:
            return parse_rational(token[1])
        except ValueError as exc:
            self.error(str(exc), token)


def parse_formula(text: str) -> Formula:
    return _Parser(text).parse()


def format_formula(formula: Formula) -> str:
    """Print a formula in the concrete syntax; reparsing yields an equal AST."""

    def interval_text(interval):
        if _is_untimed(interval):
            return ""
        return interval.text()

    def wrap(sub):
        text = format_formula(sub)
        if isinstance(sub, (And, Or, Implies, Until)):
            return f"({text})"
        return text

    match formula:
        case Atom(name):
            return name
        case TrueFormula():
            return "true"
        case FalseFormula():
            return "false"
        case Not(operand):
            return f"!{wrap(operand)}"
        case And(left, right):
            return f"{wrap(left)} & {wrap(right)}"
        case Or(left, right):
            return f"{wrap(left)} | {wrap(right)}"
        case Implies(left, right):
            return f"{wrap(left)} -> {wrap(right)}"
        case Next(interval, operand):
            return f"X{interval_text(interval)} {wrap(operand)}"
        case Eventually(interval, operand):
            return f"F{interval_text(interval)} {wrap(operand)}"
        case Always(interval, operand):
            return f"G{interval_text(interval)} {wrap(operand)}"
        case Until(interval, left, right):
            return f"{wrap(left)} U{interval_text(interval)} {wrap(right)}"
    raise TypeError(f"not a formula: {formula!r}")


# --- evaluation over lasso words ---------------------------------------

class _Evaluator:
    def __init__(self, word: LassoTimedWord):
        self.word = word
        self.memo: dict = {}

    def run(self, formula: Formula, position: int) -> bool:
        return self.eval(formula, position, self.word.stamp_at(position))

    def eval(self, formula: Formula, i: int, anchor: Fraction) -> bool:
        key = (formula, i, anchor)
        cached = self.memo.get(key)
        if cached is not None:
            return cached
        result = self._eval(formula, i, anchor)
        self.memo[key] = result
        return result

    def _eval(self, formula: Formula, i: int, anchor: Fraction) -> bool:
        word = self.word
        match formula:
            case Atom(name):
                return name in word.atoms_at(i)
            case TrueFormula():
                return True
            case FalseFormula():
                return False
            case Not(operand):
                return not self.eval(operand, i, anchor)
            case And(left, right):
                return self.eval(left, i, anchor) and self.eval(right, i, anchor)
            case Next(interval, operand):
                return (interval.contains(word.gap_after(i))
                        and self.eval(operand, i + 1, anchor))
            case Eventually(interval, operand):
                for j in self.window(i, anchor, interval):
                    if (interval.contains(word.stamp_at(j) - anchor)
                            and self.eval(operand, j, word.stamp_at(j))):
                        return True
                return False
            case Always(interval, operand):
                for j in self.window(i, anchor, interval):
                    if (interval.contains(word.stamp_at(j) - anchor)
                            and not self.eval(operand, j, word.stamp_at(j))):
                        return False
                return True
            case Until(interval, left, right):
                for j in self.window(i, anchor, interval):
                    if (interval.contains(word.stamp_at(j) - anchor)
                            and self.eval(right, j, word.stamp_at(j))):
                        return True
                    if not self.eval(left, j, word.stamp_at(j)):
                        return False
                return False
        # sugar: normalize lazily so callers may pass unnormalized trees
        return self.eval(normalize(formula), i, anchor)

    def window(self, i: int, anchor: Fraction, interval: TimeInterval):
        """Positions that decide a quantifier anchored at ``anchor``.

        Bounded interval: every position until the offset passes the upper
        bound.  Unbounded interval: positions up to one full cycle past the
        first position that is both beyond the lower bound and inside the
        repeating cycle -- beyond that point the truth of the operand is
        cycle-periodic and the time constraint stays satisfied, so any
        witness (or violation) there already has a twin inside the window.
        """
        word = self.word
        if not interval.unbounded:
            j = i
            while not interval.above_upper(word.stamp_at(j) - anchor):
                yield j
                j += 1
            return
        j = i
        horizon = None
        while True:
            past_lower = word.stamp_at(j) - anchor > interval.lower
            if horizon is None and past_lower and j >= word.prefix_length:
                horizon = j + word.cycle_length
            yield j
            if horizon is not None and j >= horizon:
                return
            j += 1


def evaluate_at(word: LassoTimedWord, position: int, formula: Formula) -> bool:
    if position < 0:
        raise ValueError("positions are nonnegative")
    return _Evaluator(word).run(formula, position)


def satisfies(word: LassoTimedWord, formula: Formula) -> bool:
    return evaluate_at(word, 0, formula)


def first_violation(word: LassoTimedWord, formula: Formula):
    """``None`` if the word satisfies the formula at position 0, else the
    first position witnessing the failure (with its timestamp).

    For a failing top-level ``G`` the witness is the earliest in-window
    position where the body fails; conjunctions recurse into the first
    failing conjunct; anything else reports position 0.
    """
    evaluator = _Evaluator(word)

    def locate(node: Formula, i: int, anchor: Fraction):
        if evaluator.eval(node, i, anchor):
            return None
        match node:
            case Always(interval, operand):
                for j in evaluator.window(i, anchor, interval):
                    if (interval.contains(word.stamp_at(j) - anchor)
                            and not evaluator.eval(operand, j, word.stamp_at(j))):
                        return j, word.stamp_at(j)
            case And(left, right):
                if not evaluator.eval(left, i, anchor):
                    return locate(left, i, anchor)
                return locate(right, i, anchor)
            case Implies() | Or():
                return locate(normalize(node), i, anchor)
        return i, word.stamp_at(i)

    return locate(formula, 0, word.stamp_at(0))
