"""CNF formulas, 2-QBF specifications and the QDIMACS reader/writer.

Literals are non-zero signed integers in the DIMACS convention: ``v`` is the
positive literal of variable ``v`` and ``-v`` its negation.  Assignments are
plain ``dict[int, int]`` maps from variable to ``0``/``1``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

import numpy as np

Clause = tuple[int, ...]
Assignment = dict[int, int]


class UnboundVariableError(KeyError):
    """Raised when an evaluation needs a variable the assignment does not bind."""


def normalize_clause(lits: Iterable[int]) -> Clause | None:
    """Drop duplicate literals, keeping first-occurrence order.

    Returns ``None`` for a tautology (both polarities of one variable).
    """
    seen: set[int] = set()
    out: list[int] = []
    for lit in lits:
        lit = int(lit)
        if lit == 0:
            raise ValueError("0 is not a literal")
        if -lit in seen:
            return None
        if lit not in seen:
            seen.add(lit)
            out.append(lit)
    return tuple(out)


@dataclass
class CnfFormula:
    clauses: list[Clause] = field(default_factory=list)
    num_vars: int = 0

    def __post_init__(self):
        raw, self.clauses = self.clauses, []
        for c in raw:
            self.add_clause(c)

    def add_clause(self, lits: Iterable[int]) -> None:
        clause = normalize_clause(lits)
        if clause is None:
            return
        for lit in clause:
            if abs(lit) > self.num_vars:
                self.num_vars = abs(lit)
        self.clauses.append(clause)

    def new_var(self) -> int:
        self.num_vars += 1
        return self.num_vars

    def copy(self) -> CnfFormula:
        f = CnfFormula(num_vars=self.num_vars)
        f.clauses = list(self.clauses)
        return f

    def variables(self) -> set[int]:
        return {abs(lit) for c in self.clauses for lit in c}

    @property
    def has_empty_clause(self) -> bool:
        return any(len(c) == 0 for c in self.clauses)

    def __len__(self) -> int:
        return len(self.clauses)

    def to_dimacs(self, extra_units: Iterable[int] = ()) -> str:
        units = [(lit,) for lit in extra_units]
        lines = [f"p cnf {self.num_vars} {len(self.clauses) + len(units)}"]
        for c in list(self.clauses) + units:
            lines.append(" ".join(map(str, c)) + (" 0" if c else "0"))
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class QbfSpec:
    """The instance ``exists Y. F(X, Y)``.

    ``y_vars`` is ordered (it fixes the output vector); ``x_vars`` is a set.
    """

    matrix: CnfFormula
    x_vars: frozenset[int]
    y_vars: tuple[int, ...]

    def __post_init__(self):
        if not self.y_vars:
            raise ValueError("a specification needs at least one existential variable")
        overlap = self.x_vars & set(self.y_vars)
        if overlap:
            raise ValueError(f"variables quantified twice: {sorted(overlap)}")
        if len(set(self.y_vars)) != len(self.y_vars):
            raise ValueError("duplicate existential variable")
        stray = self.matrix.variables() - self.x_vars - set(self.y_vars)
        if stray:
            raise ValueError(f"unquantified variables in matrix: {sorted(stray)}")

    @property
    def sorted_x(self) -> list[int]:
        return sorted(self.x_vars)

    @property
    def max_var(self) -> int:
        return max([self.matrix.num_vars, *self.x_vars, *self.y_vars])


# --- QDIMACS -------------------------------------------------------------


class QdimacsError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class HeaderError(QdimacsError):
    pass


class PrefixError(QdimacsError):
    pass


class LiteralRangeError(QdimacsError):
    pass


class MissingTerminatorError(QdimacsError):
    pass


class ClauseCountError(QdimacsError):
    pass


class EmptyExistentialError(QdimacsError):
    pass


_HEADER = re.compile(r"^p\s+cnf\s+(\d+)\s+(\d+)\s*$")


def _ints(tokens: list[str], lineno: int) -> list[int]:
    try:
        return [int(t) for t in tokens]
    except ValueError:
        raise QdimacsError(f"non-integer token in {' '.join(tokens)!r}", lineno) from None


def parse_qdimacs(text: str | bytes) -> QbfSpec:
    """Read a 2-QBF instance with a ``∀X ∃Y`` prefix.

    Variables declared by the header but bound by no quantifier line are
    treated as universal.
    """
    if isinstance(text, (bytes, bytearray)):
        text = text.decode("ascii")
    header: tuple[int, int] | None = None
    x_vars: set[int] = set()
    y_vars: list[int] = []
    seen_e = False
    clauses: list[list[int]] = []
    pending: list[int] = []
    pending_line = 0
    lineno = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if header is None:
            m = _HEADER.match(line)
            if not m:
                raise HeaderError(f"expected 'p cnf <vars> <clauses>', got {line!r}", lineno)
            header = (int(m.group(1)), int(m.group(2)))
            continue
        if line.startswith("p"):
            raise HeaderError("duplicate header", lineno)
        nvars = header[0]
        if line[0] in "ae":
            if clauses or pending:
                raise PrefixError("quantifier line after clauses", lineno)
            vals = _ints(line[1:].split(), lineno)
            if not vals or vals[-1] != 0:
                raise MissingTerminatorError("quantifier line not terminated by 0", lineno)
            block = vals[:-1]
            if 0 in block:
                raise PrefixError("stray 0 inside quantifier line", lineno)
            for v in block:
                if v <= 0 or v > nvars:
                    raise LiteralRangeError(f"variable {v} out of range 1..{nvars}", lineno)
                if v in x_vars or v in y_vars:
                    raise PrefixError(f"variable {v} quantified twice", lineno)
            if line[0] == "a":
                if seen_e:
                    raise PrefixError("universal block after existential block (not a 2-QBF)", lineno)
                x_vars.update(block)
            else:
                seen_e = True
                y_vars.extend(block)
            continue
        for lit in _ints(line.split(), lineno):
            if lit == 0:
                clauses.append(pending)
                pending = []
                continue
            if abs(lit) > nvars:
                raise LiteralRangeError(f"literal {lit} out of range for {nvars} variables", lineno)
            if not pending:
                pending_line = lineno
            pending.append(lit)
    if header is None:
        raise HeaderError("missing 'p cnf' header", lineno or 1)
    if pending:
        raise MissingTerminatorError("last clause not terminated by 0", pending_line)
    if len(clauses) != header[1]:
        raise ClauseCountError(f"header declares {header[1]} clauses, found {len(clauses)}", lineno)
    if not y_vars:
        raise EmptyExistentialError("no existential variables", lineno)
    nvars = header[0]
    free = set(range(1, nvars + 1)) - x_vars - set(y_vars)
    matrix = CnfFormula(num_vars=nvars)
    for c in clauses:
        matrix.add_clause(c)
    return QbfSpec(matrix, frozenset(x_vars | free), tuple(y_vars))


def write_qdimacs(spec: QbfSpec) -> str:
    m = spec.matrix
    lines = [f"p cnf {max(m.num_vars, spec.max_var)} {len(m.clauses)}"]
    if spec.x_vars:
        lines.append("a " + " ".join(map(str, spec.sorted_x)) + " 0")
    lines.append("e " + " ".join(map(str, spec.y_vars)) + " 0")
    for c in m.clauses:
        lines.append(" ".join(map(str, c)) + (" 0" if c else "0"))
    return "\n".join(lines) + "\n"


# --- evaluation and rewriting ---------------------------------------------


def lit_value(lit: int, a: Mapping[int, int]) -> int:
    try:
        v = a[abs(lit)]
    except KeyError:
        raise UnboundVariableError(abs(lit)) from None
    return v if lit > 0 else 1 - v


def eval_cnf(f: CnfFormula, a: Mapping[int, int]) -> int:
    for c in f.clauses:
        sat = 0
        for lit in c:
            if lit_value(lit, a):
                sat = 1
                break
        if not sat:
            # finish binding checks so incomplete assignments are always reported
            for c2 in f.clauses:
                for lit in c2:
                    if abs(lit) not in a:
                        raise UnboundVariableError(abs(lit))
            return 0
    return 1


def substitute_const(f: CnfFormula, v: int, b: int) -> CnfFormula:
    """``f`` with variable ``v`` fixed to ``b``; an emptied clause yields ``[()]``."""
    true_lit = v if b else -v
    out = CnfFormula(num_vars=f.num_vars)
    for c in f.clauses:
        if true_lit in c:
            continue
        reduced = tuple(lit for lit in c if lit != -true_lit)
        if not reduced:
            out.clauses = [()]
            return out
        out.clauses.append(reduced)
    return out


def negate_cnf(f: CnfFormula, rename: Callable[[int], int] | Mapping[int, int] | None,
               sink: CnfFormula) -> int:
    """Encode ``not f`` (with variables renamed) into ``sink``.

    Each clause gets a selector ``z_i <-> clause_i``; the returned literal
    ``r`` satisfies ``r -> OR(not z_i)``, so asserting ``r`` yields exactly
    the negation.
    """
    if rename is None:
        ren = lambda v: v  # noqa: E731
    elif callable(rename):
        ren = rename
    else:
        ren = lambda v: rename.get(v, v)  # noqa: E731

    def rl(lit: int) -> int:
        return ren(lit) if lit > 0 else -ren(-lit)

    selectors = []
    for c in f.clauses:
        z = sink.new_var()
        lits = [rl(lit) for lit in c]
        sink.add_clause([-z, *lits])
        for lit in lits:
            sink.add_clause([z, -lit])
        selectors.append(z)
    r = sink.new_var()
    sink.add_clause([-r, *(-z for z in selectors)])
    return r


def models_table(f: CnfFormula, variables: list[int], chunk: int = 1 << 16) -> np.ndarray:
    """All assignments over ``variables`` satisfying ``f``, as a 0/1 matrix.

    ``f`` must only mention ``variables``.  Rows come in binary-counting
    order with ``variables[0]`` as the most significant bit.
    """
    n = len(variables)
    col = {v: i for i, v in enumerate(variables)}
    for c in f.clauses:
        for lit in c:
            if abs(lit) not in col:
                raise UnboundVariableError(abs(lit))
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    out = []
    total = 1 << n
    for start in range(0, total, chunk):
        idx = np.arange(start, min(total, start + chunk), dtype=np.int64)
        bits = ((idx[:, None] >> shifts[None, :]) & 1).astype(np.uint8)
        ok = np.ones(len(idx), dtype=bool)
        for c in f.clauses:
            if not c:
                ok[:] = False
                break
            sat = np.zeros(len(idx), dtype=bool)
            for lit in c:
                column = bits[:, col[abs(lit)]]
                sat |= (column == 1) if lit > 0 else (column == 0)
            ok &= sat
        out.append(bits[ok])
    if not out:
        return np.zeros((0, n), dtype=np.uint8)
    return np.concatenate(out, axis=0)
