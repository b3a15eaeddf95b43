"""Hash-consed Boolean expression DAGs.

Expressions are integer handles into an :class:`ExprArena`.  Handle ``0`` is
constant false and ``1`` constant true.  And/Or are n-ary, flattened and
deduplicated at construction, and double negation collapses, so two
structurally identical expressions built in one arena get the same handle.
"""

from __future__ import annotations

import re
from typing import Callable, Iterable, Mapping

from .formula import CnfFormula, UnboundVariableError

CONST, VAR, NOT, AND, OR = range(5)
FALSE, TRUE = 0, 1

_KIND_NAMES = {AND: "and", OR: "or", NOT: "not"}


class ExprArena:
    def __init__(self):
        self._nodes: list[tuple] = [(CONST, 0), (CONST, 1)]
        self._index: dict[tuple, int] = {(CONST, 0): FALSE, (CONST, 1): TRUE}

    def __len__(self) -> int:
        return len(self._nodes)

    def _intern(self, key: tuple) -> int:
        h = self._index.get(key)
        if h is None:
            h = len(self._nodes)
            self._nodes.append(key)
            self._index[key] = h
        return h

    def node(self, e: int) -> tuple:
        return self._nodes[e]

    def kind(self, e: int) -> int:
        return self._nodes[e][0]

    def children(self, e: int) -> tuple[int, ...]:
        k, payload = self._nodes[e]
        if k == NOT:
            return (payload,)
        if k in (AND, OR):
            return payload
        return ()

    # --- constructors ---------------------------------------------------

    def const(self, b) -> int:
        return TRUE if b else FALSE

    def var(self, v: int) -> int:
        if v <= 0:
            raise ValueError(f"variable index must be positive, got {v}")
        return self._intern((VAR, v))

    def lit(self, lit: int) -> int:
        return self.var(lit) if lit > 0 else self.neg(self.var(-lit))

    def neg(self, e: int) -> int:
        k, payload = self._nodes[e]
        if k == CONST:
            return TRUE if payload == 0 else FALSE
        if k == NOT:
            return payload
        return self._intern((NOT, e))

    def _nary(self, kind: int, args: Iterable[int]) -> int:
        absorbing, neutral = (FALSE, TRUE) if kind == AND else (TRUE, FALSE)
        flat: list[int] = []
        seen: set[int] = set()
        stack = list(args)[::-1]
        while stack:
            e = stack.pop()
            if e == absorbing:
                return absorbing
            if e == neutral or e in seen:
                continue
            k, payload = self._nodes[e]
            if k == kind:
                stack.extend(reversed(payload))
                continue
            seen.add(e)
            flat.append(e)
        for e in flat:
            k, payload = self._nodes[e]
            if k == NOT and payload in seen:
                return absorbing
        if not flat:
            return neutral
        if len(flat) == 1:
            return flat[0]
        return self._intern((kind, tuple(sorted(flat))))

    def and_(self, *args: int) -> int:
        return self._nary(AND, args)

    def or_(self, *args: int) -> int:
        return self._nary(OR, args)

    def conj(self, args: Iterable[int]) -> int:
        return self._nary(AND, args)

    def disj(self, args: Iterable[int]) -> int:
        return self._nary(OR, args)

    def ite(self, c: int, t: int, f: int) -> int:
        return self.or_(self.and_(c, t), self.and_(self.neg(c), f))

    def from_clauses(self, clauses: Iterable[Iterable[int]]) -> int:
        return self.conj(self.disj(self.lit(l) for l in c) for c in clauses)

    # --- queries --------------------------------------------------------

    def _postorder(self, roots: Iterable[int]) -> list[int]:
        order: list[int] = []
        done: set[int] = set()
        for root in roots:
            if root in done:
                continue
            stack = [(root, False)]
            while stack:
                e, expanded = stack.pop()
                if e in done:
                    continue
                if expanded:
                    done.add(e)
                    order.append(e)
                    continue
                stack.append((e, True))
                for c in self.children(e):
                    if c not in done:
                        stack.append((c, False))
        return order

    def support(self, e: int) -> set[int]:
        return {self._nodes[n][1] for n in self._postorder([e]) if self._nodes[n][0] == VAR}

    def size(self, e: int) -> int:
        return len(self._postorder([e]))

    def evaluate(self, e: int, a: Mapping[int, int], memo: dict | None = None) -> int:
        val = {} if memo is None else memo
        for n in self._postorder([e]):
            if n in val:
                continue
            k, payload = self._nodes[n]
            if k == CONST:
                val[n] = payload
            elif k == VAR:
                try:
                    val[n] = int(a[payload])
                except KeyError:
                    raise UnboundVariableError(payload) from None
            elif k == NOT:
                val[n] = 1 - val[payload]
            elif k == AND:
                val[n] = int(all(val[c] for c in payload))
            else:
                val[n] = int(any(val[c] for c in payload))
        return val[e]

    def rebuild(self, e: int, leaf: Callable[[int], int]) -> int:
        """Rebuild ``e`` bottom-up with every ``VarRef(v)`` replaced by ``leaf(v)``."""
        out: dict[int, int] = {}
        for n in self._postorder([e]):
            k, payload = self._nodes[n]
            if k == CONST:
                out[n] = n
            elif k == VAR:
                out[n] = leaf(payload)
            elif k == NOT:
                out[n] = self.neg(out[payload])
            else:
                out[n] = self._nary(k, (out[c] for c in payload))
        return out[e]

    def substitute(self, e: int, v: int, g: int) -> int:
        return self.substitute_many(e, {v: g})

    def substitute_many(self, e: int, mapping: Mapping[int, int]) -> int:
        if not mapping or not (self.support(e) & mapping.keys()):
            return e
        return self.rebuild(e, lambda u: mapping[u] if u in mapping else self.var(u))

    def cofactor(self, e: int, v: int, b: int) -> int:
        return self.substitute(e, v, self.const(b))

    def exists(self, e: int, variables: Iterable[int]) -> int:
        for v in variables:
            if v in self.support(e):
                e = self.or_(self.cofactor(e, v, 0), self.cofactor(e, v, 1))
        return e

    # --- CNF encoding ---------------------------------------------------

    def tseitin(self, e: int, sink: CnfFormula, var_map: Mapping[int, int] | None = None,
                cache: dict | None = None) -> int:
        """Append biconditional definitions for ``e`` to ``sink``; return its literal.

        ``var_map`` renames variable leaves (e.g. to primed copies).  Passing
        the same ``cache`` across calls on one sink shares definitions.
        """
        memo = {} if cache is None else cache
        for n in self._postorder([e]):
            if n in memo:
                continue
            k, payload = self._nodes[n]
            if k == CONST:
                t = memo.get("true")
                if t is None:
                    t = sink.new_var()
                    sink.add_clause([t])
                    memo["true"] = t
                memo[n] = t if payload else -t
            elif k == VAR:
                memo[n] = var_map.get(payload, payload) if var_map else payload
            elif k == NOT:
                memo[n] = -memo[payload]
            else:
                lits = [memo[c] for c in payload]
                z = sink.new_var()
                if k == AND:
                    for lit in lits:
                        sink.add_clause([-z, lit])
                    sink.add_clause([z, *(-lit for lit in lits)])
                else:
                    for lit in lits:
                        sink.add_clause([z, -lit])
                    sink.add_clause([-z, *lits])
                memo[n] = z
        return memo[e]

    # --- text format ----------------------------------------------------

    def to_str(self, e: int, name: Callable[[int], str] = lambda v: f"x{v}") -> str:
        text: dict[int, str] = {}
        for n in self._postorder([e]):
            k, payload = self._nodes[n]
            if k == CONST:
                text[n] = "true" if payload else "false"
            elif k == VAR:
                text[n] = name(payload)
            elif k == NOT:
                text[n] = f"(not {text[payload]})"
            else:
                text[n] = f"({_KIND_NAMES[k]} " + " ".join(text[c] for c in payload) + ")"
        return text[e]

    def parse(self, text: str) -> int:
        tokens = _TOKEN.findall(text)
        pos = 0

        def expr() -> int:
            nonlocal pos
            if pos >= len(tokens):
                raise SyntaxError("unexpected end of expression")
            tok = tokens[pos]
            pos += 1
            if tok == "(":
                if pos >= len(tokens):
                    raise SyntaxError("unexpected end of expression")
                op = tokens[pos]
                pos += 1
                args = []
                while pos < len(tokens) and tokens[pos] != ")":
                    args.append(expr())
                if pos >= len(tokens):
                    raise SyntaxError("missing ')'")
                pos += 1
                if op == "not":
                    if len(args) != 1:
                        raise SyntaxError("'not' takes exactly one argument")
                    return self.neg(args[0])
                if op == "and":
                    return self.conj(args)
                if op == "or":
                    return self.disj(args)
                raise SyntaxError(f"unknown operator {op!r}")
            if tok == "true":
                return TRUE
            if tok == "false":
                return FALSE
            m = _VARTOK.fullmatch(tok)
            if m:
                return self.var(int(m.group(1)))
            raise SyntaxError(f"unexpected token {tok!r}")

        e = expr()
        if pos != len(tokens):
            raise SyntaxError(f"trailing tokens: {' '.join(tokens[pos:])}")
        return e


_TOKEN = re.compile(r"\(|\)|[^\s()]+")
_VARTOK = re.compile(r"[xy](\d+)")


def format_skolem(arena: ExprArena, psi: Mapping[int, int]) -> str:
    """One ``y<i> := <expr>`` line per output, in the given key order."""
    return "".join(f"y{y} := {arena.to_str(e)}\n" for y, e in psi.items())


def parse_skolem(text: str, arena: ExprArena) -> dict[int, int]:
    psi: dict[int, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        lhs, sep, rhs = line.partition(":=")
        m = _VARTOK.fullmatch(lhs.strip())
        if not sep or not m:
            raise SyntaxError(f"line {lineno}: expected 'y<i> := <expr>'")
        y = int(m.group(1))
        if y in psi:
            raise SyntaxError(f"line {lineno}: duplicate definition of y{y}")
        try:
            psi[y] = arena.parse(rhs)
        except SyntaxError as exc:
            raise SyntaxError(f"line {lineno}: {exc}") from None
    return psi
