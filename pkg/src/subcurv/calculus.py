"""Symbolic expression engine over named coordinates.

Expressions are immutable trees built from rational/float constants,
coordinate variables, n-ary sums and products, and powers with exact
rational exponents.  The engine supports exact symbolic differentiation,
pointwise IEEE-double evaluation, substitution, parsing/unparsing of a
small text grammar, and compilation to fast Python callables for grid
sweeps.

Simplification is deliberately shallow: constant folding, neutral-element
elimination and flattening of nested sums/products.  There is no
polynomial canonical form; trees that differ structurally are compared
numerically by callers where needed.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence, Union

Number = Union[int, float, Fraction]

__all__ = [
    "CalculusError",
    "ParseError",
    "EvaluationError",
    "NonSmoothPoint",
    "DivisionByZero",
    "CoordSystem",
    "Expr",
    "Const",
    "Var",
    "Neg",
    "Add",
    "Mul",
    "Pow",
    "const",
    "var",
    "add",
    "mul",
    "neg",
    "sub",
    "div",
    "pow_",
    "sqrt_",
    "simplify",
    "differentiate",
    "gradient",
    "evaluate",
    "substitute",
    "free_vars",
    "compile_expr",
    "parse_expr",
    "unparse",
    "ZERO",
    "ONE",
]


class CalculusError(Exception):
    """Base class for expression-engine errors."""


class ParseError(CalculusError):
    """Source text does not conform to the expression grammar.

    ``offset`` is the byte offset of the offending token in the source.
    """

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class EvaluationError(CalculusError):
    """Base class for pointwise-evaluation domain errors."""


class NonSmoothPoint(EvaluationError):
    """Non-integer power of a non-positive base."""


class DivisionByZero(EvaluationError):
    """Negative integer power of zero."""


class CoordSystem:
    """An ordered tuple of distinct coordinate names."""

    __slots__ = ("names", "_index")

    def __init__(self, names: Iterable[str]):
        names = tuple(names)
        if len(names) < 1:
            raise ValueError("coordinate system needs at least one name")
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate coordinate names in {names}")
        self.names = names
        self._index = {n: i for i, n in enumerate(names)}

    def index(self, name: str) -> int:
        return self._index[name]

    def __len__(self) -> int:
        return len(self.names)

    def __iter__(self):
        return iter(self.names)

    def __eq__(self, other):
        return isinstance(other, CoordSystem) and self.names == other.names

    def __hash__(self):
        return hash(self.names)

    def __repr__(self):
        return f"CoordSystem({', '.join(self.names)})"


# ---------------------------------------------------------------------------
# Expression nodes
# ---------------------------------------------------------------------------

# Node-kind ranks fix the canonical child ordering of sums and products.
_RANK_CONST = 0
_RANK_VAR = 1
_RANK_POW = 2
_RANK_MUL = 3
_RANK_ADD = 4
_RANK_NEG = 5


class Expr:
    """Base class of all expression nodes.  Instances are immutable."""

    __slots__ = ("_hash",)

    rank: int = -1

    def __hash__(self):
        return self._hash

    # Arithmetic sugar; numbers are coerced to constants.
    def __add__(self, other):
        return add(self, _coerce(other))

    def __radd__(self, other):
        return add(_coerce(other), self)

    def __sub__(self, other):
        return sub(self, _coerce(other))

    def __rsub__(self, other):
        return sub(_coerce(other), self)

    def __mul__(self, other):
        return mul(self, _coerce(other))

    def __rmul__(self, other):
        return mul(_coerce(other), self)

    def __truediv__(self, other):
        return div(self, _coerce(other))

    def __rtruediv__(self, other):
        return div(_coerce(other), self)

    def __pow__(self, exponent):
        return pow_(self, exponent)

    def __neg__(self):
        return neg(self)

    def __repr__(self):
        return f"<expr {_repr_tree(self)}>"


class Const(Expr):
    """Exact rational constant.

    Every finite IEEE double is an exact rational, so the stored value is
    always a ``Fraction``; evaluation rounds back to float.
    """

    __slots__ = ("value", "_float")
    rank = _RANK_CONST

    def __init__(self, value: Number):
        if isinstance(value, float):
            if value != value or value in (float("inf"), float("-inf")):
                raise ValueError(f"non-finite constant {value!r}")
            value = Fraction(value)
        elif isinstance(value, int):
            value = Fraction(value)
        elif not isinstance(value, Fraction):
            raise TypeError(f"bad constant type {type(value).__name__}")
        object.__setattr__(self, "value", value)
        object.__setattr__(self, "_float", float(value))
        object.__setattr__(self, "_hash", hash((_RANK_CONST, value)))

    def __setattr__(self, *a):
        raise AttributeError("Expr nodes are immutable")

    def __eq__(self, other):
        return isinstance(other, Const) and self.value == other.value

    __hash__ = Expr.__hash__


class Var(Expr):
    """Coordinate variable referenced by index into the enclosing chart."""

    __slots__ = ("index",)
    rank = _RANK_VAR

    def __init__(self, index: int):
        if index < 0:
            raise ValueError("variable index must be nonnegative")
        object.__setattr__(self, "index", index)
        object.__setattr__(self, "_hash", hash((_RANK_VAR, index)))

    def __setattr__(self, *a):
        raise AttributeError("Expr nodes are immutable")

    def __eq__(self, other):
        return isinstance(other, Var) and self.index == other.index

    __hash__ = Expr.__hash__


class Neg(Expr):
    """Unary negation.  Canonicalization rewrites it as a product with -1."""

    __slots__ = ("child",)
    rank = _RANK_NEG

    def __init__(self, child: Expr):
        object.__setattr__(self, "child", child)
        object.__setattr__(self, "_hash", hash((_RANK_NEG, child._hash)))

    def __setattr__(self, *a):
        raise AttributeError("Expr nodes are immutable")

    def __eq__(self, other):
        return isinstance(other, Neg) and self.child == other.child

    __hash__ = Expr.__hash__


class Add(Expr):
    """N-ary sum with canonically ordered children."""

    __slots__ = ("children",)
    rank = _RANK_ADD

    def __init__(self, children: tuple):
        object.__setattr__(self, "children", children)
        object.__setattr__(
            self, "_hash", hash((_RANK_ADD,) + tuple(c._hash for c in children))
        )

    def __setattr__(self, *a):
        raise AttributeError("Expr nodes are immutable")

    def __eq__(self, other):
        return (
            isinstance(other, Add)
            and self._hash == other._hash
            and self.children == other.children
        )

    __hash__ = Expr.__hash__


class Mul(Expr):
    """N-ary product with canonically ordered children."""

    __slots__ = ("children",)
    rank = _RANK_MUL

    def __init__(self, children: tuple):
        object.__setattr__(self, "children", children)
        object.__setattr__(
            self, "_hash", hash((_RANK_MUL,) + tuple(c._hash for c in children))
        )

    def __setattr__(self, *a):
        raise AttributeError("Expr nodes are immutable")

    def __eq__(self, other):
        return (
            isinstance(other, Mul)
            and self._hash == other._hash
            and self.children == other.children
        )

    __hash__ = Expr.__hash__


class Pow(Expr):
    """Power with an exact rational exponent."""

    __slots__ = ("base", "exponent")
    rank = _RANK_POW

    def __init__(self, base: Expr, exponent: Fraction):
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "exponent", exponent)
        object.__setattr__(self, "_hash", hash((_RANK_POW, base._hash, exponent)))

    def __setattr__(self, *a):
        raise AttributeError("Expr nodes are immutable")

    def __eq__(self, other):
        return (
            isinstance(other, Pow)
            and self.exponent == other.exponent
            and self.base == other.base
        )

    __hash__ = Expr.__hash__


ZERO = Const(0)
ONE = Const(1)


def _coerce(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, float, Fraction)):
        return Const(x)
    raise TypeError(f"cannot coerce {type(x).__name__} to Expr")


# ---------------------------------------------------------------------------
# Canonical ordering
# ---------------------------------------------------------------------------


def _tree_cmp(a: Expr, b: Expr) -> int:
    """Deterministic total order on canonical trees (hash-randomization free)."""
    if a is b:
        return 0
    if a.rank != b.rank:
        return -1 if a.rank < b.rank else 1
    if isinstance(a, Const):
        if a.value != b.value:
            return -1 if a.value < b.value else 1
        return 0
    if isinstance(a, Var):
        return (a.index > b.index) - (a.index < b.index)
    if isinstance(a, Pow):
        c = _tree_cmp(a.base, b.base)
        if c:
            return c
        if a.exponent != b.exponent:
            return -1 if a.exponent < b.exponent else 1
        return 0
    if isinstance(a, Neg):
        return _tree_cmp(a.child, b.child)
    ca, cb = a.children, b.children
    if len(ca) != len(cb):
        return -1 if len(ca) < len(cb) else 1
    for x, y in zip(ca, cb):
        c = _tree_cmp(x, y)
        if c:
            return c
    return 0


class _OrderKey:
    __slots__ = ("node",)

    def __init__(self, node):
        self.node = node

    def __lt__(self, other):
        return _tree_cmp(self.node, other.node) < 0


def _sorted_children(children) -> tuple:
    return tuple(sorted(children, key=_OrderKey))


# ---------------------------------------------------------------------------
# Smart constructors (local simplification happens at build time)
# ---------------------------------------------------------------------------


def const(value: Number) -> Const:
    return Const(value)


def var(index: int) -> Var:
    return Var(index)


def _split_coeff(t: Expr):
    """Split a canonical non-constant term into (rational coefficient, core)."""
    if isinstance(t, Mul):
        first = t.children[0]
        if isinstance(first, Const):
            rest = t.children[1:]
            core = rest[0] if len(rest) == 1 else Mul(rest)
            return first.value, core
    return Fraction(1), t


def add(*terms) -> Expr:
    """Sum with flattening, constant folding and like-term collection.

    Terms that differ only by a rational coefficient merge, so exact
    cancellations (x - x, f*g - g*f) collapse to zero symbolically.  No
    distribution or polynomial expansion is performed.
    """
    acc = Fraction(0)
    coeffs: dict = {}
    order: list = []

    def take(t: Expr):
        nonlocal acc
        if isinstance(t, Const):
            acc += t.value
            return
        c, core = _split_coeff(t)
        if core in coeffs:
            coeffs[core] += c
        else:
            coeffs[core] = c
            order.append(core)

    for t in terms:
        t = _coerce(t)
        if isinstance(t, Add):
            for c in t.children:
                take(c)
        else:
            take(t)

    flat = []
    for core in order:
        c = coeffs[core]
        if c == 0:
            continue
        if c == 1:
            flat.append(core)
        elif isinstance(core, Mul):
            flat.append(Mul(_sorted_children(core.children + (Const(c),))))
        else:
            flat.append(Mul(_sorted_children((Const(c), core))))
    if acc != 0:
        flat.append(Const(acc))
    if not flat:
        return ZERO
    if len(flat) == 1:
        return flat[0]
    return Add(_sorted_children(flat))


def mul(*factors) -> Expr:
    """Product with flattening, constant folding and power collection.

    Factors with a common base merge by adding exponents.  Exponent
    cancellation assumes expressions are used away from domain
    boundaries (callers guard the singular set themselves).
    """
    acc = Fraction(1)
    powers: dict = {}
    order: list = []

    def take(f: Expr):
        nonlocal acc
        if isinstance(f, Const):
            acc *= f.value
            return
        if isinstance(f, Pow):
            base, exp = f.base, f.exponent
        else:
            base, exp = f, Fraction(1)
        if base in powers:
            powers[base] += exp
        else:
            powers[base] = exp
            order.append(base)

    for f in factors:
        f = _coerce(f)
        if isinstance(f, Mul):
            for c in f.children:
                take(c)
        else:
            take(f)

    if acc == 0:
        return ZERO
    flat = []
    for base in order:
        rebuilt = pow_(base, powers[base])
        if isinstance(rebuilt, Const):
            acc *= rebuilt.value
        elif isinstance(rebuilt, Mul):
            # constant-base fold may hand back a product; flatten once more
            for c in rebuilt.children:
                if isinstance(c, Const):
                    acc *= c.value
                else:
                    flat.append(c)
        else:
            flat.append(rebuilt)
    if acc == 0:
        return ZERO
    if len(flat) == 1 and isinstance(flat[0], Add) and acc != 1:
        # distribute the constant over the sum so that c*(a+b) and c*a + c*b
        # share one canonical form (keeps exact cancellations visible)
        return add(*[mul(Const(acc), t) for t in flat[0].children])
    if acc != 1:
        flat.append(Const(acc))
    if not flat:
        return ONE
    if len(flat) == 1:
        return flat[0]
    return Mul(_sorted_children(flat))


def pow_(base, exponent) -> Expr:
    """Power node; the exponent must be an exact rational.

    ``x^0`` collapses to 1 and ``x^1`` to ``x``; integer powers of
    constants fold exactly.  Domain questions (negative base under a
    fractional exponent, zero under a negative one) are deferred to
    evaluation.
    """
    base = _coerce(base)
    if isinstance(exponent, float):
        exponent = Fraction(exponent)
    elif isinstance(exponent, int):
        exponent = Fraction(exponent)
    if not isinstance(exponent, Fraction):
        raise TypeError("exponent must fold to an exact rational")
    if exponent == 0:
        return ONE
    if exponent == 1:
        return base
    if isinstance(base, Const):
        if exponent.denominator == 1 and (base.value != 0 or exponent > 0):
            return Const(base.value ** exponent.numerator)
        if base.value == 1:
            return ONE
    return Pow(base, exponent)


def neg(e) -> Expr:
    return mul(Const(-1), _coerce(e))


def sub(a, b) -> Expr:
    return add(_coerce(a), neg(b))


def div(a, b) -> Expr:
    return mul(_coerce(a), pow_(b, Fraction(-1)))


def sqrt_(e) -> Expr:
    return pow_(e, Fraction(1, 2))


def simplify(e: Expr) -> Expr:
    """Rebuild a tree through the smart constructors.

    Canonicalizes arbitrary (e.g. hand-assembled) trees: negations become
    products with -1, nested sums/products flatten, constants fold.
    Idempotent on its own output.
    """
    memo: dict = {}

    def walk(node: Expr) -> Expr:
        got = memo.get(id(node))
        if got is not None:
            return got
        if isinstance(node, (Const, Var)):
            out = node
        elif isinstance(node, Neg):
            out = neg(walk(node.child))
        elif isinstance(node, Add):
            out = add(*[walk(c) for c in node.children])
        elif isinstance(node, Mul):
            out = mul(*[walk(c) for c in node.children])
        elif isinstance(node, Pow):
            out = pow_(walk(node.base), node.exponent)
        else:
            raise TypeError(f"unknown node {type(node).__name__}")
        memo[id(node)] = out
        return out

    return walk(e)


# ---------------------------------------------------------------------------
# Calculus
# ---------------------------------------------------------------------------


def differentiate(e: Expr, index: int) -> Expr:
    """Exact symbolic partial derivative with respect to coordinate ``index``.

    Shared subtrees are differentiated once, so the result stays compact
    as a DAG even when the input reuses nodes heavily.
    """
    memo: dict = {}

    def d(node: Expr) -> Expr:
        got = memo.get(id(node))
        if got is not None:
            return got
        if isinstance(node, Const):
            out = ZERO
        elif isinstance(node, Var):
            out = ONE if node.index == index else ZERO
        elif isinstance(node, Neg):
            out = neg(d(node.child))
        elif isinstance(node, Add):
            out = add(*[d(c) for c in node.children])
        elif isinstance(node, Mul):
            terms = []
            kids = node.children
            for i, c in enumerate(kids):
                dc = d(c)
                if dc is ZERO or (isinstance(dc, Const) and dc.value == 0):
                    continue
                terms.append(mul(*kids[:i], dc, *kids[i + 1 :]))
            out = add(*terms)
        elif isinstance(node, Pow):
            db = d(node.base)
            if isinstance(db, Const) and db.value == 0:
                out = ZERO
            else:
                out = mul(
                    Const(node.exponent),
                    pow_(node.base, node.exponent - 1),
                    db,
                )
        else:
            raise TypeError(f"unknown node {type(node).__name__}")
        memo[id(node)] = out
        return out

    return d(e)


def gradient(e: Expr, nvars: int) -> list:
    return [differentiate(e, i) for i in range(nvars)]


def _pow_float(base: float, exponent: Fraction) -> float:
    if exponent.denominator == 1:
        n = exponent.numerator
        if base == 0.0 and n < 0:
            raise DivisionByZero(f"0.0 raised to integer power {n}")
        return base ** n
    if base <= 0.0:
        raise NonSmoothPoint(
            f"non-integer power {exponent} of non-positive base {base!r}"
        )
    return base ** float(exponent)


def evaluate(e: Expr, point: Sequence[float]) -> float:
    """Evaluate at a coordinate tuple; IEEE double, deterministic.

    Raises :class:`NonSmoothPoint` for a non-integer power of a
    non-positive base and :class:`DivisionByZero` for a negative integer
    power of zero.
    """
    memo: dict = {}

    def ev(node: Expr) -> float:
        got = memo.get(id(node))
        if got is not None:
            return got
        if isinstance(node, Const):
            out = node._float
        elif isinstance(node, Var):
            out = float(point[node.index])
        elif isinstance(node, Neg):
            out = -ev(node.child)
        elif isinstance(node, Add):
            out = 0.0
            for c in node.children:
                out = out + ev(c)
        elif isinstance(node, Mul):
            out = 1.0
            for c in node.children:
                out = out * ev(c)
        elif isinstance(node, Pow):
            out = _pow_float(ev(node.base), node.exponent)
        else:
            raise TypeError(f"unknown node {type(node).__name__}")
        memo[id(node)] = out
        return out

    return ev(e)


def substitute(e: Expr, mapping: Mapping[int, Expr]) -> Expr:
    """Replace variables by expressions; the result is canonical."""
    memo: dict = {}

    def sub_(node: Expr) -> Expr:
        got = memo.get(id(node))
        if got is not None:
            return got
        if isinstance(node, Const):
            out = node
        elif isinstance(node, Var):
            out = mapping.get(node.index, node)
        elif isinstance(node, Neg):
            out = neg(sub_(node.child))
        elif isinstance(node, Add):
            out = add(*[sub_(c) for c in node.children])
        elif isinstance(node, Mul):
            out = mul(*[sub_(c) for c in node.children])
        elif isinstance(node, Pow):
            out = pow_(sub_(node.base), node.exponent)
        else:
            raise TypeError(f"unknown node {type(node).__name__}")
        memo[id(node)] = out
        return out

    return sub_(e)


def free_vars(e: Expr) -> set:
    """Set of variable indices appearing in the tree."""
    seen: set = set()
    out: set = set()
    stack = [e]
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        if isinstance(node, Var):
            out.add(node.index)
        elif isinstance(node, Neg):
            stack.append(node.child)
        elif isinstance(node, (Add, Mul)):
            stack.extend(node.children)
        elif isinstance(node, Pow):
            stack.append(node.base)
    return out


# ---------------------------------------------------------------------------
# Compilation
# ---------------------------------------------------------------------------


def _rp(base: float, fexp: float) -> float:
    # runtime helper for compiled fractional powers
    if base <= 0.0:
        raise NonSmoothPoint(f"non-integer power of non-positive base {base!r}")
    return base ** fexp


def compile_expr(e: Expr, nvars: int) -> Callable[[Sequence[float]], float]:
    """Compile to a Python callable ``f(point) -> float``.

    Point semantics and error behaviour match :func:`evaluate` exactly;
    shared subtrees are emitted once (the generated code is linear in the
    DAG size, not the tree size).
    """
    names: dict = {}
    lines = []
    counter = [0]

    def fresh() -> str:
        counter[0] += 1
        return f"t{counter[0]}"

    # iterative post-order over the DAG
    stack = [(e, False)]
    while stack:
        node, ready = stack.pop()
        if id(node) in names:
            continue
        if not ready:
            stack.append((node, True))
            if isinstance(node, Neg):
                stack.append((node.child, False))
            elif isinstance(node, (Add, Mul)):
                for c in node.children:
                    stack.append((c, False))
            elif isinstance(node, Pow):
                stack.append((node.base, False))
            continue
        if id(node) in names:
            continue
        if isinstance(node, Const):
            names[id(node)] = repr(node._float)
            continue
        if isinstance(node, Var):
            if node.index >= nvars:
                raise ValueError(
                    f"variable index {node.index} out of range for {nvars} coords"
                )
            names[id(node)] = f"p[{node.index}]"
            continue
        name = fresh()
        if isinstance(node, Neg):
            rhs = f"-({names[id(node.child)]})"
        elif isinstance(node, Add):
            rhs = " + ".join(names[id(c)] for c in node.children)
        elif isinstance(node, Mul):
            rhs = " * ".join(names[id(c)] for c in node.children)
        elif isinstance(node, Pow):
            b = names[id(node.base)]
            q = node.exponent
            if q.denominator == 1:
                rhs = f"{b} ** {q.numerator}"
            else:
                rhs = f"_rp({b}, {float(q)!r})"
        else:
            raise TypeError(f"unknown node {type(node).__name__}")
        lines.append(f"    {name} = {rhs}")
        names[id(node)] = name

    body = "\n".join(lines) if lines else ""
    src = f"def _f(p):\n{body}\n    return {names[id(e)]}\n"
    namespace = {"_rp": _rp}
    exec(compile(src, "<compiled-expr>", "exec"), namespace)
    raw = namespace["_f"]

    def f(point, _raw=raw):
        try:
            return _raw(point)
        except ZeroDivisionError:
            raise DivisionByZero("zero raised to a negative integer power") from None

    f.source = src  # useful when debugging generated kernels
    return f


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

_NUM_CHARS = set("0123456789")


class _Token:
    __slots__ = ("kind", "text", "offset")

    def __init__(self, kind, text, offset):
        self.kind = kind
        self.text = text
        self.offset = offset


def _tokenize(source: str):
    tokens = []
    i, n = 0, len(source)
    while i < n:
        ch = source[i]
        if ch in " \t\r\n":
            i += 1
            continue
        if ch in "+-*/^()":
            tokens.append(_Token(ch, ch, i))
            i += 1
            continue
        if ch in _NUM_CHARS or (ch == "." and i + 1 < n and source[i + 1] in _NUM_CHARS):
            j = i
            while j < n and source[j] in _NUM_CHARS:
                j += 1
            if j < n and source[j] == ".":
                j += 1
                while j < n and source[j] in _NUM_CHARS:
                    j += 1
            if j < n and source[j] in "eE":
                k = j + 1
                if k < n and source[k] in "+-":
                    k += 1
                if k < n and source[k] in _NUM_CHARS:
                    k += 1
                    while k < n and source[k] in _NUM_CHARS:
                        k += 1
                    j = k
            tokens.append(_Token("num", source[i:j], i))
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            tokens.append(_Token("ident", source[i:j], i))
            i = j
            continue
        raise ParseError(f"unexpected character {ch!r}", i)
    tokens.append(_Token("end", "", n))
    return tokens


class _Parser:
    def __init__(self, tokens, coords: CoordSystem):
        self.tokens = tokens
        self.pos = 0
        self.coords = coords

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def next(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str) -> _Token:
        tok = self.next()
        if tok.kind != kind:
            raise ParseError(f"expected {kind!r}, got {tok.text!r}", tok.offset)
        return tok

    def parse(self) -> Expr:
        e = self.expr()
        tok = self.peek()
        if tok.kind != "end":
            raise ParseError(f"unexpected trailing input {tok.text!r}", tok.offset)
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.peek().kind in ("+", "-"):
            op = self.next().kind
            rhs = self.term()
            e = add(e, rhs) if op == "+" else sub(e, rhs)
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.peek().kind in ("*", "/"):
            op = self.next().kind
            rhs = self.unary()
            e = mul(e, rhs) if op == "*" else div(e, rhs)
        return e

    def unary(self) -> Expr:
        if self.peek().kind == "-":
            self.next()
            return neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek().kind == "^":
            tok = self.next()
            exp_tree = self.unary()  # right-associative
            exp_tree = simplify(exp_tree)
            if not isinstance(exp_tree, Const):
                raise ParseError(
                    "exponent does not fold to a rational constant", tok.offset
                )
            return pow_(base, exp_tree.value)
        return base

    def atom(self) -> Expr:
        tok = self.next()
        if tok.kind == "num":
            return Const(Fraction(tok.text))
        if tok.kind == "ident":
            if tok.text == "sqrt":
                self.expect("(")
                inner = self.expr()
                self.expect(")")
                return sqrt_(inner)
            try:
                idx = self.coords.index(tok.text)
            except KeyError:
                raise ParseError(f"unknown identifier {tok.text!r}", tok.offset) from None
            return Var(idx)
        if tok.kind == "(":
            inner = self.expr()
            self.expect(")")
            return inner
        raise ParseError(f"unexpected token {tok.text!r}", tok.offset)


def parse_expr(source: str, coords: CoordSystem) -> Expr:
    """Parse the expression grammar (see README for the EBNF).

    Numbers may be integers, decimals or scientific notation; ``a/b`` with
    constant operands folds to an exact rational.  ``sqrt(e)`` is sugar
    for ``e^(1/2)``.  Precedence: ``^`` > unary ``-`` > ``* /`` > ``+ -``;
    ``^`` is right-associative and its exponent must fold to a rational
    constant.
    """
    return _Parser(_tokenize(source), coords).parse()


# ---------------------------------------------------------------------------
# Unparser
# ---------------------------------------------------------------------------


def _unparse_const(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def _needs_parens(child: Expr, parent_level: int) -> bool:
    # levels: atom=4, pow=3, unary/-const=2.5 (handled ad hoc), mul=2, add=1
    lvl = _level(child)
    return lvl < parent_level


def _level(e: Expr) -> int:
    if isinstance(e, Var):
        return 4
    if isinstance(e, Const):
        if e.value < 0 or e.value.denominator != 1:
            return 1  # negative or fractional constants read like -a or a/b
        return 4
    if isinstance(e, Pow):
        return 3
    if isinstance(e, Neg):
        return 2
    if isinstance(e, Mul):
        return 2
    return 1  # Add


def _negated_term(t: Expr):
    """(True, |t|) when a canonical term carries a negative coefficient."""
    if isinstance(t, Const) and t.value < 0:
        return True, Const(-t.value)
    if isinstance(t, Mul):
        first = t.children[0]
        if isinstance(first, Const) and first.value < 0:
            return True, mul(Const(-first.value), *t.children[1:])
    return False, t


def unparse(e: Expr, coords: CoordSystem) -> str:
    """Render to the expression grammar; ``parse(unparse(e))`` rebuilds ``e``
    for canonical trees."""

    def u(node: Expr, parent_level: int) -> str:
        if isinstance(node, Const):
            s = _unparse_const(node.value)
        elif isinstance(node, Var):
            s = coords.names[node.index]
        elif isinstance(node, Neg):
            s = "-" + u(node.child, 3)
        elif isinstance(node, Add):
            parts = [u(node.children[0], 1)]
            for c in node.children[1:]:
                negated, core = _negated_term(c)
                # the subtrahend binds like a product operand
                parts.append(" - " + u(core, 2) if negated else " + " + u(core, 1))
            s = "".join(parts)
        elif isinstance(node, Mul):
            negated, core = _negated_term(node)
            if negated:
                s = "-" + u(core, 2)
            else:
                s = "*".join(u(c, 3) for c in node.children)
        elif isinstance(node, Pow):
            b = u(node.base, 4)
            q = node.exponent
            if q.denominator == 1 and q >= 0:
                s = f"{b}^{q.numerator}"
            else:
                s = f"{b}^({_unparse_const(q)})"
        else:
            raise TypeError(f"unknown node {type(node).__name__}")
        if _needs_parens(node, parent_level):
            return f"({s})"
        return s

    return u(e, 1)


def _repr_tree(e: Expr, depth: int = 0) -> str:
    if depth > 4:
        return "..."
    if isinstance(e, Const):
        return _unparse_const(e.value)
    if isinstance(e, Var):
        return f"x[{e.index}]"
    if isinstance(e, Neg):
        return f"neg({_repr_tree(e.child, depth + 1)})"
    if isinstance(e, Add):
        return "add(" + ", ".join(_repr_tree(c, depth + 1) for c in e.children) + ")"
    if isinstance(e, Mul):
        return "mul(" + ", ".join(_repr_tree(c, depth + 1) for c in e.children) + ")"
    if isinstance(e, Pow):
        return f"pow({_repr_tree(e.base, depth + 1)}, {e.exponent})"
    return "?"
