"""Exact scalar arithmetic.

Laurent polynomials in the indeterminate v over the rationals, the fraction
field Q(v) in a canonical form (so equality is structural), quantum
integers/factorials/binomials, the bar involution v -> v^-1, and the exact
numeric ring Q(sqrt(q)) used on the finite-field side.

No floating point anywhere; every identity checked downstream is exact.
"""
from __future__ import annotations

from fractions import Fraction
from math import isqrt
from typing import Iterable, Mapping, Union

Rat = Union[int, Fraction]


def _norm_coeff(c: Rat) -> Rat:
    # keep ints as ints: Fraction arithmetic is much slower
    if isinstance(c, Fraction) and c.denominator == 1:
        return int(c)
    return c


class LaurentPoly:
    """Laurent polynomial in v: a finite map exponent -> nonzero rational."""

    __slots__ = ("coeffs", "_hash")

    def __init__(self, coeffs: Mapping[int, Rat] | None = None):
        d = {}
        if coeffs:
            for e, c in coeffs.items():
                if c:
                    d[e] = _norm_coeff(c)
        object.__setattr__(self, "coeffs", d)
        object.__setattr__(self, "_hash", None)

    def __setattr__(self, k, v):
        raise AttributeError("LaurentPoly is immutable")

    # --- constructors -------------------------------------------------
    @staticmethod
    def const(c: Rat) -> LaurentPoly:
        return LaurentPoly({0: c})

    @staticmethod
    def v_power(e: int, c: Rat = 1) -> LaurentPoly:
        return LaurentPoly({e: c})

    # --- structure ----------------------------------------------------
    def is_zero(self) -> bool:
        return not self.coeffs

    def __bool__(self) -> bool:
        return bool(self.coeffs)

    def __eq__(self, other) -> bool:
        if not isinstance(other, LaurentPoly):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self):
        h = self._hash
        if h is None:
            h = hash(frozenset((e, Fraction(c)) for e, c in self.coeffs.items()))
            object.__setattr__(self, "_hash", h)
        return h

    def degree(self) -> int:
        """Largest exponent; raises on zero."""
        return max(self.coeffs)

    def low(self) -> int:
        """Smallest exponent; raises on zero."""
        return min(self.coeffs)

    def coeff(self, e: int) -> Rat:
        return self.coeffs.get(e, 0)

    # --- arithmetic ---------------------------------------------------
    def __add__(self, other: LaurentPoly) -> LaurentPoly:
        a, b = self.coeffs, other.coeffs
        if not a:
            return other
        if not b:
            return self
        d = dict(a)
        for e, c in b.items():
            s = d.get(e, 0) + c
            if s:
                d[e] = s
            elif e in d:
                del d[e]
        out = LaurentPoly.__new__(LaurentPoly)
        object.__setattr__(out, "coeffs", d)
        object.__setattr__(out, "_hash", None)
        return out

    def __neg__(self) -> LaurentPoly:
        return LaurentPoly({e: -c for e, c in self.coeffs.items()})

    def __sub__(self, other: LaurentPoly) -> LaurentPoly:
        return self + (-other)

    def __mul__(self, other: LaurentPoly) -> LaurentPoly:
        a, b = self.coeffs, other.coeffs
        if not a or not b:
            return _L_ZERO
        if len(a) > len(b):
            a, b = b, a
        d: dict[int, Rat] = {}
        for e1, c1 in a.items():
            for e2, c2 in b.items():
                e = e1 + e2
                s = d.get(e, 0) + c1 * c2
                if s:
                    d[e] = s
                elif e in d:
                    del d[e]
        out = LaurentPoly.__new__(LaurentPoly)
        object.__setattr__(out, "coeffs", d)
        object.__setattr__(out, "_hash", None)
        return out

    def scale(self, c: Rat) -> LaurentPoly:
        if not c:
            return _L_ZERO
        return LaurentPoly({e: x * c for e, x in self.coeffs.items()})

    def shift(self, k: int) -> LaurentPoly:
        """Multiply by v^k."""
        if k == 0:
            return self
        return LaurentPoly({e + k: c for e, c in self.coeffs.items()})

    def __pow__(self, n: int) -> LaurentPoly:
        if n < 0:
            raise ValueError(f"negative power {n} on a Laurent polynomial")
        out = _L_ONE
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def subs_v_power(self, k: int) -> LaurentPoly:
        """Substitute v -> v^k."""
        return LaurentPoly({e * k: c for e, c in self.coeffs.items()})

    def bar(self) -> LaurentPoly:
        """v -> v^-1."""
        return LaurentPoly({-e: c for e, c in self.coeffs.items()})

    def __repr__(self):
        return f"LaurentPoly({render_laurent(self)!r})"


_L_ZERO = LaurentPoly()
_L_ONE = LaurentPoly({0: 1})


def _poly_divmod(a: LaurentPoly, b: LaurentPoly) -> tuple[LaurentPoly, LaurentPoly]:
    """Ordinary-polynomial division (both arguments with exponents >= 0)."""
    if b.is_zero():
        raise ZeroDivisionError("polynomial division by zero")
    q: dict[int, Rat] = {}
    r = a
    db = b.degree()
    lb = b.coeffs[db]
    while r.coeffs and r.degree() >= db:
        dr = r.degree()
        c = Fraction(r.coeffs[dr]) / lb
        q[dr - db] = _norm_coeff(c)
        r = r - b.shift(dr - db).scale(c)
    return LaurentPoly(q), r


def _poly_content(a: LaurentPoly) -> Fraction:
    """Positive rational c with a/c primitive over Z, signed by leading coeff."""
    from math import gcd, lcm

    nums = [Fraction(c).numerator for c in a.coeffs.values()]
    dens = [Fraction(c).denominator for c in a.coeffs.values()]
    g = 0
    for n in nums:
        g = gcd(g, abs(n))
    m = 1
    for d in dens:
        m = lcm(m, d)
    c = Fraction(g, m)
    if a.coeffs[a.degree()] < 0:
        c = -c
    return c


def _poly_gcd(a: LaurentPoly, b: LaurentPoly) -> LaurentPoly:
    """Monic-free gcd of ordinary polynomials, primitive with positive lead."""
    while not b.is_zero():
        _, r = _poly_divmod(a, b)
        a, b = b, r
    if a.is_zero():
        return _L_ONE
    c = _poly_content(a)
    return a.scale(1 / c)


def _poly_exact_div(a: LaurentPoly, b: LaurentPoly) -> LaurentPoly:
    q, r = _poly_divmod(a, b)
    if not r.is_zero():
        raise ArithmeticError("division was expected to be exact")
    return q


class QVScalar:
    """Element of Q(v) as a canonical fraction of Laurent polynomials.

    Canonical form: numerator and denominator share no polynomial factor, the
    denominator is an ordinary polynomial with nonzero constant term, positive
    leading coefficient and primitive integer content.  Equality and hashing
    are structural.
    """

    __slots__ = ("num", "den", "_hash")

    def __init__(self, num: LaurentPoly, den: LaurentPoly = _L_ONE):
        num, den = _canonical_fraction(num, den)
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)
        object.__setattr__(self, "_hash", None)

    def __setattr__(self, k, v):
        raise AttributeError("QVScalar is immutable")

    # --- constructors -------------------------------------------------
    @staticmethod
    def from_rat(c: Rat) -> QVScalar:
        return QVScalar(LaurentPoly.const(c))

    @staticmethod
    def v_power(e: int, c: Rat = 1) -> QVScalar:
        return QVScalar(LaurentPoly.v_power(e, c))

    # --- structure ----------------------------------------------------
    def is_zero(self) -> bool:
        return not self.num.coeffs

    def __bool__(self) -> bool:
        return bool(self.num.coeffs)

    def is_one(self) -> bool:
        return self.num.coeffs == {0: 1} and self.den.coeffs == {0: 1}

    def is_laurent(self) -> bool:
        return self.den.coeffs == {0: 1}

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = QVScalar.from_rat(other)
        if not isinstance(other, QVScalar):
            return NotImplemented
        return self.num == other.num and self.den == other.den

    def __hash__(self):
        h = self._hash
        if h is None:
            h = hash((self.num, self.den))
            object.__setattr__(self, "_hash", h)
        return h

    # --- arithmetic ---------------------------------------------------
    def __add__(self, other) -> QVScalar:
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if self.den is other.den or self.den == other.den:
            return QVScalar(self.num + other.num, self.den)
        return QVScalar(self.num * other.den + other.num * self.den,
                        self.den * other.den)

    __radd__ = __add__

    def __neg__(self) -> QVScalar:
        out = QVScalar.__new__(QVScalar)
        object.__setattr__(out, "num", -self.num)
        object.__setattr__(out, "den", self.den)
        object.__setattr__(out, "_hash", None)
        return out

    def __sub__(self, other) -> QVScalar:
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> QVScalar:
        return _coerce(other) + (-self)

    def __mul__(self, other) -> QVScalar:
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return QVScalar(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __truediv__(self, other) -> QVScalar:
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if other.is_zero():
            raise ZeroDivisionError("division by zero in Q(v)")
        return QVScalar(self.num * other.den, self.den * other.num)

    def __rtruediv__(self, other) -> QVScalar:
        return _coerce(other) / self

    def __pow__(self, n: int) -> QVScalar:
        if n < 0:
            return (QV_ONE / self) ** (-n)
        out = QV_ONE
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __repr__(self):
        return f"QVScalar({render_scalar(self)!r})"


def _coerce(x) -> QVScalar:
    if isinstance(x, QVScalar):
        return x
    if isinstance(x, (int, Fraction)):
        return QVScalar.from_rat(x)
    if isinstance(x, LaurentPoly):
        return QVScalar(x)
    return NotImplemented


def _canonical_fraction(num: LaurentPoly, den: LaurentPoly) -> tuple[LaurentPoly, LaurentPoly]:
    if den.is_zero():
        raise ZeroDivisionError("zero denominator in Q(v)")
    if num.is_zero():
        return _L_ZERO, _L_ONE
    if len(den.coeffs) == 1:
        # monomial denominator: fold into the numerator
        e, c = next(iter(den.coeffs.items()))
        inv = 1 / Fraction(c)
        return num.shift(-e).scale(inv), _L_ONE
    k = den.low()
    den = den.shift(-k)
    num = num.shift(-k)
    m = num.low()
    num_poly = num.shift(-m)
    g = _poly_gcd(num_poly, den)
    if g.coeffs != {0: 1}:
        num_poly = _poly_exact_div(num_poly, g)
        den = _poly_exact_div(den, g)
    if len(den.coeffs) == 1:
        e, c = next(iter(den.coeffs.items()))
        return num_poly.shift(m - e).scale(1 / Fraction(c)), _L_ONE
    c = _poly_content(den)
    if c != 1:
        den = den.scale(1 / c)
        num_poly = num_poly.scale(1 / c)
    return num_poly.shift(m), den


QV_ZERO = QVScalar(_L_ZERO)
QV_ONE = QVScalar(_L_ONE)
QV_V = QVScalar.v_power(1)


def qv(x) -> QVScalar:
    """Coerce an int, Fraction or LaurentPoly into Q(v)."""
    out = _coerce(x)
    if out is NotImplemented:
        raise TypeError(f"cannot coerce {type(x).__name__} into Q(v)")
    return out


def v_power(e: int, c: Rat = 1) -> QVScalar:
    return QVScalar.v_power(e, c)


# --- quantum combinatorics ---------------------------------------------

def quantum_integer_poly(a: int, k: int = 1) -> LaurentPoly:
    if a < 0:
        raise ValueError(f"quantum integer needs a >= 0, got {a}")
    if k < 1:
        raise ValueError(f"quantum integer needs k >= 1, got {k}")
    return LaurentPoly({k * (a - 1 - 2 * t): 1 for t in range(a)})


def quantum_integer(a: int, k: int = 1) -> QVScalar:
    """(v^(ka) - v^(-ka)) / (v^k - v^(-k)) as an exact Laurent polynomial."""
    return QVScalar(quantum_integer_poly(a, k))


def quantum_integer_signed(a: int, k: int = 1) -> QVScalar:
    """Quantum integer extended to negative arguments (odd in a)."""
    if a >= 0:
        return quantum_integer(a, k)
    return -quantum_integer(-a, k)


def quantum_factorial(a: int, k: int = 1) -> QVScalar:
    if a < 0:
        raise ValueError(f"quantum factorial needs a >= 0, got {a}")
    out = _L_ONE
    for m in range(1, a + 1):
        out = out * quantum_integer_poly(m, k)
    return QVScalar(out)


def quantum_binomial(b: int, a: int, k: int = 1) -> QVScalar:
    if not 0 <= a <= b:
        raise ValueError(f"quantum binomial needs 0 <= a <= b, got a={a}, b={b}")
    return quantum_factorial(b, k) / (quantum_factorial(a, k) * quantum_factorial(b - a, k))


def bar(x: QVScalar) -> QVScalar:
    """The involution v -> v^-1, extended to fractions."""
    return QVScalar(x.num.bar(), x.den.bar())


# --- membership in the subring of functions regular at v = infinity ----

def degree_at_infinity(x: QVScalar) -> int | None:
    """deg(num) - deg(den), or None for zero."""
    if x.is_zero():
        return None
    return x.num.degree() - x.den.degree()


def in_regular_at_infinity(x: QVScalar) -> bool:
    """True iff x lies in Q[[v^-1]] intersect Q(v)."""
    d = degree_at_infinity(x)
    return d is None or d <= 0


def in_one_plus_vinv(x: QVScalar) -> bool:
    """True iff x lies in 1 + v^-1 Q[[v^-1]] intersect Q(v)."""
    d = degree_at_infinity(x - QV_ONE)
    return d is None or d <= -1


def is_integer_laurent(x: QVScalar) -> bool:
    """Laurent polynomial with integer coefficients."""
    return x.is_laurent() and \
        all(Fraction(c).denominator == 1 for c in x.num.coeffs.values())


def laurent_negative_part(x: QVScalar) -> QVScalar:
    """Truncation to strictly negative exponents; x must be Laurent."""
    if not x.is_laurent():
        raise ValueError("negative part needs a Laurent polynomial")
    return QVScalar(LaurentPoly({e: c for e, c in x.num.coeffs.items()
                                 if e < 0}))


# --- Q(sqrt(q)) ----------------------------------------------------------

class SqrtQScalar:
    """a + b*sqrt(q) with exact rational a, b; b folds into a when q is square."""

    __slots__ = ("a", "b", "q", "_root")

    def __init__(self, a: Rat, b: Rat, q: int):
        if q < 2:
            raise ValueError(f"q must be a prime power >= 2, got {q}")
        r = isqrt(q)
        if r * r == q:
            a = Fraction(a) + Fraction(b) * r
            b = Fraction(0)
            root = r
        else:
            a = Fraction(a)
            b = Fraction(b)
            root = None
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "_root", root)

    def __setattr__(self, k, v):
        raise AttributeError("SqrtQScalar is immutable")

    @staticmethod
    def from_rat(c: Rat, q: int) -> SqrtQScalar:
        return SqrtQScalar(c, 0, q)

    @staticmethod
    def sqrt_q(q: int) -> SqrtQScalar:
        return SqrtQScalar(0, 1, q)

    def is_zero(self) -> bool:
        return not self.a and not self.b

    def __bool__(self) -> bool:
        return bool(self.a) or bool(self.b)

    def _check(self, other) -> SqrtQScalar:
        if isinstance(other, (int, Fraction)):
            return SqrtQScalar.from_rat(other, self.q)
        if isinstance(other, SqrtQScalar):
            if other.q != self.q:
                raise ValueError(f"mixed base fields: sqrt({self.q}) vs sqrt({other.q})")
            return other
        return NotImplemented

    def __eq__(self, other):
        o = self._check(other)
        if o is NotImplemented:
            return NotImplemented
        return self.a == o.a and self.b == o.b

    def __hash__(self):
        return hash((self.a, self.b, self.q))

    def __add__(self, other):
        o = self._check(other)
        if o is NotImplemented:
            return NotImplemented
        return SqrtQScalar(self.a + o.a, self.b + o.b, self.q)

    __radd__ = __add__

    def __neg__(self):
        return SqrtQScalar(-self.a, -self.b, self.q)

    def __sub__(self, other):
        o = self._check(other)
        if o is NotImplemented:
            return NotImplemented
        return SqrtQScalar(self.a - o.a, self.b - o.b, self.q)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._check(other)
        if o is NotImplemented:
            return NotImplemented
        return SqrtQScalar(self.a * o.a + self.b * o.b * self.q,
                           self.a * o.b + self.b * o.a, self.q)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._check(other)
        if o is NotImplemented:
            return NotImplemented
        n = o.a * o.a - o.b * o.b * self.q
        if not n:
            if not o.a and not o.b:
                raise ZeroDivisionError("division by zero in Q(sqrt(q))")
            raise ArithmeticError("norm vanished on a nonzero element; q is not squarefree-compatible")
        return self * SqrtQScalar(o.a / n, -o.b / n, self.q)

    def __rtruediv__(self, other):
        return SqrtQScalar.from_rat(other, self.q) / self

    def __pow__(self, n: int):
        if n < 0:
            return (SqrtQScalar.from_rat(1, self.q) / self) ** (-n)
        out = SqrtQScalar.from_rat(1, self.q)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __repr__(self):
        return f"SqrtQScalar({render_sqrtq(self)!r})"


def sqrt_q_power(e: int, q: int) -> SqrtQScalar:
    """(sqrt q)^e for any integer e, exact."""
    half, odd = divmod(e, 2)
    base = Fraction(q) ** half
    if odd:
        return SqrtQScalar(0, base, q)
    return SqrtQScalar(base, 0, q)


def evaluate_laurent_at_sqrt_q(p: LaurentPoly, q: int) -> SqrtQScalar:
    a = Fraction(0)
    b = Fraction(0)
    for e, c in p.coeffs.items():
        half, odd = divmod(e, 2)
        t = Fraction(c) * (Fraction(q) ** half)
        if odd:
            b += t
        else:
            a += t
    return SqrtQScalar(a, b, q)


def evaluate_at_sqrt_q(x: QVScalar, q: int) -> SqrtQScalar:
    """Exact value of x at v = sqrt(q); raises on a pole."""
    den = evaluate_laurent_at_sqrt_q(x.den, q)
    if den.is_zero():
        raise ZeroDivisionError(f"pole at v = sqrt({q})")
    return evaluate_laurent_at_sqrt_q(x.num, q) / den


# --- rendering and parsing ----------------------------------------------

def _render_term(c: Rat, e: int) -> str:
    if e == 0:
        return str(c)
    vpart = "v" if e == 1 else f"v^{e}"
    if c == 1:
        return vpart
    return f"{c}*{vpart}"


def render_laurent(p: LaurentPoly) -> str:
    if p.is_zero():
        return "0"
    parts = []
    for e in sorted(p.coeffs, reverse=True):
        c = p.coeffs[e]
        if not parts:
            parts.append(_render_term(c, e) if c > 0 else "-" + _render_term(-c, e))
        elif c > 0:
            parts.append("+ " + _render_term(c, e))
        else:
            parts.append("- " + _render_term(-c, e))
    return " ".join(parts)


def render_scalar(x: QVScalar) -> str:
    if x.is_laurent():
        return render_laurent(x.num)
    return f"({render_laurent(x.num)})/({render_laurent(x.den)})"


def render_sqrtq(x: SqrtQScalar) -> str:
    if not x.b:
        return str(x.a)
    root = f"sqrt({x.q})"
    if x.b == 1:
        bpart = root
    elif x.b == -1:
        bpart = f"-{root}"
    else:
        bpart = f"{x.b}*{root}"
    if not x.a:
        return bpart
    if x.b > 0:
        return f"{x.a} + {bpart}"
    return f"{x.a} - {bpart.lstrip('-')}"


class _Tokens:
    def __init__(self, text: str):
        self.toks: list[str] = []
        i, n = 0, len(text)
        while i < n:
            ch = text[i]
            if ch.isspace():
                i += 1
            elif ch.isdigit():
                j = i
                while j < n and text[j].isdigit():
                    j += 1
                self.toks.append(text[i:j])
                i = j
            elif ch in "+-*/^()v":
                self.toks.append(ch)
                i += 1
            else:
                raise ValueError(f"unexpected character {ch!r} in scalar literal")
        self.pos = 0

    def peek(self) -> str | None:
        return self.toks[self.pos] if self.pos < len(self.toks) else None

    def next(self) -> str:
        t = self.peek()
        if t is None:
            raise ValueError("unexpected end of scalar literal")
        self.pos += 1
        return t


def _parse_expr(tk: _Tokens) -> QVScalar:
    out = _parse_product(tk)
    while tk.peek() in ("+", "-"):
        op = tk.next()
        rhs = _parse_product(tk)
        out = out + rhs if op == "+" else out - rhs
    return out


def _parse_product(tk: _Tokens) -> QVScalar:
    out = _parse_factor(tk)
    while tk.peek() in ("*", "/"):
        op = tk.next()
        rhs = _parse_factor(tk)
        out = out * rhs if op == "*" else out / rhs
    return out


def _parse_factor(tk: _Tokens) -> QVScalar:
    neg = False
    while tk.peek() == "-":
        tk.next()
        neg = not neg
    atom = _parse_atom(tk)
    if tk.peek() == "^":
        tk.next()
        sign = 1
        if tk.peek() == "-":
            tk.next()
            sign = -1
        e = sign * int(tk.next())
        atom = atom ** e
    return -atom if neg else atom


def _parse_atom(tk: _Tokens) -> QVScalar:
    t = tk.next()
    if t == "v":
        return QV_V
    if t == "(":
        inner = _parse_expr(tk)
        if tk.next() != ")":
            raise ValueError("unbalanced parentheses in scalar literal")
        return inner
    if t.isdigit():
        return QVScalar.from_rat(int(t))
    raise ValueError(f"unexpected token {t!r} in scalar literal")


def parse_scalar(text: str) -> QVScalar:
    """Parse the rendering grammar, e.g. '3*v^2 - v^-1 + 1/2'."""
    tk = _Tokens(text)
    out = _parse_expr(tk)
    if tk.peek() is not None:
        raise ValueError(f"trailing input in scalar literal at token {tk.peek()!r}")
    return out
