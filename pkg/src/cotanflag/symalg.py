"""Exact arithmetic kernel.

Sparse multivariate polynomials and rational functions over arbitrary-precision
rationals, plus the handful of operations everything upstream leans on:
symmetrization over variable groups, exact division with a remainder witness,
and seeded rational sample points that avoid prescribed denominators.

Variables live in one fixed global order (t-blocks, theta-blocks, gamma-blocks,
z, h, q, qt, kappa, s-blocks, x, u, v) so every serialized polynomial is
canonical regardless of how it was built.  Exponent vectors are packed into
single integers (9 bits per variable), which keeps the multiplication kernel
to one integer addition per term pair.
"""

from __future__ import annotations

import heapq
import itertools
import math
import random
import re
from fractions import Fraction

try:
    from gmpy2 import mpq as _mpq

    def Q(a=0, b=1):
        """Exact rational scalar."""
        return _mpq(a, b)
except ImportError:  # pragma: no cover - gmpy2 is a declared dependency
    def Q(a=0, b=1):
        return Fraction(a, b)

QZERO = Q(0)
QONE = Q(1)

NEG_INF = float("-inf")  # degree of the zero polynomial

_BITS = 9
_MASK = (1 << _BITS) - 1

_VAR_CLASS = {
    "t": 0, "th": 1, "g": 2, "z": 3, "h": 4, "q": 5, "qt": 6,
    "kp": 7, "s": 8, "x": 9, "u": 10, "v": 11,
}
_VAR_RE = re.compile(r"^([a-z]+)(\d+)?(?:_(\d+))?$")


def var_key(name):
    """Sort key realizing the global variable order."""
    m = _VAR_RE.match(name)
    if m and m.group(1) in _VAR_CLASS:
        return (_VAR_CLASS[m.group(1)], int(m.group(2) or 0), int(m.group(3) or 0), name)
    return (99, 0, 0, name)


def sort_vars(names):
    return tuple(sorted(set(names), key=var_key))


class NonDivisible(ArithmeticError):
    """Raised by exact_divide; carries the canonical remainder as witness."""

    def __init__(self, remainder):
        super().__init__("polynomial division left a nonzero remainder")
        self.remainder = remainder


class SampleExhausted(RuntimeError):
    """random_point could not satisfy the nonvanishing constraints."""


def _as_q(c):
    if isinstance(c, (int, Fraction)):
        return Q(c)
    return c


def _encode(t):
    e = 0
    for i, k in enumerate(t):
        if k < 0 or k > _MASK:
            raise OverflowError(f"exponent {k} outside packed range")
        e |= k << (_BITS * i)
    return e


def _decode(e, n):
    return tuple((e >> (_BITS * i)) & _MASK for i in range(n))


class MPoly:
    """Sparse multivariate polynomial: packed exponent -> rational coefficient."""

    __slots__ = ("vars", "terms", "_hash", "_maxd")

    def __init__(self, vars, terms):
        self.vars = vars
        self.terms = terms
        self._hash = None
        self._maxd = None

    # -- construction -------------------------------------------------------

    @staticmethod
    def const(c):
        c = _as_q(c)
        return MPoly((), {} if c == 0 else {0: c})

    @staticmethod
    def var(name, exp=1):
        return MPoly((name,), {_encode((exp,)): QONE})

    @staticmethod
    def zero():
        return MPoly((), {})

    @staticmethod
    def from_tuples(vars, tuple_terms):
        return MPoly(vars, {_encode(e): _as_q(c) for e, c in tuple_terms.items() if c != 0})

    @staticmethod
    def linear(const, *pairs):
        """linear(c, (v1, c1), ...) -> c + c1*v1 + ...  Convenience builder."""
        p = MPoly.const(const)
        for name, c in pairs:
            p = p + MPoly.var(name) * _as_q(c)
        return p

    def tuple_terms(self):
        n = len(self.vars)
        return {_decode(e, n): c for e, c in self.terms.items()}

    # -- basic queries -------------------------------------------------------

    def is_zero(self):
        return not self.terms

    def is_const(self):
        return all(e == 0 for e in self.terms)

    def const_value(self):
        if not self.terms:
            return QZERO
        [(e, c)] = self.terms.items()
        if e:
            raise ValueError("not a constant polynomial")
        return c

    def _degsum(self, e):
        s = 0
        while e:
            s += e & _MASK
            e >>= _BITS
        return s

    def total_degree(self):
        if not self.terms:
            return NEG_INF
        return max(self._degsum(e) for e in self.terms)

    def max_component_degree(self):
        if self._maxd is None:
            m = 0
            for e in self.terms:
                while e:
                    k = e & _MASK
                    if k > m:
                        m = k
                    e >>= _BITS
            self._maxd = m
        return self._maxd

    def degree_in(self, name):
        if not self.terms:
            return NEG_INF
        if name not in self.vars:
            return 0
        sh = _BITS * self.vars.index(name)
        return max((e >> sh) & _MASK for e in self.terms)

    def used_vars(self):
        used = 0
        for e in self.terms:
            used |= e
        n = len(self.vars)
        mask = _decode(used, n)
        return {v for v, k in zip(self.vars, mask) if k}

    def trim(self):
        """Drop variables that appear in no term (canonicalizes `vars`)."""
        used = self.used_vars()
        if len(used) == len(self.vars):
            return self
        n = len(self.vars)
        keep = [i for i, v in enumerate(self.vars) if v in used]
        newvars = tuple(self.vars[i] for i in keep)
        terms = {}
        for e, c in self.terms.items():
            t = _decode(e, n)
            terms[_encode(tuple(t[i] for i in keep))] = c
        return MPoly(newvars, terms)

    # -- alignment -----------------------------------------------------------

    def with_vars(self, vars):
        """Re-express over a superset variable tuple (global order assumed)."""
        if vars == self.vars:
            return self
        shifts = [_BITS * vars.index(v) for v in self.vars]
        n = len(self.vars)
        terms = {}
        for e, c in self.terms.items():
            ne = 0
            for i in range(n):
                k = (e >> (_BITS * i)) & _MASK
                if k:
                    ne |= k << shifts[i]
            terms[ne] = c
        return MPoly(vars, terms)

    @staticmethod
    def _aligned(a, b):
        if a.vars == b.vars:
            return a, b
        vars = sort_vars(a.vars + b.vars)
        return a.with_vars(vars), b.with_vars(vars)

    # -- arithmetic ----------------------------------------------------------

    def __add__(self, other):
        if not isinstance(other, MPoly):
            other = MPoly.const(other)
        a, b = MPoly._aligned(self, other)
        terms = dict(a.terms)
        get = terms.get
        for e, c in b.terms.items():
            s = get(e, QZERO) + c
            if s == 0:
                terms.pop(e, None)
            else:
                terms[e] = s
        return MPoly(a.vars, terms)

    __radd__ = __add__

    def __neg__(self):
        return MPoly(self.vars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        if not isinstance(other, MPoly):
            other = MPoly.const(other)
        return self + (-other)

    def __rsub__(self, other):
        return MPoly.const(other) - self

    def __mul__(self, other):
        if not isinstance(other, MPoly):
            c = _as_q(other)
            if c == 0:
                return MPoly.zero()
            return MPoly(self.vars, {e: k * c for e, k in self.terms.items()})
        a, b = MPoly._aligned(self, other)
        if a.max_component_degree() + b.max_component_degree() > _MASK:
            raise OverflowError("product exceeds packed exponent range")
        if len(a.terms) < len(b.terms):
            a, b = b, a
        terms = {}
        get = terms.get
        aterms = a.terms
        for eb, cb in b.terms.items():
            for ea, ca in aterms.items():
                e = ea + eb
                s = get(e)
                s = ca * cb if s is None else s + ca * cb
                if s == 0:
                    terms.pop(e, None)
                else:
                    terms[e] = s
        return MPoly(a.vars, terms)

    __rmul__ = __mul__

    def __pow__(self, k):
        if k < 0:
            raise ValueError("negative power of MPoly; use RatFunc")
        out = MPoly.const(1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base if k > 1 else base
            k >>= 1
        return out

    def __eq__(self, other):
        if not isinstance(other, MPoly):
            if isinstance(other, (int, Fraction)) or type(other) is type(QONE):
                return (self - MPoly.const(other)).is_zero()
            return NotImplemented
        return (self - other).is_zero()

    def __hash__(self):
        if self._hash is None:
            p = self.trim()
            self._hash = hash((p.vars, frozenset(p.terms.items())))
        return self._hash

    # -- substitution / evaluation -------------------------------------------

    def subs(self, mapping):
        """Substitute variables by rationals or MPolys; returns MPoly."""
        if not any(v in mapping for v in self.vars):
            return self
        n = len(self.vars)
        out = MPoly.zero()
        cache = {}
        for e, c in self.terms.items():
            term = MPoly.const(c)
            for i in range(n):
                k = (e >> (_BITS * i)) & _MASK
                if k == 0:
                    continue
                v = self.vars[i]
                if v in mapping:
                    key = (v, k)
                    if key not in cache:
                        repl = mapping[v]
                        if not isinstance(repl, MPoly):
                            repl = MPoly.const(repl)
                        cache[key] = repl ** k
                    term = term * cache[key]
                else:
                    term = term * MPoly.var(v, k)
            out = out + term
        return out

    def rename(self, mapping):
        """Rename variables (a bijection on the ones present)."""
        newvars = tuple(mapping.get(v, v) for v in self.vars)
        order = sort_vars(newvars)
        shifts = [_BITS * order.index(v) for v in newvars]
        n = len(self.vars)
        terms = {}
        for e, c in self.terms.items():
            ne = 0
            for i in range(n):
                k = (e >> (_BITS * i)) & _MASK
                if k:
                    ne += k << shifts[i]
            s = terms.get(ne, QZERO) + c
            if s == 0:
                terms.pop(ne, None)
            else:
                terms[ne] = s
        return MPoly(order, terms)

    def eval(self, point):
        """Evaluate at a full rational point {var: rational}."""
        total = QZERO
        n = len(self.vars)
        pows = [{} for _ in range(n)]
        vals = []
        for v in self.vars:
            if v not in point:
                if self.degree_in(v) not in (0, NEG_INF):
                    raise KeyError(f"no value for variable {v}")
                vals.append(QZERO)
            else:
                vals.append(_as_q(point[v]))
        for e, c in self.terms.items():
            m = c
            for i in range(n):
                k = (e >> (_BITS * i)) & _MASK
                if k:
                    pk = pows[i].get(k)
                    if pk is None:
                        pk = vals[i] ** k
                        pows[i][k] = pk
                    m = m * pk
            total += m
        return total

    def eval_complex(self, point):
        """Evaluate at a complex point {var: complex} (numeric layer)."""
        total = 0j
        n = len(self.vars)
        vals = [complex(point[v]) if v in point else 0j for v in self.vars]
        for e, c in self.terms.items():
            m = complex(c.numerator) / complex(c.denominator)
            for i in range(n):
                k = (e >> (_BITS * i)) & _MASK
                if k:
                    m *= vals[i] ** k
            total += m
        return total

    def derivative(self, name):
        if name not in self.vars:
            return MPoly.zero()
        i = self.vars.index(name)
        sh = _BITS * i
        step = 1 << sh
        terms = {}
        for e, c in self.terms.items():
            k = (e >> sh) & _MASK
            if k:
                ne = e - step
                terms[ne] = terms.get(ne, QZERO) + c * k
        return MPoly(self.vars, {e: c for e, c in terms.items() if c != 0})

    # -- ordering, division, content ------------------------------------------

    def _lead(self):
        """Leading (decoded exponent, coeff) in graded-lex order."""
        n = len(self.vars)
        best = None
        beste = None
        for e in self.terms:
            t = _decode(e, n)
            key = (sum(t), t)
            if best is None or key > best:
                best = key
                beste = e
        return _decode(beste, n), self.terms[beste]

    def sorted_terms(self):
        n = len(self.vars)
        out = [(_decode(e, n), c) for e, c in self.terms.items()]
        out.sort(key=lambda t: (sum(t[0]), t[0]), reverse=True)
        return out

    def content(self):
        """Rational c > 0 with self/c integer-primitive; 0 for the zero poly."""
        if not self.terms:
            return QZERO
        num_gcd = 0
        den_lcm = 1
        for c in self.terms.values():
            num_gcd = math.gcd(num_gcd, abs(int(c.numerator)))
            d = int(c.denominator)
            den_lcm = den_lcm * d // math.gcd(den_lcm, d)
        return Q(num_gcd, den_lcm)

    def primitive(self):
        """(content*sign, primitive part with positive leading coefficient)."""
        if not self.terms:
            return QONE, self
        c = self.content()
        _, lc = self._lead()
        if lc < 0:
            c = -c
        return c, self * (QONE / c)

    def eval_partial(self, point):
        """Substitute rationals for a subset of variables, keep the rest."""
        return self.subs({v: MPoly.const(point[v]) for v in self.vars if v in point})

    # -- presentation ----------------------------------------------------------

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for e, c in self.sorted_terms():
            factors = []
            for v, k in zip(self.vars, e):
                if k == 1:
                    factors.append(v)
                elif k > 1:
                    factors.append(f"{v}^{k}")
            cs = str(c)
            if factors and c == 1:
                body = "*".join(factors)
            elif factors and c == -1:
                body = "-" + "*".join(factors)
            else:
                body = "*".join([cs] + factors) if factors else cs
            parts.append(body)
        out = parts[0]
        for p in parts[1:]:
            out += " - " + p[1:] if p.startswith("-") else " + " + p
        return out

    __repr__ = __str__

    def to_json(self):
        """Canonical JSON form: variable list + graded-lex term array."""
        p = self.trim()
        return {
            "vars": list(p.vars),
            "terms": [
                {"exponents": list(e), "num": int(c.numerator), "den": int(c.denominator)}
                for e, c in p.sorted_terms()
            ],
        }


def exact_divide(p, d):
    """Return q with p = q*d, else raise NonDivisible with the remainder.

    Single-divisor multivariate division in graded-lex order; for a single
    divisor the algorithm is a complete decision procedure for divisibility.
    """
    if not isinstance(p, MPoly):
        p = MPoly.const(p)
    if not isinstance(d, MPoly):
        d = MPoly.const(d)
    if d.is_zero():
        raise ZeroDivisionError("division by the zero polynomial")
    p, d = MPoly._aligned(p, d)
    if p.is_zero():
        return MPoly.zero()
    n = len(p.vars)

    def hkey(e):
        t = _decode(e, n)
        return (-sum(t), tuple(-x for x in t))

    (dlead_t, dlc) = d._lead()
    dlead = _encode(dlead_t)
    dtail = [(e, c) for e, c in d.terms.items() if e != dlead]
    q = {}
    rem = {}
    r = dict(p.terms)
    heap = [hkey(e) for e in r]
    heapq.heapify(heap)
    while heap:
        k = heapq.heappop(heap)
        rlead_t = tuple(-x for x in k[1])
        rlead = _encode(rlead_t)
        rlc = r.get(rlead)
        if rlc is None:
            continue  # stale heap entry
        if any(a < b for a, b in zip(rlead_t, dlead_t)):
            rem[rlead] = rlc
            del r[rlead]
            continue
        qe = rlead - dlead
        qc = rlc / dlc
        q[qe] = q.get(qe, QZERO) + qc
        del r[rlead]
        for e, c in dtail:
            ne = e + qe
            old = r.get(ne)
            s = (old if old is not None else QZERO) - c * qc
            if s == 0:
                if old is not None:
                    del r[ne]
            else:
                r[ne] = s
                if old is None:
                    heapq.heappush(heap, hkey(ne))
    if rem:
        raise NonDivisible(MPoly(p.vars, rem))
    return MPoly(p.vars, {e: c for e, c in q.items() if c != 0}).trim()


def mpoly_gcd(a, b):
    """Multivariate gcd (primitive PRS); used only for output-time reduction."""
    a = a.trim()
    b = b.trim()
    if a.is_zero():
        return b.primitive()[1]
    if b.is_zero():
        return a.primitive()[1]
    if a.is_const() or b.is_const():
        return MPoly.const(1)
    avars, bvars = set(a.vars), set(b.vars)
    common = avars & bvars
    if not common:
        return MPoly.const(1)
    v = min(common, key=lambda v: a.degree_in(v) + b.degree_in(v))
    fa = _to_recursive(a, v)
    fb = _to_recursive(b, v)
    ca = _rec_content(fa)
    cb = _rec_content(fb)
    fa = {k: exact_divide(c, ca) for k, c in fa.items()}
    fb = {k: exact_divide(c, cb) for k, c in fb.items()}
    cont = mpoly_gcd(ca, cb)
    g = _rec_gcd(fa, fb)
    out = MPoly.zero()
    for k, c in g.items():
        out = out + c * MPoly.var(v, k) if k else out + c
    out = cont * out
    return out.primitive()[1]


def _to_recursive(p, v):
    """View p as a univariate poly in v with MPoly coefficients."""
    i = p.vars.index(v)
    sh = _BITS * i
    rest = p.vars[:i] + p.vars[i + 1:]
    lowmask = (1 << sh) - 1
    coeffs = {}
    for e, c in p.terms.items():
        k = (e >> sh) & _MASK
        re = (e & lowmask) | ((e >> _BITS) & ~lowmask)
        d = coeffs.setdefault(k, {})
        d[re] = d.get(re, QZERO) + c
    return {k: MPoly(rest, {e: c for e, c in d.items() if c != 0}) for k, d in coeffs.items()}


def _rec_content(f):
    g = MPoly.zero()
    for c in f.values():
        g = mpoly_gcd(g, c)
    return g


def _rec_degree(f):
    return max(f.keys())


def _rec_gcd(fa, fb):
    """Primitive PRS on recursive representations (coefficients primitive)."""
    if _rec_degree(fa) < _rec_degree(fb):
        fa, fb = fb, fa
    while True:
        if not fb:
            break
        r = _rec_prem(fa, fb)
        if not r:
            fa = fb
            fb = {}
            break
        cr = MPoly.zero()
        for c in r.values():
            cr = mpoly_gcd(cr, c)
        r = {k: exact_divide(c, cr) for k, c in r.items()}
        fa, fb = fb, r
    return fa


def _rec_prem(fa, fb):
    """Pseudo-remainder of fa by fb in the main variable."""
    da, db = _rec_degree(fa), _rec_degree(fb)
    lb = fb[db]
    r = dict(fa)
    while r and _rec_degree(r) >= db:
        dr = _rec_degree(r)
        lr = r[dr]
        nr = {}
        for k, c in r.items():
            if k == dr:
                continue
            nr[k] = c * lb
        for k, c in fb.items():
            if k == db:
                continue
            kk = k + dr - db
            t = nr.get(kk, MPoly.zero()) - c * lr
            if t.is_zero():
                nr.pop(kk, None)
            else:
                nr[kk] = t
        r = nr
    return r


def _factor_canonical(f):
    """(scale, canonical factor): integer-primitive, positive leading coeff."""
    c, p = f.primitive()
    return c, p


class RatFunc:
    """Rational function: expanded numerator over a factored denominator.

    Denominator factors are canonical primitive polynomials with multiplicity;
    every arithmetic result cancels factors against the numerator by exact
    division (cheap), and full gcd reduction happens only in `reduced()`.
    """

    __slots__ = ("num", "fden", "_den")

    def __init__(self, num, fden=(), _cancel=True):
        if not isinstance(num, MPoly):
            num = MPoly.const(num)
        self.num = num
        self.fden = fden  # tuple of (MPoly factor, multiplicity), canonical
        self._den = None
        if _cancel:
            self._do_cancel()

    # -- construction ----------------------------------------------------------

    @staticmethod
    def of(num, den=None):
        if den is None:
            return RatFunc(num)
        if not isinstance(den, MPoly):
            den = MPoly.const(den)
        if den.is_zero():
            raise ZeroDivisionError("zero denominator")
        if den.is_const():
            num = num if isinstance(num, MPoly) else MPoly.const(num)
            return RatFunc(num * (QONE / den.const_value()))
        c, f = _factor_canonical(den)
        num = num * (QONE / c) if isinstance(num, MPoly) else MPoly.const(_as_q(num) / c)
        return RatFunc(num, ((f, 1),))

    @staticmethod
    def const(c):
        return RatFunc(MPoly.const(c))

    @staticmethod
    def var(name):
        return RatFunc(MPoly.var(name))

    @property
    def den(self):
        if self._den is None:
            d = MPoly.const(1)
            for f, k in self.fden:
                d = d * f ** k
            self._den = d
        return self._den

    def is_zero(self):
        return self.num.is_zero()

    # -- cancellation ---------------------------------------------------------

    def _do_cancel(self):
        if self.num.is_zero():
            self.fden = ()
            self._den = None
            return
        out = []
        num = self.num
        scale = QONE
        for f, k in self.fden:
            c, fc = _factor_canonical(f)
            if c != 1:
                scale = scale * c ** k
                f = fc
            if f.is_const():
                continue
            while k > 0:
                if not _maybe_divides(f, num):
                    break
                try:
                    num = exact_divide(num, f)
                    k -= 1
                except NonDivisible:
                    break
            if k > 0:
                out.append((f, k))
        if scale != 1:
            num = num * (QONE / scale)
        self.num = num
        self.fden = tuple(sorted(out, key=lambda fk: (fk[0].total_degree(), str(fk[0]))))
        self._den = None

    # -- arithmetic -------------------------------------------------------------

    @staticmethod
    def _coerce(x):
        if isinstance(x, RatFunc):
            return x
        if isinstance(x, MPoly):
            return RatFunc(x)
        return RatFunc(MPoly.const(x))

    def __add__(self, other):
        other = RatFunc._coerce(other)
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        da = dict(self.fden)
        db = dict(other.fden)
        lcm = dict(da)
        for f, k in db.items():
            lcm[f] = max(lcm.get(f, 0), k)
        na = self.num
        nb = other.num
        for f, k in lcm.items():
            ka = k - da.get(f, 0)
            kb = k - db.get(f, 0)
            if ka:
                na = na * f ** ka
            if kb:
                nb = nb * f ** kb
        return RatFunc(na + nb, tuple(lcm.items()))

    __radd__ = __add__

    def __neg__(self):
        return RatFunc(-self.num, self.fden, _cancel=False)

    def __sub__(self, other):
        return self + (-RatFunc._coerce(other))

    def __rsub__(self, other):
        return RatFunc._coerce(other) + (-self)

    def __mul__(self, other):
        other = RatFunc._coerce(other)
        if self.is_zero() or other.is_zero():
            return RatFunc(MPoly.zero())
        d = dict(self.fden)
        for f, k in other.fden:
            d[f] = d.get(f, 0) + k
        return RatFunc(self.num * other.num, tuple(d.items()))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self * RatFunc._coerce(other).inv()

    def __rtruediv__(self, other):
        return RatFunc._coerce(other) * self.inv()

    def inv(self):
        if self.num.is_zero():
            raise ZeroDivisionError("inverting the zero rational function")
        num = MPoly.const(1)
        for f, k in self.fden:
            num = num * f ** k
        c, f = _factor_canonical(self.num)
        if f.is_const():
            return RatFunc(num * (QONE / (c * f.const_value())))
        return RatFunc(num * (QONE / c), ((f, 1),))

    def __pow__(self, k):
        if k < 0:
            return self.inv() ** (-k)
        out = RatFunc.const(1)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, (RatFunc, MPoly, int, Fraction)) and type(other) is not type(QONE):
            return NotImplemented
        other = RatFunc._coerce(other)
        if self.fden == other.fden:
            return (self.num - other.num).is_zero()
        return (self.num * other.den - other.num * self.den).is_zero()

    def __hash__(self):
        r = self.reduced()
        return hash((r.num, r.den))

    # -- substitution / evaluation ----------------------------------------------

    def eval(self, point):
        dv = QONE
        for f, k in self.fden:
            v = f.eval(point)
            if v == 0:
                raise ZeroDivisionError(f"denominator factor {f} vanishes at the sample point")
            dv *= v ** k
        return self.num.eval(point) / dv

    def eval_complex(self, point):
        dv = 1 + 0j
        for f, k in self.fden:
            dv *= f.eval_complex(point) ** k
        return self.num.eval_complex(point) / dv

    def subs(self, mapping):
        """Substitute variables by rationals/MPolys (polynomial images only)."""
        num = self.num.subs(mapping)
        out = RatFunc(num)
        for f, k in self.fden:
            out = out / RatFunc(f.subs(mapping)) ** k
        return out

    def derivative(self, name):
        """d/d(name), factor-aware quotient rule; result denominator stays factored."""
        dnum = self.num.derivative(name)
        terms = RatFunc(dnum, self.fden)
        for f, k in self.fden:
            df = f.derivative(name)
            if df.is_zero():
                continue
            d = dict(self.fden)
            d[f] = d.get(f, 0) + 1
            terms = terms - RatFunc(self.num * df * k, tuple(d.items()))
        return terms

    # -- normal form --------------------------------------------------------------

    def reduced(self):
        """Fully reduced copy (gcd of numerator and expanded denominator)."""
        num = self.num
        den = self.den
        if num.is_zero():
            return RatFunc(MPoly.zero())
        g = mpoly_gcd(num, den)
        if not g.is_const():
            num = exact_divide(num, g)
            den = exact_divide(den, g)
        c, den_p = den.primitive()
        num = num * (QONE / c)
        if den_p.is_const():
            return RatFunc(num)
        return RatFunc(num, ((den_p, 1),), _cancel=False)

    def __str__(self):
        r = self.reduced()
        if not r.fden:
            return str(r.num)
        return f"({r.num})/({r.den})"

    __repr__ = __str__

    def to_json(self):
        r = self.reduced()
        return {"num": r.num.to_json(), "den": r.den.to_json()}


def _maybe_divides(f, num):
    """Cheap sound filter: False only when f certainly does not divide num.

    For a factor with a variable of degree 1 we can solve f = 0 for that
    variable at random values of the others; nonvanishing of num there rules
    divisibility out.  Inconclusive cases fall through to exact division.
    """
    if f.total_degree() > num.total_degree():
        return False
    fv = f.trim()
    nfv = len(fv.vars)
    for i, v in enumerate(fv.vars):
        if fv.degree_in(v) != 1:
            continue
        sh = _BITS * i
        lead = {}
        rest = {}
        for e, c in fv.terms.items():
            if (e >> sh) & _MASK:
                lead[_strip_var(e, i)] = c
            else:
                rest[_strip_var(e, i)] = c
        others = fv.vars[:i] + fv.vars[i + 1:]
        rng = random.Random(0xC0FFEE)
        for _ in range(4):
            pt = {w: Q(rng.randint(-37, 37)) for w in others}
            a = MPoly(others, lead).eval(pt)
            if a == 0:
                continue
            b = MPoly(others, rest).eval(pt)
            pt[v] = -b / a
            full = dict(pt)
            for w in num.vars:
                if w not in full:
                    full[w] = Q(rng.randint(-37, 37))
            val = num.eval(full)
            return val == 0
        return True
    return True


def _strip_var(e, i):
    """Remove the i-th 9-bit field from a packed exponent."""
    sh = _BITS * i
    low = e & ((1 << sh) - 1)
    high = e >> (sh + _BITS)
    return low | (high << sh)


def poly_arith(a, b, op):
    """Spec-surface dispatcher over {add, mul, sub, div}."""
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        if isinstance(a, MPoly) and isinstance(b, MPoly):
            return RatFunc.of(a, b)
        return RatFunc._coerce(a) / RatFunc._coerce(b)
    raise ValueError(f"unknown op {op!r}")


SYM_CAP = 8


def symmetrize(f, names, cap=SYM_CAP):
    """Sum of f over all permutations of the listed variables.

    Works on MPoly and RatFunc alike; k! terms, capped at k <= cap unless a
    larger cap is passed explicitly.
    """
    names = list(names)
    k = len(names)
    if k > cap:
        raise ValueError(f"symmetrization over {k} variables exceeds cap {cap}")
    out = None
    for perm in itertools.permutations(range(k)):
        mapping = {names[i]: names[perm[i]] for i in range(k) if perm[i] != i}
        if isinstance(f, MPoly):
            g = f.rename(mapping) if mapping else f
        else:
            g = RatFunc(f.num.rename(mapping),
                        tuple((fac.rename(mapping), m) for fac, m in f.fden)) if mapping else f
        out = g if out is None else out + g
    return out


def useries(f, var, order):
    """Exact expansion of a RatFunc at var = infinity.

    Requires deg_var(num) <= deg_var(den) (regular at infinity); returns the
    coefficients of var^0, var^-1, ..., var^-order as RatFuncs in the other
    variables.
    """
    f = RatFunc._coerce(f)
    num, den = f.num, f.den
    if num.is_zero():
        return [RatFunc.const(0)] * (order + 1)
    dn = num.degree_in(var) if var in num.vars else 0
    dd = den.degree_in(var) if var in den.vars else 0
    if dn > dd:
        raise ValueError("not regular at infinity")
    A = {dd - k: c for k, c in _to_recursive(num.with_vars(sort_vars(num.vars + (var,))), var).items()}
    B = {dd - k: c for k, c in _to_recursive(den.with_vars(sort_vars(den.vars + (var,))), var).items()}
    b0 = B.get(0)
    if b0 is None or b0.is_zero():
        raise ValueError("denominator leading coefficient vanished")
    binv = RatFunc.of(MPoly.const(1), b0)
    out = []
    for j in range(order + 1):
        acc = RatFunc(A.get(j, MPoly.zero()))
        for i in range(1, j + 1):
            bi = B.get(i)
            if bi is not None and not out[j - i].is_zero():
                acc = acc - out[j - i] * bi
        out.append(acc * binv)
    return out


def random_point(names, constraints=(), seed=0, lo=-99, hi=99, denominators=False):
    """Deterministic-from-seed rational point avoiding the given loci.

    Every constraint (MPoly or RatFunc) must evaluate to a nonzero value at the
    returned point; RatFunc constraints must also have nonvanishing denominator.
    """
    rng = random.Random(seed)
    names = list(names)
    for _ in range(400):
        pt = {}
        for v in names:
            n = rng.randint(lo, hi)
            d = rng.randint(2, 16) if denominators else 1
            pt[v] = Q(n, d)
        ok = True
        for c in constraints:
            try:
                val = c.eval(pt)
            except ZeroDivisionError:
                ok = False
                break
            if val == 0:
                ok = False
                break
        if ok:
            return pt
    raise SampleExhausted(f"no admissible point after 400 draws (seed={seed})")
