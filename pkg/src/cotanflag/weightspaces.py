"""Index combinatorics and the two module realizations.

A composition lam of n into N parts labels both a weight subspace V_lam of
(C^N)^{tensor n} and the weight-(1,...,1) subspace W_lam of a tensor product of
symmetric powers of C^n.  Ordered set partitions I of {1,...,n} with block
sizes lam index the distinguished bases of both, as well as the torus fixed
points on the geometric side.

V_lam is realized on color words: the basis vector v_I puts color c on every
tensor slot in block c.  W_lam sits inside tensor_{a=1..N} Sym^{lam_a}(C^n),
realized on monomials u_1^{k_1}...u_n^{k_n} per factor with e_{a,b} sending a
monomial to k_b times (one unit moved from b to a).  The basis w_I is the
literal product of e_{i,1}'s applied to the highest weight monomials, kept
unnormalized (integer factors included).
"""

from __future__ import annotations

import itertools
from functools import lru_cache

from .symalg import MPoly, Q, QONE, QZERO, RatFunc


class Composition:
    """lam in Z^N_{>=0} with |lam| = n, plus the cached partial sums."""

    __slots__ = ("parts", "n", "_partials")

    def __init__(self, parts):
        self.parts = tuple(int(p) for p in parts)
        if any(p < 0 for p in self.parts):
            raise ValueError("composition parts must be non-negative")
        self.n = sum(self.parts)
        acc, tot = [], 0
        for p in self.parts:
            tot += p
            acc.append(tot)
        self._partials = tuple(acc)

    @property
    def N(self):
        return len(self.parts)

    def partial(self, i):
        """lam^{(i)} = lam_1 + ... + lam_i (1-indexed)."""
        return self._partials[i - 1] if i >= 1 else 0

    def brace1(self):
        """lam^{{1}} = sum of the first N-1 partial sums."""
        return sum(self._partials[:-1]) if self.parts else 0

    def shifted(self, p, delta):
        """lam with lam_p += delta, lam_{p+1} -= delta; None if it leaves Z_{>=0}."""
        if not 1 <= p < self.N:
            raise ValueError(f"simple-root index {p} out of range for N={self.N}")
        parts = list(self.parts)
        parts[p - 1] += delta
        parts[p] -= delta
        if parts[p - 1] < 0 or parts[p] < 0:
            return None
        return Composition(parts)

    def __eq__(self, other):
        return isinstance(other, Composition) and self.parts == other.parts

    def __hash__(self):
        return hash(self.parts)

    def __repr__(self):
        return f"Composition{self.parts}"


class SetPartition:
    """Ordered partition I = (I_1, ..., I_N) of {1, ..., n}.

    Serialized as the color word: letter at position a is the block of a,
    e.g. lam=(1,2), I=({2},{1,3}) <-> "212".
    """

    __slots__ = ("colors",)

    def __init__(self, colors):
        self.colors = tuple(int(c) for c in colors)

    @staticmethod
    def from_blocks(blocks):
        n = sum(len(b) for b in blocks)
        colors = [0] * n
        seen = set()
        for c, block in enumerate(blocks, start=1):
            for a in block:
                if a in seen or not 1 <= a <= n:
                    raise ValueError("blocks must partition {1,...,n}")
                seen.add(a)
                colors[a - 1] = c
        return SetPartition(colors)

    @staticmethod
    def from_word(word):
        return SetPartition(int(ch) for ch in word)

    def word(self):
        return "".join(str(c) for c in self.colors)

    @property
    def n(self):
        return len(self.colors)

    def blocks(self, N=None):
        N = N or max(self.colors, default=0)
        out = [[] for _ in range(N)]
        for a, c in enumerate(self.colors, start=1):
            out[c - 1].append(a)
        return tuple(tuple(b) for b in out)

    def block(self, c):
        return tuple(a for a, col in enumerate(self.colors, start=1) if col == c)

    def block_of(self, a):
        return self.colors[a - 1]

    def composition(self, N):
        counts = [0] * N
        for c in self.colors:
            counts[c - 1] += 1
        return Composition(counts)

    def move(self, a, c):
        """New partition with element a recolored to block c."""
        colors = list(self.colors)
        colors[a - 1] = c
        return SetPartition(colors)

    def __eq__(self, other):
        return isinstance(other, SetPartition) and self.colors == other.colors

    def __hash__(self):
        return hash(self.colors)

    def __lt__(self, other):
        return self.colors < other.colors

    def __repr__(self):
        return f"I[{self.word()}]"


@lru_cache(maxsize=None)
def _enum(parts):
    lam = Composition(parts)
    letters = []
    for c, p in enumerate(lam.parts, start=1):
        letters += [c] * p
    words = sorted(set(itertools.permutations(letters)))
    return tuple(SetPartition(w) for w in words)


def enumerate_partitions(lam):
    """All of I_lam in lexicographic order of the color words."""
    return list(_enum(lam.parts))


def multinomial(lam):
    import math
    out = math.factorial(lam.n)
    for p in lam.parts:
        out //= math.factorial(p)
    return out


class WeightVector:
    """Sparse vector over the I_lam basis of V_lam or W_lam (w-basis)."""

    __slots__ = ("space_tag", "lam", "coords")

    def __init__(self, space_tag, lam, coords=None):
        if space_tag not in ("V", "W"):
            raise ValueError("space_tag must be 'V' or 'W'")
        self.space_tag = space_tag
        self.lam = lam
        self.coords = dict(coords or {})
        for I in self.coords:
            if I.composition(lam.N) != lam:
                raise ValueError(f"key {I} not in I_lam for lam={lam.parts}")

    @staticmethod
    def basis(space_tag, lam, I):
        return WeightVector(space_tag, lam, {I: RatFunc.const(1)})

    def __add__(self, other):
        if (other.space_tag, other.lam) != (self.space_tag, self.lam):
            raise ValueError("mismatched spaces")
        coords = dict(self.coords)
        for I, c in other.coords.items():
            s = coords.get(I, RatFunc.const(0)) + c
            if s.is_zero():
                coords.pop(I, None)
            else:
                coords[I] = s
        return WeightVector(self.space_tag, self.lam, coords)

    def scale(self, c):
        return WeightVector(self.space_tag, self.lam,
                            {I: v * c for I, v in self.coords.items()})

    def __eq__(self, other):
        if not isinstance(other, WeightVector):
            return NotImplemented
        if (self.space_tag, self.lam) != (other.space_tag, other.lam):
            return False
        keys = set(self.coords) | set(other.coords)
        zero = RatFunc.const(0)
        return all(self.coords.get(I, zero) == other.coords.get(I, zero) for I in keys)

    def __repr__(self):
        return f"WeightVector({self.space_tag}, {self.lam.parts}, {self.coords})"


# ---------------------------------------------------------------------------
# V side: (C^N)^{tensor n} on color words
# ---------------------------------------------------------------------------

def v_act_slot(I, i, j, a):
    """e^{(a)}_{ij} v_I: None or (J, 1); slot a changes color j -> i."""
    if I.block_of(a) != j:
        return None
    return I.move(a, i)


def _is_zero(c):
    return c.is_zero() if isinstance(c, RatFunc) else c == 0


def v_act_total(vec_coords, i, j):
    """Total e_{ij} = sum of slot actions on a {SetPartition: coeff} dict."""
    out = {}
    for I, c in vec_coords.items():
        for a in I.block(j):
            J = I.move(a, i)
            out[J] = out.get(J, 0) + c
    return {J: c for J, c in out.items() if not _is_zero(c)}


# ---------------------------------------------------------------------------
# W side: tensor of symmetric powers on exponent monomials
# ---------------------------------------------------------------------------
# A monomial is a tuple over the N factors of per-factor exponent tuples of
# length n; factor a has total degree lam_a.

def w_highest(lam):
    """tensor of u_1^{lam_a}: the product of highest weight monomials."""
    n = lam.n
    return tuple(tuple([p] + [0] * (n - 1)) for p in lam.parts)


def w_act_factor(mono, factor, a, b):
    """e^{(factor)}_{a,b} on a monomial: (coeff k_b, new monomial) or None."""
    k = mono[factor - 1][b - 1]
    if k == 0:
        return None
    exps = list(mono[factor - 1])
    exps[b - 1] -= 1
    exps[a - 1] += 1
    new = mono[:factor - 1] + (tuple(exps),) + mono[factor:]
    return k, new


def w_act(vec, factor, a, b):
    """e^{(factor)}_{a,b} on a {monomial: coeff} dict; factor=None sums all."""
    out = {}
    factors = range(1, len(next(iter(vec))) + 1) if factor is None else (factor,)
    for mono, c in vec.items():
        for f in factors:
            hit = w_act_factor(mono, f, a, b)
            if hit is None:
                continue
            k, new = hit
            s = out.get(new, 0) + c * k
            if s == 0:
                out.pop(new, None)
            else:
                out[new] = s
    return out


def w_mono_of_partition(I, N):
    """The W_lam basis monomial with u_i in factor c exactly when i is in I_c."""
    n = I.n
    exps = [[0] * n for _ in range(N)]
    for a, c in enumerate(I.colors, start=1):
        exps[c - 1][a - 1] = 1
    return tuple(tuple(e) for e in exps)


def w_partition_of_mono(mono):
    n = len(mono[0])
    colors = [0] * n
    for f, exps in enumerate(mono, start=1):
        for a, k in enumerate(exps, start=1):
            if k == 1 and colors[a - 1] == 0:
                colors[a - 1] = f
            elif k != 0:
                raise ValueError("monomial not of weight (1,...,1)")
    return SetPartition(colors)


def w_basis_vector(lam, I):
    """Expansion of w_I over monomials, by literal application of e_{i,1}'s.

    w_{I_a} = (prod'_{i in I_a} e_{i,1}) u_1^{lam_a}, the prime excluding
    e_{1,1} when 1 is in I_a; factorial coefficients are kept as they come.
    """
    blocks = I.blocks(lam.N)
    vec = {w_highest(lam): 1}
    for c, block in enumerate(blocks, start=1):
        for i in block:
            if i == 1:
                continue
            vec = w_act(vec, c, i, 1)
    return vec


@lru_cache(maxsize=None)
def _w_basis_data(parts):
    """(basis partitions, expansion matrix C with C[J][I] = coeff of m_J in w_I)."""
    lam = Composition(parts)
    basis = enumerate_partitions(lam)
    index = {I: k for k, I in enumerate(basis)}
    m = len(basis)
    C = [[QZERO] * m for _ in range(m)]
    for col, I in enumerate(basis):
        for mono, coeff in w_basis_vector(lam, I).items():
            J = w_partition_of_mono(mono)
            C[index[J]][col] = Q(coeff)
    return basis, C


def w_expansion_matrix(lam):
    return _w_basis_data(lam.parts)[1]


@lru_cache(maxsize=None)
def _w_inverse(parts):
    C = _w_basis_data(parts)[1]
    return _invert_rational(C)


def _invert_rational(M):
    m = len(M)
    A = [row[:] + [QONE if i == j else QZERO for j in range(m)] for i, row in enumerate(M)]
    for col in range(m):
        piv = next((r for r in range(col, m) if A[r][col] != 0), None)
        if piv is None:
            raise ValueError("matrix not invertible")
        A[col], A[piv] = A[piv], A[col]
        inv = QONE / A[col][col]
        A[col] = [x * inv for x in A[col]]
        for r in range(m):
            if r != col and A[r][col] != 0:
                f = A[r][col]
                A[r] = [x - f * y for x, y in zip(A[r], A[col])]
    return [row[m:] for row in A]


def mu_map(vec):
    """The isomorphism mu: W_lam -> V_lam, w_I |-> v_I (coordinates carry over)."""
    if vec.space_tag != "W":
        raise ValueError("mu_map expects a W-space vector in the w-basis")
    return WeightVector("V", vec.lam, dict(vec.coords))


def w_vector_to_monomials(vec):
    """Expand a w-basis WeightVector into the monomial realization."""
    out = {}
    for I, c in vec.coords.items():
        for mono, k in w_basis_vector(vec.lam, I).items():
            s = out.get(mono, RatFunc.const(0)) + c * Q(k)
            if s.is_zero():
                out.pop(mono, None)
            else:
                out[mono] = s
    return out


def w_monomials_to_vector(lam, mono_vec):
    """Express a weight-(1,...,1) monomial vector in the w-basis."""
    basis, _ = _w_basis_data(lam.parts)
    Cinv = _w_inverse(lam.parts)
    index = {I: k for k, I in enumerate(basis)}
    col = [RatFunc.const(0)] * len(basis)
    for mono, c in mono_vec.items():
        col[index[w_partition_of_mono(mono)]] = c if isinstance(c, RatFunc) else RatFunc.const(c)
    coords = {}
    for r, I in enumerate(basis):
        s = RatFunc.const(0)
        for k in range(len(basis)):
            if Cinv[r][k] != 0 and not col[k].is_zero():
                s = s + col[k] * Cinv[r][k]
        if not s.is_zero():
            coords[I] = s
    return WeightVector("W", lam, coords)


# ---------------------------------------------------------------------------
# spec surface: one act_e entry point over both realizations
# ---------------------------------------------------------------------------

def act_e(space_tag, lam, i, j, a, vec):
    """Action of e_{ij} (slot/factor a, or 'total') on a WeightVector.

    On V the indices are colors (1..N) and a is a tensor slot (1..n); on W the
    indices are gl_n letters (1..n) and a is a factor (1..N).  Results landing
    in a shifted weight carry their new Composition; W results must stay of
    weight (1,...,1) to be expressible over I_mu (they do exactly when i=j or
    the vector is acted on by a full weight-zero composite).
    """
    if space_tag == "V":
        out = {}
        for I, c in vec.coords.items():
            slots = range(1, lam.n + 1) if a == "total" else (a,)
            for s in slots:
                J = v_act_slot(I, i, j, s)
                if J is None:
                    continue
                acc = out.get(J, RatFunc.const(0)) + c
                if acc.is_zero():
                    out.pop(J, None)
                else:
                    out[J] = acc
        if not out:
            return WeightVector("V", lam, {})
        mu = next(iter(out)).composition(lam.N)
        return WeightVector("V", mu, out)

    mono_vec = w_vector_to_monomials(vec)
    factor = None if a == "total" else a
    hit = w_act(mono_vec, factor, i, j)
    hit = {m: c for m, c in hit.items() if not (isinstance(c, RatFunc) and c.is_zero())}
    if not hit:
        return WeightVector("W", lam, {})
    return w_monomials_to_vector(lam, hit)
