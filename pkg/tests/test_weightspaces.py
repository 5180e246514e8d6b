import itertools

import pytest

from cotanflag.symalg import Q, RatFunc
from cotanflag.weightspaces import (
    Composition, SetPartition, WeightVector, act_e, enumerate_partitions,
    multinomial, mu_map, w_act, w_basis_vector, w_expansion_matrix, w_highest,
    w_mono_of_partition, w_monomials_to_vector, w_partition_of_mono,
    w_vector_to_monomials, _invert_rational,
)


def comps(n, N):
    """All compositions of n into N parts."""
    if N == 1:
        return [Composition([n])]
    out = []
    for first in range(n + 1):
        for rest in comps(n - first, N - 1):
            out.append(Composition([first] + list(rest.parts)))
    return out


def test_partial_sums_and_brace():
    lam = Composition([1, 2, 1])
    assert lam.n == 4
    assert [lam.partial(i) for i in (1, 2, 3)] == [1, 3, 4]
    assert lam.brace1() == 1 + 3


def test_word_round_trip():
    I = SetPartition.from_blocks([(2,), (1, 3)])
    assert I.word() == "212"
    assert SetPartition.from_word("212") == I
    assert I.blocks(2) == ((2,), (1, 3))
    assert I.block_of(3) == 2


def test_enumerate_small():
    lam = Composition([1, 1])
    ps = enumerate_partitions(lam)
    assert [p.word() for p in ps] == ["12", "21"]
    assert len(enumerate_partitions(Composition([1, 2]))) == 3
    assert len(enumerate_partitions(Composition([2, 2]))) == 6


def test_enumerate_counts_match_multinomial():
    for n in range(1, 5):
        for N in (1, 2, 3):
            for lam in comps(n, N):
                assert len(enumerate_partitions(lam)) == multinomial(lam)


def test_enumeration_is_lex_sorted():
    lam = Composition([2, 1, 1])
    words = [p.word() for p in enumerate_partitions(lam)]
    assert words == sorted(words)


def test_v_single_slot_rule():
    # e^{(1)}_{1,2} on v_{({2},{1})}: slot 1 recolors 2 -> 1, landing in weight (2,0)
    lam = Composition([1, 1])
    I = SetPartition.from_word("21")
    v = WeightVector.basis("V", lam, I)
    out = act_e("V", lam, 1, 2, 1, v)
    assert out.lam == Composition([2, 0])
    assert list(out.coords) == [SetPartition.from_word("11")]


def test_v_diagonal_total_is_weight():
    for parts in [(1, 1), (2, 1), (1, 2), (2, 2), (1, 1, 1)]:
        lam = Composition(parts)
        for I in enumerate_partitions(lam):
            v = WeightVector.basis("V", lam, I)
            for i in range(1, lam.N + 1):
                out = act_e("V", lam, i, i, "total", v)
                want = v.scale(Q(lam.parts[i - 1])) if lam.parts[i - 1] else WeightVector("V", lam, {})
                assert out == want


def test_w_symmetric_power_calculus():
    # e_{2,1} on u_1^m in Sym^m(C^n) gives m u_1^{m-1} u_2
    lam = Composition([3])
    top = w_highest(lam)
    out = w_act({top: 1}, 1, 2, 1)
    assert out == {((2, 1, 0),): 3}


def test_w_basis_examples():
    # single block: apply e_{n,1}...e_{2,1} to u_1^n
    lam = Composition([3])
    I = SetPartition.from_word("111")
    vec = w_basis_vector(lam, I)
    assert vec == {((1, 1, 1),): 6}  # e_{2,1} e_{3,1} u_1^3 = 6 u1 u2 u3, unnormalized
    # lam=(1,1): w_I = u_1 (x) u_2
    lam = Composition([1, 1])
    I = SetPartition.from_word("12")
    assert w_basis_vector(lam, I) == {((1, 0), (0, 1)): 1}


def test_w_basis_coefficients_positive():
    for n in range(1, 5):
        for N in (1, 2, 3):
            for lam in comps(n, N):
                for I in enumerate_partitions(lam):
                    for coeff in w_basis_vector(lam, I).values():
                        assert coeff > 0


def test_w_expansion_matrix_invertible_all_small():
    for n in range(1, 5):
        for N in (1, 2, 3):
            for lam in comps(n, N):
                C = w_expansion_matrix(lam)
                _invert_rational(C)  # raises if singular
                assert len(C) == multinomial(lam)


def test_mu_is_coordinatewise_and_linear():
    lam = Composition([1, 2])
    I, J = enumerate_partitions(lam)[:2]
    w = WeightVector("W", lam, {I: RatFunc.const(3), J: RatFunc.const(Q(5, 2))})
    v = mu_map(w)
    assert v.space_tag == "V"
    assert v.coords[I] == RatFunc.const(3)
    assert v.coords[J] == RatFunc.const(Q(5, 2))


def test_w_monomial_round_trip():
    lam = Composition([2, 1])
    for I in enumerate_partitions(lam):
        v = WeightVector.basis("W", lam, I)
        back = w_monomials_to_vector(lam, w_vector_to_monomials(v))
        assert back == v


def gl_commutator_check(space_tag, lam, size):
    """[e_ij, e_kl] = d_jk e_il - d_li e_kj on every basis vector."""
    rng = range(1, size + 1)
    basis = enumerate_partitions(lam)
    for i, j, k, l in itertools.product(rng, repeat=4):
        for I in basis:
            v = WeightVector.basis(space_tag, lam, I)
            if space_tag == "W":
                mono = w_vector_to_monomials(v)
                ab = w_act(w_act(mono, None, k, l), None, i, j)
                ba = w_act(w_act(mono, None, i, j), None, k, l)
                rhs = {}
                if j == k:
                    for m, c in w_act(mono, None, i, l).items():
                        rhs[m] = rhs.get(m, 0) + c
                if l == i:
                    for m, c in w_act(mono, None, k, j).items():
                        rhs[m] = rhs.get(m, 0) - c
                lhs = dict(ab)
                for m, c in ba.items():
                    lhs[m] = lhs.get(m, 0) - c
                lhs = {m: c for m, c in lhs.items() if c != 0}
                rhs = {m: c for m, c in rhs.items() if c != 0}
                assert lhs == rhs
            else:
                w1 = act_e("V", lam, k, l, "total", v)
                ab = act_e("V", w1.lam, i, j, "total", w1)
                w2 = act_e("V", lam, i, j, "total", v)
                ba = act_e("V", w2.lam, k, l, "total", w2)
                diff = {}
                for I2, c in ab.coords.items():
                    diff[I2] = diff.get(I2, RatFunc.const(0)) + c
                for I2, c in ba.coords.items():
                    diff[I2] = diff.get(I2, RatFunc.const(0)) - c
                rhs = {}
                if j == k:
                    for I2, c in act_e("V", lam, i, l, "total", v).coords.items():
                        rhs[I2] = rhs.get(I2, RatFunc.const(0)) + c
                if l == i:
                    for I2, c in act_e("V", lam, k, j, "total", v).coords.items():
                        rhs[I2] = rhs.get(I2, RatFunc.const(0)) - c
                keys = set(diff) | set(rhs)
                zero = RatFunc.const(0)
                for key in keys:
                    assert diff.get(key, zero) == rhs.get(key, zero)


def test_gl_relations_on_V():
    for parts in [(1, 1), (2, 1), (1, 1, 1)]:
        lam = Composition(parts)
        gl_commutator_check("V", lam, lam.N)


def test_gl_relations_on_W():
    for parts in [(1, 1), (2, 1), (1, 1, 1)]:
        lam = Composition(parts)
        gl_commutator_check("W", lam, lam.n)


def test_w_total_diagonal_weight_one():
    # total e_{a,a} acts as 1 on W_lam (gl_n weight (1,...,1))
    lam = Composition([2, 1])
    for I in enumerate_partitions(lam):
        mono = w_mono_of_partition(I, lam.N)
        for a in range(1, lam.n + 1):
            out = w_act({mono: 1}, None, a, a)
            assert out == {mono: 1}
    assert w_partition_of_mono(w_mono_of_partition(SetPartition.from_word("212"), 2)).word() == "212"
