import itertools

import pytest

from cotanflag.symalg import MPoly, NonDivisible, Q, RatFunc, random_point, exact_divide
from cotanflag.weightspaces import Composition, SetPartition, WeightVector, enumerate_partitions
from cotanflag.connections import OperatorMatrix, check_compat, DifferentialOp, qvar
from cotanflag.cohomology import (
    CohomClass, c_at, c_theta, identity_perm, longest_perm, nu_apply, nu_matrix,
    q_at, quantum_connection, quantum_mult, r_at, restrict, rho_A, rho_E, rho_F,
    rho_Xinf, rho_Xq_lambda, rho_action, rho_e_matrix, rho_ee, st_matrix,
    stable_envelope, weight_function, xi_vector, zv, tvar, thvar, HH, qtv,
)


L11 = Composition([1, 1])
I12 = SetPartition.from_word("12")
I21 = SetPartition.from_word("21")


def comps(n, N):
    if N == 1:
        return [Composition([n])]
    out = []
    for first in range(n + 1):
        for rest in comps(n - first, N - 1):
            out.append(Composition([first] + list(rest.parts)))
    return out


def test_weight_function_golden_example():
    # the two hallmark weight polynomials at lam=(1,1)
    WI = weight_function(identity_perm(2), I12, L11)
    WJ = weight_function(identity_perm(2), I21, L11)
    t = tvar(1, 1)
    assert WI == MPoly.const(-1) * HH * (t - zv(2))
    assert WJ == MPoly.const(-1) * HH * (t - zv(1) - HH)


def test_weight_function_N1_is_one():
    lam = Composition([3])
    I = SetPartition.from_word("111")
    assert weight_function(identity_perm(3), I, lam) == MPoly.const(1)


def test_weight_function_symmetric_in_blocks():
    lam = Composition([2, 1])
    for I in enumerate_partitions(lam):
        W = weight_function(identity_perm(3), I, lam)
        assert W.rename({"t1_1": "t1_2", "t1_2": "t1_1"}) == W


def test_restrict_basics():
    lam = L11
    f = thvar(1, 1)
    assert restrict(f, I12, lam) == zv(1)
    assert restrict(f, I21, lam) == zv(2)
    # ring map on a product
    g = thvar(1, 1) * thvar(1, 1) + HH
    assert restrict(g, I12, lam) == zv(1) * zv(1) + HH


def test_restrict_rejects_asymmetric():
    lam = Composition([2, 1])
    f = thvar(1, 1)  # not symmetric in the rank-2 block {th1_1, th1_2}
    with pytest.raises(ValueError):
        restrict(f, enumerate_partitions(lam)[0], lam)


def test_restrict_symmetric_relations():
    # elementary symmetric polynomials of a full block restrict to e_k(z)
    lam = Composition([1, 1])
    # block 1 of size 1: th1_1 -> z of the first block member; trivial case done
    lam2 = Composition([2, 0])
    I = SetPartition.from_word("11")
    e1 = thvar(1, 1) + thvar(1, 2)
    e2 = thvar(1, 1) * thvar(1, 2)
    assert restrict(e1, I, lam2) == zv(1) + zv(2)
    assert restrict(e2, I, lam2) == zv(1) * zv(2)


def test_triangularity_and_diagonal_values():
    # W_{id,I}(z_I) = c(z_I) * nonzero; opposite fixed point vanishes at lam=(1,1)
    WI = weight_function(identity_perm(2), I12, L11)
    assert restrict(WI, I21, L11, check_symmetry=False).is_zero()
    dI = restrict(WI, I12, L11, check_symmetry=False)
    assert exact_divide(dI, c_at(L11.parts, I12.word())) == zv(1) - zv(2)


def test_c_R_Q_values():
    assert c_at(L11.parts, I12.word()) == MPoly.const(-1) * HH
    assert r_at(L11.parts, I12.word()) == zv(1) - zv(2)
    assert q_at(L11.parts, I21.word()) == zv(2) - zv(1) - HH
    # c never vanishes at fixed points: leading normalization (-h)^{lam^{{1}}}
    for n in range(1, 5):
        for N in (2, 3):
            for lam in comps(n, N):
                for I in enumerate_partitions(lam):
                    c = c_at(lam.parts, I.word())
                    val = c.eval({f"z{a}": Q(3 * a + 1, 7) for a in range(1, n + 1)} | {"h": Q(1, 5)})
                    assert val != 0


def test_restriction_routes_agree():
    # direct per-permutation substitution vs expand-in-t-then-substitute
    from cotanflag.cohomology import weight_restriction, _weight_function_id
    sigma0 = longest_perm(3)
    for parts in [(1, 1), (2, 0), (1, 2), (2, 1), (1, 1, 1), (0, 2, 1)]:
        lam = Composition(parts)
        sigmas = [identity_perm(lam.n)]
        if lam.n == 3:
            sigmas.append(sigma0)
        for I in enumerate_partitions(lam):
            W = _weight_function_id(lam.parts, I.word())
            for J in enumerate_partitions(lam):
                for sg in sigmas:
                    direct = weight_restriction(lam, I, J, sigma=sg)
                    via_t = restrict(weight_function(sg, I, lam), J, lam, check_symmetry=False)
                    assert direct == via_t, (parts, I, J, sg)


def test_restriction_point_route_agrees():
    from cotanflag.cohomology import weight_restriction
    lam = Composition([2, 1, 1])
    pts = random_point([f"z{a}" for a in range(1, 5)] + ["h"],
                       [zv(a) - zv(b) for a in range(1, 5) for b in range(a + 1, 5)],
                       seed=5)
    basis = enumerate_partitions(lam)
    for I in basis[:3]:
        for J in basis[:3]:
            sym = weight_restriction(lam, I, J).eval(pts)
            num = weight_restriction(lam, I, J, point=pts)
            assert sym == num


def test_stable_envelope_values_lam11():
    St = stable_envelope(I12, L11)
    assert St[I12] == RatFunc(zv(1) - zv(2))
    assert St[I21].is_zero()
    St2 = stable_envelope(I21, L11)
    assert St2[I12] == RatFunc(MPoly.const(-1) * HH)
    assert St2[I21] == RatFunc(zv(2) - zv(1) - HH)


def test_stable_envelope_unit_for_N1():
    lam = Composition([2])
    I = SetPartition.from_word("11")
    St = stable_envelope(I, lam)
    assert St[I] == RatFunc.const(1)


def test_divisibility_all_small():
    # every restriction divides exactly; n <= 3 here, n = 4 in acceptance
    for n in range(1, 4):
        for N in (2, 3):
            for lam in comps(n, N):
                for I in enumerate_partitions(lam):
                    stable_envelope(I, lam)  # raises NonDivisible on failure


def test_nu_inverts_stable_envelope_small():
    for n in range(1, 4):
        for N in (2, 3):
            for lam in comps(n, N):
                for I in enumerate_partitions(lam):
                    St = stable_envelope(I, lam)
                    v = nu_apply(St)
                    assert set(v.coords) == {I}
                    assert v.coords[I] == RatFunc.const(1)


def test_nu_matrix_times_st_matrix_is_identity():
    for parts in [(1, 1), (2, 1), (1, 1, 1)]:
        lam = Composition(parts)
        prod = nu_matrix(lam) @ st_matrix(lam)
        assert prod == OperatorMatrix.identity(enumerate_partitions(lam), lam)


def test_xi_explicit_lam11():
    xi = xi_vector(I12, L11)
    assert xi.coords == {I12: RatFunc.const(1)}
    xi2 = xi_vector(I21, L11)
    den = zv(2) - zv(1) - HH
    assert xi2.coords[I12] == RatFunc.of(MPoly.const(-1) * HH, den)
    assert xi2.coords[I21] == RatFunc.of(zv(2) - zv(1), den)


def test_nu_linearity():
    lam = L11
    StI = stable_envelope(I12, lam)
    StJ = stable_envelope(I21, lam)
    mix = CohomClass(lam, {K: StI[K] * Q(3) + StJ[K] * Q(5) for K in enumerate_partitions(lam)})
    v = nu_apply(mix)
    assert v.coords[I12] == RatFunc.const(3)
    assert v.coords[I21] == RatFunc.const(5)


def test_rho_Xinf_multiplies_by_block_sum():
    lam = Composition([1, 2])
    M = rho_Xinf(2, lam)
    basis = enumerate_partitions(lam)
    for c, I in enumerate(basis):
        want = RatFunc.const(0)
        for a in I.block(2):
            want = want + RatFunc(zv(a))
        assert M.entries[c][c] == want


def test_rho_A_on_unit_class():
    u = MPoly.var("u")
    cls = CohomClass.unit(L11)
    out = rho_action("A", 1, u, cls)
    # block 1 of I12 is {1}: factor 1 - h/(u - z_1)
    assert out[I12] == RatFunc.const(1) - RatFunc.of(HH, u - zv(1))
    assert out[I21] == RatFunc.const(1) - RatFunc.of(HH, u - zv(2))


def test_rho_E_on_empty_domain_is_zero():
    lam = Composition([2, 0])
    M = rho_E(1, lam)  # domain lam - alpha_1 = (1,1)
    assert M.dom_lam == Composition([1, 1])
    # raising out of the weight cone is the documented zero-map error
    cls = CohomClass(lam, {SetPartition.from_word("11"): RatFunc.const(1)})
    with pytest.raises(ValueError):
        rho_action("E", 1, MPoly.var("u"), cls)  # target (3,-1) leaves the cone


def test_rho_gl_relations_exhaustive():
    # [e_ij, e_kl] = d_jk e_il - d_li e_kj on restrictions, N <= 3, n <= 3
    for parts in [(1, 1), (2, 1), (1, 1, 1), (0, 2, 1)]:
        lam = Composition(parts)
        N = lam.N
        for i, j, k, l in itertools.product(range(1, N + 1), repeat=4):
            dom = lam
            # build both sides as maps into lam: domain = lam - e_i + e_j - e_k + e_l
            from cotanflag.cohomology import _dom_of
            mid1 = _dom_of(lam, i, j)
            lhs1 = None
            if mid1 is not None:
                inner = rho_e_matrix(mid1, k, l)
                if inner.dom:
                    lhs1 = rho_e_matrix(lam, i, j) @ inner
            mid2 = _dom_of(lam, k, l)
            lhs2 = None
            if mid2 is not None:
                inner = rho_e_matrix(mid2, i, j)
                if inner.dom:
                    lhs2 = rho_e_matrix(lam, k, l) @ inner
            if lhs1 is None and lhs2 is None:
                continue
            shape = lhs1 if lhs1 is not None else lhs2
            lhs1 = lhs1 if lhs1 is not None else OperatorMatrix.zero(shape.dom, shape.cod, shape.dom_lam, lam)
            lhs2 = lhs2 if lhs2 is not None else OperatorMatrix.zero(shape.dom, shape.cod, shape.dom_lam, lam)
            lhs = lhs1 - lhs2
            rhs = OperatorMatrix.zero(lhs.dom, lhs.cod, lhs.dom_lam, lam)
            if j == k:
                m = rho_e_matrix(lam, i, l)
                if m.dom == lhs.dom:
                    rhs = rhs + m
            if l == i:
                m = rho_e_matrix(lam, k, j)
                if m.dom == lhs.dom:
                    rhs = rhs - m
            assert (lhs - rhs).is_zero(), (parts, i, j, k, l)


def test_quantum_mult_h0_classical():
    lam = L11
    D = quantum_mult(1, lam)
    pt = random_point(["z1", "z2", "qt1", "qt2"],
                      [qtv(1) - qtv(2), qtv(1), qtv(2)], seed=3)
    pt = dict(pt)
    pt["h"] = Q(0)
    Dn = D.eval_point(pt)
    assert Dn.entries[0][0] == pt["z1"] and Dn.entries[1][1] == pt["z2"]
    assert Dn.entries[0][1] == 0 and Dn.entries[1][0] == 0


def test_quantum_mult_774_quadratic_relation():
    # (qt1-qt2) D^2 - (2 qt1 h + (qt1-qt2)(z1+z2)) D
    #   + ((qt1-qt2) z1 z2 + qt1 h (z1+z2+h)) = 0, exactly
    lam = L11
    D = quantum_mult(1, lam)
    basis = enumerate_partitions(lam)
    a = RatFunc(qtv(1) - qtv(2))
    b = RatFunc(qtv(1) * HH * 2 + (qtv(1) - qtv(2)) * (zv(1) + zv(2)))
    c = RatFunc((qtv(1) - qtv(2)) * (zv(1) * zv(2)) + qtv(1) * HH * (zv(1) + zv(2) + HH))
    Ident = OperatorMatrix.identity(basis, lam)
    resid = (D @ D).scale(a) - D.scale(b) + Ident.scale(c)
    assert resid.is_zero()


def test_quantum_mult_sum_is_classical():
    for parts in [(1, 1), (2, 1), (1, 1, 1)]:
        lam = Composition(parts)
        total = None
        for i in range(1, lam.N + 1):
            D = quantum_mult(i, lam)
            total = D if total is None else total + D
        want = None
        for i in range(1, lam.N + 1):
            M = rho_Xinf(i, lam)
            want = M if want is None else want + M
        assert (total - want).is_zero()


def test_quantum_mult_pairwise_commute():
    for parts in [(1, 1), (2, 1)]:
        lam = Composition(parts)
        Ds = [quantum_mult(i, lam) for i in range(1, lam.N + 1)]
        for A, B in itertools.combinations(Ds, 2):
            assert (A @ B - B @ A).is_zero()


def test_quantum_mult_equals_dynamical_hamiltonian():
    # D_i* = rho(X^q_{lam,i}) under q -> qt^{-1}
    for parts in [(1, 1), (2, 1)]:
        lam = Composition(parts)
        for i in range(1, lam.N + 1):
            D = quantum_mult(i, lam)
            X = rho_Xq_lambda(i, lam)
            Xq = X.map_entries(lambda e: _sub_q_inverse(e, lam.N))
            assert (D - Xq).is_zero()


def _sub_q_inverse(f, N):
    # q_k -> qt_k^{-1} on a RatFunc, staying exact
    out = _poly_sub_qinv(f.num, N)
    for fac, m in f.fden:
        out = out / _poly_sub_qinv(fac, N) ** m
    return out


def _poly_sub_qinv(p, N):
    out = RatFunc.const(0)
    for e, c in p.tuple_terms().items():
        term = RatFunc.const(c)
        for v, k in zip(p.vars, e):
            if k == 0:
                continue
            if v.startswith("q") and not v.startswith("qt"):
                term = term * RatFunc.of(MPoly.const(1), MPoly.var("qt" + v[1:], k))
            else:
                term = term * RatFunc(MPoly.var(v, k))
        out = out + term
    return out


def test_quantum_connection_flat_lam11():
    lam = L11
    kp = RatFunc.var("kp")
    ops = [quantum_connection(i, lam, kp) for i in (1, 2)]
    names = ["z1", "z2", "h", "qt1", "qt2", "kp"]
    cons = [qtv(1) - qtv(2), qtv(1), qtv(2), MPoly.var("kp"), HH]
    for seed in range(3):
        pt = random_point(names, cons, seed=seed)
        assert check_compat(ops[0], ops[1], point=pt).is_zero()


def test_st_intertwines_rho_small():
    # St . pho(series) = rho(series) . St at random rational points, lam=(1,1)
    from cotanflag.connections import series_AEF
    lam = L11
    names = ["z1", "z2", "h"]
    cons = [zv(1) - zv(2), HH, zv(1) - zv(2) - HH, zv(2) - zv(1) - HH,
            zv(1) - zv(2) + HH]
    for seed in range(4):
        pt = random_point(names, cons, seed=seed)
        uval = Q(17 + seed, 3)
        S_lam = st_matrix(lam).eval_point(pt)
        # A_1
        phoA = series_AEF(1, "A", 2, 2, lam, pt, uval)
        rhoA = rho_A(1, lam, uval).eval_point(pt)
        lhs = S_lam @ phoA
        rhs = rhoA @ S_lam
        assert (lhs - rhs).is_zero()
        # E_1: dom (1,1)-alpha_1... E_1 maps V_{(0,2)} -> V_{(1,1)}
        dom = lam.shifted(1, -1)
        S_dom = st_matrix(dom).eval_point(pt)
        phoE = series_AEF(1, "E", 2, 2, lam, pt, uval)
        rhoEm = rho_E(1, lam, uval).eval_point(pt)
        assert (S_lam @ phoE - rhoEm @ S_dom).is_zero()
        # F_1: maps V_{(2,0)} -> V_{(1,1)}
        dom2 = lam.shifted(1, +1)
        S_dom2 = st_matrix(dom2).eval_point(pt)
        phoF = series_AEF(1, "F", 2, 2, lam, pt, uval)
        rhoFm = rho_F(1, lam, uval).eval_point(pt)
        assert (S_lam @ phoF - rhoFm @ S_dom2).is_zero()
