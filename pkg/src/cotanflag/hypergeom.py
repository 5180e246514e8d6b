"""Numeric layer: master function, twisted integrals, flat-section residuals.

The master function is kept as a factored object (linear bases, exact rational
exponents); its log-gradient and log-Hessian are closed-form rational sums, so
Newton solves and quadrature never differentiate numerically.

Contours are piecewise paths (segments and arcs) with continuous branch
transport of each factor's logarithm, so a Pochhammer commutator loop around
two singular points integrates the multivalued integrand honestly at any
exponents.  Plain segments with tanh-sinh endpoint handling remain available
for parameter ranges where the open-interval integral converges.
"""

from __future__ import annotations

import cmath
import math
from fractions import Fraction

import numpy as np

from .symalg import MPoly, Q, RatFunc
from .weightspaces import Composition, SetPartition, enumerate_partitions
from .cohomology import (
    c_at, nu_matrix, q_at, quantum_mult, r_at, st_matrix, weight_restriction, zv,
)


def _rat(x):
    """Exact rational from int/Fraction/float/str (decimal reading for floats)."""
    if isinstance(x, float):
        return Q(Fraction(str(x)))
    if isinstance(x, str):
        return Q(Fraction(x))
    return Q(Fraction(x)) if isinstance(x, (int, Fraction)) else x


class NumericParams:
    """Evaluation point for the analytic checks.

    z, h, qt, kappa are exact rationals internally (floats are read as their
    decimal literals); derived x = -z/h, q = qt^{-1}, kappa_eff = kappa/h.
    """

    def __init__(self, z, h, qt, kappa):
        self.z = [_rat(v) for v in z]
        self.h = _rat(h)
        self.qt = [_rat(v) for v in qt]
        self.kappa = _rat(kappa)
        if self.h == 0 or self.kappa == 0:
            raise ValueError("h and kappa must be nonzero")
        if any(v == 0 for v in self.qt) or len(set(self.qt)) != len(self.qt):
            raise ValueError("quantum parameters must be distinct and nonzero")
        self.x = [-v / self.h for v in self.z]
        self.q = [1 / v for v in self.qt]
        self.kappa_eff = self.kappa / self.h

    @property
    def n(self):
        return len(self.z)

    @property
    def N(self):
        return len(self.qt)

    def point_zh(self):
        d = {f"z{a}": self.z[a - 1] for a in range(1, self.n + 1)}
        d["h"] = self.h
        return d

    @staticmethod
    def defaults():
        return NumericParams(z=(0.4, 0), h=0.3, qt=(2.0, 0.5), kappa=1.0)

    def to_json(self):
        return {
            "z": [float(v) for v in self.z], "h": float(self.h),
            "qt": [float(v) for v in self.qt], "kappa": float(self.kappa),
        }


def svar(a, j):
    return f"s{a}_{j}"


def s_variables(n):
    return [svar(a, j) for a in range(1, n) for j in range(1, n - a + 1)]


class MasterFunctionSpec:
    """Factored master function for a composition lam.

    factors: list of (base MPoly in (s, q), exponent RatFunc in x with exact
    rational constants).  The s-variable count is n(n-1)/2.
    """

    def __init__(self, lam):
        self.lam = lam
        n, N = lam.n, lam.N
        one = MPoly.const(1)
        fs = []
        for i in range(1, N + 1):
            for j in range(i + 1, N + 1):
                e = lam.parts[i - 1] * lam.parts[j - 1]
                if e:
                    fs.append((MPoly.var(f"q{i}") - MPoly.var(f"q{j}"), RatFunc.const(e)))
        for i in range(1, N + 1):
            li = lam.parts[i - 1]
            if li:
                expo = RatFunc(MPoly.var("x1") - one) * li + RatFunc.const(Q(li * li, 2))
                fs.append((MPoly.var(f"q{i}"), expo))
        for j in range(1, n):
            for i in range(1, N + 1):
                li = lam.parts[i - 1]
                if li:
                    fs.append((MPoly.var(svar(1, j)) - MPoly.var(f"q{i}"), RatFunc.const(-li)))
        for a in range(1, n):
            for i in range(1, n - a + 1):
                expo = RatFunc(MPoly.var(f"x{a + 1}") - MPoly.var(f"x{a}") + one)
                fs.append((MPoly.var(svar(a, i)), expo))
        for a in range(1, n - 1):
            for i in range(1, n - a + 1):
                for j in range(i + 1, n - a + 1):
                    fs.append((MPoly.var(svar(a, i)) - MPoly.var(svar(a, j)), RatFunc.const(2)))
            for i in range(1, n - a + 1):
                for j in range(1, n - a):
                    fs.append((MPoly.var(svar(a, i)) - MPoly.var(svar(a + 1, j)), RatFunc.const(-1)))
        self.factors = fs
        self.svars = s_variables(n)

    def bound(self, params):
        """(linear base data, float exponent) pairs with q, x substituted."""
        qsub = {f"q{i}": params.q[i - 1] for i in range(1, params.N + 1)}
        xsub = {f"x{a}": params.x[a - 1] for a in range(1, params.n + 1)}
        out = []
        for base, expo in self.factors:
            b = base.subs(qsub)
            const = complex(b.subs({v: 0 for v in self.svars}).const_value())
            coeffs = {}
            for v in self.svars:
                d = b.derivative(v)
                if not d.is_zero():
                    coeffs[v] = complex(d.const_value())
            e = complex(expo.eval(xsub))
            out.append((const, coeffs, e))
        return out


def master_function(spec, point, params):
    """Principal-branch value of the master function at an s-assignment."""
    total = 0j
    for const, coeffs, e in spec.bound(params):
        val = const + sum(c * complex(point[v]) for v, c in coeffs.items())
        total += e * cmath.log(val)
    return cmath.exp(total)


def master_log_gradient(spec, point, params, bound=None):
    """Exact-form gradient of log Phi: sum of exponent * dbase/base."""
    bound = bound if bound is not None else spec.bound(params)
    grad = {v: 0j for v in spec.svars}
    for const, coeffs, e in bound:
        if not coeffs:
            continue
        val = const + sum(c * complex(point[v]) for v, c in coeffs.items())
        if val == 0:
            raise ZeroDivisionError("gradient evaluated on an arrangement hyperplane")
        for v, c in coeffs.items():
            grad[v] += e * c / val
    return grad


def master_log_hessian(spec, point, params, bound=None):
    bound = bound if bound is not None else spec.bound(params)
    svs = spec.svars
    H = np.zeros((len(svs), len(svs)), dtype=complex)
    idx = {v: k for k, v in enumerate(svs)}
    for const, coeffs, e in bound:
        if not coeffs:
            continue
        val = const + sum(c * complex(point[v]) for v, c in coeffs.items())
        for v1, c1 in coeffs.items():
            for v2, c2 in coeffs.items():
                H[idx[v1], idx[v2]] -= e * c1 * c2 / (val * val)
    return H


# ---------------------------------------------------------------------------
# gl_n weight functions omega_I
# ---------------------------------------------------------------------------

def omega_I(I, lam):
    """Sum over bijection tuples of the relabeled simple-fraction product."""
    import itertools
    n, N = lam.n, lam.N
    hat = []  # (a, i, j) triples
    for a in range(1, N + 1):
        for i in I.block(a):
            for j in range(1, i):
                hat.append((a, i, j))
    levels = {}
    for (a, i, j) in hat:
        levels.setdefault(j, []).append((a, i, j))
    for k, members in levels.items():
        if len(members) != n - k:
            raise AssertionError("hat-variable count mismatch")
    total = RatFunc.const(0)
    level_keys = sorted(levels)
    choices = [list(itertools.permutations(range(1, n - k + 1))) for k in level_keys]
    for assign in itertools.product(*choices):
        smap = {}
        for lk, perm in zip(level_keys, assign):
            for (trip, pos) in zip(levels[lk], perm):
                smap[trip] = MPoly.var(svar(lk, pos))
        term = RatFunc.const(1)
        for a in range(1, N + 1):
            for i in I.block(a):
                if i == 1:
                    continue
                term = term * RatFunc.of(MPoly.const(1), smap[(a, i, 1)] - MPoly.var(f"q{a}"))
                for j in range(2, i):
                    term = term * RatFunc.of(MPoly.const(1), smap[(a, i, j)] - smap[(a, i, j - 1)])
        total = total + term
    return total


def omega_bound(I, lam, params):
    """omega_I with the q's substituted; returns a fast complex evaluator."""
    om = omega_I(I, lam)
    qsub = {f"q{i}": params.q[i - 1] for i in range(1, params.N + 1)}
    om = om.subs(qsub)

    def ev(point):
        return om.eval_complex(point)

    return ev


# ---------------------------------------------------------------------------
# contours with branch transport
# ---------------------------------------------------------------------------

class Segment:
    def __init__(self, z0, z1):
        self.z0 = complex(z0)
        self.z1 = complex(z1)

    def at(self, t):
        return self.z0 + (self.z1 - self.z0) * t

    def speed(self, t):
        return self.z1 - self.z0


class Arc:
    """Circular arc center + r e^{i theta}, theta from a0 to a1 (radians)."""

    def __init__(self, center, radius, a0, a1):
        self.center = complex(center)
        self.radius = float(radius)
        self.a0 = float(a0)
        self.a1 = float(a1)

    def at(self, t):
        th = self.a0 + (self.a1 - self.a0) * t
        return self.center + self.radius * cmath.exp(1j * th)

    def speed(self, t):
        th = self.a0 + (self.a1 - self.a0) * t
        return 1j * (self.a1 - self.a0) * self.radius * cmath.exp(1j * th)


class Contour:
    """One-dimensional piecewise path with a branch base point.

    The base point fixes principal values of every master-function factor;
    integration transports each factor's log continuously along the pieces.
    """

    def __init__(self, pieces, base_point=None, closed=True):
        self.pieces = list(pieces)
        self.base_point = complex(base_point if base_point is not None
                                  else pieces[0].at(0.0))
        self.closed = closed

    def min_distance_to(self, points, samples=160):
        d = math.inf
        for piece in self.pieces:
            for k in range(samples + 1):
                s = piece.at(k / samples)
                for p in points:
                    d = min(d, abs(s - complex(p)))
        return d


def pochhammer_contour(a, b, radius_frac=0.2):
    """Commutator double loop around the two points a < b, based midway.

    Total monodromy of any rank-one local system along it is trivial, so it is
    a flat cycle for arbitrary exponents; the integrand never meets the
    singular points.
    """
    a, b = complex(a), complex(b)
    r = abs(b - a) * radius_frac
    mid = (a + b) / 2
    pieces = []

    def loop(center, sign):
        # out along the real axis, around, and back
        entry = center + r if center.real < mid.real else center - r
        ang = 0.0 if center.real < mid.real else math.pi
        out = [Segment(mid, entry)]
        if sign > 0:
            out.append(Arc(center, r, ang, ang + 2 * math.pi))
        else:
            out.append(Arc(center, r, ang, ang - 2 * math.pi))
        out.append(Segment(entry, mid))
        return out

    pieces += loop(a, +1)
    pieces += loop(b, +1)
    pieces += loop(a, -1)
    pieces += loop(b, -1)
    return Contour(pieces, base_point=mid, closed=True)


def segment_contour(a, b, clearance=0.0):
    """The open real segment (a, b), for exponent ranges where it converges."""
    a, b = complex(a), complex(b)
    d = (b - a) * clearance
    return Contour([Segment(a + d, b - d)], base_point=(a + b) / 2, closed=False)


def _gauss_nodes(order):
    x, w = np.polynomial.legendre.leggauss(order)
    return (x + 1) / 2, w / 2  # on [0, 1]


def _transport_chain(piece, factors, start_logs, ts):
    """Continuous logs of every factor at the parameters ts (sorted, 0..1).

    start_logs are the factor logs at piece.at(0); steps are subdivided until
    every principal increment is small, so the continuation is unambiguous.
    """
    logs = [start_logs]
    pts = [piece.at(0.0)]
    for t in ts:
        pts.append(piece.at(t))
    prev = pts[0]
    cur = list(start_logs)
    out = []
    for k, t in enumerate(ts):
        target = pts[k + 1]
        seglogs = _continue_logs(factors, cur, prev, target, piece, (ts[k - 1] if k else 0.0), t)
        cur = seglogs
        prev = target
        out.append(cur)
    return out


def _continue_logs(factors, cur_logs, p0, p1, piece, t0, t1, depth=0):
    """Continue all factor logs from p0 to p1 along the piece arc [t0, t1]."""
    new = []
    redo = False
    for (const, coeffs, _e), lg in zip(factors, cur_logs):
        v0 = const + sum(c * p0 for c in coeffs.values())
        v1 = const + sum(c * p1 for c in coeffs.values())
        if v0 == 0 or v1 == 0:
            raise ZeroDivisionError("contour touches an arrangement hyperplane")
        inc = cmath.log(v1 / v0)
        if abs(inc.imag) > 1.5:
            redo = True
            break
        new.append(lg + inc)
    if not redo:
        return new
    if depth > 30:
        raise RuntimeError("branch transport failed to converge")
    tm = (t0 + t1) / 2
    pm = piece.at(tm)
    mid = _continue_logs(factors, cur_logs, p0, pm, piece, t0, tm, depth + 1)
    return _continue_logs(factors, mid, pm, p1, piece, tm, t1, depth + 1)


def hyper_integral(omega_ev, contour, spec, params, kappa_eff=None, order=24, panels=8):
    """Integral of Phi^{1/kappa_eff} * omega over a 1-D contour.

    Returns (value, error_estimate); the estimate compares against a
    half-resolution pass.  Branches are transported from the contour's base
    point, whose factor logs are principal.
    """
    if kappa_eff is None:
        kappa_eff = params.kappa_eff
    ke = complex(kappa_eff)
    if len(spec.svars) != 1:
        raise ValueError("hyper_integral handles one integration variable; use nested_integral")
    sv = spec.svars[0]
    factors = spec.bound(params)

    def run(order, panels):
        base = contour.base_point
        logs = []
        for const, coeffs, _e in factors:
            v = const + sum(c * base for c in coeffs.values())
            if v == 0:
                raise ZeroDivisionError("branch base point on a hyperplane")
            logs.append(cmath.log(v))
        nodes, weights = _gauss_nodes(order)
        total = 0j
        cur = logs
        cur_pt = base
        for piece in contour.pieces:
            p_start = piece.at(0.0)
            if abs(p_start - cur_pt) > 1e-13:
                cur = _continue_logs(factors, cur, cur_pt, p_start, Segment(cur_pt, p_start), 0.0, 1.0)
                cur_pt = p_start
            ts = []
            for p in range(panels):
                for x in nodes:
                    ts.append((p + x) / panels)
            ts.append(1.0)
            chain = _transport_chain(piece, factors, cur, ts)
            k = 0
            for p in range(panels):
                for xi, wi in zip(nodes, weights):
                    t = ts[k]
                    lgs = chain[k]
                    k += 1
                    s = piece.at(t)
                    theta = sum(e * lg for (_c, _cf, e), lg in zip(factors, lgs))
                    val = cmath.exp(theta / ke) * omega_ev({sv: s})
                    total += val * piece.speed(t) * (wi / panels)
            cur = chain[-1]
            cur_pt = piece.at(1.0)
        return total

    full = run(order, panels)
    half = run(max(4, order // 2), max(2, panels // 2))
    return full, abs(full - half)


def nested_integral(omega_ev, contours, spec, params, kappa_eff=None, order=16):
    """Nested 1-D quadrature over a product of segment contours (d <= 3).

    Uses principal per-factor logs at every point (no transport across the
    product structure), which is valid on real product domains that keep each
    factor's value off the negative real axis or constant in sign.
    """
    if kappa_eff is None:
        kappa_eff = params.kappa_eff
    ke = complex(kappa_eff)
    svs = spec.svars
    if len(svs) != len(contours):
        raise ValueError("one contour per integration variable")
    factors = spec.bound(params)
    nodes, weights = _gauss_nodes(order)

    def rec(depth, point):
        if depth == len(svs):
            theta = 0j
            for const, coeffs, e in factors:
                v = const + sum(c * point[sv] for sv, c in coeffs.items())
                theta += e * cmath.log(v)
            return cmath.exp(theta / ke) * omega_ev(point)
        total = 0j
        for piece in contours[depth].pieces:
            for xi, wi in zip(nodes, weights):
                point[svs[depth]] = piece.at(xi)
                total += rec(depth + 1, point) * piece.speed(xi) * wi
        point.pop(svs[depth], None)
        return total

    return rec(0, {})


def tanh_sinh_integral(f, a, b, levels=9):
    """Tanh-sinh quadrature on (a, b); robust for endpoint power singularities."""
    a, b = complex(a), complex(b)
    mid = (a + b) / 2
    half = (b - a) / 2
    h = 1.0
    total = 0j
    prev = None
    for level in range(levels):
        step = h / (2 ** level)
        ks = np.arange(-int(4.0 / step), int(4.0 / step) + 1)
        if level > 0:
            ks = ks[ks % 2 == 1]
        part = 0j
        for k in ks:
            t = k * step
            u = math.tanh(math.pi / 2 * math.sinh(t))
            w = (math.pi / 2 * math.cosh(t)) / (math.cosh(math.pi / 2 * math.sinh(t)) ** 2)
            s = mid + half * u
            part += f(s) * w
        total = (total / 2 if level else 0) + part * step * (1 if level else 1)
        total = total if level == 0 else total
        if level == 0:
            total = part * step
        else:
            total = total
        # recompute cleanly: trapezoid halving accumulates previous sums
        if level == 0:
            acc = part * step
        else:
            acc = prev / 2 + part * step
        prev = acc
        total = acc
    return total * half


# ---------------------------------------------------------------------------
# critical points
# ---------------------------------------------------------------------------

def critical_solve(spec, params, starts=None, grid=5, tol=1e-13, max_iter=60):
    """Newton multistart on grad log Phi = 0; returns points with Hessians.

    The start grid samples every bounded chamber between arrangement walls on
    the real axis (plus extensions into the unbounded ones) with small
    imaginary jitter; converged points are deduplicated at 1e-9.
    """
    svs = spec.svars
    if len(svs) != 1:
        raise NotImplementedError("multistart solve implemented for one variable")
    sv = svs[0]
    bound = spec.bound(params)
    walls = sorted({0.0} | {(-const / coeffs[sv]).real
                            for const, coeffs, _e in bound if sv in coeffs})
    span = (walls[-1] - walls[0]) or 1.0
    cells = []
    ext = [walls[0] - 1.5 * span, *walls, walls[-1] + 1.5 * span]
    for lo, hi in zip(ext, ext[1:]):
        if hi - lo > 1e-12:
            cells.append((lo, hi))
    if starts is None:
        starts = []
        for lo, hi in cells:
            for k in range(1, grid + 1):
                starts.append(lo + (hi - lo) * k / (grid + 1) + 1e-3j)
    found = []
    reports = []
    for s0 in starts:
        s = complex(s0)
        ok = False
        for _ in range(max_iter):
            try:
                g = master_log_gradient(spec, {sv: s}, params, bound)[sv]
                Hd = master_log_hessian(spec, {sv: s}, params, bound)[0, 0]
            except ZeroDivisionError:
                break
            if Hd == 0:
                break
            step = g / Hd
            s = s - step
            if abs(step) < tol:
                ok = True
                break
        if not ok:
            reports.append({"start": s0, "converged": False})
            continue
        g = master_log_gradient(spec, {sv: s}, params, bound)[sv]
        if abs(g) > 1e-10:
            reports.append({"start": s0, "converged": False})
            continue
        if all(abs(s - p) > 1e-9 for p in found):
            found.append(s)
        reports.append({"start": s0, "converged": True})
    out = []
    for s in sorted(found, key=lambda v: (v.real, v.imag)):
        H = master_log_hessian(spec, {sv: s}, params, bound)[0, 0]
        out.append({"point": s, "hessian": H,
                    "residual": abs(master_log_gradient(spec, {sv: s}, params, bound)[sv])})
    return out


# ---------------------------------------------------------------------------
# the worked two-point example: discriminants
# ---------------------------------------------------------------------------

def discriminant_check():
    """Both discriminants of the worked n=N=2 example, plus the verdict.

    Returns (disc_master, disc_quantum, verdict): the critical-point equation
    discriminant, the quantum-relation discriminant, and the exact statement
    disc_master * qt1^2 qt2^2 == disc_quantum.
    """
    z1, z2, h = MPoly.var("z1"), MPoly.var("z2"), MPoly.var("h")
    qt1, qt2 = MPoly.var("qt1"), MPoly.var("qt2")
    a1 = RatFunc.of(MPoly.const(1), qt1)   # qt1^{-1}
    a2 = RatFunc.of(MPoly.const(1), qt2)
    # critical-point quadratic (z2-z1+h) s^2 - (z2-z1)(a1+a2) s + a1 a2 (z2-z1-h)
    A = RatFunc(z2 - z1 + h)
    B = RatFunc(z2 - z1) * (a1 + a2) * -1
    C = a1 * a2 * RatFunc(z2 - z1 - h)
    disc_master = B * B - A * C * 4
    want_master = (RatFunc(z1 - z2) * (a1 - a2)) ** 2 + a1 * a2 * RatFunc(h * h) * 4
    if disc_master != want_master:
        raise AssertionError("master-side discriminant mismatch")
    # quantum relation (qt1-qt2) t^2 - (2 qt1 h + (qt1-qt2)(z1+z2)) t + ...
    A2 = RatFunc(qt1 - qt2)
    B2 = RatFunc(qt1 * h * 2 + (qt1 - qt2) * (z1 + z2)) * -1
    C2 = RatFunc((qt1 - qt2) * (z1 * z2) + qt1 * h * (z1 + z2 + h))
    disc_quantum = B2 * B2 - A2 * C2 * 4
    want_quantum = RatFunc((z1 - z2) ** 2 * (qt1 - qt2) ** 2 + qt1 * qt2 * h * h * 4)
    if disc_quantum != want_quantum:
        raise AssertionError("quantum-side discriminant mismatch")
    verdict = disc_master * RatFunc(qt1 ** 2 * qt2 ** 2) == disc_quantum
    return disc_master, disc_quantum, verdict


def critical_quadratic_from_master(params):
    """Clear denominators of the d=1 critical equation; exact coefficients."""
    # kappa cancels from grad log Phi = 0; multiply by s(s-q1)(s-q2)
    z1, z2, h = params.z[0], params.z[1], params.h
    q1, q2 = params.q[0], params.q[1]
    A = z2 - z1 + h
    B = -(z2 - z1) * (q1 + q2)
    C = q1 * q2 * (z2 - z1 - h)
    return A, B, C


# ---------------------------------------------------------------------------
# gamma and the flat-section assembly
# ---------------------------------------------------------------------------

_LANCZOS_G = 7.0
_LANCZOS_C = (
    0.99999999999980993, 676.5203681218851, -1259.1392167224028,
    771.32342877765313, -176.61502916214059, 12.507343278686905,
    -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7,
)


def cgamma(z):
    """Complex gamma via Lanczos with reflection; ~1e-13 relative on the test region."""
    z = complex(z)
    if z.real < 0.5:
        s = cmath.sin(cmath.pi * z)
        if s == 0:
            raise ZeroDivisionError("gamma pole at a nonpositive integer")
        return cmath.pi / (s * cgamma(1 - z))
    z -= 1
    acc = _LANCZOS_C[0]
    for k in range(1, len(_LANCZOS_C)):
        acc += _LANCZOS_C[k] / (z + k)
    t = z + _LANCZOS_G + 0.5
    return math.sqrt(2 * math.pi) * t ** (z + 0.5) * cmath.exp(-t) * acc


def _cpow(base, expo):
    """Principal-branch power, smooth under real perturbations along the axis."""
    b = complex(base)
    if b == 0:
        raise ZeroDivisionError("zero base in a power prefactor")
    return cmath.exp(complex(expo) * cmath.log(b))


def section_prefactor(lam, params):
    """Power and gamma prefactors of the assembled flat section."""
    h, kp = complex(params.h), complex(params.kappa)
    out = 1 + 0j
    for i in range(1, lam.N + 1):
        out *= _cpow(complex(params.qt[i - 1]), -h * lam.parts[i - 1] / (2 * kp))
    for i in range(1, lam.N + 1):
        for j in range(i + 1, lam.N + 1):
            base = 1 - complex(params.qt[i - 1]) / complex(params.qt[j - 1])
            mn = min(lam.parts[i - 1], lam.parts[j - 1])
            out *= _cpow(base, h * mn / kp)
    for i in range(1, lam.n + 1):
        for j in range(i + 1, lam.n + 1):
            zij = complex(params.z[j - 1]) - complex(params.z[i - 1])
            out *= cgamma((zij - h) / kp) / cgamma((zij + h) / kp)
    return out


def default_contour(params, radius_frac=0.2):
    """Pochhammer double loop around the two finite s-singularities q_i."""
    if params.N != 2:
        raise NotImplementedError("default contour is the two-point loop")
    a, b = sorted((complex(params.q[0]), complex(params.q[1])), key=lambda v: v.real)
    ct = pochhammer_contour(a, b, radius_frac)
    if ct.min_distance_to([0.0, params.q[0], params.q[1]]) < 1e-9:
        raise ValueError("contour touches the arrangement")
    return ct


def flat_section_quantum(params, lam=None, contour=None, order=24, panels=8):
    """The assembled flat section of the quantum connection, numerically.

    Returns {"values": {word: complex}, "integrals": {...}, "errors": {...}}:
    prefactor * sum_I J_I * St_I restrictions, at the given parameters.
    """
    lam = lam or Composition([1] * params.n)
    spec = MasterFunctionSpec(lam)
    contour = contour or default_contour(params)
    basis = enumerate_partitions(lam)
    pre = section_prefactor(lam, params)
    integrals = {}
    errors = {}
    for I in basis:
        om = omega_bound(I, lam, params)
        val, err = hyper_integral(om, contour, spec, params, order=order, panels=panels)
        integrals[I.word()] = val
        errors[I.word()] = err
    point = params.point_zh()
    values = {}
    for J in basis:
        acc = 0j
        for I in basis:
            st = weight_restriction(lam, I, J, point=point) / c_at(lam.parts, J.word()).eval(point)
            acc += integrals[I.word()] * complex(st)
        values[J.word()] = pre * acc
    return {"values": values, "integrals": integrals, "errors": errors,
            "prefactor": pre, "lam": lam, "contour": contour}


def _section_vector(params, lam, order, panels, radius_frac=0.2):
    sec = flat_section_quantum(params, lam, default_contour(params, radius_frac),
                               order=order, panels=panels)
    basis = enumerate_partitions(lam)
    return np.array([sec["values"][J.word()] for J in basis])


def _mat_complex(M, point):
    return np.array([[complex(e.eval(point)) for e in row] for row in M.entries])


def verify_residual(params, mode="differential", lam=None, order=24, panels=8,
                    fd_step=0.05):
    """Residual norms of the assembled section against the two connections.

    differential: max_i |kappa qt_i d S/d qt_i - (D_i*) S| / |S|, derivative by
    4th-order central differences in log qt_i.  difference: the multiplier of
    St . K . nu applied to the z-shifted section, compared with the section.
    """
    lam = lam or Composition([1] * params.n)
    basis = enumerate_partitions(lam)
    S0 = _section_vector(params, lam, order, panels)
    norm0 = float(np.linalg.norm(S0))
    out = {}
    if mode == "differential":
        worst = 0.0
        for i in range(1, lam.N + 1):
            def S_at(scale):
                qt = list(params.qt)
                qt[i - 1] = qt[i - 1] * _rat(scale)
                p2 = NumericParams(params.z, params.h, qt, params.kappa)
                return _section_vector(p2, lam, order, panels)
            d = fd_step
            e = math.exp(d)
            Sp1, Sm1 = S_at(math.exp(d)), S_at(math.exp(-d))
            Sp2, Sm2 = S_at(math.exp(2 * d)), S_at(math.exp(-2 * d))
            dS = (-Sp2 + 8 * Sp1 - 8 * Sm1 + Sm2) / (12 * d)
            point = params.point_zh()
            for k in range(1, lam.N + 1):
                point[f"qt{k}"] = params.qt[k - 1]
            D = _mat_complex(quantum_mult(i, lam), point)
            res = complex(params.kappa) * dS - D @ S0
            worst = max(worst, float(np.linalg.norm(res)) / norm0)
            out[f"differential_{i}"] = float(np.linalg.norm(res)) / norm0
        out["residual"] = worst
        return out
    if mode == "difference":
        from .connections import qkz_K
        worst = 0.0
        kp_sym = MPoly.var("kp")
        for i in range(1, lam.n + 1):
            z2 = list(params.z)
            z2[i - 1] = z2[i - 1] - params.kappa
            p_sh = NumericParams(z2, params.h, params.qt, params.kappa)
            S_sh = _section_vector(p_sh, lam, order, panels)
            point = params.point_zh()
            for k in range(1, lam.N + 1):
                point[f"q{k}"] = params.q[k - 1]
            point["kp"] = -params.kappa
            K = qkz_K("V_with_h", i, lam, kp_sym).K.eval_point(point)
            St = st_matrix(lam, point=params.point_zh())
            Nu = nu_matrix(lam, point=p_sh.point_zh())
            M = _np_of(St) @ _np_of_q(K) @ _np_of(Nu)
            res = M @ S_sh - S0
            worst = max(worst, float(np.linalg.norm(res)) / norm0)
            out[f"difference_{i}"] = float(np.linalg.norm(res)) / norm0
        out["residual"] = worst
        return out
    raise ValueError("mode must be 'differential' or 'difference'")


def _np_of(M):
    return np.array([[complex(e.eval({}) if isinstance(e, RatFunc) else e)
                      for e in row] for row in M.entries])


def _np_of_q(M):
    return np.array([[complex(e if not isinstance(e, RatFunc) else e.eval({}))
                      for e in row] for row in M.entries])
