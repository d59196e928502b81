"""End-to-end acceptance gate.

One test per deliverable property: closed-form constants, exact-oracle
identities, certified accuracy of both pipelines, equivalence of the two
derivative routes, soundness of the truncation bound, the disc-to-strip
mapping, zero-freeness sampling over every supported region family, and
benchmark determinism. Tolerances and runtime ceilings are pinned; a failure
here means the package no longer delivers what it promises.
"""

import io
import itertools
import json
import math
import re
import time
from contextlib import redirect_stdout

import numpy as np
import pytest

from permlog import (
    ComplexMatrix,
    ComplexTensor,
    RegionKind,
    RegionSpec,
    SymmetricComplexMatrix,
    UnivariatePolynomial,
    WeightedHypergraph,
    alpha_constant,
    approx_log_disc,
    approx_log_strip,
    build_phi,
    check_region,
    deviation_hypergraph,
    eta_d_disc,
    eta_d_l1,
    eta_d_strip,
    g_derivatives_hafnian,
    g_derivatives_permanent,
    g_derivatives_tensor,
    g_full_expansion_hafnian,
    g_full_expansion_permanent,
    g_full_expansion_tensor,
    hafnian_exact,
    log_derivatives,
    matching_polynomial,
    matching_weight_budget,
    partial_exp_poly,
    permanent_exact,
    polynomial_roots,
    schur_product,
    tau_bound,
    taylor_error_bound,
    tensor_permanent_exact,
)
from permlog.cli import main as cli_main


def _uniform_disc(rng, count, radius):
    """Complex samples uniform over the closed disc |u| <= radius."""
    r = radius * np.sqrt(rng.uniform(0.0, 1.0, count))
    theta = rng.uniform(0.0, 2.0 * np.pi, count)
    return r * np.exp(1j * theta)


def _poly_from_roots(roots):
    c = np.array([1.0 + 0.0j])
    for z in roots:
        c = np.convolve(c, np.array([1.0, -1.0 / z]))
    return c


def test_region_constants():
    t0 = time.perf_counter()
    assert alpha_constant() == pytest.approx(0.278, abs=5e-4)
    assert eta_d_disc(2)[0] == pytest.approx(0.5, abs=1e-9)
    assert eta_d_disc(3)[0] == pytest.approx(math.sqrt(6) / 9, abs=1e-9)
    # the d=4 optimum has cos(theta) = (1 + sqrt(33))/8; its value 0.18450...
    # truncates to the 3-decimal display 0.184
    theta4 = math.acos((1 + math.sqrt(33)) / 8)
    eta4_closed = math.sin(theta4 / 2) * math.cos(3 * theta4 / 2)
    eta4 = eta_d_disc(4)[0]
    assert eta4 == pytest.approx(eta4_closed, abs=5e-4)
    assert math.floor(eta4 * 1000) / 1000 == 0.184
    assert eta_d_strip(2) == pytest.approx(1.0, abs=1e-12)
    assert eta_d_strip(3) == pytest.approx(math.sqrt(2) - 1, abs=1e-12)
    assert eta_d_strip(4) == pytest.approx(2 - math.sqrt(3), abs=1e-12)
    assert time.perf_counter() - t0 < 1.0


def test_exact_oracle_identities():
    t0 = time.perf_counter()
    for n in range(1, 11):
        got = permanent_exact(ComplexMatrix(np.ones((n, n))))
        assert got == pytest.approx(math.factorial(n), rel=1e-10)
    for n in range(1, 7):
        two_n = 2 * n
        got = hafnian_exact(SymmetricComplexMatrix(np.ones((two_n, two_n))))
        want = math.factorial(two_n) // (2**n * math.factorial(n))
        assert got == pytest.approx(want, rel=1e-10)
    for n in range(1, 6):
        got = tensor_permanent_exact(ComplexTensor(np.ones((n, n, n))))
        assert got == pytest.approx(math.factorial(n) ** 2, rel=1e-10)

    # embedding a matrix in an off-diagonal block turns per into haf
    rng = np.random.default_rng(1001)
    for n in range(1, 7):
        a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        block = np.zeros((2 * n, 2 * n), dtype=complex)
        block[:n, n:] = a
        block[n:, :n] = a.T
        got = hafnian_exact(SymmetricComplexMatrix(block))
        want = permanent_exact(ComplexMatrix(a))
        assert got == pytest.approx(want, rel=1e-10)

    # entries (1 +/- i)/2: permanent vanishes exactly
    w = 0.5 + 0.5j
    singular = ComplexMatrix(np.array([[w, w.conjugate()], [w.conjugate(), w]]))
    assert abs(permanent_exact(singular)) <= 1e-14
    assert time.perf_counter() - t0 < 30.0


def test_disc_pipeline_accuracy():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2001)
    for _ in range(50):
        a = ComplexMatrix(rng.uniform(0.6, 1.0, (7, 7)))
        rep = approx_log_disc(a, 0.4, 1e-3)
        exact = math.log(permanent_exact(a).real)
        assert abs(rep.log_value - exact) <= 1e-3
    for _ in range(25):
        raw = rng.uniform(0.6, 1.0, (8, 8))
        s = SymmetricComplexMatrix((raw + raw.T) / 2.0)
        rep = approx_log_disc(s, 0.4, 1e-3)
        exact = math.log(hafnian_exact(s).real)
        assert abs(rep.log_value - exact) <= 1e-3
    for _ in range(10):
        t = ComplexTensor(rng.uniform(0.78, 1.0, (3, 3, 3)))
        rep = approx_log_disc(t, 0.22, 1e-3)
        exact = math.log(tensor_permanent_exact(t).real)
        assert abs(rep.log_value - exact) <= 1e-3
    assert time.perf_counter() - t0 < 300.0


def test_strip_pipeline_accuracy():
    t0 = time.perf_counter()
    rng = np.random.default_rng(3001)
    for _ in range(25):
        a = ComplexMatrix(rng.uniform(0.5, 1.0, (6, 6)))
        rep = approx_log_strip(a, 0.5, 0.1)
        exact = math.log(permanent_exact(a).real)
        assert abs(rep.log_value - exact) <= 0.1
    for _ in range(10):
        raw = rng.uniform(0.5, 1.0, (8, 8))
        s = SymmetricComplexMatrix((raw + raw.T) / 2.0)
        rep = approx_log_strip(s, 0.5, 0.1)
        exact = math.log(hafnian_exact(s).real)
        assert abs(rep.log_value - exact) <= 0.1
    for _ in range(5):
        t = ComplexTensor(rng.uniform(0.7, 1.0, (3, 3, 3)))
        rep = approx_log_strip(t, 0.3, 0.1)
        exact = math.log(tensor_permanent_exact(t).real)
        assert abs(rep.log_value - exact) <= 0.1
    assert time.perf_counter() - t0 < 600.0


def test_derivative_route_equivalence():
    t0 = time.perf_counter()
    rng = np.random.default_rng(4001)

    def close(a, b):
        return abs(a - b) <= 1e-9 * max(abs(b), 1e-12)

    for i in range(25):
        n = 2 + i % 5  # n in 2..6
        a = ComplexMatrix(
            1.0 + 0.4 * (rng.uniform(-1, 1, (n, n)) + 1j * rng.uniform(-1, 1, (n, n)))
        )
        kmax = min(n, 4)
        g = g_derivatives_permanent(a, kmax)
        poly = g_full_expansion_permanent(a)
        for k in range(kmax + 1):
            want = (poly.coeffs[k] if k < poly.coeffs.size else 0.0) * math.factorial(k)
            assert close(g[k], want)

    for i in range(25):
        two_n = 4 + 2 * (i % 3)  # 4, 6, 8
        raw = rng.uniform(-1, 1, (two_n, two_n)) + 1j * rng.uniform(-1, 1, (two_n, two_n))
        s = SymmetricComplexMatrix(1.0 + 0.3 * (raw + raw.T))
        kmax = min(two_n // 2, 3)
        g = g_derivatives_hafnian(s, kmax)
        poly = g_full_expansion_hafnian(s)
        for k in range(kmax + 1):
            want = (poly.coeffs[k] if k < poly.coeffs.size else 0.0) * math.factorial(k)
            assert close(g[k], want)

    for i in range(25):
        n = 2 + i % 3  # 2, 3, 4
        t = ComplexTensor(
            1.0 + 0.3 * (rng.uniform(-1, 1, (n, n, n)) + 1j * rng.uniform(-1, 1, (n, n, n)))
        )
        kmax = min(n, 3)
        g = g_derivatives_tensor(t, kmax)
        poly = g_full_expansion_tensor(t)
        for k in range(kmax + 1):
            want = (poly.coeffs[k] if k < poly.coeffs.size else 0.0) * math.factorial(k)
            assert close(g[k], want)
    assert time.perf_counter() - t0 < 120.0


def test_error_bound_soundness():
    t0 = time.perf_counter()
    rng = np.random.default_rng(5001)
    betas = [1.2] * 34 + [2.0] * 33 + [5.0] * 33
    for beta in betas:
        deg = int(rng.integers(1, 9))
        moduli = rng.uniform(beta * 1.001, 4.0 * beta, deg)
        angles = rng.uniform(0.0, 2.0 * np.pi, deg)
        roots = moduli * np.exp(1j * angles)
        coeffs = _poly_from_roots(roots)
        # each factor stays in the right half-plane on [0, 1], so the
        # principal-branch sum is the analytic log along the segment
        f_at_1 = complex(np.sum(np.log(1.0 - 1.0 / roots)))
        g_derivs = np.zeros(13, dtype=complex)
        for k in range(min(deg, 12) + 1):
            g_derivs[k] = coeffs[k] * math.factorial(k)
        f_derivs = log_derivatives(g_derivs)
        taylor_at_1 = 0.0 + 0.0j
        for m in range(13):
            if m >= 1:
                taylor_at_1 += f_derivs[m - 1] / math.factorial(m)
            realized = abs(f_at_1 - taylor_at_1)
            assert realized <= taylor_error_bound(deg, beta, m)
    assert time.perf_counter() - t0 < 10.0


def test_phi_mapping_properties():
    t0 = time.perf_counter()
    for rho in (0.1, 0.25, 0.5, 1.0):
        phi = build_phi(rho)
        assert phi.N >= 14
        assert phi(0.0) == 0.0
        assert abs(phi(1.0) - 1.0) < 1e-12
        theta = np.linspace(0.0, 2.0 * np.pi, 10_000, endpoint=False)
        w = phi(phi.beta * np.exp(1j * theta))
        assert w.real.min() >= -rho - 1e-9
        assert w.real.max() <= 1.0 + 2.0 * rho + 1e-9
        assert np.abs(w.imag).max() <= 2.0 * rho + 1e-9
    assert time.perf_counter() - t0 < 10.0


def _sample_disc_matrix(rng, n, radius):
    return ComplexMatrix(1.0 + _uniform_disc(rng, n * n, radius).reshape(n, n))


def _sample_disc_symmetric(rng, two_n, radius):
    a = np.ones((two_n, two_n), dtype=complex)
    iu = np.triu_indices(two_n, k=1)
    devs = _uniform_disc(rng, iu[0].size, radius)
    a[iu] += devs
    a[(iu[1], iu[0])] += devs
    return SymmetricComplexMatrix(a)


def _sample_strip_entries(rng, count, eta, tau):
    re = rng.uniform(1.0 - eta, 1.0 + eta, count)
    im = rng.uniform(-tau, tau, count)
    return re + 1j * im


def _sample_l1_matrix(rng, n, eta):
    # entrywise |u| <= eta keeps every line sum within eta * n; rescale so
    # the worst line sum lands at a controlled fraction of the budget
    devs = _uniform_disc(rng, n * n, eta).reshape(n, n)
    worst = max(np.abs(devs).sum(axis=0).max(), np.abs(devs).sum(axis=1).max())
    if worst > 0:
        devs *= (eta * n * rng.uniform(0.5, 0.999)) / worst
    return ComplexMatrix(1.0 + devs)


def _sample_l1_tensor(rng, n, d, eta):
    devs = _uniform_disc(rng, n**d, eta).reshape((n,) * d)
    worst = 0.0
    for axis in range(d):
        other = tuple(t for t in range(d) if t != axis)
        worst = max(worst, float(np.abs(devs).sum(axis=other).max()))
    if worst > 0:
        devs *= (eta * n ** (d - 1) * rng.uniform(0.5, 0.999)) / worst
    return ComplexTensor(1.0 + devs)


def test_zero_free_sampling():
    t0 = time.perf_counter()
    rng = np.random.default_rng(6001)

    for i in range(1000):
        n = 1 + i % 4
        value = permanent_exact(_sample_disc_matrix(rng, n, 0.5))
        assert abs(value) > 1e-12 * math.factorial(n)

    for i in range(1000):
        n = 1 + i % 3
        value = hafnian_exact(_sample_disc_symmetric(rng, 2 * n, 0.5))
        base = math.factorial(2 * n) / (2**n * math.factorial(n))
        assert abs(value) > 1e-12 * base

    tau = tau_bound(0.5, 2) * 0.999
    for i in range(1000):
        n = 1 + i % 4
        entries = _sample_strip_entries(rng, n * n, 0.5, tau).reshape(n, n)
        value = permanent_exact(ComplexMatrix(entries))
        assert abs(value) > 1e-12 * math.factorial(n)

    eta_l1 = eta_d_l1(2) * 0.999
    for i in range(1000):
        n = 1 + i % 5
        value = permanent_exact(_sample_l1_matrix(rng, n, eta_l1))
        assert abs(value) > 1e-12 * math.factorial(n)

    eta3 = eta_d_disc(3)[0]
    for i in range(1000):
        n = 1 + i % 3
        devs = _uniform_disc(rng, n**3, eta3).reshape(n, n, n)
        value = tensor_permanent_exact(ComplexTensor(1.0 + devs))
        assert abs(value) > 1e-12 * math.factorial(n) ** 2

    eta_s = 0.4  # below the d=3 strip cap sqrt(2)-1
    tau_s = tau_bound(eta_s, 3) * 0.999
    for i in range(1000):
        n = 1 + i % 3
        entries = _sample_strip_entries(rng, n**3, eta_s, tau_s).reshape(n, n, n)
        value = tensor_permanent_exact(ComplexTensor(entries))
        assert abs(value) > 1e-12 * math.factorial(n) ** 2

    eta_l1_3 = eta_d_l1(3) * 0.999
    for i in range(1000):
        n = 1 + i % 3
        value = tensor_permanent_exact(_sample_l1_tensor(rng, n, 3, eta_l1_3))
        assert abs(value) > 1e-12 * math.factorial(n) ** 2

    # the (1 +/- i)/2 matrix sits outside the disc family and shows why the
    # 0.5 radius cannot be widened: its permanent is exactly zero
    w = 0.5 + 0.5j
    singular = np.array([[w, w.conjugate()], [w.conjugate(), w]])
    assert np.abs(1.0 - singular).min() > 0.5
    rep = check_region(ComplexMatrix(singular), RegionSpec(kind=RegionKind.DISC_PER, eta=0.499999999))
    assert not rep.inside
    assert abs(permanent_exact(ComplexMatrix(singular))) <= 1e-14

    # margin moves continuously and monotonically as a violation is healed
    margins = []
    for t in np.linspace(0.0, 1.0, 21):
        a = np.ones((3, 3), dtype=complex)
        a[0, 1] = 1.8 * (1 - t) + 1.0 * t
        margins.append(check_region(ComplexMatrix(a), RegionSpec(kind=RegionKind.DISC_PER, eta=0.4)).margin)
    assert all(b >= a - 1e-15 for a, b in zip(margins, margins[1:]))

    # matching-sum identity: full product value equals the weighted matching
    # aggregate of the deviation hypergraph
    for d in (2, 3):
        for n in (2, 3):
            for _ in range(5):
                shape = (n,) * d
                z = 1.0 + 0.5 * (
                    rng.uniform(-1, 1, shape) + 1j * rng.uniform(-1, 1, shape)
                )
                ten = ComplexTensor(z)
                weights = matching_polynomial(deviation_hypergraph(ten)).weights
                total = 0.0 + 0.0j
                for k in range(n + 1):
                    wk = weights[k] if k < len(weights) else 0.0
                    total += math.factorial(n - k) ** (d - 1) * wk
                want = tensor_permanent_exact(ten)
                assert abs(total - want) <= 1e-9 * max(abs(want), 1e-12)

    # truncated exponential sums keep their roots outside alpha * n
    alpha = alpha_constant()
    for n in range(1, 9):
        roots = polynomial_roots(partial_exp_poly(n))
        assert np.abs(roots).min() > alpha * n

    # binomial-normalized coefficient products multiply root-free radii
    for i in range(50):
        n = 2 + i % 7
        r1, r2 = rng.uniform(0.5, 2.0, 2)
        f_roots = rng.uniform(1.02 * r1, 3.0 * r1, n) * np.exp(1j * rng.uniform(0, 2 * np.pi, n))
        g_roots = rng.uniform(1.02 * r2, 3.0 * r2, n) * np.exp(1j * rng.uniform(0, 2 * np.pi, n))
        f = UnivariatePolynomial(_poly_from_roots(f_roots))
        g = UnivariatePolynomial(_poly_from_roots(g_roots))
        h = schur_product(f, g, n)
        assert np.abs(polynomial_roots(h)).min() > 1.02**2 * r1 * r2 * (1 - 1e-8)

    # randomly weighted hypergraphs scaled to the per-vertex budget keep the
    # matching aggregate root-free on the closed unit disc
    for d in (2, 3):
        budget = matching_weight_budget(d)
        for _ in range(50):
            v = int(rng.integers(d + 1, 11))
            pool = []
            for combo in itertools.combinations(range(v), d):
                if rng.uniform() < 0.5:
                    wgt = rng.uniform(0.2, 1.0) * np.exp(1j * rng.uniform(0, 2 * np.pi))
                    pool.append((combo, wgt))
            if not pool:
                continue
            per_vertex = np.zeros(v)
            for combo, wgt in pool:
                for vert in combo:
                    per_vertex[vert] += abs(wgt)
            scale = budget / per_vertex.max()
            edges = [(combo, wgt * scale) for combo, wgt in pool]
            graph = WeightedHypergraph(d, v, edges)
            weights = matching_polynomial(graph).weights
            if len(weights) > 1:
                roots = polynomial_roots(UnivariatePolynomial(weights))
                assert np.abs(roots).min() > 1.0 + 1e-8
    assert time.perf_counter() - t0 < 300.0


def test_benchmark_determinism():
    def run():
        buf = io.StringIO()
        with redirect_stdout(buf):
            code = cli_main(["benchmark", "--suite", "small", "--seed", "424242"])
        assert code == 0
        return re.sub(r'"elapsed_s": [-+0-9.eE]+', '"elapsed_s": 0', buf.getvalue())

    first = run()
    second = run()
    assert first.encode() == second.encode()
    rows = json.loads(first)["results"]
    assert all(r["certified"] for r in rows)
