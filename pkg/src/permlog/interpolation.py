"""Certified log-approximation pipelines.

Disc pipelines evaluate the Taylor polynomial of ln g at 1 for
g(z) = per/haf/PER(J + z(A - J)), which is root-free on |z| <= beta when the
input sits inside the matching disc or line-sum region. Strip pipelines
precompose with the disc-to-strip polynomial phi so the same certificate
reaches inputs that are only strip-bounded. Every report carries the degree
used and the certified remainder bound.
"""

import atexit
import itertools
import math
import os
import shutil
import tempfile
import time
from dataclasses import dataclass

import numpy as np

from .core import (
    ComplexMatrix,
    ComplexTensor,
    SymmetricComplexMatrix,
    UnivariatePolynomial,
    poly_compose_truncated,
)
from .errors import (
    BetaNotGreaterThanOne,
    BudgetExceeded,
    EtaTooLarge,
    InfeasibleParameters,
    RegionViolation,
    RhoOutOfRange,
    ShapeMismatch,
    SizeLimitExceeded,
    ZeroBaseValue,
)
from .oracles import KahanSum
from .regions import (
    RegionKind,
    RegionSpec,
    check_region,
    eta_d_strip,
    region_eta_max,
    tau_bound,
)
from .series import (
    compensated_total,
    series_log_coeffs_direct,
    series_log_prefix_sum,
    series_mul,
)

__all__ = [
    "ApproxReport",
    "PhiPolynomial",
    "approx_log_disc",
    "approx_log_strip",
    "build_phi",
    "choose_degree",
    "g_derivatives_permanent",
    "g_derivatives_hafnian",
    "g_derivatives_tensor",
    "g_full_expansion_permanent",
    "g_full_expansion_hafnian",
    "g_full_expansion_tensor",
    "log_derivatives",
    "taylor_error_bound",
]

DEFAULT_BUDGET = 10**8

# degrees beyond this exceed the memory envelope of the series engine
MAX_STRIP_DEGREE = 1 << 26

# largest m handled in derivative space before switching to coefficients
_DERIVATIVE_SPACE_LIMIT = 170

_SMALL_COMPOSE_LIMIT = 4096


# ---------------------------------------------------------------------------
# derivative extraction at z = 0 for g(z) = per/haf/PER(J + z(A - J))


def _ordered_tuples(n, k):
    """All ordered k-tuples of distinct indices from range(n), lex order."""
    return np.array(list(itertools.permutations(range(n), k)), dtype=np.intp).reshape(-1, k)


def g_derivatives_permanent(mat, m, budget=DEFAULT_BUDGET):
    """(g(0), g'(0), ..., g^(m)(0)) for g(z) = per(J + z(A - J)).

    g^(k)(0) = (n-k)! * sum over pairs of ordered distinct k-tuples (I, J)
    of prod_r (a[I_r, J_r] - 1). Enumeration is lexicographic; chunked
    partial sums are combined with compensation.
    """
    if not isinstance(mat, ComplexMatrix):
        raise ShapeMismatch("g_derivatives_permanent: expected ComplexMatrix")
    n = mat.n
    if m > n or m < 0:
        raise ValueError(f"g_derivatives_permanent: need 0 <= m <= n, got m={m}")
    if math.perm(n, m) ** 2 > budget:
        raise BudgetExceeded(
            f"g_derivatives_permanent: (n!/(n-m)!)^2 = {math.perm(n, m) ** 2} over budget {budget}"
        )
    b = mat.array - 1.0
    out = np.zeros(m + 1, dtype=np.complex128)
    out[0] = float(math.factorial(n))
    for k in range(1, m + 1):
        tuples = _ordered_tuples(n, k)
        t_count = tuples.shape[0]
        acc = KahanSum()
        chunk = max(1, (1 << 21) // t_count)
        for lo in range(0, t_count, chunk):
            rows = tuples[lo : lo + chunk]
            prod = np.ones((rows.shape[0], t_count), dtype=np.complex128)
            for r in range(k):
                prod *= b[rows[:, r][:, None], tuples[:, r][None, :]]
            acc.add(prod.sum())
        out[k] = float(math.factorial(n - k)) * acc.value
    return out


def _disjoint_pair_collections(two_n, max_k):
    """Weights W_k of k disjoint unordered index pairs, as a generator of
    (k, pair_list) in lexicographic order of the sorted pair lists."""
    pairs = [(i, j) for i in range(two_n) for j in range(i + 1, two_n)]
    masks = [(1 << i) | (1 << j) for i, j in pairs]

    def rec(start, used, chosen):
        for e in range(start, len(pairs)):
            if masks[e] & used:
                continue
            chosen.append(pairs[e])
            yield chosen
            if len(chosen) < max_k:
                yield from rec(e + 1, used | masks[e], chosen)
            chosen.pop()

    yield from rec(0, 0, [])


def g_derivatives_hafnian(mat, m, budget=DEFAULT_BUDGET):
    """(g(0), ..., g^(m)(0)) for g(z) = haf(J + z(A - J)), 2n x 2n input.

    g^(k)(0) = k! (2n-2k)! / (2^(n-k) (n-k)!) * sum over collections of k
    disjoint unordered pairs of prod (a_pair - 1). The diagonal never enters.
    """
    if not isinstance(mat, SymmetricComplexMatrix):
        raise ShapeMismatch("g_derivatives_hafnian: expected SymmetricComplexMatrix")
    two_n = mat.two_n
    n = two_n // 2
    if m > n or m < 0:
        raise ValueError(f"g_derivatives_hafnian: need 0 <= m <= n, got m={m}")
    total_collections = sum(
        math.comb(two_n, 2 * k) * _double_factorial(2 * k - 1) for k in range(1, m + 1)
    )
    if total_collections > budget:
        raise BudgetExceeded(
            f"g_derivatives_hafnian: {total_collections} pair collections over budget {budget}"
        )
    b = (mat.array - 1.0).tolist()
    sums = [KahanSum() for _ in range(m + 1)]
    for chosen in _disjoint_pair_collections(two_n, m):
        w = 1 + 0j
        for i, j in chosen:
            w *= b[i][j]
        sums[len(chosen)].add(w)
    out = np.zeros(m + 1, dtype=np.complex128)
    out[0] = float(math.factorial(two_n) // (2**n * math.factorial(n)))
    for k in range(1, m + 1):
        pref = math.factorial(k) * math.factorial(two_n - 2 * k)
        pref //= 2 ** (n - k) * math.factorial(n - k)
        out[k] = float(pref) * sums[k].value
    return out


def _double_factorial(k):
    if k <= 0:
        return 1
    out = 1
    while k > 1:
        out *= k
        k -= 2
    return out


def g_derivatives_tensor(ten, m, budget=DEFAULT_BUDGET):
    """(g(0), ..., g^(m)(0)) for g(z) = PER(J + z(A - J)), d-dimensional input.

    g^(k)(0) = ((n-k)!)^(d-1) * sum over d positionally-coupled ordered
    k-tuples of distinct indices of prod_r (a[t_1[r], ..., t_d[r]] - 1).
    """
    if not isinstance(ten, ComplexTensor):
        raise ShapeMismatch("g_derivatives_tensor: expected ComplexTensor")
    d, n = ten.d, ten.n
    if m > n or m < 0:
        raise ValueError(f"g_derivatives_tensor: need 0 <= m <= n, got m={m}")
    if math.perm(n, m) ** d > budget:
        raise BudgetExceeded(
            f"g_derivatives_tensor: (n!/(n-m)!)^d = {math.perm(n, m) ** d} over budget {budget}"
        )
    b = ten.array - 1.0
    out = np.zeros(m + 1, dtype=np.complex128)
    out[0] = float(math.factorial(n)) ** (d - 1)
    rng_k = None
    for k in range(1, m + 1):
        tuples = _ordered_tuples(n, k)
        rng_k = np.arange(k)
        acc = KahanSum()
        for mids in itertools.product(range(tuples.shape[0]), repeat=d - 1):
            sel = tuple(tuples[i] for i in mids) + (slice(None),)
            sliced = b[sel]
            acc.add(np.prod(sliced[rng_k[None, :], tuples], axis=1).sum())
        out[k] = float(math.factorial(n - k)) ** (d - 1) * acc.value
    return out


def _elementary_symmetric_rows(bvals):
    """Row-wise elementary symmetric sums: for each row b of shape (c, n),
    coefficients of prod_i (1 + z b_i), shape (c, n + 1)."""
    c, n = bvals.shape
    e = np.zeros((c, n + 1), dtype=np.complex128)
    e[:, 0] = 1.0
    for i in range(n):
        e[:, 1 : i + 2] = e[:, 1 : i + 2] + bvals[:, i : i + 1] * e[:, 0 : i + 1]
    return e


def g_full_expansion_permanent(mat, limit=10):
    """All n+1 coefficients of g(z) = per(J + z(A - J)) by enumerating the n!
    permutations and expanding the linear factors. n <= 10."""
    if not isinstance(mat, ComplexMatrix):
        raise ShapeMismatch("g_full_expansion_permanent: expected ComplexMatrix")
    n = mat.n
    if n > limit:
        raise SizeLimitExceeded(f"g_full_expansion_permanent: n={n} exceeds limit {limit}")
    b = mat.array - 1.0
    idx = np.arange(n)
    coeff_sums = [KahanSum() for _ in range(n + 1)]
    chunk = 1 << 14
    perm_iter = itertools.permutations(range(n))
    while True:
        block = list(itertools.islice(perm_iter, chunk))
        if not block:
            break
        perms = np.array(block, dtype=np.intp)
        e = _elementary_symmetric_rows(b[idx[None, :], perms])
        totals = e.sum(axis=0)
        for k in range(n + 1):
            coeff_sums[k].add(totals[k])
    return UnivariatePolynomial([s.value for s in coeff_sums])


def _perfect_matchings(two_n):
    """All perfect matchings of indices 0..two_n-1 as pair lists, first-vertex
    pairing order."""
    out = []

    def rec(mask, chosen):
        if mask == 0:
            out.append(list(chosen))
            return
        i = (mask & -mask).bit_length() - 1
        rest = mask & ~(1 << i)
        sub = rest
        while sub:
            j = (sub & -sub).bit_length() - 1
            sub &= sub - 1
            chosen.append((i, j))
            rec(rest & ~(1 << j), chosen)
            chosen.pop()

    rec((1 << two_n) - 1, [])
    return out


def g_full_expansion_hafnian(mat, limit=12):
    """All n+1 coefficients of g(z) = haf(J + z(A - J)) over the (2n-1)!!
    perfect matchings. 2n <= 12."""
    if not isinstance(mat, SymmetricComplexMatrix):
        raise ShapeMismatch("g_full_expansion_hafnian: expected SymmetricComplexMatrix")
    two_n = mat.two_n
    if two_n > limit:
        raise SizeLimitExceeded(f"g_full_expansion_hafnian: 2n={two_n} exceeds limit {limit}")
    b = mat.array - 1.0
    rows = np.array(
        [[b[i, j] for i, j in matching] for matching in _perfect_matchings(two_n)],
        dtype=np.complex128,
    )
    e = _elementary_symmetric_rows(rows)
    totals = e.sum(axis=0)
    return UnivariatePolynomial(totals)


def g_full_expansion_tensor(ten, limit=10**5):
    """All n+1 coefficients of g(z) = PER(J + z(A - J)) over the (n!)^(d-1)
    permutation tuples."""
    if not isinstance(ten, ComplexTensor):
        raise ShapeMismatch("g_full_expansion_tensor: expected ComplexTensor")
    d, n = ten.d, ten.n
    count = math.factorial(n) ** (d - 1)
    if count > limit:
        raise SizeLimitExceeded(
            f"g_full_expansion_tensor: (n!)^(d-1) = {count} exceeds limit {limit}"
        )
    b = ten.array - 1.0
    idx = np.arange(n)
    perms = [np.array(p, dtype=np.intp) for p in itertools.permutations(range(n))]
    coeff_sums = [KahanSum() for _ in range(n + 1)]
    buf = []
    for combo in itertools.product(perms, repeat=d - 1):
        sel = (idx,) + tuple(p for p in combo)
        buf.append(b[sel])
        if len(buf) == 4096:
            totals = _elementary_symmetric_rows(np.array(buf)).sum(axis=0)
            for k in range(n + 1):
                coeff_sums[k].add(totals[k])
            buf = []
    if buf:
        totals = _elementary_symmetric_rows(np.array(buf)).sum(axis=0)
        for k in range(n + 1):
            coeff_sums[k].add(totals[k])
    return UnivariatePolynomial([s.value for s in coeff_sums])


# ---------------------------------------------------------------------------
# log conversion and the truncation certificate


def log_derivatives(g_derivs):
    """(f^(1)(0), ..., f^(m)(0)) for f = ln g, from (g(0), ..., g^(m)(0)).

    Forward triangular solve of
    g^(k)(0) = sum_{j=0}^{k-1} C(k-1, j) g^(j)(0) f^(k-j)(0).
    f(0) = ln g(0) is not included; the caller owns the branch choice.
    """
    g = np.asarray(g_derivs, dtype=np.complex128)
    if g.ndim != 1 or g.size == 0:
        raise ShapeMismatch("log_derivatives: need a nonempty 1-d sequence")
    if g[0] == 0:
        raise ZeroBaseValue("log_derivatives: g(0) = 0")
    m = g.size - 1
    ghat = g / g[0]
    f = np.zeros(m + 1, dtype=np.complex128)
    for k in range(1, m + 1):
        s = ghat[k]
        for j in range(1, k):
            s -= math.comb(k - 1, j) * ghat[j] * f[k - j]
        f[k] = s
    return f[1:]


def taylor_error_bound(deg_g, beta, m):
    """deg_g / ((m+1) beta^m (beta-1)): remainder bound at 1 for the degree-m
    Taylor polynomial of ln g when g is root-free on |z| <= beta."""
    if m < 0:
        raise ValueError(f"taylor_error_bound: m must be >= 0, got {m}")
    if not beta > 1.0:
        raise BetaNotGreaterThanOne(f"taylor_error_bound: beta={beta} must exceed 1")
    if deg_g < 0:
        raise ValueError(f"taylor_error_bound: deg_g must be >= 0, got {deg_g}")
    if deg_g == 0:
        return 0.0
    log_bound = (
        math.log(deg_g) - math.log(m + 1.0) - m * math.log(beta) - math.log(beta - 1.0)
    )
    if log_bound > 700.0:
        return math.inf
    return math.exp(log_bound)


def choose_degree(deg_g, beta, epsilon, limit=10**9):
    """Smallest m with taylor_error_bound(deg_g, beta, m) <= epsilon.

    The bound is monotone decreasing in m, so this is a linear scan; it runs
    in numpy chunks of doubling size so degrees ~1e8 still cost well under a
    second.
    """
    if not epsilon > 0:
        raise ValueError(f"choose_degree: epsilon must be > 0, got {epsilon}")
    if not beta > 1.0:
        raise BetaNotGreaterThanOne(f"choose_degree: beta={beta} must exceed 1")
    if deg_g == 0:
        return 0
    target = math.log(epsilon)
    const = math.log(deg_g) - math.log(beta - 1.0)
    log_beta = math.log(beta)
    lo = 0
    chunk = 4096
    while lo <= limit:
        ms = np.arange(lo, min(lo + chunk, limit + 1), dtype=np.float64)
        ok = const - np.log(ms + 1.0) - ms * log_beta <= target
        hit = int(np.argmax(ok))
        if ok[hit]:
            return lo + hit
        lo += ms.size
        chunk *= 2
    raise BudgetExceeded(f"choose_degree: certified degree exceeds {limit}")


# ---------------------------------------------------------------------------
# the disc-to-strip polynomial


_PHI_PANEL_EDGES = (0.0, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 60.0)
_PHI_NODES_PER_PANEL = 32
_PHI_DIRECT_EVAL_LIMIT = 4000
_PHI_MATERIALIZE_LIMIT = 10**7


def _phi_quadrature():
    x, w = np.polynomial.legendre.leggauss(_PHI_NODES_PER_PANEL)
    nodes = []
    weights = []
    for a, b in zip(_PHI_PANEL_EDGES[:-1], _PHI_PANEL_EDGES[1:]):
        half = 0.5 * (b - a)
        nodes.append(half * (x + 1.0) + a)
        weights.append(half * w)
    return np.concatenate(nodes), np.concatenate(weights)


class PhiPolynomial:
    """phi(z) = (1/sigma) sum_{j=1}^N (alpha z)^j / j with the constants
    derived from rho:

        alpha = 1 - e^(-1/rho)
        beta  = (1 - e^(-1-1/rho)) / alpha
        N     = floor((1 + 1/rho) e^(1 + 1/rho))
        sigma = sum_{j=1}^N alpha^j / j

    phi(0) = 0, phi(1) = 1, and the disc |z| <= beta maps into the strip
    -rho <= Re <= 1 + 2 rho, |Im| <= 2 rho. For very large N, sigma equals
    1/rho up to a relative tail below 1e-20 and coefficient prefixes are
    generated on demand instead of materializing the full polynomial.
    """

    __slots__ = ("rho", "alpha", "beta", "N", "sigma", "_poly")

    def __init__(self, rho):
        if not (isinstance(rho, (int, float)) and 0.0 < rho <= 1.0):
            raise RhoOutOfRange(f"PhiPolynomial: rho={rho} must lie in (0, 1]")
        rho = float(rho)
        exponent = 1.0 + 1.0 / rho
        if exponent > 700.0:
            raise BudgetExceeded(
                f"PhiPolynomial: N(rho) = exp({exponent:.1f})-scale is not materializable"
            )
        alpha = -math.expm1(-1.0 / rho)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", -math.expm1(-exponent) / alpha)
        big_n = int(math.floor(exponent * math.exp(exponent)))
        object.__setattr__(self, "N", big_n)
        if big_n <= 10**6:
            j = np.arange(1, big_n + 1, dtype=np.float64)
            terms = np.exp(j * math.log(alpha)) / j
            sigma = float(np.sum(terms[::-1]))
        else:
            # tail beyond N is < alpha^(N+1)/((N+1)(1-alpha)), relatively ~1e-21
            sigma = 1.0 / rho
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "_poly", None)

    def __setattr__(self, name, value):
        raise AttributeError("PhiPolynomial is immutable")

    def coeff_prefix(self, count):
        """First `count` coefficients (index j = coefficient of z^j) as
        float64; zero-padded past degree N."""
        count = int(count)
        out = np.zeros(count, dtype=np.float64)
        top = min(count - 1, self.N)
        if top >= 1:
            j = np.arange(1, top + 1, dtype=np.float64)
            out[1 : top + 1] = np.exp(j * math.log(self.alpha) - np.log(j)) / self.sigma
        return out

    @property
    def poly(self):
        if self.N > _PHI_MATERIALIZE_LIMIT:
            raise SizeLimitExceeded(
                f"PhiPolynomial: degree N={self.N} too large to materialize"
            )
        if self._poly is None:
            object.__setattr__(
                self, "_poly", UnivariatePolynomial(self.coeff_prefix(self.N + 1))
            )
        return self._poly

    def __call__(self, z):
        """Evaluate phi at complex points, vectorized.

        Valid wherever |alpha z| < 1, which covers the whole disc |z| <= beta.
        Direct Horner for moderate N; otherwise the analytic form
        phi = (-Ln(1 - y) - T_N(y))/sigma with the tail integral
        T_N(y) = y^(N+1)/(N+1) * int_0^inf e^(-t) / (1 - y e^(-t/(N+1))) dt.
        """
        scalar = np.isscalar(z) or getattr(z, "ndim", 0) == 0
        zz = np.atleast_1d(np.asarray(z, dtype=np.complex128))
        y = self.alpha * zz
        if np.max(np.abs(y)) >= 1.0:
            raise ValueError("PhiPolynomial: evaluation needs |alpha z| < 1")
        if self.N <= _PHI_DIRECT_EVAL_LIMIT:
            coeffs = self.coeff_prefix(self.N + 1)
            acc = np.zeros_like(zz)
            for c in coeffs[::-1]:
                acc = acc * zz + c
            out = acc
        else:
            nodes, weights = _phi_quadrature()
            np1 = self.N + 1.0
            decay = np.exp(-nodes / np1)
            denom = 1.0 - y[:, None] * decay[None, :]
            integral = (np.exp(-nodes)[None, :] * weights[None, :] / denom).sum(axis=1)
            nonzero = y != 0
            ypow = np.zeros_like(y)
            ypow[nonzero] = np.exp(np1 * np.log(y[nonzero]))
            tail = ypow * integral / np1
            out = (-np.log1p(-y) - tail) / self.sigma
        return complex(out[0]) if scalar else out

    def __repr__(self):
        return f"PhiPolynomial(rho={self.rho}, N={self.N})"


def build_phi(rho):
    """PhiPolynomial for the given rho in (0, 1]."""
    return PhiPolynomial(rho)


# ---------------------------------------------------------------------------
# pipelines


@dataclass(frozen=True)
class ApproxReport:
    """Certified approximation of ln per/haf/PER.

    error_bound is deg_g / ((m+1) beta^m (beta-1)) at the recorded deg_g and
    beta_used, and never exceeds the requested epsilon; it is None only when
    the region check was forcibly skipped. rho and phi_degree are None for
    disc pipelines.
    """

    log_value: complex
    degree_used: int
    error_bound: float
    pipeline: str
    beta_used: float
    deg_g: int
    g0: complex
    elapsed_s: float
    rho: float = None
    phi_degree: int = None

    def to_dict(self):
        out = {
            "log_value": [self.log_value.real, self.log_value.imag],
            "degree_used": int(self.degree_used),
            "error_bound": None if self.error_bound is None else float(self.error_bound),
            "pipeline": self.pipeline,
            "beta_used": float(self.beta_used),
            "deg_g": int(self.deg_g),
            "g0": [self.g0.real, self.g0.imag],
            "elapsed_s": float(self.elapsed_s),
        }
        if self.rho is not None:
            out["rho"] = float(self.rho)
        if self.phi_degree is not None:
            out["phi_degree"] = int(self.phi_degree)
        return out


@dataclass(frozen=True)
class _KindInfo:
    shape: str
    d: int
    n: int
    log_g0: float
    g0: complex
    tuple_fn: object
    full_fn: object


def _classify(value):
    if isinstance(value, ComplexMatrix):
        n = value.n
        return _KindInfo(
            shape="per",
            d=2,
            n=n,
            log_g0=sum(math.log(k) for k in range(2, n + 1)),
            g0=complex(math.factorial(n)) if n <= 170 else complex(math.inf),
            tuple_fn=g_derivatives_permanent,
            full_fn=g_full_expansion_permanent,
        )
    if isinstance(value, SymmetricComplexMatrix):
        two_n = value.two_n
        n = two_n // 2
        log_g0 = (
            sum(math.log(k) for k in range(2, two_n + 1))
            - n * math.log(2.0)
            - sum(math.log(k) for k in range(2, n + 1))
        )
        g0 = math.factorial(two_n) // (2**n * math.factorial(n))
        return _KindInfo(
            shape="haf",
            d=2,
            n=n,
            log_g0=log_g0,
            g0=complex(g0) if two_n <= 170 else complex(math.inf),
            tuple_fn=g_derivatives_hafnian,
            full_fn=g_full_expansion_hafnian,
        )
    if isinstance(value, ComplexTensor):
        d, n = value.d, value.n
        return _KindInfo(
            shape="tensor",
            d=d,
            n=n,
            log_g0=(d - 1) * sum(math.log(k) for k in range(2, n + 1)),
            g0=complex(float(math.factorial(n)) ** (d - 1)),
            tuple_fn=g_derivatives_tensor,
            full_fn=g_full_expansion_tensor,
        )
    raise ShapeMismatch("expected ComplexMatrix, SymmetricComplexMatrix, or ComplexTensor")


def _taylor_prefix_coeffs(value, info, mm, budget):
    """Normalized Taylor coefficients c_k = g^(k)(0)/(k! g(0)) for k <= mm,
    via the tuple-sum path with automatic full-expansion fallback."""
    try:
        derivs = info.tuple_fn(value, mm, budget)
    except BudgetExceeded:
        try:
            poly = info.full_fn(value)
        except SizeLimitExceeded as exc:
            raise BudgetExceeded(
                f"tuple-sum budget exceeded and full expansion unavailable: {exc}"
            ) from exc
        coeffs = np.zeros(mm + 1, dtype=np.complex128)
        take = min(mm + 1, poly.coeffs.size)
        coeffs[:take] = poly.coeffs[:take]
        return coeffs / coeffs[0]
    out = np.empty(mm + 1, dtype=np.complex128)
    inv_fact = 1.0
    for k in range(mm + 1):
        if k > 0:
            inv_fact /= k
        out[k] = derivs[k] * inv_fact
    return out / out[0]


def _log_coeff_prefix_windowed(chat, m):
    """psi_1..psi_m of log of the polynomial with normalized coefficients
    chat (chat[0] = 1, short array). O(m * deg) via the window recurrence
    k psi_k = k chat_k - sum_{j=k-deg}^{k-1} j psi_j chat_{k-j}."""
    deg = chat.size - 1
    psi = np.zeros(m + 1, dtype=np.complex128)
    jidx = np.arange(m + 1, dtype=np.float64)
    for k in range(1, m + 1):
        s = k * chat[k] if k <= deg else 0.0
        j0 = max(1, k - deg)
        if j0 <= k - 1:
            s = s - np.dot(jidx[j0:k] * psi[j0:k], chat[k - j0 : 0 : -1][: k - j0])
        psi[k] = s / k
    return psi[1:]


def _sum_log_terms_derivative_space(g_derivs_padded, log_g0):
    """T_m(1) from derivative lists: ln g(0) + sum f^(k)(0)/k!."""
    f_derivs = log_derivatives(g_derivs_padded)
    acc = KahanSum()
    inv_fact = 1.0
    for k in range(1, g_derivs_padded.size):
        inv_fact /= k
        acc.add(f_derivs[k - 1] * inv_fact)
    return log_g0 + acc.value


def _sum_log_terms_coefficient_space(chat, m, log_g0):
    """T_m(1) from normalized short coefficients, windowed recurrence."""
    psi = _log_coeff_prefix_windowed(chat, m)
    acc = KahanSum()
    for k in range(psi.size):
        acc.add(psi[k])
    return log_g0 + acc.value


def approx_log_disc(value, eta, epsilon, l1=False, budget=DEFAULT_BUDGET, degree=None, force=False):
    """Certified approximation of ln per/haf/PER for inputs inside a disc
    (entrywise |1-a| <= eta) or line-sum (l1=True) region.

    beta = (region maximum)/eta; m = choose_degree(n, beta, epsilon) unless
    `degree` overrides it. Raises RegionViolation when the input is outside
    (unless force=True, which blanks the certificate).
    """
    t0 = time.perf_counter()
    info = _classify(value)
    if not (0.0 < epsilon < 1.0):
        raise InfeasibleParameters(f"approx_log_disc: need 0 < epsilon < 1, got {epsilon}")
    if l1:
        if info.shape == "per":
            kind = RegionKind.L1_PER
        elif info.shape == "tensor":
            kind = RegionKind.L1_TENSOR
        else:
            raise ShapeMismatch("approx_log_disc: no line-sum region for hafnian inputs")
    else:
        kind = {
            "per": RegionKind.DISC_PER,
            "haf": RegionKind.DISC_HAF,
            "tensor": RegionKind.DISC_TENSOR,
        }[info.shape]
    spec = RegionSpec(kind=kind, eta=eta, d=info.d if info.shape == "tensor" else 2)
    membership = check_region(value, spec)
    if not membership.inside and not force:
        raise RegionViolation(
            f"approx_log_disc: input outside {kind.value} at index "
            f"{membership.worst_index} (margin {membership.margin:.6g})",
            report=membership,
        )
    beta = region_eta_max(kind, info.d) / eta
    m = int(degree) if degree is not None else choose_degree(info.n, beta, epsilon)
    bound = taylor_error_bound(info.n, beta, m)
    if bound > epsilon and not force:
        raise BudgetExceeded(
            f"approx_log_disc: degree {m} certifies only {bound:.3g} > epsilon {epsilon}"
        )
    mm = min(m, info.n)
    chat = _taylor_prefix_coeffs(value, info, mm, budget)
    if m <= _DERIVATIVE_SPACE_LIMIT:
        g_derivs = np.zeros(m + 1, dtype=np.complex128)
        fact = 1.0
        for k in range(mm + 1):
            if k > 0:
                fact *= k
            g_derivs[k] = chat[k] * fact
        total = _sum_log_terms_derivative_space(g_derivs, info.log_g0)
    else:
        total = _sum_log_terms_coefficient_space(chat, m, info.log_g0)
    return ApproxReport(
        log_value=complex(total),
        degree_used=m,
        error_bound=None if force else bound,
        pipeline="l1" if l1 else "disc",
        beta_used=beta,
        deg_g=info.n,
        g0=info.g0,
        elapsed_s=time.perf_counter() - t0,
    )


def _strip_parameters(s, d):
    """Balance the strip widening xi against the imaginary half-width zeta.

    xi(e) = e/s - 1 grows and zeta(e) = tau_bound(e, d)/s shrinks on
    s < e < eta_max, so their crossing maximizes rho = min(xi, zeta)/2,
    the widest usable parameter for the disc-to-strip map.
    """
    cap = eta_d_strip(d)
    lo = s * (1.0 + 1e-14)
    hi = cap * (1.0 - 1e-14)
    if not lo < hi:
        raise InfeasibleParameters(f"_strip_parameters: no room between s={s} and cap={cap}")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if (mid / s - 1.0) < tau_bound(mid, d) / s:
            lo = mid
        else:
            hi = mid
    e = 0.5 * (lo + hi)
    xi = e / s - 1.0
    zeta = tau_bound(e, d) / s
    rho = min(xi, zeta) / 2.0
    return e, xi, zeta, min(rho, 1.0)


class _PowerPrefixStore:
    """Shared phi-power prefixes phi^1..phi^kmax truncated to m+1 terms.

    Rebuilt when rho, the degree, or the power count grows. Large prefixes
    (over ~64 MB each) are staged to disk and memory-mapped so five instances
    in a row do not each pay the build cost or the residency.
    """

    _DISK_THRESHOLD = 1 << 23

    def __init__(self):
        self.key = None
        self.arrays = None
        self.tempdir = None

    def _clear(self):
        self.key = None
        self.arrays = None
        if self.tempdir is not None:
            shutil.rmtree(self.tempdir, ignore_errors=True)
            self.tempdir = None

    def get(self, phi, m, kmax):
        key = (phi.rho, m, kmax)
        if self.key is not None and self.key[0] == phi.rho:
            have_m, have_k = self.key[1], self.key[2]
            if have_m >= m and have_k >= kmax:
                return [arr[: m + 1] for arr in self._load()[:kmax]]
        self._clear()
        first = phi.coeff_prefix(m + 1)
        arrays = [first]
        for _ in range(kmax - 1):
            arrays.append(series_mul(arrays[-1], first, m + 1))
        if m + 1 > self._DISK_THRESHOLD:
            self.tempdir = tempfile.mkdtemp(prefix="permlog-phi-")
            paths = []
            for i, arr in enumerate(arrays):
                path = os.path.join(self.tempdir, f"pow{i + 1}.npy")
                np.save(path, arr)
                paths.append(path)
            del arrays
            self.arrays = paths
        else:
            self.arrays = arrays
        self.key = key
        return [arr[: m + 1] for arr in self._load()[:kmax]]

    def _load(self):
        if self.tempdir is not None:
            return [np.load(p, mmap_mode="r") for p in self.arrays]
        return self.arrays


_POWER_STORE = _PowerPrefixStore()
atexit.register(_POWER_STORE._clear)


def _require_real(arr, where):
    if np.any(arr.imag != 0):
        idx = np.unravel_index(int(np.argmax(arr.imag != 0)), arr.shape)
        raise RegionViolation(
            f"{where}: entries must be real; index {tuple(int(i) + 1 for i in idx)} is not"
        )


def approx_log_strip(value, delta_or_eta, epsilon, budget=DEFAULT_BUDGET, degree=None, force=False):
    """Certified approximation of ln per/haf/PER for real inputs bounded only
    in a strip sense: matrix kinds with entries in [delta, 1] (delta_or_eta =
    delta), tensors with |1 - a| <= eta (delta_or_eta = eta).

    Builds phi for the balanced rho, composes g = r(phi(z)) truncated to the
    certified degree m, and sums the log-series prefix. Small m runs the
    exact polynomial path; large m runs the FFT series engine.
    """
    t0 = time.perf_counter()
    info = _classify(value)
    if not (0.0 < epsilon < 1.0):
        raise InfeasibleParameters(f"approx_log_strip: need 0 < epsilon < 1, got {epsilon}")
    arr = value.array
    _require_real(arr, "approx_log_strip")
    re = arr.real
    if info.shape == "tensor":
        eta = float(delta_or_eta)
        cap = eta_d_strip(info.d)
        if not (0.0 <= eta):
            raise InfeasibleParameters(f"approx_log_strip: eta must be >= 0, got {eta}")
        if not eta < cap:
            raise EtaTooLarge(f"approx_log_strip: eta={eta} must be below {cap} for d={info.d}")
        dev = np.abs(1.0 - re)
        if float(dev.max()) > eta and not force:
            idx = np.unravel_index(int(np.argmax(dev)), re.shape)
            raise RegionViolation(
                f"approx_log_strip: |1 - a| = {float(dev[idx]):.6g} > eta at index "
                f"{tuple(int(i) + 1 for i in idx)}"
            )
        s = eta
    else:
        delta = float(delta_or_eta)
        if not (0.0 < delta <= 1.0):
            raise InfeasibleParameters(
                f"approx_log_strip: delta must lie in (0, 1], got {delta}"
            )
        low, high = float(re.min()), float(re.max())
        if (low < delta or high > 1.0) and not force:
            bad = re < delta if low < delta else re > 1.0
            idx = np.unravel_index(int(np.argmax(bad)), re.shape)
            raise RegionViolation(
                f"approx_log_strip: entry {float(re[idx]):.6g} at index "
                f"{tuple(int(i) + 1 for i in idx)} outside [{delta}, 1]"
            )
        s = 1.0 - delta
    if s == 0.0:
        rho = 1.0
    else:
        _, _, _, rho = _strip_parameters(s, info.d)
    phi = build_phi(rho)
    deg_g = phi.N * info.n
    m = int(degree) if degree is not None else choose_degree(deg_g, phi.beta, epsilon)
    bound = taylor_error_bound(deg_g, phi.beta, m)
    if bound > epsilon and not force:
        raise BudgetExceeded(
            f"approx_log_strip: degree {m} certifies only {bound:.3g} > epsilon {epsilon}"
        )
    if m > MAX_STRIP_DEGREE:
        raise BudgetExceeded(
            f"approx_log_strip: certified degree {m} exceeds the supported {MAX_STRIP_DEGREE}"
        )
    mm = min(m, info.n)
    chat = _taylor_prefix_coeffs(value, info, mm, budget)
    rhat = np.ascontiguousarray(chat.real)
    if m <= _SMALL_COMPOSE_LIMIT:
        phi_pref = UnivariatePolynomial(phi.coeff_prefix(min(m, phi.N) + 1))
        comp = poly_compose_truncated(UnivariatePolynomial(rhat), phi_pref, m)
        c = np.ascontiguousarray(comp.coeffs.real)
        psi = series_log_coeffs_direct(c, m)
        total = info.log_g0 + compensated_total(psi)
    else:
        powers = _POWER_STORE.get(phi, m, mm) if mm >= 1 else []
        g_c = np.zeros(m + 1, dtype=np.float64)
        g_c[0] = rhat[0]
        for k in range(1, mm + 1):
            g_c += rhat[k] * powers[k - 1]
        del powers
        total = info.log_g0 + series_log_prefix_sum(g_c, m)
        del g_c
    return ApproxReport(
        log_value=complex(total),
        degree_used=m,
        error_bound=None if force else bound,
        pipeline="strip",
        beta_used=phi.beta,
        deg_g=deg_g,
        g0=info.g0,
        elapsed_s=time.perf_counter() - t0,
        rho=rho,
        phi_degree=phi.N,
    )
