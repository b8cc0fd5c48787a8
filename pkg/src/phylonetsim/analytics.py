"""Certified evaluation of the model's closed-form quantities.

The offspring count M of a color (its number of mutations) has

    E[M] = mu * sum_{j>=1} prod_{k=1..j} 1/rho_k,

and its probability generating function is the continued fraction

    g(z) = (alpha + mu z) / (1 + rho_1 - (alpha + beta + mu z) / (1 + rho_2 - ...)),

evaluated here by backward recursion.  Truncating the recursion at depth n
with terminal value 1 gives an upper bound on [0, 1]; the terminal value

    gbar_n(z) = (1 + rho_n - sqrt((1 - rho_n)^2 - 4 mu (z - 1))) / 2

gives a lower bound, and the gap is at most prod_{k<=n} 1/rho_k.  All
"certified" results return (lower, upper) enclosures from these pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq

from .errors import DivergentTailError, NumericalFailure, PoleError
from .params import ModelParams

DEPTH_START = 16
DEPTH_CAP = 1 << 16


@dataclass(frozen=True)
class CertifiedValue:
    lower: float
    upper: float
    depth: int
    certified: bool = True

    def __post_init__(self):
        if self.lower > self.upper:
            raise ValueError(f"empty enclosure [{self.lower}, {self.upper}]")

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lower + self.upper)

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def clip01(self) -> "CertifiedValue":
        return replace(self, lower=min(max(self.lower, 0.0), 1.0), upper=min(max(self.upper, 0.0), 1.0))

    def to_json_dict(self) -> dict:
        return {"lower": self.lower, "upper": self.upper, "depth": self.depth}


@dataclass(frozen=True)
class OffspringPmf:
    probs: np.ndarray
    tail_bound: float
    m_max: int
    state_trunc: int

    def mean(self) -> float:
        return float(np.arange(self.probs.size) @ self.probs)


@dataclass(frozen=True)
class TiltSolution:
    zeta: float
    E_zetaM: float
    sigma_hat_sq: float
    radius_hint: float


@dataclass(frozen=True)
class NuCircPmf:
    probs: np.ndarray  # probs[i] = nu_circ(i + 1)
    tail_bound: float

    def mean(self) -> float:
        return float((1.0 + np.arange(self.probs.size)) @ self.probs)


def expected_M(params: ModelParams, tol: float = 1e-12) -> CertifiedValue:
    """Series evaluation of E[M] with a geometric tail majorant."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    s = 0.0
    w = 1.0
    j = 0
    while True:
        j += 1
        w /= params.rho(j)
        s += params.mu * w
        r = 1.0 / params.rho(j + 1)
        if r < 1.0:
            tail = params.mu * w * r / (1.0 - r)
            if tail <= tol:
                return CertifiedValue(s, s + tail, j)
        if j > 10_000_000:
            raise NumericalFailure("expected_M series failed to converge")


def _gbar(params: ModelParams, z: float, n: int) -> float | None:
    """Self-consistent terminal value for the lower convergent; None if undefined."""
    rho_n = params.rho(n)
    disc = (1.0 - rho_n) ** 2 - 4.0 * params.mu * (z - 1.0)
    if disc < 0.0:
        return None
    return 0.5 * (1.0 + rho_n - math.sqrt(disc))


def _g_backward(params: ModelParams, z: float, n: int, start_level: int, terminal: float) -> float:
    val = terminal
    a0 = params.alpha + params.mu * z
    for k in range(n, start_level - 1, -1):
        den = 1.0 + params.rho(k) - val
        if den <= 0.0:
            raise PoleError(z, n)
        val = (a0 + (k - 1) * params.beta) / den
    return val


def gap_majorant(params: ModelParams, n: int, start_level: int = 1) -> float:
    """Upper bound prod_{k=start..n} 1/rho_k on the convergent gap over [0, 1]."""
    w = 1.0
    for k in range(start_level, n + 1):
        w /= params.rho(k)
    return w


def g_eval(params: ModelParams, z: float, start_level: int = 1, tol: float = 1e-12) -> CertifiedValue:
    """Enclosure of the pgf of M_k (mutations on a k-excursion), k = start_level.

    Certified on z in [0, 1]; for z > 1 the two-depth agreement is reported
    as a non-certified enclosure (the reversed convergent inequalities only
    hold there for n large enough, with no explicit threshold).
    """
    if z < 0.0:
        raise ValueError("g_eval requires z >= 0")
    if start_level < 1:
        raise ValueError("start_level must be >= 1")
    if z <= 1.0:
        n = DEPTH_START
        while n <= DEPTH_CAP:
            gb = _gbar(params, z, n)
            lo = _g_backward(params, z, n, start_level, gb)
            hi = _g_backward(params, z, n, start_level, 1.0)
            lo, hi = min(lo, hi), max(lo, hi)
            if hi - lo <= tol:
                return CertifiedValue(lo, hi, n).clip01()
            n *= 2
        raise NumericalFailure(f"convergent gap above {tol} at depth cap {DEPTH_CAP}")
    prev = None
    n = DEPTH_START
    while n <= DEPTH_CAP:
        gb = _gbar(params, z, n)
        val = _g_backward(params, z, n, start_level, gb if gb is not None else 1.0)
        if prev is not None and abs(val - prev) <= tol:
            return CertifiedValue(min(val, prev), max(val, prev), n, certified=False)
        prev = val
        n *= 2
    raise NumericalFailure(f"depth-doubling agreement above {tol} at depth cap {DEPTH_CAP}")


def _g_deriv_backward(params: ModelParams, z: float, n: int, start_level: int, terminal):
    g, g1, g2 = terminal
    a0 = params.alpha + params.mu * z
    mu = params.mu
    for k in range(n, start_level - 1, -1):
        den = 1.0 + params.rho(k) - g
        if den <= 0.0:
            raise PoleError(z, n)
        h, h1, h2 = g, g1, g2
        g = (a0 + (k - 1) * params.beta) / den
        g1 = (mu + g * h1) / den
        g2 = (2.0 * g1 * h1 + g * h2) / den
    return g, g1, g2


def g_derivatives(
    params: ModelParams, z: float, order: int = 1, tol: float = 1e-10, start_level: int = 1
) -> CertifiedValue:
    """Derivative of the pgf by joint propagation through the recursion.

    Two terminal choices (the flat value 1 and the self-consistent gbar_n
    with its own z-derivatives) are propagated; their spread at stabilizing
    depth is reported as a non-certified enclosure.
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    if z < 0.0:
        raise ValueError("g_derivatives requires z >= 0")
    n = DEPTH_START
    prev_vals = None
    while n <= DEPTH_CAP:
        rho_n = params.rho(n)
        disc = (1.0 - rho_n) ** 2 - 4.0 * params.mu * (z - 1.0)
        candidates = [(1.0, 0.0, 0.0)]
        if disc > 0.0:
            gb = 0.5 * (1.0 + rho_n - math.sqrt(disc))
            gb1 = params.mu / math.sqrt(disc)
            gb2 = 2.0 * params.mu**2 / disc**1.5
            candidates.append((gb, gb1, gb2))
        vals = [_g_deriv_backward(params, z, n, start_level, term)[order] for term in candidates]
        if prev_vals is not None:
            allv = vals + prev_vals
            if max(allv) - min(allv) <= tol:
                return CertifiedValue(min(allv), max(allv), n, certified=False)
        prev_vals = vals
        n *= 2
    raise NumericalFailure(f"derivative enclosure above {tol} at depth cap {DEPTH_CAP}")


def simple_pext_bounds(params: ModelParams) -> tuple:
    """Closed-form extinction-probability bounds from low-depth convergents."""
    a, b, m = params.alpha, params.beta, params.mu
    lower = a / (2.0 * m) * (b + m - 1.0 + math.sqrt((b + m - 1.0) ** 2 + 4.0 * m))
    upper = a * ((a + b + m) * (a + 2.0 * b + m) + m) / (m * (1.0 + 2.0 * a + 2.0 * b + m))
    clip = lambda x: min(max(x, 0.0), 1.0)
    return clip(lower), clip(upper)


def extinction_probability(params: ModelParams, tol: float = 1e-10) -> CertifiedValue:
    """Smallest fixed point of g in [0, 1]; exactly 1 when E[M] <= 1."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    em = expected_M(params, min(tol, 1e-13))
    if em.upper <= 1.0:
        return CertifiedValue(1.0, 1.0, em.depth)
    if em.lower <= 1.0:
        # numerically critical: extinction is still certain
        return CertifiedValue(1.0 - tol, 1.0, em.depth, certified=False)
    gtol = tol / 16.0
    f = lambda z: g_eval(params, z, tol=gtol).midpoint - z
    hi = None
    for i in range(1, 60):
        b = 1.0 - 0.5**i
        if f(b) < 0.0:
            hi = b
            break
    if hi is None:
        raise NumericalFailure("no sign change found for the extinction fixed point")
    root = brentq(f, 0.0, hi, xtol=tol / 8.0)
    depth = g_eval(params, root, tol=gtol).depth
    delta = tol
    for _ in range(8):
        lo_pt = max(root - delta, 0.0)
        hi_pt = min(root + delta, hi)
        g_lo = g_eval(params, lo_pt, tol=gtol)
        g_hi = g_eval(params, hi_pt, tol=gtol)
        if g_lo.lower > lo_pt and g_hi.upper < hi_pt:
            return CertifiedValue(lo_pt, hi_pt, depth)
        delta *= 4.0
    raise NumericalFailure("could not certify the extinction fixed point enclosure")


_level_cache: dict = {}


def offspring_tables(params: ModelParams, m_max: int = 256, tol: float = 1e-14):
    """Per-state excursion-count pmfs P_k(m) and compound parts R_k(m).

    A k-excursion carries a Geometric(rho_k/(1+rho_k)) number of independent
    (k+1)-excursions plus a Bernoulli(mu/rho_k) mutation; states above the
    truncation level (chosen so the z=1 convergent gap is below tol)
    contribute no mutations.  Returns (P, R, n_trunc, defect) with P[k] the
    pmf of the mutation count of one k-excursion for k = 1..n_trunc+1 and
    R[k] the pmf of its compound-geometric part.
    """
    key = (params, m_max, tol)
    cached = _level_cache.get(key)
    if cached is not None:
        return cached
    if m_max < 0:
        raise ValueError("m_max must be >= 0")
    n_trunc = 1
    w = 1.0 / params.rho(1)
    while w > tol and n_trunc < 100_000:
        n_trunc += 1
        w /= params.rho(n_trunc)
    size = m_max + 1
    P = [None] * (n_trunc + 2)
    R = [None] * (n_trunc + 1)
    pk = np.zeros(size)
    pk[0] = 1.0
    P[n_trunc + 1] = pk
    for k in range(n_trunc, 0, -1):
        rho = params.rho(k)
        theta = rho / (1.0 + rho)
        p_mut = params.mu / rho
        # r solves r = theta*delta_0 + (1-theta) * (pk (*) r), truncated
        r = np.zeros(size)
        c = 1.0 - (1.0 - theta) * pk[0]
        r[0] = theta / c
        scale = (1.0 - theta) / c
        for m in range(1, size):
            r[m] = scale * float(pk[1 : m + 1][::-1] @ r[:m])
        pk = (1.0 - p_mut) * r
        pk[1:] += p_mut * r[:-1]
        P[k] = pk
        R[k] = r
    out = (P, R, n_trunc, w)
    _level_cache[key] = out
    return out


def offspring_pmf(params: ModelParams, m_max: int, tol: float = 1e-12) -> OffspringPmf:
    """Distribution of M on {0..m_max}; see :func:`offspring_tables`."""
    P, _, n_trunc, defect = offspring_tables(params, m_max, tol)
    pk = P[1]
    tail = max(0.0, 1.0 - float(pk.sum())) + defect
    return OffspringPmf(pk, tail, m_max, n_trunc)


def nu_circ_pmf(params: ModelParams, tol: float = 1e-12) -> NuCircPmf:
    """Law of the state just before a uniform mutation: weights prod 1/rho_k."""
    weights = []
    w = 1.0
    n = 0
    while True:
        n += 1
        w /= params.rho(n)
        weights.append(w)
        r = 1.0 / params.rho(n + 1)
        if r < 1.0:
            tail = w * r / (1.0 - r)
            if tail <= tol * math.fsum(weights):
                break
        if n > 1_000_000:
            raise NumericalFailure("nu_circ weights failed to converge")
    total = math.fsum(weights)
    return NuCircPmf(np.asarray(weights) / total, tail / total)


def zeta_tilt(params: ModelParams, tol: float = 1e-10) -> TiltSolution:
    """Exponential tilt of M with mean 1: solves E[M zeta^M] = E[zeta^M]."""
    inner_tol = 1e-12

    def phi(s: float) -> float:
        if s == 0.0:
            return 0.0
        g = g_eval(params, s, tol=inner_tol).midpoint
        g1 = g_derivatives(params, s, order=1, tol=max(inner_tol, tol / 10)).midpoint
        return s * g1 / g

    radius_hint = 1.0
    phi1 = phi(1.0)
    if abs(phi1 - 1.0) <= tol:
        lo = hi = 1.0
    elif phi1 > 1.0:
        hi = 1.0
        lo = 0.5
        while phi(lo) >= 1.0:
            lo *= 0.5
            if lo < 1e-300:
                raise NumericalFailure("no lower bracket for the tilt")
    else:
        lo = 1.0
        step = 1.0
        hi = None
        good = 1.0
        while hi is None:
            s = good + step
            try:
                v = phi(s)
                radius_hint = max(radius_hint, s)
                if v > 1.0:
                    hi = s
                else:
                    good = s
                    step *= 2.0
            except (PoleError, NumericalFailure):
                step *= 0.5
                if step < tol / 4:
                    raise NumericalFailure(
                        f"pole reached before the tilt bracket; best bracket [{good}, {good + step}]"
                    )
        lo = good
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if phi(mid) < 1.0:
            lo = mid
        else:
            hi = mid
    zeta = 0.5 * (lo + hi)
    g = g_eval(params, zeta, tol=inner_tol).midpoint
    g1 = g_derivatives(params, zeta, order=1, tol=max(inner_tol, tol / 10)).midpoint
    g2 = g_derivatives(params, zeta, order=2, tol=max(1e-11, tol)).midpoint
    sigma_sq = (zeta * g1 + zeta * zeta * g2) / g - 1.0
    return TiltSolution(zeta, g, sigma_sq, max(radius_hint, zeta))


def laplace_f(params: ModelParams, k: int, lam: float, tol: float = 1e-12) -> CertifiedValue:
    """Laplace transform E_k[exp(-lam * T_{k-1})] of the k -> k-1 passage time.

    Continued fraction f_j = rho_j / (1 + rho_j + lam/j - f_{j+1}).  For
    lam >= 0 the terminal values 0 and 1 give a certified enclosure; for
    lam < 0 depth-doubling agreement is reported, non-certified.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if lam <= -(1.0 + params.alpha + params.mu):
        raise ValueError(f"lam must exceed -(1+alpha+mu) = {-(1.0 + params.alpha + params.mu)}")

    def backward(n: int, terminal: float) -> float:
        val = terminal
        for j in range(n, k - 1, -1):
            den = 1.0 + params.rho(j) + lam / j - val
            if den <= 0.0:
                raise DivergentTailError(f"divergent tail at level {j} for lam={lam}")
            val = params.rho(j) / den
        return val

    n = max(DEPTH_START, 2 * k)
    if lam >= 0.0:
        while n <= DEPTH_CAP:
            lo = backward(n, 0.0)
            hi = backward(n, 1.0)
            lo, hi = min(lo, hi), max(lo, hi)
            if hi - lo <= tol:
                return CertifiedValue(lo, hi, n).clip01()
            n *= 2
        raise NumericalFailure(f"laplace_f gap above {tol} at depth cap {DEPTH_CAP}")
    prev = None
    while n <= DEPTH_CAP:
        val = backward(n, 1.0)
        if prev is not None and abs(val - prev) <= tol:
            return CertifiedValue(min(val, prev), max(val, prev), n, certified=False)
        prev = val
        n *= 2
    raise NumericalFailure(f"laplace_f agreement above {tol} at depth cap {DEPTH_CAP}")


def _growth_series(params: ModelParams, lam: float, tol: float) -> float:
    """mu * sum_j prod_{k<=j} f_k(lam)/rho_k, the CMJ characteristic function."""
    n = 256
    prev = None
    while n <= DEPTH_CAP:
        fs = [0.0] * (n + 2)
        val = 1.0
        for j in range(n, 0, -1):
            den = 1.0 + params.rho(j) + lam / j - val
            if den <= 0.0:
                raise DivergentTailError(f"divergent tail at level {j} for lam={lam}")
            val = params.rho(j) / den
            fs[j] = val
        s = 0.0
        w = 1.0
        for j in range(1, n // 2):
            w *= fs[j] / params.rho(j)
            s += params.mu * w
            if w < tol * 1e-3 and fs[j + 1] / params.rho(j + 1) < 0.5:
                break
        if prev is not None and abs(s - prev) <= max(tol * 0.1, 1e-14):
            return s
        prev = s
        n *= 2
    raise NumericalFailure("growth-rate series did not stabilize")


def malthusian(params: ModelParams, tol: float = 1e-10) -> float:
    """Growth rate of the color count: solves E[M] E_circ[e^{-lam T}] = 1."""
    psi = lambda lam: _growth_series(params, lam, tol)
    em = expected_M(params, 1e-13).midpoint
    bound = -(1.0 + params.alpha + params.mu)
    if abs(em - 1.0) <= 1e-14:
        return 0.0
    if em > 1.0:
        lo = 0.0
        step = 0.25
        hi = None
        while hi is None:
            cand = lo + step
            if psi(cand) < 1.0:
                hi = cand
            else:
                lo = cand
                step *= 2.0
                if lo > 1e6:
                    raise NumericalFailure("no upper bracket for the growth rate")
    else:
        hi = 0.0
        frac_good = 0.0  # largest fraction of the boundary where psi evaluated <= 1
        frac = 0.5
        lo = None
        while lo is None:
            cand = bound * frac
            try:
                v = psi(cand)
            except DivergentTailError:
                frac = 0.5 * (frac + frac_good)
                if frac - frac_good < 1e-13:
                    raise NumericalFailure(
                        "bracket search failed near the lam -> -(1+alpha+mu) boundary"
                    )
                continue
            if v > 1.0:
                lo = cand
            else:
                hi = cand
                frac_good = frac
                frac = 0.5 * (frac + 1.0)
                if 1.0 - frac < 1e-13:
                    raise NumericalFailure(
                        "bracket search failed near the lam -> -(1+alpha+mu) boundary"
                    )
    lam = brentq(lambda x: psi(x) - 1.0, lo, hi, xtol=tol / 4)
    if abs(psi(lam) - 1.0) > 10 * tol:
        raise NumericalFailure("growth-rate residual above tolerance")
    return float(lam)


def pgf_from_state(params: ModelParams, k: int, z: float, tol: float = 1e-12) -> CertifiedValue:
    """E_k[z^M] as the product of the excursion pgfs g_j(z), j = 1..k."""
    if k < 0:
        raise ValueError("k must be >= 0")
    if k == 0:
        return CertifiedValue(1.0, 1.0, 0)
    if z < 0.0:
        raise ValueError("pgf_from_state requires z >= 0")

    def collect(n: int, terminal: float) -> float:
        val = terminal
        prod = 1.0
        a0 = params.alpha + params.mu * z
        for j in range(n, 0, -1):
            den = 1.0 + params.rho(j) - val
            if den <= 0.0:
                raise PoleError(z, n)
            val = (a0 + (j - 1) * params.beta) / den
            if j <= k:
                prod *= val
        return prod

    n = max(DEPTH_START, 2 * k)
    if z <= 1.0:
        while n <= DEPTH_CAP:
            gb = _gbar(params, z, n)
            lo = collect(n, gb)
            hi = collect(n, 1.0)
            lo, hi = min(lo, hi), max(lo, hi)
            if hi - lo <= tol:
                return CertifiedValue(lo, hi, n).clip01()
            n *= 2
        raise NumericalFailure(f"pgf_from_state gap above {tol} at depth cap {DEPTH_CAP}")
    prev = None
    while n <= DEPTH_CAP:
        gb = _gbar(params, z, n)
        val = collect(n, gb if gb is not None else 1.0)
        if prev is not None and abs(val - prev) <= tol * max(1.0, abs(val)):
            return CertifiedValue(min(val, prev), max(val, prev), n, certified=False)
        prev = val
        n *= 2
    raise NumericalFailure(f"pgf_from_state agreement above {tol} at depth cap {DEPTH_CAP}")


def critical_mu(alpha: float, beta: float, tol: float = 1e-12) -> float:
    """Mutation rate making E[M] = 1 for the given alpha, beta (if attainable)."""
    f = lambda m: expected_M(ModelParams(alpha, beta, m), 1e-14).midpoint - 1.0
    lo, hi = 1e-12, 1.0
    tries = 0
    while f(hi) < 0.0:
        hi *= 4.0
        tries += 1
        if tries > 40:
            raise NumericalFailure(f"E[M] stays below 1 for alpha={alpha}, beta={beta}")
    return float(brentq(f, lo, hi, xtol=tol))


def tilted_offspring(params: ModelParams, tol: float = 1e-10):
    """Tilted offspring pmf P(Mhat = m) = zeta^m P(M = m) / E[zeta^M].

    Returns (TiltSolution, normalized probs array).  The support cap is
    grown until the tilted series matches g(zeta) to relative 1e-9.
    """
    tilt = zeta_tilt(params, tol)
    target = tilt.E_zetaM
    m_max = 48
    while m_max <= 8192:
        base = offspring_pmf(params, m_max, tol=1e-14)
        w = base.probs * np.power(tilt.zeta, np.arange(m_max + 1))
        s = float(w.sum())
        if abs(s - target) <= 1e-9 * max(1.0, target):
            return tilt, w / s
        m_max *= 2
    raise NumericalFailure("tilted offspring support cap exceeded")
