"""Statistical verification suites.

Each check returns a :class:`Check` with the decision, the test statistic
and its threshold; suites bundle them for the CLI ``verify`` command and
for the acceptance tests.  Monte Carlo comparisons use 3-standard-error
bands; distributional comparisons use chi-square / Kolmogorov-Smirnov at
significance 0.01 (Bonferroni over categories for weighted laws).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import analytics, limits, model, network
from .params import ModelParams
from .rng import BufferedRng, RngStream


@dataclass
class Check:
    name: str
    passed: bool
    statistic: float
    threshold: float
    detail: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "statistic": self.statistic,
            "threshold": self.threshold,
            "detail": self.detail,
        }


def _three_se(name, v1, se1, v2, se2, k=3.0, detail=None) -> Check:
    gap = abs(v1 - v2)
    band = k * math.hypot(se1, se2)
    d = {"value_a": v1, "se_a": se1, "value_b": v2, "se_b": se2}
    if detail:
        d.update(detail)
    return Check(name, gap <= band, gap, band, d)


def _pool_tail(counts_list, min_expected=8.0):
    """Pool trailing categories so every column keeps a workable count."""
    counts = np.array(counts_list, dtype=float)
    total = counts.sum(axis=0)
    keep = counts.shape[1]
    while keep > 2 and total[keep - 1 :].sum() < min_expected * counts.shape[0]:
        keep -= 1
    pooled = np.empty((counts.shape[0], keep))
    pooled[:, : keep - 1] = counts[:, : keep - 1]
    pooled[:, keep - 1] = counts[:, keep - 1 :].sum(axis=1)
    return pooled


def chi2_two_sample(name, a, b, alpha=0.01, cap=None) -> Check:
    """Contingency chi-square for two integer-valued samples."""
    hi = max(int(np.max(a)), int(np.max(b))) + 1 if cap is None else cap
    ca = np.bincount(np.minimum(a, hi - 1), minlength=hi)
    cb = np.bincount(np.minimum(b, hi - 1), minlength=hi)
    table = _pool_tail([ca, cb])
    table = table[:, table.sum(axis=0) > 0]
    chi2, p, dof, _ = stats.chi2_contingency(table)
    return Check(name, p >= alpha, float(p), alpha, {"chi2": float(chi2), "dof": int(dof)})


def chi2_vs_expected(name, values, expected_probs, alpha=0.01) -> Check:
    """Goodness of fit of integer samples against an exact pmf."""
    n = len(values)
    k = len(expected_probs)
    counts = np.bincount(np.minimum(values, k - 1), minlength=k).astype(float)
    exp = np.asarray(expected_probs, dtype=float) * n
    exp[-1] = n - exp[:-1].sum()  # pool the tail into the last bin
    keep = k
    while keep > 2 and exp[keep - 1] < 8.0:
        exp[keep - 2] += exp[keep - 1]
        counts[keep - 2] += counts[keep - 1]
        keep -= 1
    chi2, p = stats.chisquare(counts[:keep], exp[:keep])
    return Check(name, p >= alpha, p, alpha, {"chi2": float(chi2), "bins": int(keep)})


def _weighted_props(values, weights, n_cats):
    """Self-normalized category proportions with delta-method errors."""
    v = np.minimum(np.asarray(values), n_cats - 1)
    w = np.asarray(weights, dtype=float)
    n = w.size
    wbar = w.mean()
    props = np.empty(n_cats)
    ses = np.empty(n_cats)
    for c in range(n_cats):
        ind = (v == c).astype(float)
        p = float((w * ind).sum() / w.sum())
        resid = w * (ind - p)
        props[c] = p
        ses[c] = math.sqrt(np.mean(resid * resid) / n) / wbar
    return props, ses


def _ess(w) -> float:
    w = np.asarray(w, dtype=float)
    return float(w.sum() ** 2 / (w * w).sum())


def weighted_vs_expected(name, values, weights, expected_probs, alpha=0.01, min_eff=15.0) -> Check:
    """Bonferroni max-z comparison of a weighted sample against an exact pmf.

    Tail categories with fewer than ``min_eff`` effective observations are
    excluded (the delta-method z is not yet normal there)."""
    k = len(expected_probs)
    props, ses = _weighted_props(values, weights, k)
    exp = np.asarray(expected_probs, dtype=float)
    exp = np.concatenate([exp[: k - 1], [1.0 - exp[: k - 1].sum()]])
    ess = _ess(weights)
    use = (ses > 0) & (exp * ess >= min_eff)
    if not use.any():
        return Check(name, False, math.inf, 0.0, {"cats": 0})
    z = np.max(np.abs(props[use] - exp[use]) / ses[use])
    z_crit = stats.norm.ppf(1.0 - alpha / (2 * int(use.sum())))
    return Check(name, z <= z_crit, float(z), float(z_crit), {"cats": int(use.sum())})


def weighted_two_sample(name, va, wa, vb, wb, alpha=0.01, n_cats=None, min_eff=15.0) -> Check:
    """Bonferroni max-z comparison of two weighted categorical samples."""
    if n_cats is None:
        n_cats = int(max(np.max(va), np.max(vb))) + 1
    pa, sa = _weighted_props(va, wa, n_cats)
    pb, sb = _weighted_props(vb, wb, n_cats)
    ess_a, ess_b = _ess(wa), _ess(wb)
    se = np.hypot(sa, sb)
    use = (se > 0) & (pa * ess_a >= min_eff) & (pb * ess_b >= min_eff)
    if not use.any():
        return Check(name, False, math.inf, 0.0, {"cats": 0})
    z = np.max(np.abs(pa[use] - pb[use]) / se[use])
    z_crit = stats.norm.ppf(1.0 - alpha / (2 * int(use.sum())))
    return Check(name, z <= z_crit, float(z), float(z_crit), {"cats": int(use.sum())})


# -- model suite -------------------------------------------------------------


def sample_m_biased_view(params: ModelParams, rng, n_samples: int, m_env: int = 50):
    """Independent draws from the trajectory viewed from a uniform mutation.

    Rejection with envelope M/m_env makes the draws exactly M-biased and
    independent (the envelope exceeds observed M for any sane run length).
    Returns arrays (K, U, M, duration).
    """
    buf = rng if isinstance(rng, BufferedRng) else BufferedRng(rng)
    K = np.empty(n_samples, dtype=int)
    U = np.empty(n_samples)
    M = np.empty(n_samples, dtype=int)
    D = np.empty(n_samples)
    i = 0
    while i < n_samples:
        tr = model.simulate_trajectory(params, 1, buf)
        m = tr.M
        if m == 0 or buf.uniform() >= m / m_env:
            continue
        times = tr.mutation_times()
        j = int(buf.uniform() * len(times))
        u = times[j]
        # state just before the chosen mutation
        s = 1
        for t, kind, s_after in tr.events:
            if t >= u:
                break
            s = s_after
        K[i] = s
        U[i] = u
        M[i] = m
        D[i] = tr.T
        i += 1
    return K, U, M, D


def check_trajectory_wellformed(param_sets, seed=1, n_paths=10_000) -> Check:
    bad = 0
    for j, params in enumerate(param_sets):
        buf = BufferedRng(RngStream(seed, j))
        for _ in range(n_paths // len(param_sets)):
            tr = model.simulate_trajectory(params, 1, buf)
            try:
                tr.validate()
            except ValueError:
                bad += 1
    return Check("trajectory_wellformed", bad == 0, float(bad), 0.0)


def check_first_event_law(params: ModelParams, seed=2, n=40_000) -> list:
    buf = BufferedRng(RngStream(seed))
    first_birth = 0
    down_total = 0
    down_mut = 0
    for _ in range(n):
        tr = model.simulate_trajectory(params, 1, buf)
        kind = tr.events[0][1]
        if kind == model.BIRTH:
            first_birth += 1
        else:
            down_total += 1
            if kind == model.MUTATION:
                down_mut += 1
    rho1 = params.rho(1)
    p_birth = 1.0 / (1.0 + rho1)
    se_b = math.sqrt(p_birth * (1 - p_birth) / n)
    c1 = _three_se("first_event_birth_prob", first_birth / n, se_b, p_birth, 0.0)
    p_mut = params.mu / rho1
    se_m = math.sqrt(p_mut * (1 - p_mut) / down_total)
    c2 = _three_se("first_downjump_mutation_prob", down_mut / down_total, se_m, p_mut, 0.0)
    return [c1, c2]


def check_rate_consistency(params: ModelParams, seed=3, n=60_000, alpha=0.01, max_state=4) -> list:
    """Per-state event-kind frequencies against the transition-rate split."""
    buf = BufferedRng(RngStream(seed))
    counts = {k: np.zeros(4) for k in range(1, max_state + 1)}
    kinds_ix = {model.BIRTH: 0, model.MUTATION: 1, model.DEATH: 2, model.COALESCENCE: 3}
    for _ in range(n):
        tr = model.simulate_trajectory(params, 1, buf)
        s = 1
        for t, kind, s_after in tr.events:
            if s <= max_state:
                counts[s][kinds_ix[kind]] += 1
            s = s_after
    checks = []
    for k in range(1, max_state + 1):
        rho = params.rho(k)
        probs = np.array(
            [1.0, params.mu, params.alpha, (k - 1) * params.beta]
        ) / (1.0 + rho)
        obs = counts[k]
        use = probs > 0
        chi2, p = stats.chisquare(obs[use], obs.sum() * probs[use] / probs[use].sum())
        checks.append(
            Check(f"rate_consistency_state_{k}", p >= alpha, float(p), alpha, {"chi2": float(chi2)})
        )
    return checks


def check_mean_M(params: ModelParams, seed=4, n=100_000) -> Check:
    buf = BufferedRng(RngStream(seed))
    ms = np.empty(n)
    for i in range(n):
        ms[i] = model.simulate_trajectory(params, 1, buf).M
    target = analytics.expected_M(params).midpoint
    return _three_se("mean_M", float(ms.mean()), float(ms.std()) / math.sqrt(n), target, 0.0)


def check_measure_change(params: ModelParams, seed=5, n=100_000, s_values=(0.5, 0.9)) -> list:
    """E_mu[s^M] against E_{s mu}[e^{(s-1) mu L}], overlapping 3-SE intervals."""
    checks = []
    for j, s in enumerate(s_values):
        buf = BufferedRng(RngStream(seed, 2 * j))
        a = np.empty(n)
        for i in range(n):
            a[i] = s ** model.simulate_trajectory(params, 1, buf).M
        tilted = ModelParams(params.alpha, params.beta, s * params.mu)
        buf2 = BufferedRng(RngStream(seed, 2 * j + 1))
        b = np.empty(n)
        for i in range(n):
            tr = model.simulate_trajectory(tilted, 1, buf2)
            b[i] = math.exp((s - 1.0) * params.mu * tr.L)
        checks.append(
            _three_se(
                f"measure_change_s={s}",
                float(a.mean()),
                float(a.std()) / math.sqrt(n),
                float(b.mean()),
                float(b.std()) / math.sqrt(n),
            )
        )
    return checks


def check_intensity_identity(params: ModelParams, seed=6, n=60_000) -> list:
    """E[#(M cap [0,a])] = mu E[int_0^a X_t dt]: the per-path compensator
    difference has mean zero exactly, tested at three horizons."""
    buf = BufferedRng(RngStream(seed))
    trajs = [model.simulate_trajectory(params, 1, buf) for _ in range(n)]
    t_typ = float(np.median([tr.T for tr in trajs]))
    checks = []
    for a in (0.5 * t_typ, t_typ, 4.0 * t_typ):
        diffs = np.empty(n)
        for i, tr in enumerate(trajs):
            area = 0.0
            t_prev, s = 0.0, tr.initial_state
            muts = 0
            for t, kind, s_after in tr.events:
                area += s * (min(t, a) - min(t_prev, a))
                if kind == model.MUTATION and t <= a:
                    muts += 1
                t_prev, s = t, s_after
            diffs[i] = params.mu * area - muts
        checks.append(
            _three_se(
                f"intensity_identity_a={a:.3g}",
                float(diffs.mean()),
                float(diffs.std()) / math.sqrt(n),
                0.0,
                0.0,
            )
        )
    return checks


def check_x_mut_equivalence(params: ModelParams, seed=7, n=20_000, alpha=0.01) -> list:
    """sample_x_mut against independent M-biased views: K, M and duration laws."""
    K_ref, U_ref, M_ref, D_ref = sample_m_biased_view(params, RngStream(seed, 0), n)
    buf = BufferedRng(RngStream(seed, 1))
    K_s = np.empty(n, dtype=int)
    M_s = np.empty(n, dtype=int)
    D_s = np.empty(n)
    U_s = np.empty(n)
    for i in range(n):
        tr = model.sample_x_mut(params, buf)
        K_s[i] = tr.pre_zero_state()
        M_s[i] = tr.M
        D_s[i] = tr.T
        U_s[i] = -tr.start_time
    checks = [
        chi2_two_sample("x_mut_K_law", K_ref, K_s, alpha),
        chi2_two_sample("x_mut_M_law", M_ref, M_s, alpha),
    ]
    ks, p = stats.ks_2samp(D_ref, D_s)
    checks.append(Check("x_mut_duration_law", p >= alpha, float(p), alpha, {"ks": float(ks)}))
    ks_u, p_u = stats.ks_2samp(U_ref, U_s)
    checks.append(Check("x_mut_mutation_time_law", p_u >= alpha, float(p_u), alpha, {"ks": float(ks_u)}))
    return checks


def check_nu_circ_sampler(params: ModelParams, seed=8, n=50_000) -> list:
    buf = BufferedRng(RngStream(seed))
    draws = np.array([model.sample_nu_circ(params, buf) for _ in range(n)])
    pmf = analytics.nu_circ_pmf(params)
    k = min(pmf.probs.size, 12)
    probs = np.concatenate([pmf.probs[: k - 1], [1.0 - pmf.probs[: k - 1].sum()]])
    c1 = chi2_vs_expected("nu_circ_sampler_law", draws - 1, probs)
    c2 = _three_se(
        "nu_circ_sampler_mean",
        float(draws.mean()),
        float(draws.std()) / math.sqrt(n),
        pmf.mean(),
        0.0,
    )
    return [c1, c2]


def model_suite(params: ModelParams, seed: int = 42, scale: float = 1.0) -> list:
    n = lambda base: max(2000, int(base * scale))
    checks = [check_trajectory_wellformed([params], seed)]
    checks += check_first_event_law(params, seed + 1, n(40_000))
    checks += check_rate_consistency(params, seed + 2, n(60_000))
    checks.append(check_mean_M(params, seed + 3, n(100_000)))
    checks += check_measure_change(params, seed + 4, n(100_000))
    checks += check_intensity_identity(params, seed + 5, n(60_000))
    checks += check_x_mut_equivalence(params, seed + 6, n(20_000))
    checks += check_nu_circ_sampler(params, seed + 7, n(50_000))
    return checks


# -- analytics suite ---------------------------------------------------------


def check_enclosure_soundness(params: ModelParams) -> list:
    """Certified enclosures contain an independent higher-precision midpoint."""
    checks = []
    em_hi = analytics.expected_M(params, 1e-15)
    em = analytics.expected_M(params, 1e-10)
    checks.append(
        Check(
            "soundness_expected_M",
            em.lower <= em_hi.midpoint <= em.upper,
            em_hi.midpoint,
            0.0,
            {"lower": em.lower, "upper": em.upper},
        )
    )
    ok = True
    worst = 0.0
    for z in np.linspace(0.0, 1.0, 11):
        loose = analytics.g_eval(params, float(z), tol=1e-8)
        tight = analytics.g_eval(params, float(z), tol=1e-14)
        ok &= loose.lower <= tight.midpoint <= loose.upper and loose.lower <= loose.upper
        worst = max(worst, loose.width)
    checks.append(Check("soundness_g_eval_grid", ok, worst, 1e-8))
    lf_hi = analytics.laplace_f(params, 1, 0.7, tol=1e-15)
    lf = analytics.laplace_f(params, 1, 0.7, tol=1e-9)
    checks.append(
        Check("soundness_laplace_f", lf.lower <= lf_hi.midpoint <= lf.upper, lf_hi.midpoint, 0.0)
    )
    return checks


def check_convergent_gap(params: ModelParams, depths=(4, 8, 12, 16, 20, 24)) -> list:
    """Sup gap over a z-grid: decreasing in depth and below the product majorant."""
    zs = np.linspace(0.0, 1.0, 11)
    sups = []
    ok_major = True
    ok_order = True
    for n in depths:
        gap = 0.0
        for z in zs:
            gb = analytics._gbar(params, float(z), n)
            lo = analytics._g_backward(params, float(z), n, 1, gb)
            hi = analytics._g_backward(params, float(z), n, 1, 1.0)
            ok_order &= lo <= hi + 1e-15
            gap = max(gap, hi - lo)
        sups.append(gap)
        ok_major &= gap <= analytics.gap_majorant(params, n) + 1e-15
    decreasing = all(a >= b for a, b in zip(sups, sups[1:]))
    return [
        Check("convergent_order", ok_order, 0.0, 0.0),
        Check("convergent_gap_majorant", ok_major, max(sups), 0.0, {"sup_gaps": sups}),
        Check("convergent_gap_decreasing", decreasing, 0.0, 0.0, {"sup_gaps": sups}),
    ]


def check_tilt_consistency(params: ModelParams, tol=1e-8) -> Check:
    t = analytics.zeta_tilt(params, tol=1e-12)
    g = analytics.g_eval(params, t.zeta, tol=1e-14).midpoint
    g1 = analytics.g_derivatives(params, t.zeta, 1, tol=1e-12).midpoint
    resid = abs(t.zeta * g1 / g - 1.0)
    return Check("tilt_phi_residual", resid <= tol, resid, tol, {"zeta": t.zeta})


def check_pmf_pgf_duality(params: ModelParams, m_max=60) -> Check:
    pmf = analytics.offspring_pmf(params, m_max, tol=1e-13)
    worst = 0.0
    for z in (0.0, 0.3, 0.7, 1.0):
        series = float(np.power(z, np.arange(m_max + 1)) @ pmf.probs)
        g = analytics.g_eval(params, z, tol=1e-13)
        worst = max(worst, abs(series - g.midpoint))
    thr = 10 * (pmf.tail_bound + 1e-12)
    return Check("pmf_pgf_duality", worst <= thr, worst, thr)


def check_nu_stationarity(params: ModelParams, kmax=30) -> Check:
    """nu_circ(n) proportional to n * pi_n with pi_i ~ i^{-1} prod 1/rho_k."""
    nu = analytics.nu_circ_pmf(params, tol=1e-14)
    kmax = min(kmax, nu.probs.size)
    pi = np.empty(kmax)
    w = 1.0
    for i in range(1, kmax + 1):
        w /= params.rho(i)
        pi[i - 1] = w / i
    lhs = nu.probs[:kmax] / nu.probs[0]
    rhs = (np.arange(1, kmax + 1) * pi) / (1 * pi[0])
    worst = float(np.max(np.abs(lhs - rhs) / rhs))
    return Check("nu_circ_stationarity", worst <= 1e-12, worst, 1e-12)


def check_extinction(params: ModelParams, tol=1e-8) -> list:
    em = analytics.expected_M(params).midpoint
    pe = analytics.extinction_probability(params, tol=1e-10)
    checks = []
    if em <= 1.0:
        checks.append(Check("extinction_subcritical_one", pe.lower == pe.upper == 1.0, pe.midpoint, 1.0))
    else:
        lo, hi = analytics.simple_pext_bounds(params)
        checks.append(
            Check(
                "extinction_within_simple_bounds",
                lo - 1e-12 <= pe.midpoint <= hi + 1e-12,
                pe.midpoint,
                0.0,
                {"lower": lo, "upper": hi},
            )
        )
        g = analytics.g_eval(params, pe.midpoint, tol=1e-12)
        resid = abs(g.midpoint - pe.midpoint)
        checks.append(Check("extinction_fixed_point", resid <= tol, resid, tol))
    return checks


def check_growth_rate_signs(param_grid=None) -> Check:
    if param_grid is None:
        param_grid = [
            ModelParams(1.0, 1.0, 1.0),
            ModelParams(0.2, 0.2, 0.2),
            ModelParams(0.5, 0.3, 0.4),
            ModelParams(0.1, 0.5, 0.8),
            ModelParams(0.3, 1.5, 2.0),
        ]
    ok = True
    details = []
    for p in param_grid:
        em = analytics.expected_M(p).midpoint
        lam = analytics.malthusian(p)
        agree = (lam > 0) == (em > 1.0) if abs(em - 1.0) > 1e-9 else abs(lam) < 1e-6
        ok &= agree
        details.append({"params": (p.alpha, p.beta, p.mu), "E_M": em, "lambda": lam})
    return Check("growth_rate_sign", ok, 0.0, 0.0, {"grid": details})


def check_critical_identities(alpha=0.2, beta=0.2, tol=1e-8) -> list:
    mu_c = analytics.critical_mu(alpha, beta)
    p = ModelParams(alpha, beta, mu_c)
    lam = analytics.malthusian(p, tol=1e-10)
    t = analytics.zeta_tilt(p, tol=1e-10)
    return [
        Check("critical_lambda_zero", abs(lam) <= 1e-6, abs(lam), 1e-6, {"mu_c": mu_c}),
        Check("critical_zeta_one", abs(t.zeta - 1.0) <= 1e-6, abs(t.zeta - 1.0), 1e-6),
    ]


def check_laplace_mc(params: ModelParams, seed=9, n=50_000, lam=1.0) -> Check:
    buf = BufferedRng(RngStream(seed))
    vals = np.empty(n)
    for i in range(n):
        vals[i] = math.exp(-lam * model.simulate_trajectory(params, 1, buf).T)
    target = analytics.laplace_f(params, 1, lam, tol=1e-12).midpoint
    return _three_se(
        "laplace_f_mc", float(vals.mean()), float(vals.std()) / math.sqrt(n), target, 0.0
    )


def check_laplace_monotone(params: ModelParams, k=2) -> Check:
    lams = [0.0, 0.25, 0.5, 1.0, 2.0, 4.0]
    vals = [analytics.laplace_f(params, k, l, tol=1e-12).midpoint for l in lams]
    ok = all(a > b for a, b in zip(vals, vals[1:])) and abs(vals[0] - 1.0) < 1e-10
    return Check("laplace_f_monotone", ok, 0.0, 0.0, {"values": vals})


def check_malthusian_mc(params: ModelParams, seed=10, n=100_000) -> Check:
    """mu E[int X_t e^{-lam t} dt] = 1 at the computed growth rate."""
    lam = analytics.malthusian(params, tol=1e-10)
    buf = BufferedRng(RngStream(seed))
    vals = np.empty(n)
    for i in range(n):
        tr = model.simulate_trajectory(params, 1, buf)
        acc = 0.0
        t_prev, s = 0.0, tr.initial_state
        for t, kind, s_after in tr.events:
            if lam != 0.0:
                acc += s * (math.exp(-lam * t_prev) - math.exp(-lam * t)) / lam
            else:
                acc += s * (t - t_prev)
            t_prev, s = t, s_after
        vals[i] = params.mu * acc
    return _three_se(
        "malthusian_mc_identity",
        float(vals.mean()),
        float(vals.std()) / math.sqrt(n),
        1.0,
        0.0,
        detail={"lambda": lam},
    )


def check_pgf_state_mc(params: ModelParams, seed=11, n=50_000, k=3, z=0.7) -> Check:
    buf = BufferedRng(RngStream(seed))
    vals = np.empty(n)
    for i in range(n):
        vals[i] = z ** model.simulate_trajectory(params, k, buf).M
    target = analytics.pgf_from_state(params, k, z, tol=1e-12).midpoint
    return _three_se(
        "pgf_from_state_mc", float(vals.mean()), float(vals.std()) / math.sqrt(n), target, 0.0
    )


def check_derivative_oracles(params: ModelParams, seed=12, n=100_000) -> list:
    em = analytics.expected_M(params, 1e-14)
    d1 = analytics.g_derivatives(params, 1.0, 1, tol=1e-11)
    c1 = Check(
        "g_prime_brackets_EM",
        d1.lower - 1e-12 <= em.midpoint <= d1.upper + 1e-12,
        em.midpoint,
        0.0,
        {"lower": d1.lower, "upper": d1.upper},
    )
    buf = BufferedRng(RngStream(seed))
    vals = np.empty(n)
    for i in range(n):
        m = model.simulate_trajectory(params, 1, buf).M
        vals[i] = m * (m - 1)
    d2 = analytics.g_derivatives(params, 1.0, 2, tol=1e-9)
    c2 = _three_se(
        "g_second_vs_mc_factorial_moment",
        float(vals.mean()),
        float(vals.std()) / math.sqrt(n),
        d2.midpoint,
        0.0,
    )
    pmf = analytics.offspring_pmf(params, 40, tol=1e-13)
    d0 = analytics.g_derivatives(params, 0.0, 1, tol=1e-11)
    c3 = Check(
        "g_prime_at_zero_is_p1",
        abs(d0.midpoint - pmf.probs[1]) <= 1e-8,
        abs(d0.midpoint - pmf.probs[1]),
        1e-8,
    )
    return [c1, c2, c3]


def analytics_suite(params: ModelParams, seed: int = 42, scale: float = 1.0) -> list:
    n = lambda base: max(2000, int(base * scale))
    checks = []
    checks += check_enclosure_soundness(params)
    checks += check_convergent_gap(params)
    checks.append(check_tilt_consistency(params))
    checks.append(check_pmf_pgf_duality(params))
    checks.append(check_nu_stationarity(params))
    checks += check_extinction(params)
    checks.append(check_growth_rate_signs())
    checks += check_critical_identities()
    checks.append(check_laplace_mc(params, seed + 13, n(50_000)))
    checks.append(check_laplace_monotone(params))
    checks.append(check_malthusian_mc(params, seed + 14, n(100_000)))
    checks.append(check_pgf_state_mc(params, seed + 15, n(50_000)))
    checks += check_derivative_oracles(params, seed + 16, n(100_000))
    return checks


# -- network suite -----------------------------------------------------------


def check_decoration_consistency(params: ModelParams, seed=13, n_samples=300) -> Check:
    """Alive-count reconstruction, mutation bookkeeping and length identity."""
    buf = BufferedRng(RngStream(seed))
    ok = True
    worst = 0.0
    for i in range(n_samples):
        m = i % 3
        dec = network.decorate(params, m, buf)
        tr = dec.trajectory
        s = tr.initial_state
        t_prev = tr.start_time
        for t, kind, s_after in tr.events:
            mid = 0.5 * (t_prev + t)
            ok &= len(dec.alive_at(mid)) == s
            t_prev, s = t, s_after
        ok &= len(dec.mutation_points) == tr.M == m
        ok &= [mp[1] for mp in dec.mutation_points] == tr.mutation_times()
        worst = max(worst, abs(dec.total_length - tr.L))
    return Check("decoration_consistency", ok and worst <= 1e-9, worst, 1e-9)


def check_decorate_stratum_mean(params: ModelParams, seed=14, n=30_000, m=1) -> Check:
    """Conditioned decoration L against the M=m stratum of raw simulation."""
    buf = BufferedRng(RngStream(seed, 0))
    ls = np.empty(n)
    for i in range(n):
        ls[i] = network.decorate(params, m, buf).total_length
    buf2 = BufferedRng(RngStream(seed, 1))
    ref = []
    while len(ref) < n:
        tr = model.simulate_trajectory(params, 1, buf2)
        if tr.M == m:
            ref.append(tr.L)
    ref = np.asarray(ref)
    return _three_se(
        f"decorate_L_stratum_m={m}",
        float(ls.mean()),
        float(ls.std()) / math.sqrt(n),
        float(ref.mean()),
        float(ref.std()) / math.sqrt(len(ref)),
    )


def check_genealogy_methods(params: ModelParams, seed=15, n=6, n_samples=20_000, alpha=0.01) -> list:
    _, probs = network.tilted_offspring_cached(params)
    stats_a = np.empty((n_samples, 2), dtype=int)
    stats_b = np.empty((n_samples, 2), dtype=int)
    for i in range(n_samples):
        ta = network.sample_genealogy_tree(probs, n, RngStream(seed, 2 * i), method="cycle")
        tb = network.sample_genealogy_tree(probs, n, RngStream(seed, 2 * i + 1), method="rejection")
        stats_a[i] = (ta.height(), max(len(c) for c in ta.children))
        stats_b[i] = (tb.height(), max(len(c) for c in tb.children))
    joint_a = stats_a[:, 0] * (n + 1) + stats_a[:, 1]
    joint_b = stats_b[:, 0] * (n + 1) + stats_b[:, 1]
    # relabel the joint categories densely
    cats = {v: i for i, v in enumerate(sorted(set(joint_a) | set(joint_b)))}
    a = np.array([cats[v] for v in joint_a])
    b = np.array([cats[v] for v in joint_b])
    return [chi2_two_sample("genealogy_cycle_vs_rejection", a, b, alpha)]


def check_tilted_vs_direct(params: ModelParams, seed=16, n=4, n_samples=4000, alpha=0.01) -> list:
    sizes_t = np.empty(n_samples)
    sizes_d = np.empty(n_samples)
    shape_t = np.empty(n_samples, dtype=int)
    shape_d = np.empty(n_samples, dtype=int)
    for i in range(n_samples):
        Gt = network.sample_network(params, n, RngStream(seed, 2 * i), method="tilted")
        Gd = network.sample_network(params, n, RngStream(seed, 2 * i + 1), method="direct")
        sizes_t[i] = Gt.total_length
        sizes_d[i] = Gd.total_length
        shape_t[i] = Gt.tree.height() * (n + 1) + Gt.tree.outdegree(0)
        shape_d[i] = Gd.tree.height() * (n + 1) + Gd.tree.outdegree(0)
    ks, p = stats.ks_2samp(sizes_t, sizes_d)
    cats = {v: i for i, v in enumerate(sorted(set(shape_t) | set(shape_d)))}
    a = np.array([cats[v] for v in shape_t])
    b = np.array([cats[v] for v in shape_d])
    return [
        Check("tilted_vs_direct_size_ks", p >= alpha, float(p), alpha, {"ks": float(ks)}),
        chi2_two_sample("tilted_vs_direct_tree_shape", a, b, alpha),
    ]


def check_distance_height(params: ModelParams, seed=17, n=30, n_points=100) -> list:
    G = network.sample_network(params, n, RngStream(seed))
    rng = RngStream(seed, 999)
    exact = True
    close = 0.0
    pts = [G.uniform_point(rng.substream(i)) for i in range(n_points)]
    for x in pts:
        exact &= G.distance(G.root_point, x) == G.height(x)
        close = max(close, abs(G.height(x) - G.time_coordinate(x)))
    sym = 0.0
    tri = True
    for i in range(0, 30, 3):
        a, b, c = pts[i], pts[i + 1], pts[i + 2]
        dab, dba = G.distance(a, b), G.distance(b, a)
        sym = max(sym, abs(dab - dba))
        tri &= G.distance(a, c) <= dab + G.distance(b, c) + 1e-12
    return [
        Check("distance_root_equals_height", exact, 0.0, 0.0),
        Check("height_equals_time_coordinate", close <= 1e-9, close, 1e-9),
        Check("distance_symmetry", sym <= 1e-12, sym, 1e-12),
        Check("distance_triangle", tri, 0.0, 0.0),
    ]


def check_glue_recount(params: ModelParams, seed=18, n=25) -> list:
    G = network.sample_network(params, n, RngStream(seed))
    exact = G.total_length == math.fsum(d.total_length for d in G.decorations)
    G._ensure_graph()
    n_births = sum(
        sum(1 for e in d.trajectory.events if e[1] == model.BIRTH) for d in G.decorations
    )
    n_coal = sum(
        sum(1 for e in d.trajectory.events if e[1] == model.COALESCENCE) for d in G.decorations
    )
    n_lineages = sum(len(d.lineages) for d in G.decorations)
    expected_nodes = 2 * n_lineages + n_births + n_coal
    expected_edges = (n_lineages + n_births + n_coal) + n_births + n_coal + (G.n_colors - 1)
    n_edges = sum(len(a) for a in G._graph) // 2
    return [
        Check("glue_length_exact", exact, 0.0, 0.0),
        Check(
            "glue_node_recount",
            len(G._nodes) == expected_nodes,
            float(len(G._nodes)),
            float(expected_nodes),
        ),
        Check("glue_edge_recount", n_edges == expected_edges, float(n_edges), float(expected_edges)),
    ]


def check_dwass_small_n(params: ModelParams, seed=19, n_samples=100_000, n_max=8) -> Check:
    """Exact Dwass convolution against GW(M-hat) size frequencies for n <= n_max."""
    _, probs = network.tilted_offspring_cached(params)
    gen = RngStream(seed).generator()
    cdf = np.cumsum(probs)
    counts = np.zeros(n_max + 2)
    for _ in range(n_samples):
        size = 0
        open_slots = 1
        while open_slots > 0 and size <= n_max:
            d = int(np.searchsorted(cdf, gen.random() * cdf[-1], side="right"))
            size += 1
            open_slots += d - 1
        counts[min(size, n_max + 1)] += 1
    ok = True
    worst = 0.0
    details = {}
    for n in range(1, n_max + 1):
        p_exact, err = limits.gw_size_probability(probs, n)
        p_emp = counts[n] / n_samples
        se = math.sqrt(max(p_exact * (1 - p_exact), 1e-12) / n_samples)
        z = abs(p_emp - p_exact) / se
        worst = max(worst, z)
        ok &= z <= 3.0 + err / se
        details[str(n)] = {"exact": p_exact, "empirical": p_emp, "z": z}
    return Check("dwass_small_n", ok, worst, 3.0, details)


def check_uniform_point(params: ModelParams, seed=20, n=25, n_points=40_000, alpha=0.01) -> list:
    G = network.sample_network(params, n, RngStream(seed))
    rng = RngStream(seed, 123_456)
    vs = np.empty(n_points, dtype=int)
    offs = []
    target = max(
        ((v, ln) for v in range(G.n_colors) for ln in G.decorations[v].lineages),
        key=lambda p: p[1].length,
    )
    for i in range(n_points):
        x = G.uniform_point(rng.substream(i))
        vs[i] = x.vertex
        if x.vertex == target[0] and x.lineage == target[1].id:
            offs.append(x.offset / target[1].length)
    probs = np.asarray(G.lengths) / G.total_length
    c1 = chi2_vs_expected("uniform_point_color_freq", vs, probs, alpha)
    ks, p = stats.kstest(np.asarray(offs), "uniform")
    c2 = Check("uniform_point_offset_uniform", p >= alpha, float(p), alpha, {"n": len(offs)})
    p_root = float(np.mean(vs == 0))
    se = math.sqrt(p_root * (1 - p_root) / n_points)
    c3 = _three_se("uniform_point_root_mass", p_root, se, float(probs[0]), 0.0)
    return [c1, c2, c3]


def check_contour(params: ModelParams, seed=21, n=12, grid=2048) -> list:
    G = network.sample_network(params, n, RngStream(seed))
    ts, hs, cols = network.contour(G, RngStream(seed, 7), grid)
    c1 = Check("contour_starts_at_root", hs[0] == 0.0 and np.all(hs >= 0.0), float(hs[0]), 0.0)
    ok = True
    for i in range(len(ts) - 1):
        if cols[i] == cols[i + 1]:
            T_c = G.decorations[cols[i]].trajectory.T
            ok &= abs(hs[i + 1] - hs[i]) <= 2.0 * T_c + 1e-9
    c2 = Check("contour_increment_bound", ok, 0.0, 0.0)
    # exhaustive recomputation of the maximum on a small network
    max_pointwise = G.max_height()
    gap = abs(float(hs.max()) - max_pointwise)
    finest = max(G.lengths.max() * n / grid, 1e-6)
    c3 = Check("contour_max_matches", gap <= 2.0 * finest, gap, 2.0 * finest)
    return [c1, c2, c3]


def network_suite(params: ModelParams, seed: int = 42, scale: float = 1.0) -> list:
    n = lambda base: max(500, int(base * scale))
    checks = [check_decoration_consistency(params, seed + 20)]
    checks.append(check_decorate_stratum_mean(params, seed + 21, n(30_000)))
    checks += check_genealogy_methods(params, seed + 22, 6, n(20_000))
    checks += check_tilted_vs_direct(params, seed + 23, 4, n(4000))
    checks += check_distance_height(params, seed + 24)
    checks += check_glue_recount(params, seed + 25)
    checks.append(check_dwass_small_n(params, seed + 26, n(100_000)))
    checks += check_uniform_point(params, seed + 27)
    checks += check_contour(params, seed + 28)
    return checks


# -- crt suite ---------------------------------------------------------------


def crt_suite(
    params: ModelParams,
    seed: int = 42,
    n: int = 500,
    replicates: int = 1000,
    n_samples: int = 100_000,
    workers: int = 1,
    trend_ns=(200, 800, 3200),
    trend_reps=(150, 80, 40),
    maxh_n: int = 2000,
    maxh_reps: int = 200,
) -> list:
    checks = []
    cc = limits.crt_constants(params, RngStream(seed, 1), n_samples=n_samples)
    checks.append(
        _three_se(
            "dual_EUstar_agreement",
            cc.EUstar.value,
            cc.EUstar.std_error,
            cc.EUstar_formula.value,
            cc.EUstar_formula.std_error,
        )
    )
    checks.append(
        _three_se(
            "dual_ell_agreement",
            cc.ell.value,
            cc.ell.std_error,
            cc.ell_crosscheck.value,
            cc.ell_crosscheck.std_error,
        )
    )
    sig = math.sqrt(cc.sigma_hat_sq)
    checks.append(
        Check(
            "C_definition_consistency",
            abs(cc.C.value * 2.0 * cc.EUstar.value - sig) <= 1e-12,
            abs(cc.C.value * 2.0 * cc.EUstar.value - sig),
            1e-12,
        )
    )
    exc = limits.brownian_excursion_max(RngStream(seed, 2))
    report = limits.verify_crt_scaling(
        params, n, replicates, RngStream(seed, 3), constants=cc, excursion=exc, workers=workers
    )
    ms = report["mean_size_per_color"]
    checks.append(
        _three_se(
            f"size_per_color_n={n}",
            ms["value"],
            ms["std_error"],
            cc.ell.value,
            cc.ell.std_error,
        )
    )
    maxh_report = limits.verify_crt_scaling(
        params, maxh_n, maxh_reps, RngStream(seed, 4), constants=cc, excursion=exc, workers=workers
    )
    checks.append(
        Check(
            f"max_height_within_15pct_n={maxh_n}",
            maxh_report["max_height_rel_err"] <= 0.15,
            maxh_report["max_height_rel_err"],
            0.15,
            {
                "mean": maxh_report["mean_max_height_rescaled"],
                "target": maxh_report["max_height_target"],
            },
        )
    )
    supdevs = []
    for nn, reps in zip(trend_ns, trend_reps):
        rep = limits.verify_crt_scaling(
            params, nn, reps, RngStream(seed, 100 + nn), constants=cc, excursion=exc, workers=workers
        )
        supdevs.append(rep["mean_sup_deviation_rescaled"])
    trend_ok = all(a > b for a, b in zip(supdevs, supdevs[1:]))
    checks.append(
        Check(
            "sup_deviation_trend",
            trend_ok,
            supdevs[-1],
            supdevs[0],
            {"n_values": list(trend_ns), "sup_devs": supdevs},
        )
    )
    _, probs = network.tilted_offspring_cached(params)
    ratios = []
    for nn in (250, 500, 1000, 2000):
        v, err = limits.gw_size_probability(probs, nn)
        asym = nn**-1.5 / math.sqrt(2.0 * math.pi * cc.sigma_hat_sq)
        ratios.append(v / asym)
    monotone = all(
        abs(b - 1.0) < abs(a - 1.0) or abs(b - 1.0) < 5e-4 for a, b in zip(ratios, ratios[1:])
    )
    checks.append(
        Check(
            "gw_size_ratio_asymptotic",
            abs(ratios[-1] - 1.0) <= 0.10 and monotone,
            abs(ratios[-1] - 1.0),
            0.10,
            {"ratios": ratios},
        )
    )
    checks.append(check_dwass_small_n(params, seed + 30))
    return checks


# -- local suite -------------------------------------------------------------


def check_prob_N_basics(params: ModelParams) -> list:
    tilt = analytics.zeta_tilt(params)
    tab = limits.prob_N_table(params, tilt.zeta)
    c1 = Check("prob_N_normalized", abs(tab.sum() - 1.0) <= 1e-8, abs(float(tab.sum()) - 1.0), 1e-8)
    nu = analytics.nu_circ_pmf(params)
    tab1 = limits.prob_N_table(params, 1.0)
    k = min(tab1.size, nu.probs.size)
    worst = float(np.max(np.abs(tab1[:k] - nu.probs[:k])))
    c2 = Check("prob_N_at_zeta_one_is_nu", worst <= 1e-9, worst, 1e-9)
    return [c1, c2]


def _focal_reference(params: ModelParams, zeta: float, seed, n):
    """Raw trajectories weighted by L zeta^M (the focal-network M law)."""
    buf = BufferedRng(RngStream(seed))
    ms = np.empty(n, dtype=int)
    ws = np.empty(n)
    for i in range(n):
        tr = model.simulate_trajectory(params, 1, buf)
        ms[i] = tr.M
        ws[i] = tr.L * zeta**tr.M
    return ms, ws


def check_focal_sampler(params: ModelParams, seed=23, n=30_000, alpha=0.01) -> list:
    tilt = analytics.zeta_tilt(params)
    zeta = tilt.zeta
    buf = BufferedRng(RngStream(seed, 0))
    Ns = np.empty(n, dtype=int)
    Ms = np.empty(n, dtype=int)
    Ws = np.empty(n)
    for i in range(n):
        net, w = limits.sample_focal_network(params, zeta, buf)
        Ns[i] = len(net.alive_at(0.0))
        Ms[i] = net.trajectory.M
        Ws[i] = w
    tab = limits.prob_N_table(params, zeta)
    kcap = 8
    probs = np.concatenate([tab[: kcap - 1], [1.0 - tab[: kcap - 1].sum()]])
    c1 = weighted_vs_expected("focal_N_law", Ns - 1, Ws, probs, alpha)
    m_ref, w_ref = _focal_reference(params, zeta, seed * 31 + 1, n)
    mcap = int(max(Ms.max(), m_ref.max())) + 1
    c2 = weighted_two_sample("focal_M_law", Ms, Ws, m_ref, w_ref, alpha, n_cats=min(mcap, 12))
    neg = all(
        net_t < 0
        for net_t in [limits.sample_focal_network(params, zeta, buf)[0].trajectory.start_time for _ in range(50)]
    )
    c3 = Check("focal_root_time_negative", neg, 0.0, 0.0)
    return [c1, c2, c3]


def check_spinal_sampler(params: ModelParams, seed=24, n=30_000, alpha=0.01) -> list:
    tilt = analytics.zeta_tilt(params)
    zeta = tilt.zeta
    buf = BufferedRng(RngStream(seed, 0))
    Ms = np.empty(n, dtype=int)
    Ws = np.empty(n)
    ok_mut = True
    for i in range(n):
        net, w = limits.sample_spinal_network(params, zeta, buf)
        Ms[i] = net.trajectory.M
        Ws[i] = w
        ok_mut &= net.focal_point is not None and net.focal_point[1] == 0.0
    c0 = Check("spinal_focal_is_time0_mutation", ok_mut, 0.0, 0.0)
    # reference: raw trajectories weighted by M zeta^M
    buf2 = BufferedRng(RngStream(seed, 1))
    m_ref = np.empty(n, dtype=int)
    w_ref = np.empty(n)
    for i in range(n):
        tr = model.simulate_trajectory(params, 1, buf2)
        m_ref[i] = tr.M
        w_ref[i] = tr.M * zeta**tr.M
    mcap = int(max(Ms.max(), m_ref.max())) + 1
    c1 = weighted_two_sample("spinal_M_law", Ms, Ws, m_ref, w_ref, alpha, n_cats=min(mcap, 12))
    # at zeta = 1 the pre-0 state law is exactly the one of sample_x_mut
    buf3 = BufferedRng(RngStream(seed, 2))
    k_spinal = np.empty(8000, dtype=int)
    for i in range(8000):
        net, _ = limits.sample_spinal_network(params, 1.0, buf3)
        k_spinal[i] = net.trajectory.pre_zero_state()
    buf4 = BufferedRng(RngStream(seed, 3))
    k_xmut = np.array([model.sample_x_mut(params, buf4).pre_zero_state() for _ in range(8000)])
    c2 = chi2_two_sample("spinal_K_matches_x_mut_at_zeta1", k_spinal, k_xmut, alpha)
    return [c0, c1, c2]


def check_local_ball(params: ModelParams, seed=25, n=2000) -> list:
    tilt = analytics.zeta_tilt(params)
    buf = BufferedRng(RngStream(seed))
    ok_spine = True
    ok_meta = True
    for i in range(n // 10):
        ball = limits.sample_local_ball(params, tilt.zeta, 2, buf)
        for sid in ball.spine_ids:
            v = ball.vertices[sid]
            ok_spine &= v.outdegree >= 1 and 0 <= v.attach_index < v.outdegree
        for v in ball.vertices:
            ok_meta &= len(v.decoration.mutation_points) == v.outdegree
            ok_meta &= len(v.children) == v.outdegree
    b0 = limits.sample_local_ball(params, tilt.zeta, 0, buf)
    ok_r0 = len(b0.vertices) == 1 and b0.vertices[0].role == "focal"
    return [
        Check("ball_spine_size_biased", ok_spine, 0.0, 0.0),
        Check("ball_decoration_outdegrees", ok_meta, 0.0, 0.0),
        Check("ball_r0_is_focal_only", ok_r0, 0.0, 0.0),
    ]


def check_finite_n_local(
    params: ModelParams, seed=26, n=2000, n_networks=300, alpha=0.01, ball_samples=20_000
) -> list:
    """Finite-n law around a uniform point against prob_N and the focal sampler."""
    tilt = analytics.zeta_tilt(params)
    zeta = tilt.zeta
    Ns = np.empty(n_networks, dtype=int)
    out_deg = np.empty(n_networks, dtype=int)
    t_since = np.empty(n_networks)
    for i in range(n_networks):
        rng = RngStream(seed, i)
        G = network.sample_network(params, n, rng.substream(0))
        x = G.uniform_point(rng.substream(1))
        dec = G.decorations[x.vertex]
        t_abs = dec.lineages[x.lineage].birth_time + x.offset
        Ns[i] = dec.trajectory.state_at(t_abs)
        out_deg[i] = G.tree.outdegree(x.vertex)
        t_since[i] = t_abs - dec.trajectory.start_time
    tab = limits.prob_N_table(params, zeta)
    kcap = 6
    probs = np.concatenate([tab[: kcap - 1], [1.0 - tab[: kcap - 1].sum()]])
    c1 = chi2_vs_expected("finite_n_N_law", Ns - 1, probs, alpha)
    # focal outdegree law from the limit sampler
    buf = BufferedRng(RngStream(seed, 10_000_000))
    Md = np.empty(ball_samples, dtype=int)
    Wd = np.empty(ball_samples)
    for i in range(ball_samples):
        net, w = limits.sample_focal_network(params, zeta, buf)
        Md[i] = net.trajectory.M
        Wd[i] = w
    mcap = 8
    c2 = weighted_two_sample(
        "finite_n_focal_outdegree",
        np.minimum(out_deg, mcap - 1),
        np.ones(n_networks),
        np.minimum(Md, mcap - 1),
        Wd,
        alpha,
        n_cats=mcap,
    )
    return [c1, c2]


def check_time_since_mutation(params: ModelParams, seed=27, n_networks=300, n=2000, alpha=0.01, n_mc=40_000) -> Check:
    """Joint (N, dyadic time bin) law around a uniform point against the
    nu_circ decomposition (conditional on N=k the elapsed time is the
    zeta^M-biased absorption time from state k)."""
    tilt = analytics.zeta_tilt(params)
    zeta = tilt.zeta
    ks = []
    ts = []
    for i in range(n_networks):
        rng = RngStream(seed, i)
        G = network.sample_network(params, n, rng.substream(0))
        x = G.uniform_point(rng.substream(1))
        dec = G.decorations[x.vertex]
        t_abs = dec.lineages[x.lineage].birth_time + x.offset
        ks.append(dec.trajectory.state_at(t_abs))
        ts.append(t_abs - dec.trajectory.start_time)
    ks = np.asarray(ks)
    ts = np.asarray(ts)
    edges = [0.0, 0.25, 0.5, 1.0, 2.0, np.inf]
    worst = 0.0
    n_cells = 0
    for k in (1, 2):
        sel = ks == k
        p_k = float(sel.mean())
        if sel.sum() < 30:
            continue
        buf = BufferedRng(RngStream(seed, 5_000_000 + k))
        ref_t = np.empty(n_mc)
        ref_w = np.empty(n_mc)
        for i in range(n_mc):
            tr = model.simulate_trajectory(params, k, buf)
            ref_t[i] = tr.T
            ref_w[i] = zeta**tr.M
        for lo, hi in zip(edges[:-1], edges[1:]):
            emp = float(((ts >= lo) & (ts < hi) & sel).mean())
            se_emp = math.sqrt(max(emp * (1 - emp), 1e-9) / len(ts))
            ind = ((ref_t >= lo) & (ref_t < hi)).astype(float)
            cond = float((ref_w * ind).sum() / ref_w.sum())
            resid = ref_w * (ind - cond)
            se_cond = math.sqrt(np.mean(resid**2) / n_mc) / ref_w.mean()
            target = limits.prob_N(params, zeta, k) * cond
            se = math.hypot(se_emp, p_k * se_cond)
            if se > 0:
                worst = max(worst, abs(emp - target) / se)
                n_cells += 1
    z_crit = stats.norm.ppf(1.0 - alpha / (2 * n_cells)) if n_cells else 3.0
    return Check("time_since_mutation_law", worst <= z_crit, worst, float(z_crit), {"cells": n_cells})


def local_suite(
    params: ModelParams,
    seed: int = 42,
    scale: float = 1.0,
    n: int = 2000,
    n_networks: int = 300,
) -> list:
    checks = []
    checks += check_prob_N_basics(params)
    checks += check_focal_sampler(params, seed + 40, max(2000, int(30_000 * scale)))
    checks += check_spinal_sampler(params, seed + 41, max(2000, int(30_000 * scale)))
    checks += check_local_ball(params, seed + 42)
    checks += check_finite_n_local(params, seed + 43, n, n_networks)
    checks.append(check_time_since_mutation(params, seed + 44, n_networks, n))
    return checks
