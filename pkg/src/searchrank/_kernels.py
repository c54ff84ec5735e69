"""numba kernels for the hot paths: likelihood cases, demand shares, path simulation.

Inner probabilities use the Gumbel closed form directly: a product of Gumbel
CDFs evaluated at a common point collapses to one exponential of a prefix sum,
which is what makes the per-draw cost independent of the list length.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit, prange

from .distributions import _KEY_CONSUMER, _KEY_INDEX, _MIX_C1, _MIX_C2, _MIX_C3

_U0 = np.uint64(0)
_C1 = np.uint64(_MIX_C1)
_C2 = np.uint64(_MIX_C2)
_C3 = np.uint64(_MIX_C3)
_KC = np.uint64(_KEY_CONSUMER)
_KI = np.uint64(_KEY_INDEX)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0

# Draw-index ledger: every (purpose, heterogeneity draw, interval, branch, r)
# tuple owns a fixed index so uniforms never shift when parameters move.
SHIFT_HET = 21
SHIFT_INTERVAL = 14
SHIFT_BRANCH = 12
SHIFT_PURPOSE = 31
MAX_DRAWS = 1 << SHIFT_BRANCH          # 4096 per (interval, branch)
MAX_INTERVALS = 1 << (SHIFT_HET - SHIFT_INTERVAL)   # 128
MAX_HET = 1 << (SHIFT_PURPOSE - SHIFT_HET)          # 1024

PURPOSE_MAIN = 0
PURPOSE_DENOM = 1
PURPOSE_OUTSIDE = 2
PURPOSE_PRODUCT = 3          # + product row
PURPOSE_SIM = 1000
PURPOSE_WELFARE = 1100

MASS_FLOOR = 1e-300


@njit(cache=True, inline="always")
def _mix(x):
    x = (x ^ (x >> _S30)) * _C2
    x = (x ^ (x >> _S27)) * _C3
    return x ^ (x >> _S31)


@njit(cache=True, inline="always")
def _u01(hkey, idx):
    x = _mix(np.uint64(idx) + _KI) ^ hkey
    x = _mix(_mix(x + _C1))
    return ((x >> _S11) + _U0) * _INV53 + 0.5 * _INV53


@njit(cache=True)
def _session_key(seed, consumer_id):
    return _mix(np.uint64(seed) + _C1) ^ _mix(np.uint64(consumer_id) + _KC)


@njit(cache=True, inline="always")
def _a_exp(bound, loc, scale):
    """Gumbel CDF inner exponent A(bound) = exp(-(bound - loc)/scale)."""
    if bound == math.inf:
        return 0.0
    if bound == -math.inf:
        return math.inf
    z = (bound - loc) / scale
    if z < -700.0:
        return math.inf
    return math.exp(-z)


@njit(cache=True, inline="always")
def _mass(a_lo, a_hi):
    """P(lower < X <= upper) from the two inner exponents."""
    d = a_lo - a_hi
    return math.exp(-a_hi) * -math.expm1(-d)


@njit(cache=True, inline="always")
def _trunc_draw(u, a_lo, a_hi, loc, scale, upper):
    """Inverse-transform truncated Gumbel draw given inner exponents."""
    d = a_lo - a_hi
    if d > 745.0:
        t = a_hi - math.log(u)
    else:
        t = a_hi - math.log1p((1.0 - u) * math.expm1(-d))
    if t <= 0.0:
        return upper
    v = loc - scale * math.log(t)
    if v > upper:
        v = upper
    return v


@njit(cache=True, inline="always")
def _cdf_factor(t, c):
    """exp(-t*c) with 0*inf guarded to the correct limits."""
    if c == 0.0 or t == 0.0:
        return 1.0
    if t == math.inf:
        return 0.0
    return math.exp(-t * c)


@njit(cache=True)
def _zd_fill(zd, Xi_i, erho, log_h):
    zd[0] = math.inf
    for h in range(1, zd.shape[0]):
        zd[h] = Xi_i - erho * log_h[h]


@njit(cache=True)
def _inner_case01(v, h_star, c_nu, b_click, e_click, n_click, sig_eps, sig_nu):
    """Product over the awareness prefix and the clicked set at point v."""
    t_nu = _a_exp(v, 0.0, sig_nu)
    p = _cdf_factor(t_nu, c_nu[h_star])
    if n_click > 0:
        t_eps = _a_exp(v, 0.0, sig_eps)
        for k in range(n_click):
            p *= (1.0 - _cdf_factor(t_nu, b_click[k])) * _cdf_factor(t_eps, e_click[k])
    return p


@njit(cache=True)
def _case01_value(
    y, clicked, h_bar, zd,
    beta0, xi, sig_eps, sig_nu, mu_eps, mu_nu,
    n_r, hkey, base_idx, directed,
):
    """Partitioned estimate of the no-booking integral (cases 0 and 1).

    With an empty clicked set and h_bar = 1 this is the no-click contribution
    over the whole real line; with clicks it is bounded above by zd[h_bar - 1].
    Returns (estimate, variance of the estimate).
    """
    J = y.shape[0]
    if J == 0:
        return 1.0, 0.0
    loc0 = beta0 + mu_eps

    # Prefix sums of exp((y + xi + mu_nu)/sig_nu) over unclicked rows, plus the
    # clicked rows' own exponent tables.
    c_nu = np.zeros(J + 1)
    n_click = 0
    for j in range(J):
        if clicked[j]:
            n_click += 1
    b_click = np.empty(n_click)
    e_click = np.empty(n_click)
    k = 0
    for j in range(J):
        bj = math.exp((y[j] + xi + mu_nu) / sig_nu)
        if clicked[j]:
            b_click[k] = bj
            e_click[k] = math.exp((y[j] + mu_eps) / sig_eps)
            k += 1
            c_nu[j + 1] = c_nu[j]
        else:
            c_nu[j + 1] = c_nu[j] + bj

    total = 0.0
    var = 0.0
    if directed:
        n_s = 1
    else:
        n_s = J - h_bar + 2
    for s in range(n_s):
        if directed:
            lo = -math.inf
            hi = math.inf
            h_star = J
        elif s == 0:
            lo = -math.inf
            hi = zd[J]
            h_star = J
        else:
            lo = zd[J - s + 1]
            hi = zd[J - s]
            h_star = J - s + 1
            if h_star > J:
                h_star = J
        a_lo = _a_exp(lo, loc0, sig_eps)
        a_hi = _a_exp(hi, loc0, sig_eps)
        w = _mass(a_lo, a_hi)
        if w < MASS_FLOOR:
            continue
        acc = 0.0
        acc2 = 0.0
        idx0 = base_idx + (s << SHIFT_INTERVAL)
        for r in range(n_r):
            u = _u01(hkey, idx0 + r)
            v = _trunc_draw(u, a_lo, a_hi, loc0, sig_eps, hi)
            g = _inner_case01(v, h_star, c_nu, b_click, e_click, n_click, sig_eps, sig_nu)
            acc += g
            acc2 += g * g
        mean = acc / n_r
        total += w * mean
        if n_r > 1:
            sv = (acc2 - n_r * mean * mean) / (n_r - 1.0)
            if sv > 0.0:
                var += w * w * sv / n_r
    return total, var


@njit(cache=True)
def _inner_case2(
    v, h_star, c_nu, c_eps, b_click, e_click, n_click, e_out, sig_eps, sig_nu
):
    """Case-2 / product-share inner product at the clamped value v."""
    t_nu = _a_exp(v, 0.0, sig_nu)
    t_eps = _a_exp(v, 0.0, sig_eps)
    p = _cdf_factor(t_nu, c_nu[h_star]) * _cdf_factor(t_eps, c_eps[h_star] + e_out)
    for k in range(n_click):
        p *= (1.0 - _cdf_factor(t_nu, b_click[k])) * _cdf_factor(t_eps, e_click[k])
    return p


@njit(cache=True)
def _case2_value(
    y, clicked, q_row, h_bar, zd,
    beta0, xi, sig_eps, sig_nu, mu_eps, mu_nu,
    n_r, hkey, base_idx, directed, all_compared,
):
    """Partitioned estimate of the booking integral (case 2, Appendix-style draws).

    Integrates over the booked listing's discovery-free value with three draw
    branches per subinterval; the inner product is evaluated at the listing's
    effective value (the draw capped by its discovery gate). With all_compared
    the unclicked product also carries its purchase-value factor, which turns
    the same machinery into the product-demand integrand.
    Returns (estimate, variance of the estimate).
    """
    J = y.shape[0]
    loc0 = beta0 + mu_eps
    pos_q = q_row + 1
    y_q = y[q_row]

    c_nu = np.zeros(J + 1)
    c_eps = np.zeros(J + 1)
    n_click = 0
    for j in range(J):
        if clicked[j] and j != q_row:
            n_click += 1
    b_click = np.empty(n_click)
    e_click = np.empty(n_click)
    k = 0
    for j in range(J):
        if j == q_row:
            c_nu[j + 1] = c_nu[j]
            c_eps[j + 1] = c_eps[j]
            continue
        bj = math.exp((y[j] + xi + mu_nu) / sig_nu)
        ej = math.exp((y[j] + mu_eps) / sig_eps)
        if clicked[j]:
            b_click[k] = bj
            e_click[k] = ej
            k += 1
            c_nu[j + 1] = c_nu[j]
            c_eps[j + 1] = c_eps[j]
        else:
            c_nu[j + 1] = c_nu[j] + bj
            c_eps[j + 1] = c_eps[j] + (ej if all_compared else 0.0)
    e_out = math.exp((beta0 + mu_eps) / sig_eps)

    gate = math.inf if (pos_q <= 1 or directed) else zd[pos_q - 1]

    if directed:
        n_base = 1
        extra_top = False
    else:
        n_base = J - h_bar + 2
        extra_top = (pos_q == h_bar) and (h_bar >= 2)
    n_s = n_base + (1 if extra_top else 0)

    total = 0.0
    var = 0.0
    for s in range(n_s):
        if directed:
            lo = -math.inf
            hi = math.inf
            h_star = J
        elif s == n_base:  # appended top interval above the last gate
            lo = zd[h_bar - 1]
            hi = math.inf
            h_star = h_bar
        elif s == 0:
            lo = -math.inf
            hi = zd[J]
            h_star = J
        else:
            lo = zd[J - s + 1]
            hi = zd[J - s]
            h_star = J - s + 1
            if h_star > J:
                h_star = J
        # shock-space exponents for the booked listing
        a_nu_lo = _a_exp(lo - y_q - xi, mu_nu, sig_nu)
        a_nu_hi = _a_exp(hi - y_q - xi, mu_nu, sig_nu)
        a_eps_lo = _a_exp(lo - y_q, mu_eps, sig_eps)
        a_eps_hi = _a_exp(hi - y_q, mu_eps, sig_eps)
        idx0 = base_idx + (s << SHIFT_INTERVAL)

        # branch 1: purchase shock above the interval, search shock inside
        m_nu = _mass(a_nu_lo, a_nu_hi)
        p_eps_above = -math.expm1(-a_eps_hi)
        w1 = m_nu * p_eps_above
        if w1 >= MASS_FLOOR:
            acc = 0.0
            acc2 = 0.0
            for r in range(n_r):
                u = _u01(hkey, idx0 + r)
                nu_r = _trunc_draw(u, a_nu_lo, a_nu_hi, mu_nu, sig_nu, hi - y_q - xi)
                v = y_q + xi + nu_r
                if v > gate:
                    v = gate
                g = _inner_case2(v, h_star, c_nu, c_eps, b_click, e_click, n_click,
                                 e_out, sig_eps, sig_nu)
                acc += g
                acc2 += g * g
            mean = acc / n_r
            total += w1 * mean
            if n_r > 1:
                sv = (acc2 - n_r * mean * mean) / (n_r - 1.0)
                if sv > 0.0:
                    var += w1 * w1 * sv / n_r

        # branches 2 and 3: purchase shock inside the interval; the search
        # shock splits at the drawn purchase shock, conditionally on it
        m_eps = _mass(a_eps_lo, a_eps_hi)
        if m_eps >= MASS_FLOOR:
            idx_eps = idx0 + (1 << SHIFT_BRANCH)
            idx_nu2 = idx0 + (2 << SHIFT_BRANCH)
            f_nu_lo = _cdf_factor(1.0, _a_exp(lo - y_q - xi, mu_nu, sig_nu))
            acc = 0.0
            acc2 = 0.0
            for r in range(n_r):
                u_eps = _u01(hkey, idx_eps + r)
                eps_r = _trunc_draw(u_eps, a_eps_lo, a_eps_hi, mu_eps, sig_eps, hi - y_q)
                a_nu_at_eps = _a_exp(eps_r - xi, mu_nu, sig_nu)
                f_nu_at_eps = math.exp(-a_nu_at_eps)
                x_r = 0.0
                # search shock above the purchase shock: value is the purchase draw
                w3 = 1.0 - f_nu_at_eps
                if w3 > 0.0:
                    v = y_q + eps_r
                    if v > gate:
                        v = gate
                    x_r += w3 * _inner_case2(v, h_star, c_nu, c_eps, b_click,
                                             e_click, n_click, e_out, sig_eps, sig_nu)
                # search shock inside (lo, eps_r]: redraw it conditionally
                w2 = f_nu_at_eps - f_nu_lo
                if w2 >= MASS_FLOOR:
                    u_nu = _u01(hkey, idx_nu2 + r)
                    nu2 = _trunc_draw(u_nu, a_nu_lo, a_nu_at_eps, mu_nu, sig_nu,
                                      eps_r - xi)
                    v = y_q + xi + nu2
                    if v > gate:
                        v = gate
                    x_r += w2 * _inner_case2(v, h_star, c_nu, c_eps, b_click,
                                             e_click, n_click, e_out, sig_eps, sig_nu)
                acc += x_r
                acc2 += x_r * x_r
            mean = acc / n_r
            total += m_eps * mean
            if n_r > 1:
                sv = (acc2 - n_r * mean * mean) / (n_r - 1.0)
                if sv > 0.0:
                    var += m_eps * m_eps * sv / n_r
    return total, var


@njit(cache=True)
def _outside_share_value(
    y, zd, beta0, xi, sig_eps, sig_nu, mu_eps, mu_nu, n_r, hkey, base_idx, directed
):
    """Outside-option demand: case-0 machinery with both shock factors per listing."""
    J = y.shape[0]
    if J == 0:
        return 1.0, 0.0
    loc0 = beta0 + mu_eps
    c_nu = np.zeros(J + 1)
    c_eps = np.zeros(J + 1)
    for j in range(J):
        c_nu[j + 1] = c_nu[j] + math.exp((y[j] + xi + mu_nu) / sig_nu)
        c_eps[j + 1] = c_eps[j] + math.exp((y[j] + mu_eps) / sig_eps)

    total = 0.0
    var = 0.0
    n_s = 1 if directed else J + 1
    for s in range(n_s):
        if directed:
            lo = -math.inf
            hi = math.inf
            h_star = J
        elif s == 0:
            lo = -math.inf
            hi = zd[J]
            h_star = J
        else:
            lo = zd[J - s + 1]
            hi = zd[J - s]
            h_star = J - s + 1
            if h_star > J:
                h_star = J
        a_lo = _a_exp(lo, loc0, sig_eps)
        a_hi = _a_exp(hi, loc0, sig_eps)
        w = _mass(a_lo, a_hi)
        if w < MASS_FLOOR:
            continue
        acc = 0.0
        acc2 = 0.0
        idx0 = base_idx + (s << SHIFT_INTERVAL)
        for r in range(n_r):
            u = _u01(hkey, idx0 + r)
            v = _trunc_draw(u, a_lo, a_hi, loc0, sig_eps, hi)
            t_nu = _a_exp(v, 0.0, sig_nu)
            t_eps = _a_exp(v, 0.0, sig_eps)
            g = _cdf_factor(t_nu, c_nu[h_star]) * _cdf_factor(t_eps, c_eps[h_star])
            acc += g
            acc2 += g * g
        mean = acc / n_r
        total += w * mean
        if n_r > 1:
            sv = (acc2 - n_r * mean * mean) / (n_r - 1.0)
            if sv > 0.0:
                var += w * w * sv / n_r
    return total, var


@njit(cache=True)
def _product_share_value(
    y, q_row, zd, beta0, xi, sig_eps, sig_nu, mu_eps, mu_nu, n_r, hkey, base_idx, directed
):
    """Booking probability of one listing via the case-2 machinery (no clicks observed)."""
    J = y.shape[0]
    clicked = np.zeros(J, dtype=np.bool_)
    clicked[q_row] = True
    # h_bar mirrors the booked position; the unbounded region above the gate is
    # the appended top interval, where draws clamp to the gate.
    return _case2_value(
        y, clicked, q_row, q_row + 1, zd,
        beta0, xi, sig_eps, sig_nu, mu_eps, mu_nu,
        n_r, hkey, base_idx, directed, True,
    )


@njit(cache=True)
def _session_loglik(
    y, clicked, booked_row, h_bar, J,
    beta0, xi, erho, sig_eps, sig_nu, mu_eps, mu_nu,
    xi_nodes, log_h, n_r, hkey, cond, directed, floor_log,
):
    """Heterogeneity-averaged, selection-adjusted log contribution of one session."""
    R = xi_nodes.shape[0]
    zd = np.empty(J + 1)
    num = 0.0
    den = 0.0
    for r in range(R):
        _zd_fill(zd, xi_nodes[r], erho, log_h)
        base = (np.int64(PURPOSE_MAIN) << SHIFT_PURPOSE) + (np.int64(r) << SHIFT_HET)
        if booked_row >= 0:
            val, _ = _case2_value(
                y, clicked, booked_row, h_bar, zd,
                beta0, xi, sig_eps, sig_nu, mu_eps, mu_nu,
                n_r, hkey, base, directed, False,
            )
        else:
            val, _ = _case01_value(
                y, clicked, h_bar, zd,
                beta0, xi, sig_eps, sig_nu, mu_eps, mu_nu,
                n_r, hkey, base, directed,
            )
        num += val
        if cond:
            base_d = (np.int64(PURPOSE_DENOM) << SHIFT_PURPOSE) + (np.int64(r) << SHIFT_HET)
            no_click = np.zeros(J, dtype=np.bool_)
            v0, _ = _case01_value(
                y, no_click, 1, zd,
                beta0, xi, sig_eps, sig_nu, mu_eps, mu_nu,
                n_r, hkey, base_d, directed,
            )
            den += 1.0 - v0
    num /= R
    if num != num or num == math.inf:
        return math.nan
    ll = math.log(num) if num > 0.0 else floor_log
    if cond:
        den /= R
        if den != den:
            return math.nan
        if den <= 1e-12:
            return floor_log
        ll -= math.log(den)
    return ll


@njit(cache=True, parallel=True)
def dataset_loglik(
    y_flat, offsets, clicked_flat, booked_rows, h_bars, cond_flags, consumer_ids,
    beta0, xi, rho, sig_eps, sig_nu, mu_eps, mu_nu,
    xi_nodes, log_h, n_r, seed, directed, floor_log,
):
    """Per-session log contributions for a packed dataset."""
    n = offsets.shape[0] - 1
    out = np.empty(n)
    erho = math.exp(rho)
    for i in prange(n):
        a = offsets[i]
        b = offsets[i + 1]
        hkey = _session_key(seed, consumer_ids[i])
        out[i] = _session_loglik(
            y_flat[a:b], clicked_flat[a:b], booked_rows[i], h_bars[i], b - a,
            beta0, xi, erho, sig_eps, sig_nu, mu_eps, mu_nu,
            xi_nodes, log_h, n_r, hkey, cond_flags[i], directed, floor_log,
        )
    return out


@njit(cache=True)
def _simulate_one(y, u0, z_s, eps, zd):
    """Greedy reservation-value policy for one draw.

    Returns (booked_row or -1, clicked mask, max position discovered, clicks).
    Tie-break: buy/outside beats click beats discover; lowest position wins
    within a class, with the outside option ranked ahead of any buy.
    """
    J = y.shape[0]
    inspected = np.zeros(J, dtype=np.bool_)
    discovered = 1 if J >= 1 else 0
    while True:
        best_val = u0
        best_rank = 0  # 0 = buy/outside, 1 = click, 2 = discover
        best_j = -1
        for j in range(discovered):
            if inspected[j]:
                v = y[j] + eps[j]
                if v > best_val:
                    best_val = v
                    best_rank = 0
                    best_j = j
            else:
                v = z_s[j]
                if v > best_val or (v == best_val and best_rank > 1):
                    best_val = v
                    best_rank = 1
                    best_j = j
        if discovered < J:
            v = zd[discovered]
            if v > best_val:
                best_val = v
                best_rank = 2
                best_j = -2
        if best_rank == 2:
            discovered += 1
        elif best_rank == 1:
            inspected[best_j] = True
        else:
            return best_j, inspected, discovered


@njit(cache=True, parallel=True)
def simulate_outcomes(
    y_flat, offsets, consumer_ids,
    beta0, xi, Xi, rho, sig_eps, sig_nu, mu_eps, mu_nu, sigma_Xi,
    log_h, seed,
):
    """Simulate one search path per session; fills clicked flags and booked rows."""
    n = offsets.shape[0] - 1
    clicked_out = np.zeros(y_flat.shape[0], dtype=np.bool_)
    booked_out = np.full(n, -1, dtype=np.int64)
    maxpos_out = np.zeros(n, dtype=np.int64)
    erho = math.exp(rho)
    base = np.int64(PURPOSE_SIM) << SHIFT_PURPOSE
    for i in prange(n):
        a = offsets[i]
        b = offsets[i + 1]
        J = b - a
        hkey = _session_key(seed, consumer_ids[i])
        u = _u01(hkey, base + 0)
        eps0 = mu_eps - sig_eps * math.log(-math.log(u))
        u0 = beta0 + eps0
        z_s = np.empty(J)
        eps = np.empty(J)
        for j in range(J):
            ue = _u01(hkey, base + 1 + j)
            eps[j] = mu_eps - sig_eps * math.log(-math.log(ue))
            un = _u01(hkey, base + 1 + J + j)
            nu = mu_nu - sig_nu * math.log(-math.log(un))
            z_s[j] = y_flat[a + j] + xi + nu
        Xi_i = Xi
        if sigma_Xi > 0.0:
            ux = _u01(hkey, base + 1 + 2 * J)
            Xi_i = Xi + sigma_Xi * _norm_ppf(ux)
        zd = np.empty(J + 1)
        zd[0] = math.inf
        for h in range(1, J + 1):
            zd[h] = Xi_i - erho * log_h[h]
        booked, inspected, maxpos = _simulate_one(y_flat[a:b], u0, z_s, eps, zd)
        booked_out[i] = booked
        maxpos_out[i] = maxpos
        for j in range(J):
            clicked_out[a + j] = inspected[j]
    return clicked_out, booked_out, maxpos_out


@njit(cache=True)
def _norm_ppf(p):
    """Wichura AS241 rational approximation of the standard normal quantile."""
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        num = (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r
                    + 6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r
                  + 1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r
                + 1.3314166789178437745e2) * r + 3.3871328727963666080e0)
        den = (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r
                    + 3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r
                  + 5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r
                + 4.2313330701600911252e1) * r + 1.0)
        return q * num / den
    if q < 0.0:
        r = p
    else:
        r = 1.0 - p
    r = math.sqrt(-math.log(r))
    if r <= 5.0:
        r = r - 1.6
        num = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r
                    + 2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r
                  + 3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r
                + 4.63033784615654529590e0) * r + 1.42343711074968357734e0)
        den = (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r
                    + 1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r
                  + 6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r
                + 2.05319162663775882187e0) * r + 1.0)
    else:
        r = r - 5.0
        num = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r
                    + 1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r
                  + 2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r
                + 5.46378491116411436990e0) * r + 6.65790464350110377720e0)
        den = (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r
                    + 1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r
                  + 1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r
                + 5.99832206555887937690e-1) * r + 1.0)
    val = num / den
    return -val if q < 0.0 else val


@njit(cache=True, parallel=True)
def demand_all_kernel(
    y, zd, beta0, xi, sig_eps, sig_nu, mu_eps, mu_nu, n_r, seed, consumer_id, het_r, directed
):
    """Outside share plus every product share for one session; returns (J+1, 2)."""
    J = y.shape[0]
    out = np.empty((J + 1, 2))
    hkey = _session_key(seed, consumer_id)
    base0 = (np.int64(PURPOSE_OUTSIDE) << SHIFT_PURPOSE) + (np.int64(het_r) << SHIFT_HET)
    v, s2 = _outside_share_value(
        y, zd, beta0, xi, sig_eps, sig_nu, mu_eps, mu_nu, n_r, hkey, base0, directed
    )
    out[0, 0] = v
    out[0, 1] = s2
    for q in prange(J):
        base_q = (np.int64(PURPOSE_PRODUCT + q) << SHIFT_PURPOSE) + (np.int64(het_r) << SHIFT_HET)
        vq, s2q = _product_share_value(
            y, q, zd, beta0, xi, sig_eps, sig_nu, mu_eps, mu_nu, n_r, hkey, base_q, directed
        )
        out[q + 1, 0] = vq
        out[q + 1, 1] = s2q
    return out
