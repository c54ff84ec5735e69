"""Smooth simulated likelihood: case contributions, partitioning, selection, heterogeneity."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import special

from . import _kernels as K
from .distributions import sobol_points, uniform01_block
from .model import ModelParams, Session, discovery_value_grid

LOG_FLOOR = -1e10


@dataclass(frozen=True)
class LikelihoodConfig:
    """Simulation settings for the likelihood evaluator.

    n_draws_per_interval truncated draws are taken per subinterval; with
    sigma_Xi > 0 the contribution is additionally averaged over
    n_heterogeneity_draws inverse-transform normal nodes from the Sobol
    sequence. condition_on_click divides each contribution by the session's
    probability of producing at least one click.
    """

    n_draws_per_interval: int = 100
    n_heterogeneity_draws: int = 100
    seed: int = 0
    condition_on_click: bool = False
    directed_search: bool = False

    def __post_init__(self):
        if not 1 <= self.n_draws_per_interval <= K.MAX_DRAWS:
            raise ValueError(f"n_draws_per_interval must be in [1, {K.MAX_DRAWS}]")
        if not 1 <= self.n_heterogeneity_draws <= K.MAX_HET:
            raise ValueError(f"n_heterogeneity_draws must be in [1, {K.MAX_HET}]")
        if self.seed < 0:
            raise ValueError("seed must be >= 0")


@dataclass(frozen=True)
class IntervalPartition:
    """Contiguous (lower, upper] subintervals with constant awareness on each."""

    breakpoints: Tuple[float, ...]
    intervals: Tuple[Tuple[float, float], ...]
    awareness_sizes: Tuple[int, ...]

    def __post_init__(self):
        for (lo, hi) in self.intervals:
            if not lo < hi:
                raise ValueError("intervals must have lower < upper")
        for a, b in zip(self.intervals[:-1], self.intervals[1:]):
            if a[1] != b[0]:
                raise ValueError("intervals must be contiguous")


def heterogeneity_nodes(p: ModelParams, cfg: LikelihoodConfig) -> np.ndarray:
    """Discovery-value intercepts to average over; a single node when sigma_Xi = 0."""
    if p.sigma_Xi <= 0.0:
        return np.array([p.Xi])
    u = sobol_points(cfg.n_heterogeneity_draws)
    return p.Xi + p.sigma_Xi * special.ndtri(u)


def awareness_set(
    v: float, session: Session, p: ModelParams, Xi_i: Optional[float] = None
) -> set:
    """Alternative indices discovered when the eventually chosen value is v.

    Scrolling continues through position h while z^d(h) >= v, so the set is the
    position prefix 1..h*; it is constant within each partition subinterval.
    """
    n = session.n_alternatives
    zd = discovery_value_grid(n, p, Xi_i)
    h_star = 1
    while h_star < n and zd[h_star] >= v:
        h_star += 1
    return {i for i, a in enumerate(session.alternatives) if a.position <= h_star}


def max_clicked_position(session: Session) -> int:
    if not session.clicked:
        return 1
    return max(session.alternatives[i].position for i in session.clicked)


def interval_partition(
    session: Session,
    p: ModelParams,
    Xi_i: Optional[float] = None,
    booked_position: Optional[int] = None,
) -> IntervalPartition:
    """Subinterval layout used by the partitioned simulators.

    Breakpoints run from z^d(|J|) up to z^d(h_bar - 1); a booked listing at the
    deepest clicked position appends the unbounded region above the last gate.
    """
    n = session.n_alternatives
    if n == 0:
        return IntervalPartition((), ((-math.inf, math.inf),), (0,))
    h_bar = max_clicked_position(session)
    zd = discovery_value_grid(n, p, Xi_i)
    bps = [zd[h] for h in range(n, h_bar - 2, -1)]
    lows = [-math.inf] + bps[:-1]
    highs = list(bps)
    sizes = [n] + [min(n - s + 1, n) for s in range(1, len(bps))]
    if booked_position is not None and booked_position == h_bar and h_bar >= 2:
        lows.append(zd[h_bar - 1])
        highs.append(math.inf)
        sizes.append(h_bar)
    return IntervalPartition(
        tuple(bps), tuple(zip(lows, highs)), tuple(sizes)
    )


def _session_arrays(session: Session, p: ModelParams):
    X = session.attribute_matrix()
    y = X @ p.beta if X.size else np.zeros(0)
    clicked, booked_row = session.outcome_arrays()
    return np.ascontiguousarray(y), clicked, booked_row


def _case_value_se(
    session: Session,
    p: ModelParams,
    cfg: LikelihoodConfig,
    purpose: int,
    force_no_clicks: bool = False,
) -> Tuple[float, float]:
    """Heterogeneity-averaged partitioned estimate with its MC standard error."""
    y, clicked, booked_row = _session_arrays(session, p)
    if force_no_clicks:
        clicked = np.zeros_like(clicked)
        booked_row = -1
    h_bar = 1 if force_no_clicks else max_clicked_position(session)
    n = session.n_alternatives
    if n + 2 > K.MAX_INTERVALS:
        raise ValueError(f"session {session.id}: too many alternatives ({n})")
    nodes = heterogeneity_nodes(p, cfg)
    hkey = np.uint64(K._session_key(cfg.seed, session.id))
    log_h = np.concatenate(([0.0], np.log(np.arange(1, n + 1, dtype=float)))) if n else np.zeros(1)
    erho = math.exp(p.rho)
    total = 0.0
    var = 0.0
    zd = np.empty(n + 1)
    for r, Xi_i in enumerate(nodes):
        K._zd_fill(zd, Xi_i, erho, log_h)
        base = (np.int64(purpose) << K.SHIFT_PURPOSE) + (np.int64(r) << K.SHIFT_HET)
        if booked_row >= 0:
            val, v2 = K._case2_value(
                y, clicked, booked_row, h_bar, zd,
                p.beta0, p.xi, p.sigma_eps, p.sigma_nu, p.mu_eps, p.mu_nu,
                cfg.n_draws_per_interval, hkey, base, cfg.directed_search, False,
            )
        else:
            val, v2 = K._case01_value(
                y, clicked, h_bar, zd,
                p.beta0, p.xi, p.sigma_eps, p.sigma_nu, p.mu_eps, p.mu_nu,
                cfg.n_draws_per_interval, hkey, base, cfg.directed_search,
            )
        total += val
        var += v2
    R = len(nodes)
    return total / R, math.sqrt(var) / R


def contribution_case0(session: Session, p: ModelParams, cfg: LikelihoodConfig) -> float:
    """No-click contribution: P(no search value ever beats the outside draw)."""
    if session.clicked:
        raise ValueError("case 0 requires an empty clicked set")
    return _case_value_se(session, p, cfg, K.PURPOSE_MAIN)[0]


def contribution_case1(session: Session, p: ModelParams, cfg: LikelihoodConfig) -> float:
    """Clicks-without-booking contribution, integrated over the outside draw."""
    if not session.clicked or session.booked is not None:
        raise ValueError("case 1 requires clicks and no booking")
    return _case_value_se(session, p, cfg, K.PURPOSE_MAIN)[0]


def contribution_case2(session: Session, p: ModelParams, cfg: LikelihoodConfig) -> float:
    """Booking contribution, integrated over the booked listing's value."""
    if session.booked is None:
        raise ValueError("case 2 requires a booked alternative")
    return _case_value_se(session, p, cfg, K.PURPOSE_MAIN)[0]


def contribution(session: Session, p: ModelParams, cfg: LikelihoodConfig) -> float:
    """Case-dispatched raw contribution (no selection adjustment)."""
    return _case_value_se(session, p, cfg, K.PURPOSE_MAIN)[0]


def contribution_se(session: Session, p: ModelParams, cfg: LikelihoodConfig):
    return _case_value_se(session, p, cfg, K.PURPOSE_MAIN)


def click_probability(session: Session, p: ModelParams, cfg: LikelihoodConfig) -> float:
    """P(at least one click) for the session's environment, on dedicated draw indices."""
    v0, _ = _case_value_se(session, p, cfg, K.PURPOSE_DENOM, force_no_clicks=True)
    return 1.0 - v0


def selection_adjust(
    raw: float, session: Session, p: ModelParams, cfg: LikelihoodConfig
) -> float:
    """Divide by the at-least-one-click probability; degenerate sessions floor out."""
    if raw == 0.0:
        return 0.0
    den = click_probability(session, p, cfg)
    if den <= 1e-12:
        return 0.0  # caller's log floors at LOG_FLOOR
    return raw / den


class PackedSessions:
    """Dataset flattened for the numba evaluator; build once, evaluate per theta."""

    def __init__(self, sessions: Sequence[Session]):
        if not sessions:
            self.n = 0
            return
        self.n = len(sessions)
        self.sessions = list(sessions)
        k = sessions[0].alternatives[0].attributes.shape[0] if sessions[0].alternatives else 0
        rows = []
        offsets = [0]
        clicked = []
        booked = []
        h_bars = []
        cond = []
        ids = []
        max_j = 0
        for s in sessions:
            X = s.attribute_matrix()
            if X.shape[0] and X.shape[1] != k:
                raise ValueError("inconsistent attribute layout across sessions")
            j = s.n_alternatives
            if j + 2 > K.MAX_INTERVALS:
                raise ValueError(f"session {s.id}: too many alternatives ({j})")
            max_j = max(max_j, j)
            rows.append(X)
            offsets.append(offsets[-1] + j)
            cmask, brow = s.outcome_arrays()
            clicked.append(cmask)
            booked.append(brow)
            h_bars.append(max_clicked_position(s))
            cond.append(s.conditioned_on_click)
            ids.append(s.id)
        self.X = np.vstack([r for r in rows if r.size]) if offsets[-1] else np.zeros((0, k))
        self.offsets = np.array(offsets, dtype=np.int64)
        self.clicked = np.concatenate(clicked) if clicked else np.zeros(0, dtype=bool)
        self.booked = np.array(booked, dtype=np.int64)
        self.h_bars = np.array(h_bars, dtype=np.int64)
        self.cond = np.array(cond, dtype=bool)
        self.ids = np.array(ids, dtype=np.int64)
        self.log_h = np.concatenate(([0.0], np.log(np.arange(1, max_j + 1, dtype=float))))

    def session_logliks(self, p: ModelParams, cfg: LikelihoodConfig) -> np.ndarray:
        if self.n == 0:
            return np.zeros(0)
        y = np.ascontiguousarray(self.X @ p.beta)
        nodes = heterogeneity_nodes(p, cfg)
        cond = self.cond | cfg.condition_on_click
        out = K.dataset_loglik(
            y, self.offsets, self.clicked, self.booked, self.h_bars, cond, self.ids,
            p.beta0, p.xi, p.rho, p.sigma_eps, p.sigma_nu, p.mu_eps, p.mu_nu,
            nodes, self.log_h, cfg.n_draws_per_interval, cfg.seed,
            cfg.directed_search, LOG_FLOOR,
        )
        bad = np.flatnonzero(~np.isfinite(out))
        if bad.size:
            raise ValueError(
                f"non-finite likelihood contribution for session id {self.ids[bad[0]]}"
            )
        return out

    def loglik(self, p: ModelParams, cfg: LikelihoodConfig) -> float:
        return float(np.sum(self.session_logliks(p, cfg)))


def session_log_likelihoods(
    dataset: Sequence[Session], p: ModelParams, cfg: LikelihoodConfig
) -> np.ndarray:
    """Per-session log contributions in dataset order."""
    return PackedSessions(dataset).session_logliks(p, cfg)


def log_likelihood(dataset: Sequence[Session], p: ModelParams, cfg: LikelihoodConfig) -> float:
    """Sum of case-dispatched, selection-adjusted, heterogeneity-averaged logs."""
    if not dataset:
        return 0.0
    return PackedSessions(dataset).loglik(p, cfg)


# ---------------------------------------------------------------------------
# Crude frequency simulator: the slow unpartitioned oracle the partitioned
# estimators are tested against. Draws the integration variable from its full
# distribution and averages the same integrand.
# ---------------------------------------------------------------------------

def _awareness_prefix_index(v: np.ndarray, zd: np.ndarray, n: int) -> np.ndarray:
    """h*(v) for each draw: 1 + #(h in 1..n-1 with z^d(h) >= v)."""
    if n <= 1:
        return np.ones(v.shape[0], dtype=np.int64)
    desc = zd[1:n]
    count = np.searchsorted(-desc, -v, side="right")
    return 1 + count


def _crude_inner(
    v: np.ndarray, session: Session, p: ModelParams, zd: np.ndarray,
    exclude_row: int, compare_all: bool,
) -> np.ndarray:
    """Inner product at each v: awareness-prefix CDFs plus clicked-set factors."""
    y, clicked, _ = _session_arrays(session, p)
    n = y.shape[0]
    h_star = _awareness_prefix_index(v, zd, n)
    b = np.exp((y + p.xi + p.mu_nu) / p.sigma_nu)
    e = np.exp((y + p.mu_eps) / p.sigma_eps)
    unclicked = np.ones(n, dtype=bool) if compare_all else ~clicked
    if exclude_row >= 0:
        unclicked = unclicked.copy()
        unclicked[exclude_row] = False
    c_nu = np.concatenate(([0.0], np.cumsum(np.where(unclicked, b, 0.0))))
    c_eps = np.concatenate(([0.0], np.cumsum(np.where(unclicked, e, 0.0))))
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        t_nu = np.exp(-v / p.sigma_nu)
        t_eps = np.exp(-v / p.sigma_eps)
        g = np.exp(-np.where(c_nu[h_star] > 0, t_nu * c_nu[h_star], 0.0))
        if compare_all:
            g = g * np.exp(-np.where(c_eps[h_star] > 0, t_eps * c_eps[h_star], 0.0))
        else:
            for j in np.flatnonzero(clicked):
                if j == exclude_row:
                    continue
                g = g * (1.0 - np.exp(-t_nu * b[j])) * np.exp(-t_eps * e[j])
    return g


def crude_contribution(
    session: Session,
    p: ModelParams,
    n_draws: int,
    seed: int = 0,
    kind: str = "auto",
    q: Optional[int] = None,
    Xi_i: Optional[float] = None,
) -> Tuple[float, float]:
    """Unpartitioned Monte Carlo oracle: (estimate, standard error).

    Draws the integration variable from its full distribution, zeroes draws
    beyond the case bound, and averages the same integrand the partitioned
    simulators use. kind 'auto' dispatches on the observed outcome; 'outside'
    and 'product' give the demand integrands (every listing compared, outside
    option factored in). Heterogeneity is the caller's job: pass Xi_i per node.
    """
    n = session.n_alternatives
    zd = discovery_value_grid(n, p, Xi_i)
    y, clicked, booked_row = _session_arrays(session, p)
    if kind == "auto":
        kind = "case2" if booked_row >= 0 else ("case1" if clicked.any() else "case0")
    h_bar = max_clicked_position(session)
    loc0 = p.beta0 + p.mu_eps

    if kind in ("case0", "case1", "outside"):
        if kind == "case0" and clicked.any():
            raise ValueError("case0 oracle needs a click-free session")
        u = uniform01_block(seed, session.id, 0, n_draws)
        v = loc0 - p.sigma_eps * np.log(-np.log(u))
        bound = math.inf if kind in ("case0", "outside") else zd[h_bar - 1]
        g = _crude_inner(v, session, p, zd, -1, kind == "outside")
        vals = np.where(v <= bound, g, 0.0)
    elif kind in ("case2", "product"):
        q_row = booked_row if kind == "case2" else int(q)
        if q_row < 0:
            raise ValueError("case2/product needs a booked or target row")
        pos_q = q_row + 1
        gate = zd[pos_q - 1] if pos_q >= 2 else math.inf
        u1 = uniform01_block(seed, session.id, 0, n_draws)
        u2 = uniform01_block(seed, session.id, n_draws, n_draws)
        eps_q = p.mu_eps - p.sigma_eps * np.log(-np.log(u1))
        nu_q = p.mu_nu - p.sigma_nu * np.log(-np.log(u2))
        w_tilde = y[q_row] + np.minimum(p.xi + nu_q, eps_q)
        bound = zd[h_bar - 1] if (kind == "case2" and pos_q < h_bar) else math.inf
        v = np.minimum(w_tilde, gate)  # effective value of the booked listing
        g = _crude_inner(v, session, p, zd, q_row, kind == "product")
        g = g * np.exp(-np.exp(-(v - loc0) / p.sigma_eps))
        vals = np.where(w_tilde <= bound, g, 0.0)
    else:
        raise ValueError(f"unknown kind {kind!r}")
    est = float(np.mean(vals))
    se = float(np.std(vals, ddof=1) / math.sqrt(n_draws))
    return est, se
