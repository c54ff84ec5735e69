"""Ranking constructors, brute-force revenue maximizer, welfare-optimality checks, reports."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from .demand import (
    CounterfactualConfig,
    demand_all,
    draw_tensor,
    path_metrics,
    product_share,
)
from .model import Alternative, ModelParams, Session, expected_utility, utils_to_dollars

MAX_BRUTEFORCE = 8
MAX_ENUMERATION = 6


@dataclass(frozen=True)
class Ranking:
    """Ordering of a session's alternatives: permutation[k] sits at position k+1."""

    permutation: Tuple[int, ...]

    def __post_init__(self):
        n = len(self.permutation)
        if sorted(self.permutation) != list(range(n)):
            raise ValueError("permutation must be a bijection of 0..n-1")


def apply_ranking(session: Session, ranking: Ranking) -> Session:
    """Environment with positions reassigned; outcomes are dropped."""
    if len(ranking.permutation) != session.n_alternatives:
        raise ValueError("ranking size does not match session")
    alts = list(session.alternatives)
    new = [None] * len(alts)
    for slot, idx in enumerate(ranking.permutation):
        new[idx] = Alternative(alts[idx].attributes, slot + 1)
    return Session(id=session.id, alternatives=new)


def identity_ranking(session: Session) -> Ranking:
    order = sorted(range(session.n_alternatives), key=lambda i: session.alternatives[i].position)
    return Ranking(tuple(order))


def rank_utility(session: Session, p: ModelParams) -> Ranking:
    """Decreasing expected utility; welfare- and bookings-maximizing."""
    ue = [expected_utility(a, p) for a in session.alternatives]
    order = sorted(range(len(ue)), key=lambda i: -ue[i])
    return Ranking(tuple(order))


def rank_utility_asc(session: Session, p: ModelParams) -> Ranking:
    """Increasing expected utility; the consumer's worst case."""
    ue = [expected_utility(a, p) for a in session.alternatives]
    order = sorted(range(len(ue)), key=lambda i: ue[i])
    return Ranking(tuple(order))


def rank_price_desc(session: Session, p: ModelParams) -> Ranking:
    """Most expensive first."""
    prices = [a.attributes[0] for a in session.alternatives]
    order = sorted(range(len(prices)), key=lambda i: -prices[i])
    return Ranking(tuple(order))


def random_ranking(session: Session, rng: np.random.Generator) -> Ranking:
    return Ranking(tuple(int(i) for i in rng.permutation(session.n_alternatives)))


def session_revenue(session_env: Session, p: ModelParams, cfg: CounterfactualConfig) -> float:
    """Expected revenue in $: sum of price times booking probability."""
    d = demand_all(session_env, p, cfg)
    prices = np.array([a.attributes[0] * 100.0 for a in session_env.alternatives])
    return float(np.dot(prices, d.shares[1:]))


def rank_r1r(session: Session, p: ModelParams, cfg: CounterfactualConfig) -> Ranking:
    """Order by the revenue each listing would generate on position 1, with the
    remaining listings kept in input order below it."""
    n = session.n_alternatives
    base = list(identity_ranking(session).permutation)
    revenue_at_top = []
    for i in range(n):
        perm = [base[i]] + [b for b in base if b != base[i]]
        env = apply_ranking(session, Ranking(tuple(perm)))
        share = product_share(env, base[i], p, cfg)
        price = session.alternatives[base[i]].attributes[0] * 100.0
        revenue_at_top.append(price * share)
    order = sorted(range(n), key=lambda k: -revenue_at_top[k])
    return Ranking(tuple(base[k] for k in order))


def rank_bur(session: Session, p: ModelParams, cfg: CounterfactualConfig) -> Ranking:
    """Bottom-up: fill the last position with the revenue-maximizing listing
    (given the others above it in input order), then the second to last, etc.

    A listing's demand at a position depends only on the set shown above it,
    so each fixed slot's revenue is final once chosen.
    """
    n = session.n_alternatives
    base = list(identity_ranking(session).permutation)
    unassigned = list(base)
    fixed: list = []
    for slot in range(n, 0, -1):
        best_idx = None
        best_rev = -math.inf
        for c in unassigned:
            above = [u for u in unassigned if u != c]
            perm = tuple(above + [c] + fixed)
            env = apply_ranking(session, Ranking(perm))
            share = product_share(env, c, p, cfg)
            rev = session.alternatives[c].attributes[0] * 100.0 * share
            if rev > best_rev:
                best_rev = rev
                best_idx = c
        fixed.insert(0, best_idx)
        unassigned.remove(best_idx)
    return Ranking(tuple(fixed))


def rank_bruteforce_revenue(
    session: Session, p: ModelParams, cfg: CounterfactualConfig
) -> Ranking:
    """Exact revenue argmax over all permutations; refuses n > 8."""
    n = session.n_alternatives
    if n > MAX_BRUTEFORCE:
        raise ValueError(f"brute force limited to {MAX_BRUTEFORCE} alternatives, got {n}")
    best_perm = None
    best_rev = -math.inf
    for perm in itertools.permutations(range(n)):
        env = apply_ranking(session, Ranking(perm))
        rev = session_revenue(env, p, cfg)
        if rev > best_rev:
            best_rev = rev
            best_perm = perm
    return Ranking(best_perm)


@dataclass(frozen=True)
class VerificationReport:
    """Full-enumeration check that the utility ranking tops welfare and demand."""

    n_alternatives: int
    n_permutations: int
    ur_welfare: float
    max_welfare: float
    ur_purchase_probability: float
    max_purchase_probability: float
    tolerance: float

    @property
    def ur_attains_max_welfare(self) -> bool:
        return self.ur_welfare >= self.max_welfare - self.tolerance

    @property
    def ur_attains_max_purchase(self) -> bool:
        return self.ur_purchase_probability >= self.max_purchase_probability - self.tolerance


def verify_proposition1(
    session: Session,
    p: ModelParams,
    cfg: CounterfactualConfig,
    c_d: float = 0.0,
    tolerance: float = 1e-12,
) -> VerificationReport:
    """Enumerate every permutation with one shared draw tensor (draws attached
    to position slots) and compare welfare and total purchase probability."""
    n = session.n_alternatives
    if n > MAX_ENUMERATION:
        raise ValueError(f"enumeration limited to {MAX_ENUMERATION} alternatives, got {n}")
    t = draw_tensor(n, p, cfg.n_welfare_draws, cfg.seed, session.id)
    y_all = np.array([expected_utility(a, p) for a in session.alternatives])
    prices = np.array([a.attributes[0] * 100.0 for a in session.alternatives])
    ur = rank_utility(session, p).permutation

    max_w = -math.inf
    max_b = -math.inf
    ur_w = math.nan
    ur_b = math.nan
    for perm in itertools.permutations(range(n)):
        m = path_metrics(y_all[list(perm)], prices[list(perm)], p, t, c_d)
        w = float(np.mean(m.welfare_path))
        b = float(np.mean(m.booked))
        if perm == ur:
            ur_w, ur_b = w, b
        max_w = max(max_w, w)
        max_b = max(max_b, b)
    return VerificationReport(
        n_alternatives=n,
        n_permutations=math.factorial(n),
        ur_welfare=ur_w,
        max_welfare=max_w,
        ur_purchase_probability=ur_b,
        max_purchase_probability=max_b,
        tolerance=tolerance,
    )


# ---------------------------------------------------------------------------
# Population-level ranking comparison
# ---------------------------------------------------------------------------

RANKING_BUILDERS: Dict[str, str] = {
    "ur": "utility-based",
    "pr": "price-decreasing",
    "inv-ur": "inverse utility-based",
    "r1r": "position-1 revenue",
    "bur": "bottom-up revenue",
    "bf": "brute-force revenue",
}


@dataclass
class _Aggregate:
    revenue: float = 0.0
    transactions: float = 0.0
    clicks: float = 0.0
    welfare_utils: float = 0.0
    booked_util_num: float = 0.0     # E[chosen utility ; booked] summed over sessions
    discovery_num: float = 0.0       # E[discovery cost ; booked] summed
    booked_prob_sum: float = 0.0     # tensor booking probability summed

    def add(self, other: "_Aggregate"):
        self.revenue += other.revenue
        self.transactions += other.transactions
        self.clicks += other.clicks
        self.welfare_utils += other.welfare_utils
        self.booked_util_num += other.booked_util_num
        self.discovery_num += other.discovery_num
        self.booked_prob_sum += other.booked_prob_sum

    def scale(self, f: float):
        self.revenue *= f
        self.transactions *= f
        self.clicks *= f
        self.welfare_utils *= f
        self.booked_util_num *= f
        self.discovery_num *= f
        self.booked_prob_sum *= f


@dataclass(frozen=True)
class RankingEffects:
    total_revenue_pct_change: float
    transactions_pct_change: float
    avg_booked_price_pct_change: float
    clicks_pct_change: float
    welfare_per_consumer_dollars: float
    welfare_per_booking_dollars: float
    booked_utility_dollars: float
    discovery_costs_dollars: float


@dataclass(frozen=True)
class RankingReport:
    """Per-ranking effects relative to a shared randomized baseline."""

    n_sessions: int
    n_randomizations: int
    baseline_revenue: float
    baseline_transactions: float
    baseline_clicks: float
    baseline_welfare_dollars: float
    effects: Dict[str, RankingEffects]

    def rows(self):
        out = []
        for name, e in self.effects.items():
            out.append((
                name,
                e.total_revenue_pct_change, e.transactions_pct_change,
                e.avg_booked_price_pct_change, e.clicks_pct_change,
                e.welfare_per_consumer_dollars, e.welfare_per_booking_dollars,
                e.booked_utility_dollars, e.discovery_costs_dollars,
            ))
        return out


def _session_aggregate(
    session: Session, perm: Ranking, p: ModelParams, cfg: CounterfactualConfig,
    tensor, y_all, prices_all, c_d: float,
) -> _Aggregate:
    order = list(perm.permutation)
    env = apply_ranking(session, perm)
    d = demand_all(env, p, cfg)
    prices_env = np.array([a.attributes[0] * 100.0 for a in env.alternatives])
    rev = float(np.dot(prices_env, d.shares[1:]))
    trans = 1.0 - d.shares[0]
    m = path_metrics(y_all[order], prices_all[order], p, tensor, c_d)
    booked = m.booked
    return _Aggregate(
        revenue=rev,
        transactions=trans,
        clicks=float(np.mean(m.n_clicks)),
        welfare_utils=float(np.mean(m.welfare_path)),
        booked_util_num=float(np.mean(np.where(booked, m.chosen_utility, 0.0))),
        discovery_num=float(np.mean(np.where(booked, m.discovery_costs, 0.0))),
        booked_prob_sum=float(np.mean(booked)),
    )


def compare_rankings(
    dataset: Sequence[Session],
    p: ModelParams,
    cfg: CounterfactualConfig,
    rankings: Sequence[str] = ("ur", "r1r", "bur", "pr", "inv-ur"),
    n_randomizations: int = 100,
    c_d: float = 0.0,
) -> RankingReport:
    """Aggregate revenue/transaction/click/welfare effects of named rankings,
    relative to a randomized baseline averaged over n_randomizations draws.

    All rankings of a session reuse one position-attached draw tensor, so the
    comparison is paired draw by draw.
    """
    for name in rankings:
        if name not in RANKING_BUILDERS:
            raise ValueError(f"unknown ranking {name!r}; choose from {sorted(RANKING_BUILDERS)}")
    base_agg = _Aggregate()
    aggs = {name: _Aggregate() for name in rankings}
    for session in dataset:
        n = session.n_alternatives
        tensor = draw_tensor(n, p, cfg.n_welfare_draws, cfg.seed, session.id)
        y_all = np.array([expected_utility(a, p) for a in session.alternatives])
        prices_all = np.array([a.attributes[0] * 100.0 for a in session.alternatives])
        sess_base = _Aggregate()
        for b in range(n_randomizations):
            rng = np.random.default_rng((cfg.seed, session.id, b))
            sess_base.add(_session_aggregate(
                session, random_ranking(session, rng), p, cfg, tensor, y_all, prices_all, c_d
            ))
        sess_base.scale(1.0 / n_randomizations)
        base_agg.add(sess_base)
        for name in rankings:
            perm = _build_ranking(name, session, p, cfg)
            aggs[name].add(_session_aggregate(
                session, perm, p, cfg, tensor, y_all, prices_all, c_d
            ))

    n_sessions = len(dataset)
    effects = {}
    for name in rankings:
        a = aggs[name]
        b = base_agg
        avg_price_a = a.revenue / a.transactions if a.transactions > 0 else math.nan
        avg_price_b = b.revenue / b.transactions if b.transactions > 0 else math.nan
        d_welfare = utils_to_dollars(a.welfare_utils - b.welfare_utils, p)
        booked_util_a = a.booked_util_num / a.booked_prob_sum if a.booked_prob_sum > 0 else math.nan
        booked_util_b = b.booked_util_num / b.booked_prob_sum if b.booked_prob_sum > 0 else math.nan
        disc_a = a.discovery_num / a.booked_prob_sum if a.booked_prob_sum > 0 else math.nan
        disc_b = b.discovery_num / b.booked_prob_sum if b.booked_prob_sum > 0 else math.nan
        effects[name] = RankingEffects(
            total_revenue_pct_change=_pct(a.revenue, b.revenue),
            transactions_pct_change=_pct(a.transactions, b.transactions),
            avg_booked_price_pct_change=_pct(avg_price_a, avg_price_b),
            clicks_pct_change=_pct(a.clicks, b.clicks),
            welfare_per_consumer_dollars=d_welfare / n_sessions,
            welfare_per_booking_dollars=d_welfare / a.transactions if a.transactions > 0 else math.nan,
            booked_utility_dollars=utils_to_dollars(booked_util_a - booked_util_b, p),
            discovery_costs_dollars=utils_to_dollars(disc_a - disc_b, p),
        )
    return RankingReport(
        n_sessions=n_sessions,
        n_randomizations=n_randomizations,
        baseline_revenue=base_agg.revenue,
        baseline_transactions=base_agg.transactions,
        baseline_clicks=base_agg.clicks,
        baseline_welfare_dollars=utils_to_dollars(base_agg.welfare_utils, p),
        effects=effects,
    )


def _pct(a: float, b: float) -> float:
    if b == 0:
        return math.nan
    return (a - b) / abs(b) * 100.0


def _build_ranking(name: str, session: Session, p: ModelParams, cfg: CounterfactualConfig) -> Ranking:
    if name == "ur":
        return rank_utility(session, p)
    if name == "pr":
        return rank_price_desc(session, p)
    if name == "inv-ur":
        return rank_utility_asc(session, p)
    if name == "r1r":
        return rank_r1r(session, p, cfg)
    if name == "bur":
        return rank_bur(session, p, cfg)
    if name == "bf":
        return rank_bruteforce_revenue(session, p, cfg)
    raise ValueError(name)


@dataclass(frozen=True)
class HeuristicGapReport:
    """Heuristics' revenue relative to the brute-force maximum across instances."""

    n_instances: int
    mean_pct_change: Dict[str, float]
    pct_with_decrease: Dict[str, float]


def heuristic_gap_report(
    instances: Sequence[Session],
    p: ModelParams,
    cfg: CounterfactualConfig,
    heuristics: Sequence[str] = ("ur", "bur", "r1r"),
) -> HeuristicGapReport:
    """Revenue changes of each heuristic vs brute force, instance by instance."""
    pct_changes = {h: [] for h in heuristics}
    decreases = {h: 0 for h in heuristics}
    for session in instances:
        bf = rank_bruteforce_revenue(session, p, cfg)
        rev_bf = session_revenue(apply_ranking(session, bf), p, cfg)
        for h in heuristics:
            perm = _build_ranking(h, session, p, cfg)
            rev = session_revenue(apply_ranking(session, perm), p, cfg)
            pct_changes[h].append(_pct(rev, rev_bf))
            if rev < rev_bf - 1e-12:
                decreases[h] += 1
    n = len(instances)
    return HeuristicGapReport(
        n_instances=n,
        mean_pct_change={h: float(np.mean(pct_changes[h])) for h in heuristics},
        pct_with_decrease={h: 100.0 * decreases[h] / n for h in heuristics},
    )
