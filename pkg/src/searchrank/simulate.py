"""Optimal-policy path simulation, synthetic data generation, and fit tables."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from scipy import special

from . import _kernels as K
from .distributions import gumbel_cdf, normal_quantile, sobol_points, uniform01_block
from .model import (
    Alternative,
    ModelParams,
    Session,
    discovery_value,
    discovery_value_grid,
    expected_utility,
    search_cost_from_xi,
)


@dataclass(frozen=True)
class PathDraw:
    """Shocks for one simulated path: eps[0] belongs to the outside option,
    eps[1 + i] and nu[i] to session.alternatives[i]."""

    eps: np.ndarray
    nu: np.ndarray
    Xi_i: float

    def __post_init__(self):
        object.__setattr__(self, "eps", np.asarray(self.eps, dtype=float))
        object.__setattr__(self, "nu", np.asarray(self.nu, dtype=float))
        if self.eps.shape[0] != self.nu.shape[0] + 1:
            raise ValueError("eps must have one more entry than nu (outside shock)")


@dataclass
class SearchPath:
    """Realized action sequence and its cost accounting.

    actions is a tuple of ("discover", position), ("click", index),
    ("buy", index) or ("outside",); a path always ends in buy or outside.
    """

    actions: Tuple
    clicked: frozenset
    booked: Optional[int]
    max_position_discovered: int
    discovery_costs_paid: float
    inspection_costs_paid: float


def path_draw_for(session: Session, p: ModelParams, seed: int) -> PathDraw:
    """The PathDraw simulate_dataset would use for this session id and seed."""
    J = session.n_alternatives
    base = K.PURPOSE_SIM << K.SHIFT_PURPOSE
    u = uniform01_block(seed, session.id, base, 2 * J + 2)
    eps_pos = p.mu_eps - p.sigma_eps * np.log(-np.log(u[: J + 1]))
    nu_pos = p.mu_nu - p.sigma_nu * np.log(-np.log(u[J + 1 : 2 * J + 1]))
    Xi_i = p.Xi
    if p.sigma_Xi > 0.0:
        Xi_i = float(normal_quantile(u[2 * J + 1], p.Xi, p.sigma_Xi))
    # uniforms are laid out in position order; map them back to input order
    order = np.argsort([a.position for a in session.alternatives])
    eps = np.empty(J + 1)
    nu = np.empty(J)
    eps[0] = eps_pos[0]
    for slot, idx in enumerate(order):
        eps[1 + idx] = eps_pos[1 + slot]
        nu[idx] = nu_pos[slot]
    return PathDraw(eps, nu, Xi_i)


def simulate_path(
    session: Session, draw: PathDraw, p: ModelParams, c_d: float = 0.0
) -> SearchPath:
    """Greedy reservation-value policy: repeatedly take the action with the
    largest reservation value until a purchase or the outside option wins.

    Tie-break: buy/outside over click over discover, lowest position within a
    class, outside option first. Free recall is implicit: every revealed
    action stays available.
    """
    J = session.n_alternatives
    if draw.nu.shape[0] != J:
        raise ValueError("draw is not sized to the session")
    order = sorted(range(J), key=lambda i: session.alternatives[i].position)
    y = np.array([expected_utility(session.alternatives[i], p) for i in order])
    eps = np.array([draw.eps[1 + i] for i in order])
    nu = np.array([draw.nu[i] for i in order])
    z_s = y + p.xi + nu
    z_p = y + eps
    zd = discovery_value_grid(J, p, draw.Xi_i)
    u0 = p.beta0 + draw.eps[0]

    actions = []
    inspected = [False] * J
    discovered = 1 if J >= 1 else 0
    while True:
        best_val, best_rank, best_slot = u0, 0, -1  # outside option
        for slot in range(discovered):
            if inspected[slot]:
                if z_p[slot] > best_val:
                    best_val, best_rank, best_slot = z_p[slot], 0, slot
            else:
                v = z_s[slot]
                if v > best_val or (v == best_val and best_rank > 1):
                    best_val, best_rank, best_slot = v, 1, slot
        if discovered < J and zd[discovered] > best_val:
            best_val, best_rank, best_slot = zd[discovered], 2, -2
        if best_rank == 2:
            discovered += 1
            actions.append(("discover", discovered))
        elif best_rank == 1:
            inspected[best_slot] = True
            actions.append(("click", order[best_slot]))
        else:
            if best_slot >= 0:
                actions.append(("buy", order[best_slot]))
                booked = order[best_slot]
            else:
                actions.append(("outside",))
                booked = None
            clicked = frozenset(order[s] for s in range(J) if inspected[s])
            insp_cost = sum(
                search_cost_from_xi(p.xi + nu[s], p) for s in range(J) if inspected[s]
            )
            return SearchPath(
                actions=tuple(actions),
                clicked=clicked,
                booked=booked,
                max_position_discovered=discovered,
                discovery_costs_paid=c_d * max(discovered - 1, 0),
                inspection_costs_paid=float(insp_cost),
            )


def eventual_choice(session: Session, draw: PathDraw, p: ModelParams) -> Optional[int]:
    """argmax of effective values over the outside option and all alternatives.

    This is the closed-form characterization the path simulator must agree
    with draw by draw: the final choice maximizes min(discovery gate, w~).
    """
    best = p.beta0 + draw.eps[0]
    choice = None
    for i, a in enumerate(session.alternatives):
        w = min(
            discovery_value(a.position - 1, p, draw.Xi_i),
            expected_utility(a, p) + min(p.xi + draw.nu[i], draw.eps[1 + i]),
        )
        if w > best:
            best = w
            choice = i
    return choice


def _flatten_templates(templates: Sequence[Session], p: ModelParams):
    rows = []
    offsets = [0]
    ids = []
    max_j = 0
    for s in templates:
        X = s.attribute_matrix()
        rows.append(X @ p.beta if X.size else np.zeros(0))
        offsets.append(offsets[-1] + s.n_alternatives)
        ids.append(s.id)
        max_j = max(max_j, s.n_alternatives)
    y = np.concatenate(rows) if rows else np.zeros(0)
    log_h = np.concatenate(([0.0], np.log(np.arange(1, max_j + 1, dtype=float))))
    return (
        np.ascontiguousarray(y),
        np.array(offsets, dtype=np.int64),
        np.array(ids, dtype=np.int64),
        log_h,
    )


def simulate_dataset(
    templates: Sequence[Session],
    p: ModelParams,
    seed: int,
    keep_only_clickers: bool = False,
) -> list:
    """One simulated path per template; outcomes filled, clickless sessions
    optionally dropped and survivors flagged conditioned_on_click."""
    if not templates:
        return []
    for s in templates:
        if s.clicked or s.booked is not None:
            raise ValueError(f"template session {s.id} already has outcomes")
    y, offsets, ids, log_h = _flatten_templates(templates, p)
    clicked, booked, _ = K.simulate_outcomes(
        y, offsets, ids,
        p.beta0, p.xi, p.Xi, p.rho, p.sigma_eps, p.sigma_nu, p.mu_eps, p.mu_nu,
        p.sigma_Xi, log_h, seed,
    )
    out = []
    for i, s in enumerate(templates):
        a, b = offsets[i], offsets[i + 1]
        order = sorted(range(s.n_alternatives), key=lambda k: s.alternatives[k].position)
        clicked_idx = frozenset(order[slot] for slot in range(b - a) if clicked[a + slot])
        booked_idx = order[booked[i]] if booked[i] >= 0 else None
        if keep_only_clickers and not clicked_idx:
            continue
        out.append(
            Session(
                id=s.id,
                alternatives=s.alternatives,
                clicked=clicked_idx,
                booked=booked_idx,
                conditioned_on_click=keep_only_clickers,
            )
        )
    return out


def stopping_bound(h: int, p: ModelParams, n_het_draws: int = 100) -> float:
    """Upper bound on P(consumer reveals anything past position h): P(U0 > z^d(h)).

    Averages over the discovery-value heterogeneity when sigma_Xi > 0.
    """
    if p.sigma_Xi > 0.0:
        nodes = p.Xi + p.sigma_Xi * special.ndtri(sobol_points(n_het_draws))
    else:
        nodes = np.array([p.Xi])
    out = 0.0
    for Xi_i in nodes:
        zd = math.inf if h <= 0 else Xi_i - math.exp(p.rho) * math.log(h)
        out += 1.0 - gumbel_cdf(zd, p.outside_dist) if math.isfinite(zd) else 0.0
    return out / len(nodes)


# ---------------------------------------------------------------------------
# Synthetic attribute generator
# ---------------------------------------------------------------------------

# Targets are the published hotel-level summary moments (mean, and sd where it
# shapes the draw); the joint distribution is independent across attributes,
# which is an approximation since the true joint is unavailable.
_PRICE_MEAN, _PRICE_SD = 171.70, 114.03
_STAR_PROBS = (0.03, 0.12, 0.40, 0.38, 0.07)       # mean 3.34, sd 0.885 on {1..5}
_REVIEW_MEAN, _REVIEW_SD = 3.969, 0.589            # overall mean 3.81 after zeros
_NO_REVIEWS_MEAN = 0.04
_CHAIN_MEAN = 0.62
_LOCATION_N, _LOCATION_P = 7, 3.26 / 7.0           # integer score 0..7, mean 3.26
_PROMOTION_MEAN = 0.24


def synthetic_alternatives(n: int, rng: np.random.Generator) -> np.ndarray:
    """n attribute rows in the ATTRIBUTE_NAMES layout (price in 100$)."""
    sigma2 = math.log(1.0 + (_PRICE_SD / _PRICE_MEAN) ** 2)
    mu = math.log(_PRICE_MEAN) - sigma2 / 2.0
    price = np.clip(rng.lognormal(mu, math.sqrt(sigma2), n), 10.0, 1000.0)
    stars = rng.choice(np.arange(1.0, 6.0), size=n, p=_STAR_PROBS)
    no_reviews = (rng.random(n) < _NO_REVIEWS_MEAN).astype(float)
    review = np.clip(rng.normal(_REVIEW_MEAN, _REVIEW_SD, n), 0.0, 5.0)
    review = np.where(no_reviews > 0, 0.0, review)
    location = rng.binomial(_LOCATION_N, _LOCATION_P, n).astype(float)
    chain = (rng.random(n) < _CHAIN_MEAN).astype(float)
    promotion = (rng.random(n) < _PROMOTION_MEAN).astype(float)
    return np.column_stack([price / 100.0, stars, review, no_reviews, location, chain, promotion])


def synthetic_sessions(
    n_sessions: int,
    n_alternatives: int,
    seed: int,
    start_id: int = 0,
) -> list:
    """Outcome-free session templates with independently drawn attributes.

    Attributes are i.i.d. across positions, so positions are as-if randomly
    assigned (the randomized-ranking setting the diagnostics rely on).
    """
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n_sessions):
        rows = synthetic_alternatives(n_alternatives, rng)
        alts = [Alternative(rows[j], j + 1) for j in range(n_alternatives)]
        out.append(Session(id=start_id + i, alternatives=alts))
    return out


# ---------------------------------------------------------------------------
# Fit tables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FitPanel:
    n_clicks: int
    mean_click_position: float
    mean_first_click_position: float
    mean_last_click_position: float
    n_bookings: int
    mean_booked_position: float


@dataclass(frozen=True)
class FitReport:
    simulated: FitPanel
    observed: FitPanel

    def rows(self):
        out = []
        for name in (
            "n_clicks", "mean_click_position", "mean_first_click_position",
            "mean_last_click_position", "n_bookings", "mean_booked_position",
        ):
            out.append((name, getattr(self.simulated, name), getattr(self.observed, name)))
        return out


def _fit_panel(sessions: Sequence[Session]) -> FitPanel:
    """Click/booking moments over sessions with at least one click."""
    click_positions = []
    firsts = []
    lasts = []
    booked_positions = []
    n_clicks = 0
    for s in sessions:
        if not s.clicked:
            continue
        pos = sorted(s.alternatives[i].position for i in s.clicked)
        n_clicks += len(pos)
        click_positions.extend(pos)
        firsts.append(pos[0])
        lasts.append(pos[-1])
        if s.booked is not None:
            booked_positions.append(s.alternatives[s.booked].position)
    return FitPanel(
        n_clicks=n_clicks,
        mean_click_position=float(np.mean(click_positions)) if click_positions else math.nan,
        mean_first_click_position=float(np.mean(firsts)) if firsts else math.nan,
        mean_last_click_position=float(np.mean(lasts)) if lasts else math.nan,
        n_bookings=len(booked_positions),
        mean_booked_position=float(np.mean(booked_positions)) if booked_positions else math.nan,
    )


def fit_tables(simulated: Sequence[Session], observed: Sequence[Session]) -> FitReport:
    """Same moment panel computed on both inputs."""
    return FitReport(simulated=_fit_panel(simulated), observed=_fit_panel(observed))
