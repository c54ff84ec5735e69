"""Structural parameters, session data model, reservation values, and cost inversions."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .distributions import (
    GumbelParams,
    gumbel_partial_expectation,
    uniform01_block,
)

# Attribute layout shared by Alternative.attributes and ModelParams.beta.
# Prices enter in units of 100$.
ATTRIBUTE_NAMES = (
    "price_100",
    "star_rating",
    "review_score",
    "no_reviews",
    "location_score",
    "chain",
    "promotion",
)

# One listing revealed per scroll, one listing known on arrival. The likelihood
# partition and awareness logic assume both; generalizing them is the single
# extension point if batched discovery is ever needed.
N_DISCOVERED_PER_SCROLL = 1
INITIAL_AWARENESS_SIZE = 1

# Parameters pinned by normalization; never estimated.
NORMALIZED_PARAMETERS = ("mu_eps", "mu_nu", "sigma_nu")


@dataclass(frozen=True)
class ModelParams:
    """All structural parameters, in utils unless noted.

    beta[0] is the price coefficient (price in 100$), beta0 the outside-option
    mean utility, xi the mean search-value shifter, Xi the initial discovery
    value and rho its log decay rate. sigma_Xi = 0 recovers the baseline model
    without consumer heterogeneity.
    """

    beta: np.ndarray
    beta0: float
    xi: float
    Xi: float
    rho: float
    sigma_eps: float = 1.0
    sigma_nu: float = 1.0
    mu_eps: float = 0.0
    mu_nu: float = 0.0
    sigma_Xi: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "beta", np.asarray(self.beta, dtype=float))
        if not (self.sigma_eps > 0.0 and self.sigma_nu > 0.0):
            raise ValueError("sigma_eps and sigma_nu must be > 0")
        if self.sigma_Xi < 0.0:
            raise ValueError("sigma_Xi must be >= 0")

    @property
    def eps_dist(self) -> GumbelParams:
        return GumbelParams(self.mu_eps, self.sigma_eps)

    @property
    def nu_dist(self) -> GumbelParams:
        return GumbelParams(self.mu_nu, self.sigma_nu)

    @property
    def outside_dist(self) -> GumbelParams:
        """Distribution of the outside-option utility beta0 + eps."""
        return GumbelParams(self.beta0 + self.mu_eps, self.sigma_eps)

    def replace(self, **kw) -> "ModelParams":
        cur = {
            "beta": self.beta.copy(), "beta0": self.beta0, "xi": self.xi,
            "Xi": self.Xi, "rho": self.rho, "sigma_eps": self.sigma_eps,
            "sigma_nu": self.sigma_nu, "mu_eps": self.mu_eps,
            "mu_nu": self.mu_nu, "sigma_Xi": self.sigma_Xi,
        }
        cur.update(kw)
        return ModelParams(**cur)


@dataclass(frozen=True)
class Alternative:
    """One listed product: attribute vector (price in 100$ first) plus list position."""

    attributes: np.ndarray
    position: int

    def __post_init__(self):
        object.__setattr__(self, "attributes", np.asarray(self.attributes, dtype=float))
        if self.position < 1:
            raise ValueError("position must be >= 1")


@dataclass
class Session:
    """One consumer's environment and observed outcome.

    clicked holds indices into `alternatives` (the consideration set minus the
    outside option); booked, when present, must be one of them.
    """

    id: int
    alternatives: Sequence[Alternative]
    clicked: frozenset = field(default_factory=frozenset)
    booked: Optional[int] = None
    conditioned_on_click: bool = False

    def __post_init__(self):
        self.alternatives = tuple(self.alternatives)
        self.clicked = frozenset(self.clicked)
        n = len(self.alternatives)
        positions = sorted(a.position for a in self.alternatives)
        if positions != list(range(1, n + 1)):
            raise ValueError(f"session {self.id}: positions must form 1..{n} without gaps")
        if any(j < 0 or j >= n for j in self.clicked):
            raise ValueError(f"session {self.id}: clicked index out of range")
        if self.booked is not None and self.booked not in self.clicked:
            raise ValueError(f"session {self.id}: booked must be a clicked index")
        if self.conditioned_on_click and not self.clicked:
            raise ValueError(f"session {self.id}: conditioned_on_click requires >= 1 click")

    @property
    def n_alternatives(self) -> int:
        return len(self.alternatives)

    def attribute_matrix(self) -> np.ndarray:
        """Rows in position order (position 1 first); empty sessions give (0, k)."""
        alts = sorted(self.alternatives, key=lambda a: a.position)
        if not alts:
            return np.zeros((0, 0))
        return np.vstack([a.attributes for a in alts])

    def outcome_arrays(self):
        """(clicked flags, booked slot) aligned with attribute_matrix row order."""
        alts = sorted(enumerate(self.alternatives), key=lambda t: t[1].position)
        clicked = np.array([i in self.clicked for i, _ in alts], dtype=bool)
        booked = -1
        for row, (i, _) in enumerate(alts):
            if self.booked is not None and i == self.booked:
                booked = row
        return clicked, booked


@dataclass(frozen=True)
class BeliefDistribution:
    """Pooled attribute rows standing in for beliefs about undiscovered listings."""

    attribute_rows: np.ndarray
    reference_position: int

    def __post_init__(self):
        rows = np.asarray(self.attribute_rows, dtype=float)
        if rows.size == 0:
            raise ValueError("belief distribution needs at least one attribute row")
        object.__setattr__(self, "attribute_rows", rows)


def pooled_beliefs(sessions: Sequence[Session]) -> BeliefDistribution:
    """Pool all observed alternatives; reference position is the mean rank, rounded down."""
    rows = []
    positions = []
    for s in sessions:
        for a in s.alternatives:
            rows.append(a.attributes)
            positions.append(a.position)
    if not rows:
        raise ValueError("no alternatives in sessions")
    return BeliefDistribution(np.vstack(rows), int(math.floor(np.mean(positions))))


def expected_utility(a: Alternative, p: ModelParams) -> float:
    """Mean utility dot(beta, attributes); price enters through beta[0] < 0 in practice."""
    if a.attributes.shape != p.beta.shape:
        raise ValueError(
            f"attribute length {a.attributes.shape} != beta length {p.beta.shape}"
        )
    return float(np.dot(p.beta, a.attributes))


def discovery_value(h: int, p: ModelParams, Xi_i: Optional[float] = None) -> float:
    """Reservation value of revealing the listing after position h; h <= 0 is free."""
    if h <= 0:
        return math.inf
    xi0 = p.Xi if Xi_i is None else Xi_i
    return xi0 - math.exp(p.rho) * math.log(h)


def discovery_value_grid(n: int, p: ModelParams, Xi_i: Optional[float] = None) -> np.ndarray:
    """z^d(h) for h = 0..n as an array, with the h = 0 entry at +inf."""
    xi0 = p.Xi if Xi_i is None else Xi_i
    out = np.empty(n + 1)
    out[0] = math.inf
    if n >= 1:
        out[1:] = xi0 - math.exp(p.rho) * np.log(np.arange(1, n + 1, dtype=float))
    return out


def search_value(a: Alternative, nu: float, p: ModelParams) -> float:
    """Reservation value of clicking: expected utility plus xi + nu."""
    return expected_utility(a, p) + p.xi + nu


def purchase_value(a: Alternative, eps: float, p: ModelParams) -> float:
    """Reservation value of buying an inspected listing: its realized utility."""
    return expected_utility(a, p) + eps


def w_tilde(a: Alternative, eps: float, nu: float, p: ModelParams) -> float:
    """min of search and purchase values; the discovery-free effective value."""
    return min(search_value(a, nu, p), purchase_value(a, eps, p))


def effective_value(
    a: Alternative, eps: float, nu: float, p: ModelParams, Xi_i: Optional[float] = None
) -> float:
    """w_tilde capped by the discovery value gating the listing's position."""
    return min(discovery_value(a.position - 1, p, Xi_i), w_tilde(a, eps, nu, p))


def search_cost_from_xi(xi_ij: float, p: ModelParams) -> float:
    """Inspection cost implied by a search-value shifter (upper partial expectation)."""
    return gumbel_partial_expectation(xi_ij, GumbelParams(0.0, p.sigma_eps))


def xi_from_search_cost(c: float, p: ModelParams, tol: float = 1e-10) -> float:
    """Invert search_cost_from_xi by bracketing + bisection; c <= 0 maps to +inf."""
    if c <= 0.0:
        return math.inf
    dist = GumbelParams(0.0, p.sigma_eps)

    def f(x):
        return gumbel_partial_expectation(x, dist) - c

    lo, hi = -1.0, 1.0
    while f(lo) < 0.0:
        lo *= 2.0
        if lo < -1e12:
            return math.inf
    while f(hi) > 0.0:
        hi *= 2.0
        if hi > 1e12:
            return -math.inf
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def discovery_cost_backout(
    zd: float,
    beliefs: BeliefDistribution,
    p: ModelParams,
    n_draws: int,
    seed: int = 0,
) -> float:
    """Monte Carlo mean of max(0, Z^s - zd) under pooled beliefs and fresh nu draws."""
    if n_draws < 1000:
        raise ValueError("n_draws must be >= 1000")
    rows = beliefs.attribute_rows
    if rows.shape[1] != p.beta.shape[0]:
        raise ValueError("belief rows do not match beta layout")
    u = uniform01_block(seed, 0, 0, n_draws)
    nu = p.mu_nu - p.sigma_nu * np.log(-np.log(u))
    row_u = uniform01_block(seed, 1, 0, n_draws)
    row_idx = np.minimum((row_u * rows.shape[0]).astype(int), rows.shape[0] - 1)
    zs = rows[row_idx] @ p.beta + p.xi + nu
    return float(np.mean(np.maximum(0.0, zs - zd)))


def utils_to_dollars(utils: float, p: ModelParams) -> float:
    """Money metric: utils divided by |price coefficient|, times 100 (price unit is 100$)."""
    alpha = abs(p.beta[0])
    if alpha == 0.0:
        raise ValueError("price coefficient is zero; no money metric available")
    return utils / alpha * 100.0
