"""Leap mathematics shared by the solvers.

Step-size and firing-count selection, critical-reaction classification,
the correlated binomial cascade, reaction reordering and the bound on
firings that keeps populations nonnegative.

Reaction sets are passed around as boolean masks over reaction indices.
"""

import math
from dataclasses import dataclass

import numpy as np

from sleap.config import SolverConfig
from sleap.model import PropensityView, ReactionNetwork, SystemState, g_factors
from sleap.sampling import RngStream, sample_binomial, sample_poisson

EXPLICIT = "explicit"
IMPLICIT = "implicit"
CRITICAL = "critical"
SSA = "ssa"
SSA_BURST = "ssa-burst"


@dataclass(frozen=True)
class StepProposal:
    """A candidate update: ``firings`` over ``tau``.

    ``idle`` is time that elapses with no firing before the firings happen
    (S-leaping advances by ``idle`` when it samples zero firings); it is
    included in ``tau``.
    """

    tau: float
    firings: np.ndarray
    method_tag: str = EXPLICIT
    idle: float = 0.0

    @property
    def total_firings(self) -> int:
        return int(self.firings.sum())


def reaction_capacity(network: ReactionNetwork, state: SystemState) -> np.ndarray:
    """``L_j = min over consumed species of round(x_i / |nu_ij|)``.

    Reactions that consume nothing get ``inf``.
    """
    nu = network.nu_matrix
    x = state.x.astype(float)[:, None]
    with np.errstate(divide="ignore"):
        ratio = np.where(nu < 0, x / np.abs(nu), np.inf)
    # half away from zero; ratios are nonnegative
    return np.floor(ratio + 0.5).min(axis=0)


def critical_reactions(
    network: ReactionNetwork,
    state: SystemState,
    view: PropensityView,
    config: SolverConfig,
) -> np.ndarray:
    """Mask of reactions within ``n_critical`` firings of exhausting a reactant."""
    return (view.a > 0) & (reaction_capacity(network, state) <= config.n_critical)


def _leap_terms(
    network: ReactionNetwork,
    state: SystemState,
    a: np.ndarray,
    included: np.ndarray,
    epsilon: float,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    species = network.reactant_species
    x = state.x[species].astype(float)
    bound = np.maximum(epsilon * x / g_factors(network, state.x), 1.0)
    nu = network.nu_matrix[species].astype(float)
    a_inc = np.where(included, a, 0.0)
    mu = nu @ a_inc
    sigma2 = (nu * nu) @ a_inc
    return bound, mu, sigma2


def _ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    # nonpositive denominators mean the bound is inactive
    out = np.full(num.shape, np.inf)
    np.divide(num, den, out=out, where=den > 0)
    return out


def _tau_bound(network, state, view, included, epsilon, cap) -> float:
    # cap replaces an unbounded tau only; a finite bound is returned as is
    if not np.any(included) or network.reactant_species.size == 0:
        return cap
    bound, mu, sigma2 = _leap_terms(network, state, view.a, included, epsilon)
    tau = min(
        float(_ratio(bound, np.abs(mu)).min()),
        float(_ratio(bound * bound, sigma2).min()),
    )
    return tau if math.isfinite(tau) else cap


def explicit_tau(
    network: ReactionNetwork,
    state: SystemState,
    view: PropensityView,
    config: SolverConfig,
    excluded: np.ndarray | None = None,
    cap: float = math.inf,
) -> float:
    """Leap size from the leap condition over reactions not in ``excluded``.

    Returns ``cap`` when every bound is inactive. A finite leap size is not
    shortened to ``cap``.
    """
    included = np.ones(network.n_reactions, dtype=bool)
    if excluded is not None:
        included &= ~excluded
    return _tau_bound(network, state, view, included, config.epsilon, cap)


def implicit_tau(
    network: ReactionNetwork,
    state: SystemState,
    view: PropensityView,
    config: SolverConfig,
    necr: np.ndarray,
    cap: float = math.inf,
) -> float:
    """Leap size summed only over ``necr`` (neither critical nor in partial equilibrium)."""
    return _tau_bound(network, state, view, np.asarray(necr, dtype=bool), config.epsilon, cap)


def in_partial_equilibrium(a_plus: float, a_minus: float, delta: float) -> bool:
    return abs(a_plus - a_minus) <= delta * min(a_plus, a_minus)


def partial_equilibrium(
    network: ReactionNetwork, view: PropensityView, config: SolverConfig,
) -> np.ndarray:
    """Mask of reactions belonging to a reversible pair in partial equilibrium."""
    mask = np.zeros(network.n_reactions, dtype=bool)
    for plus, minus in network.reversible_pairs:
        if in_partial_equilibrium(view.a[plus], view.a[minus], config.delta):
            mask[plus] = mask[minus] = True
    return mask


def r_leap_L(
    network: ReactionNetwork,
    state: SystemState,
    view: PropensityView,
    config: SolverConfig,
    cap: int | None = None,
) -> int:
    """Number of firings for the next leap, at least 1 and at most ``cap``."""
    cap = config.l_max if cap is None else cap
    if network.reactant_species.size == 0 or view.a0 <= 0:
        return cap
    included = np.ones(network.n_reactions, dtype=bool)
    bound, mu, sigma2 = _leap_terms(network, state, view.a, included, config.epsilon)
    corrected = sigma2 - mu * mu / view.a0
    fraction = min(
        float(_ratio(bound, np.abs(mu)).min()),
        float(_ratio(bound * bound, corrected).min()),
    )
    if math.isinf(fraction):
        return cap
    return int(min(max(math.floor(view.a0 * fraction), 1), cap))


def negative_control_L(
    network: ReactionNetwork,
    state: SystemState,
    view: PropensityView,
    config: SolverConfig,
    cap: int | None = None,
) -> int:
    """Upper bound on firings that limits negative populations.

    ``min_j (1 - theta (1 - a0 / a_j)) L_j`` over reactions that can fire and
    consume something; ``cap`` when no reaction qualifies.
    """
    cap = config.l_max if cap is None else cap
    capacity = reaction_capacity(network, state)
    eligible = (view.a > 0) & np.isfinite(capacity)
    if not np.any(eligible):
        return cap
    a = view.a[eligible]
    weight = 1.0 - config.theta * (1.0 - view.a0 / a)
    bound = float((weight * capacity[eligible]).min())
    return int(min(max(math.floor(bound), 1), cap))


def s_leap_L(rng: RngStream, a0: float, tau: float) -> int:
    """Total firings in ``[t, t + tau)``: Poisson with mean ``a0 * tau``."""
    return int(sample_poisson(rng, a0 * tau))


def binomial_cascade(
    rng: RngStream, L: int, view: PropensityView, order: np.ndarray,
) -> np.ndarray:
    """Split ``L`` firings among channels by sequential conditional binomials.

    Channels are visited in ``order``; drawing stops once nothing remains and
    the last visited channel takes the remainder, so ``sum(k) == L`` always.
    """
    k = np.zeros(view.a.size, dtype=np.int64)
    if L <= 0:
        return k
    a_ordered = view.a[order]
    # remaining propensity mass from position m onwards
    suffix = np.cumsum(a_ordered[::-1])[::-1]
    remaining = int(L)
    for m in range(len(order) - 1):
        aj = a_ordered[m]
        if aj <= 0.0:
            continue
        prob = min(max(aj / suffix[m], 0.0), 1.0)
        kj = remaining if prob >= 1.0 else sample_binomial(rng, remaining, prob)
        k[order[m]] = kj
        remaining -= kj
        if remaining == 0:
            return k
    k[order[-1]] += remaining
    return k


def reorder_schedule(
    view: PropensityView, step_count: int, period: int, current: np.ndarray,
) -> np.ndarray:
    """Every ``period`` steps, sort channels by decreasing propensity."""
    if step_count % period != 0:
        return current
    return np.argsort(-view.a, kind="stable")


def is_nonnegative(state: SystemState, firings: np.ndarray, network: ReactionNetwork) -> bool:
    return bool(np.all(state.x + network.nu_matrix @ firings >= 0))


__all__ = [
    "CRITICAL",
    "EXPLICIT",
    "IMPLICIT",
    "SSA",
    "SSA_BURST",
    "StepProposal",
    "binomial_cascade",
    "critical_reactions",
    "explicit_tau",
    "implicit_tau",
    "in_partial_equilibrium",
    "is_nonnegative",
    "negative_control_L",
    "partial_equilibrium",
    "r_leap_L",
    "reaction_capacity",
    "reorder_schedule",
    "s_leap_L",
]
