"""Simulation engines.

Six samplers share one interface: ``solver.step(state, rng, volume, t_end)``
returns an accepted :class:`~sleap.stepping.StepProposal` (proposals that
would drive a population negative are rejected and redrawn inside ``step``)
or ``None`` when no reaction can fire any more. :func:`run_trajectory` drives
a solver to ``t_end`` and reads populations off a time grid.

Solver objects carry per-trajectory state (reaction order, pending SSA
burst, counters) and must not be shared between trajectories.
"""

import enum
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from sleap.config import SolverConfig
from sleap.errors import SolverAbort
from sleap.model import (
    PropensityView,
    ReactionNetwork,
    SystemState,
    all_propensities,
    apply_hooks,
    nearest_int,
    propensity_jacobian,
    propensity_vector,
)
from sleap.sampling import (
    RngStream,
    sample_discrete,
    sample_exponential,
    sample_gamma,
    sample_poisson,
)
from sleap.stepping import (
    CRITICAL,
    EXPLICIT,
    IMPLICIT,
    SSA,
    SSA_BURST,
    StepProposal,
    binomial_cascade,
    critical_reactions,
    explicit_tau,
    implicit_tau,
    is_nonnegative,
    negative_control_L,
    partial_equilibrium,
    r_leap_L,
    reorder_schedule,
    s_leap_L,
)

logger = logging.getLogger(__name__)

# step halvings allowed inside one Newton iteration
NEWTON_DAMPING_STEPS = 20


class SolverKind(str, enum.Enum):
    SSA = "ssa"
    TAU_EXPLICIT = "tau_explicit"
    TAU_ADAPTIVE = "tau_adaptive"
    R_LEAP = "r_leap"
    S_LEAP = "s_leap"
    S_ADAPTIVE = "s_adaptive"

    @classmethod
    def parse(cls, name: "str | SolverKind") -> "SolverKind":
        """Accept enum values and the short CLI spellings (``tau``, ``s-adaptive``...)."""
        if isinstance(name, SolverKind):
            return name
        key = name.strip().lower()
        if key in _ALIASES:
            return _ALIASES[key]
        return cls(key)


_ALIASES = {
    "tau": SolverKind.TAU_EXPLICIT,
    "tau-adaptive": SolverKind.TAU_ADAPTIVE,
    "r": SolverKind.R_LEAP,
    "s": SolverKind.S_LEAP,
    "s-adaptive": SolverKind.S_ADAPTIVE,
}

CLI_NAMES = {
    SolverKind.SSA: "ssa",
    SolverKind.TAU_EXPLICIT: "tau",
    SolverKind.TAU_ADAPTIVE: "tau-adaptive",
    SolverKind.R_LEAP: "r",
    SolverKind.S_LEAP: "s",
    SolverKind.S_ADAPTIVE: "s-adaptive",
}


@dataclass
class StepStats:
    steps_total: int = 0
    ssa_fallback_steps: int = 0
    implicit_steps: int = 0
    rejected_proposals: int = 0
    rng_draws: int = 0
    idle_advances: int = 0
    negative_control_steps: int = 0
    newton_failures: int = 0
    wall_time: float = 0.0

    def as_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class ImplicitSolveResult:
    """Relaxed (real-valued) solution of the implicit update.

    ``converged`` means ``residual <= tol * max(1, |base|_inf)``.
    """

    x_star: np.ndarray
    converged: bool
    iterations: int
    residual: float


def implicit_solve(
    network: ReactionNetwork,
    state: SystemState,
    drift: np.ndarray,
    tau: float,
    volume: float = 1.0,
    reactions: np.ndarray | None = None,
    tol: float = 1e-6,
    max_iter: int = 100,
) -> ImplicitSolveResult:
    """Newton-Raphson solve of ``y = x + drift + tau * sum_j nu_j a_j(y)``.

    ``drift`` holds the terms fixed at the known state (the zero-mean noise of
    the firing counts plus any forced firing); the sum runs over ``reactions``
    (all when None). Iterates are clamped at 0; a step that does not reduce the
    residual is halved, and the solve stops unconverged when
    ``NEWTON_DAMPING_STEPS`` halvings all fail.
    """
    included = (
        np.ones(network.n_reactions, dtype=bool) if reactions is None else reactions
    )
    nu = network.nu_matrix[:, included].astype(float)
    base = state.x.astype(float) + drift
    scale = max(1.0, float(np.abs(base).max()))
    limit = tol * scale
    identity = np.eye(network.n_species)

    def residual(y):
        a = propensity_vector(network, y, volume)[included]
        return y - base - tau * (nu @ a)

    y = np.maximum(state.x.astype(float), 0.0)
    f = residual(y)
    norm = float(np.abs(f).max())
    iterations = 0
    while norm > limit and iterations < max_iter:
        _, jac = propensity_jacobian(network, y, volume)
        system = identity - tau * (nu @ jac[included])
        try:
            direction = np.linalg.solve(system, -f)
        except np.linalg.LinAlgError:
            break
        lam = 1.0
        for _ in range(NEWTON_DAMPING_STEPS):
            y_new = np.maximum(y + lam * direction, 0.0)
            f_new = residual(y_new)
            norm_new = float(np.abs(f_new).max())
            if norm_new < norm:
                break
            lam *= 0.5
        else:
            logger.debug("Newton stalled: no damped step reduces the residual %.3g", norm)
            break
        y, f, norm = y_new, f_new, norm_new
        iterations += 1
    return ImplicitSolveResult(y, norm <= limit, iterations, norm)


class Solver:
    """Base class: propensities, SSA steps and bookkeeping."""

    kind: SolverKind = SolverKind.SSA

    def __init__(self, network: ReactionNetwork, config: SolverConfig | None = None):
        self.network = network
        self.config = config or SolverConfig()
        self.stats = StepStats()
        self.order = np.arange(network.n_reactions)
        self.leaps = 0

    def step(
        self,
        state: SystemState,
        rng: RngStream,
        volume: float = 1.0,
        t_end: float = math.inf,
    ) -> StepProposal | None:
        view = all_propensities(self.network, state, volume)
        if view.a0 <= 0:
            return None
        return self._ssa(view, rng)

    def _ssa(self, view: PropensityView, rng: RngStream, tag: str = SSA) -> StepProposal:
        tau = sample_exponential(rng, 1.0 / view.a0)
        k = np.zeros(self.network.n_reactions, dtype=np.int64)
        k[sample_discrete(rng, view.a)] = 1
        return StepProposal(tau, k, tag)

    def _reorder(self, view: PropensityView) -> None:
        self.order = reorder_schedule(
            view, self.leaps, self.config.reorder_period, self.order,
        )

    def _abort(self, state: SystemState, what: str) -> SolverAbort:
        logger.warning("%s: retry cap %d exceeded", self.kind.value, self.config.retry_cap)
        return SolverAbort(
            f"{self.kind.value}: {what} after {self.config.retry_cap} retries", state.t,
        )

    def _newton(self, state, drift, tau, volume, reactions) -> ImplicitSolveResult:
        result = implicit_solve(
            self.network,
            state,
            drift,
            tau,
            volume,
            reactions,
            tol=self.config.newton_tol,
            max_iter=self.config.newton_max_iter,
        )
        if not result.converged:
            self.stats.newton_failures += 1
            logger.warning(
                "Newton did not converge at t=%.6g (tau=%.3g, residual=%.3g); halving tau",
                state.t,
                tau,
                result.residual,
            )
        return result


class SSASolver(Solver):
    kind = SolverKind.SSA


class TauLeapingSolver(Solver):
    """Non-negative explicit tau-leaping with critical reactions and SSA fallback."""

    kind = SolverKind.TAU_EXPLICIT
    # explicit tau-leaping falls back when tau < threshold / a0, adaptive when <=
    fallback_inclusive = False

    def __init__(self, network, config=None):
        super().__init__(network, config)
        self._burst_left = 0

    def step(self, state, rng, volume=1.0, t_end=math.inf):
        view = all_propensities(self.network, state, volume)
        if view.a0 <= 0:
            self._burst_left = 0
            return None
        if self._burst_left > 0:
            self._burst_left -= 1
            return self._ssa(view, rng, SSA_BURST)

        critical = critical_reactions(self.network, state, view, self.config)
        cap = t_end - state.t
        tau_ex = explicit_tau(self.network, state, view, self.config, critical, cap)
        tau1, stiff = self._select_tau(state, view, critical, tau_ex, cap)
        return self._leap(state, rng, view, volume, critical, tau1, tau_ex, stiff)

    def _select_tau(self, state, view, critical, tau_ex, cap):
        return tau_ex, False

    def _falls_back(self, tau1: float, a0: float) -> bool:
        if not self.config.ssa_fallback:
            return False
        limit = self.config.ssa_fallback_threshold / a0
        return tau1 <= limit if self.fallback_inclusive else tau1 < limit

    def _leap(self, state, rng, view, volume, critical, tau1, tau_ex, stiff):
        noncritical = ~critical
        a0c = float(view.a[critical].sum())
        m = self.network.n_reactions
        for _ in range(self.config.retry_cap + 1):
            if self._falls_back(tau1, view.a0):
                logger.debug("t=%.6g: tau=%.3g below SSA threshold, SSA burst", state.t, tau1)
                self._burst_left = self.config.ssa_burst - 1
                return self._ssa(view, rng, SSA_BURST)

            tau2 = sample_exponential(rng, 1.0 / a0c) if a0c > 0 else math.inf
            if math.isinf(tau1) and math.isinf(tau2):
                # nothing bounds the leap (no t_end given)
                return self._ssa(view, rng)
            forced = np.zeros(m, dtype=np.int64)
            if tau1 <= tau2:
                tau = tau1
                implicit = stiff
                tag = IMPLICIT if stiff else EXPLICIT
            else:
                tau = tau2
                forced[np.flatnonzero(critical)[sample_discrete(rng, view.a[critical])]] = 1
                implicit = stiff and not tau2 < tau_ex
                tag = CRITICAL

            if implicit:
                firings = self._implicit_firings(state, rng, view, volume, noncritical, tau, forced)
            else:
                firings = forced
                firings[noncritical] = sample_poisson(rng, view.a[noncritical] * tau)

            if firings is not None and is_nonnegative(state, firings, self.network):
                if implicit and tag == CRITICAL:
                    tag = IMPLICIT
                return StepProposal(tau, firings, tag)
            if firings is not None:
                self.stats.rejected_proposals += 1
            tau1 = tau / 2
        raise self._abort(state, "negative populations")

    def _implicit_firings(self, state, rng, view, volume, noncritical, tau, forced):
        k_p = np.zeros(self.network.n_reactions, dtype=np.int64)
        k_p[noncritical] = sample_poisson(rng, view.a[noncritical] * tau)
        mean = np.where(noncritical, view.a * tau, 0.0)
        drift = self.network.nu_matrix @ (k_p - mean + forced)
        result = self._newton(state, drift, tau, volume, noncritical)
        if not result.converged:
            return None
        a_star = propensity_vector(self.network, result.x_star, volume)
        k = np.maximum(nearest_int(a_star * tau + k_p - view.a * tau), 0)
        return np.where(noncritical, k, forced)


class AdaptiveTauLeapingSolver(TauLeapingSolver):
    """Switches to implicit tau-leaping when reversible pairs make the system stiff."""

    kind = SolverKind.TAU_ADAPTIVE
    fallback_inclusive = True

    def _select_tau(self, state, view, critical, tau_ex, cap):
        pe = partial_equilibrium(self.network, view, self.config)
        necr = ~critical & ~pe
        tau_im = implicit_tau(self.network, state, view, self.config, necr, cap)
        stiff = tau_im > self.config.stiffness_factor * tau_ex
        logger.debug(
            "t=%.6g: tau_ex=%.3g tau_im=%.3g %s",
            state.t, tau_ex, tau_im, "stiff" if stiff else "non-stiff",
        )
        return (tau_im if stiff else tau_ex), stiff


class RLeapingSolver(Solver):
    """R-leaping: fix the number of firings, draw the elapsed time."""

    kind = SolverKind.R_LEAP

    def step(self, state, rng, volume=1.0, t_end=math.inf):
        view = all_propensities(self.network, state, volume)
        if view.a0 <= 0:
            return None
        self._reorder(view)
        L = r_leap_L(self.network, state, view, self.config)
        if self.config.negative_control:
            bound = negative_control_L(self.network, state, view, self.config)
            if bound < L:
                L = bound
                self.stats.negative_control_steps += 1
        for _ in range(self.config.retry_cap + 1):
            firings = binomial_cascade(rng, L, view, self.order)
            if is_nonnegative(state, firings, self.network):
                tau = sample_gamma(rng, L, 1.0 / view.a0)
                self.leaps += 1
                return StepProposal(tau, firings, EXPLICIT)
            self.stats.rejected_proposals += 1
            L = max(L // 2, 1)
        raise self._abort(state, "negative populations")


class SLeapingSolver(Solver):
    """S-leaping: tau-leaping step size, Poisson total, binomial split."""

    kind = SolverKind.S_LEAP

    def step(self, state, rng, volume=1.0, t_end=math.inf):
        view = all_propensities(self.network, state, volume)
        if view.a0 <= 0:
            return None
        self._reorder(view)
        tau = explicit_tau(self.network, state, view, self.config, None, t_end - state.t)
        return self._explicit(state, rng, view, tau)

    def _explicit(self, state, rng, view, tau):
        if math.isinf(tau):
            return self._ssa(view, rng)
        bound = None
        if self.config.negative_control:
            bound = negative_control_L(self.network, state, view, self.config)
        for _ in range(self.config.retry_cap + 1):
            L = s_leap_L(rng, view.a0, tau)
            idle = 0.0
            elapsed = tau
            if bound is not None and 0 < bound < L:
                L = bound
                elapsed = sample_gamma(rng, L, 1.0 / view.a0)
                self.stats.negative_control_steps += 1
            if L == 0:
                idle = tau
                L = 1
                elapsed = sample_gamma(rng, 1, 1.0 / view.a0)
            firings = binomial_cascade(rng, L, view, self.order)
            if is_nonnegative(state, firings, self.network):
                self.leaps += 1
                return StepProposal(idle + elapsed, firings, EXPLICIT, idle)
            self.stats.rejected_proposals += 1
            tau = tau / 2
        raise self._abort(state, "negative populations")


class AdaptiveSLeapingSolver(SLeapingSolver):
    """S-leaping with an implicit branch for stiff states."""

    kind = SolverKind.S_ADAPTIVE

    def step(self, state, rng, volume=1.0, t_end=math.inf):
        view = all_propensities(self.network, state, volume)
        if view.a0 <= 0:
            return None
        self._reorder(view)
        cap = t_end - state.t
        tau_ex = explicit_tau(self.network, state, view, self.config, None, cap)
        pe = partial_equilibrium(self.network, view, self.config)
        tau_im = implicit_tau(self.network, state, view, self.config, ~pe, cap)
        if not tau_im > self.config.stiffness_factor * tau_ex:
            return self._explicit(state, rng, view, tau_ex)
        logger.debug("t=%.6g: stiff, tau_im=%.3g tau_ex=%.3g", state.t, tau_im, tau_ex)
        return self._implicit(state, rng, view, volume, tau_im)

    def _implicit(self, state, rng, view, volume, tau):
        nu = self.network.nu_matrix
        for _ in range(self.config.retry_cap + 1):
            L = s_leap_L(rng, view.a0, tau)
            k_m = binomial_cascade(rng, L, view, self.order)
            mean = view.a / view.a0 * L
            result = self._newton(state, nu @ (k_m - mean), tau, volume, None)
            if result.converged:
                a_star = propensity_vector(self.network, result.x_star, volume)
                firings = np.maximum(nearest_int(a_star * tau + k_m - mean), 0)
                if is_nonnegative(state, firings, self.network):
                    self.leaps += 1
                    return StepProposal(tau, firings, IMPLICIT)
                self.stats.rejected_proposals += 1
            tau = tau / 2
        raise self._abort(state, "implicit step rejected")


_SOLVERS = {
    SolverKind.SSA: SSASolver,
    SolverKind.TAU_EXPLICIT: TauLeapingSolver,
    SolverKind.TAU_ADAPTIVE: AdaptiveTauLeapingSolver,
    SolverKind.R_LEAP: RLeapingSolver,
    SolverKind.S_LEAP: SLeapingSolver,
    SolverKind.S_ADAPTIVE: AdaptiveSLeapingSolver,
}


def make_solver(
    kind: "SolverKind | str", network: ReactionNetwork, config: SolverConfig | None = None,
) -> Solver:
    return _SOLVERS[SolverKind.parse(kind)](network, config)


# One-shot step functions. They build a fresh solver each call, so reaction
# order and SSA bursts do not carry over; trajectories use solver objects.

def ssa_step(network, state, rng, volume=1.0):
    return SSASolver(network).step(state, rng, volume)


def tau_explicit_step(network, state, rng, config=None, volume=1.0, t_end=math.inf):
    return TauLeapingSolver(network, config).step(state, rng, volume, t_end)


def tau_adaptive_step(network, state, rng, config=None, volume=1.0, t_end=math.inf):
    return AdaptiveTauLeapingSolver(network, config).step(state, rng, volume, t_end)


def r_leap_step(network, state, rng, config=None, volume=1.0, t_end=math.inf):
    return RLeapingSolver(network, config).step(state, rng, volume, t_end)


def s_leap_step(network, state, rng, config=None, volume=1.0, t_end=math.inf):
    return SLeapingSolver(network, config).step(state, rng, volume, t_end)


def s_adaptive_step(network, state, rng, config=None, volume=1.0, t_end=math.inf):
    return AdaptiveSLeapingSolver(network, config).step(state, rng, volume, t_end)


def default_grid(t_end: float, points: int = 25) -> np.ndarray:
    """``points`` equally spaced times in ``(0, t_end]``; ``[0]`` when t_end is 0."""
    if t_end <= 0:
        return np.array([0.0])
    return t_end * np.arange(1, points + 1) / points


class GridRecorder:
    """Nearest-landed-time readout of populations on a fixed grid.

    Each grid time takes the state at the closest time the solver landed on;
    ties go to the earlier landing.
    """

    def __init__(self, grid: np.ndarray, n_species: int):
        self.grid = np.asarray(grid, dtype=float)
        self.states = np.zeros((self.grid.size, n_species), dtype=np.int64)
        self._next = 0
        self._prev: SystemState | None = None

    def land(self, state: SystemState) -> None:
        while self._next < self.grid.size and self.grid[self._next] <= state.t:
            g = self.grid[self._next]
            prev = self._prev
            if prev is not None and g - prev.t <= state.t - g:
                self.states[self._next] = prev.x
            else:
                self.states[self._next] = state.x
            self._next += 1
        self._prev = state

    def finish(self, state: SystemState) -> np.ndarray:
        """Fill grid times after the last landing with the final state."""
        self.states[self._next:] = state.x
        self._next = self.grid.size
        return self.states


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    final: SystemState
    stats: StepStats = field(default_factory=StepStats)


def run_trajectory(
    network: ReactionNetwork,
    kind: "SolverKind | str",
    config: SolverConfig | None,
    rng: RngStream,
    t_end: float,
    grid: np.ndarray | None = None,
) -> Trajectory:
    """Advance one trajectory from the network's initial state to ``t_end``.

    Raises:
        SolverAbort: a step exceeded the retry cap

    """
    solver = make_solver(kind, network, config)
    grid = default_grid(t_end) if grid is None else np.asarray(grid, dtype=float)
    recorder = GridRecorder(grid, network.n_species)
    nu = network.nu_matrix
    stats = solver.stats

    state = network.initial_state()
    recorder.land(state)
    started = time.perf_counter()
    draws = rng.draws
    hook_draws = 0
    volume = 1.0
    while state.t < t_end:
        if network.hooks:
            before = rng.draws
            state, volume = apply_hooks(network, state, rng)
            hook_draws += rng.draws - before
        proposal = solver.step(state, rng, volume, t_end)
        if proposal is None:
            logger.info("%s: system exhausted at t=%.6g", solver.kind.value, state.t)
            break
        if proposal.idle > 0:
            recorder.land(SystemState(state.x, state.t + proposal.idle))
            stats.idle_advances += 1
        state = state.advanced(proposal.firings, nu, proposal.tau)
        stats.steps_total += 1
        if proposal.method_tag == SSA_BURST:
            stats.ssa_fallback_steps += 1
        elif proposal.method_tag == IMPLICIT:
            stats.implicit_steps += 1
        recorder.land(state)

    stats.wall_time = time.perf_counter() - started
    stats.rng_draws = rng.draws - draws - hook_draws
    logger.debug(
        "%s trajectory %d done: %d steps, %d rejected",
        solver.kind.value,
        rng.stream_id,
        stats.steps_total,
        stats.rejected_proposals,
    )
    return Trajectory(grid, recorder.finish(state), state, stats)


__all__ = [
    "AdaptiveSLeapingSolver",
    "AdaptiveTauLeapingSolver",
    "CLI_NAMES",
    "GridRecorder",
    "ImplicitSolveResult",
    "RLeapingSolver",
    "SLeapingSolver",
    "SSASolver",
    "Solver",
    "SolverKind",
    "StepStats",
    "TauLeapingSolver",
    "Trajectory",
    "default_grid",
    "implicit_solve",
    "make_solver",
    "r_leap_step",
    "run_trajectory",
    "s_adaptive_step",
    "s_leap_step",
    "ssa_step",
    "tau_adaptive_step",
    "tau_explicit_step",
]
