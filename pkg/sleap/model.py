"""Reaction networks, system state and mass-action propensities.

A network is parsed from a small line-oriented text format::

    species S1 S2 S3
    init 4150 39565 3445
    reaction R1 : S1 -> 0        ; rate 1.0
    reaction R2 : 2 S1 -> S2     ; rate 0.002
    reversible R2 R3
    volume tgen=2100
    resample RNAP mean=35 sd=3.5

``0`` denotes the empty set on either side of a reaction.

Propensities follow the law of mass action without symmetry factors:
``2 S1 + S2 -> S3`` with rate ``c`` has propensity ``c * x1 * (x1 - 1) * x2``.
A ``kinetics combinatorial`` line switches the whole model to counting
unordered reactant combinations, ``c * x1 * (x1 - 1) / 2 * x2`` for the same
reaction.
"""

import logging
import math
import re
from dataclasses import dataclass, field, replace
from functools import cached_property
from importlib import resources

import numpy as np

from sleap.errors import ModelParseError
from sleap.sampling import sample_normal

logger = logging.getLogger(__name__)

MAX_ORDER = 3
# g_i saturates at this multiple of h_i when x_i <= n_i - 1
G_SATURATION = 100.0

BUILTIN_MODELS = (
    "dimer_nonstiff",
    "dimer_stiff",
    "bsubtilis",
    "lacz_small",
    "lacz_big",
    "isomerization",
)


def nearest_int(value):
    """Round half away from zero; works on scalars and numpy arrays."""
    if isinstance(value, np.ndarray):
        return (np.sign(value) * np.floor(np.abs(value) + 0.5)).astype(np.int64)
    return int(math.copysign(math.floor(abs(value) + 0.5), value))


@dataclass(frozen=True)
class Reaction:
    """One reaction channel.

    ``reactant_orders`` and ``nu`` are indexed by species; products are
    recovered as ``nu + reactant_orders``.
    """

    name: str
    reactant_orders: tuple[int, ...]
    nu: tuple[int, ...]
    rate: float
    volume_scaled: bool = False

    @property
    def order(self) -> int:
        return sum(self.reactant_orders)

    @property
    def products(self) -> tuple[int, ...]:
        return tuple(v + r for v, r in zip(self.nu, self.reactant_orders))

    def consumes(self) -> list[int]:
        """Species indices with a negative state change."""
        return [i for i, v in enumerate(self.nu) if v < 0]


@dataclass(frozen=True)
class TimeDependentHook:
    """Volume growth or per-step species resampling.

    kind ``volume``: volume = 1 + t / t_gen.
    kind ``resample``: x[species] <- max(0, round(N(mean_base (1 + t / t_gen),
    stddev_base^2))); ``t_gen`` None means the mean does not grow.
    """

    kind: str
    t_gen: float | None = None
    species: int | None = None
    mean_base: float = 0.0
    stddev_base: float = 0.0

    def growth(self, t: float) -> float:
        if self.t_gen is None:
            return 1.0
        return 1.0 + t / self.t_gen


@dataclass(frozen=True)
class SystemState:
    """Integer populations ``x`` at time ``t``."""

    x: np.ndarray
    t: float = 0.0

    def __eq__(self, other) -> bool:
        if not isinstance(other, SystemState):
            return NotImplemented
        return self.t == other.t and np.array_equal(self.x, other.x)

    def advanced(self, firings: np.ndarray, nu: np.ndarray, tau: float) -> "SystemState":
        """Return the state after applying ``firings`` over ``tau``."""
        return SystemState(self.x + nu @ firings, self.t + tau)


@dataclass(frozen=True)
class PropensityView:
    """Per-reaction propensities and their total."""

    a: np.ndarray
    a0: float


@dataclass(frozen=True)
class ReactionNetwork:
    """Immutable reaction network; derived arrays are cached on first use."""

    species_names: tuple[str, ...]
    reactions: tuple[Reaction, ...]
    reversible_pairs: tuple[tuple[int, int], ...] = ()
    hooks: tuple[TimeDependentHook, ...] = ()
    initial: tuple[int, ...] = ()
    combinatorial: bool = False
    name: str = field(default="network", compare=False)

    @property
    def n_species(self) -> int:
        return len(self.species_names)

    @property
    def n_reactions(self) -> int:
        return len(self.reactions)

    def species_index(self, name: str) -> int:
        try:
            return self.species_names.index(name)
        except ValueError:
            raise KeyError(f"Unknown species: {name}") from None

    def initial_state(self) -> SystemState:
        x = self.initial or (0,) * self.n_species
        return SystemState(np.array(x, dtype=np.int64), 0.0)

    @cached_property
    def nu_matrix(self) -> np.ndarray:
        """State-change matrix, shape (N, M)."""
        return np.array([r.nu for r in self.reactions], dtype=np.int64).T

    @cached_property
    def symmetry_factors(self) -> np.ndarray:
        """Product of reactant multiplicity factorials; all 1 unless combinatorial."""
        if not self.combinatorial:
            return np.ones(self.n_reactions)
        return np.array(
            [math.prod(math.factorial(m) for m in r.reactant_orders) for r in self.reactions],
            dtype=float,
        )

    @cached_property
    def rates(self) -> np.ndarray:
        """Rate constants with the symmetry factors folded in."""
        return np.array([r.rate for r in self.reactions], dtype=float) / self.symmetry_factors

    @cached_property
    def orders(self) -> np.ndarray:
        return np.array([r.order for r in self.reactions], dtype=np.int64)

    @cached_property
    def volume_exponents(self) -> np.ndarray:
        return np.array(
            [r.order - 1 if r.volume_scaled and r.order >= 2 else 0 for r in self.reactions],
            dtype=float,
        )

    @cached_property
    def _slots(self) -> tuple[np.ndarray, np.ndarray]:
        # Each reaction has MAX_ORDER falling-factorial slots (species, offset);
        # unused slots point at a padding entry fixed to 1.
        species = np.full((self.n_reactions, MAX_ORDER), self.n_species, dtype=np.int64)
        offsets = np.zeros((self.n_reactions, MAX_ORDER), dtype=float)
        for j, reaction in enumerate(self.reactions):
            s = 0
            for i, mult in enumerate(reaction.reactant_orders):
                for k in range(mult):
                    species[j, s] = i
                    offsets[j, s] = k
                    s += 1
        return species, offsets

    @cached_property
    def hor(self) -> tuple[np.ndarray, np.ndarray]:
        """Highest order of reaction ``h`` and its multiplicity ``n`` per species.

        Both are 0 for species that are never reactants.
        """
        h = np.zeros(self.n_species, dtype=np.int64)
        n = np.zeros(self.n_species, dtype=np.int64)
        for reaction in self.reactions:
            for i, mult in enumerate(reaction.reactant_orders):
                if mult == 0:
                    continue
                if reaction.order > h[i]:
                    h[i] = reaction.order
                    n[i] = mult
                elif reaction.order == h[i]:
                    n[i] = max(n[i], mult)
        return h, n

    @cached_property
    def reactant_species(self) -> np.ndarray:
        """Indices of species consumed as reactants by at least one reaction."""
        return np.flatnonzero(self.hor[0] > 0)

    @cached_property
    def pair_partner(self) -> dict[int, int]:
        partner = {}
        for plus, minus in self.reversible_pairs:
            partner[plus] = minus
            partner[minus] = plus
        return partner

    def with_initial(self, initial) -> "ReactionNetwork":
        return replace(self, initial=tuple(int(v) for v in initial))


def propensity(
    network: ReactionNetwork, state: SystemState, j: int, volume: float = 1.0,
) -> float:
    """Mass-action propensity of reaction ``j``."""
    reaction = network.reactions[j]
    value = reaction.rate / network.symmetry_factors[j]
    for i, mult in enumerate(reaction.reactant_orders):
        for k in range(mult):
            factor = int(state.x[i]) - k
            if factor <= 0:
                return 0.0
            value *= factor
    if reaction.volume_scaled and reaction.order >= 2:
        value /= volume ** (reaction.order - 1)
    return float(value)


def propensity_vector(network: ReactionNetwork, x: np.ndarray, volume: float = 1.0) -> np.ndarray:
    """Vectorised propensities for an integer or relaxed real state."""
    species, offsets = network._slots
    padded = np.append(np.asarray(x, dtype=float), 1.0)
    factors = np.maximum(padded[species] - offsets, 0.0)
    a = network.rates * factors.prod(axis=1)
    if volume != 1.0:
        a = a / volume ** network.volume_exponents
    return a


def propensity_jacobian(
    network: ReactionNetwork, x: np.ndarray, volume: float = 1.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Propensities and their derivatives ``da_j/dx_i``, shape (M, N)."""
    species, offsets = network._slots
    padded = np.append(np.asarray(x, dtype=float), 1.0)
    factors = np.maximum(padded[species] - offsets, 0.0)
    scale = network.rates / volume ** network.volume_exponents
    a = scale * factors.prod(axis=1)

    m = network.n_reactions
    jac = np.zeros((m, network.n_species + 1))
    rows = np.arange(m)
    for s in range(MAX_ORDER):
        others = np.prod(np.delete(factors, s, axis=1), axis=1)
        active = factors[:, s] > 0.0
        np.add.at(jac, (rows, species[:, s]), np.where(active, scale * others, 0.0))
    return a, jac[:, :-1]


def all_propensities(
    network: ReactionNetwork, state: SystemState, volume: float = 1.0,
) -> PropensityView:
    a = propensity_vector(network, state.x, volume)
    return PropensityView(a, math.fsum(a))


def g_factor(network: ReactionNetwork, state: SystemState, i: int) -> float:
    """Highest-order-of-reaction factor g_i for the step-size bound."""
    h, n = network.hor
    return _g(int(h[i]), int(n[i]), float(state.x[i]))


def _g(h: int, n: int, x: float) -> float:
    if n <= 1:
        return float(h)
    if x <= n - 1:
        return G_SATURATION * h
    return h + (h / n) * sum(j / (x - j) for j in range(1, n))


def g_factors(network: ReactionNetwork, x: np.ndarray) -> np.ndarray:
    """g_i for every reactant species, aligned with ``network.reactant_species``."""
    h, n = network.hor
    return np.array(
        [_g(int(h[i]), int(n[i]), float(x[i])) for i in network.reactant_species],
        dtype=float,
    )


def apply_hooks(
    network: ReactionNetwork, state: SystemState, rng,
) -> tuple[SystemState, float]:
    """Fire the time-dependent hooks at ``state.t``.

    Returns the (possibly resampled) state and the current volume.
    """
    volume = 1.0
    x = state.x
    for hook in network.hooks:
        if hook.kind == "volume":
            volume = hook.growth(state.t)
        elif hook.kind == "resample":
            if x is state.x:
                x = state.x.copy()
            mean = hook.mean_base * hook.growth(state.t)
            draw = sample_normal(rng, mean, hook.stddev_base)
            x[hook.species] = max(0, nearest_int(draw))
    if x is state.x:
        return state, volume
    return SystemState(x, state.t), volume


# Model text format

_TERM = re.compile(r"^(?:(\d+)\s*)?([A-Za-z_][A-Za-z0-9_]*)$")
_KEYVAL = re.compile(r"^([a-z_]+)=(\S+)$")


def _strip_comment(line: str) -> str:
    return line.split("#", 1)[0].strip()


def _parse_side(text: str, index: dict[str, int], lineno: int) -> dict[int, int]:
    side: dict[int, int] = {}
    text = text.strip()
    if text in ("0", ""):
        if text == "":
            raise ModelParseError("empty reaction side (use 0 for the empty set)", lineno)
        return side
    for term in text.split("+"):
        match = _TERM.match(term.strip())
        if not match:
            raise ModelParseError(f"cannot parse term '{term.strip()}'", lineno)
        coeff = int(match.group(1)) if match.group(1) else 1
        name = match.group(2)
        if name not in index:
            raise ModelParseError(f"unknown species '{name}'", lineno)
        if coeff < 1:
            raise ModelParseError(f"coefficient must be positive in '{term.strip()}'", lineno)
        side[index[name]] = side.get(index[name], 0) + coeff
    return side


def _parse_keyvals(tokens: list[str], lineno: int) -> dict[str, float]:
    values = {}
    for token in tokens:
        match = _KEYVAL.match(token)
        if not match:
            raise ModelParseError(f"expected key=value, got '{token}'", lineno)
        try:
            values[match.group(1)] = float(match.group(2))
        except ValueError:
            raise ModelParseError(f"not a number: '{match.group(2)}'", lineno) from None
    return values


def parse_network(text: str, name: str = "network") -> ReactionNetwork:
    """Parse model text into a validated ReactionNetwork.

    Raises:
        ModelParseError: syntax errors (with line number), unknown species,
            inconsistent reversible pairs, orders above 3, empty networks

    """
    species: list[str] = []
    index: dict[str, int] = {}
    initial: list[int] | None = None
    raw_reactions: list[tuple[str, dict[int, int], dict[int, int], float, int]] = []
    pairs_raw: list[tuple[str, str, int]] = []
    volume_tgen: float | None = None
    resample_raw: list[tuple[str, dict[str, float], int]] = []
    combinatorial = False

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        if not line:
            continue
        keyword, _, rest = line.partition(" ")
        rest = rest.strip()

        if keyword == "species":
            for sname in rest.split():
                if not _TERM.match(sname) or sname[0].isdigit():
                    raise ModelParseError(f"invalid species name '{sname}'", lineno)
                if sname in index:
                    raise ModelParseError(f"duplicate species '{sname}'", lineno)
                index[sname] = len(species)
                species.append(sname)

        elif keyword == "init":
            try:
                initial = [int(v) for v in rest.split()]
            except ValueError:
                raise ModelParseError("init values must be integers", lineno) from None
            if any(v < 0 for v in initial):
                raise ModelParseError("init values must be nonnegative", lineno)

        elif keyword == "reaction":
            head, sep, body = rest.partition(":")
            rname = head.strip()
            if not sep or not rname or " " in rname:
                raise ModelParseError("expected 'reaction NAME : lhs -> rhs ; rate C'", lineno)
            equation, sep, rate_part = body.partition(";")
            rate_tokens = rate_part.split()
            if not sep or len(rate_tokens) != 2 or rate_tokens[0] != "rate":
                raise ModelParseError("missing '; rate C'", lineno)
            try:
                rate = float(rate_tokens[1])
            except ValueError:
                raise ModelParseError(f"invalid rate '{rate_tokens[1]}'", lineno) from None
            if not rate >= 0.0 or math.isinf(rate):
                raise ModelParseError("rate must be a finite nonnegative number", lineno)
            lhs, arrow, rhs = equation.partition("->")
            if not arrow:
                raise ModelParseError("missing '->'", lineno)
            reactants = _parse_side(lhs, index, lineno)
            products = _parse_side(rhs, index, lineno)
            if sum(reactants.values()) > MAX_ORDER:
                raise ModelParseError(
                    f"reaction '{rname}' has order above {MAX_ORDER}", lineno,
                )
            if any(r[0] == rname for r in raw_reactions):
                raise ModelParseError(f"duplicate reaction '{rname}'", lineno)
            raw_reactions.append((rname, reactants, products, rate, lineno))

        elif keyword == "reversible":
            names = rest.split()
            if len(names) != 2:
                raise ModelParseError("expected 'reversible R_FORWARD R_BACKWARD'", lineno)
            pairs_raw.append((names[0], names[1], lineno))

        elif keyword == "volume":
            values = _parse_keyvals(rest.split(), lineno)
            if set(values) != {"tgen"} or values["tgen"] <= 0:
                raise ModelParseError("expected 'volume tgen=T' with T > 0", lineno)
            volume_tgen = values["tgen"]

        elif keyword == "resample":
            tokens = rest.split()
            if not tokens:
                raise ModelParseError("expected 'resample SPECIES mean=M sd=S'", lineno)
            values = _parse_keyvals(tokens[1:], lineno)
            if not {"mean", "sd"} <= set(values) or set(values) - {"mean", "sd", "tgen"}:
                raise ModelParseError("expected 'resample SPECIES mean=M sd=S'", lineno)
            resample_raw.append((tokens[0], values, lineno))

        elif keyword == "kinetics":
            if rest not in ("ordered", "combinatorial"):
                raise ModelParseError("expected 'kinetics ordered' or 'kinetics combinatorial'", lineno)
            combinatorial = rest == "combinatorial"

        else:
            raise ModelParseError(f"unknown directive '{keyword}'", lineno)

    if not species:
        raise ModelParseError("no species declared")
    if not raw_reactions:
        raise ModelParseError("no reactions declared")
    if initial is not None and len(initial) != len(species):
        raise ModelParseError(
            f"init has {len(initial)} values for {len(species)} species",
        )

    n = len(species)
    reactions = []
    for rname, reactants, products, rate, _ in raw_reactions:
        orders = tuple(reactants.get(i, 0) for i in range(n))
        nu = tuple(products.get(i, 0) - reactants.get(i, 0) for i in range(n))
        scaled = volume_tgen is not None and sum(orders) >= 2
        reactions.append(Reaction(rname, orders, nu, rate, scaled))

    rindex = {r.name: j for j, r in enumerate(reactions)}
    pairs = []
    used: set[int] = set()
    for fwd, bwd, lineno in pairs_raw:
        for rname in (fwd, bwd):
            if rname not in rindex:
                raise ModelParseError(f"unknown reaction '{rname}'", lineno)
        jp, jm = rindex[fwd], rindex[bwd]
        if jp == jm or jp in used or jm in used:
            raise ModelParseError("reaction listed in more than one reversible pair", lineno)
        if any(a != -b for a, b in zip(reactions[jp].nu, reactions[jm].nu)):
            raise ModelParseError(
                f"'{fwd}' and '{bwd}' are not reverses of each other", lineno,
            )
        used.update((jp, jm))
        pairs.append((jp, jm))

    hooks = []
    if volume_tgen is not None:
        hooks.append(TimeDependentHook("volume", t_gen=volume_tgen))
    for sname, values, lineno in resample_raw:
        if sname not in index:
            raise ModelParseError(f"unknown species '{sname}'", lineno)
        if values["sd"] < 0:
            raise ModelParseError("sd must be nonnegative", lineno)
        t_gen = values.get("tgen", volume_tgen)
        if t_gen is not None and t_gen <= 0:
            raise ModelParseError("tgen must be positive", lineno)
        hooks.append(
            TimeDependentHook(
                "resample",
                t_gen=t_gen,
                species=index[sname],
                mean_base=values["mean"],
                stddev_base=values["sd"],
            ),
        )

    network = ReactionNetwork(
        species_names=tuple(species),
        reactions=tuple(reactions),
        reversible_pairs=tuple(pairs),
        hooks=tuple(hooks),
        initial=tuple(initial) if initial is not None else (0,) * n,
        combinatorial=combinatorial,
        name=name,
    )
    logger.debug(
        "Parsed network %s: %d species, %d reactions", name, n, len(reactions),
    )
    return network


def _format_side(network: ReactionNetwork, counts) -> str:
    terms = []
    for i, c in enumerate(counts):
        if c == 1:
            terms.append(network.species_names[i])
        elif c > 1:
            terms.append(f"{c} {network.species_names[i]}")
    return " + ".join(terms) if terms else "0"


def serialize_network(network: ReactionNetwork) -> str:
    """Render a network in the model text format (inverse of parse_network)."""
    lines = [
        "species " + " ".join(network.species_names),
        "init " + " ".join(str(v) for v in network.initial),
    ]
    if network.combinatorial:
        lines.append("kinetics combinatorial")
    for r in network.reactions:
        lhs = _format_side(network, r.reactant_orders)
        rhs = _format_side(network, r.products)
        lines.append(f"reaction {r.name} : {lhs} -> {rhs} ; rate {r.rate!r}")
    for jp, jm in network.reversible_pairs:
        lines.append(f"reversible {network.reactions[jp].name} {network.reactions[jm].name}")
    volume_tgen = None
    for hook in network.hooks:
        if hook.kind == "volume":
            volume_tgen = hook.t_gen
            lines.append(f"volume tgen={hook.t_gen!r}")
    for hook in network.hooks:
        if hook.kind == "resample":
            line = (
                f"resample {network.species_names[hook.species]} "
                f"mean={hook.mean_base!r} sd={hook.stddev_base!r}"
            )
            if hook.t_gen is not None and hook.t_gen != volume_tgen:
                line += f" tgen={hook.t_gen!r}"
            lines.append(line)
    return "\n".join(lines) + "\n"


def builtin_text(name: str) -> str:
    if name not in BUILTIN_MODELS:
        raise KeyError(f"Unknown built-in model: {name}")
    return resources.files("sleap.builtin").joinpath(f"{name}.net").read_text(encoding="utf-8")


def load_builtin(name: str) -> ReactionNetwork:
    return parse_network(builtin_text(name), name=name)


def list_builtin() -> list[str]:
    return list(BUILTIN_MODELS)


def load_model(ref: str) -> ReactionNetwork:
    """Resolve ``file:<path>`` or a built-in model id."""
    if ref.startswith("file:"):
        path = ref[len("file:"):]
        with open(path, encoding="utf-8") as f:
            return parse_network(f.read(), name=path)
    return load_builtin(ref)


def describe_network(network: ReactionNetwork) -> dict:
    """Summary used by the CLI and the MCP tools."""
    h, n = network.hor
    return {
        "name": network.name,
        "species": list(network.species_names),
        "reactions": [r.name for r in network.reactions],
        "n_species": network.n_species,
        "n_reactions": network.n_reactions,
        "reversible_pairs": [
            [network.reactions[a].name, network.reactions[b].name]
            for a, b in network.reversible_pairs
        ],
        "highest_order": {
            network.species_names[i]: {"h": int(h[i]), "n": int(n[i])}
            for i in network.reactant_species
        },
        "hooks": [hook.kind for hook in network.hooks],
        "kinetics": "combinatorial" if network.combinatorial else "ordered",
        "initial": list(network.initial),
    }


__all__ = [
    "BUILTIN_MODELS",
    "PropensityView",
    "Reaction",
    "ReactionNetwork",
    "SystemState",
    "TimeDependentHook",
    "all_propensities",
    "apply_hooks",
    "builtin_text",
    "describe_network",
    "g_factor",
    "g_factors",
    "list_builtin",
    "load_builtin",
    "load_model",
    "nearest_int",
    "parse_network",
    "propensity",
    "propensity_jacobian",
    "propensity_vector",
    "serialize_network",
]
