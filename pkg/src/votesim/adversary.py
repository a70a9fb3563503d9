"""Pluggable misbehaviour for corrupted parties.

A strategy intercepts a party's outgoing actions at typed hook points and
may replace them. It sees only `observed`: a dict holding what that party
legitimately knows at that moment (its config, ballot, own state, received
messages, revealed rounds), never other parties' secrets, so the privacy
boundary is enforced by construction.

Hook points and the honest action they may replace:

  cast              plaintext vote matrix being built
  share             list of per-shareholder share arrays about to be sent
  parity-submit     combined parity bits entering a broadcast round
  copy              the 2s plaintext vote copies (verified protocol)
  open-report       the opened-index mask an authority sends one voter
  equality-submit   the XOR bits an authority submits to an equality round
  tally-announce    the encoded tally announcement bits
  revoke-vote       the revocation mask an authority broadcasts
  random-contribute the authority's contribution to shared randomness
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channels import PartyId
from .errors import ConfigurationError

__all__ = [
    "HOOKS",
    "AdversarySpec",
    "StrategyDef",
    "STRATEGIES",
    "apply_strategy",
    "AdversaryEngine",
]

HOOKS = (
    "cast",
    "share",
    "parity-submit",
    "copy",
    "open-report",
    "equality-submit",
    "tally-announce",
    "revoke-vote",
    "random-contribute",
)


@dataclass(frozen=True)
class AdversarySpec:
    party: PartyId
    strategy: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        definition = STRATEGIES.get(self.strategy)
        if definition is None:
            raise ConfigurationError(f"unknown strategy {self.strategy!r}")
        if self.party.role not in definition.roles:
            raise ConfigurationError(
                f"strategy {self.strategy!r} does not apply to a {self.party.role}"
            )

    @classmethod
    def parse(cls, text: str) -> "AdversarySpec":
        """Parse `party=<role>:<index> strategy=<name> [key=value ...]`."""
        party = None
        strategy = None
        params = {}
        for token in text.split():
            if "=" not in token:
                raise ConfigurationError(f"bad adversary token {token!r}")
            key, value = token.split("=", 1)
            if key == "party":
                party = PartyId.parse(value)
            elif key == "strategy":
                strategy = value
            else:
                params[key] = _coerce(value)
        if party is None or strategy is None:
            raise ConfigurationError("adversary spec needs both party= and strategy=")
        return cls(party, strategy, params)

    def describe(self) -> str:
        extra = " ".join(f"{k}={v}" for k, v in sorted(self.params.items()))
        return f"party={self.party} strategy={self.strategy}" + (f" {extra}" if extra else "")


def _coerce(value: str):
    for cast in (int, float):
        try:
            return cast(value)
        except ValueError:
            continue
    return value


@dataclass(frozen=True)
class StrategyDef:
    name: str
    roles: frozenset
    hooks: frozenset
    fn: callable


def _strategy(name, roles, hooks):
    def register(fn):
        STRATEGIES[name] = StrategyDef(name, frozenset(roles), frozenset(hooks), fn)
        return fn

    return register


STRATEGIES: dict[str, StrategyDef] = {}


@_strategy("honest", ("voter", "authority"), HOOKS)
def _honest(hook, honest, params, observed, rng):
    return honest


@_strategy("double-voter", ("voter",), ("cast",))
def _double_voter(hook, honest, params, observed, rng):
    """Mark a second candidate row with the same number of ones."""
    matrix = np.array(honest, dtype=np.uint8)
    candidates, positions = matrix.shape
    choice = observed["choice"]
    second = params.get("second", choice % candidates + 1)
    ones = observed["ones_per_vote"]
    matrix[second - 1] = 0
    matrix[second - 1, rng.positions(positions, ones)] = 1
    return matrix


@_strategy("noise", ("voter",), ("cast",))
def _noise(hook, honest, params, observed, rng):
    """Replace the whole matrix with iid Bernoulli(rate) bits."""
    rate = params.get("rate", 0.5)
    return rng.bernoulli(rate, np.asarray(honest).shape)


@_strategy("overweight", ("voter",), ("cast",))
def _overweight(hook, honest, params, observed, rng):
    """Mark the chosen row with a count of ones different from the honest
    voters*security."""
    matrix = np.zeros_like(np.asarray(honest, dtype=np.uint8))
    positions = matrix.shape[1]
    count = int(params.get("count", 2 * observed["ones_per_vote"]))
    count = min(count, positions)
    matrix[observed["choice"] - 1, rng.positions(positions, count)] = 1
    return matrix


@_strategy("parity-flipper", ("voter", "authority"), ("parity-submit",))
def _parity_flipper(hook, honest, params, observed, rng):
    """Flip each submitted parity bit independently with probability
    `rate` (a single flipped bit shifts the observed rate by only
    1/(voters^2*security), inside the decode tolerance, so a noticeable
    rate is needed to disturb the tally)."""
    rate = params.get("rate", 0.5)
    honest = np.asarray(honest, dtype=np.uint8)
    return honest ^ rng.bernoulli(rate, honest.shape)


@_strategy("equivocator", ("authority",), ("open-report",))
def _equivocator(hook, honest, params, observed, rng):
    """Report a wrong opened-index set to one targeted voter."""
    target = int(params.get("target", 1))
    if observed["receiver"].index != target:
        return honest
    return 1 - np.asarray(honest, dtype=np.uint8)


@_strategy("unequal-copier", ("voter",), ("copy",))
def _unequal_copier(hook, honest, params, observed, rng):
    """Half correct copies, half identical-but-malformed copies: slips
    through only when the opened half is exactly the correct half."""
    copies = list(honest)
    half = len(copies) // 2
    good = copies[0]
    bad = np.array(good, dtype=np.uint8)
    candidates, positions = bad.shape
    choice = observed["choice"]
    second = params.get("second", choice % candidates + 1)
    bad[second - 1] = 0
    bad[second - 1, rng.positions(positions, observed["ones_per_vote"])] = 1
    return [good] * half + [bad] * half


@_strategy("malicious-revoker", ("authority",), ("equality-submit",))
def _malicious_revoker(hook, honest, params, observed, rng):
    """Corrupt the equality-test bits for one voter so every authority
    sees the comparison fail and the ballot is revoked (needs security
    >= 2, otherwise there is no equality round to corrupt)."""
    target = int(params.get("target", 1))
    if observed["subject"].index != target:
        return honest
    return 1 ^ np.asarray(honest, dtype=np.uint8)


@_strategy("coin-biaser", ("authority",), ("random-contribute",))
def _coin_biaser(hook, honest, params, observed, rng):
    """Contribute a constant string to the shared-randomness round."""
    fill = int(params.get("fill", 0))
    return np.full_like(np.asarray(honest, dtype=np.uint8), fill)


def apply_strategy(hook, honest_action, spec: AdversarySpec, observed, rng):
    """Run one hook through a strategy and return the (possibly replaced)
    action. Raises ConfigurationError when the strategy has no behaviour
    at this hook (the honest strategy applies everywhere)."""
    definition = STRATEGIES[spec.strategy]
    if hook not in HOOKS:
        raise ConfigurationError(f"unknown hook {hook!r}")
    if hook not in definition.hooks:
        raise ConfigurationError(f"strategy {spec.strategy!r} has no action at hook {hook!r}")
    return definition.fn(hook, honest_action, spec.params, observed, rng)


class AdversaryEngine:
    """Routes protocol hook points to the configured strategies.

    Parties without a spec (and hooks a strategy does not claim) take the
    honest action untouched; `observed` is built lazily so honest-majority
    runs pay nothing for the hook machinery.
    """

    def __init__(self, specs, rng_root):
        self._by_party = {}
        for spec in specs or ():
            if spec.party in self._by_party:
                raise ConfigurationError(f"duplicate adversary for {spec.party}")
            self._by_party[spec.party] = (
                spec,
                STRATEGIES[spec.strategy],
                rng_root.spawn(f"adversary/{spec.party}"),
            )

    def is_corrupt(self, party: PartyId) -> bool:
        return party in self._by_party

    def act(self, hook, party, honest_action, observed_fn=None):
        entry = self._by_party.get(party)
        if entry is None:
            return honest_action
        spec, definition, rng = entry
        if hook not in definition.hooks:
            return honest_action
        observed = observed_fn() if observed_fn is not None else {}
        return definition.fn(hook, honest_action, spec.params, observed, rng)
