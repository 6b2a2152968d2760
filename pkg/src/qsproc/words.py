"""Outcome spaces, events, and event words over a causal site.

An event word assigns to finitely many points an event (a subset of that
point's finite outcome space) and the unit event everywhere else.  Words are
the arguments of all correlation kernels.  With finite outcome spaces every
event semiring is the full power set, so countable additivity questions
reduce to finite ones.

Factors are keyed per point.  Equivalent points may carry their own factors
(they are intersected operator-side subject to the model's compatibility
conditions); this is what lets cylinder events over a trivially ordered site
and level-lifted processes with per-position devices share one calculus.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .sites import CausalSite

DEFAULT_WORD_CAP = 20000

POLICY_ALL_SUBSETS = "all_subsets"
POLICY_ATOMS_PLUS_UNIT = "atoms_plus_unit"


@dataclass(frozen=True)
class OutcomeSpaces:
    """Finite outcome set per point.  Labels are distinct and nonempty."""

    spaces: Mapping[str, tuple[str, ...]]

    def __post_init__(self):
        norm = {t: tuple(labels) for t, labels in self.spaces.items()}
        for t, labels in norm.items():
            if not labels:
                raise ValueError(f"outcome space at {t!r} is empty")
            if len(set(labels)) != len(labels):
                raise ValueError(f"outcome labels at {t!r} are not distinct")
        object.__setattr__(self, "spaces", norm)

    def outcomes(self, t: str) -> tuple[str, ...]:
        try:
            return self.spaces[t]
        except KeyError:
            raise KeyError(f"no outcome space declared at point {t!r}") from None

    def full(self, t: str) -> frozenset[str]:
        return frozenset(self.outcomes(t))

    def points(self) -> tuple[str, ...]:
        return tuple(self.spaces)

    def subset_sorted(self, t: str, b: Iterable[str]) -> tuple[str, ...]:
        order = {x: i for i, x in enumerate(self.outcomes(t))}
        b = frozenset(b)
        for x in b:
            if x not in order:
                raise KeyError(f"unknown outcome {x!r} at point {t!r}")
        return tuple(sorted(b, key=order.__getitem__))

    def bitmask(self, t: str, b: Iterable[str]) -> int:
        """Subset as a bitmask in outcome order (the subset sort key)."""
        order = {x: i for i, x in enumerate(self.outcomes(t))}
        return sum(1 << order[x] for x in frozenset(b))


@dataclass(frozen=True)
class Event:
    """An event over a block of mutually nonanticipatory points.

    The factor map covers the whole block; full factors are retained because
    the block an event lives over is part of its identity.
    """

    factors: tuple[tuple[str, frozenset[str]], ...]

    @staticmethod
    def from_dict(factors: Mapping[str, Iterable[str]]) -> "Event":
        return Event(tuple(sorted((t, frozenset(b)) for t, b in factors.items())))

    @property
    def block(self) -> tuple[str, ...]:
        return tuple(t for t, _ in self.factors)

    def factor(self, t: str) -> frozenset[str]:
        for u, b in self.factors:
            if u == t:
                return b
        raise KeyError(f"event has no factor at {t!r}")

    def is_unit(self, spaces: OutcomeSpaces) -> bool:
        return all(b == spaces.full(t) for t, b in self.factors)


def unit_event(block: Iterable[str], spaces: OutcomeSpaces) -> Event:
    return Event.from_dict({t: spaces.full(t) for t in block})


@dataclass(frozen=True)
class EventWord:
    """A finitely supported choice of events, unit outside the support.

    The canonical form stores only non-unit factors, sorted by point, so
    words compare and hash by their mathematical content and unit extension
    is the identity on the encoding.
    """

    factors: tuple[tuple[str, frozenset[str]], ...]

    @staticmethod
    def from_dict(
        factors: Mapping[str, Iterable[str]], spaces: OutcomeSpaces
    ) -> "EventWord":
        kept = {}
        for t, b in factors.items():
            b = frozenset(b)
            full = spaces.full(t)
            if not b <= full:
                raise KeyError(f"factor {sorted(b)} at {t!r} is not a subset of E")
            if b != full:
                kept[t] = b
        return EventWord(tuple(sorted(kept.items())))

    @property
    def support(self) -> tuple[str, ...]:
        return tuple(t for t, _ in self.factors)

    def factor(self, t: str, spaces: OutcomeSpaces) -> frozenset[str]:
        for u, b in self.factors:
            if u == t:
                return b
        return spaces.full(t)

    def as_dict(self) -> dict[str, frozenset[str]]:
        return dict(self.factors)

    def is_unit(self) -> bool:
        return not self.factors

    def has_empty_factor(self) -> bool:
        return any(not b for _, b in self.factors)


def unit_word() -> EventWord:
    return EventWord(())


def extend(word: EventWord, region: Iterable[str]) -> EventWord:
    """Extend a word from its support to a larger region by unit factors.

    The canonical encoding makes this the identity; the call still validates
    that the region really covers the support.
    """
    region = set(region)
    missing = [t for t in word.support if t not in region]
    if missing:
        raise ValueError(f"extension region does not cover the support: {missing}")
    return word


def right_multiply(word: EventWord, event: Event, spaces: OutcomeSpaces) -> EventWord:
    """Multiply the word by an event over its block: intersect factors on the
    block, leave everything else unchanged.  Idempotent."""
    out = dict(word.factors)
    for t, b in event.factors:
        out[t] = word.factor(t, spaces) & b
    return EventWord.from_dict(out, spaces)


def pointwise_product(a: EventWord, b: EventWord, spaces: OutcomeSpaces) -> EventWord:
    """Intersection at every point; the support stays within the union of
    supports."""
    out = dict(a.factors)
    for t, fb in b.factors:
        out[t] = a.factor(t, spaces) & fb
    return EventWord.from_dict(out, spaces)


def to_chain_sequence(
    site: CausalSite, word: EventWord, spaces: OutcomeSpaces
) -> tuple[tuple[str, ...], tuple[Event, ...]]:
    """Decompose a word into its support region and the chronological block
    events, earliest first."""
    support = word.support
    blocks = site.chain_decompose(support)
    events = tuple(
        Event.from_dict({t: word.factor(t, spaces) for t in sorted(block, key=site.index)})
        for block in blocks
    )
    return support, events


def reassemble(
    blocks: Iterable[Event], spaces: OutcomeSpaces
) -> EventWord:
    """Inverse of `to_chain_sequence` up to unit padding."""
    out: dict[str, frozenset[str]] = {}
    for ev in blocks:
        for t, b in ev.factors:
            if t in out:
                raise ValueError(f"blocks overlap at {t!r}")
            out[t] = b
    return EventWord.from_dict(out, spaces)


def enumerate_words(
    site: CausalSite,
    spaces: OutcomeSpaces,
    policy: str = POLICY_ALL_SUBSETS,
    cap: int = DEFAULT_WORD_CAP,
) -> list[EventWord]:
    """Deterministic word list over the whole site.

    `all_subsets` ranges over every factor assignment (the closure needed by
    additivity and factorization checks); `atoms_plus_unit` restricts factors
    to single outcomes and the unit.  Order is lexicographic in site point
    order, then in subset bitmask value in outcome order.
    """
    per_point: list[list[frozenset[str]]] = []
    count = 1
    for t in site.points:
        outs = spaces.outcomes(t)
        if policy == POLICY_ALL_SUBSETS:
            choices = [
                frozenset(c)
                for r in range(len(outs) + 1)
                for c in itertools.combinations(outs, r)
            ]
        elif policy == POLICY_ATOMS_PLUS_UNIT:
            choices = [frozenset(outs)] + [frozenset({x}) for x in outs]
        else:
            raise ValueError(f"unknown enumeration policy {policy!r}")
        choices.sort(key=lambda b: spaces.bitmask(t, b))
        per_point.append(choices)
        count *= len(choices)
        if count > cap:
            raise ValueError(
                f"word enumeration would produce {count}+ words, above the cap ({cap})"
            )
    words = []
    for combo in itertools.product(*per_point):
        words.append(
            EventWord.from_dict(
                {t: b for t, b in zip(site.points, combo)}, spaces
            )
        )
    return words


def enumerate_partitions(
    outcomes: Sequence[str], b: Iterable[str]
) -> list[tuple[frozenset[str], ...]]:
    """All partitions of the outcome set that contain `b` as a part.

    For empty `b` the partitions of the full set are returned; the empty
    event contributes the zero projector by convention, so it never appears
    as a part.
    """
    full = frozenset(outcomes)
    b = frozenset(b)
    if not b <= full:
        raise ValueError("event is not a subset of the outcome set")
    rest = sorted(full - b)
    if not b:
        return [p for p in _set_partitions(sorted(full))]
    return [
        tuple((b,) + p) for p in _set_partitions(rest)
    ]


def _set_partitions(items: Sequence[str]) -> list[tuple[frozenset[str], ...]]:
    """All set partitions of `items` into nonempty parts (the empty tuple for
    an empty input)."""
    items = list(items)
    if not items:
        return [()]
    head, rest = items[0], items[1:]
    out = []
    for part in _set_partitions(rest):
        out.append((frozenset({head}),) + part)
        for i, blockset in enumerate(part):
            out.append(part[:i] + (blockset | {head},) + part[i + 1 :])
    return out


def partitions_of_factor(
    outcomes: Sequence[str], b: Iterable[str]
) -> list[tuple[frozenset[str], ...]]:
    """All decompositions of the factor `b` itself into disjoint nonempty
    parts (used by additivity checks); the empty factor decomposes as the
    empty sum."""
    b = frozenset(b)
    if not b:
        return [()]
    order = {x: i for i, x in enumerate(outcomes)}
    return [
        tuple(sorted(p, key=lambda s: min(order[x] for x in s)))
        for p in _set_partitions(sorted(b, key=order.__getitem__))
    ]


def pull_back(
    word: EventWord,
    point_map: Mapping[str, str],
    outcome_maps: Mapping[str, Mapping[str, str]],
    spaces: OutcomeSpaces,
) -> EventWord:
    """Transform a word under a symmetry: the factor at the image point is
    pulled back through the outcome injection to the source point.

    `point_map` sends source points to image points; `outcome_maps[t]` sends
    outcomes at `t` to outcomes at `point_map[t]`.  The word must be unit
    outside the image of the map.
    """
    image = set(point_map.values())
    stranded = [t for t in word.support if t not in image]
    if stranded:
        raise ValueError(
            f"word has support outside the symmetry image at {stranded}; "
            "it cannot be pulled back"
        )
    out: dict[str, frozenset[str]] = {}
    for t, st in point_map.items():
        b = word.factor(st, spaces)
        if b == spaces.full(st):
            continue
        g = outcome_maps[t]
        out[t] = frozenset(x for x in spaces.outcomes(t) if g[x] in b)
    return EventWord.from_dict(out, spaces)
