"""Finite causal sites: preordered point sets and their derived order structure.

A site is a finite set of points with a reflexive transitive relation
("causality").  Two points may be equivalent (comparable both ways), strictly
ordered, or independent (incomparable).  The relation determines the
equivalence classes, the nonanticipatory subsets (sets in which no point
strictly precedes another), the maximal nonanticipatory subsets playing the
role of time slices, and the canonical chain decomposition of a finite
region into nonanticipatory blocks.

Geometric constructors (Minkowski cones, Galilean foliations) attach
coordinates as metadata only; all order logic runs on the relation matrix.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

EQUIVALENT = "equivalent"
PRECEDES = "precedes"
SUCCEEDS = "succeeds"
INDEPENDENT = "independent"

#: Hard ceiling on antichain enumeration, overridable per call.
DEFAULT_ANTICHAIN_CAP = 20000


@dataclass(frozen=True)
class CausalSite:
    """A finite preordered point set.

    `leq[i][j]` states that ``points[i] <= points[j]``.  The relation must be
    reflexive and transitively closed; a non-closed input is rejected rather
    than silently closed, to catch mistakes in hand-written fixtures.
    """

    points: tuple[str, ...]
    leq: tuple[tuple[bool, ...], ...]
    meta: Mapping[str, object] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        n = len(self.points)
        if len(set(self.points)) != n:
            raise ValueError("point identifiers must be distinct")
        if len(self.leq) != n or any(len(row) != n for row in self.leq):
            raise ValueError("relation matrix shape does not match the point list")
        for i in range(n):
            if not self.leq[i][i]:
                raise ValueError(f"relation is not reflexive at {self.points[i]!r}")
        for i, j, k in itertools.product(range(n), repeat=3):
            if self.leq[i][j] and self.leq[j][k] and not self.leq[i][k]:
                raise ValueError(
                    "relation is not transitively closed: "
                    f"{self.points[i]!r} <= {self.points[j]!r} <= {self.points[k]!r} "
                    f"but not {self.points[i]!r} <= {self.points[k]!r}"
                )
        object.__setattr__(self, "_index", {t: i for i, t in enumerate(self.points)})

    # -- basic relation queries ------------------------------------------

    def index(self, t: str) -> int:
        try:
            return self._index[t]
        except KeyError:
            raise KeyError(f"unknown point identifier {t!r}") from None

    def le(self, a: str, b: str) -> bool:
        return self.leq[self.index(a)][self.index(b)]

    def equivalent(self, a: str, b: str) -> bool:
        return self.le(a, b) and self.le(b, a)

    def strictly_precedes(self, a: str, b: str) -> bool:
        return self.le(a, b) and not self.le(b, a)

    def independent(self, a: str, b: str) -> bool:
        return not self.le(a, b) and not self.le(b, a)

    def classify_pair(self, a: str, b: str) -> str:
        """Classify an ordered pair as one of `equivalent`, `precedes`
        (a strictly before b), `succeeds`, or `independent`."""
        ab, ba = self.le(a, b), self.le(b, a)
        if ab and ba:
            return EQUIVALENT
        if ab:
            return PRECEDES
        if ba:
            return SUCCEEDS
        return INDEPENDENT

    def nonanticipatory_pair(self, a: str, b: str) -> bool:
        """Neither point strictly precedes the other."""
        return self.classify_pair(a, b) in (EQUIVALENT, INDEPENDENT)

    def is_nonanticipatory(self, pts: Iterable[str]) -> bool:
        pts = list(pts)
        return all(
            self.nonanticipatory_pair(a, b) for a, b in itertools.combinations(pts, 2)
        )

    # -- derived subsets --------------------------------------------------

    def maximal_points(self, pts: Iterable[str]) -> frozenset[str]:
        """Points of `pts` not strictly preceding any other point of `pts`."""
        pts = list(pts)
        return frozenset(
            a for a in pts if not any(self.strictly_precedes(a, b) for b in pts)
        )

    def minimal_points(self, pts: Iterable[str]) -> frozenset[str]:
        pts = list(pts)
        return frozenset(
            a for a in pts if not any(self.strictly_precedes(b, a) for b in pts)
        )

    def down_set(self, pts: Iterable[str]) -> frozenset[str]:
        """All site points lying below (<=) some point of `pts`."""
        pts = list(pts)
        return frozenset(t for t in self.points if any(self.le(t, b) for b in pts))

    def chain_decompose(self, region: Iterable[str]) -> tuple[frozenset[str], ...]:
        """Canonical partition of a finite subset into nonanticipatory blocks,
        earliest block first.

        The recursion peels off the maximal points of the remaining set; the
        resulting blocks partition the input and each block strictly
        anticipates every earlier one.  The empty set yields the empty chain.
        """
        remaining = {t for t in region}
        for t in remaining:
            self.index(t)
        blocks: list[frozenset[str]] = []
        while remaining:
            top = self.maximal_points(remaining)
            blocks.append(top)
            remaining -= top
        blocks.reverse()
        return tuple(blocks)


@dataclass(frozen=True)
class SiteClasses:
    """Equivalence classes and the antichain structure of a site.

    `equivalence_classes` is the factor set (each class listed in point
    order); `maximal_antichains` is the complete list of maximal
    nonanticipatory subsets (the time slices).
    """

    site: CausalSite
    equivalence_classes: tuple[tuple[str, ...], ...]
    maximal_antichains: tuple[frozenset[str], ...]

    def class_of(self, t: str) -> tuple[str, ...]:
        for cls in self.equivalence_classes:
            if t in cls:
                return cls
        raise KeyError(f"unknown point identifier {t!r}")

    def representative(self, t: str) -> str:
        return self.class_of(t)[0]

    def all_nonanticipatory(self, cap: int = DEFAULT_ANTICHAIN_CAP) -> list[frozenset[str]]:
        """Every nonanticipatory subset (including the empty set), in a
        deterministic order.  Refuses when the count would exceed `cap`."""
        site = self.site
        out: list[frozenset[str]] = [frozenset()]
        for t in site.points:
            extensions = []
            for cur in out:
                if all(site.nonanticipatory_pair(t, u) for u in cur):
                    extensions.append(cur | {t})
            out.extend(extensions)
            if len(out) > cap:
                raise ValueError(
                    f"nonanticipatory subset count exceeds the cap ({cap})"
                )
        return out

    # -- the semilattice of nonanticipatory subsets -----------------------

    def join(self, j: Iterable[str], jp: Iterable[str]) -> frozenset[str]:
        """max(j ∪ j'): the maximal points of the union."""
        return self.site.maximal_points(set(j) | set(jp))

    def subset_le(self, j: Iterable[str], jp: Iterable[str]) -> bool:
        """Preorder on nonanticipatory subsets: every point of j lies below
        some point of j'."""
        j, jp = set(j), set(jp)
        return all(any(self.site.le(a, b) for b in jp) for a in j)

    def subset_strictly_after(self, j: Iterable[str], jp: Iterable[str]) -> bool:
        """Strict order: j comes strictly after j' (join is j, disjoint)."""
        j, jp = frozenset(j), frozenset(jp)
        return bool(j) and self.join(j, jp) == j and not (j & jp)

    def antichains_containing(self, k: Iterable[str]) -> list[frozenset[str]]:
        k = frozenset(k)
        return [l for l in self.maximal_antichains if k <= l]

    def minimal_antichains(self) -> list[frozenset[str]]:
        """Members of the maximal-antichain list that are minimal in the
        subset preorder (the finite stand-ins for the distant past)."""
        out = []
        for l in self.maximal_antichains:
            below = [
                lp
                for lp in self.maximal_antichains
                if lp != l and self.subset_le(lp, l) and not self.subset_le(l, lp)
            ]
            if not below:
                out.append(l)
        return out


def derive_classes(site: CausalSite) -> SiteClasses:
    """Compute the factor set and all maximal nonanticipatory subsets."""
    seen: set[str] = set()
    classes: list[tuple[str, ...]] = []
    for t in site.points:
        if t in seen:
            continue
        cls = tuple(u for u in site.points if site.equivalent(t, u))
        seen.update(cls)
        classes.append(cls)
    return SiteClasses(
        site=site,
        equivalence_classes=tuple(classes),
        maximal_antichains=tuple(_maximal_antichains(site)),
    )


def _maximal_antichains(site: CausalSite) -> list[frozenset[str]]:
    """All maximal nonanticipatory subsets, by growing compatible sets point
    by point and keeping the inclusion-maximal ones."""
    collected: list[frozenset[str]] = []

    def grow(current: frozenset[str], candidates: list[str]):
        extended = False
        for i, t in enumerate(candidates):
            if all(site.nonanticipatory_pair(t, u) for u in current):
                extended = True
                grow(current | {t}, candidates[i + 1 :])
        if not extended:
            # maximal within the remaining candidates; check global maximality
            if all(
                t in current or not all(site.nonanticipatory_pair(t, u) for u in current)
                for t in site.points
            ):
                if current not in collected:
                    collected.append(current)

    grow(frozenset(), list(site.points))
    return collected


def enumerate_maximal_antichains(site: CausalSite) -> list[frozenset[str]]:
    """Standalone enumeration of the maximal nonanticipatory subsets."""
    return list(derive_classes(site).maximal_antichains)


# -- symmetries ------------------------------------------------------------


@dataclass(frozen=True)
class SiteSymmetry:
    """A semigroup acting on the site by (possibly partial) monotone maps.

    `maps[s]` sends points to points; a point missing from the mapping is
    outside the domain of `s` (finite truncations of shift actions need
    this).  `compose[(s, sp)]` names the product element, with the action
    convention ``(s·sp)(t) = s(sp(t))``.
    """

    elements: tuple[str, ...]
    maps: Mapping[str, Mapping[str, str]]
    compose: Mapping[tuple[str, str], str]

    def apply(self, s: str, t: str) -> str | None:
        return self.maps[s].get(t)

    def image(self, s: str) -> frozenset[str]:
        return frozenset(self.maps[s].values())

    def domain(self, s: str) -> frozenset[str]:
        return frozenset(self.maps[s].keys())


@dataclass(frozen=True)
class SymmetryReport:
    monotonicity_violations: tuple[tuple[str, str, str], ...]  # (s, t, t')
    composition_violations: tuple[tuple[str, str, str], ...]  # (s, s', t)
    unknown_targets: tuple[tuple[str, str], ...]  # (s, t)

    @property
    def ok(self) -> bool:
        return not (
            self.monotonicity_violations
            or self.composition_violations
            or self.unknown_targets
        )


def check_symmetry(site: CausalSite, sym: SiteSymmetry) -> SymmetryReport:
    """Diagnose a symmetry action: every map must preserve and reflect the
    relation on its domain, and maps must compose per the semigroup table."""
    mono: list[tuple[str, str, str]] = []
    comp: list[tuple[str, str, str]] = []
    unknown: list[tuple[str, str]] = []
    for s in sym.elements:
        for t, st in sym.maps[s].items():
            if st not in site._index or t not in site._index:
                unknown.append((s, t))
    if unknown:
        return SymmetryReport((), (), tuple(unknown))
    for s in sym.elements:
        m = sym.maps[s]
        for t, tp in itertools.product(m, repeat=2):
            if site.le(t, tp) != site.le(m[t], m[tp]):
                mono.append((s, t, tp))
    for s, sp in itertools.product(sym.elements, repeat=2):
        if (s, sp) not in sym.compose:
            continue
        prod = sym.compose[(s, sp)]
        for t, spt in sym.maps[sp].items():
            lhs = sym.maps[s].get(spt)
            rhs = sym.maps[prod].get(t)
            if lhs != rhs:
                comp.append((s, sp, t))
    return SymmetryReport(tuple(mono), tuple(comp), ())


def trivial_symmetry(site: CausalSite) -> SiteSymmetry:
    ident = {t: t for t in site.points}
    return SiteSymmetry(("id",), {"id": ident}, {("id", "id"): "id"})


# -- geometric constructors -------------------------------------------------


def _exact(x) -> Fraction:
    # Every int/float/Fraction input is an exact rational; comparisons below
    # are therefore unambiguous for the numbers as given.
    return Fraction(x)


def minkowski_site(
    coords: Sequence[tuple],
    c=1,
    labels: Sequence[str] | None = None,
    degeneracy_margin: float = 1e-12,
) -> CausalSite:
    """Site of space-time events ordered by the light cone.

    Each coordinate is ``(tau, r1, ..., rd)``; ``t <= t'`` holds when the
    spatial separation is within ``c * (tau' - tau)``.  Comparisons are done
    in exact rational arithmetic.  Float inputs additionally must not sit
    within `degeneracy_margin` of the light cone (exactly lightlike pairs are
    allowed): near-cone float pairs almost certainly encode an intent the
    float rounding already betrayed.
    """
    if _exact(c) <= 0:
        raise ValueError("propagation speed must be positive")
    pts = list(coords)
    if labels is None:
        labels = [_coord_label(p) for p in pts]
    if len(labels) != len(pts):
        raise ValueError("labels and coordinates differ in length")
    c2 = _exact(c) ** 2
    n = len(pts)
    leq = [[False] * n for _ in range(n)]
    for i, j in itertools.product(range(n), repeat=2):
        ti, tj = pts[i], pts[j]
        if len(ti) != len(tj) or len(ti) < 1:
            raise ValueError("coordinates must share a common dimension >= 1")
        dtau = _exact(tj[0]) - _exact(ti[0])
        dr2 = sum((_exact(a) - _exact(b)) ** 2 for a, b in zip(ti[1:], tj[1:]))
        margin = c2 * dtau * dtau - dr2
        floaty = any(isinstance(x, float) and not float(x).is_integer() for x in ti + tj)
        if i != j and floaty and margin != 0 and abs(margin) <= Fraction(degeneracy_margin):
            raise ValueError(
                f"pair {labels[i]!r}, {labels[j]!r} is within {degeneracy_margin} "
                "of the light cone; the causal order would be ambiguous"
            )
        leq[i][j] = dtau >= 0 and dr2 <= c2 * dtau * dtau
    return CausalSite(
        points=tuple(labels),
        leq=tuple(tuple(row) for row in leq),
        meta={"kind": "minkowski", "c": c, "coords": {l: tuple(p) for l, p in zip(labels, pts)}},
    )


def galilean_site(
    taus: Sequence, labels: Sequence[str] | None = None
) -> CausalSite:
    """Linear preorder by absolute time; equal-time points are equivalent."""
    taus = list(taus)
    if labels is None:
        labels = [f"p{i}" for i in range(len(taus))]
    if len(labels) != len(taus):
        raise ValueError("labels and times differ in length")
    exact = [_exact(t) for t in taus]
    leq = tuple(tuple(a <= b for b in exact) for a in exact)
    return CausalSite(
        points=tuple(labels),
        leq=leq,
        meta={"kind": "galilean", "tau": {l: t for l, t in zip(labels, taus)}},
    )


def chain_site(labels: Sequence[str]) -> CausalSite:
    """Totally ordered site in the given label order."""
    n = len(labels)
    leq = tuple(tuple(i <= j for j in range(n)) for i in range(n))
    return CausalSite(points=tuple(labels), leq=leq, meta={"kind": "chain"})


def discrete_site(labels: Sequence[str]) -> CausalSite:
    """Trivial causality: all points mutually equivalent."""
    n = len(labels)
    leq = tuple(tuple(True for _ in range(n)) for _ in range(n))
    return CausalSite(points=tuple(labels), leq=leq, meta={"kind": "discrete"})


def antichain_site(labels: Sequence[str]) -> CausalSite:
    """All points pairwise independent."""
    n = len(labels)
    leq = tuple(tuple(i == j for j in range(n)) for i in range(n))
    return CausalSite(points=tuple(labels), leq=leq, meta={"kind": "antichain"})


def _coord_label(p: tuple) -> str:
    return "(" + ",".join(_num_label(x) for x in p) + ")"


def _num_label(x) -> str:
    f = float(x)
    return str(int(f)) if f.is_integer() else str(x)
