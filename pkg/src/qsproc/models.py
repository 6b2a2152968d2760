"""Finite-dimensional measurement models and their correlation kernels.

A model consists of a state space H, an isometric embedding of an initial
space K, per-point projector families given by atomic projectors (one per
outcome), optional unit-projector families for the relaxed normalization,
optional controlling-algebra generators, and optional symmetry data.

The chronological product of the event projectors of a word applied to the
embedding is the model's fundamental object; every kernel value is an inner
product of two such products.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import linalg
from .linalg import COMPLEX, dagger, opnorm
from .sites import CausalSite, SiteClasses, SiteSymmetry, derive_classes
from .words import (
    Event,
    EventWord,
    OutcomeSpaces,
    partitions_of_factor,
    pull_back,
)

PROJECTOR_TOL = 1e-10


@dataclass(frozen=True)
class ModelSymmetry:
    """Action of one semigroup element on the model: an isometry of H and,
    per source point, the outcome injection into the image point's space."""

    v: np.ndarray
    outcome_maps: Mapping[str, Mapping[str, str]]


@dataclass(frozen=True, eq=False)
class HilbertModel:
    dim: int
    embedding: np.ndarray  # dim x kdim isometry
    atoms: Mapping[str, Mapping[str, np.ndarray]]  # point -> outcome -> dim x dim
    spaces: OutcomeSpaces
    units_p: Mapping[frozenset, np.ndarray] = field(default_factory=dict)
    units_i: Mapping[frozenset, np.ndarray] = field(default_factory=dict)
    algebra: Mapping[frozenset, tuple] = field(default_factory=dict)
    symmetry: Mapping[str, ModelSymmetry] = field(default_factory=dict)

    def __post_init__(self):
        emb = np.asarray(self.embedding, dtype=COMPLEX)
        if emb.ndim == 1:
            emb = emb[:, None]
        if emb.shape[0] != self.dim:
            raise ValueError("embedding row count must equal dim")
        object.__setattr__(self, "embedding", emb)
        atoms = {
            t: {x: np.asarray(m, dtype=COMPLEX) for x, m in fam.items()}
            for t, fam in self.atoms.items()
        }
        for t, fam in atoms.items():
            declared = set(self.spaces.outcomes(t))
            if set(fam) != declared:
                raise ValueError(
                    f"projector family at {t!r} does not match the outcome space"
                )
            for x, m in fam.items():
                if m.shape != (self.dim, self.dim):
                    raise ValueError(f"projector at {t!r}/{x!r} has wrong shape")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(
            self, "units_p", {frozenset(k): np.asarray(v, dtype=COMPLEX) for k, v in self.units_p.items()}
        )
        object.__setattr__(
            self, "units_i", {frozenset(k): np.asarray(v, dtype=COMPLEX) for k, v in self.units_i.items()}
        )
        object.__setattr__(
            self,
            "algebra",
            {
                frozenset(k): tuple(np.asarray(g, dtype=COMPLEX) for g in gens)
                for k, gens in self.algebra.items()
            },
        )

    # -- basic structure ---------------------------------------------------

    @property
    def kdim(self) -> int:
        return self.embedding.shape[1]

    @property
    def points(self) -> tuple[str, ...]:
        return tuple(self.atoms)

    def identity(self) -> np.ndarray:
        return np.eye(self.dim, dtype=COMPLEX)

    def initial_projector(self) -> np.ndarray:
        return self.embedding @ dagger(self.embedding)

    def point_projector(self, t: str, b: Iterable[str]) -> np.ndarray:
        """Projector of the event `b` at point `t` (sum of atoms)."""
        fam = self.atoms[t]
        out = np.zeros((self.dim, self.dim), dtype=COMPLEX)
        for x in frozenset(b):
            try:
                out += fam[x]
            except KeyError:
                raise KeyError(f"unknown outcome {x!r} at point {t!r}") from None
        return out

    def point_unit(self, t: str) -> np.ndarray:
        return self.point_projector(t, self.spaces.full(t))

    def unit_p(self, k: Iterable[str]) -> np.ndarray:
        """Unit projector of a block: supplied value, else the product of the
        per-point units (the identity for fully normalized models)."""
        k = frozenset(k)
        if not k:
            return self.identity()
        if k in self.units_p:
            return self.units_p[k]
        out = self.identity()
        for t in sorted(k):
            out = out @ self.point_unit(t)
        return out

    def unit_i(self, k: Iterable[str]) -> np.ndarray:
        k = frozenset(k)
        if not k:
            return self.initial_projector()
        if k in self.units_i:
            return self.units_i[k]
        return self.identity()

    def is_narrow(self, site: CausalSite, tol: float = PROJECTOR_TOL) -> bool:
        """Fully normalized: every unit projector is the identity."""
        eye = self.identity()
        for t in site.points:
            if opnorm(self.point_unit(t) - eye) > tol:
                return False
        return all(opnorm(p - eye) <= tol for p in self.units_p.values())

    # -- chronological products and kernels ---------------------------------

    def block_projector(self, site: CausalSite, event: Event) -> np.ndarray:
        """Assembled projector of a block event: the product of the factor
        projectors in site point order, times the block unit when one is
        declared.  Valid models make the factors commute, so the order is a
        convention, not a choice."""
        out = self.identity()
        for t in sorted(event.block, key=site.index):
            out = out @ self.point_projector(t, event.factor(t))
        k = frozenset(event.block)
        if k in self.units_p:
            out = out @ self.units_p[k]
        return out

    def feynman(
        self,
        site: CausalSite,
        word: EventWord,
        base: Iterable[str] | None = None,
        interleave_units: bool = False,
    ) -> np.ndarray:
        """Chronologically ordered product of the word's block projectors
        applied to the initial embedding (earliest applied first).

        With a `base` block the product ends on that block's essential-space
        unit instead of the embedding; `interleave_units` additionally
        applies each block's essential unit before its projector, the form
        taken by the relaxed normalization.
        """
        blocks = site.chain_decompose(word.support)
        if base is None:
            out = np.array(self.embedding)
        else:
            out = np.array(self.unit_i(base))
        for block in blocks:
            ev = Event.from_dict({t: word.factor(t, self.spaces) for t in block})
            out = self.block_projector(site, ev) @ out
            if interleave_units:
                out = self.unit_i(block) @ out
        return out

    def probability(self, site: CausalSite, word: EventWord) -> float:
        """Probability of observing the word's events in chronological order,
        for a scalar initial space."""
        if self.kdim != 1:
            raise ValueError("probabilities need a one-dimensional initial space")
        f = self.feynman(site, word)
        return float(np.real(dagger(f) @ f)[0, 0])

    def kernel(self, site: CausalSite, b: EventWord, bp: EventWord) -> np.ndarray:
        """Correlation kernel value: the operator on K pairing the two
        chronological products."""
        return dagger(self.feynman(site, b)) @ self.feynman(site, bp)

    def kernel_table(
        self,
        site: CausalSite,
        word_list: Sequence[EventWord],
        classes: SiteClasses | None = None,
        site_sym: SiteSymmetry | None = None,
    ):
        """Total kernel map on a word list, packaged with the symmetry data.

        Import is deferred to avoid a cycle with the oracle module."""
        from .kernels import KernelOracle, OracleSymmetry

        classes = classes or derive_classes(site)
        n = len(word_list)
        feyn = np.stack([self.feynman(site, w) for w in word_list]) \
            if word_list else np.zeros((0, self.dim, self.kdim), dtype=COMPLEX)
        table = np.einsum("iak,jal->ijkl", np.conjugate(feyn), feyn, optimize=True)
        sym = {}
        for s, ms in self.symmetry.items():
            if site_sym is None or s not in site_sym.maps:
                raise ValueError(f"model symmetry {s!r} has no site action")
            u = dagger(self.embedding) @ ms.v @ self.embedding
            sym[s] = OracleSymmetry(
                point_map=dict(site_sym.maps[s]), outcome_maps=ms.outcome_maps, u=u
            )
        return KernelOracle(
            site=site,
            classes=classes,
            spaces=self.spaces,
            kdim=self.kdim,
            words=tuple(word_list),
            table=table,
            symmetry=sym,
            algebra={k: tuple(dagger(self.embedding) @ g @ self.embedding for g in gens)
                     for k, gens in self.algebra.items()},
            model=self,
        )


# -- validation --------------------------------------------------------------


@dataclass(frozen=True)
class CheckEntry:
    condition: str
    residual: float
    witness: str
    tolerance: float

    @property
    def ok(self) -> bool:
        return self.residual <= self.tolerance


@dataclass(frozen=True)
class ModelReport:
    entries: tuple[CheckEntry, ...]

    @property
    def ok(self) -> bool:
        return all(e.ok for e in self.entries)

    def violations(self) -> tuple[CheckEntry, ...]:
        return tuple(e for e in self.entries if not e.ok)

    def worst(self, condition: str) -> CheckEntry | None:
        cands = [e for e in self.entries if e.condition == condition]
        if not cands:
            return None
        return max(cands, key=lambda e: e.residual)

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "violations": [
                {
                    "condition": e.condition,
                    "residual": e.residual,
                    "witness": e.witness,
                    "tolerance": e.tolerance,
                }
                for e in self.violations()
            ],
        }


def check_model(
    model: HilbertModel,
    site: CausalSite,
    classes: SiteClasses | None = None,
    tol: float = PROJECTOR_TOL,
    site_sym: SiteSymmetry | None = None,
) -> ModelReport:
    """Verify the whole contract of a measurement model.

    Checked, with one entry per worst offender of each condition: projector
    property and mutual orthogonality of atoms; resolution of each block unit
    by every partition; compatibility (commutation and product-projector
    property) at equivalent and independent pairs; monotonicity of the
    essential units; the unit-balance between event units and essential units
    on every time slice; commutation with declared algebra generators; and
    the symmetry intertwining relations.
    """
    classes = classes or derive_classes(site)
    entries: list[CheckEntry] = []

    def record(condition, residual, witness, tolerance=tol):
        entries.append(CheckEntry(condition, float(residual), witness, tolerance))

    eye = model.identity()

    record(
        "embedding_isometry",
        opnorm(dagger(model.embedding) @ model.embedding - np.eye(model.kdim)),
        "initial embedding",
    )

    # per-point families: Hermitian idempotent atoms, mutually orthogonal,
    # every partition of the unit event resolving the point unit
    for t in site.points:
        outs = model.spaces.outcomes(t)
        worst_p, wit_p = 0.0, ""
        for x in outs:
            r = linalg.projector_defect(model.atoms[t][x])
            if r > worst_p:
                worst_p, wit_p = r, f"atom {x!r} at {t!r}"
        record("projector", worst_p, wit_p)
        worst_o, wit_o = 0.0, ""
        for x, y in itertools.combinations(outs, 2):
            r = opnorm(model.atoms[t][x] @ model.atoms[t][y])
            if r > worst_o:
                worst_o, wit_o = r, f"atoms {x!r},{y!r} at {t!r}"
        record("orthogonality", worst_o, wit_o)
        unit = model.unit_p({t})
        worst_r, wit_r = 0.0, ""
        for parts in partitions_of_factor(outs, frozenset(outs)):
            total = sum(
                (model.point_projector(t, p) for p in parts),
                start=np.zeros_like(unit),
            )
            r = opnorm(total - unit)
            if r > worst_r:
                worst_r, wit_r = r, f"partition {[sorted(p) for p in parts]} at {t!r}"
        record("resolution", worst_r, wit_r)

    # compatibility across nonanticipatory pairs
    worst_eq, wit_eq = 0.0, ""
    worst_ind, wit_ind = 0.0, ""
    for a, b in itertools.combinations(site.points, 2):
        rel_eq = site.equivalent(a, b)
        rel_ind = site.independent(a, b)
        if not (rel_eq or rel_ind):
            continue
        for ba in _all_subsets(model.spaces.outcomes(a)):
            pa = model.point_projector(a, ba)
            for bb in _all_subsets(model.spaces.outcomes(b)):
                pb = model.point_projector(b, bb)
                prod = pa @ pb
                r = max(opnorm(prod - pb @ pa), linalg.projector_defect(prod))
                wit = f"events {sorted(ba)}@{a!r}, {sorted(bb)}@{b!r}"
                if rel_eq and r > worst_eq:
                    worst_eq, wit_eq = r, wit
                if rel_ind and r > worst_ind:
                    worst_ind, wit_ind = r, wit
    record("equivalent_compatibility", worst_eq, wit_eq)
    record("independent_compatibility", worst_ind, wit_ind)

    # unit balance on every slice: meet of event units = join of essential units
    worst_u, wit_u = 0.0, ""
    for l in classes.maximal_antichains:
        blocks = _blocks_within(classes, l)
        meet = linalg.meet_projectors(
            [model.unit_p(k) for k in blocks] + [eye]
        )
        join = linalg.join_projectors(
            [model.unit_i(k) for k in blocks] + [model.initial_projector()]
        )
        r = opnorm(meet - join)
        if r > worst_u:
            worst_u, wit_u = r, f"slice {sorted(l)}"
    record("unit_balance", worst_u, wit_u)

    # essential units nondecreasing
    worst_m, wit_m = 0.0, ""
    keyset = set(model.units_i) | {frozenset({t}) for t in site.points}
    for k, kp in itertools.product(keyset, repeat=2):
        if not k or not kp or not classes.subset_le(k, kp):
            continue
        ik, ikp = model.unit_i(k), model.unit_i(kp)
        r = opnorm(ik @ ikp - ik)
        if r > worst_m:
            worst_m, wit_m = r, f"{sorted(k)} <= {sorted(kp)}"
    record("unit_monotone", worst_m, wit_m)

    # commutation with controlling algebra generators
    worst_c, wit_c = 0.0, ""
    for k, gens in model.algebra.items():
        for t in k:
            for b in _all_subsets(model.spaces.outcomes(t)):
                p = model.point_projector(t, b)
                for gi, g in enumerate(gens):
                    r = opnorm(p @ g - g @ p)
                    if r > worst_c:
                        worst_c, wit_c = r, f"event {sorted(b)}@{t!r} vs generator {gi} of {sorted(k)}"
    record("algebra_commutation", worst_c, wit_c)

    # symmetry intertwining: V pi(B^s) = pi(st)(B) V P_t
    worst_s, wit_s = 0.0, ""
    for s, ms in model.symmetry.items():
        v = np.asarray(ms.v, dtype=COMPLEX)
        r_iso = opnorm(dagger(v) @ v - eye)
        if r_iso > worst_s:
            worst_s, wit_s = r_iso, f"isometry of {s!r}"
        pmap = dict(site_sym.maps[s]) if site_sym and s in site_sym.maps else {}
        for t, st in pmap.items():
            g = ms.outcome_maps[t]
            for b in _all_subsets(model.spaces.outcomes(st)):
                bs = frozenset(x for x in model.spaces.outcomes(t) if g[x] in b)
                lhs = v @ model.point_projector(t, bs)
                rhs = model.point_projector(st, b) @ v @ model.unit_p({t})
                r = opnorm(lhs - rhs)
                if r > worst_s:
                    worst_s, wit_s = r, f"{s!r} at {t!r} with event {sorted(b)}"
    record("covariance", worst_s, wit_s)

    return ModelReport(tuple(entries))


def _all_subsets(outs: Sequence[str]):
    for r in range(len(outs) + 1):
        yield from (frozenset(c) for c in itertools.combinations(outs, r))


def _blocks_within(classes: SiteClasses, l: frozenset[str]) -> list[frozenset[str]]:
    """Nonempty nonanticipatory subsets of a slice, kept small by going
    through the slice's points and classes rather than the full powerset."""
    site = classes.site
    pts = sorted(l, key=site.index)
    out: list[frozenset[str]] = [frozenset()]
    for t in pts:
        out.extend([cur | {t} for cur in out])
    return [k for k in out if k]


def transformed_word(
    model: HilbertModel, s: str, site_sym: SiteSymmetry, word: EventWord
) -> EventWord:
    """Pull a word back through the model's symmetry element `s`."""
    ms = model.symmetry[s]
    return pull_back(word, dict(site_sym.maps[s]), ms.outcome_maps, model.spaces)
