"""Bridges to field correlations and to classical probability.

The level lift turns a family of per-position measurement devices into a
process on a finite stack of levels, each level causally equivalent inside
itself and below the next: arbitrarily ordered correlations of the devices
become causal correlations of the lifted process, and level-shift invariance
(ultrastationarity) is what replaces stationarity.  In the other direction, a
fully commuting model over a trivially ordered site is an ordinary
probability measure on the product outcome space, and the marginalization
defect of a noncommuting model is the interference that obstructs the
reduction.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .linalg import COMPLEX, dagger, opnorm
from .models import CheckEntry, HilbertModel, ModelReport, ModelSymmetry
from .kernels import _word_label
from .sites import CausalSite, SiteSymmetry
from .words import (
    EventWord,
    OutcomeSpaces,
    partitions_of_factor,
    unit_word,
)

ULTRASTATIONARITY_TOL = 1e-12
CLASSICAL_TOL = 1e-12
LIFT_TOL = 1e-8


class ReductionRefused(ValueError):
    """The model does not commute, so no additive reduction exists."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


def level_point(level: int, x: str) -> str:
    return f"{level}:{x}"


def split_level_point(t: str) -> tuple[int, str]:
    level, x = t.split(":", 1)
    return int(level), x


def lexicographic_site(
    positions: Sequence[str], depth: int, total_order: bool = False
) -> tuple[CausalSite, SiteSymmetry]:
    """Levels of position copies, preordered by level.

    Points of one level are causally equivalent by default; `total_order`
    instead orders them by position index, which makes every class a
    singleton.  The returned symmetry is the truncated level-shift semigroup:
    shift k moves level l to l + k and is undefined on levels that would
    leave the stack, and products past the top collapse onto the empty map.
    """
    if depth < 1:
        raise ValueError("depth must be at least 1")
    positions = list(positions)
    pts = [level_point(l, x) for l in range(depth) for x in positions]
    pos_index = {x: i for i, x in enumerate(positions)}

    def le(a: str, b: str) -> bool:
        la, xa = split_level_point(a)
        lb, xb = split_level_point(b)
        if total_order:
            return (la, pos_index[xa]) <= (lb, pos_index[xb])
        return la <= lb

    leq = tuple(tuple(le(a, b) for b in pts) for a in pts)
    site = CausalSite(
        points=tuple(pts),
        leq=leq,
        meta={"kind": "level_lift", "depth": depth, "positions": tuple(positions)},
    )
    elements = [f"shift{k}" for k in range(depth + 1)]
    maps = {}
    for k in range(depth + 1):
        maps[f"shift{k}"] = {
            level_point(l, x): level_point(l + k, x)
            for l in range(depth - k)
            for x in positions
        }
    compose = {
        (f"shift{a}", f"shift{b}"): f"shift{min(a + b, depth)}"
        for a in range(depth + 1)
        for b in range(depth + 1)
    }
    sym = SiteSymmetry(tuple(elements), maps, compose)
    return site, sym


def lift_process(
    field_atoms: Mapping[str, Mapping[str, np.ndarray]],
    initial: np.ndarray,
    depth: int,
    spaces: Mapping[str, Sequence[str]],
    total_order: bool = False,
) -> tuple[HilbertModel, CausalSite, SiteSymmetry]:
    """Copy one family of devices onto every level of the lifted site.

    The lifted model is constant along levels, fully normalized whenever the
    devices are, and carries the shift symmetry acting trivially on the state
    space and on outcomes.
    """
    positions = list(field_atoms)
    site, sym = lexicographic_site(positions, depth, total_order)
    initial = np.asarray(initial, dtype=COMPLEX)
    if initial.ndim == 1:
        initial = initial[:, None]
    dim = initial.shape[0]
    atoms = {}
    lifted_spaces = {}
    for l in range(depth):
        for x in positions:
            t = level_point(l, x)
            atoms[t] = {o: np.asarray(m, dtype=COMPLEX) for o, m in field_atoms[x].items()}
            lifted_spaces[t] = tuple(spaces[x])
    model_sym = {}
    for s in sym.elements:
        outcome_maps = {
            t: {o: o for o in lifted_spaces[t]} for t in sym.maps[s]
        }
        model_sym[s] = ModelSymmetry(v=np.eye(dim, dtype=COMPLEX), outcome_maps=outcome_maps)
    model = HilbertModel(
        dim=dim,
        embedding=initial,
        atoms=atoms,
        spaces=OutcomeSpaces(lifted_spaces),
        symmetry=model_sym,
    )
    return model, site, sym


def enumerate_level_words(
    model: HilbertModel, site: CausalSite, cap: int = 20000
) -> list[EventWord]:
    """Words with at most one supported position per level, the words whose
    kernel values carry the arbitrarily ordered device correlations."""
    depth = site.meta["depth"]
    positions = site.meta["positions"]
    per_level = []
    count = 1
    for l in range(depth):
        choices: list[tuple[str, frozenset[str]] | None] = [None]
        for x in positions:
            t = level_point(l, x)
            outs = model.spaces.outcomes(t)
            for r in range(len(outs) + 1):
                for c in itertools.combinations(outs, r):
                    if frozenset(c) != frozenset(outs):
                        choices.append((t, frozenset(c)))
        per_level.append(choices)
        count *= len(choices)
        if count > cap:
            raise ValueError(f"level word enumeration exceeds the cap ({cap})")
    words = []
    for combo in itertools.product(*per_level):
        factors = {t: b for entry in combo if entry is not None for t, b in [entry]}
        words.append(EventWord.from_dict(factors, model.spaces))
    return words


def shift_word(word: EventWord, k: int, depth: int, spaces) -> EventWord | None:
    """Move every supported level up by k; None when the word would leave
    the stack."""
    out = {}
    for t, b in word.factors:
        l, x = split_level_point(t)
        if l + k >= depth:
            return None
        out[level_point(l + k, x)] = b
    return EventWord.from_dict(out, spaces)


def check_ultrastationarity(
    model: HilbertModel,
    site: CausalSite,
    words: Sequence[EventWord],
    tol: float = ULTRASTATIONARITY_TOL,
) -> ModelReport:
    """Exhaustive level-shift invariance of the kernel over the word list."""
    depth = site.meta["depth"]
    feyn = {w: model.feynman(site, w) for w in words}

    def product_column(w: EventWord) -> np.ndarray:
        if w not in feyn:
            feyn[w] = model.feynman(site, w)
        return feyn[w]

    worst, wit = 0.0, ""
    for k in range(1, depth):
        shifted = {}
        for w in words:
            sw = shift_word(w, k, depth, model.spaces)
            if sw is not None:
                shifted[w] = sw
        for a, b in itertools.product(shifted, repeat=2):
            base = dagger(feyn[a]) @ feyn[b]
            moved = dagger(product_column(shifted[a])) @ product_column(shifted[b])
            r = opnorm(base - moved)
            if r > worst:
                worst, wit = r, f"shift {k} on ({_word_label(a)}, {_word_label(b)})"
    return ModelReport((CheckEntry("ultrastationarity", worst, wit, tol),))


@dataclass(frozen=True)
class LiftReport:
    ultrastationarity: CheckEntry
    constant_units: CheckEntry
    level_independent_events: CheckEntry
    narrow_units: CheckEntry
    decomposition: CheckEntry

    @property
    def ok(self) -> bool:
        return all(
            e.ok
            for e in (
                self.ultrastationarity,
                self.constant_units,
                self.level_independent_events,
                self.narrow_units,
                self.decomposition,
            )
        )

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "checks": [
                {
                    "condition": e.condition,
                    "residual": e.residual,
                    "witness": e.witness,
                    "tolerance": e.tolerance,
                }
                for e in (
                    self.ultrastationarity,
                    self.constant_units,
                    self.level_independent_events,
                    self.narrow_units,
                    self.decomposition,
                )
            ],
        }


def verify_lift(
    field_atoms: Mapping[str, Mapping[str, np.ndarray]],
    initial: np.ndarray,
    depth: int,
    spaces: Mapping[str, Sequence[str]],
    words: Sequence[EventWord] | None = None,
    tol: float = LIFT_TOL,
    cap: int = 20000,
) -> LiftReport:
    """End-to-end check of the level lift.

    Builds the lifted model, checks ultrastationarity exhaustively, runs the
    quotient reconstruction on the lifted table, and verifies that the
    reconstructed slice units are constant across levels (hence the units are
    the identity on the minimal space), that the reconstructed event
    projectors do not depend on the level, and that the reconstructed model
    reproduces the table.
    """
    from .reconstruct import reconstruct, verify_decomposition

    model, site, sym = lift_process(field_atoms, initial, depth, spaces)
    if words is None:
        words = enumerate_level_words(model, site, cap)
    ultra = check_ultrastationarity(model, site, words).entries[0]

    oracle = model.kernel_table(site, list(words), site_sym=sym)
    recon = reconstruct(oracle, strict_closure=False)

    worst_c, wit_c = 0.0, ""
    for (la, pa), (lb, pb) in itertools.combinations(
        recon.slice_projectors.items(), 2
    ):
        r = opnorm(pa - pb)
        if r > worst_c:
            worst_c, wit_c = r, f"slice spans {sorted(la)} vs {sorted(lb)}"
    constant_units = CheckEntry("constant_slice_units", worst_c, wit_c, tol)

    worst_n, wit_n = 0.0, ""
    eye = np.eye(recon.rank, dtype=COMPLEX)
    for k, p in recon.unit_p.items():
        r = opnorm(p - eye)
        if r > worst_n:
            worst_n, wit_n = r, f"unit of block {sorted(k)}"
    narrow_units = CheckEntry("narrow_units_on_minimal_space", worst_n, wit_n, tol)

    # Levels with at least one level below them: the bottom copy of a finite
    # truncation has no past to draw words from, so its operators are
    # under-determined by the one-device-per-level word system, exactly as an
    # untruncated stack never is.
    positions = site.meta["positions"]
    informed = range(1, depth)
    worst_l, wit_l = 0.0, ""
    for x in positions:
        for la, lb in itertools.combinations(informed, 2):
            ta, tb = level_point(la, x), level_point(lb, x)
            for o in model.spaces.outcomes(ta):
                r = opnorm(recon.model.atoms[ta][o] - recon.model.atoms[tb][o])
                if r > worst_l:
                    worst_l, wit_l = r, f"atom {o!r} of {x!r} at levels {la},{lb}"
    level_independent = CheckEntry("level_independent_events", worst_l, wit_l, tol)

    decomp = verify_decomposition(recon, oracle, tol)
    decomposition = CheckEntry(
        "decomposition", decomp.max_residual, decomp.witness, tol
    )
    return LiftReport(
        ultrastationarity=ultra,
        constant_units=constant_units,
        level_independent_events=level_independent,
        narrow_units=narrow_units,
        decomposition=decomposition,
    )


# -- classical reduction -------------------------------------------------------


@dataclass(frozen=True)
class ClassicalReduction:
    measure: dict[tuple[str, ...], float]
    trajectory_points: tuple[str, ...]
    total_mass: float
    factorization_residual: float
    additivity_residual: float
    marginal_residual: float
    tolerance: float

    @property
    def ok(self) -> bool:
        return (
            abs(self.total_mass - 1.0) <= self.tolerance
            and self.factorization_residual <= max(self.tolerance, 1e-9)
            and self.additivity_residual <= self.tolerance
            and self.marginal_residual <= self.tolerance
        )

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "points": list(self.trajectory_points),
            "measure": {",".join(k): v for k, v in self.measure.items()},
            "total_mass": self.total_mass,
            "factorization_residual": self.factorization_residual,
            "additivity_residual": self.additivity_residual,
            "marginal_residual": self.marginal_residual,
            "tolerance": self.tolerance,
        }


def classical_reduce(
    model: HilbertModel,
    site: CausalSite,
    tol: float = CLASSICAL_TOL,
    words: Sequence[EventWord] | None = None,
) -> ClassicalReduction:
    """Reduce a fully commuting scalar model to a probability measure on the
    trajectory space.

    Verifies the factorization of the kernel through pointwise products, the
    additivity of the induced set function in every argument, and the
    consistency of the marginals with the measures computed on every one-point
    sub-site.  Noncommuting models are refused, carrying the interference
    witness that names the obstruction.
    """
    if model.kdim != 1:
        raise ValueError("the classical reduction needs a scalar initial space")
    if not model.is_narrow(site):
        raise ValueError("the classical reduction needs a fully normalized model")
    # full commutativity, across every pair of points regardless of relation
    worst_comm, comm_wit = 0.0, ""
    for a, b in itertools.combinations(site.points, 2):
        for x, y in itertools.product(
            model.spaces.outcomes(a), model.spaces.outcomes(b)
        ):
            pa, pb = model.atoms[a][x], model.atoms[b][y]
            r = opnorm(pa @ pb - pb @ pa)
            if r > worst_comm:
                worst_comm, comm_wit = r, f"[{x!r}@{a!r}, {y!r}@{b!r}]"
    if worst_comm > 1e-9:
        witness = _interference_obstruction(model, site) or (
            f"commutator {comm_wit} has norm {worst_comm:.3g}"
        )
        raise ReductionRefused(
            "the model does not commute, so its distribution is not additive: "
            + witness,
            witness=witness,
        )

    pts = tuple(site.points)
    trajectories = list(
        itertools.product(*(model.spaces.outcomes(t) for t in pts))
    )
    measure: dict[tuple[str, ...], float] = {}
    for traj in trajectories:
        w = EventWord.from_dict(
            {t: {x} for t, x in zip(pts, traj)}, model.spaces
        )
        measure[traj] = model.probability(site, w)
    total = float(sum(measure.values()))

    # the kernel factorizes through pointwise products of the words
    from .words import enumerate_words, pointwise_product

    if words is None:
        words = enumerate_words(site, model.spaces)
    fact_res = 0.0
    for b, bp in itertools.product(words, repeat=2):
        direct = model.kernel(site, b, bp)
        merged = model.kernel(
            site, pointwise_product(b, bp, model.spaces), unit_word()
        )
        fact_res = max(fact_res, opnorm(direct - merged))

    # additivity in every argument: the measure of a cylinder with one factor
    # enlarged is the sum over its parts
    worst_add = 0.0
    for i, t in enumerate(pts):
        outs = model.spaces.outcomes(t)
        for rest in itertools.product(
            *(model.spaces.outcomes(u) for u in pts if u != t)
        ):
            for b in _nonempty_subsets(outs):
                factors = {u: {x} for u, x in zip([p for p in pts if p != t], rest)}
                factors[t] = set(b)
                w = EventWord.from_dict(factors, model.spaces)
                lhs = model.probability(site, w)
                rhs = sum(
                    measure[_traj_with(pts, rest, i, x)] for x in b
                )
                worst_add = max(worst_add, abs(lhs - rhs))

    # marginal consistency against every one-point-removed sub-site
    worst_marg = 0.0
    if len(pts) > 1:
        for drop in range(len(pts)):
            sub_pts = [p for j, p in enumerate(pts) if j != drop]
            sub_site = _subsite(site, sub_pts)
            for traj in itertools.product(
                *(model.spaces.outcomes(t) for t in sub_pts)
            ):
                w = EventWord.from_dict(
                    {t: {x} for t, x in zip(sub_pts, traj)}, model.spaces
                )
                direct = model.probability(sub_site, w)
                summed = sum(
                    v
                    for k, v in measure.items()
                    if tuple(x for j, x in enumerate(k) if j != drop) == traj
                )
                worst_marg = max(worst_marg, abs(direct - summed))

    return ClassicalReduction(
        measure=measure,
        trajectory_points=pts,
        total_mass=total,
        factorization_residual=fact_res,
        additivity_residual=worst_add,
        marginal_residual=worst_marg,
        tolerance=tol,
    )


def _nonempty_subsets(outs):
    for r in range(1, len(outs) + 1):
        yield from (frozenset(c) for c in itertools.combinations(outs, r))


def _traj_with(pts, rest, i, x):
    out = list(rest)
    out.insert(i, x)
    return tuple(out)


def _subsite(site: CausalSite, keep: Sequence[str]) -> CausalSite:
    idx = [site.index(t) for t in keep]
    leq = tuple(tuple(site.leq[a][b] for b in idx) for a in idx)
    return CausalSite(points=tuple(keep), leq=leq, meta=dict(site.meta))


def _interference_obstruction(model: HilbertModel, site: CausalSite) -> str | None:
    """Name a marginalization defect exhibiting the failure of additivity."""
    for t in site.points:
        if any(site.strictly_precedes(t, u) for u in site.points):
            defect = interference_witness(model, site, t)
            if defect > 1e-12:
                return (
                    f"marginalizing {t!r} changes later statistics by {defect:.3g}"
                )
    return None


def interference_witness(
    model: HilbertModel,
    site: CausalSite,
    t_marginal: str,
    cap: int = 20000,
) -> float:
    """Largest additivity defect from marginalizing one point.

    Compares the probability of every word supported strictly after the
    marginal point with the sum over any partition of the marginal outcome
    space inserted at that point.  Zero means the statistics at that point are
    classical: later observations cannot tell whether the marginal device
    fired.
    """
    if model.kdim != 1:
        raise ValueError("the interference witness needs a scalar initial space")
    later = [u for u in site.points if site.strictly_precedes(t_marginal, u)]
    per_point = []
    count = 1
    for u in later:
        outs = model.spaces.outcomes(u)
        subs = [
            frozenset(c) for r in range(len(outs) + 1)
            for c in itertools.combinations(outs, r)
        ]
        per_point.append([(u, b) for b in subs])
        count *= len(subs)
        if count > cap:
            raise ValueError(f"later-word enumeration exceeds the cap ({cap})")
    worst = 0.0
    outs_t = model.spaces.outcomes(t_marginal)
    for combo in itertools.product(*per_point):
        factors = {u: b for u, b in combo}
        w = EventWord.from_dict(factors, model.spaces)
        base = model.probability(site, w)
        for parts in partitions_of_factor(outs_t, frozenset(outs_t)):
            summed = 0.0
            for p in parts:
                wp = EventWord.from_dict({**factors, t_marginal: p}, model.spaces)
                summed += model.probability(site, wp)
            worst = max(worst, abs(base - summed))
    return worst
