"""Wide-sense equivalence of models and the intertwining unitary.

Two models over the same site, outcome spaces, and initial space are
equivalent in the wide sense when their kernel tables coincide.  The minimal
modification of a model compresses it to the span of its chronological
product vectors; minimal equivalent models are unitarily equivalent, and the
unitary is pinned down by matching product vectors with the identity phase on
the initial space.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import linalg
from .linalg import COMPLEX, dagger, opnorm
from .models import HilbertModel, ModelSymmetry
from .sites import CausalSite, SiteClasses, SiteSymmetry, derive_classes
from .words import EventWord, enumerate_words

EQUIV_TOL = 1e-8
ISOMETRY_TOL = 1e-10


class EquivalenceRefused(ValueError):
    """Inputs do not satisfy a precondition (non-minimal or inequivalent)."""


def _feynman_stack(model: HilbertModel, site: CausalSite, words) -> np.ndarray:
    """All chronological product columns, word-major (kdim columns each)."""
    cols = [model.feynman(site, w) for w in words]
    return np.hstack(cols) if cols else np.zeros((model.dim, 0), dtype=COMPLEX)


def minimal_rank(model: HilbertModel, site: CausalSite, words, rel_tol=1e-9) -> int:
    stack = _feynman_stack(model, site, words)
    s = np.linalg.svd(stack, compute_uv=False)
    if s.size == 0:
        return 0
    return int(np.sum(s > rel_tol * s[0]))


def is_minimal(model: HilbertModel, site: CausalSite, words, rel_tol=1e-9) -> bool:
    return minimal_rank(model, site, words, rel_tol) == model.dim


def minimal_modification(
    model: HilbertModel,
    site: CausalSite,
    words: Sequence[EventWord] | None = None,
    classes: SiteClasses | None = None,
    regular: bool = False,
    rel_tol: float = 1e-9,
    antichain_cap: int = 4096,
) -> HilbertModel:
    """Compress a model to the span of its chronological product vectors.

    The produced model carries the canonical unit families: event units are
    spans of products over words below some containing slice, essential units
    are spans over words below the block itself (or, with `regular=True`,
    meets of the slice spans, the form appropriate for regular processes).
    The kernel table is unchanged.
    """
    classes = classes or derive_classes(site)
    if words is None:
        words = enumerate_words(site, model.spaces)
    stack = _feynman_stack(model, site, words)
    u, s, _ = np.linalg.svd(stack, full_matrices=False)
    keep = s > rel_tol * (s[0] if s.size else 0.0)
    w = u[:, keep]  # orthonormal basis of the minimal subspace
    wd = dagger(w)

    word_index = {word: i for i, word in enumerate(words)}
    kdim = model.kdim

    def span_projector(eligible_words) -> np.ndarray:
        cols = [
            stack[:, word_index[wd_] * kdim : (word_index[wd_] + 1) * kdim]
            for wd_ in eligible_words
        ]
        mat = np.hstack(cols) if cols else np.zeros((model.dim, 0), dtype=COMPLEX)
        return linalg.projector_onto_columns(mat, rel_tol)

    down = {l: site.down_set(l) for l in classes.maximal_antichains}
    slice_proj = {
        l: span_projector([x for x in words if set(x.support) <= down[l]])
        for l in classes.maximal_antichains
    }

    blocks = [k for k in classes.all_nonanticipatory(antichain_cap) if k]
    units_p: dict[frozenset, np.ndarray] = {}
    units_i: dict[frozenset, np.ndarray] = {}
    for k in blocks:
        containing = [slice_proj[l] for l in classes.antichains_containing(k)]
        if not containing:
            raise ValueError(f"block {sorted(k)} lies in no maximal antichain")
        p_k = linalg.join_projectors(containing)
        units_p[k] = wd @ p_k @ w
        if regular:
            units_i[k] = wd @ linalg.meet_projectors(containing) @ w
        else:
            kdown = site.down_set(k)
            units_i[k] = wd @ span_projector(
                [x for x in words if set(x.support) <= kdown]
            ) @ w

    atoms = {}
    for t in site.points:
        p_t = _ambient_unit_p(model, site, classes, t, slice_proj)
        atoms[t] = {
            x: wd @ model.atoms[t][x] @ p_t @ w
            for x in model.spaces.outcomes(t)
        }

    algebra = {}
    for k, gens in model.algebra.items():
        kdown = site.down_set(k)
        i_k = span_projector([x for x in words if set(x.support) <= kdown])
        algebra[k] = tuple(wd @ g @ i_k @ w for g in gens)

    symmetry = {
        s: ModelSymmetry(v=wd @ ms.v @ w, outcome_maps=ms.outcome_maps)
        for s, ms in model.symmetry.items()
    }

    return HilbertModel(
        dim=w.shape[1],
        embedding=wd @ model.embedding,
        atoms=atoms,
        spaces=model.spaces,
        units_p=units_p,
        units_i=units_i,
        algebra=algebra,
        symmetry=symmetry,
    )


def _ambient_unit_p(model, site, classes, t, slice_proj) -> np.ndarray:
    containing = [slice_proj[l] for l in classes.antichains_containing({t})]
    return linalg.join_projectors(containing)


@dataclass(frozen=True)
class EquivalenceVerdict:
    equivalent: bool
    max_residual: float
    witness: str
    tolerance: float

    def to_dict(self) -> dict:
        return {
            "equivalent": self.equivalent,
            "max_residual": self.max_residual,
            "witness": self.witness,
            "tolerance": self.tolerance,
        }


def check_wide_equivalence(
    m1: HilbertModel,
    m2: HilbertModel,
    site: CausalSite,
    words: Sequence[EventWord],
    tol: float = EQUIV_TOL,
) -> EquivalenceVerdict:
    """Entrywise comparison of the two kernel tables."""
    if m1.kdim != m2.kdim:
        raise ValueError(
            f"initial spaces differ ({m1.kdim} vs {m2.kdim}); the tables are "
            "not comparable"
        )
    f1 = [m1.feynman(site, w) for w in words]
    f2 = [m2.feynman(site, w) for w in words]
    worst, witness = 0.0, ""
    for i, j in itertools.product(range(len(words)), repeat=2):
        r = opnorm(dagger(f1[i]) @ f1[j] - dagger(f2[i]) @ f2[j])
        if r > worst:
            worst, witness = r, f"pair (word {i}, word {j})"
    return EquivalenceVerdict(worst <= tol, worst, witness, tol)


@dataclass(eq=False)
class ModelMorphism:
    """An isometry intertwining two models, with its measured residuals."""

    u: np.ndarray
    isometry_residual: float
    event_residual: float
    algebra_residual: float
    symmetry_residual: float
    tolerance: float

    @property
    def ok(self) -> bool:
        return (
            max(
                self.isometry_residual,
                self.event_residual,
                self.algebra_residual,
                self.symmetry_residual,
            )
            <= self.tolerance
        )

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "isometry_residual": self.isometry_residual,
            "event_residual": self.event_residual,
            "algebra_residual": self.algebra_residual,
            "symmetry_residual": self.symmetry_residual,
            "tolerance": self.tolerance,
        }


def build_unitary(
    m1: HilbertModel,
    m2: HilbertModel,
    site: CausalSite,
    words: Sequence[EventWord],
    tol: float = EQUIV_TOL,
    rel_tol: float = 1e-9,
) -> ModelMorphism:
    """Unitary sending the first minimal model onto the second.

    The map matches chronological product vectors; rank deficiency in the
    shared Gram matrix is cut at the same relative threshold as the quotient
    construction, and the phase is fixed by matching the initial embeddings
    directly, so the restriction to the initial space is the identity.
    """
    verdict = check_wide_equivalence(m1, m2, site, words, tol)
    if not verdict.equivalent:
        raise EquivalenceRefused(
            f"models are not equivalent in the wide sense "
            f"(residual {verdict.max_residual:.3e} at {verdict.witness})"
        )
    for name, m in (("first", m1), ("second", m2)):
        if not is_minimal(m, site, words, rel_tol):
            raise EquivalenceRefused(
                f"the {name} model is not minimal; compress it first"
            )
    x = _feynman_stack(m1, site, words)
    y = _feynman_stack(m2, site, words)
    gram = linalg.hermitize(dagger(x) @ x)
    vals, vecs, _ = linalg.psd_eigencut(gram, rel_tol)
    z = vecs / np.sqrt(vals)[None, :]
    q1 = x @ z
    q2 = y @ z
    u = q2 @ dagger(q1)
    return _measure_morphism(u, m1, m2, site, tol)


def _measure_morphism(u, m_small, m_big, site, tol) -> ModelMorphism:
    iso = opnorm(dagger(u) @ u - np.eye(m_small.dim))
    ev, al, sy = _relation_residuals(m_small, m_big, u, site)
    return ModelMorphism(
        u=u,
        isometry_residual=float(iso),
        event_residual=float(ev),
        algebra_residual=float(al),
        symmetry_residual=float(sy),
        tolerance=tol,
    )


def _relation_residuals(m_small, m_big, u, site):
    """Residuals of the modeling relations: events, algebra, symmetry."""
    ev = 0.0
    for t in site.points:
        p_small = m_small.unit_p({t})
        for b in _subsets(m_small.spaces.outcomes(t)):
            lhs = u @ (m_small.point_projector(t, b) @ p_small)
            rhs = m_big.point_projector(t, b) @ u @ p_small
            ev = max(ev, opnorm(lhs - rhs))
    al = 0.0
    for k, gens in m_small.algebra.items():
        gens_big = m_big.algebra.get(k, ())
        i_small = m_small.unit_i(k)
        for g_small, g_big in zip(gens, gens_big):
            al = max(al, opnorm(u @ g_small - g_big @ u @ i_small))
    sy = 0.0
    for s, ms in m_small.symmetry.items():
        if s not in m_big.symmetry:
            continue
        v_small, v_big = ms.v, m_big.symmetry[s].v
        sy = max(sy, opnorm(u @ v_small - v_big @ u))
    return ev, al, sy


def check_model_relation(
    m_small: HilbertModel,
    m_big: HilbertModel,
    u: np.ndarray,
    site: CausalSite,
    tol: float = EQUIV_TOL,
    site_sym: SiteSymmetry | None = None,
) -> ModelMorphism:
    """Measure how well `u` realizes the first model inside the second.

    Both projector families are compared through the intertwining relations
    with the small model's unit projectors on the right; symmetry, when both
    sides declare it, is compared through the transported essential units.
    """
    morphism = _measure_morphism(np.asarray(u, dtype=COMPLEX), m_small, m_big, site, tol)
    if site_sym is not None:
        extra = _symmetry_unit_residual(m_small, site, site_sym)
        morphism = ModelMorphism(
            u=morphism.u,
            isometry_residual=morphism.isometry_residual,
            event_residual=morphism.event_residual,
            algebra_residual=morphism.algebra_residual,
            symmetry_residual=max(morphism.symmetry_residual, extra),
            tolerance=tol,
        )
    return morphism


def _symmetry_unit_residual(model: HilbertModel, site: CausalSite, site_sym: SiteSymmetry):
    """Transported-unit consistency of the model's own symmetry family."""
    worst = 0.0
    for s, ms in model.symmetry.items():
        pmap = dict(site_sym.maps.get(s, {}))
        for t, st in pmap.items():
            i_t, i_st = model.unit_i({t}), model.unit_i({st})
            p_t, p_st = model.unit_p({t}), model.unit_p({st})
            worst = max(worst, opnorm(ms.v @ i_t - i_st @ ms.v @ i_t))
            worst = max(worst, opnorm(ms.v @ p_t - p_st @ ms.v @ p_t))
    return worst


def _subsets(outs):
    for r in range(len(outs) + 1):
        yield from (frozenset(c) for c in itertools.combinations(outs, r))
