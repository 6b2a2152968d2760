"""Minimal realization of a kernel oracle by a quotient-space construction.

The formal sums of (initial vector, word) pairs carry a nonnegative Hermitian
form given by the kernel table.  Factoring out its null space (a
rank-revealing eigendecomposition with a relative cutoff) yields coordinates
in which every word acts by right multiplication on the eligible span and by
zero on its orthogonal complement.  The same recipe reconstructs the
controlling-algebra action and the symmetry isometries, and the subspace
lattice of slice spans recovers the unit-projector families.

The construction is deterministic: a fixed pair ordering, a fixed eigenvector
phase convention, and single-threaded numpy give bit-identical coordinates
for identical inputs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import linalg
from .linalg import COMPLEX, dagger, opnorm
from .kernels import (
    KernelOracle,
    check_covariance,
    check_normalization,
    check_positivity,
    _word_label,
)
from .models import HilbertModel, ModelSymmetry
from .sites import SiteSymmetry
from .words import Event, right_multiply

RANK_TOL = 1e-9
GRAM_FACTOR_TOL = 1e-8
RECON_PROJECTOR_TOL = 1e-9
DECOMPOSITION_TOL = 1e-8


class ReconstructionRefused(ValueError):
    """The oracle failed a precondition of the construction."""


@dataclass(eq=False)
class GnsSpace:
    """Quotient coordinates of the formal (vector, word) sums.

    `coords` has one column per generating pair, word-major (pair p of word i
    and basis vector a sits at column ``i * kdim + a``); its rows are an
    orthonormal coordinate system of the quotient, so Gram entries are inner
    products of columns.
    """

    oracle: KernelOracle
    gram: np.ndarray
    coords: np.ndarray  # (rank, n_pairs)
    kept_eigenvalues: np.ndarray
    dropped_eigenvalues: np.ndarray
    rank_tol: float

    @property
    def rank(self) -> int:
        return self.coords.shape[0]

    @property
    def kdim(self) -> int:
        return self.oracle.kdim

    def pair_column(self, word_index: int, basis_index: int) -> int:
        return word_index * self.kdim + basis_index

    def pair_coords(self, word_indices: Sequence[int]) -> np.ndarray:
        cols = [
            self.pair_column(i, a)
            for i in word_indices
            for a in range(self.kdim)
        ]
        return self.coords[:, cols]

    def initial_embedding(self) -> np.ndarray:
        """Coordinates of the embedded initial space (the unit-word pairs)."""
        return self.pair_coords([self.oracle.unit_index()])

    def gram_defect(self) -> float:
        approx = dagger(self.coords) @ self.coords
        scale = max(opnorm(self.gram), 1e-300)
        return opnorm(approx - self.gram) / scale


def build_space(oracle: KernelOracle, rank_tol: float = RANK_TOL) -> GnsSpace:
    """Quotient the formal sums by the kernel's null space.

    Refuses when positivity or normalization fail: without them the form is
    not an inner product on the quotient.
    """
    pos = check_positivity(oracle)
    if not pos.ok:
        raise ReconstructionRefused(
            f"positivity fails ({pos.witness}, residual {pos.residual:.3e})"
        )
    norm = check_normalization(oracle)
    if not norm.ok:
        raise ReconstructionRefused(
            f"normalization fails (residual {norm.residual:.3e})"
        )
    gram = linalg.hermitize(oracle.gram())
    kept, vecs, dropped = linalg.psd_eigencut(gram, rank_tol)
    coords = np.sqrt(kept)[:, None] * dagger(vecs)
    return GnsSpace(
        oracle=oracle,
        gram=gram,
        coords=coords,
        kept_eigenvalues=kept,
        dropped_eigenvalues=dropped,
        rank_tol=rank_tol,
    )


# -- represented structure ----------------------------------------------------


def eligible_for_block(oracle: KernelOracle, block) -> list[int]:
    """Indices of words supported within the down-set of some maximal
    antichain containing the block."""
    site = oracle.site
    block = frozenset(block)
    out: set[int] = set()
    for l in oracle.classes.antichains_containing(block):
        out.update(oracle.words_within(site.down_set(l)))
    return sorted(out)


def represent_event(
    gns: GnsSpace,
    block,
    event: Event,
    rel_tol: float | None = None,
    strict_closure: bool = True,
) -> np.ndarray:
    """Projector of an event over a block: right multiplication on the
    eligible span, zero on its orthogonal complement.

    With `strict_closure` every eligible word must stay in the word list
    under the multiplication; without it, words whose product leaves the
    list simply drop out of the defining span (needed for deliberately
    restricted word systems such as one-device-per-level lifts, where the
    remaining words still span everything that matters).
    """
    oracle = gns.oracle
    rel_tol = gns.rank_tol if rel_tol is None else rel_tol
    idx, targets = [], []
    for i in eligible_for_block(oracle, block):
        j = oracle.index(right_multiply(oracle.words[i], event, oracle.spaces))
        if j is None:
            if strict_closure:
                raise ReconstructionRefused(
                    f"word list is not closed under multiplication by "
                    f"{_event_label(event)}; close it with the all-subsets policy"
                )
            continue
        idx.append(i)
        targets.append(j)
    x = gns.pair_coords(idx)
    y = gns.pair_coords(targets)
    return linalg.map_on_span(x, y, rel_tol)


def represent_events(
    gns: GnsSpace, strict_closure: bool = True
) -> dict[str, dict[str, np.ndarray]]:
    """Atomic projectors of every point, as operators on the quotient."""
    oracle = gns.oracle
    atoms: dict[str, dict[str, np.ndarray]] = {}
    for t in oracle.site.points:
        fam = {}
        for x in oracle.spaces.outcomes(t):
            fam[x] = represent_event(
                gns, frozenset({t}), Event.from_dict({t: {x}}),
                strict_closure=strict_closure,
            )
        atoms[t] = fam
    return atoms


def represent_algebra(
    gns: GnsSpace,
    generators: Mapping[frozenset, tuple] | None = None,
    commutation_tol: float = 1e-8,
) -> dict[frozenset, tuple]:
    """Action of the controlling algebra generators on the quotient.

    Each generator acts on the initial-vector leg of the eligible pairs; the
    kernel values over eligible word pairs must commute with it, otherwise
    the action would not be well defined on the quotient and the
    construction refuses.
    """
    oracle = gns.oracle
    generators = oracle.algebra if generators is None else generators
    out: dict[frozenset, tuple] = {}
    for block, gens in generators.items():
        idx = sorted(oracle.words_within(oracle.site.down_set(block)))
        represented = []
        for gi, a in enumerate(gens):
            a = np.asarray(a, dtype=COMPLEX)
            worst = 0.0
            for i, j in itertools.product(idx, repeat=2):
                worst = max(worst, opnorm(oracle.table[i, j] @ a - a @ oracle.table[i, j]))
            if worst > commutation_tol:
                raise ReconstructionRefused(
                    f"generator {gi} of block {sorted(block)} does not commute "
                    f"with the kernel values (residual {worst:.3e})"
                )
            represented.append(_algebra_action(gns, idx, a))
        out[frozenset(block)] = tuple(represented)
    return out


def _algebra_action(gns: GnsSpace, idx: Sequence[int], a: np.ndarray) -> np.ndarray:
    # The represented operator is the adjoint of the adjoint generator's
    # action on the vector leg, extended by zero off the eligible span.
    k = gns.kdim
    x = gns.pair_coords(idx)
    cols = []
    a_star = dagger(a)
    for i in idx:
        base = [gns.coords[:, gns.pair_column(i, b)] for b in range(k)]
        for al in range(k):
            cols.append(sum(a_star[b, al] * base[b] for b in range(k)))
    y = np.column_stack(cols) if cols else np.zeros((gns.rank, 0), dtype=COMPLEX)
    lam_star = linalg.map_on_span(x, y, gns.rank_tol)
    return dagger(lam_star)


def represent_symmetry(
    gns: GnsSpace, covariance_tol: float = 1e-9
) -> dict[str, np.ndarray]:
    """Isometries implementing the symmetry on the quotient.

    The transported-pair map is built on the span of words supported inside
    the symmetry image; its adjoint is the required isometry.  Refuses when
    the oracle is not covariant.  Elements acting on no point at all (the
    absorbing element of a truncated shift semigroup) constrain nothing and
    are skipped.
    """
    oracle = gns.oracle
    cov = check_covariance(oracle, covariance_tol)
    if cov.status == "fail":
        raise ReconstructionRefused(
            f"covariance fails ({cov.witness}, residual {cov.residual:.3e})"
        )
    out: dict[str, np.ndarray] = {}
    from .words import pull_back

    for s, sym in oracle.symmetry.items():
        if not sym.point_map:
            continue
        image = set(sym.point_map.values())
        eligible = oracle.words_within(image)
        transported = []
        for i in eligible:
            w = pull_back(
                oracle.words[i], dict(sym.point_map), sym.outcome_maps, oracle.spaces
            )
            j = oracle.index(w)
            if j is None:
                raise ReconstructionRefused(
                    f"transported word {_word_label(w)} under {s!r} "
                    "is outside the word list"
                )
            transported.append(j)
        k = gns.kdim
        u = np.asarray(sym.u, dtype=COMPLEX)
        x = gns.pair_coords(eligible)
        cols = []
        u_star = dagger(u)
        for j in transported:
            base = [gns.coords[:, gns.pair_column(j, b)] for b in range(k)]
            for al in range(k):
                cols.append(sum(u_star[b, al] * base[b] for b in range(k)))
        y = np.column_stack(cols) if cols else np.zeros((gns.rank, 0), dtype=COMPLEX)
        pulled = linalg.map_on_span(x, y, gns.rank_tol)
        out[s] = dagger(pulled)
    return out


# -- the assembled process ----------------------------------------------------


@dataclass(eq=False)
class ReconstructedProcess:
    gns: GnsSpace
    model: HilbertModel
    slice_projectors: dict[frozenset, np.ndarray]  # E_l per maximal antichain
    unit_p: dict[frozenset, np.ndarray]  # joins over containing slices
    unit_i: dict[frozenset, np.ndarray]  # meets over containing slices
    algebra: dict[frozenset, tuple] = field(default_factory=dict)
    isometries: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def rank(self) -> int:
        return self.gns.rank

    def initial_projector(self) -> np.ndarray:
        emb = self.gns.initial_embedding()
        return emb @ dagger(emb)

    def origin_unit_rank(self) -> int:
        return int(round(float(np.real(np.trace(self.unit_i[frozenset()])))))

    def regular_at_origin(self, tol: float = 1e-8) -> bool:
        return opnorm(self.unit_i[frozenset()] - self.initial_projector()) <= tol

    def site_symmetry(self) -> SiteSymmetry | None:
        if not self.gns.oracle.symmetry:
            return None
        maps = {s: dict(sym.point_map) for s, sym in self.gns.oracle.symmetry.items()}
        return SiteSymmetry(tuple(maps), maps, {})

    def provenance(self) -> dict:
        return {
            "rank": self.rank,
            "kdim": self.gns.kdim,
            "pairs": self.gns.coords.shape[1],
            "kept_eigenvalues": [float(v) for v in self.gns.kept_eigenvalues],
            "dropped_eigenvalues": [float(v) for v in self.gns.dropped_eigenvalues],
            "rank_tolerance": self.gns.rank_tol,
            "gram_defect": self.gns.gram_defect(),
        }


def compute_subspace_lattice(gns: GnsSpace, antichain_cap: int = 4096):
    """Slice-span projectors and the derived unit families.

    E_l projects onto the span of pairs of words supported below the slice l;
    the block units are the lattice joins (over containing slices) and meets
    of these, with the empty block yielding the whole space for the join and
    the regularity-sensitive intersection for the meet.
    """
    oracle = gns.oracle
    site = oracle.site
    r = gns.rank
    eye = np.eye(r, dtype=COMPLEX)
    slice_projectors: dict[frozenset, np.ndarray] = {}
    for l in oracle.classes.maximal_antichains:
        idx = oracle.words_within(site.down_set(l))
        slice_projectors[l] = linalg.projector_onto_columns(
            gns.pair_coords(idx), gns.rank_tol
        )
    unit_p: dict[frozenset, np.ndarray] = {frozenset(): eye}
    unit_i: dict[frozenset, np.ndarray] = {
        frozenset(): linalg.meet_projectors(list(slice_projectors.values()))
        if slice_projectors
        else eye
    }
    for k in oracle.classes.all_nonanticipatory(antichain_cap):
        if not k:
            continue
        containing = [slice_projectors[l] for l in oracle.classes.antichains_containing(k)]
        if not containing:
            raise ReconstructionRefused(
                f"block {sorted(k)} lies in no maximal antichain"
            )
        unit_p[k] = linalg.join_projectors(containing)
        unit_i[k] = linalg.meet_projectors(containing)
    return slice_projectors, unit_p, unit_i


def reconstruct(
    oracle: KernelOracle,
    rank_tol: float = RANK_TOL,
    antichain_cap: int = 4096,
    strict_closure: bool = True,
) -> ReconstructedProcess:
    """Run the whole construction and package the result as a model.

    The returned model's unit-projector family is the canonical one (joins of
    slice spans for the event units, slice spans of supported words for the
    essential units), so the model re-enters every forward operation
    unchanged.
    """
    gns = build_space(oracle, rank_tol)
    atoms = represent_events(gns, strict_closure)
    slice_projectors, unit_p, unit_i = compute_subspace_lattice(gns, antichain_cap)
    algebra = represent_algebra(gns) if oracle.algebra else {}
    isometries = represent_symmetry(gns) if oracle.symmetry else {}

    units_i_model: dict[frozenset, np.ndarray] = {}
    for k in unit_p:
        if not k:
            continue
        idx = oracle.words_within(oracle.site.down_set(k))
        units_i_model[k] = linalg.projector_onto_columns(
            gns.pair_coords(idx), gns.rank_tol
        )

    symmetry = {
        s: ModelSymmetry(v=v, outcome_maps=oracle.symmetry[s].outcome_maps)
        for s, v in isometries.items()
    }
    model = HilbertModel(
        dim=gns.rank,
        embedding=gns.initial_embedding(),
        atoms=atoms,
        spaces=oracle.spaces,
        units_p=unit_p,
        units_i=units_i_model,
        algebra=algebra,
        symmetry=symmetry,
    )
    return ReconstructedProcess(
        gns=gns,
        model=model,
        slice_projectors=slice_projectors,
        unit_p=unit_p,
        unit_i=unit_i,
        algebra=algebra,
        isometries=isometries,
    )


@dataclass(frozen=True)
class DecompositionReport:
    max_residual: float
    witness: str
    tolerance: float

    @property
    def ok(self) -> bool:
        return self.max_residual <= self.tolerance

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "max_residual": self.max_residual,
            "witness": self.witness,
            "tolerance": self.tolerance,
        }


def verify_decomposition(
    recon: ReconstructedProcess,
    oracle: KernelOracle | None = None,
    tol: float = DECOMPOSITION_TOL,
) -> DecompositionReport:
    """Recompute the kernel table from the reconstructed model and compare it
    entrywise with the oracle."""
    oracle = oracle or recon.gns.oracle
    site = oracle.site
    n = len(oracle.words)
    feyn = np.stack([recon.model.feynman(site, w) for w in oracle.words]) \
        if n else np.zeros((0, recon.rank, oracle.kdim), dtype=COMPLEX)
    diff = np.einsum("iak,jal->ijkl", np.conjugate(feyn), feyn, optimize=True) \
        - oracle.table
    worst, witness = _worst_block(diff, oracle)
    return DecompositionReport(worst, witness, tol)


def _worst_block(diff: np.ndarray, oracle: KernelOracle) -> tuple[float, str]:
    """Largest operator-norm block of a (n, n, k, k) difference array.

    Blocks are screened by their largest entry; the operator norm of a k x k
    block is between that and k times it, so only blocks within a factor k of
    the leader need exact evaluation.
    """
    if diff.size == 0:
        return 0.0, ""
    k = diff.shape[-1]
    entry_max = np.abs(diff).max(axis=(2, 3))
    top = float(entry_max.max())
    if top == 0.0:
        return 0.0, "exact match"
    worst, wi, wj = 0.0, 0, 0
    for i, j in zip(*np.nonzero(entry_max >= top / max(k, 1))):
        r = opnorm(diff[i, j])
        if r > worst:
            worst, wi, wj = r, int(i), int(j)
    return worst, (
        f"pair ({_word_label(oracle.words[wi])}, {_word_label(oracle.words[wj])})"
    )


def _event_label(event: Event) -> str:
    return "{" + ", ".join(f"{sorted(b)}@{t}" for t, b in event.factors) + "}"
