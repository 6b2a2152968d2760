"""Correlation kernel oracles and the axiom battery that qualifies them.

A kernel oracle is a total map from pairs of event words to operators on the
initial space, together with the site, the outcome spaces, and declared
symmetry data.  The checks in this module decide whether such a table is a
legitimate wide-sense process: positive, normalized, additive in the factors
on maximal slices, factorizable, covariant, self-consistent under extension,
and (optionally) asymptotically uncorrelated with the distant past.

Verdicts distinguish `fail` from `inconclusive`: a check whose closure
prerequisites are not met by the word list reports the missing data instead
of a violation.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import linalg
from .linalg import COMPLEX, dagger, opnorm
from .sites import CausalSite, SiteClasses, derive_classes
from .words import (
    Event,
    EventWord,
    OutcomeSpaces,
    partitions_of_factor,
    pull_back,
    right_multiply,
    unit_word,
)

PASS = "pass"
FAIL = "fail"
INCONCLUSIVE = "inconclusive"

POSITIVITY_TOL = 1e-9
NORMALIZATION_TOL = 1e-12
ADDITIVITY_TOL = 1e-9
FACTORIZABILITY_TOL = 1e-9
COVARIANCE_TOL = 1e-9
PROJECTIVITY_TOL = 1e-9
REGULARITY_TOL = 1e-9


@dataclass(frozen=True)
class OracleSymmetry:
    """Symmetry data attached to a kernel table: the (possibly partial)
    point map, the per-point outcome injections, and the unitary part on the
    initial space."""

    point_map: Mapping[str, str]
    outcome_maps: Mapping[str, Mapping[str, str]]
    u: np.ndarray


@dataclass(eq=False)
class KernelOracle:
    """A wide-sense process: words, kernel values, symmetry declarations."""

    site: CausalSite
    classes: SiteClasses
    spaces: OutcomeSpaces
    kdim: int
    words: tuple[EventWord, ...]
    table: np.ndarray  # (n, n, kdim, kdim)
    symmetry: Mapping[str, OracleSymmetry] = field(default_factory=dict)
    algebra: Mapping[frozenset, tuple] = field(default_factory=dict)
    model: object | None = None

    def __post_init__(self):
        n = len(self.words)
        t = np.asarray(self.table, dtype=COMPLEX)
        if t.shape != (n, n, self.kdim, self.kdim):
            raise ValueError(
                f"table shape {t.shape} does not match {n} words of kernel "
                f"dimension {self.kdim}"
            )
        self.table = t
        self._index = {w: i for i, w in enumerate(self.words)}
        if len(self._index) != n:
            raise ValueError("word list contains duplicates")

    @staticmethod
    def from_values(
        site: CausalSite,
        spaces: OutcomeSpaces,
        words: Sequence[EventWord],
        values: Mapping,
        kdim: int = 1,
        symmetry: Mapping[str, OracleSymmetry] | None = None,
    ) -> "KernelOracle":
        """Build an oracle from a ``(i, j) -> matrix`` (or scalar) mapping."""
        n = len(words)
        table = np.zeros((n, n, kdim, kdim), dtype=COMPLEX)
        for (i, j), v in values.items():
            table[i, j] = np.asarray(v, dtype=COMPLEX).reshape(kdim, kdim)
        return KernelOracle(
            site=site,
            classes=derive_classes(site),
            spaces=spaces,
            kdim=kdim,
            words=tuple(words),
            table=table,
            symmetry=symmetry or {},
        )

    # -- access -------------------------------------------------------------

    def index(self, word: EventWord) -> int | None:
        return self._index.get(word)

    def value(self, b: EventWord, bp: EventWord) -> np.ndarray:
        i, j = self._index.get(b), self._index.get(bp)
        if i is None or j is None:
            missing = b if i is None else bp
            raise KeyError(f"word {missing!r} is not in the oracle")
        return self.table[i, j]

    def unit_index(self) -> int:
        i = self._index.get(unit_word())
        if i is None:
            raise ValueError("the unit word is missing from the oracle")
        return i

    def gram(self, indices: Sequence[int] | None = None) -> np.ndarray:
        """Block Gram matrix over (word, initial-basis) pairs, word-major."""
        idx = list(range(len(self.words))) if indices is None else list(indices)
        sub = self.table[np.ix_(idx, idx)]
        m = len(idx) * self.kdim
        return np.transpose(sub, (0, 2, 1, 3)).reshape(m, m)

    def words_within(self, region: Iterable[str]) -> list[int]:
        region = set(region)
        return [
            i for i, w in enumerate(self.words) if set(w.support) <= region
        ]

    def hermitian_defect(self) -> float:
        swapped = np.conjugate(np.transpose(self.table, (1, 0, 3, 2)))
        return float(np.max(np.abs(self.table - swapped))) if self.table.size else 0.0


# -- verdicts ----------------------------------------------------------------


@dataclass(frozen=True)
class AxiomCheck:
    name: str
    status: str  # pass / fail / inconclusive
    residual: float
    witness: str
    tolerance: float

    @property
    def ok(self) -> bool:
        return self.status == PASS

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "status": self.status,
            "residual": self.residual,
            "witness": self.witness,
            "tolerance": self.tolerance,
        }


@dataclass(frozen=True)
class AxiomReport:
    checks: tuple[AxiomCheck, ...]

    @property
    def ok(self) -> bool:
        return all(c.status == PASS for c in self.checks)

    @property
    def failed(self) -> bool:
        """A demonstrated violation, as opposed to missing closure data."""
        return any(c.status == FAIL for c in self.checks)

    def __getitem__(self, name: str) -> AxiomCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "failed": self.failed,
            "checks": [c.to_dict() for c in self.checks],
        }


def _verdict(name, residual, tol, witness, missing=None) -> AxiomCheck:
    if missing:
        return AxiomCheck(name, INCONCLUSIVE, float(residual), missing, tol)
    status = PASS if residual <= tol else FAIL
    return AxiomCheck(name, status, float(residual), witness, tol)


# -- the axiom battery --------------------------------------------------------


def check_positivity(oracle: KernelOracle, tol: float = POSITIVITY_TOL) -> AxiomCheck:
    """The block Gram matrix over (word, basis) pairs must be PSD up to a
    relative eigenvalue tolerance."""
    if not oracle.words:
        raise ValueError("word list is empty")
    g = linalg.hermitize(oracle.gram())
    vals = np.linalg.eigvalsh(g)
    scale = max(float(np.max(np.abs(vals))), 1e-300)
    residual = max(0.0, -float(vals[0])) / scale
    return _verdict(
        "positivity", residual, tol, f"least eigenvalue {vals[0]:.3e} of the Gram matrix"
    )


def check_normalization(
    oracle: KernelOracle, tol: float = NORMALIZATION_TOL
) -> AxiomCheck:
    """The kernel at the unit word pair must be the identity on K."""
    e = oracle.unit_index()
    residual = opnorm(oracle.table[e, e] - np.eye(oracle.kdim))
    return _verdict("normalization", residual, tol, "kernel at the unit pair")


def check_sigma_additivity(
    oracle: KernelOracle, tol: float = ADDITIVITY_TOL
) -> AxiomCheck:
    """Partitioning a word's factor at any point of a maximal slice must sum
    the kernel: diagonally, and against every other word (the sesquilinear
    form implied by polarization)."""
    site, spaces = oracle.site, oracle.spaces
    worst, witness = 0.0, ""
    missing: str | None = None
    for l in oracle.classes.maximal_antichains:
        down = site.down_set(l)
        idx_l = oracle.words_within(down)
        for i in idx_l:
            b = oracle.words[i]
            for t in sorted(l, key=site.index):
                factor = b.factor(t, spaces)
                for parts in partitions_of_factor(spaces.outcomes(t), factor):
                    if len(parts) <= 1 and factor:
                        continue
                    # parts refine the factor, so intersection installs them
                    part_words = [
                        right_multiply(b, Event.from_dict({t: p}), spaces)
                        for p in parts
                    ]
                    part_idx = [oracle.index(w) for w in part_words]
                    if any(j is None for j in part_idx):
                        missing = missing or (
                            f"partition members of {_word_label(b)} at {t!r} "
                            "are outside the word list"
                        )
                        continue
                    total_diag = sum(
                        (oracle.table[j, j] for j in part_idx),
                        start=np.zeros((oracle.kdim, oracle.kdim), dtype=COMPLEX),
                    )
                    r = opnorm(oracle.table[i, i] - total_diag)
                    if r > worst:
                        worst, witness = r, (
                            f"diagonal additivity of {_word_label(b)} split at {t!r}"
                        )
                    total_off = sum(oracle.table[:, j] for j in part_idx)
                    r_off = float(np.max(np.abs(oracle.table[:, i] - total_off)))
                    if r_off > worst:
                        worst, witness = r_off, (
                            f"linear additivity of {_word_label(b)} split at {t!r}"
                        )
    return _verdict("sigma_additivity", worst, tol, witness, missing)


def check_factorizability(
    oracle: KernelOracle, tol: float = FACTORIZABILITY_TOL
) -> AxiomCheck:
    """Right multiplication by an event at a point of a maximal slice must
    move freely across the two kernel arguments."""
    site, spaces = oracle.site, oracle.spaces
    worst, witness = 0.0, ""
    missing: str | None = None
    for l in oracle.classes.maximal_antichains:
        down = site.down_set(l)
        idx_l = oracle.words_within(down)
        if not idx_l:
            continue
        for t in sorted(l, key=site.index):
            for b_ev in _all_subsets(spaces.outcomes(t)):
                ev = Event.from_dict({t: b_ev})
                mapped = []
                gap = None
                for i in idx_l:
                    j = oracle.index(right_multiply(oracle.words[i], ev, spaces))
                    if j is None:
                        gap = (
                            f"{_word_label(oracle.words[i])} multiplied by "
                            f"{sorted(b_ev)}@{t!r} is outside the word list"
                        )
                        break
                    mapped.append(j)
                if gap is not None:
                    missing = missing or gap
                    continue
                lhs = oracle.table[np.ix_(mapped, idx_l)]
                rhs = oracle.table[np.ix_(idx_l, mapped)]
                r = float(np.max(np.abs(lhs - rhs))) if lhs.size else 0.0
                if r > worst:
                    worst, witness = r, f"event {sorted(b_ev)}@{t!r} on slice {sorted(l)}"
    return _verdict("factorizability", worst, tol, witness, missing)


def check_covariance(oracle: KernelOracle, tol: float = COVARIANCE_TOL) -> AxiomCheck:
    """Transported word pairs must reproduce the kernel conjugated by the
    initial-space isometry, for every symmetry element."""
    if not oracle.symmetry:
        return AxiomCheck(
            "covariance", PASS, 0.0, "no symmetry declared (trivial action)", tol
        )
    spaces = oracle.spaces
    worst, witness = 0.0, ""
    missing: str | None = None
    for s, sym in oracle.symmetry.items():
        image = set(sym.point_map.values())
        eligible = oracle.words_within(image)
        tr = {}
        for i in eligible:
            w = pull_back(oracle.words[i], dict(sym.point_map), sym.outcome_maps, spaces)
            j = oracle.index(w)
            if j is None:
                missing = missing or (
                    f"transported word {_word_label(w)} under {s!r} is outside the word list"
                )
                continue
            tr[i] = j
        u = np.asarray(sym.u, dtype=COMPLEX)
        pairs = [(i, j) for i in tr for j in tr]
        for i, j in pairs:
            lhs = dagger(u) @ oracle.table[i, j] @ u
            rhs = oracle.table[tr[i], tr[j]]
            r = opnorm(lhs - rhs)
            if r > worst:
                worst, witness = r, (
                    f"{s!r} on pair ({_word_label(oracle.words[i])}, "
                    f"{_word_label(oracle.words[j])})"
                )
    return _verdict("covariance", worst, tol, witness, missing)


def check_projectivity(
    oracle: KernelOracle, tol: float = PROJECTIVITY_TOL, pair_cap: int = 64
) -> AxiomCheck:
    """Unit extension invariance (exact in the canonical word encoding, still
    exercised) plus, when a realizing model is attached, the consistency of
    base-compressed kernels across comparable blocks."""
    from .words import extend

    for w in oracle.words[: min(len(oracle.words), 16)]:
        if extend(w, set(oracle.site.points)) != w:
            return AxiomCheck(
                "projectivity", FAIL, 1.0, f"extension moved {_word_label(w)}", tol
            )
    model = oracle.model
    if model is None:
        return AxiomCheck(
            "projectivity",
            PASS,
            0.0,
            "extension invariance only (no realizing model attached)",
            tol,
        )
    site = oracle.site
    blocks: list[frozenset] = [frozenset()] + [frozenset({t}) for t in site.points]
    worst, witness = 0.0, ""
    step = max(1, len(oracle.words) // pair_cap)
    sample = list(range(0, len(oracle.words), step))
    for k, j in itertools.product(blocks, repeat=2):
        if not oracle.classes.subset_le(k, j) or k == j:
            continue
        ik = model.unit_i(k)
        fj = np.stack(
            [model.feynman(site, oracle.words[i], base=j, interleave_units=True)
             for i in sample]
        )
        fk = np.stack(
            [model.feynman(site, oracle.words[i], base=k, interleave_units=True)
             for i in sample]
        )
        kj = np.einsum("arp,brq->abpq", np.conjugate(fj), fj, optimize=True)
        kk = np.einsum("arp,brq->abpq", np.conjugate(fk), fk, optimize=True)
        diff = np.einsum("pr,abrs,sq->abpq", ik, kj, ik, optimize=True) - kk
        entry_max = np.abs(diff).max(axis=(2, 3))
        top = float(entry_max.max()) if entry_max.size else 0.0
        dim = diff.shape[-1]
        if top == 0.0 or top * dim <= worst:
            continue
        for a, b in zip(*np.nonzero(entry_max >= top / max(dim, 1))):
            r = opnorm(diff[a, b])
            if r > worst:
                worst, witness = r, (
                    f"compression from base {sorted(j)} to {sorted(k)} on pair "
                    f"({_word_label(oracle.words[sample[a]])}, "
                    f"{_word_label(oracle.words[sample[b]])})"
                )
    return _verdict("projectivity", worst, tol, witness)


def check_regularity(
    oracle: KernelOracle, tol: float = REGULARITY_TOL
) -> AxiomCheck:
    """Asymptotic noncorrelation with the distant past.

    For each minimal slice, the component of every word vector orthogonal to
    the initial space inside the slice span is computed exactly through the
    Gram matrix; the limit over the slice net is the minimum over the minimal
    slices.  A zero limit says the slice spans shrink to the initial space.
    """
    site = oracle.site
    e = oracle.unit_index()
    k = oracle.kdim
    minimal = oracle.classes.minimal_antichains()
    if not minimal:
        return AxiomCheck("regularity", PASS, 0.0, "empty site", tol)
    per_slice: list[tuple[float, str]] = []
    for l in minimal:
        down = site.down_set(l)
        idx_l = oracle.words_within(down)
        g_l = oracle.gram(idx_l)
        g_pinv = linalg.pinv(g_l, 1e-9)
        worst_b, wit = 0.0, ""
        for i, b in enumerate(oracle.words):
            # cross inner products of the centered vector against the slice span
            cross = oracle.table[np.ix_(idx_l, [i])][:, 0]  # (m, k, k)
            correction = np.einsum(
                "mab,bc->mac", oracle.table[np.ix_(idx_l, [e])][:, 0],
                oracle.table[e, i],
            )
            c = (cross - correction).reshape(len(idx_l) * k, k)
            q = dagger(c) @ g_pinv @ c
            lam = float(np.max(np.linalg.eigvalsh(linalg.hermitize(q))))
            defect = float(np.sqrt(max(lam, 0.0)))
            if defect > worst_b:
                worst_b, wit = defect, _word_label(b)
        per_slice.append((worst_b, wit))
    best = min(per_slice, key=lambda p: p[0])
    l_min = minimal[per_slice.index(best)]
    return _verdict(
        "regularity", best[0], tol, f"word {best[1]} against slice {sorted(l_min)}"
    )


def check_axioms(
    oracle: KernelOracle,
    positivity_tol: float = POSITIVITY_TOL,
    normalization_tol: float = NORMALIZATION_TOL,
    additivity_tol: float = ADDITIVITY_TOL,
    factorizability_tol: float = FACTORIZABILITY_TOL,
    covariance_tol: float = COVARIANCE_TOL,
    projectivity_tol: float = PROJECTIVITY_TOL,
    with_regularity: bool = False,
    regularity_tol: float = REGULARITY_TOL,
) -> AxiomReport:
    checks = [
        check_positivity(oracle, positivity_tol),
        check_normalization(oracle, normalization_tol),
        check_sigma_additivity(oracle, additivity_tol),
        check_factorizability(oracle, factorizability_tol),
        check_covariance(oracle, covariance_tol),
        check_projectivity(oracle, projectivity_tol),
    ]
    if with_regularity:
        checks.append(check_regularity(oracle, regularity_tol))
    return AxiomReport(tuple(checks))


def _all_subsets(outs: Sequence[str]):
    for r in range(len(outs) + 1):
        yield from (frozenset(c) for c in itertools.combinations(outs, r))


def _word_label(w: EventWord) -> str:
    if w.is_unit():
        return "e"
    return "{" + ", ".join(f"{sorted(b)}@{t}" for t, b in w.factors) + "}"
