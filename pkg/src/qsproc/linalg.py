"""Dense complex linear algebra helpers shared across the package.

Everything here works on plain numpy arrays at desk scale (dimensions in the
tens).  Subspaces are always handled algebraically (rank-revealing
eigendecompositions, exact range sums/intersections), never iteratively.
"""

from __future__ import annotations

import numpy as np

COMPLEX = np.complex128


def asmatrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=COMPLEX)
    if m.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {m.shape}")
    return m


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conjugate(np.transpose(a))


def opnorm(a) -> float:
    """Operator norm (largest singular value); 0.0 for empty matrices."""
    a = np.atleast_2d(np.asarray(a, dtype=COMPLEX))
    if a.size == 0:
        return 0.0
    if a.size == 1:
        return float(abs(a[0, 0]))
    return float(np.linalg.norm(a, 2))


def projector_defect(p: np.ndarray) -> float:
    """How far `p` is from being an orthogonal projector: max of the
    idempotence and Hermiticity residuals in operator norm."""
    p = asmatrix(p)
    return max(opnorm(p @ p - p), opnorm(p - dagger(p)))


def hermitize(a: np.ndarray) -> np.ndarray:
    return (a + dagger(a)) / 2.0


def psd_eigencut(gram: np.ndarray, rel_tol: float):
    """Rank-revealing eigendecomposition of a Hermitian PSD matrix.

    Eigenvalues below ``rel_tol * max(eigenvalue)`` are treated as zero.
    Returns ``(kept_values, kept_vectors, dropped_values)`` with kept pairs in
    descending eigenvalue order and each eigenvector phase-fixed so that its
    first significant component is real positive.
    """
    g = hermitize(asmatrix(gram))
    vals, vecs = np.linalg.eigh(g)  # ascending
    vals, vecs = vals[::-1], vecs[:, ::-1]
    top = float(vals[0]) if vals.size else 0.0
    cut = rel_tol * max(top, 0.0)
    keep = vals > cut
    kept_vals = np.ascontiguousarray(vals[keep])
    kept_vecs = np.ascontiguousarray(vecs[:, keep])
    for j in range(kept_vecs.shape[1]):
        kept_vecs[:, j] = _phase_fix(kept_vecs[:, j])
    return kept_vals, kept_vecs, np.ascontiguousarray(vals[~keep])


def _phase_fix(v: np.ndarray) -> np.ndarray:
    scale = np.max(np.abs(v))
    if scale == 0.0:
        return v
    for x in v:
        if abs(x) > 1e-12 * scale:
            return v * (np.conjugate(x) / abs(x))
    return v


def gram_factor(gram: np.ndarray, rel_tol: float) -> np.ndarray:
    """Factor ``G = A* A`` with A of full row rank r (the numerical rank of G
    at ``rel_tol``).  Column p of A is the coordinate vector of generator p in
    the quotient space."""
    vals, vecs, _ = psd_eigencut(gram, rel_tol)
    return np.sqrt(vals)[:, None] * dagger(vecs)


def pinv(a: np.ndarray, rel_tol: float) -> np.ndarray:
    a = np.atleast_2d(asmatrix(a))
    if a.size == 0:
        return np.zeros((a.shape[1], a.shape[0]), dtype=COMPLEX)
    return np.linalg.pinv(a, rcond=rel_tol)


def map_on_span(sources: np.ndarray, images: np.ndarray, rel_tol: float) -> np.ndarray:
    """Least-squares operator M with ``M @ sources = images`` and M = 0 on the
    orthogonal complement of the column span of `sources`."""
    return asmatrix(images) @ pinv(sources, rel_tol)


def projector_onto_columns(x: np.ndarray, rel_tol: float = 1e-9) -> np.ndarray:
    """Orthogonal projector onto the column span of `x`."""
    x = np.atleast_2d(asmatrix(x))
    n = x.shape[0]
    if x.size == 0:
        return np.zeros((n, n), dtype=COMPLEX)
    u, s, _ = np.linalg.svd(x, full_matrices=False)
    keep = s > rel_tol * (s[0] if s.size else 0.0)
    basis = u[:, keep]
    return basis @ dagger(basis)


def join_projectors(projs, rel_tol: float = 1e-9) -> np.ndarray:
    """Projector onto the sum of the ranges (lattice join)."""
    projs = list(projs)
    if not projs:
        raise ValueError("join of an empty family is undefined without a dimension")
    stacked = np.hstack([asmatrix(p) for p in projs])
    return projector_onto_columns(stacked, rel_tol)


def meet_projectors(projs, rel_tol: float = 1e-9) -> np.ndarray:
    """Projector onto the intersection of the ranges (lattice meet).

    Computed algebraically as the null space of the sum of complements.
    """
    projs = [asmatrix(p) for p in projs]
    if not projs:
        raise ValueError("meet of an empty family is undefined without a dimension")
    n = projs[0].shape[0]
    eye = np.eye(n, dtype=COMPLEX)
    s = sum(eye - p for p in projs)
    vals, vecs = np.linalg.eigh(hermitize(s))
    scale = max(float(vals[-1]), 1.0)
    basis = vecs[:, vals < rel_tol * scale]
    return basis @ dagger(basis)


def random_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    """Haar-ish random unitary via QR of a complex Gaussian matrix."""
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


def random_isometry(rng: np.random.Generator, n: int, m: int) -> np.ndarray:
    if m > n:
        raise ValueError("isometry target must not be smaller than the source")
    return random_unitary(rng, n)[:, :m]
