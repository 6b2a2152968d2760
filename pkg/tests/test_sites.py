"""Order structure of finite causal sites."""

import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qsproc.sites import (
    EQUIVALENT,
    INDEPENDENT,
    PRECEDES,
    SUCCEEDS,
    CausalSite,
    SiteSymmetry,
    chain_site,
    check_symmetry,
    derive_classes,
    discrete_site,
    galilean_site,
    minkowski_site,
    trivial_symmetry,
)


def minkowski_relation(p, q, c=1):
    """Independent oracle: evaluate the cone inequality directly."""
    dtau = Fraction(q[0]) - Fraction(p[0])
    dr2 = sum((Fraction(a) - Fraction(b)) ** 2 for a, b in zip(p[1:], q[1:]))
    return dtau >= 0 and dr2 <= Fraction(c) ** 2 * dtau**2


DIAMOND = [(0, 0), (1, Fraction(1, 2)), (1, Fraction(-1, 2)), (2, 0)]


class TestClassifyPair:
    def test_minkowski_timelike_precedes(self):
        site = minkowski_site([(0, 0), (1, Fraction(1, 2))], c=1)
        a, b = site.points
        assert minkowski_relation((0, 0), (1, Fraction(1, 2)))
        assert site.classify_pair(a, b) == PRECEDES
        assert site.classify_pair(b, a) == SUCCEEDS

    def test_reflexive_pair_equivalent(self):
        site = minkowski_site(DIAMOND, c=1)
        for t in site.points:
            assert site.classify_pair(t, t) == EQUIVALENT

    def test_spacelike_independent(self):
        site = minkowski_site(DIAMOND, c=1)
        _, b, c, _ = site.points
        assert not minkowski_relation(DIAMOND[1], DIAMOND[2])
        assert not minkowski_relation(DIAMOND[2], DIAMOND[1])
        assert site.classify_pair(b, c) == INDEPENDENT

    def test_unknown_point(self):
        site = chain_site(("a", "b"))
        with pytest.raises(KeyError):
            site.classify_pair("a", "zz")


class TestMinkowskiSite:
    def test_single_point_identity(self):
        site = minkowski_site([(0, 0)])
        assert site.leq == ((True,),)

    def test_diamond_relations_match_oracle(self):
        site = minkowski_site(DIAMOND, c=1)
        for i, j in itertools.product(range(4), repeat=2):
            assert site.leq[i][j] == minkowski_relation(DIAMOND[i], DIAMOND[j])

    def test_diamond_maximal_antichains(self):
        site = minkowski_site(DIAMOND, c=1)
        classes = derive_classes(site)
        p = site.points
        expected = {
            frozenset({p[0]}),
            frozenset({p[1], p[2]}),
            frozenset({p[3]}),
        }
        assert set(classes.maximal_antichains) == expected

    def test_collinear_chain_total_order(self):
        site = minkowski_site([(0, 0), (1, 0), (2, 0)], c=1)
        a, b, c = site.points
        assert site.classify_pair(a, b) == PRECEDES
        assert site.classify_pair(b, c) == PRECEDES
        assert site.classify_pair(a, c) == PRECEDES

    def test_near_cone_float_rejected(self):
        with pytest.raises(ValueError, match="light cone"):
            minkowski_site([(0.0, 0.0), (1.0, 1.0 + 1e-13)], c=1)

    def test_exactly_lightlike_allowed(self):
        site = minkowski_site([(0, 0), (1, 1)], c=1)
        a, b = site.points
        assert site.classify_pair(a, b) == PRECEDES

    def test_nonpositive_speed_rejected(self):
        with pytest.raises(ValueError):
            minkowski_site([(0, 0)], c=0)


class TestGalileanSite:
    def test_equal_times_equivalent(self):
        site = galilean_site([1, 1])
        a, b = site.points
        assert site.classify_pair(a, b) == EQUIVALENT

    def test_factor_set(self):
        site = galilean_site([0, 1, 1, 2])
        classes = derive_classes(site)
        assert len(classes.equivalence_classes) == 3

    def test_single_time_one_class(self):
        site = galilean_site([5, 5, 5])
        classes = derive_classes(site)
        assert len(classes.equivalence_classes) == 1
        assert classes.maximal_antichains == (frozenset(site.points),)


class TestChainDecompose:
    def test_diamond_full_region(self):
        site = minkowski_site(DIAMOND, c=1)
        p = site.points
        blocks = site.chain_decompose(p)
        assert blocks == (
            frozenset({p[0]}),
            frozenset({p[1], p[2]}),
            frozenset({p[3]}),
        )

    def test_single_point(self):
        site = chain_site(("a", "b"))
        assert site.chain_decompose({"a"}) == (frozenset({"a"}),)

    def test_linear_region_singletons(self):
        site = chain_site(tuple("abcde"))
        blocks = site.chain_decompose(site.points)
        assert blocks == tuple(frozenset({t}) for t in site.points)

    def test_empty_region(self):
        site = chain_site(("a",))
        assert site.chain_decompose(()) == ()


class TestEnumerateAntichains:
    def test_singleton_site(self):
        classes = derive_classes(chain_site(("a",)))
        assert classes.maximal_antichains == (frozenset({"a"}),)

    def test_total_order_singletons(self):
        classes = derive_classes(chain_site(tuple("abcd")))
        assert set(classes.maximal_antichains) == {
            frozenset({t}) for t in "abcd"
        }

    def test_every_block_in_some_slice(self):
        site = minkowski_site(DIAMOND, c=1)
        classes = derive_classes(site)
        for k in classes.all_nonanticipatory():
            if k:
                assert classes.antichains_containing(k)

    def test_cap(self):
        classes = derive_classes(discrete_site(tuple(f"p{i}" for i in range(8))))
        with pytest.raises(ValueError, match="cap"):
            classes.all_nonanticipatory(cap=10)


class TestValidation:
    def test_non_reflexive_rejected(self):
        with pytest.raises(ValueError, match="reflexive"):
            CausalSite(points=("a",), leq=((False,),))

    def test_non_transitive_rejected(self):
        leq = (
            (True, True, False),
            (False, True, True),
            (False, False, True),
        )
        with pytest.raises(ValueError, match="transitively"):
            CausalSite(points=("a", "b", "c"), leq=leq)

    def test_duplicate_points_rejected(self):
        with pytest.raises(ValueError, match="distinct"):
            CausalSite(points=("a", "a"), leq=((True, True), (True, True)))


class TestSymmetry:
    def test_identity_valid(self):
        site = chain_site(("a", "b", "c"))
        assert check_symmetry(site, trivial_symmetry(site)).ok

    def test_cyclic_shift_on_trivial_preorder(self):
        site = discrete_site(("a", "b", "c"))
        maps = {"r": {"a": "b", "b": "c", "c": "a"}, "id": {t: t for t in site.points}}
        sym = SiteSymmetry(
            ("id", "r"),
            maps,
            {("id", "id"): "id", ("id", "r"): "r", ("r", "id"): "r"},
        )
        assert check_symmetry(site, sym).ok

    def test_order_reversal_flagged(self):
        site = chain_site(("a", "b", "c"))
        maps = {"s": {"a": "b", "b": "c", "c": "a"}}
        sym = SiteSymmetry(("s",), maps, {})
        report = check_symmetry(site, sym)
        assert not report.ok
        assert report.monotonicity_violations

    def test_partial_map_monotone(self):
        site = chain_site(("a", "b", "c"))
        sym = SiteSymmetry(("s",), {"s": {"a": "b", "b": "c"}}, {})
        assert check_symmetry(site, sym).ok

    def test_composition_violation(self):
        site = discrete_site(("a", "b"))
        maps = {"s": {"a": "b", "b": "a"}, "id": {"a": "a", "b": "b"}}
        sym = SiteSymmetry(("id", "s"), maps, {("s", "s"): "s"})
        report = check_symmetry(site, sym)
        assert report.composition_violations


# -- property tests over random preorders -----------------------------------


def preorders(max_points=5):
    @st.composite
    def build(draw):
        n = draw(st.integers(1, max_points))
        bits = draw(
            st.lists(st.booleans(), min_size=n * n, max_size=n * n)
        )
        rel = [[bits[i * n + j] or i == j for j in range(n)] for i in range(n)]
        # Warshall closure makes any seed a legal preorder
        for k in range(n):
            for i in range(n):
                for j in range(n):
                    rel[i][j] = rel[i][j] or (rel[i][k] and rel[k][j])
        return CausalSite(
            points=tuple(f"p{i}" for i in range(n)),
            leq=tuple(tuple(row) for row in rel),
        )

    return build()


@settings(max_examples=50, deadline=None)
@given(preorders(max_points=5))
def test_maximal_antichains_match_brute_force(site):
    classes = derive_classes(site)
    n = len(site.points)
    nonanticipatory = [
        frozenset(c)
        for r in range(1, n + 1)
        for c in itertools.combinations(site.points, r)
        if site.is_nonanticipatory(c)
    ]
    maximal = {
        a for a in nonanticipatory if not any(a < b for b in nonanticipatory)
    }
    assert set(classes.maximal_antichains) == maximal


@settings(max_examples=50, deadline=None)
@given(preorders(max_points=5))
def test_all_nonanticipatory_matches_brute_force(site):
    classes = derive_classes(site)
    n = len(site.points)
    expected = {
        frozenset(c)
        for r in range(n + 1)
        for c in itertools.combinations(site.points, r)
        if site.is_nonanticipatory(c)
    }
    assert set(classes.all_nonanticipatory()) == expected


@settings(max_examples=60, deadline=None)
@given(preorders())
def test_chain_decompose_partitions(site):
    blocks = site.chain_decompose(site.points)
    flat = [t for b in blocks for t in b]
    assert sorted(flat) == sorted(site.points)
    assert len(flat) == len(set(flat))
    for b in blocks:
        assert site.is_nonanticipatory(b)


@settings(max_examples=60, deadline=None)
@given(preorders())
def test_chain_blocks_strictly_ordered(site):
    classes = derive_classes(site)
    blocks = site.chain_decompose(site.points)
    for earlier, later in zip(blocks, blocks[1:]):
        assert classes.subset_strictly_after(later, earlier)


@settings(max_examples=60, deadline=None)
@given(preorders())
def test_chain_decompose_idempotent(site):
    blocks = site.chain_decompose(site.points)
    again = site.chain_decompose(set().union(*blocks)) if blocks else ()
    assert blocks == again


@settings(max_examples=40, deadline=None)
@given(preorders(max_points=4))
def test_join_characterizes_strict_order(site):
    classes = derive_classes(site)
    antichains = [k for k in classes.all_nonanticipatory() ]
    for j, jp in itertools.product(antichains, repeat=2):
        strict = classes.subset_strictly_after(j, jp)
        via_join = bool(j) and classes.join(j, jp) == j and not (j & jp)
        assert strict == via_join


@settings(max_examples=40, deadline=None)
@given(preorders(max_points=4))
def test_monotone_maps_preserve_antichains(site):
    # the identity is monotone; so is any automorphism generated by sorting
    sym = trivial_symmetry(site)
    assert check_symmetry(site, sym).ok
    classes = derive_classes(site)
    m = sym.maps["id"]
    for k in classes.all_nonanticipatory():
        image = frozenset(m[t] for t in k)
        assert site.is_nonanticipatory(image)


def test_shift_sends_antichains_into_slices():
    # a genuine (partial, non-identity) monotone map: images of
    # nonanticipatory sets stay nonanticipatory and every image of a maximal
    # antichain lands inside some maximal antichain
    from qsproc.fixtures import galilean_shift_fixture

    _, site, sym = galilean_shift_fixture()
    assert check_symmetry(site, sym).ok
    classes = derive_classes(site)
    for s in ("s1", "s2"):
        m = dict(sym.maps[s])
        for k in classes.all_nonanticipatory():
            if not all(t in m for t in k):
                continue
            image = frozenset(m[t] for t in k)
            assert site.is_nonanticipatory(image)
        for l in classes.maximal_antichains:
            if all(t in m for t in l):
                image = frozenset(m[t] for t in l)
                assert any(image <= lp for lp in classes.maximal_antichains)
