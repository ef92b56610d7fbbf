import numpy as np
import pytest

from hypersheaf import (
    CellularSheaf,
    SheafError,
    build_skeleton,
    check_compatibility,
    identity_graph_sheaf,
    identity_sheaf,
    induce_from_graph_sheaf,
    load_sheaf,
    parse_hypergraph,
    random_graph_sheaf,
    random_sheaf,
    save_sheaf,
)
from hypersheaf.sheaf import GraphSheaf, pairwise_random_sheaf
from hypersheaf.simplicial import Simplex

from conftest import TWO_EDGE_TEXT


@pytest.fixture
def deep_skeleton():
    return build_skeleton(parse_hypergraph(TWO_EDGE_TEXT), 2)


class TestConstructors:
    def test_identity_restrictions(self, deep_skeleton):
        sheaf = identity_sheaf(deep_skeleton, 2, 2)
        assert np.array_equal(sheaf.restriction(1, 0, 1), np.eye(2))
        assert np.array_equal(sheaf.restriction(2, 3, 0), np.eye(2))

    def test_identity_compatible(self, deep_skeleton):
        report = check_compatibility(identity_sheaf(deep_skeleton, 2, 2))
        assert report.ok and report.violations == []

    def test_random_deterministic(self, deep_skeleton):
        a = random_sheaf(deep_skeleton, 2, 1, seed=42)
        b = random_sheaf(deep_skeleton, 2, 1, seed=42)
        assert np.array_equal(a.maps[1], b.maps[1])

    def test_random_seeds_differ(self, deep_skeleton):
        a = random_sheaf(deep_skeleton, 2, 1, seed=0)
        b = random_sheaf(deep_skeleton, 2, 1, seed=1)
        assert not np.array_equal(a.maps[1], b.maps[1])

    def test_random_degree_two_rejected(self, deep_skeleton):
        with pytest.raises(SheafError, match="compatible"):
            random_sheaf(deep_skeleton, 2, 2, seed=0)

    def test_random_compatible_passes_check(self, deep_skeleton):
        sheaf = random_sheaf(deep_skeleton, 3, 2, seed=7, compatible=True)
        assert check_compatibility(sheaf, tol=1e-9).ok

    def test_degree_one_vacuously_compatible(self, deep_skeleton):
        sheaf = random_sheaf(deep_skeleton, 2, 1, seed=1)
        assert check_compatibility(sheaf).ok

    def test_perturbed_sheaf_detected(self, deep_skeleton):
        sheaf = random_sheaf(deep_skeleton, 2, 2, seed=7, compatible=True)
        sheaf.maps[2][0, 1] += 0.5
        report = check_compatibility(sheaf)
        assert not report.ok
        assert any(v[0] == 2 and v[1] == 0 for v in report.violations)

    def test_shape_validation(self, deep_skeleton):
        good = identity_sheaf(deep_skeleton, 1, 1)
        with pytest.raises(SheafError, match="shape"):
            CellularSheaf(deep_skeleton, 1, 1, {1: good.maps[1][:1]})

    def test_pairwise_sheaf_orderings_equal(self, deep_skeleton):
        sk = deep_skeleton
        sheaf = pairwise_random_sheaf(sk, 2, seed=9)
        for i, s in enumerate(sk.simplices[1]):
            a, b = s.nodes
            flipped = sk.index_of(Simplex(s.edge, (b, a)))
            # map into [a,b] from [a]_a equals map into [b,a] from [a]_a
            assert np.array_equal(sheaf.maps[1][i, 1], sheaf.maps[1][flipped, 0])


class TestInducedGraphSheaf:
    def test_scalar_example(self):
        g = parse_hypergraph("v w")
        sk = build_skeleton(g, 1)
        gs = GraphSheaf(1, {(0, 0): np.array([[2.0]]), (1, 0): np.array([[3.0]])})
        sheaf = induce_from_graph_sheaf(sk, gs)
        # [v,w]_e: facet [w] at position 0 gets 3, facet [v] at position 1 gets 2;
        # [w,v]_e the other way around.
        vw = sk.index_of(Simplex(0, (0, 1)))
        wv = sk.index_of(Simplex(0, (1, 0)))
        assert sheaf.maps[1][vw, 0] == 3.0 and sheaf.maps[1][vw, 1] == 2.0
        assert sheaf.maps[1][wv, 0] == 2.0 and sheaf.maps[1][wv, 1] == 3.0

    def test_identity_graph_sheaf_induces_identity(self):
        g = parse_hypergraph("a b\nb c\n")
        sk = build_skeleton(g, 1)
        sheaf = induce_from_graph_sheaf(sk, identity_graph_sheaf(g, 2))
        assert np.array_equal(sheaf.maps[1], identity_sheaf(sk, 2, 1).maps[1])

    def test_non_graph_rejected(self, deep_skeleton):
        gs = identity_graph_sheaf(parse_hypergraph("a b"), 1)
        with pytest.raises(SheafError, match="graph"):
            induce_from_graph_sheaf(deep_skeleton, gs)

    def test_random_graph_sheaf_deterministic(self):
        g = parse_hypergraph("a b\nb c\n")
        a = random_graph_sheaf(g, 2, seed=3)
        b = random_graph_sheaf(g, 2, seed=3)
        for key in a.maps:
            assert np.array_equal(a.maps[key], b.maps[key])

    def test_missing_restriction_lookup(self):
        g = parse_hypergraph("a b")
        gs = GraphSheaf(1, {(0, 0): np.eye(1)})
        with pytest.raises(SheafError, match="no restriction"):
            gs.restriction(1, 0)


class TestSerialization:
    def test_round_trip_bit_exact(self, deep_skeleton):
        sheaf = random_sheaf(deep_skeleton, 2, 2, seed=5, compatible=True)
        again = load_sheaf(deep_skeleton, save_sheaf(sheaf))
        assert again.stalk_dim == 2 and again.degree == 2
        for n in sheaf.maps:
            assert np.array_equal(sheaf.maps[n], again.maps[n])

    def test_missing_entry_rejected(self, deep_skeleton):
        sheaf = identity_sheaf(deep_skeleton, 1, 1)
        import json

        obj = json.loads(save_sheaf(sheaf))
        obj["entries"] = obj["entries"][:-1]
        with pytest.raises(SheafError, match="unset"):
            load_sheaf(deep_skeleton, json.dumps(obj))

    def test_bad_json_rejected(self, deep_skeleton):
        with pytest.raises(SheafError):
            load_sheaf(deep_skeleton, "not json")
