import random

from finleighton.core import build_graph_with_fins, rose
from finleighton.fixtures import c1, c2, double_cover, rose_pattern
from finleighton.generators import random_cover, random_gwf
from finleighton.local_types import (canonical_colours, check_fin_transitivity, refine_local_types,
                                     same_universal_cover)


def test_c1_single_type():
    t = refine_local_types([c1()])
    assert len(t.vertex_labels(0)) == 1


def test_c1_and_cover_share_type():
    y, _ = double_cover(c1(), {"a"})
    t = refine_local_types([c1(), y])
    assert t.vertex_labels(0) == t.vertex_labels(1)
    assert same_universal_cover(c1(), y)


def test_rose_and_c1_disjoint():
    t = refine_local_types([rose_pattern(), c1()])
    assert not t.vertex_labels(0) & t.vertex_labels(1)
    v = same_universal_cover(rose_pattern(), c1())
    assert not v and "vertex" in v.witness


def test_one_fin_versus_two_fins():
    one = build_graph_with_fins(rose("a"), [("a+",)], {("f0", 1): "c", ("f0", -1): "c"})
    two = build_graph_with_fins(rose("a"), [("a+",), ("a+",)],
                                {(f, s): "c" for f in ("f0", "f1") for s in (1, -1)})
    assert not same_universal_cover(one, two)


def test_refinement_is_stable_and_bounded():
    x = rose_pattern()
    t = refine_local_types([x])
    n = x.num_vertices + len(x.graph.darts) + 2 * sum(f.length for f in x.fins)
    assert t.rounds <= n + 2


def test_canonical_colours_pull_back():
    rng = random.Random(5)
    for _ in range(25):
        x = random_gwf(rng, 6, 3)
        y, cm = random_cover(x, rng, 3)
        lab = canonical_colours([x, y])
        for f in y.fins:
            for s in (1, -1):
                fid, s2 = cm.oriented_image(f.id, s)
                assert lab[(1, f.id, s)] == lab[(0, fid, s2)]


def test_cover_vertices_share_image_type():
    rng = random.Random(8)
    for _ in range(25):
        x = random_gwf(rng, 6, 3)
        y, cm = random_cover(x, rng, 3)
        t = refine_local_types([x, y])
        for v, w in cm.vertex_map.items():
            assert t.vertex_type[(1, v)] == t.vertex_type[(0, w)]


def test_c1_and_double_cover_same_label():
    y, _ = double_cover(c1(), {"a"})
    lab = canonical_colours([c1(), y])
    assert lab[(0, "f0", 1)] == lab[(1, "f0.0", 1)]


def test_single_fin_labels():
    x = build_graph_with_fins(rose("ab"), [("a+", "b+", "b+")])
    lab = canonical_colours([x])
    assert set(lab) == {(0, "f0", 1), (0, "f0", -1)}


def test_reversal_labels_in_asymmetric_pattern():
    x = rose_pattern(("x", "xy"))
    lab = canonical_colours([x])
    # the reversed words are read from the reversed type sequences
    assert lab[(0, "f1", 1)] != lab[(0, "f0", 1)]


def test_transitivity_passes_on_canonical_colouring():
    x = rose_pattern()
    lab = canonical_colours([x])
    assert check_fin_transitivity([x], lab).ok
    assert check_fin_transitivity([c1()]).ok


def test_transitivity_fails_when_merging_classes():
    x = build_graph_with_fins(rose("ab"), [("a+",), ("a+", "b+")],
                              {(f, s): "same" for f in ("f0", "f1") for s in (1, -1)})
    v = check_fin_transitivity([x])
    assert not v.ok
    assert len(v.splitting["same"]) >= 2


def test_symmetry_and_reflexivity():
    rng = random.Random(2)
    for _ in range(10):
        a, b = random_gwf(rng, 5, 2), random_gwf(rng, 5, 2)
        assert same_universal_cover(a, a)
        assert bool(same_universal_cover(a, b)) == bool(same_universal_cover(b, a))
    assert same_universal_cover(c1(), c2())
