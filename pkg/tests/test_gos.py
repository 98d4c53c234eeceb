import random
from dataclasses import replace
from fractions import Fraction

from finleighton.core import subdivide
from finleighton.fixtures import (PETALS, amalgam, amalgam_double_cover, bs, cylinder_count_mismatch,
                                  torus_pair, tree_raw, word_space)
from finleighton.gos import (Attachment, Cylinder, GosCover, GraphOfSpaces, balanced, cylinder_numbers,
                             densities, flip_identity_failures, gos_colouring, own_colouring, random_raw_cover,
                             stretch_ratio, validate_gos, verify_gos_cover)
from finleighton.words import triple_covering_word

import oracles


def test_torus_fixture_validates():
    a, b = torus_pair()
    assert validate_gos(a).ok and validate_gos(b).ok
    assert a.cylinders["z"].kind == "torus"


def test_unattached_and_doubly_attached_fins():
    a, _ = torus_pair()
    loose = GraphOfSpaces(a.rigid, a.cylinders, [])
    rep = validate_gos(loose, connected=False)
    assert any("unmatched fin" in v for v in rep.violations)
    twice = GraphOfSpaces(a.rigid, a.cylinders, list(a.edges) + [Attachment("e2", "u", "f0", "z", 1)])
    assert not validate_gos(twice).ok


def test_higher_rank_torus_rejected():
    a, _ = torus_pair()
    g = GraphOfSpaces(a.rigid, {"z": Cylinder("z", "torus", 2)}, a.edges)
    assert not validate_gos(g).ok


def test_balanced_examples():
    v = balanced(bs(1, 2))
    assert not v.balanced and v.modulus == 2 and [e for e, _ in v.witness] == ["t"]
    assert balanced(bs(2, 2)).balanced
    assert balanced(bs(2, -2)).balanced
    assert balanced(tree_raw(2, 3)).balanced
    assert v.as_dict()["verdict"] == "Unbalanced"


def test_balanced_cover_invariance():
    rng = random.Random(0)
    for m, n in [(1, 2), (2, 2), (3, -2), (2, 4)]:
        raw = bs(m, n)
        for _ in range(5):
            cov = random_raw_cover(raw, rng)
            assert balanced(cov).balanced == oracles.bs_balanced(m, n)


def test_cylinder_numbers_on_torus_fixture():
    a, _ = torus_pair()
    t = cylinder_numbers(a)
    assert sorted(t.values()) == [1, 1]
    assert {o for (_, o, _) in t} == {1, -1}
    assert flip_identity_failures(a) == []


def test_cylinder_number_two():
    _, b = cylinder_count_mismatch()
    t = cylinder_numbers(b)
    assert set(t.values()) == {2}
    assert flip_identity_failures(b) == []


def _mixed():
    w = triple_covering_word(2)
    x, y = word_space(w), word_space(w, lengths=PETALS)
    return GraphOfSpaces({"p": x, "q": y}, {"v": Cylinder("v")},
                         [Attachment("e", "p", "f0", "v", 1), Attachment("f", "q", "f0", "v", -1)])


def test_stretch_ratio_examples():
    assert stretch_ratio(_mixed(), "v") == {"e": 2, "f": 3}
    a, _ = torus_pair()
    assert list(stretch_ratio(a, "z").values()) == [1]
    _, b = cylinder_count_mismatch()
    assert list(stretch_ratio(b, "v").values()) == [1, 1]
    from finleighton.core import build_graph_with_fins, Graph
    x2 = build_graph_with_fins(Graph(["v", "m"], [("p", "v", "m"), ("q", "m", "v"), ("r", "v", "v")]),
                               [("p+", "q+"), ("r+", "p+", "q+", "r+", "r+", "p+", "q+", "r+")])
    g = GraphOfSpaces({"u": x2}, {"v": Cylinder("v")},
                      [Attachment("e0", "u", "f0", "v", 1), Attachment("e1", "u", "f1", "v", 1)])
    assert stretch_ratio(g, "v") == {"e0": 1, "e1": 4}


def test_stretch_ratio_subdivision_invariance():
    g = _mixed()
    h = GraphOfSpaces({u: subdivide(x, 3) for u, x in g.rigid.items()}, g.cylinders, g.edges)
    assert stretch_ratio(g, "v") == stretch_ratio(h, "v")


def test_densities_torus_fixture():
    a, _ = torus_pair()
    rep = densities(a, own_colouring(a))
    w = triple_covering_word(2)
    assert rep.volume == 1
    assert list(rep.class_density.values()) == [1]
    # the fixture's own colours keep the two orientations apart
    assert set(rep.colour_density.values()) == {len(w)}
    assert all(lhs == rhs == len(w) for lhs, rhs in rep.identity.values())
    assert rep.ok
    # canonical colours cannot tell w from its reversal here, so they merge
    merged = densities(a)
    assert list(merged.colour_density.values()) == [2 * len(w)] and merged.ok


def test_densities_two_isomorphic_spaces():
    _, b = cylinder_count_mismatch()
    rep = densities(b)
    n = b.rigid["u"].num_vertices
    assert rep.volume == 2 * n and list(rep.class_density.values()) == [1]


def test_densities_two_classes():
    rep = densities(_mixed())
    assert sorted(rep.class_density.values()) == [Fraction(1, 3), Fraction(2, 3)]
    assert rep.ok


def test_double_cover_of_amalgam_verifies():
    g, cov = amalgam_double_cover()
    deg, bad = verify_gos_cover(cov)
    assert deg == 2 and bad == []
    assert validate_gos(g).ok


def test_orientation_mismatch_detected():
    g, cov = amalgam_double_cover()
    edges = [replace(a, sign=-a.sign) if a.id == "e1.0" else a for a in g.edges]
    g2 = GraphOfSpaces(g.rigid, g.cylinders, edges)
    cov2 = GosCover(g2, cov.target, cov.rigid_map, cov.cylinder_map, cov.edge_map)
    deg, bad = verify_gos_cover(cov2)
    assert "orientation mismatch on edge space e1.0" in bad


def test_colouring_covers_all_fins():
    g = amalgam()
    col = gos_colouring(g)
    assert len(col) == 2 * sum(len(x.fins) for x in g.rigid.values())
