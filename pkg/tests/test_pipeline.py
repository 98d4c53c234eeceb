import random
from dataclasses import replace
from fractions import Fraction

import pytest

from finleighton.core import build_graph_with_fins, rose, verify_covering
from finleighton.fixtures import (PETALS, amalgam, amalgam_double_cover, cylinder_count_mismatch,
                                  torus_pair)
from finleighton.gos import GraphOfSpaces, GosCover
from finleighton.pipeline import (BudgetExhausted, NoMatching, PipelineError, Witness, build_cyl_common_covers,
                                  commensurate,
                                  enumerate_link_maps, link_map_count, match_structures, minimal_scale,
                                  normalize_fin_lengths, omnipotent_cover, verify_witness,
                                  witness_component)


@pytest.fixture(scope="module")
def amalgam_witness():
    g, _ = amalgam_double_cover()
    return commensurate(amalgam(), g)


def test_match_identity_pairs_everything():
    a = amalgam()
    plan = match_structures(a, a)
    assert {u for u, _ in plan.pairs} == set(a.rigid)
    assert {v for v, _, _ in plan.cylinder_pairs} == set(a.cylinders)


def test_cylinder_number_mismatch_diagnostic():
    a, b = cylinder_count_mismatch()
    with pytest.raises(NoMatching) as exc:
        commensurate(a, b)
    assert exc.value.diagnostic.startswith("cylinder numbers differ (ratios match)")
    assert "incommensurable" in str(exc.value)


def test_invalid_input_rejected():
    a, _ = torus_pair(PETALS)
    loose = GraphOfSpaces(a.rigid, a.cylinders, [])
    with pytest.raises(PipelineError):
        match_structures(loose, a)


def test_link_map_counts():
    _, b = cylinder_count_mismatch()
    plan = match_structures(b, b)
    (v, w, eps), = [p for p in plan.cylinder_pairs if p[2] == 1]
    maps = enumerate_link_maps(plan, v, w, eps)
    assert len(maps) == 2 == link_map_count(plan, v, w, eps)
    assert len(set(maps)) == 2
    a, _ = torus_pair(PETALS)
    plan = match_structures(a, a)
    for v, w, eps in plan.cylinder_pairs:
        assert len(enumerate_link_maps(plan, v, w, eps)) == 1


def test_omnipotent_cover_unwraps_one_fin():
    x = build_graph_with_fins(rose("a"), [("a+",)])
    space, cm = omnipotent_cover(x, {"f0": 2}, 4, random.Random(0))
    assert [f.length for f in space.fins] == [2]
    assert verify_covering(cm).ok and cm.degree == 2
    same, none = omnipotent_cover(x, {"f0": 1}, 4, random.Random(0))
    assert same is x and none is None


def test_omnipotent_cover_budget():
    x = build_graph_with_fins(rose("a"), [("a+",)])
    with pytest.raises(BudgetExhausted) as exc:
        omnipotent_cover(x, {"f0": 2}, 0, random.Random(0))
    assert exc.value.partial == {"f0": 2}


def test_normalized_lengths_hit_targets():
    g, _ = amalgam_double_cover()
    plan = normalize_fin_lengths(match_structures(amalgam(), g))
    for space, leg_a, leg_b in plan.normalized.values():
        assert verify_covering(leg_a).ok and verify_covering(leg_b).ok
        for f in space.fins:
            assert f.length == plan.lengths[plan.colour_class(space.colour(f.id, 1))]


def test_minimal_scale():
    assert minimal_scale([Fraction(1, 2), Fraction(3, 4)], []) == 4
    assert minimal_scale([Fraction(2), Fraction(4)], []) == Fraction(1, 2)
    assert minimal_scale([Fraction(1)], [(Fraction(1), 2)]) == 2


def test_torus_pair_through_pipeline():
    a, b = torus_pair(PETALS)
    w = commensurate(a, b)
    assert w.report["ok"], w.report
    assert w.report["checks"]["cylinder_identity"]["ok"]
    assert w.report["checks"]["gluing"]["ok"]


def test_amalgam_against_double_cover(amalgam_witness):
    rep = amalgam_witness.report
    assert rep["ok"], rep
    assert rep["degrees"][0] == 2 * rep["degrees"][1]
    assert set(amalgam_witness.weights.rigid.values()) and min(amalgam_witness.weights.rigid.values()) > 0


def test_cylinder_covers_recorded():
    g, _ = amalgam_double_cover()
    plan = build_cyl_common_covers(normalize_fin_lengths(match_structures(amalgam(), g)))
    assert set(plan.cyl_covers) == set(plan.cylinder_pairs)
    for (v, w, _), cc in plan.cyl_covers.items():
        assert cc.degree_a == plan.cyl_degree[("a", v)] and cc.degree_b == plan.cyl_degree[("b", w)]
        x = plan.a_star.link(v)[0]
        assert cc.length == cc.degree_a * plan.a_star.rigid[x.rigid].fin(x.fin).length


def test_witness_component(amalgam_witness):
    space, leg_a, leg_b, rep = witness_component(amalgam_witness)
    assert rep["ok"]
    assert space.gamma().components().__len__() == 1


def _tamper(w, **kw):
    return Witness(**{**w.__dict__, **kw})


def test_dropped_edge_is_caught(amalgam_witness):
    w = amalgam_witness
    edges = w.space.edges[1:]
    space = GraphOfSpaces(w.space.rigid, w.space.cylinders, edges)
    legs = {k: GosCover(space, leg.target, leg.rigid_map, leg.cylinder_map,
                        {h: x for h, x in leg.edge_map.items() if h != w.space.edges[0].id})
            for k, leg in (("leg_a", w.leg_a), ("leg_b", w.leg_b))}
    rep = verify_witness(_tamper(w, space=space, **legs))
    assert not rep["ok"] and not rep["checks"]["structure"]["ok"]


def test_flipped_edge_is_caught(amalgam_witness):
    w = amalgam_witness
    h = w.space.edges[0]
    edges = [replace(h, sign=-h.sign)] + list(w.space.edges[1:])
    space = GraphOfSpaces(w.space.rigid, w.space.cylinders, edges)
    legs = {k: GosCover(space, leg.target, leg.rigid_map, leg.cylinder_map, leg.edge_map)
            for k, leg in (("leg_a", w.leg_a), ("leg_b", w.leg_b))}
    rep = verify_witness(_tamper(w, space=space, **legs))
    assert not rep["ok"]


def test_wrong_scale_is_caught(amalgam_witness):
    w = amalgam_witness
    bad = replace(w.weights, scale=w.weights.scale * 2)
    rep = verify_witness(_tamper(w, weights=bad))
    assert not rep["ok"] and not rep["checks"]["weights"]["ok"]


def test_verification_is_repeatable(amalgam_witness):
    assert verify_witness(amalgam_witness) == amalgam_witness.report


def test_short_fin_is_unwrapped():
    from finleighton.fixtures import unwrap_space
    g = unwrap_space()
    plan = normalize_fin_lengths(match_structures(g, g))
    assert max(plan.unwrap.values()) >= 2
    with pytest.raises(BudgetExhausted):
        normalize_fin_lengths(match_structures(g, g), budget=1)
    assert commensurate(g, g).report["ok"]
