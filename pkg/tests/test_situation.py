import json
from collections import Counter

import pytest

from situate.errors import RestrictionError, SituateError
from situate.session import run_lines
from situate.situation import (Mention, Situation, bind_variable, create_peg, dump_situation,
                               instantiate_habitat, introduce_packet, new_individual,
                               reactivate, resolve_head, speaker_shift, sweep_bindings)
from situate.values import Collection, Const, CountInterval, Ref, Unknown
from conftest import CORPUS


def packet(kb, word):
    packets, _ = kb.lexicon.analyze(word)
    return packets[0]


@pytest.fixture
def isr(kbs):
    return Situation(kbs["isr"])


def test_black_accumulates_on_peg(isr, kbs):
    peg = create_peg(isr)
    introduce_packet(isr, packet(kbs["isr"], "black"), peg)
    assert peg.predications[0][:2] == ("has-surface.color-of", Const("black"))


def test_number_word_accumulates_collection(isr, kbs):
    peg = create_peg(isr)
    introduce_packet(isr, packet(kbs["isr"], "two"), peg)
    vid, value, _ = peg.predications[0]
    assert vid == "group.extent" and value.count == CountInterval(2, 2)


def test_create_peg_rebinds_current_np_referent(isr):
    first = create_peg(isr)
    assert isr.indexical("current-np-referent") == first.id
    second = create_peg(isr)
    assert isr.indexical("current-np-referent") == second.id
    assert any(e.kind == "peg-dangling" and e.args == (first.id,) for e in isr.events)


def test_resolve_head_transfers_count(isr, kbs):
    peg = create_peg(isr)
    introduce_packet(isr, packet(kbs["isr"], "two"), peg)
    ind = resolve_head(isr, peg, packet(kbs["isr"], "person"), plural=True)
    assert ind.id == "people-1" and ind.composite == "person-group"
    assert ind.value("group.extent") == Collection("person", CountInterval(2, 2))
    assert isinstance(ind.value("physical-object.location"), Unknown)
    # transfer fills in the element type from the head; nothing else changes
    assert Counter((p[0], p[1].count) for p in peg.transferred) == \
        Counter((p[0], p[1].count) for p in peg.predications)
    assert peg.head_resolved
    with pytest.raises(SituateError):
        peg.accumulate("group.extent", None, "text")


def test_resolve_empty_peg_gives_bare_individual(isr, kbs):
    ind = resolve_head(isr, create_peg(isr), packet(kbs["isr"], "suv"))
    assert ind.id == "SUV-1"
    assert set(ind.bindings) == {"physical-object.location"}
    assert len(ind.addressable) == len(kbs["isr"].ontology.table_for("suv"))


def test_color_on_non_surface_head_fails(isr, kbs):
    peg = create_peg(isr)
    introduce_packet(isr, packet(kbs["isr"], "black"), peg)
    with pytest.raises(RestrictionError):
        resolve_head(isr, peg, packet(kbs["isr"], "person"))


def test_binding_narrows_value_category(isr):
    suv = new_individual(isr, "suv", "SUV")
    wakil = new_individual(isr, "village", name="wakil")
    bind_variable(isr, suv.id, "physical-object.location", Ref(wakil.id))
    assert suv.bindings["physical-object.location"].category == "village"


def test_identical_binding_is_noop(isr):
    suv = new_individual(isr, "suv", "SUV")
    bind_variable(isr, suv.id, "vehicle.brand", Const("ford"))
    count = len(isr.events)
    bind_variable(isr, suv.id, "vehicle.brand", Const("ford"))
    assert len(isr.events) == count


def test_binding_violation_without_coercion(isr):
    suv = new_individual(isr, "suv", "SUV")
    with pytest.raises(RestrictionError):
        bind_variable(isr, suv.id, "vehicle.brand", Const("black"))


def test_destination_place_is_coerced_to_airport(kbs):
    sit = Situation(kbs["airtravel"])
    flight = new_individual(sit, "air-travel", "flight")
    islands = new_individual(sit, "island-group", name="leeward-islands")
    sit.activate_procedure("destination-airport-at-place")
    bind_variable(sit, flight.id, "air-travel.destination", Ref(islands.id))
    dest = flight.value("air-travel.destination").id
    assert sit.individuals[dest].composite == "airport"
    assert sit.individuals[dest].value("geo-place.located-in") == Ref("leeward-islands")


def test_habitat_roles_stay_latent(kbs):
    sit = Situation(kbs["airtravel"])
    inst = instantiate_habitat(sit, "flight", "telic")
    assert inst.focus == "telic"
    assert sorted(sit.individuals) == [inst.anchor]


def test_unknown_habitat(kbs):
    with pytest.raises(SituateError):
        instantiate_habitat(Situation(kbs["airtravel"]), "voyage", "telic")


def test_shift_of_empty_situation_is_noop(isr):
    speaker_shift(isr, "Heavy3")
    assert isr.is_empty() and not isr.passive.individuals


def test_shift_archives_and_clears(isr):
    new_individual(isr, "suv", "SUV")
    speaker_shift(isr, "Heavy3")
    assert isr.individuals == {} and "SUV-1" in isr.passive.individuals
    assert [e.args for e in isr.events if e.kind == "archive"] == [("1 individuals",)]
    assert all(v.binding is None for v in isr.indexicals.values())


def test_reactivate_with_empty_store_creates_fresh(isr):
    ind = reactivate(isr, Mention("suv", prefix="SUV"))
    assert ind.id == "SUV-1" and isr.indexical("new") == "SUV-1"


def test_reactivate_prefers_most_recent_and_logs_tie(isr):
    for _ in range(2):
        suv = new_individual(isr, "suv", "SUV")
        bind_variable(isr, suv.id, "vehicle.brand", Const("ford"))
    speaker_shift(isr, "Heavy3")
    ind = reactivate(isr, Mention("suv", (("vehicle.brand", Const("ford")),)))
    assert ind.id == "SUV-2" and isr.indexical("given") == "SUV-2"
    assert any(e.kind == "reactivate-tie" for e in isr.events)


def test_history_restores_count_interval(kbs):
    kb = kbs["isr"]
    sit = run_lines(kb, [], history=kb.history).sit
    ind = reactivate(sit, Mention("suv", (("vehicle.brand", Const("ford")),)))
    assert ind.id == "SUV-1"
    assert ind.value("container.contents").count == CountInterval(4, None)


def test_theme_and_subject_indexicals(kbs):
    kb = kbs["isr"]
    sit = run_lines(kb, (CORPUS / "isr_table1.txt").read_text().splitlines(),
                    history=kb.history).sit
    doc = json.loads(dump_situation(sit))
    assert doc["indexicals"]["theme"] == "SUV-1"
    assert any(e.kind == "indexical" and e.args == ("syntactic-subject", "people-2")
               for e in sit.events)
    assert doc["indexicals"]["current-np-referent"] is None
    assert sweep_bindings(sit) == []


def test_empty_dump_is_canonical(isr):
    doc = json.loads(dump_situation(isr))
    assert doc["individuals"] == {} and doc["predications"] == []
    assert dump_situation(isr) == dump_situation(isr)
