import pytest
from hypothesis import given, settings, strategies as st

from kbutil import patched_kb
from lattices import compare, random_lattice
from situate.errors import KBError, RestrictionConflict
from situate.kb import load_kb
from situate.ontology import Ontology, effective_restrictions_oracle, lint_ontology
from situate.values import Collection, Const, CountInterval, Ref, Restriction

PEOPLE = {"collection": {"type": "person", "count": [0, None]}}
CARGO = {"collection": {"type": "cargo", "count": [0, None]}}


@pytest.fixture
def onto():
    o = Ontology()
    o.define_category("entity")
    o.define_category("place", ["entity"])
    o.define_category("physical-object", ["entity"],
                      [{"name": "location", "restriction": "place"}])
    o.define_category("person", ["physical-object"])
    o.define_category("cargo", ["physical-object"])
    o.define_category("container", ["physical-object", "place"],
                      [{"name": "contents", "restriction": "collection"}])
    o.define_category("passenger-transporter", ["container"],
                      restrictions={"container.contents": PEOPLE})
    o.define_category("freighter", ["container"], restrictions={"container.contents": CARGO})
    o.define_category("motion-state", ["entity"])
    o.define_category("vehicle", ["physical-object"],
                      [{"name": "motion", "restriction": "motion-state"}])
    return o


def test_declared_variables_get_unique_ids(onto):
    assert onto.categories["container"].declared == ("container.contents",)
    assert "container.contents" in onto.variables


def test_root_category_is_valid(onto):
    onto.define_category("thing")
    assert onto.variable_table("thing") == {}


@pytest.mark.parametrize("args", [
    ("container", ["entity"]),  # duplicate
    ("ghost", ["nowhere"]),  # unknown parent
    ("odd", ["entity"], (), {"container.contents": PEOPLE}),  # unreachable
])
def test_define_category_errors(onto, args):
    with pytest.raises(KBError):
        onto.define_category(*args)


def test_restrict_keeps_variable_identity(onto):
    table = onto.variable_table("passenger-transporter")
    r = table["container.contents"].restriction
    assert (r.value_category, r.element_category) == ("collection", "person")
    assert "passenger-transporter.contents" not in onto.variables


def test_restrict_to_identical_is_noop(onto):
    onto.restrict_variable("passenger-transporter", "container.contents",
                           Restriction.from_json(PEOPLE))


def test_widening_is_rejected(onto):
    onto.define_category("bus", ["passenger-transporter"])
    with pytest.raises(KBError):
        onto.restrict_variable("bus", "container.contents", Restriction.from_json("collection"))


def test_compose_suv_inherits_person_contents(onto):
    suv = onto.compose("suv", ["vehicle", "passenger-transporter"])
    r = suv.variable_table["container.contents"].restriction
    assert r.element_category == "person"
    assert set(suv.variable_table) == {"physical-object.location", "container.contents",
                                       "vehicle.motion"}
    assert suv.variable_table == effective_restrictions_oracle(
        onto, ["vehicle", "passenger-transporter"])


def test_compose_singleton_equals_member_table(onto):
    assert onto.compose("box", ["container"]).variable_table == onto.variable_table("container")


def test_compose_sibling_conflict(onto):
    with pytest.raises(RestrictionConflict):
        effective_restrictions_oracle(onto, ["passenger-transporter", "freighter"])
    with pytest.raises(RestrictionConflict):
        onto.compose("odd", ["passenger-transporter", "freighter"])


def test_diamond_deduplicates_variable(onto):
    onto.define_category("left", ["container"])
    onto.define_category("right", ["container"])
    table = onto.compose("both", ["left", "right"]).variable_table
    assert list(table).count("container.contents") == 1


def test_composite_default_must_satisfy_restriction(onto):
    onto.define_constant("moving", "motion-state")
    comp = onto.compose("car", ["vehicle"], defaults={"vehicle.motion": Const("moving")})
    assert comp.variable_table["vehicle.motion"].default == Const("moving")
    with pytest.raises(KBError):
        onto.compose("bad", ["vehicle"], defaults={"vehicle.motion": Ref("nobody")})


def test_satisfies_collection_restriction(onto):
    onto.define_category("person-x", ["person"])
    r = Restriction.from_json(PEOPLE)
    assert onto.satisfies(Collection("person", CountInterval(2, 2)), r)
    assert not onto.satisfies(Collection("cargo", CountInterval(2, 2)), r)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_cache_matches_oracle_on_random_lattices(seed):
    assert compare(*random_lattice(seed)) == 0


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_restrictions_narrow_along_paths(seed):
    onto, _ = random_lattice(seed)
    for name in onto.topological_order():
        table = onto.variable_table(name)
        for parent in onto.categories[name].parents:
            for vid, entry in onto.variable_table(parent).items():
                assert onto.narrows(table[vid].restriction, entry.restriction)


def test_variable_ids_count_declarations(kbs):
    for kb in kbs.values():
        declared = sum(len(c.declared) for c in kb.ontology.categories.values())
        assert declared == len(kb.ontology.variables)


def test_shipped_kbs_lint_clean(kbs):
    for kb in kbs.values():
        assert [d for d in lint_ontology(kb) if d.level == "error"] == []


def test_lint_unrealized_expressible_category(tmp_path):
    def edit(files):
        files["lexicon.json"]["entries"].pop("black")
    diags = lint_ontology(load_kb(patched_kb(tmp_path, "isr", edit)))
    assert [(d.level, d.code, d.subject) for d in diags] == [
        ("error", "unrealized-category", "color-black")]


def test_lint_vacuous_category_is_warning(tmp_path):
    def edit(files):
        files["categories.json"]["categories"].append({"name": "idle", "parents": ["entity"]})
    diags = lint_ontology(load_kb(patched_kb(tmp_path, "minimal", edit)))
    assert [(d.level, d.code, d.subject) for d in diags] == [
        ("warning", "vacuous-category", "idle")]


def test_lint_dangling_variable(tmp_path):
    def edit(files):
        files["policies.json"]["expectations"].append("physical-object.colour")
    diags = lint_ontology(load_kb(patched_kb(tmp_path, "minimal", edit)))
    assert ("error", "dangling-variable") in {(d.level, d.code) for d in diags}


def test_lattice_cycle_is_reported(tmp_path):
    def edit(files):
        cats = files["categories.json"]["categories"]
        cats[0]["parents"] = ["place"]
    with pytest.raises(KBError, match="cycle"):
        load_kb(patched_kb(tmp_path, "minimal", edit))
