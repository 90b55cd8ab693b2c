"""Loading a knowledge base directory of JSON documents.

Files (all UTF-8 JSON): ``categories.json`` and ``lexicon.json`` are
required; ``composites.json``, ``habitats.json``, ``procedures.json``,
``policies.json`` and ``history.json`` are optional. Declarations may appear
in any order; dependencies are sorted before anything is defined.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from graphlib import CycleError, TopologicalSorter
from pathlib import Path
from typing import Dict, List, Optional

from .errors import KBError
from .inference import (ACTION_KINDS, AttachedProcedure, CoercionRecipe, Habitat,
                        OperatorEffect, ProcessOperator, Role)
from .lexicon import DEFAULT_SUFFIXES, QUALIA_ROLES, Lexicon, packet_from_json
from .ontology import Ontology
from .values import PRIMITIVE_KINDS, Restriction, value_from_json

DEFAULT_DEPTH_LIMIT = 8


@dataclass
class KnowledgeBase:
    ontology: Ontology
    lexicon: Lexicon
    habitats: Dict[str, Habitat] = field(default_factory=dict)
    operators: Dict[str, ProcessOperator] = field(default_factory=dict)
    procedures: List[AttachedProcedure] = field(default_factory=list)
    coercions: Dict[str, CoercionRecipe] = field(default_factory=dict)
    policies: dict = field(default_factory=dict)
    history: Optional[dict] = None
    path: Optional[str] = None

    @property
    def depth_limit(self) -> int:
        return int(self.policies.get("depth_limit", DEFAULT_DEPTH_LIMIT))

    def procedure(self, pid: str) -> AttachedProcedure:
        for p in self.procedures:
            if p.id == pid:
                return p
        raise KBError(f"unknown procedure {pid!r}")

    def referenced_categories(self):
        """Categories that some non-lexical declaration depends on."""
        out = set(self.ontology.constants.values())
        for p in self.procedures:
            out.add(p.category)
            for key in ("value_is_a", "value_not_a"):
                if key in p.condition:
                    out.add(p.condition[key])
        for c in self.coercions.values():
            out.update((c.source, c.target))
        for h in self.habitats.values():
            out.add(h.anchor_composite)
            out.update(r.composite for r in h.roles.values() if r.composite)
        for op in self.operators.values():
            out.add(op.applicability)
        for packet in self.lexicon.packets():
            if packet.subject_category:
                out.add(packet.subject_category)
        for vid in self.ontology.variables.values():
            r = vid.base_restriction
            out.add(r.value_category)
            if r.element_category:
                out.add(r.element_category)
        for cat in self.ontology.categories.values():
            for r in cat.restrictions.values():
                out.add(r.value_category)
                if r.element_category:
                    out.add(r.element_category)
            out.update(cat.parents)
        return sorted(out - set(PRIMITIVE_KINDS))

    def variable_references(self):
        """Every ``(where, variable id)`` pair mentioned outside a declaration."""
        refs = []
        for p in self.procedures:
            refs.append((f"procedure {p.id}", p.variable))
            for key in ("variable", "delta_from"):
                if key in p.action:
                    refs.append((f"procedure {p.id}", p.action[key]))
        for c in self.coercions.values():
            if c.variable:
                refs.append((f"coercion {c.id}", c.variable))
            if c.create:
                for key in ("search_variable",):
                    if c.create.get(key):
                        refs.append((f"coercion {c.id}", c.create[key]))
                refs.extend((f"coercion {c.id}", v) for v in c.create.get("bind", {}))
        for h in self.habitats.values():
            refs.extend((f"habitat {h.name}", r.variable) for r in h.roles.values())
            refs.extend((f"habitat {h.name}", vid) for vid, _ in h.defaults)
            for stage in h.script:
                for frame in ("before", "after"):
                    refs.extend((f"habitat {h.name}", s["variable"]) for s in stage.get(frame, ()))
        for op in self.operators.values():
            refs.append((f"operator {op.name}", op.status_variable))
        for packet in self.lexicon.packets():
            where = f"sense {packet.sense_id}"
            refs.extend((where, i.variable) for i in packet.payload if i.variable)
            refs.extend((where, v) for v in packet.attachments.values())
            if packet.verb:
                refs.extend((where, v) for v in packet.verb.slots.values())
                if packet.verb.aspect_variable:
                    refs.append((where, packet.verb.aspect_variable))
                for s in packet.verb.before + packet.verb.after:
                    refs.append((where, s["variable"]))
        for vid in self.policies.get("expectations", ()):
            refs.append(("policies", vid))
        for key in ("operator_target", "time_variable"):
            if self.policies.get(key):
                refs.append(("policies", self.policies[key]))
        for vid in (self.lexicon.number_variable, self.lexicon.approximate_variable):
            if vid:
                refs.append(("lexicon", vid))
        return refs


# -- reading -----------------------------------------------------------------------

def _read(directory: Path, name: str, required: bool):
    path = directory / name
    if not path.exists():
        if required:
            raise KBError(f"{directory}: missing {name}")
        return {}
    try:
        with path.open(encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise KBError(f"{path}: {exc}") from None


def _restriction_names(spec) -> List[str]:
    r = Restriction.from_json(spec)
    names = [r.value_category]
    if r.element_category:
        names.append(r.element_category)
    return [n for n in names if n not in PRIMITIVE_KINDS]


def _value(raw):
    return None if raw is None else value_from_json(raw)


def build_ontology(categories: List[dict], composites: List[dict],
                   constants: List[dict]) -> Ontology:
    """Define categories and composites in dependency order."""
    decls = {}
    deps = {}
    const_category = {c["name"]: c["category"] for c in constants}
    for d in categories + composites:
        name = d["name"]
        if name in decls:
            raise KBError(f"duplicate category {name!r}")
        decls[name] = d
        need = set(d.get("parents", d.get("members", ())))
        for v in d.get("variables", ()):
            need.update(_restriction_names(v["restriction"]))
        for spec in d.get("restrictions", {}).values():
            need.update(_restriction_names(spec))
        raw_defaults = list(d.get("defaults", {}).values())
        raw_defaults += [v["default"] for v in d.get("variables", ()) if v.get("default")]
        for raw in raw_defaults:
            if isinstance(raw, dict) and "const" in raw and raw["const"] in const_category:
                need.add(const_category[raw["const"]])
        need.discard(name)  # a variable may range over its own category
        deps[name] = need
    try:
        order = list(TopologicalSorter(deps).static_order())
    except CycleError as exc:
        raise KBError(f"category lattice has a cycle: {exc.args[1]}") from None
    onto = Ontology()
    composite_names = {d["name"] for d in composites}
    for name in order:
        if name not in decls:
            continue  # unknown name; the define call for its dependant reports it
        d = decls[name]
        defaults = {k: _value(v) for k, v in d.get("defaults", {}).items()}
        if name in composite_names:
            onto.compose(name, d["members"], d.get("restrictions"), defaults)
        else:
            variables = [dict(v, default=_value(v.get("default")))
                         for v in d.get("variables", ())]
            onto.define_category(name, d.get("parents", ()), variables,
                                 d.get("restrictions"), defaults,
                                 bool(d.get("expressible", False)))
        for c in constants:
            if c["category"] == name:
                onto.define_constant(c["name"], name)
    missing = sorted(n for n in set().union(*deps.values()) if n not in decls) if deps else []
    if missing:
        raise KBError(f"unknown categories referenced: {', '.join(missing)}")
    for c in constants:
        if c["name"] not in onto.constants:
            onto.define_constant(c["name"], c["category"])
    return onto


def _coercion(d) -> CoercionRecipe:
    return CoercionRecipe(d["id"], d["source"], d["target"], d.get("variable"),
                          tuple(_value(v) for v in d.get("from", ())),
                          _value(d.get("to")), d.get("create"))


def _procedure(d, coercions) -> AttachedProcedure:
    trig, action = d["trigger"], d["action"]
    if action.get("kind") not in ACTION_KINDS:
        raise KBError(f"procedure {d['id']}: unknown action {action.get('kind')!r}")
    phase = "post"
    if action["kind"] == "coerce":
        recipe = coercions.get(action.get("recipe"))
        if recipe is None:
            raise KBError(f"procedure {d['id']}: unknown coercion {action.get('recipe')!r}")
        if recipe.replaces_value:
            phase = "pre"
    return AttachedProcedure(d["id"], trig["category"], trig["variable"],
                             dict(trig.get("condition", {})), dict(action),
                             bool(d.get("global", False)), phase)


def _habitat(d) -> Habitat:
    roles = {name: Role(name, r["variable"], r.get("composite"), r.get("id_prefix"))
             for name, r in d.get("roles", {}).items()}
    qualia = {q: tuple(rs) for q, rs in d.get("qualia", {}).items()}
    for q, rs in qualia.items():
        if q not in QUALIA_ROLES:
            raise KBError(f"habitat {d['name']}: unknown qualia role {q!r}")
        for r in rs:
            if r not in roles:
                raise KBError(f"habitat {d['name']}: qualia {q} names unknown role {r!r}")
    script = list(d.get("script", ()))
    for stage in script:
        for frame in ("before", "after"):
            for s in stage.get(frame, ()):
                for key in ("subject", "value"):
                    ref = s.get(key)
                    if isinstance(ref, str) and ref.startswith("$") and ref[1:] not in roles:
                        raise KBError(f"habitat {d['name']}: script names unknown role {ref!r}")
    ops = {name: OperatorEffect(tuple(o.get("affects", ())), tuple(o.get("unaffected", ())))
           for name, o in d.get("operators", {}).items()}
    h = Habitat(d["name"], d["anchor_composite"], d.get("event_class", "process"), roles,
                qualia, script, [(x["variable"], value_from_json(x["value"]))
                                 for x in d.get("defaults", ())],
                ops, bool(d.get("scheduled", False)), d.get("default_focus", "formal"),
                d.get("anchor_prefix"), tuple(d.get("procedures", ())))
    if h.scheduled and h.event_class == "process" and not h.defaults:
        raise KBError(f"habitat {h.name}: scheduled process needs a continuation default")
    return h


def _check_habitat(onto: Ontology, h: Habitat, procs):
    if not onto.instantiable(h.anchor_composite):
        raise KBError(f"habitat {h.name}: unknown anchor composite {h.anchor_composite!r}")
    table = onto.table_for(h.anchor_composite)
    for r in h.roles.values():
        if r.variable not in table:
            raise KBError(f"habitat {h.name}: role {r.name} variable {r.variable} "
                          f"is not housed in {h.anchor_composite}")
        if r.composite and not onto.instantiable(r.composite):
            raise KBError(f"habitat {h.name}: unknown role composite {r.composite!r}")
    for vid, value in h.defaults:
        if vid not in table or not onto.satisfies(value, table[vid].restriction):
            raise KBError(f"habitat {h.name}: bad default for {vid}")
    for pid in h.procedures:
        if pid not in procs:
            raise KBError(f"habitat {h.name}: unknown procedure {pid!r}")


def load_kb(directory) -> KnowledgeBase:
    """Load and validate a KB directory. Raises KBError on any bad declaration."""
    directory = Path(directory)
    if not directory.is_dir():
        raise OSError(f"{directory}: not a directory")
    try:
        return _load(directory)
    except KBError:
        raise
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise KBError(f"{directory}: malformed declaration ({type(exc).__name__}: {exc})") from None


def _load(directory: Path) -> KnowledgeBase:
    cats = _read(directory, "categories.json", True)
    comps = _read(directory, "composites.json", False)
    lex = _read(directory, "lexicon.json", True)
    habs = _read(directory, "habitats.json", False)
    procs = _read(directory, "procedures.json", False)
    policies = _read(directory, "policies.json", False)
    history = _read(directory, "history.json", False) or None

    onto = build_ontology(cats.get("categories", []), comps.get("composites", []),
                          cats.get("constants", []))
    coercions = {}
    for d in procs.get("coercions", ()):
        c = _coercion(d)
        for cat in (c.source, c.target):
            if cat not in onto.categories:
                raise KBError(f"coercion {c.id}: unknown category {cat!r}")
        coercions[c.id] = c
    procedures = []
    for d in procs.get("procedures", ()):
        p = _procedure(d, coercions)
        if p.category not in onto.categories:
            raise KBError(f"procedure {p.id}: unknown category {p.category!r}")
        if p.variable not in onto.variables:
            raise KBError(f"procedure {p.id}: unknown variable {p.variable!r}")
        if any(q.id == p.id for q in procedures):
            raise KBError(f"duplicate procedure {p.id!r}")
        procedures.append(p)
    proc_ids = {p.id for p in procedures}
    habitats = {}
    for d in habs.get("habitats", ()):
        h = _habitat(d)
        _check_habitat(onto, h, proc_ids)
        habitats[h.name] = h
    operators = {}
    for d in habs.get("operators", ()):
        op = ProcessOperator(d["name"], d["applicability"], d["status_variable"],
                             value_from_json(d["status_value"]), d.get("focus"))
        if op.applicability not in onto.categories:
            raise KBError(f"operator {op.name}: unknown category {op.applicability!r}")
        operators[op.name] = op

    irregular = {form: (d["base"], tuple(d.get("features", ())))
                 for form, d in lex.get("irregular", {}).items()}
    suffixes = [tuple(s) for s in lex["suffixes"]] if "suffixes" in lex else DEFAULT_SUFFIXES
    lexicon = Lexicon(onto, habitats, proc_ids, suffixes, irregular,
                      lex.get("qualia_demands", ()), lex.get("number_variable"),
                      lex.get("approximate_variable"), lex.get("number_words"))
    for trigger, senses in lex.get("entries", {}).items():
        for decl in senses:
            lexicon.define_packet(packet_from_json(decl, trigger))
    # dangling variable references are left for lint to report
    return KnowledgeBase(onto, lexicon, habitats, operators, procedures, coercions,
                         policies, history, str(directory))
