"""Working memory: the minimal model, pegs, indexicals, habitats, passive store.

Every mutation goes through a function in this module (or in
``inference``) so that it is recorded in the event log with the token that
caused it.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .errors import InferenceLimit, RestrictionError, SituateError
from .values import (Collection, Const, Ref, Unknown, value_from_json,
                     value_str, value_to_json)

log = logging.getLogger(__name__)

INDEXICALS = ("theme", "given", "new", "current-np-referent",
              "syntactic-subject", "current-verb")

DEFAULT_POLICIES = {
    "np-start": [["current-np-referent", "peg"]],
    "head-resolved": [["current-np-referent", "referent"], ["theme", "designated"]],
    "reactivated": [["given", "referent"]],
    "fresh": [["new", "referent"]],
    "verb-scanned": [["syntactic-subject", "subject"], ["current-verb", "event"]],
    "clause-closed": [["current-np-referent", None]],
    "end-of-line": [["given", "line-given"], ["new", "line-event"]],
}


@dataclass
class Binding:
    value: object
    source: str
    category: Optional[str] = None


@dataclass
class Individual:
    id: str
    composite: str
    latent: dict
    bindings: Dict[str, Binding] = field(default_factory=dict)
    mentioned: int = 0
    verb: object = None  # VerbEntry for event individuals built from a verb

    @property
    def addressable(self) -> List[str]:
        return list(self.latent)

    def value(self, vid):
        b = self.bindings.get(vid)
        return None if b is None else b.value


@dataclass
class Peg:
    id: str
    predications: List[Tuple[str, object, str]] = field(default_factory=list)
    expectations: List[Tuple[str, object]] = field(default_factory=list)
    head_resolved: bool = False
    definite: bool = False
    approximate: bool = False
    role: Optional[str] = None
    individual: Optional[str] = None
    transferred: List[Tuple[str, object, str]] = field(default_factory=list)

    def accumulate(self, vid, value, source):
        if self.head_resolved:
            raise SituateError(f"{self.id} is resolved; no further accumulation")
        self.predications.append((vid, value, source))


@dataclass
class IndexicalVariable:
    name: str
    binding: Optional[str] = None
    policy: str = "default"


@dataclass
class Predication:
    """A predication framed by an event state, e.g. ``during.before(dismount-1)``."""
    subject: str
    variable: str
    value: object
    source: str
    frame: str
    event: str

    def to_json(self):
        return {"frame": self.frame, "event": self.event, "subject": self.subject,
                "variable": self.variable, "value": value_to_json(self.value),
                "source": self.source}


@dataclass
class HabitatInstance:
    id: str
    habitat: str
    focus: str
    anchor: str
    status: str = "active"

    def to_json(self):
        return {"id": self.id, "habitat": self.habitat, "focus": self.focus,
                "anchor": self.anchor, "status": self.status}


@dataclass
class Event:
    seq: int
    line: object
    token: Optional[int]
    kind: str
    args: Tuple[str, ...] = ()
    mutation: bool = False
    binding: Optional[int] = None
    note: str = ""

    def format(self) -> str:
        tok = "-" if self.token is None else str(self.token)
        line = "-" if self.line is None else str(self.line)
        out = f"{line}:{tok}\t{self.kind}({','.join(self.args)})"
        return f"{out}\t{self.note}" if self.note else out


@dataclass
class PassiveStore:
    individuals: Dict[str, Individual] = field(default_factory=dict)
    habitats: List[HabitatInstance] = field(default_factory=list)
    predications: List[Predication] = field(default_factory=list)
    archived_at: Dict[str, int] = field(default_factory=dict)


class Situation:
    """One interpretation session's working memory."""

    def __init__(self, kb, strict: bool = True):
        self.kb = kb
        self.strict = strict
        self.individuals: Dict[str, Individual] = {}
        self.predications: List[Predication] = []
        self.habitats: List[HabitatInstance] = []
        self.indexicals = {n: IndexicalVariable(n) for n in INDEXICALS}
        for name in kb.policies.get("indexicals", ()):
            self.indexicals.setdefault(name, IndexicalVariable(name))
        self.pegs: List[Peg] = []
        self.passive = PassiveStore()
        self.events: List[Event] = []
        self.counters: Dict[str, int] = {}
        self.salience: Dict[str, set] = {}
        self.active_procedures: List[str] = [p.id for p in kb.procedures if p.is_global]
        self.cursor: Tuple[object, Optional[int]] = (None, None)
        self.speaker: Optional[str] = None
        self.last_time: Optional[int] = None
        self._clock = 0
        self._binding_seq = 0
        self._depth = 0

    # -- bookkeeping --------------------------------------------------------

    def emit(self, kind, *args, mutation=False, binding=None, note="") -> Event:
        ev = Event(len(self.events), self.cursor[0], self.cursor[1], kind,
                   tuple(str(a) for a in args), mutation, binding, note)
        self.events.append(ev)
        log.debug("%s", ev.format())
        return ev

    def tick(self) -> int:
        self._clock += 1
        return self._clock

    def next_id(self, prefix: str) -> str:
        n = self.counters.get(prefix, 0) + 1
        self.counters[prefix] = n
        return f"{prefix}-{n}"

    def note_id(self, ident: str):
        """Keep counters ahead of externally supplied ids like ``SUV-1``."""
        prefix, _, num = ident.rpartition("-")
        if prefix and num.isdigit():
            self.counters[prefix] = max(self.counters.get(prefix, 0), int(num))

    def type_of(self, ident: str) -> Optional[str]:
        ind = self.individuals.get(ident) or self.passive.individuals.get(ident)
        return ind.composite if ind else None

    def is_a(self, ident: str, category: str) -> bool:
        comp = self.type_of(ident)
        return comp is not None and self.kb.ontology.is_a(comp, category)

    def indexical(self, name) -> Optional[str]:
        iv = self.indexicals.get(name)
        return iv.binding if iv else None

    def set_indexical(self, name, value, policy="default"):
        iv = self.indexicals.setdefault(name, IndexicalVariable(name))
        if iv.binding == value:
            return
        iv.binding = value
        iv.policy = policy
        self.emit("indexical", name, value if value is not None else "-", mutation=True)

    def peg(self, ident) -> Optional[Peg]:
        for p in self.pegs:
            if p.id == ident:
                return p
        return None

    def mark_salient(self, ident, mark):
        marks = self.salience.setdefault(ident, set())
        if mark not in marks:
            marks.add(mark)
            self.emit("salient", ident, mark, mutation=True)

    def habitat_of(self, ident) -> Optional[HabitatInstance]:
        for h in self.habitats:
            if h.anchor == ident:
                return h
        return None

    def is_empty(self) -> bool:
        return not (self.individuals or self.habitats or self.predications
                    or any(p for p in self.pegs if not p.head_resolved))

    def activate_procedure(self, proc_id):
        if proc_id not in self.active_procedures:
            order = {p.id: i for i, p in enumerate(self.kb.procedures)}
            self.active_procedures.append(proc_id)
            self.active_procedures.sort(key=lambda x: order.get(x, 1 << 30))
            self.emit("proc-attached", proc_id, mutation=True)


# -- individuals ---------------------------------------------------------------

def new_individual(sit: Situation, composite: str, prefix: Optional[str] = None,
                   name: Optional[str] = None, source: str = "text") -> Individual:
    onto = sit.kb.ontology
    if not onto.instantiable(composite):
        raise SituateError(f"unknown composite {composite!r}")
    ident = name or sit.next_id(prefix or composite)
    if ident in sit.individuals or ident in sit.passive.individuals:
        raise SituateError(f"individual id {ident!r} already in use")
    sit.note_id(ident)
    ind = Individual(ident, composite, onto.table_for(composite), mentioned=sit.tick())
    sit.individuals[ident] = ind
    sit.emit("individual", ident, composite, mutation=True)
    for vid in sit.kb.policies.get("expectations", ()):
        entry = ind.latent.get(vid)
        if entry is not None:
            ind.bindings[vid] = Binding(Unknown(entry.restriction), "expectation")
            sit.emit("expect", f"{ident}.{vid}", mutation=True)
    return ind


def introduce_packet(sit: Situation, packet, anchor, span=None, features=()) -> Situation:
    """Instantiate a packet's payload against ``anchor`` (a Peg, Individual or None)."""
    source = _text_source(sit, span)
    sit.emit("packet", packet.sense_id, mutation=bool(packet.payload))
    for item in packet.payload:
        if item.kind == "introduce-individual":
            if isinstance(anchor, Individual):
                continue  # resolve_head already made it
            if anchor is None:
                new_individual(sit, item.composite, packet.id_prefix, item.name, source)
        elif item.kind == "introduce-predication":
            value = item.value
            vid = item.variable
            if isinstance(anchor, Peg):
                if packet.approximate is False and anchor.approximate and \
                        sit.kb.lexicon.approximate_variable and isinstance(value, Collection):
                    from .values import Number
                    vid = sit.kb.lexicon.approximate_variable
                    value = Number(value.count.lower)
                anchor.accumulate(vid, value, source)
                var = sit.kb.ontology.variables.get(vid)
                if var is not None:
                    anchor.expectations.append((vid, var.defining_category))
                sit.emit("peg-accumulate", anchor.id, vid, value_str(value), mutation=True)
            elif isinstance(anchor, Individual):
                bind_variable(sit, anchor.id, vid, value, source)
            else:
                sit.emit("unanchored", packet.sense_id, vid)
        elif item.kind == "reference-habitat":
            if isinstance(anchor, Individual):
                quale = sit.kb.lexicon.select_qualia_role(packet, {})
                instantiate_habitat(sit, item.habitat, quale, anchor=anchor.id)
        elif item.kind == "attach-procedure":
            sit.activate_procedure(item.procedure)
    return sit


def _text_source(sit, span):
    line = sit.cursor[0]
    if span is None:
        return "text" if line is None else f"text:{line}"
    return f"text:{line if line is not None else '-'}:{span[0]}-{span[1]}"


# -- pegs ----------------------------------------------------------------------

def create_peg(sit: Situation, expectations=(), role=None, definite=False) -> Peg:
    cur = sit.indexical("current-np-referent")
    old = sit.peg(cur) if cur else None
    if old is not None and not old.head_resolved:
        sit.emit("peg-dangling", old.id)
    peg = Peg(sit.next_id("peg"), expectations=list(expectations), role=role,
              definite=definite)
    sit.pegs.append(peg)
    sit.emit("peg-created", peg.id, mutation=True)
    update_indexicals(sit, "np-start", peg=peg.id)
    return peg


def resolve_head(sit: Situation, peg: Peg, head_packet, plural=False,
                 referent: Optional[str] = None, span=None) -> Individual:
    """Replace ``peg`` by an individual and transfer what it accumulated."""
    if peg.head_resolved:
        raise SituateError(f"{peg.id} already resolved")
    onto = sit.kb.ontology
    if referent is None:
        composite = head_packet.plural_composite if plural and head_packet.plural_composite \
            else head_packet.composite
        if composite is None:
            raise SituateError(f"{head_packet.sense_id} introduces no individual")
        name = None
        for item in head_packet.items("introduce-individual"):
            name = item.name
        if name and name in sit.individuals:
            ind = sit.individuals[name]
        else:
            ind = new_individual(sit, composite, head_packet.prefix(plural),
                                 name, _text_source(sit, span))
    else:
        ind = sit.individuals[referent]
    for vid, _cat in peg.expectations:
        if vid not in ind.latent:
            raise RestrictionError(
                f"{vid} does not apply to {ind.id} ({ind.composite})", span)
    for vid, value, source in peg.predications:
        if vid not in ind.latent:
            raise RestrictionError(f"{vid} does not apply to {ind.id} ({ind.composite})", span)
        if isinstance(value, Collection) and value.type is None:
            restr = ind.latent[vid].restriction
            current = ind.value(vid)
            etype = current.type if isinstance(current, Collection) and current.type \
                else restr.element_category
            value = Collection(etype, value.count, value.members)
        bind_variable(sit, ind.id, vid, value, source)
        peg.transferred.append((vid, value, source))
    peg.head_resolved = True
    peg.individual = ind.id
    ind.mentioned = sit.tick()
    sit.emit("peg-resolved", ind.id, mutation=True)
    update_indexicals(sit, "head-resolved", referent=ind.id)
    introduce_packet(sit, head_packet, ind, span)
    return ind


# -- binding -------------------------------------------------------------------

def _matching_procedures(sit, ind, vid, value, phase):
    out = []
    for pid in sit.active_procedures:
        proc = sit.kb.procedure(pid)
        if proc.phase != phase:
            continue
        if proc.matches(sit, ind, vid, value):
            out.append(proc)
    return out


def bind_variable(sit: Situation, ind_id: str, vid: str, value, source="text") -> Situation:
    """Bind a latent variable, coercing first if needed, then fire procedures."""
    from .inference import apply_value_coercion, fire_attached_procedure, refresh_event_frames
    onto = sit.kb.ontology
    ind = sit.individuals.get(ind_id)
    if ind is None:
        raise SituateError(f"{ind_id!r} is not in the situation")
    entry = ind.latent.get(vid)
    if entry is None:
        raise RestrictionError(f"{vid} is not a variable of {ind_id} ({ind.composite})")
    current = ind.bindings.get(vid)
    if current is not None and current.value == value:
        return sit
    if not onto.satisfies(value, entry.restriction, sit.type_of):
        for proc in _matching_procedures(sit, ind, vid, value, "pre"):
            coerced = apply_value_coercion(sit, proc, ind, vid, value)
            if coerced is not None:
                value = coerced
                break
        if not onto.satisfies(value, entry.restriction, sit.type_of):
            raise RestrictionError(
                f"{ind_id}.{vid} = {value_str(value)} violates {entry.restriction}")
        if current is not None and current.value == value:
            return sit
    category = onto.value_category(value, sit.type_of)
    narrowed = category if category and category != entry.restriction.value_category else None
    ind.bindings[vid] = Binding(value, source, narrowed)
    sit._binding_seq += 1
    bid = sit._binding_seq
    matched = _matching_procedures(sit, ind, vid, value, "post")
    note = f"binding={bid}"
    if matched:
        note += " procs=" + ",".join(p.id for p in matched)
    sit.emit("bind", f"{ind_id}.{vid}={value_str(value)}", source,
             mutation=True, binding=bid, note=note)
    if matched:
        limit = sit.kb.depth_limit
        if sit._depth >= limit:
            raise InferenceLimit(f"procedure depth limit {limit} exceeded at {ind_id}.{vid}")
        sit._depth += 1
        try:
            for proc in matched:
                fire_attached_procedure(sit, proc, (bid, ind_id, vid, value))
        finally:
            sit._depth -= 1
    if ind.verb is not None:
        refresh_event_frames(sit, ind)
    return sit


# -- habitats ------------------------------------------------------------------

def instantiate_habitat(sit: Situation, habitat_name: str, quale: str,
                        seed_bindings=None, anchor: Optional[str] = None) -> HabitatInstance:
    """Add a habitat with ``quale`` in focus; its roles stay latent unless seeded."""
    habitat = sit.kb.habitats.get(habitat_name)
    if habitat is None:
        raise SituateError(f"unknown habitat {habitat_name!r}")
    if quale not in habitat.qualia:
        quale = habitat.default_focus
    if anchor is None:
        anchor = new_individual(sit, habitat.anchor_composite,
                                habitat.anchor_prefix, source="habitat").id
    existing = sit.habitat_of(anchor)
    if existing is not None and existing.habitat == habitat_name:
        refocus_habitat(sit, existing, quale)
        return existing
    inst = HabitatInstance(sit.next_id(f"{habitat_name}-habitat"), habitat_name, quale, anchor)
    sit.habitats.append(inst)
    sit.emit("habitat", inst.id, habitat_name, quale, mutation=True)
    for role, value in sorted((seed_bindings or {}).items()):
        if role not in habitat.roles:
            raise SituateError(f"habitat {habitat_name!r} has no role {role!r}")
        bind_variable(sit, anchor, habitat.roles[role].variable, value, "seed")
    for vid, value in habitat.defaults:
        ind = sit.individuals[anchor]
        if vid in ind.latent and vid not in ind.bindings:
            bind_variable(sit, anchor, vid, value, "default")
    for pid in habitat.procedures:
        sit.activate_procedure(pid)
    return inst


def refocus_habitat(sit: Situation, inst: HabitatInstance, quale: str):
    habitat = sit.kb.habitats[inst.habitat]
    if quale in habitat.qualia and quale != inst.focus:
        inst.focus = quale
        sit.emit("habitat-focus", inst.id, quale, mutation=True)


# -- discourse management -------------------------------------------------------

def speaker_shift(sit: Situation, new_speaker: Optional[str]) -> Situation:
    """Archive the active situation into the passive store."""
    sit.speaker = new_speaker
    if sit.is_empty():
        return sit
    stamp = sit.tick()
    n = len(sit.individuals)
    for ident, ind in sit.individuals.items():
        sit.passive.individuals[ident] = ind
        sit.passive.archived_at[ident] = stamp
    sit.passive.habitats.extend(sit.habitats)
    sit.passive.predications.extend(sit.predications)
    sit.individuals = {}
    sit.habitats = []
    sit.predications = []
    sit.pegs = []
    sit.salience = {}
    sit.active_procedures = [p.id for p in sit.kb.procedures if p.is_global]
    for iv in sit.indexicals.values():
        iv.binding = None
    sit.emit("archive", f"{n} individuals", mutation=True)
    return sit


@dataclass
class Mention:
    composite: str
    predications: Tuple[Tuple[str, object], ...] = ()
    prefix: Optional[str] = None
    name: Optional[str] = None


def find_passive(sit: Situation, mention: Mention) -> Optional[str]:
    if mention.name:
        return mention.name if mention.name in sit.passive.individuals else None
    hits = []
    for ident, ind in sit.passive.individuals.items():
        if ind.composite != mention.composite:
            continue
        if all(_agrees(ind.value(vid), value) for vid, value in mention.predications):
            hits.append(ident)
    if not hits:
        return None
    hits.sort(key=lambda i: (sit.passive.archived_at.get(i, 0),
                             sit.passive.individuals[i].mentioned, i), reverse=True)
    if len(hits) > 1:
        top = hits[0]
        tied = [h for h in hits if sit.passive.archived_at.get(h, 0) ==
                sit.passive.archived_at.get(top, 0)]
        if len(tied) > 1:
            sit.emit("reactivate-tie", *sorted(tied))
    return hits[0]


def _agrees(stored, mentioned) -> bool:
    if stored is None:
        return False
    if isinstance(mentioned, Collection) and isinstance(stored, Collection):
        return (mentioned.type is None or mentioned.type == stored.type) and \
            stored.count.within(mentioned.count)
    return stored == mentioned


def reactivate(sit: Situation, mention: Mention) -> Individual:
    """Restore a matching archived individual, or create a fresh one."""
    ident = find_passive(sit, mention)
    if ident is not None:
        ind = sit.passive.individuals.pop(ident)
        sit.passive.archived_at.pop(ident, None)
        ind.mentioned = sit.tick()
        sit.individuals[ident] = ind
        sit.emit("reactivated", ident, mutation=True)
        update_indexicals(sit, "reactivated", referent=ident)
        return ind
    ind = new_individual(sit, mention.composite, mention.prefix, mention.name)
    update_indexicals(sit, "fresh", referent=ind.id)
    return ind


def update_indexicals(sit: Situation, occasion: str, **values) -> Situation:
    """Rebind indexicals according to the KB's declarative policy table."""
    policies = sit.kb.policies.get("indexical_policies", DEFAULT_POLICIES)
    for name, source in policies.get(occasion, ()):
        if source is None:
            sit.set_indexical(name, None, occasion)
        elif source == "designated":
            ref = values.get("referent")
            if ref and _designated(sit, ref):
                sit.set_indexical(name, ref, occasion)
        elif source in values:
            if values[source] is not None:
                sit.set_indexical(name, values[source], occasion)
    return sit


def _designated(sit, ident) -> bool:
    ind = sit.individuals.get(ident)
    if ind is None:
        return False
    for d in sit.kb.policies.get("theme_designations", ()):
        if ind.value(d["variable"]) == value_from_json(d["value"]):
            return True
    return False


# -- serialization --------------------------------------------------------------

def _ind_json(ind: Individual):
    bindings = {}
    for vid in sorted(ind.bindings):
        b = ind.bindings[vid]
        doc = {"value": value_to_json(b.value), "source": b.source}
        if b.category:
            doc["category"] = b.category
        bindings[vid] = doc
    return {"composite": ind.composite, "bindings": bindings,
            "latent": len(ind.latent)}


def situation_document(sit: Situation) -> dict:
    return {
        "individuals": {i: _ind_json(sit.individuals[i]) for i in sorted(sit.individuals)},
        "predications": [p.to_json() for p in sit.predications],
        "habitats": [h.to_json() for h in sit.habitats],
        "indexicals": {n: sit.indexicals[n].binding for n in sorted(sit.indexicals)},
        "pegs": [p.id for p in sit.pegs if not p.head_resolved],
        "salience": {i: sorted(m) for i, m in sorted(sit.salience.items())},
        "passive": {
            "individuals": {i: _ind_json(sit.passive.individuals[i])
                            for i in sorted(sit.passive.individuals)},
            "habitats": [h.to_json() for h in sit.passive.habitats],
            "predications": [p.to_json() for p in sit.passive.predications],
        },
    }


def dump_situation(sit: Situation) -> str:
    """Canonical JSON; identical situations give byte-identical output."""
    return json.dumps(situation_document(sit), sort_keys=True, indent=2,
                      ensure_ascii=False) + "\n"


def load_history(sit: Situation, doc: dict) -> Situation:
    """Seed the passive store from a discourse-history document."""
    onto = sit.kb.ontology
    for item in doc.get("passive", {}).get("individuals", ()):
        if not onto.instantiable(item["composite"]):
            raise SituateError(f"history: unknown composite {item['composite']!r}")
        ind = Individual(item["id"], item["composite"], onto.table_for(item["composite"]),
                         mentioned=sit.tick())
        for vid, raw in sorted(item.get("bindings", {}).items()):
            if vid not in ind.latent:
                raise SituateError(f"history: {vid} not a variable of {ind.id}")
            ind.bindings[vid] = Binding(value_from_json(raw), "history")
        sit.passive.individuals[ind.id] = ind
        sit.passive.archived_at[ind.id] = 0
        sit.note_id(ind.id)
    for ident, ind in sit.passive.individuals.items():
        for vid, b in ind.bindings.items():
            if not onto.satisfies(b.value, ind.latent[vid].restriction, sit.type_of):
                raise SituateError(f"history: {ident}.{vid} violates its restriction")
    sit.speaker = doc.get("last_speaker")
    if doc.get("last_time"):
        from .parser import parse_clock
        sit.last_time = parse_clock(doc["last_time"])
    return sit


def sweep_bindings(sit: Situation) -> List[str]:
    """Every non-Unknown binding must satisfy its effective restriction."""
    bad = []
    onto = sit.kb.ontology
    for ident, ind in sit.individuals.items():
        for vid, b in ind.bindings.items():
            if not onto.satisfies(b.value, ind.latent[vid].restriction, sit.type_of):
                bad.append(f"{ident}.{vid}")
    return bad
