"""Habitats, process operators, transitions and one-step gap filling.

Inference here is deliberately shallow: a binding event may fire the
attached procedures that match it, an operator may rewrite a script's state,
and an Unknown slot may be filled by a single salience-ranked search over the
current minimal model. Nothing chains beyond the per-binding depth limit.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Tuple

from .errors import (EventClassError, KBError, RestrictionError, SituateError,
                     UnresolvedReference)
from .situation import (HabitatInstance, Predication, Situation, bind_variable,
                        introduce_packet, new_individual, refocus_habitat,
                        update_indexicals)
from .values import (Collection, Const, CountInterval, Number, Ref, Restriction,
                     Unknown, value_from_json, value_str)

SALIENCE_TIERS = ("theme", "operator-affected", "new", "given")
ACTION_KINDS = ("coerce", "adjust-count", "search-referent", "assert")


# -- declarations --------------------------------------------------------------

@dataclass(frozen=True)
class Role:
    name: str
    variable: str
    composite: Optional[str] = None
    id_prefix: Optional[str] = None


@dataclass(frozen=True)
class OperatorEffect:
    affects: Tuple[str, ...] = ()
    unaffected: Tuple[str, ...] = ()


@dataclass
class Habitat:
    name: str
    anchor_composite: str
    event_class: str
    roles: Dict[str, Role]
    qualia: Dict[str, Tuple[str, ...]]
    script: List[dict]
    defaults: List[Tuple[str, object]] = field(default_factory=list)
    operators: Dict[str, OperatorEffect] = field(default_factory=dict)
    scheduled: bool = False
    default_focus: str = "formal"
    anchor_prefix: Optional[str] = None
    procedures: Tuple[str, ...] = ()

    def before_state(self) -> List[dict]:
        return list(self.script[0].get("before", ())) if self.script else []


@dataclass(frozen=True)
class ProcessOperator:
    name: str
    applicability: str
    status_variable: str
    status_value: object
    focus: Optional[str] = None


@dataclass(frozen=True)
class CoercionRecipe:
    id: str
    source: str
    target: str
    variable: Optional[str] = None
    allowed_from: Tuple[object, ...] = ()
    to: object = None
    create: Optional[dict] = None

    @property
    def replaces_value(self) -> bool:
        return self.create is not None


@dataclass
class AttachedProcedure:
    id: str
    category: str
    variable: str
    condition: dict
    action: dict
    is_global: bool = False
    phase: str = "post"

    def matches(self, sit: Situation, ind, vid, value) -> bool:
        onto = sit.kb.ontology
        if vid != self.variable or not onto.is_a(ind.composite, self.category):
            return False
        return condition_holds(sit, self.condition, value)


def condition_holds(sit: Situation, cond: Mapping, value) -> bool:
    """Placeholders only trigger procedures that ask for them explicitly."""
    onto = sit.kb.ontology
    if isinstance(value, Unknown) and not cond.get("value_unknown", False):
        return False
    cat = onto.value_category(value, sit.type_of)
    if "value_is_a" in cond and not (cat and onto.is_a(cat, cond["value_is_a"])):
        return False
    if "value_not_a" in cond and cat and onto.is_a(cat, cond["value_not_a"]):
        return False
    return True


# -- attached procedures ----------------------------------------------------------

def _target(sit, proc, ind_id, value) -> str:
    which = proc.action.get("target", "value")
    if which == "subject":
        return ind_id
    if not isinstance(value, Ref):
        raise RestrictionError(f"{proc.id}: bound value {value_str(value)} is not an individual")
    if value.id not in sit.individuals:
        raise SituateError(f"{proc.id}: {value.id} is not in the situation")
    return value.id


def count_of(sit: Situation, value) -> int:
    """How many members ``value`` stands for (1 for a single individual)."""
    var = sit.kb.lexicon.number_variable
    if isinstance(value, Collection):
        coll = value
    elif isinstance(value, Ref):
        ind = sit.individuals.get(value.id) or sit.passive.individuals.get(value.id)
        coll = ind.value(var) if ind is not None and var else None
        if not isinstance(coll, Collection):
            return 1
    else:
        return 1
    if coll.count.exact is not None:
        return coll.count.exact
    return coll.count.lower


def apply_value_coercion(sit: Situation, proc: AttachedProcedure, ind, vid, value):
    """Pre-binding coercion: replace ``value`` using a whitelisted recipe."""
    recipe = sit.kb.coercions[proc.action["recipe"]]
    if not isinstance(value, Ref) or not sit.is_a(value.id, recipe.source):
        return None
    spec = recipe.create
    link = spec.get("search_variable")
    for ident in sorted(sit.individuals):
        cand = sit.individuals[ident]
        if sit.kb.ontology.is_a(cand.composite, recipe.target) and link and \
                cand.value(link) == value:
            sit.emit("proc-fired", "coerce", ident, mutation=True, note=f"proc={proc.id}")
            return Ref(ident)
    name = spec["name"].format(value=value.id) if spec.get("name") else None
    created = new_individual(sit, spec["composite"], spec.get("id_prefix"), name,
                             f"inference:{proc.id}")
    sit.emit("proc-fired", "coerce", created.id, mutation=True, note=f"proc={proc.id}")
    for var, raw in sorted(spec.get("bind", {}).items()):
        v = value if raw == "$value" else value_from_json(raw)
        bind_variable(sit, created.id, var, v, f"inference:{proc.id}")
    return Ref(created.id)


def fire_attached_procedure(sit: Situation, proc: AttachedProcedure, binding_event) -> Situation:
    """Run one procedure's action for a binding event ``(id, individual, variable, value)``."""
    bid, ind_id, vid, value = binding_event
    ind = sit.individuals[ind_id]
    if not proc.matches(sit, ind, vid, value):
        return sit
    action = proc.action
    kind = action["kind"]
    source = f"inference:{proc.id}"
    note = f"proc={proc.id} binding={bid}"
    if kind == "coerce":
        recipe = sit.kb.coercions[action["recipe"]]
        target = _target(sit, proc, ind_id, value)
        if not sit.is_a(target, recipe.source):
            raise RestrictionError(f"{proc.id}: {target} is not a {recipe.source}")
        current = sit.individuals[target].value(recipe.variable)
        if current != recipe.to and not _coercible(current, recipe):
            raise RestrictionError(
                f"{proc.id}: cannot coerce {target}.{recipe.variable} from {value_str(current)}")
        sit.emit("proc-fired", "coerce", value_str(recipe.to),
                 mutation=True, binding=bid, note=note)
        bind_variable(sit, target, recipe.variable, recipe.to, source)
    elif kind == "adjust-count":
        target = _target(sit, proc, ind_id, value)
        var = action["variable"]
        if "delta" in action:
            k = -int(action["delta"])
        else:
            k = count_of(sit, ind.value(action["delta_from"]))
        holder = sit.individuals[target]
        current = holder.value(var)
        if current is None or isinstance(current, Unknown):
            # nothing known yet: start from the latent restriction's interval
            restr = holder.latent[var].restriction if var in holder.latent else None
            if restr is None or not restr.is_collection:
                raise RestrictionError(f"{proc.id}: {target} has no collection variable {var}")
            current = Collection(restr.element_category, restr.count or CountInterval())
        if not isinstance(current, Collection):
            raise RestrictionError(f"{proc.id}: {target}.{var} holds no counted collection")
        if current.count.clamps(k):
            sit.emit("count-clamped", f"{target}.{var}", str(current.count), str(k))
        updated = Collection(current.type, current.count.remove(k), current.members)
        sit.emit("proc-fired", "adjust-count", f"-{k}", mutation=True, binding=bid, note=note)
        bind_variable(sit, target, var, updated, source)
    elif kind == "assert":
        target = _target(sit, proc, ind_id, value)
        v = action["value"]
        v = value if v == "$value" else value_from_json(v)
        sit.emit("proc-fired", "assert", value_str(v), mutation=True, binding=bid, note=note)
        bind_variable(sit, target, action["variable"], v, source)
    elif kind == "search-referent":
        target = _target(sit, proc, ind_id, value)
        restriction = Restriction.from_json(action["restriction"])
        found = most_salient(sit, candidates(sit, restriction, exclude={target, ind_id}))
        sit.emit("proc-fired", "search-referent", found or "?",
                 mutation=found is not None, binding=bid, note=note)
        if found is not None:
            bind_variable(sit, target, action["variable"], Ref(found), source)
    else:
        raise KBError(f"{proc.id}: unknown action {kind!r}")
    return sit


def _coercible(current, recipe: CoercionRecipe) -> bool:
    if current is None or isinstance(current, Unknown):
        return None in recipe.allowed_from
    return current in recipe.allowed_from


# -- salience --------------------------------------------------------------------

def salience_tier(sit: Situation, ident: str) -> int:
    if sit.indexical("theme") == ident:
        return 0
    if "operator-affected" in sit.salience.get(ident, ()):
        return 1
    if sit.indexical("new") == ident:
        return 2
    if sit.indexical("given") == ident:
        return 3
    return len(SALIENCE_TIERS)


def salience_scores(sit: Situation, idents) -> Dict[str, float]:
    """Monotone numeric view of the ordinal policy (higher is more salient)."""
    top = sit._clock + 1
    return {i: float((len(SALIENCE_TIERS) - salience_tier(sit, i)) * top
                     + sit.individuals[i].mentioned) for i in idents}


def pick(scores: Mapping[str, float]) -> Optional[str]:
    """Argmax by ordering only, ties broken by id."""
    if not scores:
        return None
    return sorted(scores, key=lambda i: (-scores[i], i))[0]


def candidates(sit: Situation, restriction: Restriction, exclude=()) -> List[str]:
    onto = sit.kb.ontology
    return sorted(i for i in sit.individuals if i not in exclude
                  and onto.satisfies(Ref(i), restriction, sit.type_of))


def most_salient(sit: Situation, idents) -> Optional[str]:
    idents = list(idents)
    if not idents:
        return None
    winner = pick(salience_scores(sit, idents))
    tier = salience_tier(sit, winner)
    tied = [i for i in idents if salience_tier(sit, i) == tier]
    if len(tied) > 1:
        sit.emit("salience-tie", *tied, f"winner={winner}")
    return winner


def resolve_gap(sit: Situation, slot: Tuple[str, str]):
    """One-step search for an Unknown slot; the slot stays Unknown if nothing fits."""
    ind_id, vid = slot
    ind = sit.individuals[ind_id]
    current = ind.value(vid)
    restriction = current.restriction if isinstance(current, Unknown) \
        else ind.latent[vid].restriction
    exclude = {ind_id}
    for b in ind.bindings.values():
        if isinstance(b.value, Ref):
            exclude.add(b.value.id)
    winner = most_salient(sit, candidates(sit, restriction, exclude))
    short = vid.rsplit(".", 1)[-1]
    if winner is None:
        sit.emit("gap-unresolved", short, note=f"slot={ind_id}.{vid}")
        return current if current is not None else Unknown(restriction)
    sit.emit("gap-resolved", f"{short}={winner}", mutation=True, note=f"slot={ind_id}.{vid}")
    bind_variable(sit, ind_id, vid, Ref(winner), "inference:gap")
    return Ref(winner)


# -- transitions and event frames ------------------------------------------------

def _slot_values(ev) -> Dict[str, object]:
    return {slot: ev.value(vid) for slot, vid in ev.verb.slots.items()}


def _resolve_schema(item, slots):
    subj = item["subject"]
    subj = slots.get(subj[1:]) if subj.startswith("$") else Ref(subj)
    raw = item["value"]
    if isinstance(raw, str) and raw.startswith("$"):
        val = slots.get(raw[1:])
    else:
        val = value_from_json(raw)
    return subj, val


def refresh_event_frames(sit: Situation, ev) -> None:
    """Recompute ``during.before``/``during.after`` predications of an event."""
    slots = _slot_values(ev)
    frames = []
    for frame, schema in (("before", ev.verb.before), ("after", ev.verb.after)):
        for item in schema:
            subj, val = _resolve_schema(item, slots)
            if isinstance(subj, Ref) and val is not None:
                frames.append(Predication(subj.id, item["variable"], val,
                                          f"event:{ev.id}", frame, ev.id))
    old = [p for p in sit.predications if p.event == ev.id]
    if [p.to_json() for p in old] != [p.to_json() for p in frames]:
        sit.predications = [p for p in sit.predications if p.event != ev.id] + frames
        for p in frames:
            if p not in old:
                sit.emit("frame", f"during.{p.frame}({ev.id})",
                         f"{p.subject}.{p.variable}={value_str(p.value)}", mutation=True)
    aspect_var = ev.verb.aspect_variable
    if aspect_var and ev.value(aspect_var) == Const("completed"):
        for p in frames:
            if p.frame == "after" and not isinstance(p.value, Unknown) and \
                    p.subject in sit.individuals and \
                    sit.individuals[p.subject].value(p.variable) != p.value:
                bind_variable(sit, p.subject, p.variable, p.value, f"inference:{ev.id}")


def apply_transition(sit: Situation, verb_packet, subject: str, complements=None,
                     aspect: Optional[str] = None):
    """Create the event for a transition verb and fill its movement slots."""
    verb = verb_packet.verb
    if verb is None:
        raise SituateError(f"{verb_packet.sense_id} has no verb entry")
    ev = new_individual(sit, verb_packet.composite, verb_packet.prefix())
    introduce_packet(sit, verb_packet, ev)
    if verb.aspect_variable and aspect:
        bind_variable(sit, ev.id, verb.aspect_variable, Const(aspect), "text")
    ev.verb = verb
    if verb.subject_slot:
        bind_variable(sit, ev.id, verb.slots[verb.subject_slot], Ref(subject), "text")
    for slot, value in sorted((complements or {}).items()):
        bind_variable(sit, ev.id, verb.slots[slot], value, "text")
    for slot in sorted(verb.slots):
        vid = verb.slots[slot]
        if ev.value(vid) is not None and not isinstance(ev.value(vid), Unknown):
            continue
        entry = ev.latent[vid]
        if entry.default is not None:
            bind_variable(sit, ev.id, vid, entry.default, "default")
        elif ev.value(vid) is None:
            bind_variable(sit, ev.id, vid, Unknown(entry.restriction), "expectation")
    for slot in verb.gap_slots:
        vid = verb.slots[slot]
        if isinstance(ev.value(vid), Unknown):
            resolve_gap(sit, (ev.id, vid))
    refresh_event_frames(sit, ev)
    return ev


# -- process operators ------------------------------------------------------------

def _role_filler(sit, inst: HabitatInstance, habitat: Habitat, role_name: str,
                 source: str, create: bool):
    role = habitat.roles[role_name]
    anchor = sit.individuals[inst.anchor]
    cur = anchor.value(role.variable)
    if isinstance(cur, Ref) or cur is not None and not isinstance(cur, Unknown):
        return cur
    if not create or role.composite is None:
        return cur if cur is not None else Unknown(anchor.latent[role.variable].restriction)
    filler = new_individual(sit, role.composite, role.id_prefix or role_name, source=source)
    bind_variable(sit, inst.anchor, role.variable, Ref(filler.id), source)
    return Ref(filler.id)


def _instance_for(sit: Situation, target) -> Tuple[HabitatInstance, str]:
    if isinstance(target, HabitatInstance):
        return target, target.anchor
    inst = sit.habitat_of(target)
    return inst, target


def apply_process_operator(sit: Situation, op_name: str, target) -> Situation:
    """Suppress the start of a process: its before-state becomes the current state."""
    op = sit.kb.operators.get(op_name)
    if op is None:
        raise SituateError(f"unknown operator {op_name!r}")
    inst, anchor_id = _instance_for(sit, target)
    if anchor_id not in sit.individuals or not sit.is_a(anchor_id, op.applicability):
        raise EventClassError(f"{op_name} applies to {op.applicability} events; "
                              f"{anchor_id} is {sit.type_of(anchor_id)}")
    if inst is None:
        raise EventClassError(f"{anchor_id} has no process habitat for {op_name}")
    habitat = sit.kb.habitats[inst.habitat]
    if habitat.event_class != "process":
        raise EventClassError(f"habitat {habitat.name} is a {habitat.event_class}, not a process")
    if inst.status == "not-started":
        return sit
    source = f"inference:{op_name}"
    inst.status = "not-started"
    sit.emit("operator", op_name, inst.id, mutation=True)
    bind_variable(sit, anchor_id, op.status_variable, op.status_value, source)
    if op.focus:
        refocus_habitat(sit, inst, op.focus)
    effect = habitat.operators.get(op_name, OperatorEffect())
    for item in habitat.before_state():
        subj_role = item["subject"][1:]
        subj = _role_filler(sit, inst, habitat, subj_role, source, create=True)
        raw = item["value"]
        if isinstance(raw, str) and raw.startswith("$"):
            val = _role_filler(sit, inst, habitat, raw[1:], source, create=False)
        else:
            val = value_from_json(raw)
        if isinstance(subj, Ref):
            bind_variable(sit, subj.id, item["variable"], val, source)
            if subj_role in effect.affects:
                sit.mark_salient(subj.id, "operator-affected")
                if isinstance(val, Ref) and val.id in sit.individuals:
                    sit.mark_salient(val.id, "operator-affected")
    return sit


def unaffected_fillers(sit: Situation, event_id: Optional[str]) -> set:
    """Role fillers that the operator behind ``event_id`` declares untouched."""
    out = set()
    if event_id is None or event_id not in sit.individuals:
        return out
    ev = sit.individuals[event_id]
    target_var = sit.kb.policies.get("operator_target")
    target = ev.value(target_var) if target_var else None
    op_name = sit.kb.policies.get("operator_of", {}).get(ev.composite)
    if not isinstance(target, Ref) or op_name is None:
        return out
    inst = sit.habitat_of(target.id)
    if inst is None:
        return out
    habitat = sit.kb.habitats[inst.habitat]
    anchor = sit.individuals[inst.anchor]
    for role_name in habitat.operators.get(op_name, OperatorEffect()).unaffected:
        v = anchor.value(habitat.roles[role_name].variable)
        if isinstance(v, Ref):
            out.add(v.id)
    return out


# -- definite reference -----------------------------------------------------------

@dataclass
class Description:
    category: str
    plural: bool = False
    approximate_count: Optional[int] = None
    predications: Tuple[Tuple[str, object], ...] = ()
    cause: Optional[str] = None
    prefix: Optional[str] = None


def resolve_definite_reference(sit: Situation, desc: Description):
    """Find the referent of a definite description by salience.

    With a causing event, only individuals made salient by it qualify and
    roles it leaves untouched are excluded. A plural description whose top
    tier holds several individuals refers to all of them as one collection.
    """
    onto = sit.kb.ontology
    excluded = unaffected_fillers(sit, desc.cause)
    cands = []
    for ident in sorted(sit.individuals):
        ind = sit.individuals[ident]
        if ident in excluded or not onto.is_a(ind.composite, desc.category):
            continue
        if desc.cause and "operator-affected" not in sit.salience.get(ident, ()):
            continue
        if all(ind.value(v) == val for v, val in desc.predications):
            cands.append(ident)
    if not cands:
        if sit.strict:
            raise UnresolvedReference(f"no referent for the {desc.category}")
        sit.emit("reference-unresolved", desc.category)
        return None
    winner = most_salient(sit, cands)
    tier = salience_tier(sit, winner)
    top = [i for i in cands if salience_tier(sit, i) == tier]
    groupable = sit.kb.lexicon.number_variable in onto.table_for(desc.category) \
        if onto.instantiable(desc.category) else False
    if desc.plural and len(top) > 1 and groupable:
        winner = _aggregate(sit, desc, top).id
    else:
        sit.individuals[winner].mentioned = sit.tick()
    sit.emit("referent-resolved", desc.category, winner, mutation=True)
    if desc.approximate_count is not None and sit.kb.lexicon.approximate_variable:
        bind_variable(sit, winner, sit.kb.lexicon.approximate_variable,
                      Number(desc.approximate_count), "text")
    return sit.individuals[winner]


def _aggregate(sit: Situation, desc: Description, members: List[str]):
    var = sit.kb.lexicon.number_variable
    agg = new_individual(sit, desc.category, desc.prefix, source="inference:reference")
    restr = agg.latent[var].restriction
    counts = []
    for m in members:
        v = sit.individuals[m].value(var)
        counts.append(v.count.exact if isinstance(v, Collection) else None)
    count = CountInterval(sum(counts), sum(counts)) if None not in counts else CountInterval()
    bind_variable(sit, agg.id, var,
                  Collection(restr.element_category, count, tuple(sorted(members))),
                  "inference:reference")
    if "operator-affected" in sit.salience.get(members[0], ()):
        sit.mark_salient(agg.id, "operator-affected")
    return agg


def apply_result_adjunct(sit: Situation, main_event: str, state_packet,
                         subject: Optional[str] = None,
                         description: Optional[Description] = None):
    """State brought about by ``main_event`` (``leaving X stranded``)."""
    verb = state_packet.verb
    if subject is None:
        if description is None:
            raise SituateError("result adjunct needs a subject or a description")
        description.cause = description.cause or main_event
        found = resolve_definite_reference(sit, description)
        if found is None:
            return None
        subject = found.id
    state = new_individual(sit, state_packet.composite, state_packet.prefix())
    introduce_packet(sit, state_packet, state)
    bind_variable(sit, state.id, verb.slots[verb.subject_slot], Ref(subject), "text")
    bind_variable(sit, state.id, verb.slots["cause"], Ref(main_event), "inference:result-adjunct")
    sit.emit("caused", main_event, state.id, mutation=True)
    return state
