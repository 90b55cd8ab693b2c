"""Word senses as packets of content and inference.

A packet is what one sense of a word contributes when it is scanned:
individuals to introduce, predications, habitat references, procedures to
attach, and the grammar projection that decides how it composes.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Tuple

from .errors import KBError
from .values import Collection, CountInterval, Number, value_from_json

PROJECTIONS = ("determiner", "quantifier", "premodifier", "head-noun", "verb",
               "preposition", "proper-name", "state-predicate")
VERB_FAMILIES = ("auxiliary", "transition", "process-operator", "result-adjunct")
EVENT_CLASSES = ("state", "process", "transition")
QUALIA_ROLES = ("formal", "constitutive", "telic", "agentive")
PAYLOAD_KINDS = ("introduce-individual", "introduce-predication",
                 "reference-habitat", "attach-procedure")

DEFAULT_SUFFIXES = (
    ("ies", "y", "plural"), ("s", "", "plural"),
    ("ing", "", "progressive"), ("ing", "e", "progressive"),
    ("ed", "", "past"), ("ed", "e", "past"), ("d", "", "past"),
)


@dataclass(frozen=True)
class PayloadItem:
    kind: str
    composite: Optional[str] = None
    name: Optional[str] = None
    variable: Optional[str] = None
    value: object = None
    habitat: Optional[str] = None
    procedure: Optional[str] = None


@dataclass(frozen=True)
class QualiaStructure:
    formal: tuple = ()
    constitutive: tuple = ()
    telic: tuple = ()
    agentive: tuple = ()

    def role(self, name):
        return getattr(self, name)


@dataclass(frozen=True)
class VerbEntry:
    event_class: str
    slots: Mapping[str, str] = field(default_factory=dict)
    subject_slot: Optional[str] = None
    object_slot: Optional[str] = None
    gap_slots: Tuple[str, ...] = ()
    before: tuple = ()
    after: tuple = ()
    operator: Optional[str] = None
    aspect_variable: Optional[str] = None


@dataclass(frozen=True)
class Packet:
    sense_id: str
    trigger: str
    projection: str
    payload: Tuple[PayloadItem, ...] = ()
    family: Optional[str] = None
    attachments: Mapping[str, str] = field(default_factory=dict)
    subject_category: Optional[str] = None
    verb: Optional[VerbEntry] = None
    qualia: Optional[QualiaStructure] = None
    default_qualia: str = "formal"
    plural_composite: Optional[str] = None
    plural_form: Optional[str] = None
    id_prefix: Optional[str] = None
    definite: bool = False
    approximate: bool = False

    @property
    def symbol(self) -> str:
        """One-letter grammar category used by the pattern grammar."""
        if self.projection == "verb":
            return {"auxiliary": "A", "result-adjunct": "R"}.get(self.family, "V")
        return {"determiner": "D", "quantifier": "Q", "premodifier": "M",
                "head-noun": "H", "proper-name": "N", "preposition": "P",
                "state-predicate": "S"}[self.projection]

    @property
    def composite(self) -> Optional[str]:
        for item in self.payload:
            if item.kind == "introduce-individual":
                return item.composite
        return None

    @property
    def function_word(self) -> bool:
        return (self.projection in ("determiner", "preposition")
                or self.family in ("auxiliary", "result-adjunct")
                or (self.projection == "quantifier" and self.approximate))

    def prefix(self, plural: bool = False) -> str:
        """Id prefix for individuals this sense introduces."""
        if plural and self.plural_composite:
            return self.plural_form or self.plural_composite
        return self.id_prefix or self.trigger

    def items(self, kind):
        return [i for i in self.payload if i.kind == kind]


class Lexicon:
    """Trigger index over packets, plus morphology and the qualia-demand table."""

    def __init__(self, ontology, habitats=(), procedures=(), suffixes=DEFAULT_SUFFIXES,
                 irregular: Optional[Mapping[str, Tuple[str, Tuple[str, ...]]]] = None,
                 qualia_demands=(), number_variable: Optional[str] = None,
                 approximate_variable: Optional[str] = None,
                 number_words: Optional[Mapping[str, int]] = None):
        self.ontology = ontology
        self.habitats = set(habitats)
        self.procedures = set(procedures)
        self.suffixes = tuple(suffixes)
        self.irregular = dict(irregular or {})
        self.qualia_demands = list(qualia_demands)
        self.number_variable = number_variable
        self.approximate_variable = approximate_variable
        self.number_words = dict(number_words or {})
        self.by_trigger: Dict[str, List[Packet]] = {}
        self.by_sense: Dict[str, Packet] = {}
        self.multiword: Dict[str, List[Tuple[str, ...]]] = {}

    # -- definition ---------------------------------------------------------

    def define_packet(self, decl) -> Packet:
        packet = decl if isinstance(decl, Packet) else packet_from_json(decl)
        if packet.sense_id in self.by_sense:
            raise KBError(f"duplicate sense {packet.sense_id!r}")
        if packet.projection not in PROJECTIONS:
            raise KBError(f"{packet.sense_id}: unknown projection {packet.projection!r}")
        if packet.projection == "verb" and packet.family not in VERB_FAMILIES:
            raise KBError(f"{packet.sense_id}: unknown verb family {packet.family!r}")
        if not packet.payload and not packet.function_word:
            raise KBError(f"{packet.sense_id}: vacuous packet (empty payload)")
        onto = self.ontology
        for item in packet.payload:
            if item.kind not in PAYLOAD_KINDS:
                raise KBError(f"{packet.sense_id}: unknown payload kind {item.kind!r}")
            if item.kind == "introduce-individual" and not onto.instantiable(item.composite):
                raise KBError(f"{packet.sense_id}: unknown composite {item.composite!r}")
            if item.kind == "reference-habitat" and item.habitat not in self.habitats:
                raise KBError(f"{packet.sense_id}: unknown habitat {item.habitat!r}")
            if item.kind == "attach-procedure" and item.procedure not in self.procedures:
                raise KBError(f"{packet.sense_id}: unknown procedure {item.procedure!r}")
        if packet.plural_composite and not onto.instantiable(packet.plural_composite):
            raise KBError(f"{packet.sense_id}: unknown composite {packet.plural_composite!r}")
        if packet.subject_category and packet.subject_category not in onto.categories:
            raise KBError(f"{packet.sense_id}: unknown category {packet.subject_category!r}")
        if packet.verb and packet.verb.event_class not in EVENT_CLASSES:
            raise KBError(f"{packet.sense_id}: unknown event class {packet.verb.event_class!r}")
        if packet.default_qualia not in QUALIA_ROLES:
            raise KBError(f"{packet.sense_id}: unknown qualia role {packet.default_qualia!r}")
        self.by_sense[packet.sense_id] = packet
        senses = self.by_trigger.setdefault(packet.trigger, [])
        senses.append(packet)
        senses.sort(key=lambda p: p.sense_id)
        words = tuple(packet.trigger.split())
        if len(words) > 1:
            lst = self.multiword.setdefault(words[0], [])
            if words not in lst:
                lst.append(words)
                lst.sort(key=lambda w: (-len(w), w))
        return packet

    # -- lookup ---------------------------------------------------------------

    def analyze(self, word: str) -> Tuple[List[Packet], Tuple[str, ...]]:
        """Senses for an inflected form together with its morphological features."""
        word = word.lower()
        if word in self.by_trigger:
            return list(self.by_trigger[word]), ()
        if word in self.irregular:
            base, feats = self.irregular[word]
            return list(self.by_trigger.get(base, ())), tuple(feats)
        n = int(word) if re.fullmatch(r"\d+", word) else self.number_words.get(word)
        if n is not None and self.number_variable:
            p = Packet(f"number-{n}", word, "quantifier", (PayloadItem(
                "introduce-predication", variable=self.number_variable,
                value=Collection(None, CountInterval(n, n))),))
            return [p], ("number",)
        for suffix, repl, feat in self.suffixes:
            if word.endswith(suffix) and len(word) > len(suffix) + 1:
                base = word[: -len(suffix)] + repl
                if base in self.by_trigger:
                    return list(self.by_trigger[base]), (feat,)
        return [], ()

    def lookup(self, word: str) -> List[Packet]:
        return self.analyze(word)[0]

    def triggers(self):
        return sorted(self.by_trigger)

    def packets(self):
        return [self.by_sense[s] for s in sorted(self.by_sense)]

    # -- inverse index --------------------------------------------------------

    def introduced_categories(self, packet: Packet) -> List[str]:
        out = []
        for item in packet.payload:
            if item.kind == "introduce-individual":
                out.append(item.composite)
            elif item.kind == "introduce-predication":
                cat = self.ontology.value_category(item.value)
                if cat:
                    out.append(cat)
        if packet.plural_composite:
            out.append(packet.plural_composite)
        return out

    def surface_forms(self, packet: Packet) -> List[str]:
        forms = [packet.trigger]
        if packet.projection == "head-noun":
            plural = packet.plural_form
            if plural is None:
                plural = packet.trigger[:-1] + "ies" if packet.trigger.endswith("y") \
                    else packet.trigger + "s"
            if plural != packet.trigger and self.lookup(plural) and \
                    packet in self.lookup(plural):
                forms.append(plural)
        return forms

    def realizations_of(self, category: str) -> List[str]:
        if category not in self.ontology.categories:
            raise KBError(f"unknown category {category!r}")
        found = set()
        for packet in self.by_sense.values():
            if category in self.introduced_categories(packet):
                found.update(self.surface_forms(packet))
        return sorted(found)

    # -- qualia -------------------------------------------------------------

    def select_qualia_role(self, packet: Packet, context: Optional[Mapping] = None) -> str:
        """Pick the quale demanded by the surrounding composition.

        The first demand-table row whose keys all match ``context`` wins; a
        neutral context falls back to the packet's declared default.
        """
        context = context or {}
        for row in self.qualia_demands:
            keys = [k for k in row if k != "role"]
            if keys and all(context.get(k) == row[k] for k in keys):
                return row["role"]
        return packet.default_qualia


def _payload_from_json(item) -> PayloadItem:
    kind = item.get("kind")
    value = item.get("value")
    if value is not None:
        value = value_from_json(value)
    return PayloadItem(kind, item.get("composite"), item.get("name"),
                       item.get("variable"), value, item.get("habitat"),
                       item.get("procedure"))


def packet_from_json(decl: Mapping, trigger: Optional[str] = None) -> Packet:
    try:
        verb = None
        if "verb" in decl:
            v = decl["verb"]
            verb = VerbEntry(
                v.get("event_class", "transition"), dict(v.get("slots", {})),
                v.get("subject_slot"), v.get("object_slot"),
                tuple(v.get("gap_slots", ())), tuple(v.get("before", ())),
                tuple(v.get("after", ())), v.get("operator"), v.get("aspect_variable"))
        qualia = None
        if "qualia" in decl:
            q = decl["qualia"]
            qualia = QualiaStructure(*(tuple(q.get(r, ())) for r in QUALIA_ROLES))
        return Packet(
            sense_id=decl["sense"],
            trigger=(trigger or decl["trigger"]).lower(),
            projection=decl["projection"],
            payload=tuple(_payload_from_json(i) for i in decl.get("payload", ())),
            family=decl.get("family"),
            attachments=dict(decl.get("attachments", {})),
            subject_category=decl.get("subject_category"),
            verb=verb,
            qualia=qualia,
            default_qualia=decl.get("default_qualia", "formal"),
            plural_composite=decl.get("plural_composite"),
            plural_form=decl.get("plural_form"),
            id_prefix=decl.get("id_prefix"),
            definite=bool(decl.get("definite", False)),
            approximate=bool(decl.get("approximate", False)),
        )
    except KeyError as exc:
        raise KBError(f"packet missing field {exc}") from None
