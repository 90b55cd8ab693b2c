"""Word-by-word interpretation of transcript lines into a situation.

A token's packet enters the situation as soon as every live analysis agrees
on its sense. For unambiguous words that is the moment they are scanned;
an ambiguous word waits for the first later word that settles it.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from .errors import ParseError, SituateError, UnresolvedPeg, UnresolvedReference
from .inference import (Description, apply_process_operator, apply_result_adjunct,
                        apply_transition, resolve_definite_reference)
from .parser import SenseChart, head_composite, parse_clock, parse_transcript_line, \
    token_role, tokenize
from .situation import (Mention, Situation, bind_variable, create_peg, find_passive,
                        introduce_packet, load_history, new_individual, reactivate,
                        refocus_habitat, resolve_head, speaker_shift, update_indexicals)
from .values import Ref, Text

DEFAULT_SHIFT_GAP = 5


@dataclass
class NounPhrase:
    peg: object
    role: str
    indefinite: bool = False


@dataclass
class LineState:
    number: Optional[int]
    tokens: list
    chart: SenseChart
    timestamp: Optional[str] = None
    positions: List[int] = field(default_factory=list)  # chart position -> token index
    done: int = 0
    np: Optional[NounPhrase] = None
    pegs: List[str] = field(default_factory=list)
    subject: Optional[str] = None
    subject_packet: object = None
    event: Optional[str] = None
    adjunct_subject: Optional[str] = None
    anchors: List[Tuple[str, object]] = field(default_factory=list)
    pending_pp: Optional[Tuple[str, str]] = None
    dead: bool = False


class Session:
    """One interpretation session over a stream of lines."""

    def __init__(self, kb, strict: bool = True, shift_gap: int = DEFAULT_SHIFT_GAP,
                 history: Optional[dict] = None):
        self.kb = kb
        self.sit = Situation(kb, strict)
        self.strict = strict
        self.shift_gap = shift_gap
        if history:
            load_history(self.sit, history)
        self.line: Optional[LineState] = None
        self.line_count = 0

    # -- lines --------------------------------------------------------------

    def feed(self, text: str, mode: str = "transcript", number: Optional[int] = None):
        self.line_count += 1
        number = self.line_count if number is None else number
        if not text.strip():
            return self.sit
        timestamp = None
        if mode == "transcript":
            parsed = parse_transcript_line(text)
            if parsed is None:
                self._fail(ParseError(f"line {number}: not a '[HH:MM] <speaker> text' line"),
                           number)
                return self.sit
            timestamp, speaker, text = parsed
            self.sit.cursor = (number, None)
            self._maybe_shift(speaker, parse_clock(timestamp))
        tokens = tokenize(text, self.kb.lexicon, number)
        self.begin_line(tokens, number, timestamp)
        for tok in tokens:
            self.scan(tok)
            if self.line.dead:
                break
        return self.end_of_line()

    def _maybe_shift(self, speaker: str, minute: int):
        sit = self.sit
        shift = False
        if sit.speaker is not None and speaker != sit.speaker:
            shift = True
        elif sit.last_time is not None and self.shift_gap > 0:
            gap = (minute - sit.last_time) % (24 * 60)
            shift = gap >= self.shift_gap
        if shift:
            speaker_shift(sit, speaker)
        sit.speaker = speaker
        sit.last_time = minute

    def begin_line(self, tokens, number=None, timestamp=None):
        self.line = LineState(number, list(tokens), SenseChart(self.kb), timestamp)

    # -- scanning -------------------------------------------------------------

    def scan(self, token):
        line = self.line
        sit = self.sit
        index = line.tokens.index(token)
        sit.cursor = (line.number, index)
        sit.emit("scan", token.normalized)
        packets, feats = self.kb.lexicon.analyze(token.normalized)
        if not packets:
            err = ParseError(f"unknown word {token.surface!r}")
            if self.strict:
                self._fail(err, line.number, token)
            sit.emit("unknown-word", token.normalized)
            return sit
        for p in packets:
            sit.emit("sense", p.sense_id)
        line.positions.append(index)
        _here, pruned = line.chart.extend(packets, feats)
        for pos, sense in pruned:
            sit.emit("prune", f"{line.positions[pos]}:{sense}")
        if not line.chart.analyses:
            sit.emit("no-analysis", token.normalized)
            line.dead = True
            if self.strict:
                self._fail(ParseError(f"no analysis survives {token.surface!r}"),
                           line.number, token)
            return sit
        self._commit(line.chart.committed())
        return sit

    def _commit(self, upto: int):
        line = self.line
        while line.done < upto:
            pos = line.done
            line.done += 1
            try:
                self.compose(pos)
            except SituateError as exc:
                tok = line.tokens[line.positions[pos]]
                if self.strict:
                    self._fail(exc, line.number, tok)
                self.sit.emit("error", type(exc).__name__, str(exc))

    def _fail(self, exc, number, token=None):
        exc.line = number
        exc.span = token.span if token is not None else None
        raise exc

    # -- composition ------------------------------------------------------------

    def compose(self, pos: int):
        """Run the semantic action of the grammar rule this token takes part in."""
        line = self.line
        analysis = line.chart.analyses[0]
        packet = self.kb.lexicon.by_sense.get(analysis.senses[pos]) or \
            self._synthetic(pos, analysis.senses[pos])
        feats = line.chart.features[pos]
        role = token_role(analysis.states[pos], packet.symbol)
        span = line.tokens[line.positions[pos]].span
        sym = packet.symbol
        if sym in "DQM":
            self._np_word(packet, feats, role, span)
        elif sym in "HN":
            self._head(packet, feats, role, span, pos)
        elif sym == "P":
            self._preposition(packet)
        elif sym == "A":
            self.sit.emit("aux", packet.trigger)
        elif sym == "V":
            self._verb(packet, feats, pos)
        elif sym == "R":
            self.sit.emit("adjunct", packet.trigger, line.event or "-")
        elif sym == "S":
            self._state(packet, pos)

    def _synthetic(self, pos, sense):
        for p in self.line.chart.columns[pos]:
            if p.sense_id == sense:
                return p
        raise SituateError(f"lost sense {sense}")

    def _open_np(self, role) -> NounPhrase:
        line = self.line
        if line.np is None:
            peg = create_peg(self.sit, role=role)
            line.np = NounPhrase(peg, role)
            line.pegs.append(peg.id)
        return line.np

    def _np_word(self, packet, feats, role, span):
        np = self._open_np(role)
        if packet.symbol == "D":
            if packet.definite:
                np.peg.definite = True
            else:
                np.indefinite = True
        if packet.approximate:
            np.peg.approximate = True
        introduce_packet(self.sit, packet, np.peg, span, feats)

    def _head(self, packet, feats, role, span, pos):
        sit, line = self.sit, self.line
        if packet.composite is None:
            self._time_word(packet, span)
            return
        np = self._open_np(role)
        ind = self._resolve_np(np, packet, feats, role, span)
        line.np = None
        line.anchors.append((ind.id, packet))
        if role == "subject" and line.subject is None:
            line.subject, line.subject_packet = ind.id, packet
        elif role.endswith("-pp") and line.pending_pp is not None:
            anchor, var = line.pending_pp
            line.pending_pp = None
            bind_variable(sit, anchor, var, Ref(ind.id), f"text:{line.number}")
        elif role == "object" and line.event is not None:
            ev = sit.individuals[line.event]
            if ev.verb is not None and ev.verb.object_slot:
                bind_variable(sit, ev.id, ev.verb.slots[ev.verb.object_slot], Ref(ind.id),
                              f"text:{line.number}")
        elif role == "adjunct":
            line.adjunct_subject = ind.id

    def _time_word(self, packet, span):
        line = self.line
        if line.np is not None:
            line.np.peg.head_resolved = True
            line.np = None
        target = self.sit.individuals.get(line.event) if line.event else None
        if target is None:
            self.sit.emit("unanchored", packet.sense_id)
            return
        introduce_packet(self.sit, packet, target, span)

    def _resolve_np(self, np, packet, feats, role, span):
        sit, line = self.sit, self.line
        peg = np.peg
        plural = "plural" in feats
        composite = head_composite(packet, feats)
        prefix = packet.prefix(plural)
        name = next((i.name for i in packet.items("introduce-individual") if i.name), None)
        mods = tuple((vid, val) for vid, val, _src in peg.predications)
        if name:
            if name not in sit.individuals and name in sit.passive.individuals:
                reactivate(sit, Mention(composite, (), prefix, name))
            fresh = name not in sit.individuals
            ind = resolve_head(sit, peg, packet, plural, name if not fresh else None, span)
            if fresh:
                update_indexicals(sit, "fresh", referent=ind.id)
            return ind
        referent = None
        if role == "adjunct" and line.event is not None:
            found = resolve_definite_reference(
                sit, Description(composite, plural, cause=line.event, prefix=prefix))
            referent = found.id if found is not None else None
        elif peg.definite:
            desc = Description(composite, plural, predications=mods, prefix=prefix)
            if self._in_model(desc):
                referent = resolve_definite_reference(sit, desc).id
            elif find_passive(sit, Mention(composite, mods, prefix)) is not None:
                referent = reactivate(sit, Mention(composite, mods, prefix)).id
            elif self.strict:
                raise UnresolvedReference(f"no referent for the {packet.trigger}")
            else:
                sit.emit("reference-unresolved", packet.trigger)
        elif mods and not np.indefinite:
            if find_passive(sit, Mention(composite, mods, prefix)) is not None:
                referent = reactivate(sit, Mention(composite, mods, prefix)).id
        ind = resolve_head(sit, peg, packet, plural, referent, span)
        if referent is None:
            update_indexicals(sit, "fresh", referent=ind.id)
        return ind

    def _in_model(self, desc) -> bool:
        onto = self.kb.ontology
        return any(onto.is_a(ind.composite, desc.category)
                   and all(ind.value(v) == val for v, val in desc.predications)
                   for ind in self.sit.individuals.values())

    def _preposition(self, packet):
        line = self.line
        for ident, anchor in reversed(line.anchors):
            var = anchor.attachments.get(packet.trigger)
            if var is not None:
                line.pending_pp = (ident, var)
                self.sit.emit("attach", packet.trigger, ident, var)
                return
        raise ParseError(f"{packet.trigger!r} has no anchor")

    def _verb(self, packet, feats, pos):
        sit, line = self.sit, self.line
        subject = line.subject
        if subject is None:
            raise ParseError(f"{packet.trigger!r} has no subject")
        inst = sit.habitat_of(subject)
        if inst is not None and line.subject_packet is not None:
            quale = self.kb.lexicon.select_qualia_role(
                line.subject_packet, {"governor": packet.trigger,
                                      "governor_family": packet.family})
            refocus_habitat(sit, inst, quale)
        aspect = "inprogress" if "progressive" in feats else \
            "completed" if "past" in feats else None
        if packet.family == "transition":
            ev = apply_transition(sit, packet, subject, aspect=aspect)
        elif packet.family == "process-operator":
            ev = new_individual(sit, packet.composite, packet.prefix())
            introduce_packet(sit, packet, ev)
            ev.verb = packet.verb
            if packet.verb and packet.verb.subject_slot:
                bind_variable(sit, ev.id, packet.verb.slots[packet.verb.subject_slot],
                              Ref(subject), f"text:{line.number}")
            apply_process_operator(sit, packet.verb.operator, subject)
        else:
            raise ParseError(f"{packet.sense_id}: verb family {packet.family} cannot head a clause")
        line.event = ev.id
        line.anchors.append((ev.id, packet))
        time_var = self.kb.policies.get("time_variable")
        if line.timestamp and time_var in ev.latent:
            bind_variable(sit, ev.id, time_var, Text(line.timestamp, "time"), "transcript")
        update_indexicals(sit, "verb-scanned", subject=subject, event=ev.id)

    def _state(self, packet, pos):
        sit, line = self.sit, self.line
        if line.event is None:
            raise ParseError(f"{packet.trigger!r} has no main event")
        state = apply_result_adjunct(sit, line.event, packet, subject=line.adjunct_subject)
        if state is not None:
            line.anchors.append((state.id, packet))

    # -- end of line ---------------------------------------------------------------

    def end_of_line(self):
        sit, line = self.sit, self.line
        if line is None or not line.tokens:
            return sit
        sit.cursor = (line.number, None)
        if not line.dead:
            complete = line.chart.complete()
            if not complete:
                open_peg = line.np is not None
                err = (UnresolvedPeg if open_peg else ParseError)(
                    "line ends inside a noun phrase" if open_peg else "incomplete clause")
                if self.strict:
                    self._fail(err, line.number)
                sit.emit("incomplete", type(err).__name__)
            else:
                if len(complete) > 1:
                    sit.emit("sense-ambiguous",
                             *sorted({s for a in complete for s in a.senses}),
                             note=f"chose {' '.join(complete[0].senses)}")
                line.chart.analyses = [complete[0]]
                self._commit(len(complete[0].senses))
        for pid in line.pegs:
            peg = sit.peg(pid)
            if peg is not None and not peg.head_resolved:
                if self.strict:
                    self._fail(UnresolvedPeg(f"{pid} never reached its head"), line.number)
                sit.emit("peg-unresolved", pid)
        update_indexicals(sit, "end-of-line", **{"line-given": line.subject,
                                                 "line-event": line.event})
        update_indexicals(sit, "clause-closed")
        self.line = None
        return sit


def run_lines(kb, lines, mode="transcript", strict=True, shift_gap=DEFAULT_SHIFT_GAP,
              history=None) -> Session:
    session = Session(kb, strict, shift_gap, history)
    for number, text in enumerate(lines, start=1):
        session.feed(text.rstrip("\n"), mode, number)
    return session
