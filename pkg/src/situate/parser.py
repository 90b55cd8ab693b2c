"""Tokenizing, the pattern grammar, and composition-survival of word senses.

Each grammar symbol is the one-letter projection of a sense (see
``Packet.symbol``). The line grammar is a regular language, recognized
incrementally by a hand-built automaton; the exhaustive oracle instead
compiles the rule patterns into a regular expression and checks whole
assignments, so the two routes share no matching code.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

from .errors import OracleLimit, ParseError

ORACLE_TOKEN_LIMIT = 12
ANCHOR_SYMBOLS = frozenset("HNVS")

_WORD_RE = re.compile(r"[0-9]+(?:[.:][0-9]+)?|[^\W_]+(?:['’-][^\W_]+)*")
_TRANSCRIPT_RE = re.compile(r"^\s*\[(\d{1,2}):(\d{2})\]\s*<([^>]+)>\s?(.*)$")


@dataclass(frozen=True)
class Token:
    surface: str
    normalized: str
    span: Tuple[int, int]
    line_ref: Optional[int] = None
    parts: Tuple[str, ...] = ()  # component words of a multiword match


def tokenize(line: str, lexicon=None, line_ref: Optional[int] = None) -> List[Token]:
    """Split on whitespace and punctuation; merge multiword triggers greedily."""
    words = [(m.group(0), m.start(), m.end()) for m in _WORD_RE.finditer(line)]
    out: List[Token] = []
    i = 0
    while i < len(words):
        surface, start, end = words[i]
        low = surface.lower()
        matched = None
        if lexicon is not None:
            for phrase in lexicon.multiword.get(low, ()):
                n = len(phrase)
                if tuple(w.lower() for w, _, _ in words[i:i + n]) == phrase:
                    matched = n
                    break
        if matched:
            last = words[i + matched - 1]
            parts = tuple(w for w, _, _ in words[i:i + matched])
            out.append(Token(line[start:last[2]], " ".join(p.lower() for p in parts),
                             (start, last[2]), line_ref, parts))
            i += matched
        else:
            out.append(Token(surface, low, (start, end), line_ref))
            i += 1
    return out


def parse_clock(text: str) -> int:
    """``"19:51"`` as minutes after midnight."""
    m = re.fullmatch(r"\s*(\d{1,2}):(\d{2})\s*", text)
    if not m or int(m.group(1)) > 23 or int(m.group(2)) > 59:
        raise ParseError(f"bad clock time {text!r}")
    return int(m.group(1)) * 60 + int(m.group(2))


def parse_transcript_line(text: str) -> Optional[Tuple[str, str, str]]:
    """``[HH:MM] <speaker> message`` as ``(time, speaker, message)``."""
    m = _TRANSCRIPT_RE.match(text)
    if m is None:
        return None
    return f"{int(m.group(1)):02d}:{m.group(2)}", m.group(3).strip(), m.group(4)


# -- grammar ------------------------------------------------------------------------

@dataclass(frozen=True)
class GrammarRule:
    name: str
    pattern: str  # regular expression over projection symbols
    action: str


GRAMMAR_RULES = (
    GrammarRule("np", "[DQ]*M*[HN]", "create-peg, accumulate, resolve-head"),
    GrammarRule("np-pp", "(?:{np})(?:P(?:{np}))*", "attach-pp"),
    GrammarRule("verb-group", "A*V", "apply-verb"),
    GrammarRule("predicate", "(?:{np})?(?:P(?:{np}))*", "bind-complements"),
    GrammarRule("result-adjunct", "R(?:{np_pp})S(?:P(?:{np}))*", "apply-result-adjunct"),
    GrammarRule("clause", "(?:{np_pp})(?:(?:{verb_group})(?:{predicate})(?:{result_adjunct})*)?",
                "close-clause"),
)


def grammar_regex(rules=GRAMMAR_RULES) -> re.Pattern:
    """Expand the rule patterns into one regular expression for a line."""
    expanded: Dict[str, str] = {}
    for rule in rules:
        expanded[rule.name.replace("-", "_")] = rule.pattern.format(**expanded)
    return re.compile(expanded["clause"])


# States of the incremental recognizer. Each state also fixes the grammatical
# role of the constituent that the next token belongs to.
_NP = {"D": "det", "Q": "det", "M": "mod", "H": "head", "N": "head"}


def _np_states(prefix, after_head):
    return {
        prefix: {"D": prefix + "d", "Q": prefix + "d", "M": prefix + "m",
                 "H": after_head, "N": after_head},
        prefix + "d": {"D": prefix + "d", "Q": prefix + "d", "M": prefix + "m",
                       "H": after_head, "N": after_head},
        prefix + "m": {"M": prefix + "m", "H": after_head, "N": after_head},
    }


TRANSITIONS: Dict[str, Dict[str, str]] = {}
TRANSITIONS.update(_np_states("subj", "subj-head"))
TRANSITIONS.update(_np_states("subj-pp", "subj-head"))
TRANSITIONS.update(_np_states("obj", "pred"))
TRANSITIONS.update(_np_states("pred-pp", "pred"))
TRANSITIONS.update(_np_states("adj", "adj-head"))
TRANSITIONS.update(_np_states("adj-pp", "adj-head"))
TRANSITIONS["subj-head"] = {"P": "subj-pp", "A": "aux", "V": "verb"}
TRANSITIONS["aux"] = {"A": "aux", "V": "verb"}
TRANSITIONS["verb"] = dict(TRANSITIONS["obj"], P="pred-pp", R="adj")
TRANSITIONS["pred"] = {"P": "pred-pp", "R": "adj"}
TRANSITIONS["adj-head"] = {"P": "adj-pp", "S": "pred"}

START = "subj"
ACCEPTING = frozenset({"subj-head", "verb", "pred"})

# role of a token, from the state in which it is consumed
ROLE_OF_STATE = {
    "subj": "subject", "subjd": "subject", "subjm": "subject",
    "subj-pp": "subject-pp", "subj-ppd": "subject-pp", "subj-ppm": "subject-pp",
    "verb": "object", "obj": "object", "objd": "object", "objm": "object",
    "pred-pp": "predicate-pp", "pred-ppd": "predicate-pp", "pred-ppm": "predicate-pp",
    "adj": "adjunct", "adjd": "adjunct", "adjm": "adjunct",
    "adj-pp": "adjunct-pp", "adj-ppd": "adjunct-pp", "adj-ppm": "adjunct-pp",
    "subj-head": "clause", "aux": "clause", "pred": "clause", "adj-head": "adjunct",
}


def step(state: Optional[str], symbol: str) -> Optional[str]:
    if state is None:
        return None
    return TRANSITIONS.get(state, {}).get(symbol)


def token_role(state: str, symbol: str) -> str:
    if symbol in "AV":
        return "verb"
    if symbol == "R":
        return "adjunct-start"
    if symbol == "S":
        return "state"
    if symbol == "P":
        return {"subj-head": "subject-pp", "verb": "predicate-pp", "pred": "predicate-pp",
                "adj-head": "adjunct-pp"}[state]
    return ROLE_OF_STATE[state]


# -- composition constraints -----------------------------------------------------

def head_composite(packet, features) -> Optional[str]:
    if "plural" in features and packet.plural_composite:
        return packet.plural_composite
    return packet.composite


def subject_fits(onto, verb_packet, subject_composite) -> bool:
    need = verb_packet.subject_category
    if need is None:
        return True
    return subject_composite is not None and onto.is_a(subject_composite, need)


@dataclass(frozen=True)
class Analysis:
    """One live way of reading the tokens scanned so far."""
    senses: Tuple[str, ...]
    states: Tuple[str, ...]  # state before each token, then the current state
    subject: Optional[str] = None  # composite of the first head
    preps: FrozenSet[str] = frozenset()  # prepositions some earlier anchor accepts

    @property
    def state(self) -> str:
        return self.states[-1]


class SenseChart:
    """All analyses of the current line that can still extend to a full parse.

    An analysis dies as soon as a constraint becomes decidable: a symbol the
    automaton cannot take, a preposition with no earlier anchor declaring it,
    or a verb whose subject category does not subsume the subject head.
    """

    def __init__(self, kb):
        self.kb = kb
        self.analyses: List[Analysis] = [Analysis((), (START,))]
        self.columns: List[List] = []  # senses offered per position
        self.features: List[Tuple[str, ...]] = []

    def extend(self, packets, features=()) -> Tuple[List[str], List[Tuple[int, str]]]:
        """Scan one token. Returns its surviving sense ids and newly pruned edges."""
        before = self.live()
        onto = self.kb.ontology
        self.columns.append(list(packets))
        self.features.append(tuple(features))
        out = []
        for a in self.analyses:
            for p in packets:
                nxt = step(a.state, p.symbol)
                if nxt is None:
                    continue
                subject, preps = a.subject, a.preps
                if p.symbol == "P" and p.trigger not in preps:
                    continue
                if p.symbol in "HN" and subject is None:
                    subject = head_composite(p, features) or ""
                if p.symbol == "V" and not subject_fits(onto, p, subject or None):
                    continue
                if p.symbol in ANCHOR_SYMBOLS:
                    preps = preps | frozenset(p.attachments)
                out.append(Analysis(a.senses + (p.sense_id,), a.states + (nxt,), subject, preps))
        self.analyses = out
        after = self.live()
        pruned = sorted(e for e in before if e not in after)
        pos = len(self.columns) - 1
        here = sorted({s for i, s in after if i == pos})
        pruned += [(pos, p.sense_id) for p in packets if p.sense_id not in here]
        return here, pruned

    def live(self) -> set:
        return {(i, s) for a in self.analyses for i, s in enumerate(a.senses)}

    def complete(self) -> List[Analysis]:
        return sorted((a for a in self.analyses if a.state in ACCEPTING),
                      key=lambda a: a.senses)

    def survivors(self) -> set:
        return {s for a in self.complete() for s in a.senses}

    def committed(self) -> int:
        """Length of the prefix on which every live analysis agrees."""
        if not self.analyses:
            return 0
        n = 0
        first = self.analyses[0].senses
        while n < len(first) and all(a.senses[n] == first[n] for a in self.analyses):
            n += 1
        return n


def token_senses(kb, token: Token):
    packets, feats = kb.lexicon.analyze(token.normalized)
    return packets, feats


def incremental_survivors(kb, tokens: Sequence[Token]) -> set:
    """Senses that survive incremental scanning of a whole line."""
    chart = SenseChart(kb)
    for tok in tokens:
        packets, feats = token_senses(kb, tok)
        chart.extend(packets, feats)
    return chart.survivors()


# -- exhaustive oracle -------------------------------------------------------------

_LINE_RE = grammar_regex()


def assignment_valid(kb, packets, features) -> bool:
    """Whole-line check of one sense assignment."""
    if not _LINE_RE.fullmatch("".join(p.symbol for p in packets)):
        return False
    accepted = set()
    for p in packets:
        if p.symbol == "P" and p.trigger not in accepted:
            return False
        if p.symbol in ANCHOR_SYMBOLS:
            accepted.update(p.attachments)
    heads = [i for i, p in enumerate(packets) if p.symbol in "HN"]
    for p in packets:
        if p.symbol == "V":
            subj = head_composite(packets[heads[0]], features[heads[0]]) if heads else None
            if not subject_fits(kb.ontology, p, subj):
                return False
    return True


def disambiguate_oracle(kb, tokens: Sequence[Token], limit: int = ORACLE_TOKEN_LIMIT) -> set:
    """Senses occurring in at least one complete analysis, by brute force."""
    if len(tokens) > limit:
        raise OracleLimit(f"{len(tokens)} tokens exceeds the oracle limit of {limit}")
    columns, features = [], []
    for tok in tokens:
        packets, feats = token_senses(kb, tok)
        columns.append(packets)
        features.append(feats)
    found = set()
    for assignment in itertools.product(*columns):
        if assignment_valid(kb, assignment, features):
            found.update(p.sense_id for p in assignment)
    return found
