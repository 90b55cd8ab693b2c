import random

import pytest
from hypothesis import given, settings, strategies as st

from conftest import CORPUS
from situate.errors import OracleLimit, ParseError, UnresolvedPeg
from situate.parser import (ACCEPTING, START, SenseChart, disambiguate_oracle, grammar_regex,
                            incremental_survivors, parse_clock, parse_transcript_line, step,
                            tokenize)
from situate.session import run_lines
from synthetic import synthetic_line

LINE_72 = "[19:51] <Heavy2> black ford suv has entered wakil"


def test_tokenize_line_72():
    tokens = tokenize("black ford suv has entered wakil")
    assert [t.normalized for t in tokens] == ["black", "ford", "suv", "has", "entered", "wakil"]
    assert tokens[2].span == (11, 14)


def test_tokenize_empty():
    assert tokenize("") == []


def test_multiword_longest_match(kbs):
    tokens = tokenize("from Luis Munoz Marin Airport in San Juan", kbs["airtravel"].lexicon)
    assert [t.normalized for t in tokens] == ["from", "luis munoz marin airport", "in",
                                              "san juan"]
    assert tokens[1].parts == ("Luis", "Munoz", "Marin", "Airport")


@given(st.text(alphabet="ab 1,.-'", max_size=30))
def test_spans_increase(text):
    spans = [t.span for t in tokenize(text)]
    assert all(a[1] <= b[0] for a, b in zip(spans, spans[1:]))
    assert all(text[s:e] for s, e in spans)


def test_transcript_line_and_clock():
    assert parse_transcript_line(LINE_72) == ("19:51", "Heavy2", "black ford suv has entered wakil")
    assert parse_transcript_line("no prefix here") is None
    assert parse_clock("19:51") == 19 * 60 + 51
    with pytest.raises(ParseError):
        parse_clock("25:00")


def accepts(symbols):
    state = START
    for s in symbols:
        state = step(state, s)
    return state in ACCEPTING


@settings(max_examples=400)
@given(st.text(alphabet="DQMHNPAVRS", max_size=10))
def test_automaton_matches_rule_regex(symbols):
    assert accepts(symbols) == bool(grammar_regex().fullmatch(symbols))


@pytest.mark.parametrize("symbols", ["DH", "DMMH", "NAV", "DHPNAVDH", "DHAVRQHSPDH", "QH"])
def test_grammar_accepts_corpus_shapes(symbols):
    assert accepts(symbols)


def test_flights_from_prunes_other_senses(kbs):
    kb = kbs["airtravel"]
    chart = SenseChart(kb)
    for word in ("most", "flights"):
        chart.extend(*kb.lexicon.analyze(word))
    _, pruned = chart.extend(*kb.lexicon.analyze("from"))
    assert pruned == [(1, "flight-amount"), (1, "flight-stairs")]
    tokens = tokenize("flights from Luis Munoz Marin Airport", kb.lexicon)
    assert disambiguate_oracle(kb, tokens) == {"airline-flight", "from-source", "lmm-airport"}


def test_one_sense_line_has_unique_assignment(kbs):
    kb = kbs["isr"]
    tokens = tokenize("black ford suv has entered wakil", kb.lexicon)
    want = {p.sense_id for t in tokens for p in kb.lexicon.analyze(t.normalized)[0]}
    assert disambiguate_oracle(kb, tokens) == want == incremental_survivors(kb, tokens)


def test_dead_line_is_empty_for_both_routes(kbs):
    kb = kbs["minimal"]
    line = "a redness fired a light fire"
    tokens = tokenize(line, kb.lexicon)
    assert disambiguate_oracle(kb, tokens) == set() == incremental_survivors(kb, tokens)
    with pytest.raises(ParseError, match="no analysis"):
        run_lines(kb, [line], mode="sentences")


def test_oracle_limit(kbs):
    tokens = tokenize(" ".join(["the person"] * 7), kbs["minimal"].lexicon)
    with pytest.raises(OracleLimit):
        disambiguate_oracle(kbs["minimal"], tokens)


@settings(max_examples=150, deadline=None)
@given(st.randoms(use_true_random=False))
def test_incremental_equals_oracle(kbs, rnd):
    kb = kbs["minimal"]
    tokens = tokenize(synthetic_line(rnd), kb.lexicon)
    assert incremental_survivors(kb, tokens) == disambiguate_oracle(kb, tokens)


@settings(max_examples=100, deadline=None)
@given(st.randoms(use_true_random=False))
def test_pruned_edges_stay_pruned(kbs, rnd):
    kb = kbs["minimal"]
    chart = SenseChart(kb)
    dead = set()
    for tok in tokenize(synthetic_line(rnd), kb.lexicon):
        _, pruned = chart.extend(*kb.lexicon.analyze(tok.normalized))
        dead.update(pruned)
        assert not dead & chart.live()


def test_line_72_indexicals(kbs):
    sit = run_lines(kbs["isr"], [LINE_72], history=kbs["isr"].history).sit
    final = [e.args for e in sit.events if e.kind == "indexical" and e.token is None]
    assert ("given", "SUV-1") in final and ("new", "enter-1") in final


def test_each_token_scanned_once(kbs):
    lines = (CORPUS / "isr_table1.txt").read_text().splitlines()
    sit = run_lines(kbs["isr"], lines, history=kbs["isr"].history).sit
    scans = [(e.line, e.token) for e in sit.events if e.kind == "scan"]
    assert len(scans) == len(set(scans)) == 6 + 4


def test_line_73_composes_dismount_with_actor(kbs):
    lines = (CORPUS / "isr_table1.txt").read_text().splitlines()
    sit = run_lines(kbs["isr"], lines, history=kbs["isr"].history).sit
    kinds = [e.format().split("\t")[1] for e in sit.events if e.line == 2]
    assert any(k.startswith("peg-created(") for k in kinds)
    for expected in ("peg-resolved(people-2)",
                     "gap-resolved(from=SUV-1)", "proc-fired(adjust-count,-2)",
                     "proc-fired(coerce,stopped)"):
        assert expected in kinds


def test_cancel_applies_to_syntactic_subject(kbs):
    text = (CORPUS / "airport.txt").read_text().splitlines()
    sit = run_lines(kbs["airtravel"], text, mode="sentences").sit
    assert ("cancel", "flight-habitat-1") in [e.args for e in sit.events if e.kind == "operator"]


def test_dangling_determiner(kbs):
    with pytest.raises(UnresolvedPeg):
        run_lines(kbs["isr"], ["[19:51] <Heavy2> black ford suv has entered the"])


def test_unknown_word_strict_and_lenient(kbs):
    line = "[19:51] <Heavy2> a zorb suv"
    with pytest.raises(ParseError) as info:
        run_lines(kbs["isr"], [line])
    assert info.value.span == (2, 6)
    sit = run_lines(kbs["isr"], [line], strict=False).sit
    assert [e.args for e in sit.events if e.kind == "unknown-word"] == [("zorb",)]
    assert "SUV-1" in sit.individuals


def test_empty_line_emits_nothing(kbs):
    assert run_lines(kbs["isr"], ["", "   "]).sit.events == []
