from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from askgap.corpus import (
    DIALOGUE,
    Document,
    RawRecord,
    Turn,
    chunk_document,
    concat_dialogues,
    document_from_sentences,
    parse_record,
    rewrite_third_person,
    segment_sentences,
    to_third_person,
    token_spans,
    word_tokenize,
)
from askgap.errors import EmptyDocument, UnsupportedDialogue


def _prose(rec_id: str, text: str) -> RawRecord:
    return RawRecord(id=rec_id, kind="prose", text=text)


def _dialogue(rec_id: str, *turns: tuple[str, str]) -> RawRecord:
    return RawRecord(
        id=rec_id, kind=DIALOGUE, turns=tuple(Turn(s, t) for s, t in turns)
    )


class TestWordTokenize:
    def test_punctuation_split(self):
        assert word_tokenize("The cat sat.") == ["the", "cat", "sat", "."]

    def test_apostrophe_is_separate(self):
        assert word_tokenize("don't") == ["don", "'", "t"]

    def test_empty(self):
        assert word_tokenize("") == []

    def test_spans_roundtrip(self):
        text = "Left, right."
        for tok, start, end in token_spans(text):
            assert text[start:end].lower() == tok


class TestSegmentSentences:
    def test_two_sentences_offsets(self):
        spans = segment_sentences("A cat sat. A dog ran.")
        assert [(s.start, s.end) for s in spans] == [(0, 10), (11, 21)]

    def test_abbreviation_not_boundary(self):
        spans = segment_sentences("Dr. Smith left. He ran.")
        assert len(spans) == 2
        text = "Dr. Smith left. He ran."
        assert text[spans[0].start : spans[0].end] == "Dr. Smith left."

    def test_eg_ie_not_boundaries(self):
        spans = segment_sentences("Use tools, e.g. A hammer works.")
        # "e.g." is stop-listed, so the period cannot split
        assert len(spans) == 1

    def test_no_terminal_punctuation_single_span(self):
        spans = segment_sentences("no punctuation here at all")
        assert len(spans) == 1

    def test_lowercase_continuation_not_boundary(self):
        spans = segment_sentences("It was v. good. so they said")
        # period followed by lowercase is not a boundary
        assert len(spans) == 1

    def test_question_and_exclamation(self):
        spans = segment_sentences("Really? Yes! Fine.")
        assert len(spans) == 3

    def test_quote_after_boundary(self):
        spans = segment_sentences('He stopped. "Go on." She went.')
        assert len(spans) == 3

    def test_empty_raises(self):
        with pytest.raises(EmptyDocument):
            segment_sentences("   \n ")

    def test_token_counts(self):
        spans = segment_sentences("A cat sat. A dog ran.")
        assert [s.token_count for s in spans] == [4, 4]

    def test_spans_cover_non_whitespace(self):
        text = "One two.  Three four! Five"
        spans = segment_sentences(text)
        covered = set()
        for s in spans:
            covered.update(range(s.start, s.end))
        for i, ch in enumerate(text):
            if not ch.isspace():
                assert i in covered, f"char {i} ({ch!r}) not covered"

    @given(
        st.lists(
            st.text(
                alphabet="abcdefgh XY.!?",
                min_size=1,
                max_size=30,
            ).map(lambda s: s.strip()),
            min_size=1,
            max_size=6,
        )
    )
    @settings(max_examples=150)
    def test_round_trip_property(self, parts):
        # build a text from sentence-ish parts, then check the invariants:
        # spans sorted, non-overlapping, whitespace-only gaps
        text = " ".join(p if p else "x" for p in parts)
        if not text.strip():
            return
        spans = segment_sentences(text)
        assert spans
        last_end = None
        for s in spans:
            assert s.start < s.end
            if last_end is not None:
                assert s.start >= last_end
                assert text[last_end : s.start].strip() == ""
            assert not text[s.start].isspace()
            assert not text[s.end - 1].isspace()
            last_end = s.end
        # every non-whitespace char is inside some span
        covered = set()
        for s in spans:
            covered.update(range(s.start, s.end))
        assert all(
            i in covered for i, ch in enumerate(text) if not ch.isspace()
        )


class TestChunkDocument:
    def test_greedy_packing(self):
        # 4 + 4 + 4 tokens; budget 8 -> [2 sentences, 1 sentence]
        rec = _prose("r1", "A cat sat. A dog ran. An owl flew.")
        docs = chunk_document(rec, 8)
        assert len(docs) == 2
        assert docs[0].text == "A cat sat. A dog ran."
        assert docs[1].text == "An owl flew."
        assert [len(d.sentences) for d in docs] == [2, 1]
        assert docs[0].id == "r1#0" and docs[1].id == "r1#1"

    def test_sentence_offsets_relative_to_chunk(self):
        rec = _prose("r1", "A cat sat. A dog ran. An owl flew.")
        docs = chunk_document(rec, 8)
        d = docs[1]
        assert d.sentence_text(0) == "An owl flew."
        assert d.sentences[0].start == 0

    def test_oversize_sentence_truncated_and_flagged(self):
        words = " ".join(f"w{i}" for i in range(30))
        rec = _prose("r2", f"{words}.")
        docs = chunk_document(rec, 10)
        assert len(docs) == 1
        assert docs[0].truncated
        assert len(word_tokenize(docs[0].text)) == 10

    def test_exact_fit_not_split(self):
        rec = _prose("r3", "A cat sat. A dog ran.")
        docs = chunk_document(rec, 8)
        assert len(docs) == 1

    def test_all_tokens_preserved(self):
        rec = _prose("r4", "One two three. Four five six. Seven eight nine.")
        docs = chunk_document(rec, 100)
        assert len(docs) == 1
        assert docs[0].text == rec.text

    def test_round_trip_within_chunk(self):
        rec = _prose("r5", "A cat sat.  A dog ran. An owl flew.")
        for doc in chunk_document(rec, 8):
            rebuilt = []
            pos = None
            for s in doc.sentences:
                if pos is not None:
                    rebuilt.append(doc.text[pos : s.start])
                rebuilt.append(doc.text[s.start : s.end])
                pos = s.end
            assert "".join(rebuilt) == doc.text


class TestDialogues:
    def test_rendering_format(self):
        rec = _dialogue("d1", ("Alice", "Hello there"), ("Bob", "Hi"))
        docs = concat_dialogues([rec], 100)
        assert len(docs) == 1
        assert docs[0].text == "Alice: Hello there\nBob: Hi"
        assert docs[0].kind == DIALOGUE
        assert docs[0].speakers == ("Alice", "Bob")
        assert docs[0].addressees == ("Bob", "Alice")

    def test_one_span_per_turn(self):
        rec = _dialogue("d1", ("Alice", "Hello. How are you?"), ("Bob", "Hi"))
        docs = concat_dialogues([rec], 100)
        # turns stay whole even when an utterance has several sentences
        assert len(docs[0].sentences) == 2
        assert docs[0].sentence_text(0) == "Alice: Hello. How are you?"

    def test_packing_whole_dialogues(self):
        recs = [
            _dialogue("d1", ("A", "one two three"), ("B", "four five")),
            _dialogue("d2", ("A", "six seven"), ("B", "eight")),
            _dialogue("d3", ("A", "nine ten eleven twelve")),
        ]
        # d1 = 9 tokens, d2 = 7, d3 = 6 (speaker + colon count as tokens)
        docs = concat_dialogues(recs, 16)
        assert len(docs) == 2
        assert docs[0].origin == "d1,d2"
        assert docs[1].origin == "d3"

    def test_oversize_dialogue_truncated_at_turn_boundary(self):
        rec = _dialogue(
            "d9",
            ("A", "one two three four five six"),
            ("B", "seven eight nine ten"),
            ("A", "eleven twelve"),
        )
        docs = concat_dialogues([rec], 10)
        assert len(docs) == 1
        assert docs[0].truncated
        assert len(docs[0].sentences) == 1
        assert docs[0].sentence_text(0) == "A: one two three four five six"

    def test_empty_dialogue_raises(self):
        rec = RawRecord(id="d0", kind=DIALOGUE, turns=())
        with pytest.raises(EmptyDocument):
            concat_dialogues([rec], 10)


class TestThirdPerson:
    def test_pronoun_table(self):
        out = rewrite_third_person("I agree with you", "Alice", "Bob")
        assert out == "Alice agree with Bob"

    def test_possessives(self):
        out = rewrite_third_person("My plan beats your plan", "Alice", "Bob")
        assert out == "Alice's plan beats Bob's plan"

    def test_we_and_us(self):
        out = rewrite_third_person("We should go; trust us", "Alice", "Bob")
        assert out == "Alice and Bob should go; trust Alice and Bob"

    def test_no_pronouns_unchanged(self):
        assert rewrite_third_person("The plan works", "A", "B") == "The plan works"

    def test_word_boundary_only(self):
        # "in" must not match the standalone pronoun "i"
        out = rewrite_third_person("in time", "A", "B")
        assert out == "in time"

    def test_case_insensitive_match(self):
        out = rewrite_third_person("i said nothing", "Ann", "Ben")
        assert out == "Ann said nothing"

    def test_rewriter_validates_two_speakers(self):
        rec = _dialogue("d1", ("A", "x"), ("B", "y"), ("C", "z"))
        with pytest.raises(UnsupportedDialogue):
            to_third_person(rec)

    def test_rewriter_per_turn(self):
        rec = _dialogue("d1", ("Alice", "I agree with you"), ("Bob", "You win"))
        rw = to_third_person(rec)
        assert rw.rewrite_turn(rec.turns[0]) == "Alice agree with Bob"
        assert rw.rewrite_turn(rec.turns[1]) == "Alice win"

    @given(
        st.lists(
            st.sampled_from(
                ["I", "me", "my", "we", "you", "your", "plan", "works", "the"]
            ),
            min_size=1,
            max_size=12,
        )
    )
    @settings(max_examples=100)
    def test_token_growth_bound(self, words):
        # each pronoun match adds at most 2 tokens (single-token names)
        text = " ".join(words)
        matches = sum(
            1 for w in words if w.lower() in ("i", "me", "my", "mine", "we", "us", "you", "your")
        )
        out = rewrite_third_person(text, "Ann", "Ben")
        before = len(word_tokenize(text))
        after = len(word_tokenize(out))
        assert abs(after - before) <= 3 * matches


class TestRecords:
    def test_parse_prose(self):
        rec = parse_record({"id": "x", "kind": "prose", "text": "Hi there."})
        assert rec.kind == "prose"

    def test_parse_dialogue(self):
        rec = parse_record(
            {
                "id": "x",
                "kind": "dialogue",
                "turns": [{"speaker": "A", "text": "hello"}],
            }
        )
        assert rec.turns == (Turn("A", "hello"),)

    def test_invalid_kind(self):
        with pytest.raises(ValueError):
            RawRecord(id="x", kind="poem", text="hi")

    def test_prose_with_turns_rejected(self):
        with pytest.raises(ValueError):
            RawRecord(id="x", kind="prose", text="hi", turns=(Turn("A", "b"),))


class TestDocumentFromSentences:
    def test_spans_and_text(self):
        doc = document_from_sentences("t", ["x y z", "x y w", "q r s"])
        assert doc.text == "x y z x y w q r s"
        assert [doc.sentence_text(i) for i in range(3)] == ["x y z", "x y w", "q r s"]

    def test_empty_raises(self):
        with pytest.raises(EmptyDocument):
            document_from_sentences("t", [])
