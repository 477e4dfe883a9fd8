from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kgcl.errors import FormatError, IntegrityError, TripleParseError, ValidationError
from kgcl.kb import KnowledgeBase, Source, Triple, Vocabulary, read_triple_file

names = st.text(
    alphabet=st.characters(blacklist_characters="\t\n\r", blacklist_categories=("Cs",)),
    min_size=1,
    max_size=12,
)


def small_kb(num_entities=4, num_relations=2) -> KnowledgeBase:
    kb = KnowledgeBase()
    for i in range(num_entities):
        kb.vocabulary.register_entity(f"e{i}")
    for i in range(num_relations):
        kb.vocabulary.register_relation(f"r{i}")
    return kb


class TestVocabulary:
    def test_first_id_is_zero(self):
        v = Vocabulary()
        assert v.register_entity("bottle") == 0

    def test_idempotent_registration(self):
        v = Vocabulary()
        assert v.register_entity("bottle") == v.register_entity("bottle")
        assert v.num_entities == 1

    def test_dense_assignment(self):
        v = Vocabulary()
        ids = {v.register_entity(n) for n in ("a", "b", "c")}
        assert ids == {0, 1, 2}

    @pytest.mark.parametrize("bad", ["", "with\ttab", "with\nnewline"])
    def test_invalid_names_rejected(self, bad):
        v = Vocabulary()
        with pytest.raises(ValidationError):
            v.register_entity(bad)

    @given(st.lists(names, unique=True, max_size=30))
    def test_roundtrip_bijection(self, entity_names):
        v = Vocabulary()
        ids = [v.register_entity(n) for n in entity_names]
        assert ids == list(range(len(entity_names)))
        assert [v.entity_name(i) for i in ids] == entity_names
        assert [v.entity_id(n) for n in entity_names] == ids


class TestAddAndContains:
    def test_first_add_counts(self):
        kb = KnowledgeBase()
        h = kb.vocabulary.register_entity("bottle")
        r = kb.vocabulary.register_relation("hasMaterial")
        t = kb.vocabulary.register_entity("plastic")
        assert kb.add(Triple(h, r, t), Source.IMPORTED) is True
        assert len(kb) == 1

    def test_duplicate_suppressed(self):
        kb = small_kb()
        t = Triple(0, 0, 1)
        assert kb.add(t, Source.IMPORTED)
        assert kb.add(t, Source.HUMAN_CORRECTED, session=3) is False
        assert len(kb) == 1
        # first insertion's provenance wins
        assert kb.journal[0][1].source is Source.IMPORTED

    def test_unregistered_tail_rejected(self):
        kb = small_kb()
        with pytest.raises(IntegrityError):
            kb.add(Triple(0, 0, 99), Source.IMPORTED)

    def test_empty_kb_contains_nothing(self):
        kb = small_kb()
        assert not kb.contains(Triple(0, 0, 1))

    def test_contains_after_add(self):
        kb = small_kb()
        kb.add(Triple(0, 1, 2), Source.IMPORTED)
        assert Triple(0, 1, 2) in kb

    def test_contains_matches_linear_scan_oracle(self):
        rng = np.random.default_rng(7)
        kb = small_kb(num_entities=8, num_relations=3)
        for _ in range(60):
            kb.add(Triple(int(rng.integers(8)), int(rng.integers(3)), int(rng.integers(8))), Source.IMPORTED)
        for _ in range(1000):
            probe = Triple(int(rng.integers(8)), int(rng.integers(3)), int(rng.integers(8)))
            scanned = any(t == probe for t, _ in kb.journal)
            assert kb.contains(probe) == scanned


@given(
    st.lists(
        st.tuples(st.integers(0, 5), st.integers(0, 2), st.integers(0, 5)),
        max_size=40,
    )
)
@settings(max_examples=50)
def test_journal_is_append_only(ops):
    kb = small_kb(num_entities=6, num_relations=3)
    previous: list = []
    for h, r, t in ops:
        kb.add(Triple(h, r, t), Source.IMPORTED)
        assert kb.journal[: len(previous)] == previous
        previous = list(kb.journal)


class TestImport:
    def test_valid_file(self, tmp_path):
        f = tmp_path / "facts.tsv"
        f.write_text("bottle\thasMaterial\tplastic\nmug\tobjInLoc\tkitchen\n# comment\n\nmug\thasColor\tred\n")
        kb = KnowledgeBase()
        assert kb.import_triples(f) == 3
        assert kb.vocabulary.has_entity("kitchen")

    def test_duplicates_counted_once(self, tmp_path):
        f = tmp_path / "facts.tsv"
        f.write_text("a\tr\tb\na\tr\tb\na\tr\tc\n")
        kb = KnowledgeBase()
        assert kb.import_triples(f) == 2

    def test_two_field_line_rejected_with_line_number(self, tmp_path):
        f = tmp_path / "facts.tsv"
        f.write_text("a\tr\tb\nbroken line\na\tr\tc\n")
        with pytest.raises(TripleParseError) as err:
            read_triple_file(f)
        assert err.value.lines == [2]

    def test_malformed_import_leaves_kb_untouched(self, tmp_path):
        f = tmp_path / "facts.tsv"
        f.write_text("a\tr\tb\nnot-a-triple\n")
        kb = KnowledgeBase()
        with pytest.raises(TripleParseError):
            kb.import_triples(f)
        assert len(kb) == 0
        assert kb.vocabulary.num_entities == 0

    def test_unreadable_file(self, tmp_path):
        with pytest.raises(ValidationError):
            read_triple_file(tmp_path / "missing.tsv")


class TestPersistence:
    def test_empty_roundtrip(self, tmp_path):
        kb = KnowledgeBase()
        kb.save(tmp_path / "kb")
        loaded = KnowledgeBase.load(tmp_path / "kb")
        assert len(loaded) == 0
        assert loaded.vocabulary.num_entities == 0

    def test_fuzzed_roundtrip_is_exact(self, tmp_path):
        rng = np.random.default_rng(13)
        kb = small_kb(num_entities=40, num_relations=5)
        sources = list(Source)
        for _ in range(1000):
            kb.add(
                Triple(int(rng.integers(40)), int(rng.integers(5)), int(rng.integers(40))),
                sources[int(rng.integers(3))],
                session=int(rng.integers(6)),
            )
        kb.save(tmp_path / "kb")
        loaded = KnowledgeBase.load(tmp_path / "kb")
        assert loaded.journal == kb.journal
        assert loaded.vocabulary.snapshot() == kb.vocabulary.snapshot()
        # re-saving reproduces the file byte for byte
        loaded.save(tmp_path / "kb2")
        assert (tmp_path / "kb").read_bytes() == (tmp_path / "kb2").read_bytes()

    def test_wrong_magic_rejected(self, tmp_path):
        f = tmp_path / "kb"
        f.write_text("NOPE 1\nentities 0\nrelations 0\njournal 0\n")
        with pytest.raises(FormatError):
            KnowledgeBase.load(f)

    def test_wrong_version_rejected(self, tmp_path):
        f = tmp_path / "kb"
        f.write_text("KGKB 99\nentities 0\nrelations 0\njournal 0\n")
        with pytest.raises(FormatError):
            KnowledgeBase.load(f)

    def test_counter_survives_roundtrip(self, tmp_path):
        kb = small_kb()
        kb.add(Triple(0, 0, 1), Source.IMPORTED)
        kb.save(tmp_path / "kb")
        loaded = KnowledgeBase.load(tmp_path / "kb")
        loaded.add(Triple(1, 0, 2), Source.IMPORTED)
        timestamps = [p.timestamp for _, p in loaded.journal]
        assert timestamps == sorted(timestamps)
        assert len(set(timestamps)) == len(timestamps)
