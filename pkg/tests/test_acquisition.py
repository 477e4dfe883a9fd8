from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kgcl.acquisition import (
    Question,
    QuestionState,
    TemplateRegistry,
    Verdict,
    phase_a,
    phase_c,
    render_question,
    simulated_oracle,
)
from kgcl.errors import ProtocolError, ValidationError
from kgcl.kb import KnowledgeBase, Source, Triple
from kgcl.model import init_params, score
from kgcl.training import SessionDataset, TrainConfig, train_session


def seeded_kb() -> KnowledgeBase:
    kb = KnowledgeBase()
    for name in ("apple", "kitchen", "fridge", "table"):
        kb.vocabulary.register_entity(name)
    kb.vocabulary.register_relation("objInLoc")
    kb.add(Triple(0, 0, 1), Source.IMPORTED)  # apple objInLoc kitchen
    return kb


class TestVerdict:
    def test_no_requires_correction(self):
        with pytest.raises(ValidationError):
            Verdict(question_id=0, answer="no")

    def test_yes_forbids_correction(self):
        with pytest.raises(ValidationError):
            Verdict(question_id=0, answer="yes", correction="fridge")

    def test_bad_answer(self):
        with pytest.raises(ValidationError):
            Verdict(question_id=0, answer="maybe")


class TestRenderQuestion:
    def test_known_relation_template(self):
        kb = seeded_kb()
        text = render_question(TemplateRegistry(), kb.vocabulary, Triple(0, 0, 1))
        assert text == "Is the apple in the kitchen?"

    def test_unknown_relation_falls_back_generic(self):
        kb = seeded_kb()
        kb.vocabulary.register_relation("weirdRel")
        text = render_question(TemplateRegistry(), kb.vocabulary, Triple(0, 1, 2))
        assert text == "Is it true that apple weirdRel fridge?"

    def test_deterministic(self):
        kb = seeded_kb()
        reg = TemplateRegistry()
        t = Triple(0, 0, 2)
        assert render_question(reg, kb.vocabulary, t) == render_question(reg, kb.vocabulary, t)

    def test_template_file_override(self, tmp_path):
        f = tmp_path / "templates.tsv"
        f.write_text("objInLoc\tWhere oh where is the {head}? In the {tail}?\tTell me where {head} is\n")
        reg = TemplateRegistry.from_file(f)
        kb = seeded_kb()
        assert render_question(reg, kb.vocabulary, Triple(0, 0, 1)).startswith("Where oh where")


class TestPhaseA:
    def test_empty_kb_registers_entity_without_questions(self):
        kb = KnowledgeBase()
        params = init_params(0, 0, 8, 2, seed=0)
        params, questions = phase_a(params, kb, "mug", rng=np.random.default_rng(0))
        assert questions == []
        assert kb.vocabulary.has_entity("mug")
        assert params.num_entities == 1

    def test_question_count_capped_by_relation_count(self):
        kb = seeded_kb()
        params = init_params(4, 1, 8, 2, seed=0)
        params, questions = phase_a(params, kb, "apple", rng=np.random.default_rng(0), questions_per_detection=3)
        assert len(questions) == 1

    def test_never_predicts_the_head_itself(self):
        kb = seeded_kb()
        params = init_params(4, 1, 8, 2, seed=1)
        for seed in range(10):
            _, questions = phase_a(params, kb, "apple", rng=np.random.default_rng(seed))
            for q in questions:
                assert q.triple.tail != q.triple.head

    def test_predicted_tail_is_trained_argmax(self):
        # train a tiny model whose single positive dominates the ranking
        kb = seeded_kb()
        params = init_params(4, 1, 8, 2, seed=2)
        config = TrainConfig(dim=8, num_block_pairs=2, max_epochs=150, patience=150, seed=3)
        dataset = SessionDataset(0, [Triple(0, 0, 1)], [], [])
        params, _ = train_session(params, dataset, None, config, known_positives=kb.positives)
        assert score(params, 0, 0, 1) == max(score(params, 0, 0, t) for t in range(4))
        _, questions = phase_a(params, kb, "apple", rng=np.random.default_rng(4))
        assert questions[0].triple == Triple(0, 0, 1)
        assert questions[0].text == "Is the apple in the kitchen?"


class TestPhaseC:
    def test_yes_commits_prediction(self):
        kb = seeded_kb()
        q = Question(question_id=0, triple=Triple(0, 0, 3), text="?", created_at=0)
        committed, added = phase_c(kb, q, Verdict(0, "yes"), session=2)
        assert committed == Triple(0, 0, 3) and added
        assert q.state is QuestionState.CLOSED
        prov = dict(kb.journal)[committed]
        assert prov.source is Source.PREDICTED_CONFIRMED and prov.session == 2

    def test_no_commits_correction_and_registers_entity(self):
        kb = seeded_kb()
        q = Question(question_id=1, triple=Triple(0, 0, 3), text="?", created_at=0)
        committed, added = phase_c(kb, q, Verdict(1, "no", "cupboard"), session=1)
        assert kb.vocabulary.has_entity("cupboard")
        assert committed == Triple(0, 0, kb.vocabulary.entity_id("cupboard")) and added
        prov = dict(kb.journal)[committed]
        assert prov.source is Source.HUMAN_CORRECTED

    def test_closed_question_rejected(self):
        kb = seeded_kb()
        q = Question(question_id=2, triple=Triple(0, 0, 3), text="?", created_at=0)
        phase_c(kb, q, Verdict(2, "yes"))
        with pytest.raises(ProtocolError):
            phase_c(kb, q, Verdict(2, "yes"))

    def test_acknowledgment_fires(self):
        kb = seeded_kb()
        acks = []
        q = Question(question_id=3, triple=Triple(0, 0, 1), text="?", created_at=0)
        phase_c(kb, q, Verdict(3, "yes"), on_ack=lambda t, added: acks.append((t, added)))
        assert acks == [(Triple(0, 0, 1), False)]  # already in the kb


class TestQuestionStateMachine:
    @given(st.lists(st.sampled_from(list(QuestionState)), max_size=8))
    @settings(max_examples=100)
    def test_no_backward_transitions(self, sequence):
        order = {
            QuestionState.PENDING: 0,
            QuestionState.ANSWERED_YES: 1,
            QuestionState.AWAITING_CORRECTION: 1,
            QuestionState.CLOSED: 2,
        }
        q = Question(question_id=0, triple=Triple(0, 0, 0), text="?", created_at=0)
        for target in sequence:
            before = q.state
            try:
                q.advance(target)
            except ProtocolError:
                continue
            assert order[q.state] > order[before]


class TestSimulatedOracle:
    def test_true_fact_confirmed(self):
        kb = seeded_kb()
        q = Question(question_id=0, triple=Triple(0, 0, 1), text="?", created_at=0)
        verdict = simulated_oracle(kb, q, kb.vocabulary, np.random.default_rng(0))
        assert verdict.answer == "yes"

    def test_wrong_tail_corrected_with_true_one(self):
        kb = seeded_kb()
        q = Question(question_id=0, triple=Triple(0, 0, 2), text="?", created_at=0)
        verdict = simulated_oracle(kb, q, kb.vocabulary, np.random.default_rng(0))
        assert verdict.answer == "no"
        assert verdict.correction == "kitchen"

    def test_ungroundable_pair_discarded(self):
        kb = seeded_kb()
        q = Question(question_id=0, triple=Triple(1, 0, 2), text="?", created_at=0)  # kitchen objInLoc ?
        assert simulated_oracle(kb, q, kb.vocabulary, np.random.default_rng(0)) is None

    def test_deterministic_under_seed(self):
        kb = seeded_kb()
        kb.add(Triple(0, 0, 3), Source.IMPORTED)  # second true tail
        q = Question(question_id=0, triple=Triple(0, 0, 2), text="?", created_at=0)
        a = simulated_oracle(kb, q, kb.vocabulary, np.random.default_rng(9))
        b = simulated_oracle(kb, q, kb.vocabulary, np.random.default_rng(9))
        assert a == b

    def test_cross_vocabulary_translation(self):
        # asker and oracle intern the same names under different ids
        truth = KnowledgeBase()
        for name in ("table", "apple", "pantry"):
            truth.vocabulary.register_entity(name)
        truth.vocabulary.register_relation("objInLoc")
        truth.add(
            Triple(truth.vocabulary.entity_id("apple"), 0, truth.vocabulary.entity_id("pantry")),
            Source.IMPORTED,
        )
        asker = seeded_kb()
        q = Question(question_id=0, triple=Triple(0, 0, 1), text="?", created_at=0)
        verdict = simulated_oracle(truth, q, asker.vocabulary, np.random.default_rng(0))
        assert verdict.answer == "no" and verdict.correction == "pantry"
