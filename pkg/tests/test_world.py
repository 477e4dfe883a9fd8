from __future__ import annotations

from collections import Counter

import pytest

from kgcl.errors import ConfigError
from kgcl.kb import Triple
from kgcl.world import (
    RELATION_SCHEMA,
    WorldSpec,
    entity_overlap,
    generate_world,
    load_sessions,
    make_sessions,
    save_sessions,
)


def test_single_object_world_has_exactly_three_facts():
    world = generate_world(WorldSpec(seed=1, room_count=1, object_count=1, novel_entity_fraction=0.0))
    assert len(world.kb) == 3
    rels = {world.kb.vocabulary.relation_name(t.relation) for t in world.triples()}
    assert rels == {"objInLoc", "hasMaterial", "hasColor"}


def test_same_seed_identical_worlds():
    spec = WorldSpec(seed=9, room_count=2, object_count=12)
    a, b = generate_world(spec), generate_world(spec)
    assert a.triples() == b.triples()
    assert a.kb.vocabulary.snapshot() == b.kb.vocabulary.snapshot()


def test_functional_relations_have_one_tail_per_head():
    world = generate_world(WorldSpec(seed=5, room_count=3, object_count=30))
    v = world.kb.vocabulary
    for rel_name in ("objInLoc", "hasMaterial", "hasColor"):
        rid = v.relation_id(rel_name)
        heads = Counter(t.head for t in world.triples() if t.relation == rid)
        assert heads and all(c == 1 for c in heads.values())


def test_every_object_fully_attributed():
    spec = WorldSpec(seed=3, room_count=2, object_count=20)
    world = generate_world(spec)
    v = world.kb.vocabulary
    for label in world.object_labels:
        oid = v.entity_id(label)
        facts = [t for t in world.triples() if t.head == oid]
        rels = Counter(v.relation_name(t.relation) for t in facts)
        assert rels["objInLoc"] == 1 and rels["hasMaterial"] == 1 and rels["hasColor"] == 1


def test_novel_wing_is_disjoint():
    world = generate_world(WorldSpec(seed=7, room_count=2, object_count=30, novel_entity_fraction=0.2))
    assert world.novel_entities
    for t in world.triples():
        touches_novel = t.head in world.novel_entities or t.tail in world.novel_entities
        if touches_novel:
            assert t.head in world.novel_entities and t.tail in world.novel_entities


class TestMakeSessions:
    def test_partition_property(self):
        world = generate_world(WorldSpec(seed=11, room_count=3, object_count=40))
        sessions = make_sessions(world, session_count=5, seed=0)
        combined: list[Triple] = []
        for ds in sessions:
            ds.validate_disjoint()
            combined += ds.all_triples()
        assert sorted(combined, key=lambda t: (t.head, t.relation, t.tail)) == sorted(
            world.triples(), key=lambda t: (t.head, t.relation, t.tail)
        )
        assert len(combined) == len(world.triples())

    def test_zero_novel_fraction_shares_entity_pool(self):
        world = generate_world(WorldSpec(seed=13, room_count=2, object_count=30, novel_entity_fraction=0.0))
        sessions = make_sessions(world, session_count=4, novel_fraction=0.0, seed=1)
        assert entity_overlap(sessions) > 0.5

    def test_novel_final_session_barely_overlaps(self):
        world = generate_world(WorldSpec(seed=17, room_count=3, object_count=60, novel_entity_fraction=0.2))
        sessions = make_sessions(world, session_count=6, novel_fraction=1.0, seed=2)
        assert entity_overlap(sessions) < 0.2

    def test_relation_affinity_concentrates_relations(self):
        world = generate_world(WorldSpec(seed=19, room_count=3, object_count=60, novel_entity_fraction=0.0))
        sessions = make_sessions(world, session_count=5, novel_fraction=0.0, relation_affinity=1.0, seed=3)
        for ds in sessions:
            rels = {t.relation for t in ds.all_triples()}
            assert len(rels) == 1

    def test_split_fractions_roughly_eighty_ten_ten(self):
        world = generate_world(WorldSpec(seed=23, room_count=3, object_count=60))
        sessions = make_sessions(world, session_count=4, seed=4)
        for ds in sessions:
            n = len(ds.all_triples())
            assert len(ds.dev) == pytest.approx(0.1 * n, abs=2)
            assert len(ds.test) == pytest.approx(0.1 * n, abs=2)
            assert len(ds.train) >= 0.7 * n

    def test_too_few_sessions_rejected(self):
        world = generate_world(WorldSpec(seed=1, room_count=1, object_count=3))
        with pytest.raises(ConfigError):
            make_sessions(world, session_count=1)


def test_manifest_roundtrip(tmp_path):
    world = generate_world(WorldSpec(seed=29, room_count=2, object_count=25))
    sessions = make_sessions(world, session_count=3, seed=5)
    manifest = save_sessions(world, sessions, tmp_path)
    kb, loaded = load_sessions(manifest)
    assert len(loaded) == len(sessions)
    src_vocab = world.kb.vocabulary
    for original, restored in zip(sessions, loaded):
        assert restored.session_index == original.session_index
        for split in ("train", "dev", "test"):
            orig_names = [
                (src_vocab.entity_name(t.head), src_vocab.relation_name(t.relation), src_vocab.entity_name(t.tail))
                for t in getattr(original, split)
            ]
            rest_names = [
                (
                    kb.vocabulary.entity_name(t.head),
                    kb.vocabulary.relation_name(t.relation),
                    kb.vocabulary.entity_name(t.tail),
                )
                for t in getattr(restored, split)
            ]
            assert orig_names == rest_names
    assert set(kb.vocabulary.relation_names()) <= set(RELATION_SCHEMA)
