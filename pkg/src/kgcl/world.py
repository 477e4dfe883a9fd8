"""Seeded synthetic household world and its session partitioning.

The generator lays out rooms populated with everyday objects. Every object
gets exactly one location, one material and one color (functional facts);
objects flagged as containers hold a few co-located objects; neighbours on a
per-room ring are linked by a symmetric pair of proximity facts. When the
spec reserves a novel fraction, those objects live in an extra room of their
own with dedicated material/color pools, so their facts form a cluster over
entities the earlier sessions never mention.

`make_sessions` carves the ground truth into learning sessions: the final
session takes the novel cluster, the rest partition the shared triples,
either uniformly or grouped by relation (each relation has a home session,
which mirrors how consecutive real sessions tend to teach different kinds
of predicates).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, ValidationError
from .kb import KnowledgeBase, Source, Triple, read_triple_file, write_triple_file
from .training import SessionDataset

RELATION_SCHEMA = ("objInLoc", "hasMaterial", "hasColor", "canContain", "nearTo")

ROOM_NAMES = ("kitchen", "living_room", "bedroom", "bathroom", "office", "pantry", "hallway", "garage")
NOVEL_ROOM = "attic"

OBJECT_NOUNS = (
    "mug", "plate", "bottle", "fork", "knife", "spoon", "bowl", "cup", "pan", "pot",
    "kettle", "toaster", "sponge", "towel", "soap", "lamp", "book", "vase", "remote",
    "pillow", "blanket", "clock", "plant", "basket", "box", "jar", "can", "tray",
    "glass", "pitcher", "ladle", "whisk", "grater", "peeler", "scissors", "notebook",
    "pen", "pencil", "stapler", "folder", "cushion", "candle", "frame", "mirror",
    "brush", "comb", "hanger", "bucket", "mop", "broom",
)

MATERIALS = ("plastic", "wood", "metal", "glass_fiber", "ceramic", "fabric")
COLORS = ("red", "blue", "green", "yellow", "white", "black")
NOVEL_MATERIALS = ("bamboo", "marble")
NOVEL_COLORS = ("teal", "maroon")


@dataclass(frozen=True)
class WorldSpec:
    seed: int = 42
    room_count: int = 3
    object_count: int = 50
    materials: tuple[str, ...] = MATERIALS
    colors: tuple[str, ...] = COLORS
    novel_materials: tuple[str, ...] = NOVEL_MATERIALS
    novel_colors: tuple[str, ...] = NOVEL_COLORS
    novel_entity_fraction: float = 0.2
    container_fraction: float = 0.2

    def __post_init__(self) -> None:
        if self.room_count < 1 or self.object_count < 1:
            raise ConfigError("room and object counts must be >= 1")
        if self.room_count > len(ROOM_NAMES):
            raise ConfigError(f"at most {len(ROOM_NAMES)} rooms supported")
        if not 0.0 <= self.novel_entity_fraction <= 1.0:
            raise ConfigError("novel entity fraction must lie in [0, 1]")
        if not self.materials or not self.colors:
            raise ConfigError("material and color pools must be non-empty")


@dataclass
class World:
    """Ground-truth knowledge base plus the generator's bookkeeping."""

    spec: WorldSpec
    kb: KnowledgeBase
    rooms: list[str]
    objects: list[str]  # shared wing, detection order
    novel_objects: list[str]
    novel_entities: set[int] = field(default_factory=set)

    @property
    def object_labels(self) -> list[str]:
        return self.objects + self.novel_objects

    def triples(self) -> list[Triple]:
        return self.kb.triples()


def _object_names(count: int, start: int = 0) -> list[str]:
    names = []
    for i in range(start, start + count):
        noun = OBJECT_NOUNS[i % len(OBJECT_NOUNS)]
        suffix = i // len(OBJECT_NOUNS)
        names.append(noun if suffix == 0 else f"{noun}_{suffix + 1}")
    return names


def _populate_wing(
    kb: KnowledgeBase,
    rng: np.random.Generator,
    objects: list[str],
    rooms: list[str],
    materials: tuple[str, ...],
    colors: tuple[str, ...],
    container_fraction: float,
) -> None:
    rel = {name: kb.vocabulary.register_relation(name) for name in RELATION_SCHEMA}
    room_ids = [kb.vocabulary.register_entity(r) for r in rooms]
    by_room: dict[int, list[int]] = {rid: [] for rid in room_ids}

    for name in objects:
        oid = kb.vocabulary.register_entity(name)
        room = room_ids[int(rng.integers(len(room_ids)))]
        material = kb.vocabulary.register_entity(materials[int(rng.integers(len(materials)))])
        color = kb.vocabulary.register_entity(colors[int(rng.integers(len(colors)))])
        kb.add(Triple(oid, rel["objInLoc"], room), Source.IMPORTED)
        kb.add(Triple(oid, rel["hasMaterial"], material), Source.IMPORTED)
        kb.add(Triple(oid, rel["hasColor"], color), Source.IMPORTED)
        by_room[room].append(oid)

    # proximity ring per room, both directions
    for members in by_room.values():
        n = len(members)
        if n < 2:
            continue
        for i in range(n if n > 2 else 1):
            a, b = members[i], members[(i + 1) % n]
            kb.add(Triple(a, rel["nearTo"], b), Source.IMPORTED)
            kb.add(Triple(b, rel["nearTo"], a), Source.IMPORTED)

    # containers hold a few co-located objects
    for members in by_room.values():
        for oid in members:
            if len(members) < 2 or rng.random() >= container_fraction:
                continue
            others = [x for x in members if x != oid]
            k = min(len(others), 1 + int(rng.integers(3)))
            picks = rng.choice(len(others), size=k, replace=False)
            for p in picks:
                kb.add(Triple(oid, rel["canContain"], others[int(p)]), Source.IMPORTED)


def generate_world(spec: WorldSpec) -> World:
    """Deterministic ground truth for one seed.

    The shared wing is generated first so its entity ids form a contiguous
    prefix; the novel wing (when the fraction is positive) appends its own
    room, objects, materials and colors after it.
    """
    rng = np.random.default_rng(spec.seed)
    kb = KnowledgeBase()
    novel_count = int(round(spec.object_count * spec.novel_entity_fraction))
    shared_count = spec.object_count - novel_count
    if shared_count < 1:
        raise ConfigError("novel fraction leaves no shared objects")

    rooms = list(ROOM_NAMES[: spec.room_count])
    objects = _object_names(shared_count)
    _populate_wing(kb, rng, objects, rooms, spec.materials, spec.colors, spec.container_fraction)

    novel_objects: list[str] = []
    novel_entities: set[int] = set()
    if novel_count:
        before = kb.vocabulary.num_entities
        novel_objects = _object_names(novel_count, start=shared_count)
        _populate_wing(
            kb, rng, novel_objects, [NOVEL_ROOM], spec.novel_materials, spec.novel_colors,
            spec.container_fraction,
        )
        novel_entities = set(range(before, kb.vocabulary.num_entities))

    return World(
        spec=spec,
        kb=kb,
        rooms=rooms,
        objects=objects,
        novel_objects=novel_objects,
        novel_entities=novel_entities,
    )


def _split_session(
    index: int, triples: list[Triple], rng: np.random.Generator
) -> SessionDataset:
    n = len(triples)
    order = rng.permutation(n)
    shuffled = [triples[i] for i in order]
    n_dev = max(1, int(round(n * 0.1))) if n >= 3 else 0
    n_test = max(1, int(round(n * 0.1))) if n >= 4 else 0
    train = shuffled[: n - n_dev - n_test]
    dev = shuffled[n - n_dev - n_test : n - n_test]
    test = shuffled[n - n_test :]
    return SessionDataset(session_index=index, train=train, dev=dev, test=test)


def make_sessions(
    world: World,
    session_count: int = 6,
    novel_fraction: float = 0.8,
    seed: int | None = None,
    relation_affinity: float = 0.0,
) -> list[SessionDataset]:
    """Partition the world into chronologically ordered learning sessions.

    All but the last session share the entity pool; the last one draws at
    least ``novel_fraction`` of its triples from the reserved novel cluster
    (with ``novel_fraction`` = 0 everything is pooled together). Within the
    shared sessions, ``relation_affinity`` interpolates between a uniform
    partition (0.0) and grouping each relation's triples into its home
    session (1.0). Splits are 80/10/10 train/dev/test per session.
    """
    if session_count < 2:
        raise ConfigError("need at least two sessions")
    if not 0.0 <= novel_fraction <= 1.0:
        raise ConfigError("novel fraction must lie in [0, 1]")
    if not 0.0 <= relation_affinity <= 1.0:
        raise ConfigError("relation affinity must lie in [0, 1]")
    rng = np.random.default_rng(world.spec.seed + 1 if seed is None else seed)
    all_triples = world.triples()

    if novel_fraction > 0 and world.novel_entities:
        novel = [t for t in all_triples if t.head in world.novel_entities or t.tail in world.novel_entities]
        shared = [t for t in all_triples if not (t.head in world.novel_entities or t.tail in world.novel_entities)]
    else:
        novel = []
        shared = list(all_triples)

    # the final session may absorb shared triples as long as the novel share
    # stays at or above the requested fraction; without a reserved wing the
    # whole world is pooled across every session
    final: list[Triple] = list(novel)
    target = int(np.ceil(len(all_triples) / session_count))
    if novel:
        max_fill = int(len(novel) * (1.0 - novel_fraction) / novel_fraction) if novel_fraction > 0 else 0
        fill = min(max(0, target - len(novel)), max_fill, len(shared))
        if fill > 0:
            picks = rng.choice(len(shared), size=fill, replace=False)
            chosen = {int(i) for i in picks}
            final += [shared[i] for i in sorted(chosen)]
            shared = [t for i, t in enumerate(shared) if i not in chosen]

    shared_sessions = session_count - 1 if final else session_count
    buckets: list[list[Triple]] = [[] for _ in range(shared_sessions)]
    relation_home: dict[int, int] = {}
    by_relation: dict[int, int] = {}
    for t in shared:
        by_relation[t.relation] = by_relation.get(t.relation, 0) + 1
    for slot, rid in enumerate(sorted(by_relation, key=lambda r: (-by_relation[r], r))):
        relation_home[rid] = slot % shared_sessions
    for t in shared:
        if relation_affinity > 0 and rng.random() < relation_affinity:
            buckets[relation_home[t.relation]].append(t)
        else:
            buckets[int(rng.integers(shared_sessions))].append(t)

    sessions = [_split_session(i, bucket, rng) for i, bucket in enumerate(buckets)]
    if final:
        sessions.append(_split_session(shared_sessions, final, rng))
    for ds in sessions:
        if not ds.train:
            raise ValidationError(f"session {ds.session_index} ended up empty; use fewer sessions")
    return sessions


def entity_overlap(sessions: list[SessionDataset]) -> float:
    """Fraction of the final session's entities already seen earlier."""
    earlier: set[int] = set()
    for ds in sessions[:-1]:
        for t in ds.all_triples():
            earlier.update((t.head, t.tail))
    last: set[int] = set()
    for t in sessions[-1].all_triples():
        last.update((t.head, t.tail))
    if not last:
        return 0.0
    return len(last & earlier) / len(last)


# ----------------------------------------------------------------------
# Session manifest: a JSON file naming the split files of every session.
# ----------------------------------------------------------------------

def save_sessions(world: World, sessions: list[SessionDataset], out_dir: str | Path) -> Path:
    """Write per-split triple files plus a manifest; returns the manifest path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    vocab = world.kb.vocabulary
    entries = []
    for ds in sessions:
        entry: dict[str, object] = {"index": ds.session_index}
        for split_name in ("train", "dev", "test"):
            rows = [
                (vocab.entity_name(t.head), vocab.relation_name(t.relation), vocab.entity_name(t.tail))
                for t in getattr(ds, split_name)
            ]
            fname = f"sess_{ds.session_index}_{split_name}.tsv"
            write_triple_file(out / fname, rows)
            entry[split_name] = fname
        entries.append(entry)
    manifest = out / "manifest.json"
    manifest.write_text(json.dumps({"sessions": entries}, indent=2) + "\n", encoding="utf-8")
    return manifest


def load_sessions(manifest_path: str | Path) -> tuple[KnowledgeBase, list[SessionDataset]]:
    """Rebuild sessions from a manifest, interning names in file order.

    Returns a knowledge base holding the vocabulary and every listed triple
    (handy as the filter for evaluation) together with the datasets.
    """
    path = Path(manifest_path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read session manifest {path}: {exc}") from exc
    if not isinstance(doc, dict) or "sessions" not in doc:
        raise ValidationError(f"{path}: manifest must contain a 'sessions' list")
    kb = KnowledgeBase()
    datasets = []
    for entry in doc["sessions"]:
        splits: dict[str, list[Triple]] = {}
        for split_name in ("train", "dev", "test"):
            rows = read_triple_file(path.parent / entry[split_name])
            triples = []
            for h, r, t in rows:
                triple = Triple(
                    kb.vocabulary.register_entity(h),
                    kb.vocabulary.register_relation(r),
                    kb.vocabulary.register_entity(t),
                )
                kb.add(triple, Source.IMPORTED, session=int(entry["index"]))
                triples.append(triple)
            splits[split_name] = triples
        datasets.append(SessionDataset(session_index=int(entry["index"]), **splits))
    return kb, datasets
