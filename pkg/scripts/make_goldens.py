#!/usr/bin/env python3
"""Regenerate the frozen fixtures under tests/data/.

Run this only when the generator intentionally changes; the test suite
compares fresh generator output against these files byte for byte.
"""

from __future__ import annotations

import json
from pathlib import Path

from kgcl.benchmark import benchmark_sessions, benchmark_world, golden_world
from kgcl.world import entity_overlap

DATA_DIR = Path(__file__).resolve().parents[1] / "tests" / "data"


def main() -> None:
    DATA_DIR.mkdir(parents=True, exist_ok=True)

    world = golden_world()
    count = world.kb.export_triples(DATA_DIR / "golden_world_seed42.tsv")
    print(f"golden world: {count} triples -> golden_world_seed42.tsv")

    bench = benchmark_world()
    sessions = benchmark_sessions(bench)
    summary = {
        "world_triples": len(bench.kb),
        "world_entities": bench.kb.vocabulary.num_entities,
        "session_sizes": [
            {"train": len(s.train), "dev": len(s.dev), "test": len(s.test)} for s in sessions
        ],
        "final_session_entity_overlap": entity_overlap(sessions),
    }
    (DATA_DIR / "benchmark_summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(f"benchmark summary -> benchmark_summary.json: {summary}")


if __name__ == "__main__":
    main()
