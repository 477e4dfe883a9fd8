#!/usr/bin/env python3
"""Run the 6-session forgetting comparison and print both metric grids.

The sequential (classical) context finetunes on each session alone; the
continual context mixes a rehearsal sample of earlier sessions into every
epoch. The grids read top to bottom chronologically: row i holds the metrics
on every dev split seen up to session i.
"""

from __future__ import annotations

import argparse

from kgcl.benchmark import benchmark_sessions, benchmark_train_config, benchmark_world
from kgcl.training import run_curriculum


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--mode", choices=("classical", "continual", "both"), default="both")
    args = parser.parse_args()

    world = benchmark_world()
    sessions = benchmark_sessions(world)
    config = benchmark_train_config()
    print(f"world: {world.kb.stats()}  sessions: {[len(s.all_triples()) for s in sessions]}")

    modes = ("classical", "continual") if args.mode == "both" else (args.mode,)
    grids = {}
    for mode in modes:
        _, matrix, reports = run_curriculum(sessions, mode, config)
        grids[mode] = matrix
        print(f"\n=== {mode} context ===")
        print("epochs per session:", [f"{r.best_epoch}/{r.stopped_epoch}" for r in reports])
        for metric in ("hits10", "mrr"):
            print(f"\n{metric} grid:")
            print(matrix.to_grid_csv(metric))

    if len(grids) == 2:
        c0 = [row[0].hits10 for row in grids["classical"].rows]
        u0 = [row[0].hits10 for row in grids["continual"].rows]
        print("session-0 dev Hits@10, classical :", [f"{v:.3f}" for v in c0])
        print("session-0 dev Hits@10, continual :", [f"{v:.3f}" for v in u0])
        print(f"classical drop after session 4 : {c0[0] - c0[4]:+.3f}")
        print(f"continual final vs its peak    : {u0[-1] - max(u0):+.3f}")
        print(f"continual final vs classical   : {u0[-1] - c0[-1]:+.3f}")


if __name__ == "__main__":
    main()
