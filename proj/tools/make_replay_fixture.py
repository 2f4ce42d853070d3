"""Regenerates the synthetic replay fixture and its embedding table.

Usage: python tools/make_replay_fixture.py [out_dir]

The output is a pure function of the seed below; rerunning it must not change
data/replay_fixture.csv or data/replay_embeddings.csv.
"""
import csv
import random
import sys
from pathlib import Path

SEED = 20240611
NUM_ARMS = 12
RECORDS_PER_ARM = 40
EMBED_DIM = 8


def main(out_dir: Path) -> None:
    rng = random.Random(SEED)
    out_dir.mkdir(parents=True, exist_ok=True)
    latent = [[rng.gauss(0.0, 1.0) for _ in range(3)] for _ in range(NUM_ARMS)]
    mix = [[rng.gauss(0.0, 1.0) for _ in range(EMBED_DIM)] for _ in range(3)]

    with open(out_dir / "replay_fixture.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["arm_id", "len_tokens", "accuracy", "brevity"])
        for arm in range(NUM_ARMS):
            z = latent[arm]
            p_correct = min(0.95, max(0.05, 0.55 + 0.18 * z[0]))
            mean_len = max(40.0, 220.0 + 70.0 * z[1] + 40.0 * z[0])
            for _ in range(RECORDS_PER_ARM):
                correct = 1 if rng.random() < p_correct else 0
                length = max(1, int(round(rng.gauss(mean_len, 35.0))))
                # brevity column is recomputed from len_tokens by the harness
                w.writerow([arm, length, correct, 0])

    with open(out_dir / "replay_embeddings.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["arm_id"] + [f"e_{j + 1}" for j in range(EMBED_DIM)])
        for arm in range(NUM_ARMS):
            row = [sum(latent[arm][k] * mix[k][j] for k in range(3)) + rng.gauss(0.0, 0.05)
                   for j in range(EMBED_DIM)]
            w.writerow([arm] + [f"{v:.6f}" for v in row])


if __name__ == "__main__":
    main(Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "data")
