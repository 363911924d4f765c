#!/usr/bin/env python3
"""Regenerates fixtures/study_profiles.json and fixtures/study_records/.

The records are synthetic rater answers chosen so that the bias report over
them lands on the published aggregate figures. Output is deterministic.
"""
import json
import random
import statistics
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
N_RATERS = 10
N_COMPONENTS = 6
TRAITS = ["goal_commitment", "motivation", "self_efficacy", "stress"]
LEVEL = {"L": 0, "M": 1, "H": 2}

# Knowledge, GC, MO, SE, ST
PROFILES = {
    "S1": "MHMLL", "S2": "LLLHH", "S3": "HLHHL", "S4": "HLMLH", "S5": "MHHHH",
    "S6": "LLLLL", "S7": "MMLHL", "S8": "LHMMM", "S9": "LHLLH",
}

# Wrong knowledge bits per profile, summed over all raters.
WRONG_BITS = {
    "ours": [5, 4, 3, 13, 0, 0, 13, 0, 0],
    "baseline": [5, 0, 0, 8, 1, 6, 4, 0, 0],
}

# Per-cell mean absolute trait error (profile-major, trait-minor).
OURS_TRAIT_BIG = {("S3", 0): 4.9, ("S4", 0): 4.3, ("S9", 0): 4.1}
OURS_TRAIT_REST = [
    0.4, 0.5, 0.6, 0.6, 0.7, 0.8, 0.8, 0.9, 1.0, 1.0, 1.1, 1.1, 1.2, 1.2, 1.2, 1.3, 1.3,
    1.3, 1.3, 1.4, 1.5, 1.6, 1.8, 2.0, 2.2, 2.5, 2.8, 3.0, 3.2, 3.4, 3.6, 3.8, 4.0,
]

# Per-profile believability means for the three statements.
BELIEVABILITY = {
    "ours": [
        [3.9, 3.0, 3.7, 3.3, 4.1, 3.2, 3.8, 3.6, 3.8],
        [3.8, 3.1, 3.6, 3.3, 3.9, 3.2, 3.6, 3.5, 3.5],
        [3.6, 2.9, 3.5, 3.1, 3.8, 3.0, 3.5, 3.6, 3.6],
    ],
    "baseline": [
        [3.1, 2.6, 3.0, 2.7, 3.3, 2.6, 3.0, 2.9, 2.9],
        [3.0, 2.5, 2.9, 2.6, 3.2, 2.5, 2.9, 2.9, 2.7],
        [2.8, 2.4, 2.6, 2.5, 3.0, 2.3, 2.7, 2.6, 2.5],
    ],
}


def knowledge(level):
    acquired = {0: 0, 1: (N_COMPONENTS + 1) // 2, 2: N_COMPONENTS}[level]
    return [i < acquired for i in range(N_COMPONENTS)]


def profile(pid, name, levels, pipeline):
    ratings = {}
    for t, key in enumerate(TRAITS):
        r = 1 + 2 * LEVEL[levels[t + 1]]
        ratings[key] = [r, r, r]
    return {
        "schema": 1,
        "id": pid,
        "name": name,
        "initial_knowledge": knowledge(LEVEL[levels[0]]),
        "ratings": ratings,
        "trait_overview": {"text": "", "edited": False, "generated_from": None},
        "pipeline": pipeline,
    }


def spread(total, rng, lo, hi):
    """N_RATERS integers in [lo, hi] summing to total, with some spread."""
    base, rem = divmod(total, N_RATERS)
    values = [base + 1] * rem + [base] * (N_RATERS - rem)
    for j in range(0, 4, 2):
        if values[j] < hi and values[j + 1] > lo:
            values[j] += 1
            values[j + 1] -= 1
    rng.shuffle(values)
    assert sum(values) == total and all(lo <= v <= hi for v in values)
    return values


def trait_cells(pipeline, rng):
    names = list(PROFILES)
    cells = {}
    if pipeline == "ours":
        rest = list(OURS_TRAIT_REST)
        rng.shuffle(rest)
        it = iter(rest)
        for p in names:
            for t in range(4):
                cells[(p, t)] = OURS_TRAIT_BIG.get((p, t)) or next(it)
    else:
        for p in names:
            for t in range(4):
                cells[(p, t)] = rng.randrange(2, 19) / 10
    return cells


def trait_errors(configured, mae, rng):
    total = round(mae * N_RATERS)
    limit = 6 if configured == 9 else 12
    errors = spread(total, rng, 0, limit)
    out = []
    for r, e in enumerate(errors):
        if configured == 3:
            out.append(configured + e)
        elif configured == 15:
            out.append(configured - e)
        else:
            out.append(configured + (e if r % 2 == 0 else -e))
    return out


def main():
    rng = random.Random(20240917)
    names = list(PROFILES)

    study_profiles = [profile(n, n, PROFILES[n], "ours") for n in names]
    (ROOT / "fixtures").mkdir(exist_ok=True)
    with open(ROOT / "fixtures" / "study_profiles.json", "w") as f:
        json.dump({"schema": 1, "profiles": study_profiles}, f, indent=2)
        f.write("\n")

    corpus = []
    for pipeline in ("baseline", "ours"):
        for n in names:
            corpus.append(profile(f"{n}-{pipeline}", n, PROFILES[n], pipeline))

    records = {r: [] for r in range(N_RATERS)}
    for pipeline in ("baseline", "ours"):
        cells = trait_cells(pipeline, rng)
        for i, n in enumerate(names):
            p = profile(n, n, PROFILES[n], pipeline)
            configured_k = p["initial_knowledge"]
            slots = [(r, c) for r in range(N_RATERS) for c in range(N_COMPONENTS)]
            rng.shuffle(slots)
            flipped = set(slots[: WRONG_BITS[pipeline][i]])

            sums = []
            for t, key in enumerate(TRAITS):
                sums.append(trait_errors(sum(p["ratings"][key]), cells[(n, t)], rng))

            beliefs = [
                spread(round(BELIEVABILITY[pipeline][s][i] * N_RATERS), rng, 1, 5)
                for s in range(3)
            ]
            for r in range(N_RATERS):
                predicted = [
                    (not b) if (r, c) in flipped else b for c, b in enumerate(configured_k)
                ]
                records[r].append({
                    "schema": 1,
                    "profile_id": f"{n}-{pipeline}",
                    "rater_id": f"R{r + 1:02d}",
                    "predicted_knowledge": predicted,
                    "predicted_trait_sums": [sums[t][r] for t in range(4)],
                    "believability": [beliefs[s][r] for s in range(3)],
                })

    out = ROOT / "fixtures" / "study_records"
    out.mkdir(exist_ok=True)
    with open(out / "profiles.json", "w") as f:
        json.dump({"schema": 1, "profiles": corpus}, f, indent=2)
        f.write("\n")
    for r in range(N_RATERS):
        with open(out / f"rater_{r + 1:02d}.json", "w") as f:
            json.dump({"schema": 1, "records": records[r]}, f, indent=1)
            f.write("\n")

    b1, b3 = BELIEVABILITY["ours"][0], BELIEVABILITY["ours"][2]
    print("r(B1,B3) ours =", round(statistics.correlation(b1, b3), 3))


if __name__ == "__main__":
    main()
