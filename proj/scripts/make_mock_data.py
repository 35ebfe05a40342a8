#!/usr/bin/env python3
"""Regenerates the scripted mock scenarios under data/.

Every file written here is deterministic; rerunning the script reproduces the
checked-in data byte for byte.
"""

import json
import pathlib

ROOT = pathlib.Path(__file__).resolve().parent.parent / "data"


def write_json(path, value):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(value, indent=2, sort_keys=True) + "\n")


def write_jsonl(path, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(json.dumps(r, sort_keys=True) + "\n" for r in rows))


def golden():
    """60 questions: 20 confident, 20 split between two answers, 20 scattered.

    Confident questions need no retrieval. Split questions are resolved by one
    retrieved passage. Scattered questions need two hops: the first passage
    names an intermediate entity whose own passage holds the answer.
    """
    scenario, dataset, corpus = {}, [], []

    for i in range(20):
        n = f"{i:02d}"
        qid = f"low-{n}"
        answer = f"Aldmere{n}"
        scenario[qid] = [[answer, 1.0]]
        # Every fifth confident answer is confidently wrong.
        gold = [f"Brackwater{n}"] if i % 5 == 0 else [answer]
        dataset.append({"id": qid, "question": f"What is the capital of the realm of Tarn{n}?", "answers": gold})

    for i in range(20):
        n = f"{i:02d}"
        qid = f"mid-{n}"
        scenario[qid] = {
            "pool": [[f"River Ash{n}", 0.5], [f"River Birch{n}", 0.5]],
            "with_context": [{"when_context_contains": f"Cedar{n}", "pool": [[f"the Cedar{n}", 1.0]]}],
        }
        dataset.append(
            {"id": qid, "question": f"Which river flows through the valley of Brook{n}?", "answers": [f"Cedar{n}"]}
        )
        corpus.append(
            {
                "doc_id": f"valley-{n}",
                "title": f"Valley of Brook{n}",
                "text": f"The river that flows through the valley of Brook{n} is the Cedar{n}.",
            }
        )

    for i in range(20):
        n = f"{i:02d}"
        qid = f"high-{n}"
        final = f"Master Quill{n} of the guild" if i % 2 else f"Master Quill{n}"
        scenario[qid] = {
            "pool": [[f"Candidate{n} option {j}", 0.1] for j in range(10)],
            "with_context": [
                {"when_context_contains": f"Quill{n}", "pool": [[final, 1.0]]},
                {"when_context_contains": f"Orrin{n}", "pool": [[f"Orrin{n}", 0.5], [f"Unknown{n}", 0.5]]},
            ],
        }
        dataset.append(
            {"id": qid, "question": f"Who trained the apprentice of guild Zephyr{n}?", "answers": [f"Master Quill{n}"]}
        )
        corpus.append(
            {
                "doc_id": f"guild-{n}",
                "title": f"Guild Zephyr{n}",
                "text": f"The apprentice of guild Zephyr{n} is Orrin{n}.",
            }
        )
        corpus.append(
            {"doc_id": f"mentor-{n}", "title": f"Orrin{n}", "text": f"Orrin{n} was taught by Master Quill{n}."}
        )

    write_json(ROOT / "golden" / "scenario.json", {"questions": scenario})
    write_jsonl(ROOT / "golden" / "golden.jsonl", dataset)
    write_jsonl(ROOT / "golden" / "corpus.jsonl", corpus)


SYNONYMS = [
    ["Kestrelport", "the Grey Harbor", "Old Saltgate", "the city of gulls"],
    ["Vantor Hale", "the Iron Chancellor", "Chancellor Hale", "old Vantor"],
    ["Miremoss", "the Sunken Fen", "Fen of Whispers", "the great bog"],
    ["Oskel Dray", "the Lantern Poet", "Dray the Elder", "poet laureate Oskel"],
    ["Tindra", "the Second Moon", "Pale Lantern", "the small moon"],
]


def synonym():
    """Answers that are lexically diverse but mean the same thing.

    The first fifteen questions sample four aliases of one entity; the last
    five split between two genuinely different answers that retrieval settles.
    """
    scenario, dataset, corpus, aliases = {}, [], [], []
    for i in range(15):
        n = f"{i:02d}"
        qid = f"syn-{n}"
        names = [f"{a} {n}" for a in SYNONYMS[i % len(SYNONYMS)]]
        aliases.append(names)
        scenario[qid] = [[names[0], 0.4], [names[1], 0.3], [names[2], 0.2], [names[3], 0.1]]
        dataset.append({"id": qid, "question": f"What is the landmark known as Marker{n}?", "answers": [names[0]]})
        corpus.append({"doc_id": f"marker-{n}", "title": f"Marker{n}", "text": f"Marker{n} is also called {names[1]}."})
    for i in range(15, 20):
        n = f"{i:02d}"
        qid = f"split-{n}"
        scenario[qid] = {
            "pool": [[f"Eastfold{n}", 0.5], [f"Westfold{n}", 0.5]],
            "with_context": [{"when_context_contains": f"Northfold{n}", "pool": [[f"Northfold{n}", 1.0]]}],
        }
        dataset.append({"id": qid, "question": f"Where was treaty Quorn{n} signed?", "answers": [f"Northfold{n}"]})
        corpus.append(
            {"doc_id": f"treaty-{n}", "title": f"Treaty Quorn{n}", "text": f"Treaty Quorn{n} was signed at Northfold{n}."}
        )
    write_json(ROOT / "synonym" / "scenario.json", {"questions": scenario})
    write_json(ROOT / "synonym" / "aliases.json", aliases)
    write_jsonl(ROOT / "synonym" / "synonym.jsonl", dataset)
    write_jsonl(ROOT / "synonym" / "corpus.jsonl", corpus)


def singleton():
    """Every sample is a different answer, so each forms its own cluster."""
    scenario, dataset, corpus = {}, [], []
    for i in range(20):
        n = f"{i:02d}"
        qid = f"solo-{n}"
        # Twenty uneven weights, none above 0.1, so ten samples are all distinct.
        weights = [1 + ((i + j) % 4) for j in range(20)]
        total = sum(weights)
        pool = [[f"Answer{n} {j:02d}", w / total] for j, w in enumerate(weights)]
        pool[-1][1] = 1.0 - sum(p for _, p in pool[:-1])
        scenario[qid] = {
            "pool": pool,
            "with_context": [{"when_context_contains": f"Answer{n} 00", "pool": [[f"Answer{n} 00", 1.0]]}],
        }
        dataset.append({"id": qid, "question": f"Which entry opens ledger Umber{n}?", "answers": [f"Answer{n} 00"]})
        corpus.append(
            {"doc_id": f"ledger-{n}", "title": f"Ledger Umber{n}", "text": f"Ledger Umber{n} opens with Answer{n} 00."}
        )
    write_json(ROOT / "singleton" / "scenario.json", {"questions": scenario})
    write_jsonl(ROOT / "singleton" / "singleton.jsonl", dataset)
    write_jsonl(ROOT / "singleton" / "corpus.jsonl", corpus)


def calibration():
    """Synthetic outcomes at three entropy levels, each correct under exactly one mode."""
    rows = []
    for entropy, mode in [(0.1, "none"), (0.6, "single"), (1.2, "multi")]:
        for _ in range(20):
            rows.append({
                "entropy": entropy,
                "correct_none": mode == "none",
                "correct_single": mode == "single",
                "correct_multi": mode == "multi",
            })
    write_jsonl(ROOT / "calibration" / "synthetic_202020.jsonl", rows)


if __name__ == "__main__":
    golden()
    synonym()
    singleton()
    calibration()
