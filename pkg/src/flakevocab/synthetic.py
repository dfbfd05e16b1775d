"""Synthetic test corpora with planted flakiness markers.

Each generated test is a small Python test method. A marker identifier
(``virtualTable`` by default) is planted in flaky tests with probability
``marker_flaky`` and in stable tests with ``marker_stable``; a few weaker
secondary markers are planted the same way. Everything else is drawn from a
shared neutral vocabulary, so documents differ in content, not shape.

Run ``python -m flakevocab.synthetic OUTDIR`` to write a dataset table plus
source files usable with the command-line tool.
"""

from __future__ import annotations

import argparse
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .ingest import EXTERNAL, FLAKY, NON_FLAKY, LabeledTest, write_dataset

NEUTRAL_WORDS = (
    "user account order item price cart session config setting value result "
    "record entry column row index schema column name type status flag count "
    "total limit offset page filter sort key field report format parser token "
    "buffer stream file path folder archive backup export import mapping list "
    "group role permission profile email address phone city country region "
    "invoice payment amount currency tax discount product catalog stock level"
).split()
NEUTRAL_VERBS = "get set load save check build create update delete parse read write compute validate make find".split()

FLAKY_SECONDARY = ("remoteSource", "waitForSync", "doQuery2", "sameResults", "asyncJob", "pollStatus")
STABLE_SECONDARY = ("mockClient", "localCache", "fakeClock", "stubReader", "inMemoryStore", "frozenTime")


@dataclass(frozen=True)
class SyntheticSpec:
    n_flaky: int = 1000
    n_stable: int = 3000
    marker: str = "virtualTable"
    marker_flaky: float = 0.65
    marker_stable: float = 0.04
    secondary_flaky: float = 0.35
    secondary_stable: float = 0.04
    min_statements: int = 4
    max_statements: int = 10


def _identifier(rng: np.random.Generator) -> str:
    verb = NEUTRAL_VERBS[rng.integers(len(NEUTRAL_VERBS))]
    noun = NEUTRAL_WORDS[rng.integers(len(NEUTRAL_WORDS))]
    if rng.random() < 0.5:
        return f"{verb}{noun.capitalize()}"
    return f"{verb}_{noun}"


def _statement(rng: np.random.Generator, ident: str) -> str:
    other = NEUTRAL_WORDS[rng.integers(len(NEUTRAL_WORDS))]
    choice = rng.integers(6)
    if choice == 0:
        return f"{other} = self.{ident}({int(rng.integers(1, 1000))})"
    if choice == 1:
        return f"self.assertEqual(self.{ident}(), {other})"
    if choice == 2:
        return f'self.{ident}("{other} {NEUTRAL_WORDS[rng.integers(len(NEUTRAL_WORDS))]} ok")'
    if choice == 3:
        return f"for {other} in self.{ident}():\n        self.assertTrue({other})"
    if choice == 4:
        return f"if {ident} is not None:\n        {other} = {ident}.{other}"
    return f"self.{ident}({other}, {rng.random():.2f})"


def generate_test(rng: np.random.Generator, flaky: bool, index: int, spec: SyntheticSpec) -> str:
    n = int(rng.integers(spec.min_statements, spec.max_statements + 1))
    idents = [_identifier(rng) for _ in range(n)]
    planted = []
    if rng.random() < (spec.marker_flaky if flaky else spec.marker_stable):
        planted.append(spec.marker)
    for word in FLAKY_SECONDARY:
        if rng.random() < (spec.secondary_flaky if flaky else spec.secondary_stable):
            planted.append(word)
    for word in STABLE_SECONDARY:
        if rng.random() < (spec.secondary_stable if flaky else spec.secondary_flaky):
            planted.append(word)
    while len(idents) < len(planted):
        idents.append(_identifier(rng))
    slots = rng.choice(len(idents), size=len(planted), replace=False)
    for slot, word in zip(slots, planted):
        idents[int(slot)] = word
    body = "\n    ".join(_statement(rng, ident) for ident in idents)
    return f"def test_case_{index}(self):\n    {body}\n"


def generate_corpus(seed: int = 0, spec: SyntheticSpec | None = None) -> list[LabeledTest]:
    """Labeled synthetic tests, flaky first then stable, ids ``synthetic_00000``..."""
    spec = spec or SyntheticSpec()
    rng = np.random.Generator(np.random.PCG64(seed))
    labels = [True] * spec.n_flaky + [False] * spec.n_stable
    dataset = []
    for i, flaky in enumerate(labels):
        dataset.append(
            LabeledTest(
                test_id=f"synthetic_{i:05d}",
                source_text=generate_test(rng, flaky, i, spec),
                label=FLAKY if flaky else NON_FLAKY,
                provenance=EXTERNAL,
                source_path=f"sources/synthetic_{i:05d}.py",
            )
        )
    return dataset


def write_corpus(dataset: list[LabeledTest], out_dir: str | Path) -> Path:
    out_dir = Path(out_dir)
    (out_dir / "sources").mkdir(parents=True, exist_ok=True)
    for t in dataset:
        (out_dir / t.source_path).write_text(t.source_text, encoding="utf-8")
    table = out_dir / "dataset.csv"
    write_dataset(dataset, table)
    return table


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="Write a synthetic planted-marker test corpus.")
    parser.add_argument("out_dir")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--n-flaky", type=int, default=1000)
    parser.add_argument("--n-stable", type=int, default=3000)
    args = parser.parse_args(argv)
    spec = SyntheticSpec(n_flaky=args.n_flaky, n_stable=args.n_stable)
    print(write_corpus(generate_corpus(args.seed, spec), args.out_dir))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
