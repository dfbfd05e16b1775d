"""Execution-history parsing, flaky labeling and dataset assembly.

Execution records are JSON Lines, one object per line::

    {"test_id": "t1", "build_id": "b7", "attempt": 0, "result": 1}

``result`` is 0 for a pass and 1 for a failure. ``attempt`` 0 is the initial
run and 1..3 are re-executions triggered by a failure.
"""

from __future__ import annotations

import csv
import json
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Mapping, Sequence

import numpy as np

FLAKY = "flaky"
NON_FLAKY = "non-flaky"
LABELS = (FLAKY, NON_FLAKY)

MASS = "mass-execution"
RERUN = "rerun"

MEAN_RULE = "mean-rule"
RERUN_RULE = "rerun-rule"
EXTERNAL = "external"
PROVENANCES = (MEAN_RULE, RERUN_RULE, EXTERNAL)

MAX_RERUN_ATTEMPT = 3
GLOBAL_MIN_TESTS = 1000

DATASET_COLUMNS = ("test_id", "label", "provenance", "source_path", "always_failing", "episodes")


class IngestError(ValueError):
    """Raised for malformed execution data or inconsistent datasets."""


@dataclass(frozen=True)
class ExecutionRecord:
    test_id: str
    build_id: str
    result: int
    attempt: int = 0
    timestamp: str | None = None


@dataclass(frozen=True)
class BuildStats:
    build_id: str
    n_total: int
    n_passed: int

    def __post_init__(self) -> None:
        if self.n_total < 0 or not 0 <= self.n_passed <= max(self.n_total, 0):
            raise IngestError(
                f"build {self.build_id!r}: need 0 <= n_passed <= n_total, "
                f"got n_passed={self.n_passed}, n_total={self.n_total}"
            )


@dataclass(frozen=True)
class RunHistory:
    test_id: str
    results: tuple[int, ...]
    mode: str = MASS

    def __post_init__(self) -> None:
        if not self.results:
            raise IngestError(f"history of {self.test_id!r} is empty")
        if any(r not in (0, 1) for r in self.results):
            raise IngestError(f"history of {self.test_id!r} has non-binary results")
        if self.mode not in (MASS, RERUN):
            raise IngestError(f"unknown history mode {self.mode!r}")

    @property
    def mean(self) -> float:
        return sum(self.results) / len(self.results)

    @property
    def always_failing(self) -> bool:
        return all(r == 1 for r in self.results)


@dataclass
class LabeledTest:
    test_id: str
    source_text: str
    label: str
    provenance: str = EXTERNAL
    source_path: str = ""
    always_failing: bool = False
    episodes: int = 0

    def __post_init__(self) -> None:
        if not self.source_text.strip():
            raise IngestError(f"test {self.test_id!r} has empty source text")
        if self.label not in LABELS:
            raise IngestError(f"test {self.test_id!r}: invalid label {self.label!r}")
        if self.provenance not in PROVENANCES:
            raise IngestError(f"test {self.test_id!r}: invalid provenance {self.provenance!r}")

    @property
    def is_flaky(self) -> bool:
        return self.label == FLAKY


def _int_field(row: dict, name: str, lineno: int) -> int:
    value = row.get(name)
    if isinstance(value, bool) or not isinstance(value, (int, str)):
        raise IngestError(f"line {lineno}: field {name!r} must be an integer")
    try:
        return int(value)
    except ValueError:
        raise IngestError(f"line {lineno}: field {name!r} must be an integer") from None


def parse_executions(stream: IO[bytes] | IO[str] | bytes | str) -> list[ExecutionRecord]:
    """Parse JSON Lines execution records, preserving input order.

    Blank lines are skipped. Any malformed row aborts parsing with an error
    naming its 1-based line number.
    """
    if isinstance(stream, (bytes, str)):
        data = stream
    else:
        data = stream.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")

    records: list[ExecutionRecord] = []
    seen: dict[tuple[str, str, int], int] = {}
    for lineno, line in enumerate(data.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
        except json.JSONDecodeError as exc:
            raise IngestError(f"line {lineno}: not valid JSON ({exc.msg})") from None
        if not isinstance(row, dict):
            raise IngestError(f"line {lineno}: expected an object")
        for key in ("test_id", "build_id"):
            if not isinstance(row.get(key), str) or not row[key]:
                raise IngestError(f"line {lineno}: missing or empty {key!r}")
        result = _int_field(row, "result", lineno)
        if result not in (0, 1):
            raise IngestError(f"line {lineno}: invalid result {row['result']!r}")
        attempt = _int_field(row, "attempt", lineno) if "attempt" in row else 0
        if attempt < 0:
            raise IngestError(f"line {lineno}: attempt must be non-negative")
        timestamp = row.get("timestamp")
        if timestamp is not None and not isinstance(timestamp, str):
            raise IngestError(f"line {lineno}: timestamp must be a string")

        key = (row["test_id"], row["build_id"], attempt)
        if key in seen:
            raise IngestError(
                f"line {lineno}: duplicate record for test {key[0]!r}, build {key[1]!r}, "
                f"attempt {attempt} (first seen on line {seen[key]})"
            )
        seen[key] = lineno
        records.append(ExecutionRecord(key[0], key[1], result, attempt, timestamp))
    return records


def label_mean_rule(history: RunHistory) -> str:
    """Flaky iff the mean result over repeated same-build runs is in (0, 1)."""
    if history.mode != MASS:
        raise IngestError("mean rule applies to mass-execution histories")
    if len(history.results) < 2:
        raise IngestError(f"insufficient executions for {history.test_id!r}")
    return FLAKY if 0.0 < history.mean < 1.0 else NON_FLAKY


def label_rerun_rule(history: RunHistory) -> str:
    """Flaky iff the initial run and its re-executions disagree."""
    if history.mode != RERUN:
        raise IngestError("rerun rule applies to rerun histories")
    if len(history.results) > MAX_RERUN_ATTEMPT + 1:
        raise IngestError(f"rerun history of {history.test_id!r} longer than 4 executions")
    return FLAKY if len(set(history.results)) == 2 else NON_FLAKY


def filter_global_issues(stats: Iterable[BuildStats]) -> set[str]:
    """Return ids of builds not suspected of a global issue.

    A build is kept when more than 99% of its tests passed and it executed
    more than 1000 tests; both comparisons are strict.
    """
    kept = set()
    for s in stats:
        if s.n_total == 0:
            raise IngestError(f"empty build {s.build_id!r}")
        # integer form of n_passed / n_total > 0.99, exact at the boundary
        if 100 * s.n_passed > 99 * s.n_total and s.n_total > GLOBAL_MIN_TESTS:
            kept.add(s.build_id)
    return kept


def build_stats(records: Sequence[ExecutionRecord]) -> list[BuildStats]:
    """Per-build counters from initial (attempt 0) executions, sorted by build id.

    A test counts as passed when its initial run passed.
    """
    total: dict[str, int] = defaultdict(int)
    passed: dict[str, int] = defaultdict(int)
    for r in records:
        if r.attempt == 0:
            total[r.build_id] += 1
            passed[r.build_id] += r.result == 0
    return [BuildStats(b, total[b], passed[b]) for b in sorted(total)]


def mass_histories(records: Sequence[ExecutionRecord]) -> list[RunHistory]:
    """One history per test, ordered by (attempt, input position)."""
    by_test: dict[str, list[tuple[int, int, ExecutionRecord]]] = defaultdict(list)
    for pos, r in enumerate(records):
        by_test[r.test_id].append((r.attempt, pos, r))
    histories = []
    for test_id in sorted(by_test):
        rows = sorted(by_test[test_id], key=lambda t: (t[0], t[1]))
        builds = {r.build_id for _, _, r in rows}
        if len(builds) > 1:
            raise IngestError(
                f"mass-execution history of {test_id!r} spans several builds: {sorted(builds)}"
            )
        histories.append(RunHistory(test_id, tuple(r.result for _, _, r in rows), MASS))
    return histories


def rerun_episodes(records: Sequence[ExecutionRecord]) -> dict[str, list[RunHistory]]:
    """Group rerun records into per-(test, build) episodes ordered by attempt."""
    episodes: dict[tuple[str, str], dict[int, int]] = defaultdict(dict)
    for r in records:
        if r.attempt > MAX_RERUN_ATTEMPT:
            raise IngestError(
                f"test {r.test_id!r} build {r.build_id!r}: attempt {r.attempt} exceeds {MAX_RERUN_ATTEMPT}"
            )
        episodes[(r.test_id, r.build_id)][r.attempt] = r.result
    out: dict[str, list[RunHistory]] = defaultdict(list)
    for (test_id, _build), attempts in sorted(episodes.items()):
        results = tuple(attempts[a] for a in sorted(attempts))
        out[test_id].append(RunHistory(test_id, results, RERUN))
    return dict(out)


@dataclass
class LabelOutcome:
    label: str
    provenance: str
    always_failing: bool = False
    episodes: int = 1


def label_records(records: Sequence[ExecutionRecord], mode: str) -> dict[str, LabelOutcome]:
    """Label every test in ``records`` under the given mode.

    In rerun mode, builds flagged by :func:`filter_global_issues` are dropped
    first, and a test is flaky if any of its episodes is flaky.
    """
    if mode in ("mass", MASS):
        out = {}
        for h in mass_histories(records):
            out[h.test_id] = LabelOutcome(label_mean_rule(h), MEAN_RULE, h.always_failing, 1)
        return out
    if mode != RERUN:
        raise IngestError(f"invalid mode {mode!r}; expected 'mass' or 'rerun'")

    kept = filter_global_issues(build_stats(records))
    retained = [r for r in records if r.build_id in kept]
    out = {}
    for test_id, episodes in rerun_episodes(retained).items():
        labels = [label_rerun_rule(h) for h in episodes]
        out[test_id] = LabelOutcome(
            FLAKY if FLAKY in labels else NON_FLAKY,
            RERUN_RULE,
            all(h.always_failing for h in episodes),
            len(episodes),
        )
    return out


def assemble_dataset(
    labels: Mapping[str, str | LabelOutcome],
    sources: Mapping[str, str],
    source_paths: Mapping[str, str] | None = None,
) -> list[LabeledTest]:
    """Join labels with source texts; output is sorted by test id."""
    missing = sorted(set(labels) - set(sources))
    if missing:
        raise IngestError(f"no source text for labeled tests: {', '.join(missing)}")
    dataset = []
    for test_id in sorted(labels):
        outcome = labels[test_id]
        if isinstance(outcome, str):
            outcome = LabelOutcome(outcome, EXTERNAL, False, 0)
        dataset.append(
            LabeledTest(
                test_id=test_id,
                source_text=sources[test_id],
                label=outcome.label,
                provenance=outcome.provenance,
                source_path=(source_paths or {}).get(test_id, ""),
                always_failing=outcome.always_failing,
                episodes=outcome.episodes,
            )
        )
    return dataset


def undersample(dataset: Sequence[LabeledTest], seed: int) -> list[LabeledTest]:
    """Randomly drop majority-class tests until both classes are the same size.

    Sampling is without replacement from a PCG64 generator seeded with
    ``seed``; retained tests keep their input order.
    """
    flaky = [i for i, t in enumerate(dataset) if t.is_flaky]
    other = [i for i, t in enumerate(dataset) if not t.is_flaky]
    if not flaky or not other:
        raise IngestError("cannot balance a single-class dataset")
    minority, majority = (flaky, other) if len(flaky) <= len(other) else (other, flaky)
    rng = np.random.Generator(np.random.PCG64(seed))
    chosen = rng.choice(len(majority), size=len(minority), replace=False)
    keep = set(minority) | {majority[int(j)] for j in chosen}
    return [t for i, t in enumerate(dataset) if i in keep]


def write_dataset(dataset: Sequence[LabeledTest], path: str | Path) -> None:
    """Write the dataset table as CSV; source text lives in ``source_path`` files."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(DATASET_COLUMNS)
        for t in dataset:
            writer.writerow(
                [t.test_id, t.label, t.provenance, t.source_path, int(t.always_failing), t.episodes]
            )


def read_dataset(path: str | Path) -> list[LabeledTest]:
    """Read a dataset table, loading source text relative to the table's folder."""
    path = Path(path)
    base = path.parent
    dataset = []
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"test_id", "label", "source_path"}
        if reader.fieldnames is None or not required <= set(reader.fieldnames):
            raise IngestError(f"{path}: dataset needs columns {sorted(required)}")
        for lineno, row in enumerate(reader, start=2):
            src = base / row["source_path"]
            try:
                text = src.read_text(encoding="utf-8")
            except OSError as exc:
                raise IngestError(f"{path}:{lineno}: cannot read source {src}: {exc.strerror}") from None
            try:
                dataset.append(
                    LabeledTest(
                        test_id=row["test_id"],
                        source_text=text,
                        label=row["label"],
                        provenance=row.get("provenance") or EXTERNAL,
                        source_path=row["source_path"],
                        always_failing=row.get("always_failing", "0") in ("1", "true", "True"),
                        episodes=int(row.get("episodes") or 0),
                    )
                )
            except IngestError as exc:
                raise IngestError(f"{path}:{lineno}: {exc}") from None
    return dataset


def read_source_map(path: str | Path) -> tuple[dict[str, str], dict[str, str]]:
    """Read a ``test_id,source_path`` CSV; returns (texts, paths relative to the map)."""
    path = Path(path)
    texts, paths = {}, {}
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"test_id", "source_path"} <= set(reader.fieldnames):
            raise IngestError(f"{path}: source map needs columns test_id, source_path")
        for row in reader:
            src = path.parent / row["source_path"]
            try:
                texts[row["test_id"]] = src.read_text(encoding="utf-8")
            except OSError as exc:
                raise IngestError(f"{path}: cannot read source {src}: {exc.strerror}") from None
            paths[row["test_id"]] = str(src.resolve())
    return texts, paths
