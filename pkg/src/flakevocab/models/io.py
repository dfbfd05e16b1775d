"""Model files.

Layout: one header line ``FLAKEVOCAB-MODEL <version> sha256=<hex>`` followed
by a canonical JSON body (sorted keys, no whitespace). The checksum covers
the body. Floats are written with ``repr`` precision, so a load/dump cycle
reproduces the file byte for byte.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .baseline import BaselineModel
from .boosting import GBTModel
from .forest import RandomForestModel

MAGIC = "FLAKEVOCAB-MODEL"
FORMAT_VERSION = 1

_KINDS = {"forest": RandomForestModel, "gbt": GBTModel, "baseline": BaselineModel}


class ModelFileError(ValueError):
    pass


class ChecksumError(ModelFileError):
    pass


class VersionError(ModelFileError):
    pass


@dataclass
class ModelBundle:
    """A trained model plus everything needed to featurize new tests."""

    model: RandomForestModel | GBTModel | BaselineModel
    scheme: str
    vocabulary: str = ""
    keywords: list[str] = field(default_factory=list)
    language: str = "python"
    config: dict = field(default_factory=dict)

    @property
    def vocabulary_sha256(self) -> str:
        return hashlib.sha256(self.vocabulary.encode("utf-8")).hexdigest()


def dumps(bundle: ModelBundle) -> bytes:
    body = {
        "format_version": FORMAT_VERSION,
        "kind": bundle.model.kind,
        "scheme": bundle.scheme,
        "vocabulary_sha256": bundle.vocabulary_sha256,
        "vocabulary": bundle.vocabulary,
        "keywords": list(bundle.keywords),
        "language": bundle.language,
        "config": bundle.config,
        "model": bundle.model.to_dict(),
    }
    text = json.dumps(body, sort_keys=True, separators=(",", ":"), allow_nan=False)
    digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
    return f"{MAGIC} {FORMAT_VERSION} sha256={digest}\n{text}\n".encode("utf-8")


def loads(data: bytes) -> ModelBundle:
    try:
        header, body = data.decode("utf-8").split("\n", 1)
    except (UnicodeDecodeError, ValueError):
        raise ModelFileError("not a model file") from None
    parts = header.split(" ")
    if len(parts) != 3 or parts[0] != MAGIC or not parts[2].startswith("sha256="):
        raise ModelFileError("not a model file (bad header)")
    if parts[1] != str(FORMAT_VERSION):
        raise VersionError(
            f"model file format version {parts[1]} is not supported (expected {FORMAT_VERSION})"
        )
    body = body.rstrip("\n")
    if hashlib.sha256(body.encode("utf-8")).hexdigest() != parts[2][len("sha256="):]:
        raise ChecksumError("model file checksum mismatch; the file is corrupted or was modified")
    d = json.loads(body)
    if d.get("format_version") != FORMAT_VERSION:
        raise VersionError(f"model body declares version {d.get('format_version')}")
    if hashlib.sha256(d["vocabulary"].encode("utf-8")).hexdigest() != d["vocabulary_sha256"]:
        raise ChecksumError("embedded vocabulary does not match its recorded hash")
    model = _KINDS[d["kind"]].from_dict(d["model"])
    return ModelBundle(model, d["scheme"], d["vocabulary"], d["keywords"], d["language"], d["config"])


def save(bundle: ModelBundle, path: str | Path) -> None:
    Path(path).write_bytes(dumps(bundle))


def load(path: str | Path) -> ModelBundle:
    return loads(Path(path).read_bytes())
