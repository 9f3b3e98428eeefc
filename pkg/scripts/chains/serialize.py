"""JSON documents for finite kernels, distributions and functions."""
from __future__ import annotations

import json
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, List, Union

import jsonschema

from scripts.chains.finite_mcmc import FiniteDist, FiniteKernel, RealFunction
from scripts.errors import ConfigError

SCHEMA_DIR = Path(__file__).resolve().parent.parent.parent / "schema"
FINITE_OBJECT_SCHEMA = SCHEMA_DIR / "finite_object.schema.json"

FiniteObject = Union[FiniteDist, FiniteKernel, RealFunction]


@lru_cache(maxsize=None)
def load_validator(schema_path: Path) -> jsonschema.Draft202012Validator:
    schema = json.loads(Path(schema_path).read_text(encoding="utf-8"))
    return jsonschema.Draft202012Validator(schema)


def validation_errors(document: Dict[str, Any], schema_path: Path) -> List[str]:
    """Schema violations of ``document`` as readable messages."""
    validator = load_validator(Path(schema_path))
    return [
        f"{'/'.join(str(p) for p in err.absolute_path) or '<root>'}: {err.message}"
        for err in validator.iter_errors(document)
    ]


def _label(raw: Any) -> Any:
    return tuple(_label(x) for x in raw) if isinstance(raw, list) else raw


def to_document(obj: FiniteObject) -> Dict[str, Any]:
    document = obj.to_dict()
    document["labels"] = [list(x) if isinstance(x, tuple) else x for x in document["labels"]]
    return document


def from_document(document: Dict[str, Any]) -> FiniteObject:
    errors = validation_errors(document, FINITE_OBJECT_SCHEMA)
    if errors:
        raise ConfigError("; ".join(errors))
    labels = [_label(x) for x in document["labels"]]
    kind = document["kind"]
    if kind == "dist":
        return FiniteDist(document["probs"], labels)
    if kind == "kernel":
        return FiniteKernel.from_rows(document["rows"], labels)
    return RealFunction(document["values"], labels)


def load(path: Path) -> FiniteObject:
    return from_document(json.loads(Path(path).read_text(encoding="utf-8")))


def save(obj: FiniteObject, path: Path) -> None:
    Path(path).write_text(json.dumps(to_document(obj), indent=2), encoding="utf-8")
