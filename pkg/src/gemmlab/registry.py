"""Kernel variant metadata: loading, validation and lookup by flavour.

Metadata files are single JSON objects with the keys ``name``, ``file``,
``type``, ``transA``, ``transB``, ``dj`` and ``di``. Any other key is ignored
so that files carrying extra annotations load unmodified.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator

from .errors import ConfigError, ParseError, SchemaError

PRECISIONS = ("S", "D")
LAYOUTS = ("N", "T")

# JSON key -> KernelSpec attribute
_KEYS = {
    "name": "name",
    "file": "source_id",
    "type": "precision",
    "transA": "trans_a",
    "transB": "trans_b",
    "dj": "d_j",
    "di": "d_i",
}


@dataclass(frozen=True)
class Flavour:
    precision: str
    trans_a: str
    trans_b: str

    @classmethod
    def parse(cls, text: str) -> "Flavour":
        """Parse ``"SGEMM NT"``, ``"SGEMM_NT"`` or ``"DGEMM_NN"``."""
        cleaned = text.strip().upper().replace("_", " ").replace("-", " ")
        parts = cleaned.split()
        if len(parts) == 1 and len(parts[0]) == 7:
            parts = [parts[0][:5], parts[0][5:]]
        if (
            len(parts) != 2
            or len(parts[0]) != 5
            or parts[0][1:] != "GEMM"
            or parts[0][0] not in PRECISIONS
            or len(parts[1]) != 2
            or any(c not in LAYOUTS for c in parts[1])
        ):
            raise ValueError(f"not a GEMM flavour: {text!r}")
        return cls(parts[0][0], parts[1][0], parts[1][1])

    def __str__(self) -> str:
        return f"{self.precision}GEMM {self.trans_a}{self.trans_b}"


@dataclass(frozen=True)
class KernelSpec:
    name: str
    source_id: str
    precision: str
    trans_a: str
    trans_b: str
    d_j: int
    d_i: int

    def __post_init__(self):
        for attr, key in (("name", "name"), ("source_id", "file")):
            value = getattr(self, attr)
            if not isinstance(value, str) or not value:
                raise SchemaError(key, f"field {key!r} must be a non-empty string")
        if self.precision not in PRECISIONS:
            raise SchemaError("type", f"field 'type' must be one of {PRECISIONS}, got {self.precision!r}")
        for attr, key in (("trans_a", "transA"), ("trans_b", "transB")):
            if getattr(self, attr) not in LAYOUTS:
                raise SchemaError(key, f"field {key!r} must be one of {LAYOUTS}, got {getattr(self, attr)!r}")
        for attr, key in (("d_j", "dj"), ("d_i", "di")):
            value = getattr(self, attr)
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise SchemaError(key, f"field {key!r} must be a positive integer, got {value!r}")

    @property
    def flavour(self) -> Flavour:
        return Flavour(self.precision, self.trans_a, self.trans_b)

    @classmethod
    def from_json_dict(cls, obj: dict) -> "KernelSpec":
        if not isinstance(obj, dict):
            raise ParseError("kernel metadata must be a JSON object")
        kwargs = {}
        for key, attr in _KEYS.items():
            if key not in obj:
                raise SchemaError(key, f"missing field {key!r}")
            kwargs[attr] = obj[key]
        return cls(**kwargs)

    def to_json_dict(self) -> dict:
        return {key: getattr(self, attr) for key, attr in _KEYS.items()}


def load_spec(path: str | os.PathLike) -> KernelSpec:
    try:
        with open(path, encoding="utf-8") as f:
            obj = json.load(f)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: malformed JSON: {exc}") from exc
    return KernelSpec.from_json_dict(obj)


class KernelRegistry:
    """Immutable, name-indexed collection of kernel specs."""

    def __init__(self, specs: Iterable[KernelSpec] = ()):
        by_name: dict[str, KernelSpec] = {}
        for spec in specs:
            if spec.name in by_name:
                raise SchemaError("name", f"duplicate kernel name {spec.name!r}")
            by_name[spec.name] = spec
        self._specs = dict(sorted(by_name.items()))

    @classmethod
    def from_directory(cls, directory: str | os.PathLike) -> "KernelRegistry":
        directory = Path(directory)
        if not directory.is_dir():
            raise ConfigError(f"dataset directory not found: {directory}")
        return cls(load_spec(p) for p in sorted(directory.glob("*.json")))

    @classmethod
    def bundled(cls) -> "KernelRegistry":
        root = resources.files("gemmlab") / "dataset"
        specs = []
        for entry in sorted(root.iterdir(), key=lambda e: e.name):
            if entry.name.endswith(".json"):
                try:
                    obj = json.loads(entry.read_text(encoding="utf-8"))
                except json.JSONDecodeError as exc:
                    raise ParseError(f"{entry.name}: malformed JSON: {exc}") from exc
                specs.append(KernelSpec.from_json_dict(obj))
        return cls(specs)

    def __iter__(self) -> Iterator[KernelSpec]:
        return iter(self._specs.values())

    def __len__(self) -> int:
        return len(self._specs)

    def __contains__(self, name: object) -> bool:
        return name in self._specs

    def names(self) -> list[str]:
        return list(self._specs)

    def get(self, name: str) -> KernelSpec:
        try:
            return self._specs[name]
        except KeyError:
            raise ConfigError(f"unknown kernel {name!r}") from None

    def lookup(self, flavour: Flavour) -> list[KernelSpec]:
        return [s for s in self._specs.values() if s.flavour == flavour]

    def flavours(self) -> list[Flavour]:
        return sorted({s.flavour for s in self}, key=str)


def registry_lookup(registry: KernelRegistry, flavour: Flavour) -> list[KernelSpec]:
    return registry.lookup(flavour)
