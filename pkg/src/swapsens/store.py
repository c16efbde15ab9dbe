"""Canonical JSON, content hashes, the on-disk cache and report records.

The content hash of an object is the hex BLAKE2b digest (16-byte output) of
its canonical JSON encoding: ``json.dumps(obj, sort_keys=True,
separators=(",", ":"))`` in UTF-8.
"""
from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any


def canonical(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=_default)


def _default(x: Any):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (set, frozenset)):
        return sorted(x)
    if isinstance(x, tuple):
        return list(x)
    raise TypeError(f"cannot encode {type(x).__name__}")


def content_hash(obj: Any) -> str:
    return hashlib.blake2b(canonical(obj).encode(), digest_size=16).hexdigest()


class Cache:
    def __init__(self, root: str):
        self.root = os.path.join(root, ".cache")

    def put(self, obj: Any) -> str:
        h = content_hash(obj)
        os.makedirs(self.root, exist_ok=True)
        path = os.path.join(self.root, h + ".json")
        if not os.path.exists(path):
            with open(path, "w") as fh:
                fh.write(canonical(obj))
        return h

    def get(self, h: str) -> Any:
        with open(os.path.join(self.root, h + ".json")) as fh:
            return json.load(fh)


def _exact(x: Any) -> Any:
    return str(x) if isinstance(x, Fraction) else x


@dataclass
class Check:
    name: str
    lhs: Any
    op: str
    rhs: Any
    note: str = ""

    @property
    def holds(self) -> bool:
        a, b = self.lhs, self.rhs
        if self.op == "==":
            return a == b
        if self.op == "<=":
            return a <= b
        if self.op == ">=":
            return a >= b
        if self.op == "<":
            return a < b
        raise ValueError(self.op)

    def to_json(self) -> dict:
        out = {"name": self.name, "lhs": _exact(self.lhs), "op": self.op, "rhs": _exact(self.rhs), "holds": self.holds}
        if self.note:
            out["note"] = self.note
        return out


@dataclass
class Report:
    title: str
    stages: list = field(default_factory=list)
    checks: list = field(default_factory=list)
    measurements: list = field(default_factory=list)

    def check(self, name: str, lhs: Any, op: str, rhs: Any, note: str = "") -> Check:
        c = Check(name, lhs, op, rhs, note)
        self.checks.append(c)
        return c

    @property
    def ok(self) -> bool:
        return all(c.holds for c in self.checks)

    def to_json(self) -> dict:
        return {
            "title": self.title,
            "ok": self.ok,
            "stages": self.stages,
            "checks": [c.to_json() for c in self.checks],
            "measurements": self.measurements,
        }

    def to_text(self) -> str:
        lines = [f"# {self.title}"]
        for st in self.stages:
            lines.append(f"stage {st.get('stage')}: " + ", ".join(f"{k}={v}" for k, v in st.items() if k != "stage"))
        for c in self.checks:
            mark = "PASS" if c.holds else "FAIL"
            lines.append(f"{mark} {c.name}: {_exact(c.lhs)} {c.op} {_exact(c.rhs)}" + (f"  ({c.note})" if c.note else ""))
        for m in self.measurements:
            lines.append("measure " + ", ".join(f"{k}={v}" for k, v in m.items()))
        lines.append("all checks passed" if self.ok else "some checks FAILED")
        return "\n".join(lines)
