"""Bundled benchmark corpus: figure programs, the table programs and their expected outcomes."""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass, field
from pathlib import Path

from .ownership import OwnType
from .parser import type_from_text

SCHEMA = "bfo-corpus/1"


def corpus_root() -> Path:
    env = os.environ.get("BFO_CORPUS")
    if env:
        return Path(env)
    return Path(__file__).resolve().parent / "corpus"


@dataclass(frozen=True)
class Entry:
    name: str
    path: Path
    group: str  # figure | table
    checks: bool = True
    safety: str | None = None
    program: str | None = None
    consort: bool | None = None
    rusthorn: bool | None = None
    error: str | None = None
    golden: Path | None = None
    listings: tuple[Path, ...] = ()
    env_comments: bool = False
    fail_reachable: bool | None = None
    audit_own_sum: int | None = None
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def is_source(self) -> bool:
        return self.path.suffix == ".bfo"

    def text(self) -> str:
        return self.path.read_text(encoding="utf-8")


def load_manifest(root: Path | None = None) -> list[Entry]:
    root = root or corpus_root()
    data = json.loads((root / "manifest.json").read_text(encoding="utf-8"))
    if data.get("schema") != SCHEMA:
        raise ValueError(f"unsupported corpus manifest schema {data.get('schema')!r}")
    out = []
    known = set(Entry.__dataclass_fields__)
    for raw in data["entries"]:
        raw = dict(raw)
        kw = {k: v for k, v in raw.items() if k in known}
        kw["path"] = root / raw["path"]
        if raw.get("golden"):
            kw["golden"] = root / raw["golden"]
        kw["listings"] = tuple(root / p for p in raw.get("listings", ()))
        kw["extra"] = {k: v for k, v in raw.items() if k not in known}
        out.append(Entry(**kw))
    return out


def table_entries(root: Path | None = None) -> list[Entry]:
    return [e for e in load_manifest(root) if e.group == "table"]


def safe_programs(root: Path | None = None) -> list[Entry]:
    return [e for e in load_manifest(root) if e.is_source and e.checks and e.safety != "unsafe"]


# ---------------------------------------------------------------- env comments

_BINDING = re.compile(r"([A-Za-z_][\w']*)\s*:\s*(int|ref<[^>]*>)")


@dataclass(frozen=True)
class EnvExpectation:
    line: int
    bindings: dict  # variable -> OwnType
    disposed: frozenset


def env_expectations(text: str) -> list[EnvExpectation]:
    """Environment comments such as `// x:ref<α,1>` or `// dispose p, q; z:ref<α,1>`.

    A comment on a line of its own describes the environment after the closest code
    line above it.
    """
    out = []
    last_code = None
    for n, line in enumerate(text.splitlines(), 1):
        code, sep, comment = line.partition("//")
        if code.strip():
            last_code = n
        if not sep or last_code is None:
            continue
        bindings: dict[str, OwnType] = {}
        disposed: set[str] = set()
        for part in comment.split(";"):
            part = part.strip()
            if part.startswith("dispose"):
                disposed.update(x.strip() for x in part[len("dispose"):].split(",") if x.strip())
                continue
            for name, ty in _BINDING.findall(part):
                bindings[name] = type_from_text(ty)
        if bindings or disposed:
            out.append(EnvExpectation(last_code, bindings, frozenset(disposed)))
    return out
