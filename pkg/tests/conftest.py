from __future__ import annotations

import functools

import pytest

from bfo.checker import check_program
from bfo.corpus import corpus_root, load_manifest
from bfo.explore import explore
from bfo.parser import parse
from bfo.translate import translate_program
from bfo.tsemantics import DEFAULT_DOMAIN

CORPUS = corpus_root()
ENTRIES = load_manifest()


def source(rel: str) -> str:
    return (CORPUS / rel).read_text(encoding="utf-8")


@functools.lru_cache(maxsize=None)
def typed(rel: str):
    return check_program(parse(source(rel)))


@functools.lru_cache(maxsize=None)
def target(rel: str):
    return translate_program(typed(rel))


@functools.lru_cache(maxsize=None)
def explored(rel: str, domain: tuple = DEFAULT_DOMAIN, fuel: int = 64):
    """Exploration results are shared by every test in the session; the loop programs are slow."""
    return explore(target(rel), domain, fuel)


def rel(entry) -> str:
    return str(entry.path.relative_to(CORPUS))


def checked_sources():
    seen, out = set(), []
    for e in ENTRIES:
        if e.is_source and e.checks and rel(e) not in seen:
            seen.add(rel(e))
            out.append(e)
    return out


def by_name(name: str):
    for e in ENTRIES:
        if e.name == name:
            return e
    raise KeyError(name)


@pytest.fixture
def corpus():
    return CORPUS
