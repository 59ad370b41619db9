"""Shared fixtures: tiny corpus builders and a trained demo project.

The demo project is trained once per session and copied into each test's
tmp dir, so mutation tests never interfere with each other.
"""

from __future__ import annotations

import shutil
from pathlib import Path

import pytest

from termset import resources
from termset.contexts import ContextType
from termset.corpus import Sentence, Token
from termset.project import GroupSettings, Project, TrainSettings
from termset.termgroup import Term, TermGroup

# Desk-scale settings: subsampling off (it would decimate a corpus this
# small) and a low min_count so the toy vocabulary survives.
TOY_TRAIN = {"min_count": 2, "subsample": 0.0, "epochs": 30, "dim": 20, "seed": 1}
TOY_CONTEXTS = [ContextType.LINEAR, ContextType.LIST, ContextType.UNARY]

# Pre-parsed sentence used by the dependency extraction tests
# (Stanford-basic style arcs; prepositions attach via prep -> pobj).
TURING_CONLLU = """\
1\tTuring\tTuring\tNNP\tNNP\t_\t2\tnsubj\t_\t_
2\tstudied\tstudy\tVBD\tVBD\t_\t0\troot\t_\t_
3\tas\tas\tIN\tIN\t_\t2\tprep\t_\t_
4\tan\ta\tDT\tDT\t_\t5\tdet\t_\t_
5\tundergraduate\tundergraduate\tNN\tNN\t_\t3\tpobj\t_\t_
6\tat\tat\tIN\tIN\t_\t2\tprep\t_\t_
7\tKing's\tKing's\tNNP\tNNP\t_\t8\tnn\t_\t_
8\tCollege\tCollege\tNNP\tNNP\t_\t6\tpobj\t_\t_
9\t,\t,\t,\t,\t_\t8\tpunct\t_\t_
10\tCambridge\tCambridge\tNNP\tNNP\t_\t8\tappos\t_\t_
11\t.\t.\t.\t.\t_\t2\tpunct\t_\t_
"""


def make_sentence(*words: str, doc_id: str = "t", index: int = 0) -> Sentence:
    return Sentence([Token(w) for w in words], doc_id, index)


def make_group(gid: int, *surfaces: str, freq: int = 1) -> TermGroup:
    return TermGroup(
        id=gid, canonical=surfaces[0], members=[Term(s, freq) for s in surfaces]
    )


def train_toy(data_root: Path, **overrides) -> Project:
    """Ingest the bundled corpus and train the three default contexts."""
    project = Project.create(data_root, "demo")
    project.ingest(resources.toy_corpus_text(), "text")
    settings = TrainSettings.from_dict({**TOY_TRAIN, **overrides})
    project.run_training(TOY_CONTEXTS, settings, GroupSettings())
    return project


@pytest.fixture(scope="session")
def toy_root(tmp_path_factory) -> Path:
    """Session-wide trained demo project; treat as read-only."""
    root = tmp_path_factory.mktemp("toy-data")
    train_toy(root)
    return root


@pytest.fixture
def toy_copy(toy_root, tmp_path) -> Path:
    """Private copy of the trained data root, safe to mutate."""
    dest = tmp_path / "data"
    shutil.copytree(toy_root, dest)
    return dest


@pytest.fixture
def toy_project(toy_copy) -> Project:
    return Project.open(toy_copy / "projects" / "p0001")


@pytest.fixture
def stopwords():
    return resources.load_stopwords()
