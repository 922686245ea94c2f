"""Contract tests: the adapter's files must be consumable by the pipeline's
loaders unchanged, match the frozen goldens, and feed a full pipeline run."""

import json
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest

from uvclone import cli as pipeline_cli
from uvclone.datamodel import (
    image_dims,
    load_distance_matrix,
    load_feature_map,
    load_person_records,
)
from uvclone.posefilter import LABEL_QUALIFIED, qualify_record
from uvclone_adapters import emit_corpus, emit_distances, emit_features

from adapter_fixtures import write_fixture_images
from conftest import record_adapter_criterion

GOLDENS = Path(__file__).parent / "goldens"


@contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        record_adapter_criterion(name, False)
        raise
    record_adapter_criterion(name, True)


@pytest.fixture(scope="module")
def emitted(tmp_path_factory):
    root = tmp_path_factory.mktemp("adapter")
    write_fixture_images(root / "images")
    corpus = emit_corpus(root / "images", root / "corpus.jsonl")
    features = emit_features(corpus, root / "features")
    dmat = emit_distances(corpus, root / "features", root / "distances.dmat")
    return root, corpus, features, dmat


def test_adapter_contract(emitted):
    with criterion("adapters: emitted files pass pipeline loaders, feature "
                   "grids are 48x16, goldens match"):
        root, corpus, features, dmat = emitted

        diagnostics = []
        records = load_person_records(corpus, diagnostics=diagnostics)
        assert len(records) == 3 and diagnostics == []
        for r in records:
            dims = image_dims(root / r.image_path)
            assert qualify_record(r, dims).label == LABEL_QUALIFIED

        assert len(features) == 6
        for path in features:
            fmap = load_feature_map(path)
            assert (fmap.height, fmap.width) == (48, 16)
            assert fmap.dim >= 1

        loaded = load_distance_matrix(dmat)
        assert loaded.n == 3
        assert np.array_equal(loaded.values, loaded.values.T)

        assert corpus.read_bytes() == (GOLDENS / "corpus.jsonl").read_bytes()
        assert dmat.read_bytes() == (GOLDENS / "distances.dmat").read_bytes()
        for path in features:
            assert path.read_bytes() == (GOLDENS / "features" / path.name).read_bytes()


def test_provenance_sidecars(emitted):
    root, corpus, _, dmat = emitted
    for target in (corpus, dmat, root / "features" / "features"):
        sidecar = target.parent / f"{target.name}.provenance.json"
        meta = json.loads(sidecar.read_text())
        assert meta["tool"] == "uvclone-adapt"
        assert "seed" in meta and "version" in meta


def test_emission_is_deterministic(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    for root in (a, b):
        write_fixture_images(root / "images")
        corpus = emit_corpus(root / "images", root / "corpus.jsonl")
        emit_features(corpus, root / "features")
        emit_distances(corpus, root / "features", root / "distances.dmat")
    assert (a / "corpus.jsonl").read_bytes() == (b / "corpus.jsonl").read_bytes()
    assert (a / "distances.dmat").read_bytes() == (b / "distances.dmat").read_bytes()
    for f in sorted((a / "features").glob("*.fmap")):
        assert f.read_bytes() == (b / "features" / f.name).read_bytes()


def test_pipeline_runs_on_adapter_outputs(emitted, tmp_path):
    """The full curation and cloning pipeline accepts adapter files as-is."""
    root, corpus, _, dmat = emitted
    templates = tmp_path / "templates"
    templates.mkdir()
    from uvclone.demo import _TEMPLATES
    for desc in _TEMPLATES:
        (templates / f"{desc['template_id']}.json").write_text(json.dumps(desc))

    out = tmp_path / "out"
    args = ["--corpus", str(corpus), "--distances", str(dmat),
            "--templates", str(templates), "--features-dir", str(root / "features"),
            "--output", str(out), "--seed", "0"]
    assert pipeline_cli.main(["qualify"] + args) == 0
    # the fixture images are all distinct at this scale, so dedup must not
    # collapse them; the similarity round then groups all three
    assert pipeline_cli.main(["curate", "--eps1", "0.05"] + args) == 0
    assert pipeline_cli.main(["clone"] + args) == 0
    manifest = [json.loads(line) for line in (out / "manifest.jsonl").read_text().splitlines()]
    assert manifest and all(m["status"] == "ok" for m in manifest)
