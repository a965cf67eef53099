"""*******************************************************************************
* Copyright (c) 2024 PNMF contributors
*
* All rights reserved. This program and the accompanying materials
* are made available under the terms of MIT and  is provided "as is",
* without warranty of any kind, express or implied, including but
* not limited to the warranties of merchantability, fitness for a
* particular purpose and noninfringement. In no event shall the
* authors, contributors or copyright holders be liable for any claim,
* damages or other liability, whether in an action of contract,
* tort or otherwise, arising from, out of or in connection with the software
* or the use or other dealings in the software.
*
* Contributors:
*    -
*******************************************************************************

Test cases for artifacts
"""

import json
from pathlib import Path

import pytest

from pnmf_cli.artifacts import MANIFEST_NAME, RunManifest, StagedOutputs


def test_manifest_round_trip(tmp_path: Path):
    manifest = RunManifest(
        command="unmix",
        seed=7,
        inputs={"cube": "scene.hsic"},
        outputs=["abundances.hsic", "manifest.json"],
        unmix_config={"p": 4, "lambda": 3e4},
        extra={"drop_bands": ""},
    )
    manifest.write(tmp_path / MANIFEST_NAME)
    assert RunManifest.load(tmp_path) == manifest, "Manifest changed through write and load"


def test_manifest_is_stable(tmp_path: Path):
    """
    Keys are sorted and there is no timestamp, so equal manifests give equal bytes
    """
    first = RunManifest(command="synth", seed=1, extra={"zeta": 1, "alpha": 2})
    second = RunManifest(command="synth", seed=1, extra={"alpha": 2, "zeta": 1})
    assert first.to_json() == second.to_json(), "Key order leaked into the manifest"
    raw = json.loads(first.to_json())
    assert list(raw) == sorted(raw), f"Keys are not sorted: {list(raw)}"
    assert raw["tool_version"], "Tool version missing"


def test_manifest_load_errors(tmp_path: Path):
    with pytest.raises(FileNotFoundError):
        RunManifest.load(tmp_path)
    (tmp_path / MANIFEST_NAME).write_text(json.dumps({"format": 99}), encoding="utf-8")
    with pytest.raises(ValueError, match="unsupported manifest format"):
        RunManifest.load(tmp_path)
    (tmp_path / MANIFEST_NAME).write_text(json.dumps({"format": 1, "command": "synth"}), encoding="utf-8")
    with pytest.raises(ValueError, match="malformed manifest"):
        RunManifest.load(tmp_path)


def test_staged_outputs_kept_on_success(tmp_path: Path):
    target = tmp_path / "run"
    with StagedOutputs(target) as staged:
        staged.path("a.txt").write_text("a", encoding="utf-8")
        staged.verify()
    assert (target / "a.txt").read_text(encoding="utf-8") == "a", "Output lost after success"
    assert staged.names() == ["a.txt"], f"Unexpected names {staged.names()}"


def test_staged_outputs_removed_on_failure(tmp_path: Path):
    target = tmp_path / "nested" / "run"
    with pytest.raises(RuntimeError), StagedOutputs(target) as staged:
        staged.path("a.txt").write_text("a", encoding="utf-8")
        staged.path("b.txt")
        raise RuntimeError("boom")
    assert not target.exists(), "Directory created by the failed run was left behind"


def test_staged_outputs_keep_foreign_files(tmp_path: Path):
    (tmp_path / "existing.txt").write_text("keep", encoding="utf-8")
    with pytest.raises(RuntimeError), StagedOutputs(tmp_path) as staged:
        staged.path("new.txt").write_text("new", encoding="utf-8")
        raise RuntimeError("boom")
    assert sorted(path.name for path in tmp_path.iterdir()) == ["existing.txt"], "Cleanup touched files it did not write"


def test_staged_outputs_verify(tmp_path: Path):
    with StagedOutputs(tmp_path) as staged:
        staged.path("written.txt").write_text("x", encoding="utf-8")
        staged.path("empty.txt").write_bytes(b"")
        staged.path("missing.txt")
        with pytest.raises(OSError, match="empty.txt"):
            staged.verify()


def test_staged_outputs_rejects_file(tmp_path: Path):
    target = tmp_path / "file"
    target.write_text("x", encoding="utf-8")
    with pytest.raises(NotADirectoryError), StagedOutputs(target):
        pass
