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

Shared fixtures: a small synthetic scene written by the synth command
"""

from pathlib import Path

import pytest

from pnmf_cli.pnmf_cli_app import main

# small enough for the solver to finish a few iterations in well under a second
SCENE_ARGS: list[str] = ["--size", "12x12", "--p", "3", "--seed", "3"]


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory: pytest.TempPathFactory) -> Path:
    """
    Output of 'synth' with a clean cube and one noisy cube at 20 dB
    """
    output = tmp_path_factory.mktemp("synth")
    assert main(["synth", *SCENE_ARGS, "--snr", "20", "-o", str(output)]) == 0, "synth failed"
    return output


@pytest.fixture(scope="module")
def unmix_dir(synth_dir: Path, tmp_path_factory: pytest.TempPathFactory) -> Path:
    """
    A short unmix run on the noisy cube with the truth attached
    """
    output = tmp_path_factory.mktemp("unmix")
    exit_code = main(
        [
            "unmix",
            "-i",
            str(synth_dir / "noisy_20db.hsic"),
            "--p",
            "3",
            "--denoiser",
            "gaussian",
            "--max-iters",
            "5",
            "--truth-endmembers",
            str(synth_dir / "truth_endmembers.csv"),
            "--truth-abundances",
            str(synth_dir / "truth_abundances.hsic"),
            "-o",
            str(output),
        ]
    )
    assert exit_code == 0, "unmix failed"
    return output
