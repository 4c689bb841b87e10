"""Generate fixture experiment outputs once per session via the declab CLI."""

import pytest

from declab import cli


@pytest.fixture(scope="session")
def outputs(tmp_path_factory):
    base = tmp_path_factory.mktemp("declab_outputs")
    cli.main([
        "sweep", "--p", "0.1", "--alpha", "0.7", "--n", "8",
        "--betas", "1", "2", "3", "--runs-per-beta", "4", "--n-train", "300",
        "--max-epochs", "30", "--eval-every", "10", "--seed", "5",
        "--workers", "1", "--out", str(base / "sweep"),
    ])
    cli.main([
        "sweep", "--p", "0.1", "--alpha", "0.7", "--n", "8",
        "--betas", "2", "--runs-per-beta", "3", "--n-train", "200",
        "--max-epochs", "20", "--eval-every", "10", "--seed", "6",
        "--workers", "1", "--out", str(base / "sweep_single"),
    ])
    cli.main([
        "misalign", "--p", "0.1", "--alpha", "0.7", "--n", "8",
        "--betas", "1", "2", "3", "--out", str(base / "misalign"),
    ])
    cli.main([
        "importance", "--p", "0.1", "--alpha", "0.7", "--n", "8",
        "--out", str(base / "importance"),
    ])
    cli.main([
        "strategies", "--code", "five_qubit", "--p", "0.05", "--sigma2", "0.005",
        "--rates-seed", "5", "--betas", "1", "2", "--runs-per-beta", "3",
        "--n-train", "200", "--max-epochs", "20", "--eval-every", "10",
        "--seed", "8", "--workers", "1", "--out", str(base / "strategies"),
    ])
    return base
