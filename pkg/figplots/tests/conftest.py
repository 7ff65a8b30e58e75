"""Session fixtures: sweep CSVs are produced by invoking the simulator's
command line (the package under test never imports it), with grids shrunk
to keep generation fast. 4b keeps its full xi range for the peak-window
check, restricted to a single beta."""

import subprocess
import sys

import pytest

SHRUNK = {
    "3a": ("--alpha-grid", "3:4:0.5", "--beta-grid", "3:4:0.5"),
    "3b": ("--alpha-grid", "3:4:0.5", "--beta-grid", "3:4:0.5"),
    "7a": ("--alpha-grid", "3:4:0.5", "--beta-grid", "3:4:0.5"),
    "7b": ("--alpha-grid", "3:4:0.5", "--beta-grid", "3:4:0.5"),
    "8a": ("--alpha-grid", "3:4:0.5", "--beta-grid", "3:4:0.5"),
    "8b": ("--alpha-grid", "3:4:0.5", "--beta-grid", "3:4:0.5"),
    "4a": ("--xi-grid", "1.95:2.15:0.05"),
    "4b": ("--xi-grid", "1.8:2.4:0.01", "--beta-im", "4"),
    "9a": ("--xi-grid", "1.95:2.15:0.05"),
    "9b": ("--xi-grid", "1.95:2.15:0.05"),
    "5a": ("--n-list", "1,3,10"),
    "5b": ("--n-list", "1,3,10"),
    "6a": ("--xi-grid", "2.0:2.1:0.05"),
    "6b": ("--xi-grid", "2.0:2.1:0.05"),
    "loss": ("--loss-grid", "0:0.1:0.05", "--n-list", "1"),
    "dist": (),
}


@pytest.fixture(scope="session")
def csv_for(tmp_path_factory):
    root = tmp_path_factory.mktemp("csvs")
    cache = {}

    def _get(figure):
        if figure not in cache:
            out = root / f"catport_{figure}.csv"
            argv = [
                sys.executable, "-m", "catport.cli", "sweep",
                "--figure", figure, "--jobs", "1", "--out", str(out),
                *SHRUNK[figure],
            ]
            proc = subprocess.run(argv, capture_output=True, text=True)
            assert proc.returncode == 0, f"{figure}: {proc.stderr}"
            cache[figure] = out
        return cache[figure]

    return _get
