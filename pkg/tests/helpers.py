import json
import math
import os
import shlex
import subprocess
import sys

import torch
from torch import Tensor

from spindle_bounds.hadamard import hadamard_of_dim

_PATH_TESTS_DIR = os.path.dirname(__file__)

#: slack added to 3 standard errors, for zero-variance cases
STAT_ATOL = 1e-9


def assert_within_stderr(samples: Tensor, expected: float, slack: float = STAT_ATOL) -> None:
    samples = samples.to(torch.float64)
    se = float(samples.std()) / math.sqrt(samples.numel()) if samples.numel() > 1 else 0.0
    gap = abs(float(samples.mean()) - expected)
    assert gap <= 3 * se + slack, f"mean {float(samples.mean())} is {gap} away from {expected} (3 se = {3 * se})"


def hadamard(d: int) -> Tensor:
    return hadamard_of_dim(d).float()


def unit(d: int, i: int = 0) -> Tensor:
    e = torch.zeros(d, dtype=torch.float64)
    e[i] = 1.0
    return e


# This script runs the seed strategy in parallel
TEST_SCRIPT = os.path.join(_PATH_TESTS_DIR, "horovod", "run_seed_strategy.py")


def _run_horovod(options: dict, workers: int = 2) -> None:
    """Execute the seed-strategy script across multiple workers in parallel."""
    cmdline = [
        "horovodrun",
        "-np",
        str(workers),
        sys.executable,
        TEST_SCRIPT,
        "--options",
        shlex.quote(json.dumps(options)),
    ]
    exit_code = subprocess.call(" ".join(cmdline), shell=True, env=os.environ.copy())
    assert exit_code == 0
