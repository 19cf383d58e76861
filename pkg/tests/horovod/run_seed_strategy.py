"""This script is meant to be executed from `../test_strategy.py`.

Horovod collectives only do something when several replicas run at once, so the test launches
this script through `horovodrun`:

.. code-block:: bash

    horovodrun -np 2 python run_seed_strategy.py --options '{"d": 16, "seeds": 8}'

Every rank runs the same experiment with the seeds sharded over ranks, and compares the result
with a local run of the same spec. A non-zero exit code on any rank indicates failure.
"""

import argparse
import json
import os
import sys

import horovod.torch as hvd
import torch

# this is needed because Conda does not use `PYTHONPATH` env var while pip and virtualenv do
PYTHONPATH = os.getenv("PYTHONPATH", "")
if ":" in PYTHONPATH:
    sys.path = PYTHONPATH.split(":") + sys.path

from spindle_bounds.harness import ExperimentSpec, run_experiment  # noqa: E402
from spindle_bounds.strategy import HorovodStrategy, LocalStrategy  # noqa: E402

parser = argparse.ArgumentParser()
parser.add_argument("--options", required=True)


def run_test_from_config(options: dict) -> None:
    spec = ExperimentSpec(
        options.get("family", "sign_flip"), options.get("learner", "linear"), options["d"], seeds=options["seeds"]
    )
    strategy = HorovodStrategy()
    sharded = run_experiment(spec, strategy)
    local = run_experiment(spec, LocalStrategy())
    assert torch.equal(sharded.mean, local.mean)
    assert torch.equal(sharded.stderr, local.stderr)

    assert strategy.world_size == hvd.size()
    assert sorted(hvd.allgather_object(strategy.global_rank)) == list(range(strategy.world_size))
    strategy.teardown()


if __name__ == "__main__":
    args = parser.parse_args()
    run_test_from_config(json.loads(args.options))
