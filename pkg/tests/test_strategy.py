from unittest.mock import patch

import pytest
from lightning_utilities import module_available
from lightning_utilities.core.rank_zero import rank_zero_only

from spindle_bounds.exceptions import ConfigurationError
from spindle_bounds.strategy import STRATEGY_REGISTRY, HorovodStrategy, LocalStrategy, get_strategy
from tests.helpers import _run_horovod


def test_registry():
    assert sorted(STRATEGY_REGISTRY) == ["horovod", "local"]
    assert STRATEGY_REGISTRY["local"] is LocalStrategy


@pytest.mark.parametrize("num_workers", [1, 4])
def test_local_map_keeps_item_order(num_workers):
    strategy = LocalStrategy(num_workers)
    assert strategy.map(lambda x: x * x, range(10)) == [x * x for x in range(10)]
    assert strategy.map(lambda x: x, []) == []
    assert strategy.is_global_zero
    assert strategy.world_size == 1


def test_local_strategy_keeps_process_rank(monkeypatch):
    # a local pool built inside a Horovod worker must not make that rank log as rank zero
    monkeypatch.setattr(rank_zero_only, "rank", 1, raising=False)
    LocalStrategy(2)
    assert rank_zero_only.rank == 1


def test_get_strategy():
    strategy = get_strategy("local", 3)
    assert isinstance(strategy, LocalStrategy)
    assert strategy.num_workers == 3
    with pytest.raises(ConfigurationError, match="unknown strategy"):
        get_strategy("mpi")
    with pytest.raises(ConfigurationError, match="num_workers"):
        get_strategy("local", 0)


def test_horovod_missing():
    with patch("spindle_bounds.strategy._HOROVOD_AVAILABLE", False), pytest.raises(
        ModuleNotFoundError, match="horovod"
    ):
        HorovodStrategy()


@pytest.mark.skipif(not module_available("horovod"), reason="requires horovod")
def test_horovod_matches_local():
    """Seeds sharded over two Horovod processes give the same curve as one local process."""
    _run_horovod({"d": 8, "seeds": 6})
    _run_horovod({"d": 8, "seeds": 5, "learner": "spindly", "family": "permuted"})
