"""Strategies that fan per-seed work out to workers and gather it back in seed order."""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Dict, List, Sequence, Type, TypeVar

from lightning_utilities import module_available
from lightning_utilities.core.rank_zero import rank_zero_debug, rank_zero_only

from spindle_bounds.exceptions import ConfigurationError

_HOROVOD_AVAILABLE = module_available("horovod")

if _HOROVOD_AVAILABLE:
    import horovod.torch as hvd

log = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

STRATEGY_REGISTRY: Dict[str, Type["SeedStrategy"]] = {}


def register_strategy(cls: Type["SeedStrategy"]) -> Type["SeedStrategy"]:
    """Register strategy."""
    STRATEGY_REGISTRY[cls.strategy_name] = cls
    return cls


class SeedStrategy:
    """Runs a function over a list of items, returning results in item order on every rank."""

    strategy_name = ""

    @property
    def global_rank(self) -> int:
        return 0

    @property
    def world_size(self) -> int:
        return 1

    @property
    def is_global_zero(self) -> bool:
        return self.global_rank == 0

    def map(self, fn: Callable[[T], R], items: Sequence[T]) -> List[R]:
        raise NotImplementedError

    def teardown(self) -> None:
        pass


@register_strategy
class LocalStrategy(SeedStrategy):
    """Bounded thread pool in a single process."""

    strategy_name = "local"

    def __init__(self, num_workers: int = 1) -> None:
        if num_workers < 1:
            raise ConfigurationError(f"num_workers must be >= 1, got {num_workers}")
        self.num_workers = num_workers

    def map(self, fn: Callable[[T], R], items: Sequence[T]) -> List[R]:
        items = list(items)
        if self.num_workers == 1 or len(items) <= 1:
            return [fn(item) for item in items]
        with ThreadPoolExecutor(max_workers=self.num_workers) as pool:
            return list(pool.map(fn, items))


@register_strategy
class HorovodStrategy(SeedStrategy):
    """Shards items over Horovod processes, ``items[rank::size]`` on each, and all-gathers the results."""

    strategy_name = "horovod"

    def __init__(self) -> None:
        if not _HOROVOD_AVAILABLE:
            raise ModuleNotFoundError(
                "You are missing `horovod` package, please install it with `pip install spindle-bounds[horovod]`."
            )
        hvd.init()
        rank_zero_only.rank = self.global_rank

    @property
    def global_rank(self) -> int:
        return hvd.rank()

    @property
    def world_size(self) -> int:
        return hvd.size()

    def map(self, fn: Callable[[T], R], items: Sequence[T]) -> List[R]:
        items = list(items)
        mine = [(i, fn(items[i])) for i in range(self.global_rank, len(items), self.world_size)]
        rank_zero_debug(f"rank {self.global_rank} finished {len(mine)} of {len(items)} items")
        # sync and gather all
        self.join()
        results: List[Any] = [None] * len(items)
        for part in hvd.allgather_object(mine):
            for i, result in part:
                results[i] = result
        return results

    def join(self) -> None:
        hvd.join()

    def teardown(self) -> None:
        # make sure all workers have finished before returning to the user
        self.join()


def get_strategy(name: str = "local", num_workers: int = 1) -> SeedStrategy:
    if name not in STRATEGY_REGISTRY:
        raise ConfigurationError(f"unknown strategy {name!r}, choose from {sorted(STRATEGY_REGISTRY)}")
    if name == LocalStrategy.strategy_name:
        return LocalStrategy(num_workers)
    log.debug("starting %s strategy", name)
    return STRATEGY_REGISTRY[name]()
