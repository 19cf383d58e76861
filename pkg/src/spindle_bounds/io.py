"""CSV and JSON files: result tables, matrices, problems, model weight dumps and bound curves.

Every real number is written with 10 significant digits in result tables, and with 17 in matrix
and weight files so that they load back bit-exactly.
"""
import csv
import json
import os
from dataclasses import asdict
from enum import Enum
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import torch
from torch import Tensor

from spindle_bounds.exceptions import DimensionError
from spindle_bounds.problems import Family, LabelRange, Problem

PathLike = Union[str, os.PathLike]

_EXACT = "%.17g"


def format_number(value: Any) -> str:
    """Text form used in result tables.

    >>> format_number(1 / 3), format_number(2), format_number("T1")
    ('0.3333333333', '2', 'T1')
    """
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return f"{value:.10g}"
    return str(value)


def _parent(path: PathLike) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)


def save_rows(path: PathLike, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    _parent(path)
    with open(path, "w", newline="") as fp:
        writer = csv.writer(fp, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_number(v) for v in row])


def load_rows(path: PathLike) -> Tuple[List[str], List[List[str]]]:
    with open(path, newline="") as fp:
        reader = csv.reader(fp)
        header = next(reader)
        return header, [row for row in reader]


def save_matrix(path: PathLike, M: Tensor) -> None:
    if M.dim() == 1:
        M = M.unsqueeze(1)
    if M.dim() != 2:
        raise DimensionError(f"only matrices can be saved, got shape {tuple(M.shape)}")
    _parent(path)
    np.savetxt(path, M.detach().to(torch.float64).numpy(), fmt=_EXACT, delimiter=",")


def load_matrix(path: PathLike) -> Tensor:
    return torch.from_numpy(np.loadtxt(path, delimiter=",", ndmin=2, dtype=np.float64))


def save_problem(directory: PathLike, p: Problem) -> None:
    """``X.csv``, ``Y.csv`` and ``meta.json`` under ``directory``."""
    os.makedirs(directory, exist_ok=True)
    save_matrix(os.path.join(directory, "X.csv"), p.X)
    save_matrix(os.path.join(directory, "Y.csv"), p.Y)
    meta = {
        "family": p.family.value,
        "seed": p.seed,
        "target_index": p.target_index,
        "label_range": p.label_range.value,
    }
    with open(os.path.join(directory, "meta.json"), "w") as fp:
        json.dump(meta, fp, indent=2, sort_keys=True)


def load_problem(directory: PathLike) -> Problem:
    with open(os.path.join(directory, "meta.json")) as fp:
        meta = json.load(fp)
    return Problem(
        load_matrix(os.path.join(directory, "X.csv")),
        load_matrix(os.path.join(directory, "Y.csv")),
        int(meta["target_index"]),
        Family(meta["family"]),
        int(meta["seed"]),
        LabelRange(meta["label_range"]),
    )


def _jsonable(value: Any) -> Any:
    if isinstance(value, Tensor):
        return value.tolist()
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, tuple):
        return list(value)
    return value


def model_parameters(model: Any) -> Dict[str, Tensor]:
    """Named tensors that determine a model's predictions."""
    if isinstance(model, torch.nn.Module):
        return {name: param.detach() for name, param in model.named_parameters()}
    names = {
        "LinearModel": ("w", "history"),
        "SpindlyModel": ("u", "history"),
        "TwoLayerModel": ("W1", "w2"),
        "LookupModel": ("X_seen", "y_seen", "fallback"),
        "ReflectiveModel": ("w0", "v"),
        "ConstantModel": ("value",),
    }[type(model).__name__]
    out = {}
    for name in names:
        value = getattr(model, name)
        if value is not None:
            out[name] = torch.as_tensor(value, dtype=torch.float64)
    return out


def save_model(path: PathLike, model: Any, cfg: Optional[Any] = None) -> None:
    """Weight dump: a ``#`` header line naming the learner and its config, then one row per entry.

    Rows are ``parameter,row,col,value``; vectors use ``col = 0``.
    """
    _parent(path)
    config = {key: _jsonable(value) for key, value in asdict(cfg).items()} if cfg is not None else {}
    with open(path, "w", newline="") as fp:
        fp.write(f"# learner={model.kind.value} config={json.dumps(config, sort_keys=True)}\n")
        writer = csv.writer(fp, lineterminator="\n")
        writer.writerow(("parameter", "row", "col", "value"))
        for name, tensor in model_parameters(model).items():
            grid = tensor.reshape(tensor.shape[0] if tensor.dim() else 1, -1)
            for i, row in enumerate(grid.tolist()):
                for j, value in enumerate(row):
                    writer.writerow((name, i, j, _EXACT % value))


def load_model_parameters(path: PathLike) -> Tuple[Dict[str, Any], Dict[str, Tensor]]:
    """Header fields and parameter tensors of a dump written by :func:`save_model`.

    Parameters come back as matrices; callers reshape vectors with ``[:, 0]``.
    """
    with open(path, newline="") as fp:
        first = fp.readline()
        learner, config = first[2:].strip().split(" ", 1)
        header = {"learner": learner.split("=", 1)[1], "config": json.loads(config.split("=", 1)[1])}
        entries: Dict[str, Dict[Tuple[int, int], float]] = {}
        for row in csv.DictReader(fp):
            entries.setdefault(row["parameter"], {})[(int(row["row"]), int(row["col"]))] = float(row["value"])
    params = {}
    for name, cells in entries.items():
        rows = 1 + max(i for i, _ in cells)
        cols = 1 + max(j for _, j in cells)
        M = torch.zeros(rows, cols, dtype=torch.float64)
        for (i, j), value in cells.items():
            M[i, j] = value
        params[name] = M
    return header, params


def save_curve(path: PathLike, curve: Any) -> None:
    """Bound curve as ``k,value,theorem``."""
    save_rows(path, ("k", "value", "theorem"), [(k, float(v), curve.tag) for k, v in enumerate(curve.values)])
