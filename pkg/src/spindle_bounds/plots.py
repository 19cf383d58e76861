"""SVG loss-curve plots.

Figures are built on :class:`matplotlib.figure.Figure` directly, so no GUI backend is involved and
plots can be written from worker threads. The SVG hash salt is fixed and the date is dropped, which
makes the output byte-identical across runs.
"""
import os
from typing import TYPE_CHECKING, Mapping, Sequence, Tuple, Union

import matplotlib
from matplotlib.figure import Figure

if TYPE_CHECKING:
    from spindle_bounds.bounds import BoundCurve
    from spindle_bounds.harness import ExperimentResult

_SVG_RC = {"svg.hashsalt": "spindle-bounds", "svg.fonttype": "none"}


def _draw(ax, result: "ExperimentResult", label: str) -> None:
    k = result.k_values.tolist()
    mean = result.mean
    ax.plot(k, mean.tolist(), marker="o", markersize=3, label=f"{label} (mean)")
    ax.fill_between(k, (mean - 3 * result.stderr).tolist(), (mean + 3 * result.stderr).tolist(), alpha=0.2)
    if result.has_bound:
        ax.plot(k, result.bound.tolist(), linestyle="--", color="black", label=f"bound {result.theorem}")
    ax.set_xlabel("k (examples seen)")
    ax.set_ylabel("average loss")
    ax.set_ylim(bottom=0.0)
    ax.legend(fontsize="small")


def _save(fig: Figure, path: Union[str, os.PathLike]) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with matplotlib.rc_context(_SVG_RC):
        fig.savefig(path, format="svg", metadata={"Date": None})


def plot_result(result: "ExperimentResult", path: Union[str, os.PathLike], title: str = "") -> None:
    plot_curves(result, path, (), title)


def plot_curves(
    result: "ExperimentResult",
    path: Union[str, os.PathLike],
    curves: Sequence["BoundCurve"],
    title: str = "",
) -> None:
    """Loss curve with its own bound plus further reference curves, drawn dotted."""
    fig = Figure(figsize=(5, 3.5))
    ax = fig.subplots()
    _draw(ax, result, result.learner)
    for curve in curves:
        ax.plot(range(curve.k_max + 1), curve.values.tolist(), linestyle=":", label=f"{curve.kind.value} {curve.tag}")
    if curves:
        ax.legend(fontsize="small")
    ax.set_title(title or f"{result.learner} on {result.family}, d={result.d}")
    fig.tight_layout()
    _save(fig, path)


def plot_grid(
    results: Mapping[Tuple[str, str], "ExperimentResult"],
    path: Union[str, os.PathLike],
    rows: Sequence[str],
    cols: Sequence[str],
) -> None:
    """One panel per ``(row, col)`` key, e.g. problem family by learner."""
    fig = Figure(figsize=(5 * len(cols), 3.5 * len(rows)))
    axes = fig.subplots(len(rows), len(cols), squeeze=False)
    for i, row in enumerate(rows):
        for j, col in enumerate(cols):
            result = results[(row, col)]
            _draw(axes[i][j], result, col)
            axes[i][j].set_title(f"{col} on {row}, d={result.d}")
    fig.tight_layout()
    _save(fig, path)
