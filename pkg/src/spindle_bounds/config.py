"""Flat ``key=value`` run configuration merged under the command-line flags."""
import os
from typing import Any, Callable, Dict, Mapping, Optional, Tuple, Union

from spindle_bounds.exceptions import ConfigurationError

#: environment variable consulted when no master seed is given
SEED_ENV = "SPINDLE_SEED"


def _clip(text: str) -> Tuple[float, float]:
    parts = [p for p in text.replace(":", ",").split(",") if p.strip()]
    if len(parts) != 2:
        raise ConfigurationError(f"clip must be 'lo,hi', got {text!r}")
    return float(parts[0]), float(parts[1])


def _k_values(text: str) -> list:
    return [int(v) for v in text.split(",") if v.strip()]


#: accepted keys and how their text is parsed
KEYS: Dict[str, Callable[[str], Any]] = {
    "d": int,
    "k": _k_values,
    "q": int,
    "n": int,
    "column": int,
    "seeds": int,
    "learner": str,
    "problem": str,
    "eta": float,
    "epochs": int,
    "init": str,
    "sigma": float,
    "hidden_units": int,
    "clip": _clip,
    "loss": str,
    "bound": str,
    "out": str,
    "master_seed": int,
    "strategy": str,
    "workers": int,
    "online_to_batch": lambda text: text.strip().lower() in ("1", "true", "yes", "on"),
}


def parse_config(text: str, source: str = "<config>") -> Dict[str, Any]:
    """Parse ``key=value`` lines; blank lines and ``#`` comments are skipped.

    >>> parse_config("d = 16  # dimension\\nlearner=spindly")
    {'d': 16, 'learner': 'spindly'}
    """
    values: Dict[str, Any] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{source}:{number}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in KEYS:
            raise ConfigurationError(f"{source}:{number}: unknown key {key!r}")
        try:
            values[key] = KEYS[key](value)
        except ValueError as err:
            raise ConfigurationError(f"{source}:{number}: bad value for {key!r}: {err}") from err
    return values


def load_config(path: Union[str, os.PathLike]) -> Dict[str, Any]:
    with open(path) as fp:
        return parse_config(fp.read(), source=str(path))


def merge(file_values: Mapping[str, Any], flags: Mapping[str, Any]) -> Dict[str, Any]:
    """Flags set on the command line (not ``None``) win over the file."""
    merged = dict(file_values)
    merged.update({key: value for key, value in flags.items() if value is not None})
    return merged


def resolve_master_seed(value: Optional[int], environ: Optional[Mapping[str, str]] = None) -> int:
    """Explicit value, else ``$SPINDLE_SEED``, else 0."""
    if value is not None:
        return int(value)
    environ = os.environ if environ is None else environ
    text = environ.get(SEED_ENV, "").strip()
    if not text:
        return 0
    try:
        return int(text)
    except ValueError as err:
        raise ConfigurationError(f"{SEED_ENV} must be an integer, got {text!r}") from err
