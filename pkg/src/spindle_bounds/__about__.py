__version__ = "0.1.0.dev0"
__author__ = "Spindle Bounds contributors"
__author_email__ = "maintainers@spindle-bounds.dev"
__license__ = "Apache-2.0"
__copyright__ = f"Copyright (c) 2023-2026, {__author__}."
__homepage__ = "https://github.com/spindle-bounds/spindle-bounds"
__docs__ = "Gradient-descent lower bounds, Hadamard hard problems and the spindly network, checked numerically."

__all__ = [
    "__author__",
    "__author_email__",
    "__copyright__",
    "__docs__",
    "__homepage__",
    "__license__",
    "__version__",
]
