"""polyreg: online learning over Lovász-cell partitions.

Cell-aware multiplicative weights with restart/transfer variants,
continuous mirror-descent baselines, designed game generators with
controlled instability, a shortest-path fixed-partition instantiation,
and the metrics/CLI layer for the regret scaling experiments.
"""

__version__ = "0.1.0"

from ._kernels import BACKEND_NAME as kernel_backend  # noqa: F401
