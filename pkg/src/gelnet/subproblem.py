"""Result container shared by the inner solvers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, List


@dataclass
class SubproblemResult:
    """Output of one reweighted-subproblem solve.

    ``iterations`` counts ADMM sweeps or semismooth Newton steps. ``state``
    is whatever the solver needs for a warm start on the next call.
    """

    beta: Any
    iterations: int
    converged: bool
    trace: Dict[str, List[float]] = field(default_factory=dict)
    state: Any = None
