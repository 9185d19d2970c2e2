"""Shared containers for the shipped application problems."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ..core import Bounds, Sense


@dataclass(frozen=True)
class DeterministicProblem:
    """A box-bounded NLP with penalizable inequality constraints.

    ``objective`` and ``violation`` broadcast over a leading batch axis of
    the design vector; ``violation`` is the summed positive part of the
    constraint residuals (zero when feasible).
    """

    name: str
    bounds: Bounds
    sense: Sense
    objective: Callable[[np.ndarray], np.ndarray]
    violation: Callable[[np.ndarray], np.ndarray]
    optimum: Optional[float] = None

    def evaluator(self):
        """Adapter for the DE driver: x, rng -> ((f,), violation)."""
        def run(x, rng):
            return (np.atleast_1d(float(self.objective(x))),
                    float(self.violation(x)))
        return run
