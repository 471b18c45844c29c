"""
Convergence-rate benchmark of the decorrelator solvers on the embedded fixtures.

Eight methods run on R3 and R4 with the all-ones observation. Cells are independent
solves dispatched concurrently on worker threads; the report is assembled in row
order so that repeated runs produce identical output.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple
import asyncio
import json
import logging as L
import math

import pandas as pd

from cdma.fixtures import FIXTURE_NAMES, CorrelationFixture, load_fixture
from commands.execute import execute_method
from common.errors import SolverError
from common.results import SolveStatus

DIVERGED_CELL = "-"

BENCH_ROWS: Tuple[Tuple[str, str], ...] = (
    ("Jacobi", "jacobi"),
    ("GS", "gs"),
    ("Parallel GaBP", "gabp-parallel"),
    ("Optimal SOR", "sor"),
    ("Serial GaBP", "gabp-serial"),
    ("Jacobi+Steffensen", "jacobi+steffensen"),
    ("Parallel GaBP+Steffensen", "gabp-parallel+steffensen"),
    ("Serial GaBP+Steffensen", "gabp-serial+steffensen"),
)


@dataclass(frozen=True)
class BenchCell:
    """Outcome of one method on one fixture."""
    label: str
    method: str
    fixture: str
    iterations: int
    converged: bool
    status: str
    residual: float
    metadata: Dict[str, Any] = field(default_factory=dict, compare=False)

    @property
    def display(self) -> str:
        return str(self.iterations) if self.converged else DIVERGED_CELL

    def record(self) -> Dict[str, Any]:
        return {
            "method": self.method,
            "label": self.label,
            "fixture": self.fixture,
            "iterations": self.iterations if self.converged else None,
            "rounds_run": self.iterations,
            "converged": self.converged,
            "status": self.status,
            "residual": self.residual if math.isfinite(self.residual) else None,
        }


@dataclass
class BenchReport:
    """
    All cells of a benchmark run.

    Attributes:
        cells (list): BenchCell per (method, fixture), row-major in table order
        epsilon (float): Convergence threshold used
        max_iters (int): Iteration cap used
        metadata (dict): Run-wide settings (sweep order, omega per fixture, accounting)
    """
    cells: List[BenchCell]
    epsilon: float
    max_iters: int
    metadata: Dict[str, Any] = field(default_factory=dict)

    def cell(self, method: str, fixture: str) -> BenchCell:
        for c in self.cells:
            if c.method == method and c.fixture == fixture:
                return c
        raise KeyError(f"No cell for {method} on {fixture}")

    def to_frame(self) -> pd.DataFrame:
        """Return the table as a DataFrame with one row per method and one column per fixture."""
        labels = [label for label, _ in BENCH_ROWS]
        frame = pd.DataFrame(index=pd.Index(labels, name="Algorithm"), columns=list(FIXTURE_NAMES), dtype=object)
        for c in self.cells:
            frame.loc[c.label, c.fixture] = c.display
        return frame

    def to_text(self) -> str:
        """Aligned plain-text table followed by the run settings."""
        table = self.to_frame().to_string()
        lines = [table, "", f"epsilon={self.epsilon:g} max_iters={self.max_iters}"]
        for key in sorted(self.metadata):
            lines.append(f"{key}={self.metadata[key]}")
        return "\n".join(lines) + "\n"

    def to_records(self) -> List[Dict[str, Any]]:
        return [c.record() for c in self.cells]

    def to_json(self) -> str:
        payload = {
            "epsilon": self.epsilon,
            "max_iters": self.max_iters,
            "metadata": self.metadata,
            "cells": self.to_records(),
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        return pd.DataFrame(self.to_records()).to_csv(index=False)


def _run_cell(label: str, method: str, fixture: CorrelationFixture, epsilon: float, max_iters: int) -> BenchCell:
    try:
        result = execute_method(fixture.R, fixture.observation(), method, epsilon=epsilon, max_iters=max_iters)
    except SolverError as e:
        L.error(f"Bench cell {method} on {fixture.name} failed: {str(e)}")
        return BenchCell(label, method, fixture.name, 0, False, SolveStatus.DIVERGED.value, math.inf)
    L.info(f"Bench cell {method} on {fixture.name}: {result.status.value} after {result.iterations}")
    return BenchCell(label, method, fixture.name, result.iterations, result.converged, result.status.value,
                     float(result.residual_inf), dict(result.metadata))


async def _run_cells(fixtures: List[CorrelationFixture], epsilon: float, max_iters: int) -> List[BenchCell]:
    tasks = [asyncio.to_thread(_run_cell, label, method, fixture, epsilon, max_iters)
             for label, method in BENCH_ROWS for fixture in fixtures]
    return list(await asyncio.gather(*tasks))


def bench_table1(epsilon: float = 1e-6, max_iters: int = 10_000,
                 fixtures: Optional[List[CorrelationFixture]] = None) -> BenchReport:
    """
    Run every method on every fixture with b = all ones.

    Args:
        epsilon (float): Convergence threshold
        max_iters (int): Iteration cap per cell
        fixtures (list, optional): Fixtures to use, R3 and R4 by default

    Returns:
        BenchReport: Cells in table order; a non-converged cell shows "-"
    """
    fixtures = fixtures or [load_fixture(name) for name in FIXTURE_NAMES]
    cells = asyncio.run(_run_cells(fixtures, epsilon, max_iters))

    omegas = {c.fixture: round(float(c.metadata["omega"]), 12) for c in cells
              if c.method == "sor" and "omega" in c.metadata}
    metadata = {
        "observation": "all-ones",
        "sweep_order": "ascending",
        "accounting": "rounds (one parallel round or one full sweep per iteration)",
        "steffensen": "rounds counted individually; GaBP extrapolates node means only",
        "omega": omegas,
        "gold_codes": {f.name: f.code_source for f in fixtures},
    }
    L.info(f"Bench finished: {sum(c.converged for c in cells)}/{len(cells)} cells converged")
    return BenchReport(cells, epsilon, max_iters, metadata)
