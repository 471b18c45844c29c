"""
Command handler classes for the solve, diagnose, bench and trace commands.

Each handler validates its invocation, runs the library call and renders the outcome.
Handlers share one error path: failures are logged with context, reported on stderr
and turned into exit code 1. A solve that finishes without converging is data, not an
error, and maps to exit code 2.
"""

from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Dict, Optional, Tuple
import json
import logging as L

import numpy as np
import pandas as pd
import typer

from cdma.bench import bench_table1
from cdma.fixtures import load_fixture
from commands.execute import execute_method, parse_method_key
from common.config import CliInvocation, OutputFormat
from common.diagnostics import diagnose
from common.errors import SolverError
from common.matrix import DenseVector, SymmetricSparseMatrix, check_vector
from common.repository import read_matrix_market, read_vector
from common.results import SolveResult

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NOT_CONVERGED = 2


class CommandHandler(ABC):
    """
    Abstract base class for command handlers.

    Attributes:
        invocation (CliInvocation): The validated command line
    """

    def __init__(self, invocation: CliInvocation) -> None:
        self.invocation = invocation

    def log_message(self, message: str) -> None:
        L.info(message)

    def handle_error(self, error: Exception, context: str) -> int:
        """
        Log and report an error, returning the error exit code.

        Args:
            error (Exception): The error that occurred
            context (str): What the handler was doing
        """
        error_msg = f"{context}: {str(error)}"
        L.error(error_msg)
        typer.echo(error_msg, err=True)
        return EXIT_ERROR

    def emit(self, text: str) -> None:
        """Write output to --out when given, otherwise to stdout."""
        if self.invocation.output_path is not None:
            Path(self.invocation.output_path).write_text(text)
            self.log_message(f"Wrote {self.invocation.command} output to {self.invocation.output_path}")
        else:
            typer.echo(text, nl=False)

    def load_system(self) -> Tuple[SymmetricSparseMatrix, DenseVector, str]:
        """
        Load A and b from --fixture or from --matrix/--rhs.

        A fixture comes with the all-ones observation; a matrix file needs --rhs.
        """
        inv = self.invocation
        if inv.fixture is not None:
            fixture = load_fixture(inv.fixture)
            b = read_vector(inv.rhs_path) if inv.rhs_path is not None else fixture.observation()
            return fixture.R, check_vector(fixture.R, b), fixture.name
        if inv.matrix_path is None:
            raise ValueError("either --matrix or --fixture is required")
        A = read_matrix_market(inv.matrix_path)
        if inv.rhs_path is None:
            raise ValueError("--rhs is required with --matrix")
        return A, check_vector(A, read_vector(inv.rhs_path)), str(inv.matrix_path)

    def load_matrix(self) -> Tuple[SymmetricSparseMatrix, str]:
        inv = self.invocation
        if inv.fixture is not None:
            return load_fixture(inv.fixture).R, inv.fixture
        if inv.matrix_path is None:
            raise ValueError("either --matrix or --fixture is required")
        return read_matrix_market(inv.matrix_path), str(inv.matrix_path)

    def solve(self, A: SymmetricSparseMatrix, b: DenseVector, record_trajectory: bool = False) -> SolveResult:
        inv = self.invocation
        return execute_method(A, b, inv.method, epsilon=inv.epsilon, max_iters=inv.max_iters,
                              schedule=inv.schedule, omega=inv.omega, damping=inv.damping,
                              record_trajectory=record_trajectory)

    def run(self) -> int:
        """Execute the command and return its exit code."""
        try:
            return self.execute()
        except (SolverError, ValueError, KeyError, OSError) as e:
            return self.handle_error(e, f"{self.invocation.command} failed")

    @abstractmethod
    def execute(self) -> int:
        """Run the command; errors propagate to run()."""


def _format_vector(x: np.ndarray) -> str:
    return " ".join(f"{v:.17g}" for v in x)


class SolveHandler(CommandHandler):
    """Solve A x = b with the chosen method and print x, iterations, status and residual."""

    def execute(self) -> int:
        parse_method_key(self.invocation.method)
        A, b, source = self.load_system()
        self.log_message(f"Solving {source} (n={A.n}) with {self.invocation.method}")
        result = self.solve(A, b)
        self.emit(self.render(result))
        return EXIT_OK if result.converged else EXIT_NOT_CONVERGED

    def render(self, result: SolveResult) -> str:
        fmt = self.invocation.output_format
        if fmt == OutputFormat.JSON:
            payload: Dict[str, Any] = {
                "method": result.method,
                "x": [float(v) for v in result.x],
                "iterations": result.iterations,
                "converged": result.converged,
                "status": result.status.value,
                "residual_inf": result.residual_inf if np.isfinite(result.residual_inf) else None,
                "metadata": result.metadata,
            }
            if result.P_marginal is not None:
                payload["P_marginal"] = [float(v) for v in result.P_marginal]
            return json.dumps(payload, indent=2, sort_keys=True) + "\n"
        if fmt == OutputFormat.CSV:
            frame = pd.DataFrame({"i": np.arange(1, len(result.x) + 1), "x": result.x})
            return frame.to_csv(index=False, float_format="%.17g")
        return (
            f"method: {result.method}\n"
            f"x: {_format_vector(result.x)}\n"
            f"iterations: {result.iterations}\n"
            f"converged: {str(result.converged).lower()}\n"
            f"status: {result.status.value}\n"
            f"residual: {result.residual_inf:.6e}\n"
        )


class DiagnoseHandler(CommandHandler):
    """Report the convergence diagnostics of a matrix and the verdict line."""

    def execute(self) -> int:
        A, source = self.load_matrix()
        report = diagnose(A)
        if self.invocation.output_format == OutputFormat.JSON:
            payload = {
                "matrix": source,
                "strictly_diagonally_dominant": report.strictly_diagonally_dominant,
                "spectral_radius_abs_shift": report.spectral_radius_estimate,
                "spectral_radius_converged": report.spectral_radius_converged,
                "is_tree": report.is_tree,
                "component_is_tree": list(report.component_is_tree),
                "verdict": report.verdict,
            }
            self.emit(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        else:
            self.emit(
                f"matrix: {source}\n"
                f"strictly diagonally dominant: {str(report.strictly_diagonally_dominant).lower()}\n"
                f"rho(|I-A|): {report.spectral_radius_estimate:.4f}\n"
                f"tree: {str(report.is_tree).lower()}\n"
                f"{report.verdict}\n"
            )
        return EXIT_OK


class BenchHandler(CommandHandler):
    """Run the convergence-rate benchmark; divergent cells are reported, never fatal."""

    def execute(self) -> int:
        self.log_message(f"Running bench with epsilon={self.invocation.epsilon} max_iters={self.invocation.max_iters}")
        report = bench_table1(self.invocation.epsilon, self.invocation.max_iters)
        fmt = self.invocation.output_format
        if fmt == OutputFormat.JSON:
            self.emit(report.to_json())
        elif fmt == OutputFormat.CSV:
            self.emit(report.to_csv())
        else:
            self.emit(report.to_text())
        return EXIT_OK


class TraceHandler(CommandHandler):
    """Write the per-iteration iterates as CSV: iter,x_1,...,x_n with the start at iter 0."""

    def execute(self) -> int:
        parse_method_key(self.invocation.method)
        A, b, source = self.load_system()
        self.log_message(f"Tracing {self.invocation.method} on {source}")
        result = self.solve(A, b, record_trajectory=True)
        rows = result.trajectory_array()
        frame = pd.DataFrame(rows, columns=[f"x_{k}" for k in range(1, A.n + 1)])
        frame.insert(0, "iter", np.arange(len(rows)))
        self.emit(frame.to_csv(index=False, float_format="%.17g"))
        return EXIT_OK if result.converged else EXIT_NOT_CONVERGED


class CommandHandlerFactory:
    """Factory returning the handler of a command name."""

    handlers = {
        "solve": SolveHandler,
        "diagnose": DiagnoseHandler,
        "bench": BenchHandler,
        "trace": TraceHandler,
    }

    @staticmethod
    def create_handler(invocation: CliInvocation) -> CommandHandler:
        """
        Create and return the handler for invocation.command.

        Raises:
            ValueError: If the command is not recognized
        """
        handler_class: Optional[type] = CommandHandlerFactory.handlers.get(invocation.command)
        if handler_class is None:
            raise ValueError(f"Unknown command: {invocation.command}")
        return handler_class(invocation)
