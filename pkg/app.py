import logging as L
from pathlib import Path
from typing import Any, Dict, Optional

import typer
from pydantic import ValidationError

from common.config import CliInvocation, OutputFormat, Schedule, load_definitions
from commands.handlers import EXIT_ERROR, CommandHandlerFactory

APP_YAML = Path(__file__).with_name("app.yaml")

app = typer.Typer(help="Gaussian belief propagation solver for symmetric linear systems.", add_completion=False)


def load_settings(file_path: Path = APP_YAML) -> Dict[str, Any]:
    """
    Load the application settings, falling back to built-in defaults when the file is absent.

    Returns:
        dict: {"logging": {...}, "defaults": {...}}
    """
    try:
        settings = load_definitions(file_path)
    except FileNotFoundError:
        L.warning(f"{file_path} not found, using built-in defaults")
        settings = {}
    settings.setdefault("logging", {})
    settings.setdefault("defaults", {})
    return settings


settings = load_settings()
defaults = settings["defaults"]


def configure_logging(verbose: bool) -> None:
    level = "INFO" if verbose else str(settings["logging"].get("level", "WARNING")).upper()
    L.basicConfig(level=getattr(L, level, L.WARNING),
                  format=settings["logging"].get("format", "%(asctime)s %(levelname)s %(name)s: %(message)s"),
                  force=True)


def run_command(command: str, verbose: bool, **options: Any) -> None:
    """Validate the invocation, dispatch it to its handler and exit with the handler's code."""
    configure_logging(verbose)
    try:
        invocation = CliInvocation(command=command, **{k: v for k, v in options.items() if v is not None})
        handler = CommandHandlerFactory.create_handler(invocation)
    except (ValidationError, ValueError) as e:
        error_msg = f"Invalid {command} invocation: {str(e)}"
        L.error(error_msg)
        typer.echo(error_msg, err=True)
        raise typer.Exit(code=EXIT_ERROR)
    raise typer.Exit(code=handler.run())


MatrixOption = typer.Option(None, "--matrix", help="Matrix Market file holding A")
RhsOption = typer.Option(None, "--rhs", help="Vector file holding b (one value per line or single-column CSV)")
FixtureOption = typer.Option(None, "--fixture", help="Embedded correlation fixture: R3 or R4")
EpsilonOption = typer.Option(defaults.get("epsilon", 1e-6), "--epsilon", help="Convergence threshold")
MaxItersOption = typer.Option(defaults.get("max_iters", 10_000), "--max-iters", help="Iteration cap")
FormatOption = typer.Option(OutputFormat(defaults.get("format", "text")), "--format", help="Output format")
OutOption = typer.Option(None, "--out", help="Write output to this file instead of stdout")
VerboseOption = typer.Option(False, "--verbose", "-v", help="Log progress at INFO level")


@app.command()
def solve(
    matrix: Optional[Path] = MatrixOption,
    rhs: Optional[Path] = RhsOption,
    fixture: Optional[str] = FixtureOption,
    method: str = typer.Option(defaults.get("method", "gabp-serial"), "--method",
                               help="jacobi, gs, sor, gabp, gabp-parallel, gabp-serial, gabp-jacobi; "
                                    "append +steffensen to accelerate"),
    epsilon: float = EpsilonOption,
    max_iters: int = MaxItersOption,
    schedule: Optional[Schedule] = typer.Option(None, "--schedule", help="GaBP schedule for --method gabp"),
    omega: Optional[str] = typer.Option(None, "--omega", help="SOR weight in (0, 2) or 'auto'"),
    damping: float = typer.Option(defaults.get("damping", 0.0), "--damping", help="GaBP message damping in [0, 1)"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Reserved; no solve path is random"),
    output_format: OutputFormat = FormatOption,
    out: Optional[Path] = OutOption,
    verbose: bool = VerboseOption,
) -> None:
    """Solve A x = b; exit 0 when converged, 2 when not, 1 on bad input."""
    run_command("solve", verbose, matrix_path=matrix, rhs_path=rhs, fixture=fixture, method=method,
                epsilon=epsilon, max_iters=max_iters, schedule=schedule, omega=omega, damping=damping,
                seed=seed, output_format=output_format, output_path=out)


@app.command()
def diagnose(
    matrix: Optional[Path] = MatrixOption,
    fixture: Optional[str] = FixtureOption,
    output_format: OutputFormat = FormatOption,
    out: Optional[Path] = OutOption,
    verbose: bool = VerboseOption,
) -> None:
    """Report diagonal dominance, rho(|I-A|), the tree check and the convergence verdict."""
    run_command("diagnose", verbose, matrix_path=matrix, fixture=fixture, output_format=output_format,
                output_path=out)


@app.command()
def bench(
    epsilon: float = EpsilonOption,
    max_iters: int = MaxItersOption,
    output_format: OutputFormat = FormatOption,
    out: Optional[Path] = OutOption,
    verbose: bool = VerboseOption,
) -> None:
    """Run the eight-method convergence-rate table on the R3 and R4 fixtures."""
    run_command("bench", verbose, epsilon=epsilon, max_iters=max_iters, output_format=output_format,
                output_path=out)


@app.command()
def trace(
    matrix: Optional[Path] = MatrixOption,
    rhs: Optional[Path] = RhsOption,
    fixture: Optional[str] = FixtureOption,
    method: str = typer.Option(defaults.get("method", "gabp-serial"), "--method", help="Method key"),
    epsilon: float = EpsilonOption,
    max_iters: int = MaxItersOption,
    schedule: Optional[Schedule] = typer.Option(None, "--schedule", help="GaBP schedule for --method gabp"),
    omega: Optional[str] = typer.Option(None, "--omega", help="SOR weight in (0, 2) or 'auto'"),
    damping: float = typer.Option(defaults.get("damping", 0.0), "--damping", help="GaBP message damping in [0, 1)"),
    out: Optional[Path] = OutOption,
    verbose: bool = VerboseOption,
) -> None:
    """Write the iterates of one solve as CSV (iter,x_1,...,x_n), starting point first."""
    run_command("trace", verbose, matrix_path=matrix, rhs_path=rhs, fixture=fixture, method=method,
                epsilon=epsilon, max_iters=max_iters, schedule=schedule, omega=omega, damping=damping,
                output_format=OutputFormat.CSV, output_path=out)


if __name__ == "__main__":
    app()
