"""
Validated configuration objects and the app.yaml loader.

Solver settings are frozen pydantic models so that an invalid tolerance or damping
factor is rejected where it is written rather than deep inside an iteration.
"""

from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator


class Schedule(str, Enum):
    PARALLEL = "parallel"
    SERIAL = "serial"


class Acceleration(str, Enum):
    NONE = "none"
    STEFFENSEN = "steffensen"


class SolverMode(str, Enum):
    GABP = "gabp"
    JACOBI_VARIANT = "jacobi_variant"


class ClassicalMethod(str, Enum):
    JACOBI = "jacobi"
    GAUSS_SEIDEL = "gauss_seidel"
    SOR = "sor"


class OutputFormat(str, Enum):
    TEXT = "text"
    JSON = "json"
    CSV = "csv"


class SolverConfig(BaseModel):
    """
    Settings of a GaBP solve.

    Attributes:
        epsilon (float): Convergence threshold on every iterated value
        max_iters (int): Round cap
        schedule (Schedule): Parallel (synchronous) or serial (asynchronous) rounds
        node_order (list, optional): Permutation used by serial sweeps, ascending when None
        damping (float): Weight gamma of the previous message, 0 <= gamma < 1
        acceleration (Acceleration): Optional Steffensen acceleration
        mode (SolverMode): Full GaBP or the Jacobi variant with zero message precisions
        record_trajectory (bool): Keep a snapshot of the node means after every round
    """
    model_config = ConfigDict(frozen=True)

    epsilon: float = Field(1e-6, gt=0)
    max_iters: int = Field(10_000, ge=1)
    schedule: Schedule = Schedule.PARALLEL
    node_order: Optional[List[int]] = None
    damping: float = Field(0.0, ge=0.0, lt=1.0)
    acceleration: Acceleration = Acceleration.NONE
    mode: SolverMode = SolverMode.GABP
    record_trajectory: bool = False


class ClassicalConfig(BaseModel):
    """
    Settings of a classical stationary iteration.

    Attributes:
        method (ClassicalMethod): Jacobi, Gauss-Seidel or SOR
        omega (float, optional): SOR weight in (0, 2); None selects the optimal weight
        epsilon (float): Threshold on the largest component change
        max_iters (int): Iteration cap
        record_trajectory (bool): Keep every iterate
    """
    model_config = ConfigDict(frozen=True)

    method: ClassicalMethod = ClassicalMethod.JACOBI
    omega: Optional[float] = Field(None, gt=0.0, lt=2.0)
    epsilon: float = Field(1e-6, gt=0)
    max_iters: int = Field(10_000, ge=1)
    record_trajectory: bool = False


class CliInvocation(BaseModel):
    """One parsed command line, validated before any file is touched."""
    model_config = ConfigDict(frozen=True)

    command: str
    matrix_path: Optional[Path] = None
    rhs_path: Optional[Path] = None
    fixture: Optional[str] = None
    method: str = "gabp-serial"
    epsilon: float = Field(1e-6, gt=0)
    max_iters: int = Field(10_000, ge=1)
    schedule: Optional[Schedule] = None
    omega: Union[float, str, None] = None
    damping: float = Field(0.0, ge=0.0, lt=1.0)
    seed: Optional[int] = None
    output_format: OutputFormat = OutputFormat.TEXT
    output_path: Optional[Path] = None

    @field_validator("omega")
    @classmethod
    def _check_omega(cls, value: Union[float, str, None]) -> Union[float, str, None]:
        if value is None or value == "auto":
            return value
        try:
            omega = float(value)
        except (TypeError, ValueError):
            raise ValueError(f"omega must be a number in (0, 2) or 'auto', got {value!r}")
        if not 0.0 < omega < 2.0:
            raise ValueError(f"omega must lie in (0, 2), got {omega}")
        return omega


def load_definitions(file_path: Union[str, Path]) -> Dict[str, Any]:
    """
    Load and parse the YAML application settings.

    Args:
        file_path (str | Path): Path to the YAML file

    Returns:
        dict: Parsed YAML content, empty when the file holds nothing

    Raises:
        yaml.YAMLError: If the YAML file is malformed
        FileNotFoundError: If the file does not exist
    """
    with open(file_path, "r") as file:
        return yaml.safe_load(file) or {}
