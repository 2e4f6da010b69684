# Standard Library Imports
import json
import os
from math import comb, isnan
from pathlib import Path
from typing import Any

# Local Application Imports
from .config import logger


def solver_path_from_env(var_name: str) -> str:
    """
    Path of the external SDPA solver binary named by an environment variable.

    Surrounding whitespace is dropped and a leading `~` is expanded. The binary is not looked up here; a
    missing file surfaces when the solver is first run.

    Raises:
        ValueError: If the variable is unset or blank.
    """
    value = os.environ.get(var_name, "").strip()
    if not value:
        raise ValueError(f"{var_name} must name an SDPA-format solver binary (e.g. csdp) to use --solver external.")
    return str(Path(value).expanduser())


def real_basis_size(num_buses: int, order: int, includes_reference: bool = True) -> int:
    """
    Number of monomials of degree at most `order` over the real voltage components of `num_buses` buses.

    The reference bus contributes only V_d, so a set of buses containing it has 2b - 1 variables.

    Args:
        num_buses (int): Number of buses whose components enter the basis.
        order (int): Relaxation order.
        includes_reference (bool): Whether the reference bus is among them.

    Returns:
        int: C(m + order, order) with m the number of real variables.
    """
    num_vars = 2 * num_buses - (1 if includes_reference else 0)
    return comb(num_vars + order, order)


def complex_basis_size(num_buses: int, order: int) -> int:
    """Number of holomorphic monomials of degree at most `order` in `num_buses` complex variables."""
    return comb(num_buses + order, order)


def write_text(path: Path, text: str) -> Path:
    """
    Write text to a file, creating parent directories as needed.

    Args:
        path (Path): Destination file.
        text (str): Content to write.

    Returns:
        Path: The path written.
    """
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as handle:
        handle.write(text)
    logger.debug(f"Wrote {len(text)} characters to {path}")
    return path


def to_json(payload: Any) -> str:
    """Serialize a report payload with stable key order and NaN mapped to null."""
    return json.dumps(_strip_nan(payload), indent=2, sort_keys=True)


def _strip_nan(value: Any) -> Any:
    if isinstance(value, float) and isnan(value):
        return None
    if isinstance(value, dict):
        return {key: _strip_nan(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_strip_nan(item) for item in value]
    return value
