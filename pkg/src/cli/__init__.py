from .commands import (
    RunConfig,
    UsageError,
    build_parser,
    cmd_analyze,
    cmd_export,
    cmd_solve,
    cmd_sweep_h,
    normalize_sweep,
    run_command,
    sparsity_report,
)

__all__ = [
    "RunConfig",
    "UsageError",
    "build_parser",
    "cmd_analyze",
    "cmd_export",
    "cmd_solve",
    "cmd_sweep_h",
    "normalize_sweep",
    "run_command",
    "sparsity_report",
]
