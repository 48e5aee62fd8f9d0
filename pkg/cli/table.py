import structlog

from cli import EXIT_OK, EXIT_WARNING, RunConfig, emit, to_csv, to_json
from engine.coefficients import CoeffTable, coefficient_engine

logger = structlog.get_logger()

COLUMNS = ["mu1", "E", "E_err"]


def emit_curve(config: RunConfig, table: CoeffTable) -> int:
    """Emits (mu1, E, E_err) rows; failed or unconverged points turn the exit status into a warning."""
    rows = [{"mu1": r.mu1, "E": r.E.value, "E_err": r.E.abs_err} for r in table.rows]
    if config.output_format == "json":
        emit(config, to_json({"rows": rows, "failures": {str(k): v for k, v in table.failures.items()}}))
    else:
        emit(config, to_csv(rows, COLUMNS))

    unconverged = [r.mu1 for r in table.rows if not r.converged]
    if table.failures or unconverged:
        logger.warning("curve_incomplete", failed=sorted(table.failures), unconverged=unconverged)
        return EXIT_WARNING
    if not table.monotone:
        logger.warning("curve_not_monotone")
    return EXIT_OK


def run(config: RunConfig) -> int:
    grid = coefficient_engine.mu_grid(config.params["start"], config.params["stop"], config.params["step"])
    table = coefficient_engine.table(grid, config.quad, workers=config.workers)
    return emit_curve(config, table)
