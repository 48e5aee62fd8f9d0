import structlog

from cli import EXIT_OK, EXIT_WARNING, RunConfig, emit, to_csv, to_json
from engine.coefficients import coefficient_engine

logger = structlog.get_logger()


def run(config: RunConfig) -> int:
    mu1 = config.params["mu1"]
    if not 0.0 <= mu1 <= 1.0:
        raise ValueError(f"mu1 must lie in [0, 1], got {mu1}")
    result = coefficient_engine.E(mu1, config.quad)

    if config.output_format == "csv":
        emit(config, to_csv([{"mu1": result.mu1, "E": result.E.value, "E_err": result.E.abs_err}], ["mu1", "E", "E_err"]))
    else:
        emit(config, to_json(result.to_dict()))

    if not result.converged:
        logger.warning("coefficient_not_converged", mu1=mu1, E_err=result.E.abs_err)
        return EXIT_WARNING
    return EXIT_OK
