import numpy as np

from cli import RunConfig
from cli.table import emit_curve
from engine.coefficients import coefficient_engine


def figure_grid(points: int, start: float = 0.5, stop: float = 1.0) -> list[float]:
    if points < 2:
        raise ValueError(f"A curve needs at least 2 points, got {points}")
    # same rounding as mu_grid so shared abscissae are identical floats
    return [float(x) for x in np.round(np.linspace(start, stop, points), 10)]


def run(config: RunConfig) -> int:
    grid = figure_grid(config.params["points"], config.params["start"], config.params["stop"])
    table = coefficient_engine.table(grid, config.quad, workers=config.workers)
    return emit_curve(config, table)
