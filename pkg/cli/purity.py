import structlog

from cli import EXIT_OK, EXIT_WARNING, RunConfig, emit, to_json
from connectors.potential_file import potential_file_reader
from core.config import settings
from engine.coefficients import coefficient_engine
from engine.purity import purity_engine
from engine.scattering_length import scattering_length_engine
from engine.smatrix import smatrix_engine

logger = structlog.get_logger()


def _p0_vector(values: list[float]) -> tuple[float, float, float]:
    if len(values) == 1:
        return (0.0, 0.0, float(values[0]))
    if len(values) == 3:
        return tuple(float(v) for v in values)
    raise ValueError(f"--p0 takes one value (along z) or three components, got {len(values)}")


def run(config: RunConfig) -> int:
    params = config.params
    mu1, s = params["mu1"], params["s"]
    if params.get("potential"):
        sm = scattering_length_engine.low_energy_smatrix(potential_file_reader.read(params["potential"]))
    else:
        sm = smatrix_engine.build(params["c0"], tuple(params.get("y1") or (0.0, 0.0, 0.0)))
    p0 = _p0_vector(params.get("p0") or [0.0])

    coeff = coefficient_engine.E(mu1, config.quad)
    formula = purity_engine.purity_formula(mu1, sm.c0, s, coeff.E, remainder_order=sm.remainder_order.replace("k", "s"))
    mc = purity_engine.purity_mc(mu1, sm, s, p0, config.mc, workers=config.workers)

    slack = params.get("slack")
    slack = settings.PURITY_SLACK if slack is None else slack
    gap = abs(formula.value - mc.value)
    agreement = gap <= 3.0 * mc.abs_err + formula.abs_err + slack

    payload = {
        "mu1": mu1,
        "c0": sm.c0,
        "Y1": list(sm.Y1),
        "s": s,
        "p0": list(p0),
        "E": coeff.E.value,
        "E_err": coeff.E.abs_err,
        "purity_formula": formula.value,
        "purity_formula_err": formula.abs_err,
        "purity_mc": mc.value,
        "stderr": mc.abs_err,
        "samples": config.mc.samples,
        "seed": config.mc.seed,
        "agreement": agreement,
        "slack": slack,
        "leading_order_trusted": formula.leading_order_trusted and mc.leading_order_trusted,
        "remainder_order": formula.remainder_order,
    }
    emit(config, to_json(payload))

    if not agreement:
        logger.warning("purity_disagreement", gap=gap, stderr=mc.abs_err, slack=slack)
        return EXIT_WARNING
    return EXIT_OK
