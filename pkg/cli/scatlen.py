from cli import EXIT_OK, EXIT_WARNING, RunConfig, emit, to_json
from connectors.potential_file import potential_file_reader
from engine.scattering_length import scattering_length_engine


def run(config: RunConfig) -> int:
    pot = potential_file_reader.read(config.params["potential"])
    coarse, fine = scattering_length_engine.solution_pair(pot, config.params.get("grid"))
    c0 = scattering_length_engine.c0_estimate(coarse, fine)

    payload = {
        "c0": c0.value,
        "c0_err": c0.abs_err,
        "Y1": list(fine.Y1),
        "Y1_err": max(abs(a - b) for a, b in zip(fine.Y1, coarse.Y1)),
        "condition": fine.condition,
        "method": fine.method,
        "grid": fine.grid_size,
        "converged": c0.converged,
        "remainder_order": scattering_length_engine.remainder_order(pot.beta),
    }
    emit(config, to_json(payload))
    return EXIT_OK if c0.converged else EXIT_WARNING
