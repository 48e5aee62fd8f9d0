import json
import os
import sys
from pathlib import Path
from typing import Any, Literal

import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator

from engine.quadrature import MCSpec, QuadratureSpec

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_WARNING = 2
EXIT_RESONANCE = 3

Command = Literal["coeff", "table", "figure", "scatlen", "purity", "verify"]


class UsageError(Exception):
    pass


class RunConfig(BaseModel):
    """One validated command invocation."""

    model_config = ConfigDict(frozen=True)

    command: Command
    params: dict[str, Any] = {}
    output_format: Literal["csv", "json", "text"] = "json"
    output_path: Path | None = None
    workers: int | None = Field(default=None, ge=1)
    quad: QuadratureSpec
    mc: MCSpec

    @field_validator("output_path")
    @classmethod
    def check_writable(cls, v: Path | None) -> Path | None:
        if v is None:
            return v
        parent = v.parent if str(v.parent) else Path(".")
        if not parent.is_dir():
            raise ValueError(f"Output directory does not exist: {parent}")
        if not os.access(parent, os.W_OK) or (v.exists() and not os.access(v, os.W_OK)):
            raise ValueError(f"Output path is not writable: {v}")
        return v


def emit(config: RunConfig, text: str) -> None:
    """Writes a payload to --out or stdout."""
    if config.output_path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        config.output_path.write_text(text, encoding="utf-8")


def to_json(payload: Any) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def to_csv(rows: list[dict], columns: list[str]) -> str:
    frame = pd.DataFrame(rows, columns=columns)
    return frame.to_csv(index=False, float_format="%.6g", lineterminator="\n")
