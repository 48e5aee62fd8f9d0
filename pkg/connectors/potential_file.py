import json
import re
from pathlib import Path
from typing import Any, Dict

import pandas as pd
import structlog
from pydantic import ValidationError

from engine.scattering_length import Potential

logger = structlog.get_logger()

KNOWN_FIELDS = {
    "kind",
    "parameters",
    "support_radius",
    "mass",
    "hbar",
    "beta",
    "anisotropy",
    "table",
    "grid_size",
    "grid_values",
}


class PotentialFileError(ValueError):
    """Malformed potential definition; line is 1-based, 0 when the problem is not tied to one line."""

    def __init__(self, message: str, line: int = 0, path: str | None = None):
        self.line = line
        self.path = path
        where = f"{path}:{line}" if path and line else (path or f"line {line}")
        super().__init__(f"{where}: {message}")


def _line_of(text: str, key: str) -> int:
    for number, line in enumerate(text.splitlines(), start=1):
        if f'"{key}"' in line:
            return number
    return 0


class PotentialFileReader:
    """
    Reads potential definitions.
    The definition is a JSON object; tabulated radial potentials point to a
    two-column (r, V) whitespace separated text file, resolved relative to
    the definition file.
    """

    def read(self, path: str | Path) -> Potential:
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as e:
            raise PotentialFileError(f"cannot read potential file: {e.strerror or e}", path=str(path)) from e
        return self.parse(text, base_dir=path.parent, source=str(path))

    def parse(self, text: str, base_dir: Path | None = None, source: str | None = None) -> Potential:
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as e:
            raise PotentialFileError(f"invalid JSON: {e.msg}", line=e.lineno, path=source) from e
        if not isinstance(raw, dict):
            raise PotentialFileError("potential definition must be a JSON object", line=1, path=source)

        unknown = sorted(set(raw) - KNOWN_FIELDS)
        if unknown:
            raise PotentialFileError(
                f"unknown field '{unknown[0]}'", line=_line_of(text, unknown[0]), path=source
            )

        fields: Dict[str, Any] = {k: v for k, v in raw.items() if k != "table"}
        parameters = dict(fields.get("parameters") or {})
        # square wells may give their radius among the parameters
        if "support_radius" not in fields and "radius" in parameters:
            fields["support_radius"] = parameters["radius"]
        parameters.pop("radius", None)
        fields["parameters"] = parameters

        if "table" in raw:
            table_path = Path(raw["table"])
            if not table_path.is_absolute():
                table_path = (base_dir or Path(".")) / table_path
            fields["table_r"], fields["table_v"] = self.read_table(table_path)

        try:
            potential = Potential(**fields)
        except ValidationError as e:
            error = e.errors()[0]
            loc = [str(part) for part in error["loc"]]
            key = loc[0] if loc else ""
            if key in ("table_r", "table_v"):
                key = "table"
            line = _line_of(text, key) if key else 0
            label = ".".join(loc) or "definition"
            raise PotentialFileError(f"{label}: {error['msg']}", line=line, path=source) from e

        logger.info("potential_loaded", kind=potential.kind, support_radius=potential.support_radius, source=source)
        return potential

    def read_table(self, path: Path) -> tuple[tuple[float, ...], tuple[float, ...]]:
        """Two whitespace separated columns (r, V); blank lines are allowed, every other line must hold two numbers."""
        source = str(path)
        try:
            frame = pd.read_csv(path, sep=r"\s+", header=None, skip_blank_lines=False, dtype=str)
        except FileNotFoundError as e:
            raise PotentialFileError("radial table not found", path=source) from e
        except pd.errors.EmptyDataError as e:
            raise PotentialFileError("radial table is empty", path=source) from e
        except pd.errors.ParserError as e:
            match = re.search(r"line (\d+)", str(e))
            raise PotentialFileError(
                "radial table rows must have two columns", line=int(match.group(1)) if match else 0, path=source
            ) from e

        if frame.shape[1] != 2:
            raise PotentialFileError(f"radial table must have two columns, found {frame.shape[1]}", path=source)

        blank = frame.isna().all(axis=1)
        numeric = frame.apply(pd.to_numeric, errors="coerce")
        bad = numeric.isna().any(axis=1) & ~blank
        if bad.any():
            row = int(bad.idxmax())
            raise PotentialFileError(f"expected two numbers, got {' '.join(frame.loc[row].dropna())!r}", line=row + 1, path=source)

        numeric = numeric[~blank]
        r, v = numeric[0].to_numpy(), numeric[1].to_numpy()
        decreasing = (r[1:] <= r[:-1]).nonzero()[0]
        if len(decreasing):
            row = int(numeric.index[decreasing[0] + 1])
            raise PotentialFileError("r must be strictly increasing", line=row + 1, path=source)
        return tuple(float(x) for x in r), tuple(float(x) for x in v)


potential_file_reader = PotentialFileReader()
