"""Free-format MPS emission and parsing for ModelIR.

The writer emits NAME/ROWS/COLUMNS/RHS/BOUNDS/ENDATA with one entry per
line, binaries as BV bound records, and full-precision numbers, so
``parse_mps(emit_mps(m))`` reproduces the model exactly up to coefficient
ordering.  The parser is strict: unknown sections, rows or malformed fields
raise with the offending line number.
"""

from __future__ import annotations

import math

from .errors import MpsParseError
from .model import EQUAL, GREATER, LESS, Constraint, ModelIR, Variable

OBJ_ROW = "obj"
RHS_SET = "rhs"
BND_SET = "bnd"

_SENSE_TO_MPS = {LESS: "L", EQUAL: "E", GREATER: "G"}
_MPS_TO_SENSE = {v: k for k, v in _SENSE_TO_MPS.items()}


def _num(value: float) -> str:
    if float(value).is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(float(value))


def emit_mps(model: ModelIR) -> str:
    model.check()
    lines = [f"NAME {model.name or 'model'}"]
    lines.append("ROWS")
    lines.append(f" N {OBJ_ROW}")
    for c in model.constraints:
        lines.append(f" {_SENSE_TO_MPS[c.sense]} {c.name}")

    by_var: dict[str, list[tuple[str, float]]] = {v.name: [] for v in model.variables}
    for c in model.constraints:
        for var_name, coef in c.coeffs:
            by_var[var_name].append((c.name, coef))

    lines.append("COLUMNS")
    for v in model.variables:
        entries = []
        if v.obj != 0.0 or not by_var[v.name]:
            entries.append((OBJ_ROW, v.obj))
        entries.extend(by_var[v.name])
        for row, coef in entries:
            lines.append(f" {v.name} {row} {_num(coef)}")

    lines.append("RHS")
    for c in model.constraints:
        if c.rhs != 0.0:
            lines.append(f" {RHS_SET} {c.name} {_num(c.rhs)}")

    lines.append("BOUNDS")
    for v in model.variables:
        if v.integer and v.lb == 0.0 and v.ub == 1.0:
            lines.append(f" BV {BND_SET} {v.name}")
            continue
        if v.integer:
            raise MpsParseError(0, f"only binary integers are supported, got {v.name}")
        if v.lb == 0.0 and math.isinf(v.ub):
            continue
        if math.isinf(v.lb) and v.lb < 0:
            lines.append(f" MI {BND_SET} {v.name}")
        elif v.lb == v.ub:
            lines.append(f" FX {BND_SET} {v.name} {_num(v.lb)}")
            continue
        elif v.lb != 0.0:
            lines.append(f" LO {BND_SET} {v.name} {_num(v.lb)}")
        if not math.isinf(v.ub):
            lines.append(f" UP {BND_SET} {v.name} {_num(v.ub)}")

    lines.append("ENDATA")
    return "\n".join(lines) + "\n"


def _parse_value(token: str, line_no: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise MpsParseError(line_no, f"expected a number, got {token!r}")
    if not math.isfinite(value):
        raise MpsParseError(line_no, f"coefficients must be finite, got {token!r}")
    return value


def parse_mps(text: str) -> ModelIR:
    name = "model"
    section = None
    row_sense: dict[str, str] = {}
    row_order: list[str] = []
    obj_row: str | None = None
    col_order: list[str] = []
    col_obj: dict[str, float] = {}
    col_entries: dict[str, list[tuple[str, float]]] = {}
    seen_pairs: set[tuple[str, str]] = set()
    rhs: dict[str, float] = {}
    bounds_lb: dict[str, float] = {}
    bounds_ub: dict[str, float] = {}
    integer: dict[str, bool] = {}
    in_integer_block = False
    ended = False

    for line_no, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip() or raw.lstrip().startswith("*"):
            continue
        if ended:
            raise MpsParseError(line_no, "content after ENDATA")
        tokens = raw.split()
        head = tokens[0].upper()
        is_section = not raw[0].isspace()

        if is_section:
            if head == "NAME":
                name = tokens[1] if len(tokens) > 1 else "model"
                section = "NAME"
            elif head in ("ROWS", "COLUMNS", "RHS", "BOUNDS"):
                section = head
            elif head == "ENDATA":
                ended = True
            elif head == "RANGES":
                raise MpsParseError(line_no, "RANGES section is not supported")
            else:
                raise MpsParseError(line_no, f"unknown section {tokens[0]!r}")
            continue

        if section == "ROWS":
            if len(tokens) != 2:
                raise MpsParseError(line_no, f"row line needs 'sense name', got {raw.strip()!r}")
            sense, row_name = tokens[0].upper(), tokens[1]
            if row_name in row_sense or row_name == obj_row:
                raise MpsParseError(line_no, f"duplicate row {row_name!r}")
            if sense == "N":
                if obj_row is not None:
                    raise MpsParseError(line_no, "multiple objective (N) rows")
                obj_row = row_name
            elif sense in _MPS_TO_SENSE:
                row_sense[row_name] = _MPS_TO_SENSE[sense]
                row_order.append(row_name)
            else:
                raise MpsParseError(line_no, f"unknown row sense {tokens[0]!r}")

        elif section == "COLUMNS":
            if len(tokens) >= 3 and tokens[1].upper() == "'MARKER'":
                marker = tokens[2].upper().strip("'")
                if marker == "INTORG":
                    in_integer_block = True
                elif marker == "INTEND":
                    in_integer_block = False
                else:
                    raise MpsParseError(line_no, f"unknown marker {tokens[2]!r}")
                continue
            if len(tokens) not in (3, 5):
                raise MpsParseError(
                    line_no, f"column line needs 'col row value [row value]', got {raw.strip()!r}"
                )
            col = tokens[0]
            if col not in col_entries:
                col_order.append(col)
                col_entries[col] = []
                col_obj[col] = 0.0
                integer[col] = in_integer_block
            for row_name, value_tok in zip(tokens[1::2], tokens[2::2]):
                value = _parse_value(value_tok, line_no)
                if row_name == obj_row:
                    col_obj[col] = value
                elif row_name in row_sense:
                    if (col, row_name) in seen_pairs:
                        raise MpsParseError(
                            line_no, f"duplicate entry for column {col!r} in row {row_name!r}"
                        )
                    seen_pairs.add((col, row_name))
                    col_entries[col].append((row_name, value))
                else:
                    raise MpsParseError(line_no, f"unknown row {row_name!r}")

        elif section == "RHS":
            if len(tokens) not in (3, 5):
                raise MpsParseError(
                    line_no, f"rhs line needs 'set row value [row value]', got {raw.strip()!r}"
                )
            for row_name, value_tok in zip(tokens[1::2], tokens[2::2]):
                if row_name == obj_row:
                    raise MpsParseError(line_no, "objective-row RHS is not supported")
                if row_name not in row_sense:
                    raise MpsParseError(line_no, f"unknown row {row_name!r}")
                rhs[row_name] = _parse_value(value_tok, line_no)

        elif section == "BOUNDS":
            kind = tokens[0].upper()
            if kind in ("UP", "LO", "FX", "UI", "LI"):
                if len(tokens) != 4:
                    raise MpsParseError(line_no, "bound line needs 'kind set col value'")
                col, value = tokens[2], _parse_value(tokens[3], line_no)
            elif kind in ("BV", "FR", "MI", "PL"):
                if len(tokens) != 3:
                    raise MpsParseError(line_no, "bound line needs 'kind set col'")
                col, value = tokens[2], None
            else:
                raise MpsParseError(line_no, f"unknown bound type {tokens[0]!r}")
            if col not in col_entries:
                raise MpsParseError(line_no, f"bound for unknown column {col!r}")
            if kind == "UP":
                bounds_ub[col] = value
            elif kind == "LO":
                bounds_lb[col] = value
            elif kind == "FX":
                bounds_lb[col] = value
                bounds_ub[col] = value
            elif kind == "BV":
                bounds_lb[col] = 0.0
                bounds_ub[col] = 1.0
                integer[col] = True
            elif kind == "FR":
                bounds_lb[col] = -math.inf
            elif kind == "MI":
                bounds_lb[col] = -math.inf
            elif kind == "PL":
                bounds_ub[col] = math.inf
            elif kind == "UI":
                bounds_ub[col] = value
                integer[col] = True
            elif kind == "LI":
                bounds_lb[col] = value
                integer[col] = True

        elif section is None:
            raise MpsParseError(line_no, "data before any section header")

    if not ended:
        raise MpsParseError(len(text.splitlines()), "missing ENDATA")
    if obj_row is None:
        raise MpsParseError(1, "no objective (N) row declared")

    variables = [
        Variable(
            name=col,
            lb=bounds_lb.get(col, 0.0),
            ub=bounds_ub.get(col, math.inf),
            integer=integer.get(col, False),
            obj=col_obj[col],
        )
        for col in col_order
    ]
    by_row: dict[str, list[tuple[str, float]]] = {r: [] for r in row_order}
    for col in col_order:
        for row_name, value in col_entries[col]:
            by_row[row_name].append((col, value))
    constraints = [
        Constraint(r, row_sense[r], rhs.get(r, 0.0), tuple(by_row[r])) for r in row_order
    ]
    model = ModelIR(name, variables, constraints)
    model.check()
    return model
