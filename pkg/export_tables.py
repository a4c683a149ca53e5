"""
Tabular export of command reports and a side-by-side moment overview.

Run directly to write the moment overview of every built-in operator:
    python export_tables.py --n-max 23 --output moments.xlsx
"""

import argparse
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import pandas as pd
from mpmath import workdps
from openpyxl import load_workbook
from openpyxl.styles import Font, PatternFill, Alignment
from openpyxl.utils import get_column_letter

from core.conversions import format_bigfloat, to_bigfloat
from core.data_models import BUILTIN_OPERATORS, FAST_N_MAX, OutputFormat
from core.exceptions import InvalidConfigError
from moments.moment_engine import MomentEngine


HEADER_FILL = PatternFill(start_color="DDEBF7", end_color="DDEBF7", fill_type="solid")
SHEET_NAME = "Data"


def rows_to_dataframe(rows: List[Dict[str, Any]]) -> pd.DataFrame:
    """One row per record, columns in first-seen order."""
    if not rows:
        raise InvalidConfigError("nothing to export: the report has no tabular rows")
    columns: List[str] = []
    for row in rows:
        for key in row:
            if key not in columns:
                columns.append(key)
    return pd.DataFrame(rows, columns=columns)


def _format_sheet(path: Path):
    """Bold header, fill and column widths sized to the content."""
    workbook = load_workbook(path)
    sheet = workbook[SHEET_NAME]
    for cell in sheet[1]:
        cell.font = Font(bold=True)
        cell.fill = HEADER_FILL
        cell.alignment = Alignment(horizontal="center")
    for index, column in enumerate(sheet.iter_cols(min_row=1, max_row=sheet.max_row), start=1):
        width = max(len(str(cell.value)) if cell.value is not None else 0 for cell in column)
        sheet.column_dimensions[get_column_letter(index)].width = min(max(width + 2, 8), 60)
    sheet.freeze_panes = "A2"
    workbook.save(path)
    workbook.close()


def export_rows(rows: List[Dict[str, Any]], output_format: OutputFormat, path: Optional[Path] = None) -> Optional[str]:
    """
    Write report rows as CSV or XLSX.

    Args:
        rows: Records from a command report
        output_format: CSV or XLSX
        path: Destination; CSV without a path is returned as text

    Returns:
        The CSV text when no path is given, else None
    """
    df = rows_to_dataframe(rows)
    if output_format == OutputFormat.CSV:
        if path is None:
            return df.to_csv(index=False, lineterminator="\n")
        df.to_csv(path, index=False, lineterminator="\n")
        return None
    if output_format == OutputFormat.XLSX:
        if path is None:
            raise InvalidConfigError("xlsx output needs --output")
        df.to_excel(path, index=False, sheet_name=SHEET_NAME, engine="openpyxl")
        _format_sheet(Path(path))
        return None
    raise InvalidConfigError(f"tabular export does not support {output_format.value}")


def moment_overview(n_max: int, digits: int = 5, debug: bool = False) -> pd.DataFrame:
    """a_n of every built-in operator, one column each, rounded to `digits` significant figures."""
    engine = MomentEngine(debug=debug)
    columns = {"n": list(range(n_max + 1))}
    for name, spec in BUILTIN_OPERATORS.items():
        table = engine.build(spec, n_max)
        with workdps(30):
            columns[name] = [format_bigfloat(to_bigfloat(a), digits) for a in table.full]
    return pd.DataFrame(columns)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="Export the moment overview of the built-in operators")
    parser.add_argument("--n-max", type=int, default=FAST_N_MAX)
    parser.add_argument("--digits", type=int, default=5, help="significant figures per entry")
    parser.add_argument("--output", type=Path, required=True, help=".csv or .xlsx")
    parser.add_argument("--debug", action="store_true")
    args = parser.parse_args(argv)

    try:
        df = moment_overview(args.n_max, args.digits, args.debug)
        output_format = OutputFormat.XLSX if args.output.suffix == ".xlsx" else OutputFormat.CSV
        export_rows(df.to_dict(orient="records"), output_format, args.output)
    except InvalidConfigError as e:
        print(f"[ERROR] {e}")
        return e.exit_code
    print(f"[OK] {len(df)} rows written to {args.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
