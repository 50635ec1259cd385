"""Built-in datasets and CSV input/output."""

from __future__ import annotations

import csv
import io
import math
import sys
from dataclasses import dataclass
from pathlib import Path

from twojack.errors import MissingSample, ParseError, SummaryOnlyDataset, UnknownDataset
from twojack.estimators import TwoSampleData

# Heyl and Cook gravity measurements, deviations from 980,060e3 cm/s^2.
GRAVITY_1 = (78, 78, 78, 86, 87, 81, 73, 67, 75, 82, 83)
GRAVITY_2 = (84, 86, 85, 82, 77, 76, 80, 83, 81, 78, 78, 78)

# Strength of eight-year-old children in seven Japanese prefectures
# (six Touhoku prefectures and Hokkaido).
CHILD_BOYS = (52.55, 54.08, 54.25, 52.92, 56.31, 53.63, 52.52)
CHILD_GIRLS = (52.95, 55.72, 56.14, 54.24, 58.19, 55.32, 54.45)


@dataclass(frozen=True)
class NamedDataset:
    name: str
    data: TwoSampleData
    description: str
    source: str


@dataclass(frozen=True)
class SummaryRecord:
    """A dataset known only through published summary statistics."""

    name: str
    description: str
    source: str
    n1: int
    n2: int
    mean1: float
    mean2: float
    sd1: float
    sd2: float
    note: str = "summary-only: raw data unavailable; tables based on it cannot be reproduced"


_BUILTINS = {
    "gravity": lambda: NamedDataset(
        "gravity",
        TwoSampleData.from_arrays(GRAVITY_1, GRAVITY_2),
        "Heyl and Cook measurements of the acceleration due to gravity (two series)",
        "Heyl and Cook gravity series",
    ),
    "child-girls-first": lambda: NamedDataset(
        "child-girls-first",
        TwoSampleData.from_arrays(CHILD_GIRLS, CHILD_BOYS),
        "Japanese child strength data; sample 1 = girls, sample 2 = boys",
        "Touhoku/Hokkaido strength survey",
    ),
    "child-boys-first": lambda: NamedDataset(
        "child-boys-first",
        TwoSampleData.from_arrays(CHILD_BOYS, CHILD_GIRLS),
        "Japanese child strength data; sample 1 = boys, sample 2 = girls",
        "Touhoku/Hokkaido strength survey",
    ),
}

SUMMARIES = {
    "chip": SummaryRecord(
        "chip",
        "Chip width measurements from two cutting saws",
        "cutting-saw chip widths (summaries)",
        n1=240,
        n2=240,
        mean1=6.293254,
        mean2=6.292667,
        sd1=0.003785844,
        sd2=0.004962341,
    )
}


def builtin_names() -> list[str]:
    return list(_BUILTINS)


def load_builtin(name: str) -> NamedDataset:
    if name in SUMMARIES:
        raise SummaryOnlyDataset(f"dataset {name!r} is summary-only; raw data unavailable")
    try:
        return _BUILTINS[name]()
    except KeyError:
        raise UnknownDataset(f"unknown dataset {name!r}; choose from {', '.join(_BUILTINS)}") from None


def _parse_value(text: str, line: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"not a number: {text!r}", line) from None
    if not math.isfinite(value):
        raise ParseError(f"non-finite value: {text!r}", line)
    return value


def _open_text(source):
    if source == "-":
        return sys.stdin
    if isinstance(source, io.TextIOBase):
        return source
    return open(Path(source), newline="", encoding="utf-8")


def parse_two_column(stream) -> TwoSampleData:
    """Parse ``sample,value`` rows (header required, sample in {1, 2})."""
    samples = {"1": [], "2": []}
    reader = csv.reader(stream)
    header = None
    for line, row in enumerate(reader, start=1):
        if not row or all(not c.strip() for c in row):
            continue
        if header is None:
            header = [c.strip().lower() for c in row]
            if header != ["sample", "value"]:
                raise ParseError("expected header 'sample,value'", line)
            continue
        if len(row) != 2:
            raise ParseError(f"expected 2 fields, got {len(row)}", line)
        key = row[0].strip()
        if key not in samples:
            raise ParseError(f"sample must be 1 or 2, got {key!r}", line)
        samples[key].append(_parse_value(row[1].strip(), line))
    if header is None:
        raise ParseError("empty input")
    for key, values in samples.items():
        if not values:
            raise MissingSample(f"sample {key} has no observations")
    return TwoSampleData.from_arrays(samples["1"], samples["2"])


def _read_column(source) -> list[float]:
    stream = _open_text(source)
    try:
        values = []
        for line, text in enumerate(stream, start=1):
            text = text.strip()
            if text:
                values.append(_parse_value(text, line))
        return values
    finally:
        if stream is not sys.stdin and stream is not source:
            stream.close()


def read_csv(path, schema: str = "two-column") -> TwoSampleData:
    """Read two samples.

    ``schema="two-column"`` expects one file with a ``sample,value`` header;
    ``schema="two-files"`` expects ``path`` to be a pair of files with one
    value per line.  ``"-"`` reads standard input.
    """
    if schema == "two-column":
        stream = _open_text(path)
        try:
            return parse_two_column(stream)
        finally:
            if stream is not sys.stdin and stream is not path:
                stream.close()
    if schema == "two-files":
        first, second = path
        x1, x2 = _read_column(first), _read_column(second)
        if not x1 or not x2:
            raise MissingSample("both files must contain at least one value")
        return TwoSampleData.from_arrays(x1, x2)
    raise ValueError(f"unknown schema {schema!r}")


def format_value(value: float) -> str:
    """Shortest decimal text that round-trips to the same double."""
    value = float(value)
    return str(int(value)) if value.is_integer() and abs(value) < 1e16 else repr(value)


def write_csv(data: TwoSampleData, dest=None) -> str:
    """Write ``data`` in the two-column format; returns the text as well."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["sample", "value"])
    for label, sample in (("1", data.x1), ("2", data.x2)):
        for v in sample:
            writer.writerow([label, format_value(v)])
    text = buf.getvalue()
    if dest is not None:
        if hasattr(dest, "write"):
            dest.write(text)
        else:
            Path(dest).write_text(text, encoding="utf-8")
    return text
