"""CSV rows of regret reports; floats use the shortest round-trip repr."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, List, Tuple, Union

from ..core import Horizon, RegretReport
from ..errors import SerializationError

REPORT_FIELDS = ("regret", "loop_part", "straight_part", "normalized", "truncation_bound")


@dataclass(frozen=True)
class ReportRow:
    horizon: Horizon
    k: int
    family: str
    eta_spec: str
    adversary: str
    report: RegretReport
    extra: Tuple[Tuple[str, str], ...] = ()


def header(finite: bool, extra_keys: Tuple[str, ...] = ()) -> List[str]:
    return ["T" if finite else "delta", "k", "family", "eta_spec", "adversary", *REPORT_FIELDS, *extra_keys]


def _row(r: ReportRow) -> list:
    hz = r.horizon
    size = str(hz.steps) if hz.is_finite else repr(hz.stop_prob)
    return [size, str(r.k), r.family, r.eta_spec, r.adversary] + [repr(float(getattr(r.report, f))) for f in REPORT_FIELDS] + [
        v for _, v in r.extra
    ]


def write_rows(rows: Iterable[ReportRow], out: Union[io.TextIOBase, None] = None) -> str:
    """Write rows (one horizon kind) to ``out`` and return the CSV text."""
    rows = list(rows)
    if not rows:
        raise SerializationError("no rows to write")
    finite = rows[0].horizon.is_finite
    if any(r.horizon.is_finite != finite for r in rows):
        raise SerializationError("rows mix finite and geometric horizons")
    keys = tuple(k for k, _ in rows[0].extra)
    if any(tuple(k for k, _ in r.extra) != keys for r in rows):
        raise SerializationError("rows carry different extra columns")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header(finite, keys))
    for r in rows:
        w.writerow(_row(r))
    text = buf.getvalue()
    if out is not None:
        out.write(text)
    return text


def read_rows(text: str) -> List[ReportRow]:
    """Parse CSV written by ``write_rows``; trailing columns come back as ``extra``."""
    reader = csv.reader(io.StringIO(text))
    try:
        head = next(reader)
    except StopIteration as exc:
        raise SerializationError("empty CSV") from exc
    base = len(header(True))
    if head[0] not in ("T", "delta") or head[1:base] != header(True)[1:]:
        raise SerializationError(f"unexpected CSV header {head!r}")
    finite = head[0] == "T"
    keys = head[base:]
    out = []
    for line in reader:
        if len(line) != len(head):
            raise SerializationError(f"row has {len(line)} fields, expected {len(head)}")
        try:
            hz = Horizon.finite(int(line[0])) if finite else Horizon.geometric(float(line[0]))
            vals = {f: float(v) for f, v in zip(REPORT_FIELDS, line[5:base])}
            k = int(line[1])
        except ValueError as exc:
            raise SerializationError(f"bad CSV row {line!r}: {exc}") from exc
        extra = tuple(zip(keys, line[base:]))
        out.append(ReportRow(hz, k, line[2], line[3], line[4], RegretReport(**vals), extra))
    return out
