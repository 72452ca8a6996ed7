"""
Reporting - CSV and JSON artifacts of evaluation rows and loss curves

    metrics CSV:    head,K,shots,metric,mean,std,n,seed
    loss curve CSV: step,loss

Floats are written with repr so files reproduce byte for byte.
"""
import csv
import io
import json
from typing import IO, Iterable, List, Optional, Sequence, Tuple, Union

from models.metrics import CSV_COLUMNS, MetricsRow

LOSS_CURVE_COLUMNS = ("step", "loss")

Target = Union[str, IO[str]]


def _write(target: Target, text: str) -> None:
    if isinstance(target, str):
        with open(target, "w", newline="") as fh:
            fh.write(text)
    else:
        target.write(text)


def metrics_csv(rows: Iterable[MetricsRow]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow(row.to_csv_row())
    return buffer.getvalue()


def write_metrics_csv(rows: Iterable[MetricsRow], target: Target) -> None:
    """Write rows under the CSV_COLUMNS header to a path or text stream."""
    _write(target, metrics_csv(rows))


def read_metrics_csv(source: Target) -> List[MetricsRow]:
    """
    Parse a metrics CSV.

    Raises:
        ValueError: If the header differs from CSV_COLUMNS
    """
    if isinstance(source, str):
        with open(source, newline="") as fh:
            text = fh.read()
    else:
        text = source.read()
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if tuple(header or ()) != CSV_COLUMNS:
        raise ValueError(f"unexpected metrics header {header!r}")
    return [
        MetricsRow(head=r[0], num_tasks=int(r[1]), shots=int(r[2]), metric=r[3],
                   mean=float(r[4]), std=float(r[5]), n_runs=int(r[6]), seed=int(r[7]))
        for r in reader if r
    ]


def write_metrics_json(rows: Sequence[MetricsRow], target: Target,
                       extra: Optional[dict] = None) -> None:
    """JSON summary: {"rows": [...], **extra} with sorted keys."""
    document = dict(extra or {})
    document["rows"] = [row.to_dict() for row in rows]
    _write(target, json.dumps(document, indent=2, sort_keys=True) + "\n")


def write_loss_curve_csv(curve: Iterable[Tuple[int, float]], target: Target) -> None:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(LOSS_CURVE_COLUMNS)
    for step, loss in curve:
        writer.writerow([int(step), repr(float(loss))])
    _write(target, buffer.getvalue())
