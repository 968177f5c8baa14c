"""CSV helpers and run manifests for reproducible command runs."""
from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ParseError

MANIFEST_NAME = "manifest.json"


def comment_line(seed, **extra) -> str:
    parts = [f"betaproc {__version__}", f"seed={seed}"]
    parts += [f"{k}={v}" for k, v in extra.items()]
    return " ".join(parts)


def fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_table(path, header, rows, comment: str) -> None:
    """Write a CSV with one ``#`` comment line, a header row and ``rows``."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# {comment}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def read_table(path, numeric=True):
    """Read a CSV written by :func:`write_table` or any plain numeric CSV.

    Lines starting with ``#`` are skipped.  A first row that does not parse
    as numbers is taken as the header.  Returns ``(header, array)``.
    """
    header = None
    rows = []
    width = None
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), 1):
            if not row or row[0].lstrip().startswith("#"):
                continue
            if header is None and not rows and not _numeric_row(row):
                header = [c.strip() for c in row]
                width = len(header)
                continue
            if width is None:
                width = len(row)
            if len(row) != width:
                raise ParseError(f"{path}: expected {width} fields, found {len(row)}", row=lineno)
            vals = []
            for col, cell in enumerate(row, 1):
                try:
                    v = float(cell)
                except ValueError:
                    raise ParseError(f"{path}: not a number: {cell!r}", row=lineno, col=col) from None
                if numeric and not np.isfinite(v):
                    raise ParseError(f"{path}: non-finite value {cell!r}", row=lineno, col=col)
                vals.append(v)
            rows.append(vals)
    if not rows:
        raise ParseError(f"{path}: no data rows")
    return header, np.array(rows, dtype=float)


def _numeric_row(row) -> bool:
    try:
        [float(c) for c in row]
    except ValueError:
        return False
    return True


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@dataclass
class RunManifest:
    """Everything needed to rerun a command: its name, parameters and output digests."""

    command: str
    params: dict
    seed: int
    version: str = __version__
    outputs: dict = field(default_factory=dict)

    def record_outputs(self, outdir, names) -> None:
        outdir = Path(outdir)
        self.outputs = {n: sha256_file(outdir / n) for n in sorted(names)}

    def write(self, outdir) -> Path:
        path = Path(outdir) / MANIFEST_NAME
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")
        return path

    @classmethod
    def read(cls, path) -> "RunManifest":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: {exc.msg}", row=exc.lineno, col=exc.colno) from None
        try:
            return cls(**data)
        except TypeError as exc:
            raise ParseError(f"{path}: not a run manifest ({exc})") from None

    def compare(self, outdir) -> list:
        """Names whose current digest in ``outdir`` differs from the recorded one."""
        outdir = Path(outdir)
        bad = []
        for name, digest in self.outputs.items():
            p = outdir / name
            if not p.exists() or sha256_file(p) != digest:
                bad.append(name)
        return bad
