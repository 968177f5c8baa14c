"""Bernoulli-process draws and the beta-Bernoulli feature matrix."""
from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .process import BetaProcessDraw, BPParams, stick_break
from .rng import RandomStream


@dataclass(frozen=True)
class FeatureMatrix:
    """Binary N x K matrix of represented features.

    ``atoms`` maps each column to its atom index in the source draw and
    ``rounds`` to that atom's stick-breaking round, when known.
    """

    entries: np.ndarray
    atoms: np.ndarray = None
    rounds: np.ndarray = None
    column_counts: np.ndarray = field(init=False)

    def __post_init__(self):
        z = np.asarray(self.entries)
        if z.ndim != 2:
            raise DomainError("feature matrix must be two-dimensional")
        if not np.isin(z, (0, 1)).all():
            raise DomainError("feature matrix entries must be 0 or 1")
        z = z.astype(np.uint8)
        counts = z.sum(axis=0).astype(np.int64)
        if np.any(counts == 0):
            raise DomainError("every column needs at least one nonzero entry")
        object.__setattr__(self, "entries", z)
        object.__setattr__(self, "column_counts", counts)
        k = z.shape[1]
        for name in ("atoms", "rounds"):
            val = getattr(self, name)
            if val is not None and len(val) != k:
                raise DomainError(f"{name} must have one entry per column")

    @property
    def n_rows(self) -> int:
        return self.entries.shape[0]

    @property
    def n_cols(self) -> int:
        return self.entries.shape[1]

    def to_csv(self, path, header_comment=None) -> None:
        with open(path, "w", newline="") as fh:
            if header_comment:
                fh.write(f"# {header_comment}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([f"f{k}" for k in range(self.n_cols)])
            w.writerows(self.entries.tolist())


@dataclass(frozen=True)
class CountStats:
    K_prefix: np.ndarray
    K_hist: dict
    row_counts: np.ndarray

    def to_csv(self, path, header_comment=None) -> None:
        with open(path, "w", newline="") as fh:
            if header_comment:
                fh.write(f"# {header_comment}\n")
            w = csv.writer(fh, lineterminator="\n")
            fh.write("# section: prefix\n")
            w.writerow(["n", "K_n"])
            w.writerows([n + 1, int(k)] for n, k in enumerate(self.K_prefix))
            fh.write("# section: histogram\n")
            w.writerow(["j", "K_Nj"])
            w.writerows([j, self.K_hist[j]] for j in sorted(self.K_hist))
            fh.write("# section: row_counts\n")
            w.writerow(["n", "k_n"])
            w.writerows([n + 1, int(k)] for n, k in enumerate(self.row_counts))


def bernoulli_draw(draw: BetaProcessDraw, stream: RandomStream, size=None) -> np.ndarray:
    """Independent coin flips over the atoms of ``draw``.

    With ``size`` given, returns ``size`` independent rows.
    """
    shape = len(draw) if size is None else (size, len(draw))
    return (stream.gen.random(shape) < draw.weights).astype(np.uint8)


def bp_bep(params: BPParams, n: int, rounds: int, stream: RandomStream, return_draw=False):
    """One beta-process draw followed by ``n`` Bernoulli-process rows.

    Unrepresented atoms are dropped; columns keep atom generation order.
    """
    if n < 1 or rounds < 1:
        raise DomainError("need n >= 1 and rounds >= 1")
    b = stick_break(params, rounds, stream)
    z = bernoulli_draw(b, stream, size=n)
    keep = np.flatnonzero(z.any(axis=0))
    fm = FeatureMatrix(z[:, keep], atoms=keep, rounds=b.rounds[keep])
    return (fm, b) if return_draw else fm


def count_stats(z: FeatureMatrix) -> CountStats:
    e = z.entries
    n = e.shape[0]
    if z.n_cols:
        first = np.argmax(e, axis=0)
        prefix = np.cumsum(np.bincount(first, minlength=n))
    else:
        prefix = np.zeros(n, dtype=np.int64)
    hist = dict(sorted(Counter(int(c) for c in z.column_counts).items()))
    return CountStats(prefix.astype(np.int64), hist, e.sum(axis=1).astype(np.int64))


def read_feature_matrix(path) -> FeatureMatrix:
    with open(path, newline="") as fh:
        reader = csv.reader(line for line in fh if not line.startswith("#"))
        next(reader)
        rows = [[int(v) for v in row] for row in reader]
    return FeatureMatrix(np.array(rows, dtype=np.uint8).reshape(len(rows), -1))
