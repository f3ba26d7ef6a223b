"""Long-format metrics storage and empirical CDFs."""

from __future__ import annotations

import csv

import numpy as np

SCHEMA_VERSION = 1
HEADER = ["run_id", "seed", "step", "metric", "value"]


class MetricsTable:
    """Append-only long-format rows: (run_id, seed, step, metric, value)."""

    def __init__(self):
        self.rows = []

    def append(self, run_id, seed, step, metric, value):
        self.rows.append((str(run_id), int(seed), int(step), str(metric), float(value)))

    def extend(self, other):
        self.rows.extend(other.rows)

    def __len__(self):
        return len(self.rows)

    def values(self, metric, run_id=None):
        return np.array(
            [r[4] for r in self.rows if r[3] == metric and (run_id is None or r[0] == run_id)]
        )

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([f"# schema_version={SCHEMA_VERSION}"])
            writer.writerow(HEADER)
            writer.writerows(self.rows)

    @classmethod
    def from_csv(cls, path):
        table = cls()
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            first = next(reader)
            if first and first[0].startswith("# schema_version="):
                header = next(reader)
            else:
                header = first
            if header != HEADER:
                raise ValueError(f"{path}: unexpected metrics header {header}")
            for row in reader:
                table.append(*row)
        return table

    def aggregate(self, metric, group_key=lambda run_id: run_id):
        """mean +- std of a metric grouped by a function of run_id."""
        groups = {}
        for run_id, _seed, _step, name, value in self.rows:
            if name != metric:
                continue
            groups.setdefault(group_key(run_id), []).append(value)
        return {
            key: (float(np.mean(vals)), float(np.std(vals)), len(vals))
            for key, vals in sorted(groups.items())
        }


def cdf(series):
    """Right-continuous empirical CDF: (unique values, cumulative fraction)."""
    series = np.asarray(series, dtype=np.float64)
    if series.size == 0:
        raise ValueError("cannot build a CDF from an empty series")
    values, counts = np.unique(series, return_counts=True)
    frac = np.cumsum(counts) / series.size
    return values, frac


def cdf_table(series):
    values, frac = cdf(series)
    return list(zip(values.tolist(), frac.tolist()))
