#!/usr/bin/env python3

import json
import logging
from pathlib import Path

import numpy as np

from .measurements.semigroup import HeatKernelTable

logger = logging.getLogger(__name__)

CACHE_FORMAT_VERSION = 1


def _format_row(kind, prefix, values):
    return " ".join([kind, *(f"{value:.17g}" for value in (*prefix, *values))])


class KernelCache:
    """
    Heat kernel tables stored as text files, one per graph fingerprint and
    base vertex. The first line of each file is a JSON header; a table is
    reused only when the header matches the request exactly.
    """

    def __init__(self, directory):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.hits = 0
        self.misses = 0

    def __repr__(self):
        return f"KernelCache({str(self.directory)!r})"

    def path(self, graph, x):
        return self.directory / f"{graph.fingerprint()}_{x}.kernel"

    @staticmethod
    def _header(graph, x, K, times, tol):
        return {
            "version": CACHE_FORMAT_VERSION,
            "fingerprint": graph.fingerprint(),
            "base": int(x),
            "K": int(K),
            "times": [float(t) for t in times],
            "tolerance": float(tol),
        }

    def load(self, graph, x, K, times, tol):
        """
        The cached table for this request, or None.
        """
        filename = self.path(graph, x)
        if not filename.exists():
            self.misses += 1
            return None

        with open(filename) as f:
            header = json.loads(f.readline().lstrip("# "))
            convention = header.pop("convention", None)
            if header != self._header(graph, x, K, times, tol):
                logger.debug("cache header mismatch for %s", filename)
                self.misses += 1
                return None

            discrete, continuous, orders, tails = [], [], [], []
            for line in f:
                line_contents = line.split()
                if not line_contents:
                    continue
                if line_contents[0] == "discrete":
                    discrete.append([float(value) for value in line_contents[2:]])
                elif line_contents[0] == "continuous":
                    orders.append(int(float(line_contents[2])))
                    tails.append(float(line_contents[3]))
                    continuous.append([float(value) for value in line_contents[4:]])
                else:
                    raise ValueError(f"Unexpected line in kernel cache {filename}: {line!r}")

        self.hits += 1
        logger.info("kernel cache hit: %s", filename)
        return HeatKernelTable(
            graph=graph,
            base=x,
            discrete_rows=np.asarray(discrete),
            times=np.asarray(times, dtype=float),
            continuous_rows=np.asarray(continuous).reshape(len(times), len(graph)),
            truncation_orders=np.asarray(orders, dtype=int),
            error_bounds=np.asarray(tails),
            tolerance=tol,
            convention=convention,
        )

    def save(self, table):
        header = self._header(
            table.graph, table.base, table.K, table.times, table.tolerance
        )
        header["convention"] = table.convention
        filename = self.path(table.graph, table.base)
        with open(filename, "w") as f:
            print("# " + json.dumps(header, sort_keys=True), file=f)
            for k, row in enumerate(table.discrete_rows):
                print(_format_row("discrete", [k], row), file=f)
            for t, order, tail, row in zip(
                table.times,
                table.truncation_orders,
                table.error_bounds,
                table.continuous_rows,
            ):
                print(_format_row("continuous", [t, order, tail], row), file=f)
        logger.info("kernel cache write: %s", filename)
