"""Slow, obviously-correct reference implementations used as test oracles.

Nothing here imports the package's own arithmetic.
"""

from __future__ import annotations

import datetime as dt
import math
from fractions import Fraction


def gini_exact(counts):
    total = sum(counts)
    return 1 - sum(Fraction(c, total) ** 2 for c in counts)


def brute_force_split(X, y):
    """Best (feature, threshold, gain) by enumerating every midpoint, in exact arithmetic.

    Ties go to the lower feature index, then the lower threshold.
    Returns None when no candidate strictly decreases impurity.
    """
    n = len(y)
    parent = gini_exact([sum(1 for v in y if v == 0), sum(1 for v in y if v == 1)])
    best = None
    for f in range(len(X[0])):
        col = [row[f] for row in X]
        distinct = sorted(set(col))
        for a, b in zip(distinct, distinct[1:]):
            t = (a + b) / 2.0
            left = [y[i] for i in range(n) if col[i] <= t]
            right = [y[i] for i in range(n) if col[i] > t]
            g = parent
            for side in (left, right):
                g -= Fraction(len(side), n) * gini_exact([side.count(0), side.count(1)])
            if g <= 0:
                continue
            if best is None or g > best[2]:
                best = (f, t, g)
            # equal gain at a later (feature, threshold) never replaces the earlier one
    return best


def recount_metrics(labels, predictions):
    tp = fp = fn = 0
    for t, p in zip(labels, predictions):
        if t == 1 and p == 1:
            tp += 1
        elif t == 0 and p == 1:
            fp += 1
        elif t == 1 and p == 0:
            fn += 1
    recall = tp / (tp + fn) if tp + fn else 0.0
    precision = tp / (tp + fp) if tp + fp else 0.0
    f1 = 2 * recall * precision / (recall + precision) if recall + precision else 0.0
    return recall, precision, f1


def weekday_hour(epoch: int, tz_offset: int = 0):
    """(hour, weekday with Monday = 0) via the standard library calendar."""
    moment = dt.datetime.fromtimestamp(epoch + tz_offset, tz=dt.timezone.utc)
    return moment.hour, moment.weekday()


def gaussian_pdf(x, mean, var):
    return math.exp(-((x - mean) ** 2) / (2 * var)) / math.sqrt(2 * math.pi * var)


def central_difference(f, x, h=1e-6):
    grad = []
    for i in range(len(x)):
        up = list(x)
        down = list(x)
        up[i] += h
        down[i] -= h
        grad.append((f(up) - f(down)) / (2 * h))
    return grad


def levenshtein_table(a: str, b: str) -> int:
    """Full dynamic-programming table, no row reuse."""
    rows, cols = len(a) + 1, len(b) + 1
    d = [[0] * cols for _ in range(rows)]
    for i in range(rows):
        d[i][0] = i
    for j in range(cols):
        d[0][j] = j
    for i in range(1, rows):
        for j in range(1, cols):
            d[i][j] = min(d[i - 1][j] + 1, d[i][j - 1] + 1,
                          d[i - 1][j - 1] + (a[i - 1] != b[j - 1]))
    return d[-1][-1]
