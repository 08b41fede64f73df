"""Finite unions of closed intervals on the line."""
import bisect
import csv

from .errors import InvalidIntervalError


class IntervalUnion:
    """Sorted, disjoint closed intervals.  Touching intervals are merged.

    Comparisons are exact; no tolerance is applied anywhere.
    """
    __slots__ = ("_iv", "_lows")

    def __init__(self, intervals=()):
        self._iv = tuple(intervals)
        self._lows = [lo for lo, _ in self._iv]

    @classmethod
    def normalize(cls, raw):
        pairs = []
        for lo, hi in raw:
            lo, hi = float(lo), float(hi)
            if not lo <= hi:
                raise InvalidIntervalError(f"interval with lo > hi: ({lo!r}, {hi!r})")
            pairs.append((lo, hi))
        pairs.sort()
        merged = []
        for lo, hi in pairs:
            if merged and lo <= merged[-1][1]:
                if hi > merged[-1][1]:
                    merged[-1] = (merged[-1][0], hi)
            else:
                merged.append((lo, hi))
        return cls(merged)

    @property
    def intervals(self):
        return self._iv

    def __iter__(self):
        return iter(self._iv)

    def __len__(self):
        return len(self._iv)

    def __eq__(self, other):
        return isinstance(other, IntervalUnion) and self._iv == other._iv

    def __hash__(self):
        return hash(self._iv)

    def __repr__(self):
        return f"IntervalUnion({list(self._iv)!r})"

    def measure(self):
        return sum(hi - lo for lo, hi in self._iv)

    def translate(self, dx):
        return IntervalUnion((lo + dx, hi + dx) for lo, hi in self._iv)

    def union(self, other):
        return IntervalUnion.normalize(self._iv + tuple(other))

    def contains(self, y):
        k = bisect.bisect_right(self._lows, y) - 1
        return k >= 0 and y <= self._iv[k][1]

    __contains__ = contains

    def covers(self, other):
        """True when every component of ``other`` lies inside one of ours."""
        for lo, hi in other:
            k = bisect.bisect_right(self._lows, lo) - 1
            if k < 0 or hi > self._iv[k][1]:
                return False
        return True

    def excess(self, other):
        """Length of ``other`` lying outside this union."""
        out = 0.0
        for lo, hi in other:
            covered = 0.0
            for a, b in self._iv:
                if b < lo:
                    continue
                if a > hi:
                    break
                covered += min(b, hi) - max(a, lo)
            out += (hi - lo) - covered
        return out

    @property
    def bounds(self):
        if not self._iv:
            return None
        return self._iv[0][0], self._iv[-1][1]

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["lo", "hi"])
            for lo, hi in self._iv:
                w.writerow([repr(lo), repr(hi)])


def normalize(raw):
    return IntervalUnion.normalize(raw)


def measure(u):
    return u.measure()


def translate(u, dx):
    return u.translate(dx)
