"""Soliton centers from intensity profiles: peak finding and track association."""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass

import numpy as np

from .soliton import Grid

log = logging.getLogger(__name__)


def _coords(grid):
    if isinstance(grid, Grid):
        return grid.x_min, grid.x_max, grid.n_points
    x = np.asarray(grid, dtype=float)
    return float(x[0]), float(x[-1]), len(x)


def find_peaks(profile, grid, min_height: float, min_separation: float = 1.0,
               return_heights: bool = False):
    """Local maxima of ``profile`` above ``min_height``, refined by a parabola
    through the three nodes around each discrete maximum.

    A crest split evenly between two equal nodes counts once, at their
    midpoint.  When two maxima are closer than ``min_separation`` only the
    higher one is kept (on an exact tie, the one nearer the grid center).
    Positions are returned in increasing order and are measured from the grid
    center, so reversing the profile mirrors them bit for bit.
    """
    if not min_height > 0:
        raise ValueError("min_height must be positive")
    y = np.asarray(profile, dtype=float)
    x0, x1, n = _coords(grid)
    if len(y) != n:
        raise ValueError("profile and grid sizes differ")
    h = (x1 - x0) / (n - 1)
    mid = 0.5 * (x0 + x1)
    c = 0.5 * (n - 1)

    left, inner, right = y[:-2], y[1:-1], y[2:]
    right2 = np.append(y[3:], np.inf)
    strict = (inner > left) & (inner > right)
    plateau = (inner > left) & (inner == right) & (right > right2)
    idx = np.nonzero((strict | plateau) & (inner >= min_height))[0] + 1
    if len(idx) == 0:
        return (np.array([]), np.array([])) if return_heights else np.array([])

    y0, y1, y2 = y[idx - 1], y[idx], y[idx + 1]
    curv = (y0 + y2) - 2.0 * y1  # symmetric in y0, y2 so mirroring is exact
    off = 0.5 * (y0 - y2) / curv
    pos = mid + ((idx - c) + off) * h
    height = y1 - 0.25 * (y0 - y2) * off

    keep = []
    for i in sorted(range(len(idx)), key=lambda i: (-height[i], abs(pos[i] - mid), pos[i])):
        if all(abs(pos[i] - pos[j]) >= min_separation for j in keep):
            keep.append(i)
    keep.sort(key=lambda i: pos[i])
    pos, height = pos[keep], height[keep]
    return (pos, height) if return_heights else pos


@dataclass
class TrajectorySet:
    times: np.ndarray
    tracks: np.ndarray  # (M, N), NaN where a track is missing

    @property
    def n_tracks(self) -> int:
        return self.tracks.shape[1]

    def present(self) -> np.ndarray:
        return np.isfinite(self.tracks)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t"] + [f"xi_{k + 1}" for k in range(self.n_tracks)])
            for t, row in zip(self.times, self.tracks):
                w.writerow([repr(float(t))] + [repr(float(v)) if np.isfinite(v) else "" for v in row])

    @classmethod
    def from_csv(cls, path) -> "TrajectorySet":
        """Read a track CSV; extra per-soliton columns (as in CTC output) are ignored."""
        with open(path, newline="") as fh:
            r = csv.reader(fh)
            header = next(r)
            cols = [i for i, name in enumerate(header) if name.startswith("xi_")]
            times, rows = [], []
            for line in r:
                if not line:
                    continue
                times.append(float(line[0]))
                rows.append([float(line[i]) if line[i] != "" else math.nan for i in cols])
        return cls(np.array(times), np.array(rows, dtype=float).reshape(len(times), len(cols)))


def associate_tracks(peak_lists, n_expected: int, times=None, gate: float = 1.0,
                     initial=None) -> TrajectorySet:
    """Link per-sample peak positions into ``n_expected`` tracks.

    Each track predicts its next position by linear extrapolation from its
    last two sightings and grabs the nearest peak within ``gate`` per elapsed
    sample interval.  Pairs are assigned greedily by distance; equal
    distances go to the lower track index.  Tracks without a peak are marked
    missing (NaN) for that sample and re-acquired later from their
    extrapolated position.

    Tracks start from ``initial`` positions if given, otherwise from the
    first sample holding exactly ``n_expected`` peaks.
    """
    if n_expected < 1:
        raise ValueError("n_expected must be at least 1")
    peak_lists = [np.sort(np.asarray(p, dtype=float)) for p in peak_lists]
    m = len(peak_lists)
    times = np.arange(m, dtype=float) if times is None else np.asarray(times, dtype=float)
    tracks = np.full((m, n_expected), np.nan)

    start = 0
    if initial is not None:
        hist = [[(None, float(x))] for x in np.sort(np.asarray(initial, dtype=float))]
        if len(hist) != n_expected:
            raise ValueError("initial positions must match n_expected")
    else:
        while start < m and len(peak_lists[start]) != n_expected:
            start += 1
        if start == m:
            return TrajectorySet(times, tracks)
        tracks[start] = peak_lists[start]
        hist = [[(start, float(x))] for x in peak_lists[start]]
        start += 1

    for i in range(start, m):
        peaks = peak_lists[i]
        pred, reach = [], []
        for h in hist:
            (i1, x1) = h[-1]
            if len(h) >= 2 and h[-2][0] is not None and i1 is not None:
                i0, x0 = h[-2]
                v = (x1 - x0) / (times[i1] - times[i0])
                pred.append(x1 + v * (times[i] - times[i1]))
            else:
                pred.append(x1)
            elapsed = 1 if i1 is None else i - i1
            reach.append(gate * elapsed)
        pairs = []
        for k in range(n_expected):
            for j, x in enumerate(peaks):
                d = abs(x - pred[k])
                if d <= reach[k]:
                    pairs.append((d, k, j))
        pairs.sort()
        used_t, used_p = set(), set()
        for idx, (d, k, j) in enumerate(pairs):
            if k in used_t or j in used_p:
                continue
            rival = [p for p in pairs[idx + 1:] if p[0] == d and p[2] == j and p[1] not in used_t]
            if rival:
                log.info("sample %d: tracks %d and %d tie for peak %d, track %d wins",
                         i, k, rival[0][1], j, k)
            used_t.add(k)
            used_p.add(j)
            tracks[i, k] = peaks[j]
            hist[k].append((i, float(peaks[j])))
            if len(hist[k]) > 2:
                hist[k].pop(0)
    return TrajectorySet(times, tracks)
