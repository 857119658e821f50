"""Community-based similarity for 3D-embedded graphs.

Communities are reduced to the members with a large eigenvector entry, kept
as point clouds in millimetres.  Two communities overlap through the
fraction of one cloud's points lying within sqrt(3) mm of the other (the
body-diagonal of a 1 mm voxel); the pair score is the larger of the two
directions, which makes scan identification symmetric.  Scans are compared
by greedily pairing communities one-to-one by descending score and
averaging the pair counts over overlap thresholds 50..90%.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .cdi import CDIResult

VOXEL_REACH = math.sqrt(3.0)
DEFAULT_ENTRY_THRESHOLD = 0.01
DEFAULT_MATCH_THRESHOLDS = (50.0, 60.0, 70.0, 80.0, 90.0)
_CELL = 2.0  # spatial-hash cell (mm); one-cell neighbourhoods cover sqrt(3)


class MatchingError(ValueError):
    pass


@dataclass(frozen=True)
class VoxelCommunity:
    """A reduced community as a 3D point cloud."""

    points: np.ndarray  # (m, 3), mm
    source_rank: int
    scan_id: str

    @property
    def size(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class MatchReport:
    per_threshold: dict[float, int]
    mean_matches: float
    pairing: tuple[tuple[int, int, float], ...]  # (rank in A, rank in B, score)


class _SpatialHash:
    """Uniform-grid hash for fixed-radius existence queries."""

    def __init__(self, points, cell=_CELL):
        self.cell = cell
        self.cells: dict[tuple[int, int, int], list[int]] = {}
        self.points = points
        keys = np.floor(points / cell).astype(np.int64)
        for i, key in enumerate(map(tuple, keys)):
            self.cells.setdefault(key, []).append(i)

    def any_within(self, p, radius) -> bool:
        r2 = radius * radius + 1e-12
        kx, ky, kz = np.floor(p / self.cell).astype(np.int64)
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                for dz in (-1, 0, 1):
                    bucket = self.cells.get((kx + dx, ky + dy, kz + dz))
                    if not bucket:
                        continue
                    q = self.points[bucket]
                    d2 = ((q - p) ** 2).sum(axis=1)
                    if (d2 <= r2).any():
                        return True
        return False


def reduce_community(result: CDIResult, community, positions,
                     entry_threshold=DEFAULT_ENTRY_THRESHOLD,
                     scan_id="scan") -> VoxelCommunity | None:
    """Keep members whose entry magnitude exceeds the threshold in any of
    the coordinate eigenvectors; returns None when nothing survives (such a
    community is excluded from matching)."""
    if positions is None:
        raise MatchingError("matching requires vertex positions")
    positions = np.asarray(positions, dtype=float)
    if positions.ndim != 2 or positions.shape[1] != 3:
        raise MatchingError("matching requires 3D positions")
    members = list(community.members) if hasattr(community, "members") else list(community)
    rank = community.rank if hasattr(community, "rank") else 0
    e = result.coords.e
    kept = [m for m in members if np.abs(e[m]).max() > entry_threshold]
    if not kept:
        return None
    return VoxelCommunity(points=positions[kept], source_rank=rank, scan_id=scan_id)


def reduce_scan(result: CDIResult, positions, scan_id="scan",
                entry_threshold=DEFAULT_ENTRY_THRESHOLD) -> list[VoxelCommunity]:
    """Reduce every community of a scan, dropping the ones that empty out."""
    out = []
    for community in result.communities:
        vc = reduce_community(result, community, positions,
                              entry_threshold=entry_threshold, scan_id=scan_id)
        if vc is not None:
            out.append(vc)
    return out


def overlap_percentage(a: VoxelCommunity, b: VoxelCommunity,
                       reach=VOXEL_REACH) -> float:
    """Percentage of a's points whose nearest point of b lies within
    ``reach`` (directional: a relative to b)."""
    if a.size == 0 or b.size == 0:
        raise MatchingError("overlap of an empty community is undefined")
    grid = _SpatialHash(b.points)
    hits = sum(1 for p in a.points if grid.any_within(p, reach))
    return 100.0 * hits / a.size


def pair_score(a: VoxelCommunity, b: VoxelCommunity, reach=VOXEL_REACH) -> float:
    """Symmetric community score: the larger of the two directional overlaps."""
    return max(overlap_percentage(a, b, reach), overlap_percentage(b, a, reach))


def mean_matching_communities(scan_a, scan_b,
                              thresholds=DEFAULT_MATCH_THRESHOLDS) -> MatchReport:
    """Mean number of one-to-one community matches over overlap thresholds.

    Candidate pairs are ranked by descending symmetric score and matched
    greedily, each community in at most one pair; the count at a threshold
    is how many matched pairs score at least that much.
    """
    if not scan_a or not scan_b:
        raise MatchingError("both scans need at least one nonempty community")
    lowest = min(thresholds)
    scored = []
    for i, a in enumerate(scan_a):
        for j, b in enumerate(scan_b):
            scored.append((pair_score(a, b), i, j))
    scored.sort(key=lambda t: (-t[0], t[1], t[2]))
    used_a, used_b = set(), set()
    chosen = []
    for score, i, j in scored:
        if score < lowest:
            break
        if i in used_a or j in used_b:
            continue
        used_a.add(i)
        used_b.add(j)
        chosen.append((scan_a[i].source_rank, scan_b[j].source_rank, score))
    per_threshold = {
        float(t): sum(1 for _, _, sc in chosen if sc >= t) for t in thresholds
    }
    mean = float(np.mean(list(per_threshold.values())))
    return MatchReport(per_threshold=per_threshold, mean_matches=mean,
                       pairing=tuple(chosen))


def report_to_dict(report: MatchReport) -> dict:
    return {
        "pairs": [
            {"rank_a": ra, "rank_b": rb, "score": sc} for ra, rb, sc in report.pairing
        ],
        "perThreshold": {f"{t:g}": c for t, c in sorted(report.per_threshold.items())},
        "meanMatches": report.mean_matches,
    }


def save_report(report: MatchReport, path) -> None:
    with open(path, "w") as fh:
        json.dump(report_to_dict(report), fh, indent=2, sort_keys=True)
        fh.write("\n")


def match_matrix(scans: dict[str, list[VoxelCommunity]],
                 row_ids=None, col_ids=None) -> tuple[list[str], list[str], np.ndarray]:
    """All-pairs mean-match matrix over labelled scans."""
    row_ids = list(row_ids if row_ids is not None else scans)
    col_ids = list(col_ids if col_ids is not None else scans)
    mat = np.zeros((len(row_ids), len(col_ids)))
    for i, ra in enumerate(row_ids):
        for j, cb in enumerate(col_ids):
            mat[i, j] = mean_matching_communities(scans[ra], scans[cb]).mean_matches
    return row_ids, col_ids, mat


def save_matrix_csv(row_ids, col_ids, mat, path, header_comment=None) -> None:
    lines = []
    if header_comment:
        lines.append(f"# {header_comment}")
    lines.append("scan," + ",".join(col_ids))
    for rid, row in zip(row_ids, mat):
        lines.append(rid + "," + ",".join(f"{x:.17g}" for x in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
