"""The four series-similarity measures and their combined evaluation.

A reference recording and a candidate device trace are aligned,
min-max scaled, and compared with Pearson correlation, dynamic time
warping, a Gaussian-moment Kullback-Leibler divergence, and
Jensen-Shannon divergence.  Degenerate inputs surface as flags on the
combined vector instead of exceptions.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, TextIO

import numpy as np

from .errors import (
    ParameterError,
    UndefinedCorrelationError,
    UndefinedDistributionError,
)
from .timeseries import ByteSeries, NormalizedSeries, align, min_max_normalize

MEASURES = ("cc", "dtw", "kld", "jsd")

# Flags carried by a SimilarityVector.
FLAG_CC_UNDEFINED = "cc_undefined"
FLAG_KLD_UNDEFINED = "kld_undefined"
FLAG_REF_DEGENERATE = "ref_degenerate"
FLAG_CAND_DEGENERATE = "cand_degenerate"

_SIGMA_FLOOR = 1e-9


def _vals(series) -> np.ndarray:
    if isinstance(series, (NormalizedSeries, ByteSeries)):
        return np.asarray(series.values, dtype=np.float64)
    return np.asarray(series, dtype=np.float64)


@dataclass(frozen=True)
class SimilarityVector:
    """All four measures for one reference/candidate pair.

    ``cc`` and ``kld`` are None when undefined (constant input); the
    reason is in ``flags``.  ``dtw`` and ``jsd`` are always defined.
    """

    cc: float | None
    dtw: float
    kld: float | None
    jsd: float
    flags: frozenset[str] = frozenset()

    def measure(self, name: str) -> float | None:
        if name not in MEASURES:
            raise ParameterError(f"unknown measure {name!r}")
        return getattr(self, name)


def pearson_cc(a, b) -> float:
    """Sample Pearson correlation, clamped into [-1, 1]."""
    x = _vals(a)
    y = _vals(b)
    if x.size != y.size:
        raise ParameterError(f"length mismatch: {x.size} vs {y.size}")
    if x.size < 2:
        raise ParameterError("pearson_cc needs length >= 2")
    xd = x - x.mean()
    yd = y - y.mean()
    sx = math.sqrt(float(xd @ xd))
    sy = math.sqrt(float(yd @ yd))
    if sx == 0.0 or sy == 0.0:
        raise UndefinedCorrelationError("zero variance input")
    return float(np.clip((xd @ yd) / (sx * sy), -1.0, 1.0))


def dtw_distance(a, b) -> float:
    """Dynamic time warping distance with |x - y| local cost.

    Full dynamic program over {match, insert, delete} moves, no band
    constraint, not normalized by path length.
    """
    x = _vals(a)
    y = _vals(b)
    if x.size == 0 or y.size == 0:
        raise ParameterError("dtw_distance needs non-empty series")
    if x.size * y.size <= 256:
        return _dtw_small(x.tolist(), y.tolist())
    return _dtw_rows(x, y)


def _dtw_small(x: list[float], y: list[float]) -> float:
    # Plain-list DP; beats the vectorized version on short series.
    inf = math.inf
    m = len(y)
    prev = [0.0] + [inf] * m
    for xi in x:
        cur = [inf] * (m + 1)
        for j in range(1, m + 1):
            best = prev[j]
            if prev[j - 1] < best:
                best = prev[j - 1]
            if cur[j - 1] < best:
                best = cur[j - 1]
            cur[j] = abs(xi - y[j - 1]) + best
        prev = cur
    return prev[m]


def _dtw_rows(x: np.ndarray, y: np.ndarray) -> float:
    # Row-at-a-time DP.  Within a row, D[i,j] = c[j] + min(M[j], D[i,j-1])
    # unrolls to a prefix-min over M[k] - csum[k-1], so each row is pure
    # vector work instead of a Python scan.
    m = y.size
    prev = np.full(m + 1, np.inf)
    prev[0] = 0.0
    for xi in x:
        cost = np.abs(xi - y)
        csum = np.concatenate(([0.0], np.cumsum(cost)))
        best_above = np.minimum(prev[1:], prev[:-1])
        cur = np.empty(m + 1)
        cur[0] = np.inf
        cur[1:] = csum[1:] + np.minimum.accumulate(best_above - csum[:-1])
        prev = cur
    return float(prev[m])


def gaussian_moments(series) -> tuple[float, float]:
    """Mean and population standard deviation of a series."""
    v = _vals(series)
    if v.size < 2:
        raise ParameterError("moment fit needs length >= 2")
    return float(v.mean()), float(v.std())


def gaussian_kld(a, b) -> float:
    """KL divergence between Gaussians fit to each series' moments.

    Direction is KL(a || b).  Standard deviations are floored at 1e-9,
    so constant inputs yield a huge-but-finite divergence; callers that
    need to distinguish that case check degeneracy themselves.
    """
    mu_a, sd_a = gaussian_moments(a)
    mu_b, sd_b = gaussian_moments(b)
    sd_a = max(sd_a, _SIGMA_FLOOR)
    sd_b = max(sd_b, _SIGMA_FLOOR)
    return math.log(sd_b / sd_a) + (sd_a**2 + (mu_a - mu_b) ** 2) / (2 * sd_b**2) - 0.5


def jsd(a, b) -> float:
    """Jensen-Shannon divergence (natural log) between two series.

    Each series is scaled by its own sum into a probability vector;
    result lies in [0, ln 2].
    """
    p = _vals(a)
    q = _vals(b)
    if p.size != q.size:
        raise ParameterError(f"length mismatch: {p.size} vs {q.size}")
    if p.size < 1:
        raise ParameterError("jsd needs length >= 1")
    if (p < 0).any() or (q < 0).any():
        raise ParameterError("jsd inputs must be non-negative")
    ps = p.sum()
    qs = q.sum()
    if ps <= 0 or qs <= 0:
        raise UndefinedDistributionError("zero-sum series has no distribution")
    p = p / ps
    q = q / qs
    m = 0.5 * (p + q)
    return 0.5 * _kl_discrete(p, m) + 0.5 * _kl_discrete(q, m)


def _kl_discrete(p: np.ndarray, m: np.ndarray) -> float:
    # 0 * log 0 := 0; m[i] > 0 wherever p[i] > 0 by construction of the mix.
    nz = p > 0
    return float(np.sum(p[nz] * np.log(p[nz] / m[nz])))


def similarity_vector(reference: ByteSeries, candidate: ByteSeries) -> SimilarityVector:
    """Align, normalize, and compare a reference with one candidate.

    Never raises for overlapping inputs: per-measure degeneracies become
    flags.  Only a missing overlap propagates as AlignmentError.
    """
    ref, cand = align(reference, candidate)
    ref_n = min_max_normalize(ref)
    cand_n = min_max_normalize(cand)

    flags: set[str] = set()
    if ref_n.degenerate:
        flags.add(FLAG_REF_DEGENERATE)
    if cand_n.degenerate:
        flags.add(FLAG_CAND_DEGENERATE)

    n = len(ref_n)
    cc: float | None = None
    kld: float | None = None
    if n < 2 or ref_n.degenerate or cand_n.degenerate:
        flags.add(FLAG_CC_UNDEFINED)
        flags.add(FLAG_KLD_UNDEFINED)
    else:
        cc = pearson_cc(ref_n, cand_n)
        kld = gaussian_kld(ref_n, cand_n)

    dtw = dtw_distance(ref_n, cand_n)

    # JSD falls back to the raw bins when normalization flattened a side
    # to all zeros; an idle-then-burst device still gets an informative
    # value that way.  A side with zero raw bytes is maximally dissimilar.
    jsd_val = _jsd_with_fallback(ref, cand, ref_n, cand_n)

    return SimilarityVector(cc=cc, dtw=dtw, kld=kld, jsd=jsd_val, flags=frozenset(flags))


def _jsd_with_fallback(
    ref: ByteSeries,
    cand: ByteSeries,
    ref_n: NormalizedSeries,
    cand_n: NormalizedSeries,
) -> float:
    if not ref_n.degenerate and not cand_n.degenerate:
        return jsd(ref_n, cand_n)
    ref_sum = int(ref.values.sum())
    cand_sum = int(cand.values.sum())
    if ref_sum == 0 and cand_sum == 0:
        return 0.0
    if ref_sum == 0 or cand_sum == 0:
        return math.log(2)
    return jsd(ref.values, cand.values)


# ---------------------------------------------------------------------------
# Similarity report serialization: one row per candidate device.
# ---------------------------------------------------------------------------

def _fmt(value: float | None) -> str:
    return "" if value is None else repr(float(value))


def write_report_csv(rows: Iterable[tuple[str, SimilarityVector]], out: TextIO) -> None:
    out.write("device_id,cc,dtw,kld,jsd,flags\n")
    for device_id, sv in rows:
        flags = ";".join(sorted(sv.flags))
        out.write(f"{device_id},{_fmt(sv.cc)},{_fmt(sv.dtw)},{_fmt(sv.kld)},{_fmt(sv.jsd)},{flags}\n")


def write_report_json(rows: Iterable[tuple[str, SimilarityVector]], out: TextIO) -> None:
    payload = [
        {
            "device_id": device_id,
            "cc": sv.cc,
            "dtw": sv.dtw,
            "kld": sv.kld,
            "jsd": sv.jsd,
            "flags": sorted(sv.flags),
        }
        for device_id, sv in rows
    ]
    json.dump(payload, out, indent=2, sort_keys=True)
    out.write("\n")


def read_report_json(inp: TextIO) -> list[tuple[str, SimilarityVector]]:
    rows = []
    for row in json.load(inp):
        sv = SimilarityVector(
            cc=row["cc"],
            dtw=row["dtw"],
            kld=row["kld"],
            jsd=row["jsd"],
            flags=frozenset(row.get("flags", [])),
        )
        rows.append((row["device_id"], sv))
    return rows
