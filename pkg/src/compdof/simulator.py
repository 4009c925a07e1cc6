"""Monte-Carlo sum-rate sweeps for the full-DoF beam designs.

Power model: unit-power symbols ``s``, transmit signal ``x = alpha V s``,
with ``alpha`` chosen so the most loaded antenna radiates exactly
``P = 10**(snr_db / 10)``. Noise has unit variance at every receiver.
User ``k`` combines its receive antennas with column ``u_k`` of ``U``;
with ``E = U^T H V`` its SINR is

    alpha^2 |E_kk|^2 / (alpha^2 sum_{j != k} |E_kj|^2 + ||u_k||^2).
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._validation import check_complex_matrix, check_count
from .channel_core import sample_channel
from .exceptions import ArgumentError, CompDofError, NumericalFailure
from .ia_closed_form import alignment_matrices, closed_form_beams
from .smd import BeamPair, full_dof_beams

SCHEMES = ("zf", "cf", "smd")
EIG_POLICIES = ("fixed", "best")
MAX_FAIL_FRACTION = 0.10
SIG_DIGITS = 12
CSV_COLUMNS = ("scheme", "snr_db", "mean_sum_rate", "stddev", "trials")


def _q(x):
    """Round to 12 significant digits so text serialization round-trips exactly."""
    return float(f"{x:.{SIG_DIGITS}g}")


def sinr(H, beams, snr_db):
    H = check_complex_matrix(H, "H", square=True)
    V, U = np.asarray(beams.V), np.asarray(beams.U)
    P = 10.0 ** (snr_db / 10.0)
    load = np.max(np.sum(np.abs(V) ** 2, axis=1))
    if load <= 0:
        raise NumericalFailure("transmit beams are identically zero")
    alpha2 = P / load
    E = U.T @ H @ V
    sig = alpha2 * np.abs(np.diag(E)) ** 2
    interf = alpha2 * (np.sum(np.abs(E) ** 2, axis=1) - np.abs(np.diag(E)) ** 2)
    noise = np.sum(np.abs(U) ** 2, axis=0)
    out = sig / (interf + noise)
    if not np.all(np.isfinite(out)):
        raise NumericalFailure("non-finite SINR")
    return out


def sum_rate(H, beams, snr_db):
    """Sum of ``log2(1 + SINR_k)`` in bits per channel use."""
    return float(np.sum(np.log2(1.0 + sinr(H, beams, snr_db))))


def zf_broadcast_beams(H):
    """Transmit zero-forcing for ``Mt = K``: ``V = H^{-1}``, ``U = I``."""
    H = check_complex_matrix(H, "H", square=True)
    K = H.shape[0]
    if np.linalg.cond(H) > 1e12:
        raise NumericalFailure("H is singular")
    ones = np.ones((K, K), dtype=np.int8)
    return BeamPair(np.linalg.inv(H), np.eye(K, dtype=np.complex128), ones, np.eye(K, dtype=np.int8))


@dataclass(frozen=True)
class LinkBudget:
    K: int = 3
    schemes: tuple = ("zf", "cf")
    snr_db: tuple = tuple(range(0, 65, 5))
    trials: int = 100
    seed: int = 0
    eig_policy: str = "fixed"
    eig_index: int = 1
    Mt: int | None = None
    Mr: int | None = None

    def __post_init__(self):
        K = check_count(self.K, "K", minimum=3)
        check_count(self.trials, "trials", minimum=1)
        check_count(self.seed, "seed", minimum=0, maximum=2**64 - 1)
        check_count(self.eig_index, "eig_index", minimum=1, maximum=K - 1)
        object.__setattr__(self, "schemes", tuple(self.schemes))
        object.__setattr__(self, "snr_db", tuple(float(x) for x in self.snr_db))
        if not self.schemes or any(s not in SCHEMES for s in self.schemes):
            raise ArgumentError(f"schemes must be drawn from {SCHEMES}, got {self.schemes}")
        if len(set(self.schemes)) != len(self.schemes):
            raise ArgumentError("schemes must be distinct")
        if self.eig_policy not in EIG_POLICIES:
            raise ArgumentError(f"eig_policy must be one of {EIG_POLICIES}")
        g = np.asarray(self.snr_db)
        if g.size == 0 or not np.all(np.isfinite(g)) or np.any(np.diff(g) <= 0):
            raise ArgumentError("snr grid must be finite and strictly increasing")
        if "smd" in self.schemes:
            if self.Mt is None or self.Mr is None:
                raise ArgumentError("the smd scheme needs Mt and Mr")
            if self.Mt + self.Mr < K + 1:
                raise ArgumentError(f"smd needs Mt + Mr >= K + 1, got {self.Mt} + {self.Mr}")

    def pattern(self, scheme):
        if scheme == "zf":
            return (self.K, 1)
        if scheme == "cf":
            return (self.K - 1, 2)
        return (self.Mt, self.Mr)

    def metadata(self):
        return {
            "K": self.K,
            "seed": self.seed,
            "trials": self.trials,
            "eig_policy": self.eig_policy,
            "eig_index": self.eig_index,
            "patterns": {s: {"Mt": self.pattern(s)[0], "Mr": self.pattern(s)[1]} for s in self.schemes},
        }


@dataclass(frozen=True)
class SweepResult:
    snr_db: tuple
    mean: dict
    std: dict
    metadata: dict = field(default_factory=dict)

    @property
    def schemes(self):
        return tuple(self.mean)

    def curve(self, scheme):
        if scheme not in self.mean:
            raise ArgumentError(f"scheme {scheme!r} not in result")
        return np.asarray(self.mean[scheme])


def trial_seed(seed, t, attempt=0):
    """Channel seed for trial ``t``; independent of execution order."""
    key = [seed, t] if attempt == 0 else [seed, t, attempt]
    return int(np.random.SeedSequence(key).generate_state(1, np.uint64)[0])


def _rates(H, scheme, budget):
    """Sum rate at every grid point for one realization."""
    if scheme == "zf":
        beams = zf_broadcast_beams(H)
        return [sum_rate(H, beams, x) for x in budget.snr_db]
    if scheme == "smd":
        beams = full_dof_beams(H, budget.Mt, budget.Mr)
        return [sum_rate(H, beams, x) for x in budget.snr_db]
    chain = alignment_matrices(H)
    if budget.eig_policy == "fixed":
        beams = closed_form_beams(H, budget.eig_index, chain)
        return [sum_rate(H, beams, x) for x in budget.snr_db]
    # best eigenvector per realization and per SNR point
    candidates = []
    for i in range(1, budget.K):
        try:
            candidates.append(closed_form_beams(H, i, chain))
        except NumericalFailure:
            continue
    if not candidates:
        raise NumericalFailure("no eigenvector produced usable beams")
    return [max(sum_rate(H, b, x) for b in candidates) for x in budget.snr_db]


def sweep(budget):
    """Average sum rate per scheme and SNR over ``budget.trials`` channel draws.

    Every scheme sees the same channel in a given trial. A trial whose beam
    design fails is redrawn with a fresh seed; the sweep aborts when more
    than 10% of the trials needed a redraw.
    """
    rates = {s: np.empty((budget.trials, len(budget.snr_db))) for s in budget.schemes}
    failures = 0
    max_failures = math.floor(MAX_FAIL_FRACTION * budget.trials)
    for t in range(budget.trials):
        attempt = 0
        while True:
            H = sample_channel(budget.K, 1, trial_seed(budget.seed, t, attempt)).matrix(1)
            try:
                row = {s: _rates(H, s, budget) for s in budget.schemes}
                break
            except CompDofError:
                failures += 1
                attempt += 1
                if failures > max_failures:
                    raise NumericalFailure(
                        f"{failures} beam failures in {budget.trials} trials exceed 10%"
                    )
        for s in budget.schemes:
            rates[s][t] = row[s]
    ddof = 1 if budget.trials > 1 else 0
    mean = {s: tuple(_q(x) for x in rates[s].mean(axis=0)) for s in budget.schemes}
    std = {s: tuple(_q(x) for x in rates[s].std(axis=0, ddof=ddof)) for s in budget.schemes}
    meta = budget.metadata()
    meta["failures"] = failures
    return SweepResult(tuple(budget.snr_db), mean, std, meta)


def _window(result, window):
    lo, hi = window
    x = np.asarray(result.snr_db)
    sel = (x >= lo) & (x <= hi)
    if sel.sum() < 2:
        raise ArgumentError(f"window {window} contains fewer than 2 grid points")
    return sel


def estimate_dof_slope(result, scheme, window=(40.0, 60.0)):
    """Least-squares slope of the sum rate in bits per 10 dB, divided by ``log2(10)``."""
    sel = _window(result, window)
    x = np.asarray(result.snr_db)[sel]
    y = result.curve(scheme)[sel]
    slope = np.polyfit(x, y, 1)[0]
    return float(slope * 10.0 / math.log2(10.0))


def snr_gap_db(result, better, worse, window=(40.0, 60.0)):
    """Mean horizontal offset (dB) between two curves at matched sum rate."""
    sel = _window(result, window)
    x = np.asarray(result.snr_db)
    yb = result.curve(better)
    if np.any(np.diff(yb) <= 0):
        raise NumericalFailure(f"curve {better!r} is not increasing")
    gaps = [xw - np.interp(yw, yb, x) for xw, yw in zip(x[sel], result.curve(worse)[sel])]
    return float(np.mean(gaps))


def _rows(result):
    n = result.metadata.get("trials")
    for s in result.schemes:
        for x, m, d in zip(result.snr_db, result.mean[s], result.std[s]):
            yield s, x, m, d, n


def to_json(result):
    doc = {
        "metadata": result.metadata,
        "results": [
            {"scheme": s, "snr_db": _q(x), "mean_sum_rate": _q(m), "stddev": _q(d), "trials": n}
            for s, x, m, d, n in _rows(result)
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def from_json(text):
    doc = json.loads(text)
    snr, mean, std = [], {}, {}
    for r in doc["results"]:
        mean.setdefault(r["scheme"], []).append(r["mean_sum_rate"])
        std.setdefault(r["scheme"], []).append(r["stddev"])
        if r["snr_db"] not in snr:
            snr.append(r["snr_db"])
    return SweepResult(
        tuple(snr), {k: tuple(v) for k, v in mean.items()}, {k: tuple(v) for k, v in std.items()},
        doc["metadata"],
    )


def to_csv(result):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for s, x, m, d, n in _rows(result):
        w.writerow([s, f"{x:.{SIG_DIGITS}g}", f"{m:.{SIG_DIGITS}g}", f"{d:.{SIG_DIGITS}g}", n])
    return buf.getvalue()


def export(result, fmt, destination):
    fmt = fmt.lower()
    if fmt not in ("csv", "json"):
        raise ArgumentError(f"format must be csv or json, got {fmt!r}")
    text = to_csv(result) if fmt == "csv" else to_json(result)
    path = Path(destination)
    try:
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write sweep result to {path}: {exc}") from exc


__all__ = [
    "SCHEMES",
    "sinr",
    "sum_rate",
    "zf_broadcast_beams",
    "LinkBudget",
    "SweepResult",
    "trial_seed",
    "sweep",
    "estimate_dof_slope",
    "snr_gap_db",
    "to_json",
    "from_json",
    "to_csv",
    "export",
]
