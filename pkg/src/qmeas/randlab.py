"""Empirical randomness battery for sampled bit streams.

A pragmatic stand-in for algorithmic-randomness claims, which are not
decidable: the battery can only gather evidence.  Tests follow the classic
NIST SP 800-22 recipes (monobit, block frequency, runs, serial, cumulative
sums, approximate entropy) plus a compression-ratio figure that is reported
but never thresholded, since the choice of compressor is arbitrary.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats

from .errors import InsufficientData
from .measurement import BitSample

MIN_BITS = 1000
BLOCK_FREQUENCY_M = 128
SERIAL_M = 2
APEN_M = 2


@dataclass(frozen=True)
class TestResult:
    name: str
    statistic: float
    p_value: float
    passed: bool
    detail: dict = field(default_factory=dict)

    def payload(self) -> dict:
        out = {
            "name": self.name,
            "statistic": self.statistic,
            "p_value": self.p_value,
            "passed": self.passed,
        }
        if self.detail:
            out["detail"] = self.detail
        return out


@dataclass(frozen=True)
class BatteryReport:
    stream_id: str
    n_bits: int
    alpha: float
    results: tuple[TestResult, ...]
    compression_ratio: float

    def result(self, name: str) -> TestResult:
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)

    @property
    def failures(self) -> list[str]:
        return [r.name for r in self.results if not r.passed]

    def payload(self) -> dict:
        return {
            "stream_id": self.stream_id,
            "n_bits": self.n_bits,
            "alpha": self.alpha,
            "results": [r.payload() for r in self.results],
            "compression_ratio": self.compression_ratio,
            "failures": self.failures,
        }


def _as_bit_array(bits) -> tuple[np.ndarray, str]:
    if isinstance(bits, BitSample):
        label = f"seed={bits.seed},basis={bits.basis_label},state={bits.state_label}"
        return np.asarray(bits.bits, dtype=np.uint8), label
    if isinstance(bits, str):
        arr = np.frombuffer(bits.encode("ascii"), dtype=np.uint8) - ord("0")
        if arr.size and arr.max() > 1:
            raise InsufficientData("bit strings may contain only '0' and '1'")
        return arr.astype(np.uint8), ""
    arr = np.asarray(bits, dtype=np.uint8)
    if arr.ndim != 1 or (arr.size and arr.max() > 1):
        raise InsufficientData("expected a flat array of 0/1 bits")
    return arr, ""


def monobit_test(bits: np.ndarray, alpha: float) -> TestResult:
    n = bits.size
    s = float(2.0 * np.sum(bits, dtype=np.int64) - n)
    p = float(special.erfc(abs(s) / math.sqrt(2.0 * n)))
    return TestResult("monobit", s / math.sqrt(n), p, p >= alpha)


def block_frequency_test(bits: np.ndarray, alpha: float, m: int = BLOCK_FREQUENCY_M) -> TestResult:
    n_blocks = bits.size // m
    if n_blocks < 1:
        raise InsufficientData(f"block frequency needs at least {m} bits")
    pi = bits[: n_blocks * m].reshape(n_blocks, m).mean(axis=1)
    chi2 = 4.0 * m * float(np.sum((pi - 0.5) ** 2))
    p = float(special.gammaincc(n_blocks / 2.0, chi2 / 2.0))
    return TestResult("block_frequency", chi2, p, p >= alpha, {"block_size": m})


def runs_test(bits: np.ndarray, alpha: float) -> TestResult:
    n = bits.size
    pi = float(np.mean(bits))
    if abs(pi - 0.5) >= 2.0 / math.sqrt(n):
        return TestResult("runs", 0.0, 0.0, False, {"note": "frequency precondition failed"})
    v = 1.0 + float(np.count_nonzero(bits[1:] != bits[:-1]))
    denom = 2.0 * math.sqrt(2.0 * n) * pi * (1.0 - pi)
    p = float(special.erfc(abs(v - 2.0 * n * pi * (1.0 - pi)) / denom))
    return TestResult("runs", v, p, p >= alpha)


def _pattern_psi_squared(bits: np.ndarray, m: int) -> float:
    """NIST serial-test psi^2 statistic with wraparound pattern counts."""
    if m == 0:
        return 0.0
    n = bits.size
    extended = np.concatenate([bits, bits[: m - 1]]) if m > 1 else bits
    idx = np.zeros(n, dtype=np.int64)
    for j in range(m):
        idx = (idx << 1) | extended[j : j + n]
    counts = np.bincount(idx, minlength=1 << m)
    return float((1 << m) / n * np.sum(counts.astype(np.float64) ** 2) - n)


def serial_tests(bits: np.ndarray, alpha: float, m: int = SERIAL_M) -> list[TestResult]:
    psi2 = _pattern_psi_squared(bits, m)
    psi1 = _pattern_psi_squared(bits, m - 1)
    psi0 = _pattern_psi_squared(bits, m - 2)
    # both differences are non-negative up to rounding
    d1 = max(psi2 - psi1, 0.0)
    d2 = max(psi2 - 2.0 * psi1 + psi0, 0.0)
    p1 = float(special.gammaincc(2.0 ** (m - 2), d1 / 2.0))
    p2 = float(special.gammaincc(2.0 ** (m - 3), d2 / 2.0))
    return [
        TestResult("serial", d1, p1, p1 >= alpha, {"m": m}),
        TestResult("serial_second", d2, p2, p2 >= alpha, {"m": m}),
    ]


def cumulative_sums_test(bits: np.ndarray, alpha: float) -> TestResult:
    n = bits.size
    partial = np.cumsum(2 * bits.astype(np.int64) - 1)
    z = float(np.max(np.abs(partial)))
    if z == 0.0:
        return TestResult("cumulative_sums", 0.0, 0.0, False, {"note": "degenerate"})
    sn = math.sqrt(n)
    # loop bounds truncate toward zero, matching the reference implementation
    # (the skipped edge terms are Phi values at ~sqrt(n) sigma, negligible for
    # any stream long enough to be tested)
    total = 0.0
    for k in range(int((-n / z + 1) / 4), int((n / z - 1) / 4) + 1):
        total += stats.norm.cdf((4 * k + 1) * z / sn) - stats.norm.cdf((4 * k - 1) * z / sn)
    p = 1.0 - total
    for k in range(int((-n / z - 3) / 4), int((n / z - 1) / 4) + 1):
        p += stats.norm.cdf((4 * k + 3) * z / sn) - stats.norm.cdf((4 * k + 1) * z / sn)
    p = float(min(max(p, 0.0), 1.0))
    return TestResult("cumulative_sums", z, p, p >= alpha)


def approximate_entropy_test(bits: np.ndarray, alpha: float, m: int = APEN_M) -> TestResult:
    n = bits.size

    def phi(mm: int) -> float:
        if mm == 0:
            return 0.0
        extended = np.concatenate([bits, bits[: mm - 1]]) if mm > 1 else bits
        idx = np.zeros(n, dtype=np.int64)
        for j in range(mm):
            idx = (idx << 1) | extended[j : j + n]
        counts = np.bincount(idx, minlength=1 << mm).astype(np.float64)
        probs = counts[counts > 0] / n
        return float(np.sum(probs * np.log(probs)))

    apen = phi(m) - phi(m + 1)
    chi2 = max(2.0 * n * (math.log(2.0) - apen), 0.0)
    p = float(special.gammaincc(2.0 ** (m - 1), chi2 / 2.0))
    return TestResult("approximate_entropy", apen, p, p >= alpha, {"m": m})


def compression_ratio(bits: np.ndarray) -> float:
    """Compressed size in bits over stream length; a complexity proxy only."""
    packed = np.packbits(bits)
    compressed = zlib.compress(packed.tobytes(), level=9)
    return 8.0 * len(compressed) / bits.size


def run_battery(bits, alpha: float = 0.01, stream_id: str | None = None) -> BatteryReport:
    """Run every test on one stream; deterministic in the bits alone."""
    arr, derived_id = _as_bit_array(bits)
    if arr.size < MIN_BITS:
        raise InsufficientData(
            f"battery needs at least {MIN_BITS} bits, got {arr.size}"
        )
    results = [
        monobit_test(arr, alpha),
        block_frequency_test(arr, alpha),
        runs_test(arr, alpha),
        *serial_tests(arr, alpha),
        cumulative_sums_test(arr, alpha),
        approximate_entropy_test(arr, alpha),
    ]
    return BatteryReport(
        stream_id=stream_id if stream_id is not None else derived_id,
        n_bits=int(arr.size),
        alpha=alpha,
        results=tuple(results),
        compression_ratio=compression_ratio(arr),
    )


@dataclass(frozen=True)
class AggregateSummary:
    n_streams: int
    alpha: float
    per_test: dict
    envelope: int
    flagged: tuple[str, ...]

    def payload(self) -> dict:
        return {
            "n_streams": self.n_streams,
            "alpha": self.alpha,
            "per_test": self.per_test,
            "envelope": self.envelope,
            "flagged": list(self.flagged),
        }


def aggregate(reports: list[BatteryReport]) -> AggregateSummary:
    """Summarize failure counts per test across streams.

    A test is flagged when its failures exceed the 99% binomial envelope
    for the common significance level.
    """
    if not reports:
        raise InsufficientData("aggregate needs at least one report")
    alpha = reports[0].alpha
    if any(r.alpha != alpha for r in reports):
        raise InsufficientData("aggregated reports must share one alpha")
    names = [r.name for r in reports[0].results]
    envelope = int(stats.binom.ppf(0.99, len(reports), alpha))
    per_test = {}
    flagged = []
    for name in names:
        failures = sum(0 if r.result(name).passed else 1 for r in reports)
        per_test[name] = {
            "failures": failures,
            "failure_rate": failures / len(reports),
        }
        if failures > envelope:
            flagged.append(name)
    return AggregateSummary(
        n_streams=len(reports),
        alpha=alpha,
        per_test=per_test,
        envelope=envelope,
        flagged=tuple(flagged),
    )


__all__ = [
    "AggregateSummary",
    "BatteryReport",
    "TestResult",
    "aggregate",
    "approximate_entropy_test",
    "block_frequency_test",
    "compression_ratio",
    "cumulative_sums_test",
    "monobit_test",
    "run_battery",
    "runs_test",
    "serial_tests",
]
