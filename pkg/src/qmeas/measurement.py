"""Measurement-induced premeasures and conditional bit sampling.

For a qubit-wise basis schedule B and a bit string tau, the premeasure is
p(tau) = <v|rho|v> with v the tensor product of the chosen basis vectors
(first qubit fastest).  On factored states the premeasure splits into one
factor per block; within a block of size n with corner pairs the factor has
the closed form

    diag + corner * 2*Re( sum_{k=1}^{r} conj(w_k) * w_{2^n-k+1} )

where w is the product vector of the block's chosen basis vectors.  Paired
coordinates sit at bitwise-complementary indices, so the sum collapses to a
product structure evaluated in O(n) by a binary prefix walk, independent of
how many corner pairs there are.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import jsonio
from .config import require_dense_qubits
from .errors import (
    BadQuery,
    BadSpec,
    MeasureZeroPrefix,
    NotOrthonormal,
    NumericHealthWarning,
)
from .matrixcore import require_unit_vector
from .states import DenseStateChain, DenseStatePrefix, DensityBlock, FactoredState

_CLAMP_WARN = 1e-9


def as_bits(tau) -> tuple[int, ...]:
    """Normalize a bit string ('0101', iterable of 0/1) to a tuple of ints."""
    if isinstance(tau, str):
        if any(c not in "01" for c in tau):
            raise BadQuery(f"bit strings may only contain 0 and 1, got {tau!r}")
        return tuple(int(c) for c in tau)
    out = []
    for b in tau:
        if b not in (0, 1):
            raise BadQuery(f"bit strings may only contain 0 and 1, got {b!r}")
        out.append(int(b))
    return tuple(out)


def bits_to_str(bits) -> str:
    return "".join(str(b) for b in bits)


def _clamp01(value: float, context: str = "premeasure") -> float:
    if value < 0.0 or value > 1.0:
        if value < -_CLAMP_WARN or value > 1.0 + _CLAMP_WARN:
            warnings.warn(
                f"{context} clamped from {value!r}, beyond the rounding scale",
                NumericHealthWarning,
                stacklevel=3,
            )
        value = min(max(value, 0.0), 1.0)
    return float(value)


class MeasurementSystem:
    """Qubit-wise orthonormal basis schedule, queried by 1-based position."""

    def __init__(self, kind: str, pairs, label: str, spec: dict):
        self.kind = kind
        self._pairs = pairs  # list of (b0, b1) tuples, extended periodically
        self.label = label
        self._spec = spec
        for b0, b1 in pairs:
            require_unit_vector(b0, what="basis vector")
            require_unit_vector(b1, what="basis vector")
            overlap = abs(np.vdot(b0, b1))
            if overlap > 1e-9:
                raise NotOrthonormal(f"basis pair has overlap {overlap:.3e}")

    @classmethod
    def standard(cls) -> "MeasurementSystem":
        pair = (np.array([1.0, 0.0], dtype=complex), np.array([0.0, 1.0], dtype=complex))
        return cls("standard", [pair], "standard", {"kind": "standard"})

    @classmethod
    def hadamard(cls) -> "MeasurementSystem":
        s = 1.0 / math.sqrt(2.0)
        pair = (np.array([s, s], dtype=complex), np.array([s, -s], dtype=complex))
        return cls("hadamard", [pair], "hadamard", {"kind": "hadamard"})

    @classmethod
    def rotation(cls, thetas) -> "MeasurementSystem":
        """Real rotations by a periodic angle schedule."""
        thetas = [float(t) for t in thetas]
        if not thetas:
            raise BadSpec("rotation schedule must not be empty")
        pairs = []
        for t in thetas:
            c, s = math.cos(t), math.sin(t)
            pairs.append(
                (np.array([c, s], dtype=complex), np.array([-s, c], dtype=complex))
            )
        return cls(
            "rotation", pairs, f"rotation[{len(thetas)}]", {"kind": "rotation", "theta": thetas}
        )

    @classmethod
    def explicit(cls, pairs) -> "MeasurementSystem":
        """Explicit list of basis pairs, extended periodically."""
        norm = []
        for b0, b1 in pairs:
            norm.append(
                (
                    np.asarray(b0, dtype=complex).reshape(2),
                    np.asarray(b1, dtype=complex).reshape(2),
                )
            )
        if not norm:
            raise BadSpec("explicit basis list must not be empty")
        spec = {
            "kind": "explicit",
            "pairs": [
                [
                    [jsonio.complex_to_json(z) for z in b0],
                    [jsonio.complex_to_json(z) for z in b1],
                ]
                for b0, b1 in norm
            ],
        }
        return cls("explicit", norm, f"explicit[{len(norm)}]", spec)

    @classmethod
    def from_spec(cls, doc: dict) -> "MeasurementSystem":
        if not isinstance(doc, dict) or "kind" not in doc:
            raise BadSpec("basis spec must be an object with a 'kind' field")
        kind = doc["kind"]
        if kind == "standard":
            return cls.standard()
        if kind == "hadamard":
            return cls.hadamard()
        if kind == "rotation":
            thetas = doc.get("theta")
            if not isinstance(thetas, list) or not thetas:
                raise BadSpec("rotation spec needs a non-empty 'theta' list")
            return cls.rotation(thetas)
        if kind == "explicit":
            raw = doc.get("pairs")
            if not isinstance(raw, list) or not raw:
                raise BadSpec("explicit spec needs a non-empty 'pairs' list")
            pairs = []
            for item in raw:
                if not isinstance(item, list) or len(item) != 2:
                    raise BadSpec("each explicit pair must be [b0, b1]")
                b0 = [jsonio.complex_from_json(z) for z in item[0]]
                b1 = [jsonio.complex_from_json(z) for z in item[1]]
                if len(b0) != 2 or len(b1) != 2:
                    raise BadSpec("basis vectors must have two components")
                pairs.append((b0, b1))
            return cls.explicit(pairs)
        raise BadSpec(f"unknown basis kind {kind!r}")

    def to_spec(self) -> dict:
        return dict(self._spec)

    def basis_at(self, q: int):
        """Basis pair (b0, b1) measured at 1-based qubit position q."""
        if q < 1:
            raise BadQuery(f"qubit positions are 1-based, got {q}")
        return self._pairs[(q - 1) % len(self._pairs)]

    def chosen_vector(self, q: int, bit: int) -> np.ndarray:
        return self.basis_at(q)[bit]

    def chosen_factors(self, bits, offset: int = 0) -> np.ndarray:
        """Stacked 2-vectors chosen by ``bits`` at positions offset+1, offset+2, ..."""
        bits = as_bits(bits)
        out = np.empty((len(bits), 2), dtype=complex)
        for i, b in enumerate(bits):
            out[i] = self.basis_at(offset + i + 1)[b]
        return out

    def product_vector(self, bits, offset: int = 0) -> np.ndarray:
        """Dense tensor product of the chosen basis vectors (first fastest)."""
        bits = as_bits(bits)
        require_dense_qubits(len(bits), "product vector")
        v = np.ones(1, dtype=complex)
        for i, b in enumerate(bits):
            # later qubits vary slower, so they multiply in on the left
            v = np.kron(self.basis_at(offset + i + 1)[b], v)
        return v


def paired_coordinate_sum(factors: np.ndarray, count: int):
    """sum_{k=1}^{count} conj(w_k) * w_{2^n-k+1} for a product vector w.

    ``factors`` holds the per-qubit 2-vectors, shape (..., n, 2), qubit 1
    first.  Paired coordinates have bitwise-complementary indices, so the sum
    over the first ``count`` coordinates factorizes along the binary digits
    of ``count``: walking its bits from the top, each set bit contributes the
    locked higher digits times a free product over the lower positions.
    """
    factors = np.asarray(factors, dtype=complex)
    if factors.ndim < 2 or factors.shape[-1] != 2:
        raise BadQuery("factors must have shape (..., n, 2)")
    n = factors.shape[-2]
    if not 0 <= count <= 1 << n:
        raise BadQuery(f"count {count} out of range [0, 2^{n}]")
    batch = factors.shape[:-2]
    f0 = np.conj(factors[..., 0]) * factors[..., 1]  # conj(a_q) * b_q
    f1 = np.conj(f0)
    pair_sum = f0 + f1  # both bit choices at a free position
    if count == 1 << n:
        out = np.prod(pair_sum, axis=-1)
        return out if batch else complex(out)
    # low[p] = product of pair_sum over positions strictly below p
    ones = np.ones(batch + (1,), dtype=complex)
    low = np.concatenate([ones, np.cumprod(pair_sum, axis=-1)[..., :-1]], axis=-1)
    total = np.zeros(batch, dtype=complex)
    locked = np.ones(batch, dtype=complex)
    for p in range(n - 1, -1, -1):
        if (count >> p) & 1:
            total = total + locked * f0[..., p] * low[..., p]
            locked = locked * f1[..., p]
        else:
            locked = locked * f0[..., p]
    return total if batch else complex(total)


def product_quadratic_form(block: DensityBlock, factors: np.ndarray):
    """<W| d |W> for product vectors W of unit per-qubit factors, in O(n)."""
    factors = np.asarray(factors, dtype=complex)
    if factors.shape[-2] != block.n:
        raise BadQuery(f"need {block.n} qubit factors, got {factors.shape[-2]}")
    s = paired_coordinate_sum(factors, block.corner_count)
    return block.diag_value + block.corner_value * 2.0 * np.real(s)


def block_measure(
    block: DensityBlock, system: MeasurementSystem, block_offset: int, sigma
) -> float:
    """Measure of a complete block outcome sigma under the basis schedule."""
    bits = as_bits(sigma)
    if len(bits) != block.n:
        raise BadQuery(f"block of size {block.n} needs {block.n} bits, got {len(bits)}")
    factors = system.chosen_factors(bits, offset=block_offset)
    return _clamp01(float(product_quadratic_form(block, factors)), "block measure")


def partial_block_factor(
    block: DensityBlock, system: MeasurementSystem, block_offset: int, prefix
) -> float:
    """Measure factor of a block measured only on its first ``len(prefix)`` qubits.

    The projector on the measured qubits tensors with identity on the rest.
    Corner entries pair an index with its bitwise complement, so as long as
    at least one qubit stays unmeasured the corner terms carry a Kronecker
    delta between a slow index and its complement and vanish; only the
    constant diagonal survives.
    """
    bits = as_bits(prefix)
    j = len(bits)
    if j > block.n:
        raise BadQuery(f"prefix of length {j} exceeds block size {block.n}")
    if j == block.n:
        return block_measure(block, system, block_offset, bits)
    if j == 0:
        return 1.0
    return block.diag_value * float(1 << (block.n - j))


def premeasure_factored(state: FactoredState, system: MeasurementSystem, tau) -> float:
    """Premeasure of tau on a factored state, one factor per touched block."""
    bits = as_bits(tau)
    state.ensure_covers(len(bits))
    value = 1.0
    pos = 0
    offset = 0
    index = 0
    while pos < len(bits):
        block = state.block(index)
        take = min(block.n, len(bits) - pos)
        seg = bits[pos : pos + take]
        if take == block.n:
            value *= block_measure(block, system, offset, seg)
        else:
            value *= partial_block_factor(block, system, offset, seg)
        pos += take
        offset += block.n
        index += 1
    return _clamp01(value)


def premeasure_dense(prefix: DenseStatePrefix, system: MeasurementSystem, tau) -> float:
    """Premeasure of tau evaluated against a dense prefix of matching depth."""
    bits = as_bits(tau)
    if len(bits) != prefix.depth:
        raise BadQuery(
            f"tau has {len(bits)} bits but the prefix depth is {prefix.depth}"
        )
    if not bits:
        return 1.0
    v = system.product_vector(bits)
    value = float(np.real(np.vdot(v, prefix.rho @ v)))
    return _clamp01(value)


def premeasure_table_dense(
    prefix: DenseStatePrefix, system: MeasurementSystem, offset: int = 0
) -> np.ndarray:
    """All 2**k premeasure values of a depth-k dense prefix at once.

    The returned array is indexed by the integer encoding of tau with qubit 1
    as the least-significant bit.  Implemented as a qubit-by-qubit basis
    rotation of the prefix, O(k * 4**k) instead of 2**k separate quadratic
    forms.
    """
    k = prefix.depth
    if k == 0:
        return np.ones(1)
    T = np.asarray(prefix.rho, dtype=complex).reshape((2,) * (2 * k))
    for q in range(1, k + 1):
        B = np.stack(system.basis_at(offset + q), axis=1)  # columns are b0, b1
        ra = k - q  # row axis of qubit q (axis 0 is the most significant bit)
        ca = 2 * k - q
        T = np.moveaxis(np.tensordot(T, np.conj(B), axes=([ra], [0])), -1, ra)
        T = np.moveaxis(np.tensordot(T, B, axes=([ca], [0])), -1, ca)
    values = np.real(np.diagonal(T.reshape(1 << k, 1 << k))).copy()
    worst = max(float(-values.min(initial=0.0)), float(values.max(initial=1.0) - 1.0))
    if worst > _CLAMP_WARN:
        warnings.warn(
            f"premeasure table clamped by {worst:.3e}, beyond the rounding scale",
            NumericHealthWarning,
            stacklevel=2,
        )
    return np.clip(values, 0.0, 1.0)


def uniform_premeasure(tau) -> float:
    """The uniform reference measure 2**-|tau|."""
    return 2.0 ** -len(as_bits(tau))


def _premeasure_any(state, system: MeasurementSystem, tau, path: str = "auto") -> float:
    bits = as_bits(tau)
    if isinstance(state, FactoredState):
        if path == "dense":
            return premeasure_dense(state.prefix_density(len(bits)), system, bits)
        return premeasure_factored(state, system, bits)
    if isinstance(state, DenseStateChain):
        return premeasure_dense(state.prefix(len(bits)), system, bits)
    if isinstance(state, DenseStatePrefix):
        return premeasure_dense(state, system, bits)
    raise BadQuery(f"unsupported state presentation {type(state).__name__}")


def additivity_check(state, system: MeasurementSystem, tau, path: str = "auto") -> float:
    """|p(tau) - p(tau0) - p(tau1)|, the one-step additivity defect."""
    bits = as_bits(tau)
    p = _premeasure_any(state, system, bits, path)
    p0 = _premeasure_any(state, system, bits + (0,), path)
    p1 = _premeasure_any(state, system, bits + (1,), path)
    return abs(p - p0 - p1)


@dataclass(frozen=True)
class PremeasureQuery:
    """One premeasure table row: the bit string and its measure."""

    tau: str
    value: float

    def payload(self) -> dict:
        return {"tau": self.tau, "value": self.value, "uniform": uniform_premeasure(self.tau)}


@dataclass
class BitSample:
    """Sampled bits plus the provenance needed to reproduce and audit them."""

    bits: np.ndarray
    seed: int
    basis_label: str
    state_label: str
    conditional_probs: np.ndarray
    generator: str = "numpy-pcg64"

    def __len__(self) -> int:
        return int(self.bits.shape[0])

    def bit_string(self) -> str:
        return "".join("1" if b else "0" for b in self.bits)

    def conditional_product(self) -> float:
        return float(np.prod(self.conditional_probs)) if len(self) else 1.0

    def sidecar(self) -> dict:
        return {
            "seed": self.seed,
            "generator": self.generator,
            "basis": self.basis_label,
            "state": self.state_label,
            "n_bits": len(self),
            "conditional_probs": [float(c) for c in self.conditional_probs],
        }

    def write(self, path_prefix: str) -> tuple[str, str]:
        """Write ASCII bits (64 per line) and a JSON sidecar; returns the paths."""
        bits_path = f"{path_prefix}.bits"
        sidecar_path = f"{path_prefix}.json"
        text = self.bit_string()
        with open(bits_path, "w", encoding="ascii") as fh:
            for i in range(0, len(text), 64):
                fh.write(text[i : i + 64] + "\n")
        with open(sidecar_path, "w", encoding="ascii") as fh:
            fh.write(jsonio.canonical_dumps(self.sidecar()))
            fh.write("\n")
        return bits_path, sidecar_path


def sample_bits(
    state: FactoredState, system: MeasurementSystem, length: int, seed: int
) -> BitSample:
    """Draw ``length`` bits by conditional sampling of the factored premeasure.

    One uniform variate is consumed per bit; bit b is emitted when the
    conditional probability of 0 given the sampled prefix exceeds the
    variate.  The recorded conditionals telescope, so their product equals
    the premeasure of the emitted string.
    """
    if length < 0:
        raise BadQuery(f"length must be non-negative, got {length}")
    if not isinstance(state, FactoredState):
        raise BadQuery("sampling is defined for factored states")
    rng = np.random.default_rng(seed)
    bits = np.zeros(length, dtype=np.uint8)
    conds = np.ones(length, dtype=float)
    state.ensure_covers(length)
    pos = 0
    offset = 0
    index = 0
    while pos < length:
        block = state.block(index)
        prev = 1.0
        seg: list[int] = []
        for step in range(block.n):
            if pos == length:
                break
            if prev <= 0.0:
                raise MeasureZeroPrefix(
                    f"prefix of measure zero inside block {index} (offset {offset})"
                )
            if step == block.n - 1:
                f0 = block_measure(block, system, offset, seg + [0])
                p0 = min(max(f0 / prev, 0.0), 1.0)
                bit = 0 if rng.random() < p0 else 1
                chosen = f0 if bit == 0 else block_measure(block, system, offset, seg + [1])
            else:
                # both one-bit extensions halve the partial factor exactly
                f0 = prev * 0.5
                bit = 0 if rng.random() < 0.5 else 1
                chosen = f0
            conds[pos] = chosen / prev
            bits[pos] = bit
            prev = chosen
            seg.append(bit)
            pos += 1
        offset += block.n
        index += 1
    return BitSample(bits, int(seed), system.label, state.label, conds)


__all__ = [
    "BitSample",
    "MeasurementSystem",
    "PremeasureQuery",
    "additivity_check",
    "as_bits",
    "bits_to_str",
    "block_measure",
    "paired_coordinate_sum",
    "partial_block_factor",
    "premeasure_dense",
    "premeasure_factored",
    "premeasure_table_dense",
    "product_quadratic_form",
    "sample_bits",
    "uniform_premeasure",
]
