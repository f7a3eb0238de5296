"""Corner-paired block states and their dense prefixes.

A block on n qubits has constant diagonal 2**-n and ``corner_count`` pairs of
equal off-diagonal entries placed symmetrically on the anti-diagonal: entry
(i, 2**n - i + 1) holds ``corner_value`` for 1-based i <= corner_count, plus
the mirror image.  The canonical block uses corner_count = floor(2**n / n)
and corner_value = 2**-n.  A full state is an infinite tensor product of such
blocks (sizes 5, 6, 7, ... for the built-in witness state), realized lazily.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from . import jsonio
from .config import require_dense_qubits
from .errors import BadBlock, BadFamilyParams, BadQuery, BadShape, BadSpec
from .matrixcore import is_density_matrix, kron, num_qubits_of, partial_trace_last_qubit


@dataclass(frozen=True)
class DensityBlock:
    """Structured density block: constant diagonal plus anti-diagonal corners."""

    n: int
    corner_count: int
    diag_value: float
    corner_value: float
    representation: str = "structured_sparse"

    def __post_init__(self):
        if self.n < 1:
            raise BadBlock(f"block size must be at least one qubit, got {self.n}")
        if not 0 <= self.corner_count <= 1 << (self.n - 1):
            raise BadBlock(
                f"corner_count {self.corner_count} out of range [0, {1 << (self.n - 1)}]"
            )
        if abs(self.diag_value - 2.0 ** -self.n) > 1e-15:
            raise BadBlock(f"diagonal value must be 2^-{self.n}")
        if not 0.0 <= self.corner_value <= self.diag_value:
            raise BadBlock("corner value must lie in [0, diagonal value]")
        if self.representation not in ("structured_sparse", "dense"):
            raise BadBlock(f"unknown representation {self.representation!r}")

    @property
    def dim(self) -> int:
        return 1 << self.n

    def to_dense(self) -> np.ndarray:
        """Materialize the block; fails loudly beyond the dense cap."""
        require_dense_qubits(self.n, f"block of {self.n} qubits")
        m = np.eye(self.dim) * self.diag_value
        for i in range(1, self.corner_count + 1):
            m[i - 1, self.dim - i] = self.corner_value
            m[self.dim - i, i - 1] = self.corner_value
        return m

    def describe(self) -> dict:
        return {
            "n": self.n,
            "corner_count": self.corner_count,
            "diag_value": self.diag_value,
            "corner_value": self.corner_value,
            "representation": self.representation,
        }


def build_corner_block(n: int) -> DensityBlock:
    """Canonical block: floor(2**n / n) corner pairs of value 2**-n."""
    if n < 3:
        raise BadBlock(f"canonical blocks need n >= 3, got {n}")
    return DensityBlock(n, (1 << n) // n, 2.0 ** -n, 2.0 ** -n)


def build_corner_block_general(n: int, corner_count: int, corner_value: float) -> DensityBlock:
    """Family block with chosen corner count and value (value capped at 2**-n)."""
    if n < 1:
        raise BadFamilyParams(f"block size must be positive, got n={n}")
    if not 0 <= corner_count <= 1 << (n - 1):
        raise BadFamilyParams(
            f"corner count {corner_count} out of range [0, {1 << (n - 1)}] at n={n}"
        )
    if not 0.0 <= corner_value <= 2.0 ** -n:
        raise BadFamilyParams(
            f"corner value {corner_value} out of range [0, 2^-{n}] at n={n}"
        )
    return DensityBlock(n, int(corner_count), 2.0 ** -n, float(corner_value))


@dataclass(frozen=True)
class EigenPair:
    """Analytic eigenpair of a structured block.

    kind "pair_plus"/"pair_minus" are (e_i +- e_{2^n-i+1})/sqrt(2) for a
    1-based corner index i; kind "middle" is the basis vector e_i.
    """

    value: float
    kind: str
    index: int
    n: int

    def vector(self) -> np.ndarray:
        dim = 1 << self.n
        v = np.zeros(dim)
        if self.kind == "middle":
            v[self.index - 1] = 1.0
        elif self.kind in ("pair_plus", "pair_minus"):
            s = 1.0 if self.kind == "pair_plus" else -1.0
            v[self.index - 1] = 1.0 / math.sqrt(2.0)
            v[dim - self.index] = s / math.sqrt(2.0)
        else:
            raise BadQuery(f"unknown eigenvector kind {self.kind!r}")
        return v


@dataclass(frozen=True)
class EigenGroup:
    kind: str
    value: float
    multiplicity: int


def eigenvalue_groups(block: DensityBlock) -> list[EigenGroup]:
    """Eigenvalue multiplicities of a block, computed without materializing it."""
    r = block.corner_count
    groups = []
    if r:
        groups.append(EigenGroup("pair_plus", block.diag_value + block.corner_value, r))
        groups.append(EigenGroup("pair_minus", block.diag_value - block.corner_value, r))
    middle = block.dim - 2 * r
    if middle:
        groups.append(EigenGroup("middle", block.diag_value, middle))
    return groups


def analytic_eigensystem(block: DensityBlock) -> list[EigenPair]:
    """Full closed-form eigensystem of a structured block.

    Corner pairs contribute (e_i +- e_{2^n-i+1})/sqrt(2) with eigenvalues
    diag +- corner; the untouched middle indices keep eigenvalue diag.
    """
    r = block.corner_count
    pairs = []
    for i in range(1, r + 1):
        pairs.append(EigenPair(block.diag_value + block.corner_value, "pair_plus", i, block.n))
    for i in range(1, r + 1):
        pairs.append(EigenPair(block.diag_value - block.corner_value, "pair_minus", i, block.n))
    for i in range(r + 1, block.dim - r + 1):
        pairs.append(EigenPair(block.diag_value, "middle", i, block.n))
    return pairs


@dataclass(frozen=True)
class DenseStatePrefix:
    """Dense density matrix on the first ``depth`` qubits."""

    depth: int
    rho: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.rho)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise BadShape(f"prefix matrix must be square, got {rho.shape}")
        if num_qubits_of(rho.shape[0]) != self.depth:
            raise BadShape(
                f"depth {self.depth} does not match matrix dimension {rho.shape[0]}"
            )
        object.__setattr__(self, "rho", rho)


class DenseStateChain:
    """Explicit coherent chain of dense prefixes rho_0, rho_1, ..., rho_D."""

    def __init__(self, prefixes: list[np.ndarray], label: str = "dense_prefix"):
        mats = [np.asarray(p) for p in prefixes]
        if not mats or mats[0].shape != (1, 1):
            raise BadSpec("a dense chain starts with the scalar prefix [[1.0]]")
        for depth, m in enumerate(mats):
            if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] != 1 << depth:
                raise BadSpec(f"prefix at depth {depth} must be {1 << depth}x{1 << depth}")
        self._prefixes = mats
        self.label = label

    @classmethod
    def from_top(cls, rho: np.ndarray, label: str = "dense_prefix") -> "DenseStateChain":
        """Build the chain under a top matrix by repeated partial traces."""
        rho = np.asarray(rho)
        depth = num_qubits_of(rho.shape[0])
        mats = [rho]
        for _ in range(depth):
            mats.append(partial_trace_last_qubit(mats[-1]))
        return cls(mats[::-1], label=label)

    @classmethod
    def from_matrices(cls, matrices: list[np.ndarray], label: str = "dense_prefix") -> "DenseStateChain":
        """Chain from explicit rho_1..rho_D (the scalar prefix is implied)."""
        return cls([np.eye(1)] + [np.asarray(m) for m in matrices], label=label)

    @property
    def depth(self) -> int:
        return len(self._prefixes) - 1

    def prefix(self, k: int) -> DenseStatePrefix:
        if not 0 <= k <= self.depth:
            raise BadQuery(f"chain holds depths 0..{self.depth}, asked for {k}")
        return DenseStatePrefix(k, self._prefixes[k])


class FactoredState:
    """Tensor product of structured blocks, extendable on demand."""

    def __init__(
        self,
        blocks: list[DensityBlock],
        factory: Callable[[int], DensityBlock] | None = None,
        label: str = "factored",
    ):
        self._blocks = list(blocks)
        self._factory = factory
        self.label = label

    @classmethod
    def witness_state(cls) -> "FactoredState":
        """The built-in product of canonical corner blocks of sizes 5, 6, 7, ..."""
        return cls([], factory=lambda i: build_corner_block(i + 5), label="paper_rho")

    @classmethod
    def general_family(
        cls,
        corner_counts: Mapping[int, int],
        corner_values: Mapping[int, float],
        label: str = "general",
    ) -> "FactoredState":
        """Family state from per-size corner tables keyed by n = 5, 6, ..."""
        sizes = sorted(corner_counts)
        if sorted(corner_values) != sizes:
            raise BadSpec("corner count and value tables must cover the same sizes")
        if not sizes:
            raise BadSpec("family tables must not be empty")
        if sizes != list(range(5, 5 + len(sizes))):
            raise BadSpec(f"family tables must cover contiguous sizes 5..N, got {sizes}")
        blocks = [
            build_corner_block_general(n, corner_counts[n], corner_values[n]) for n in sizes
        ]
        return cls(blocks, label=label)

    @classmethod
    def maximally_mixed(cls) -> "FactoredState":
        """Product of single-qubit maximally mixed blocks: I / 2**k at depth k."""
        return cls([], factory=lambda i: build_corner_block_general(1, 0, 0.0), label="max_mixed")

    @classmethod
    def from_blocks(cls, blocks: list[DensityBlock], label: str = "factored") -> "FactoredState":
        return cls(list(blocks), label=label)

    def ensure_covers(self, qubits: int) -> None:
        """Materialize enough blocks to cover the first ``qubits`` positions."""
        total = sum(b.n for b in self._blocks)
        while total < qubits:
            if self._factory is None:
                raise BadQuery(
                    f"state {self.label!r} covers only {total} qubits, needs {qubits}"
                )
            block = self._factory(len(self._blocks))
            self._blocks.append(block)
            total += block.n

    @property
    def blocks(self) -> list[DensityBlock]:
        return list(self._blocks)

    def block(self, i: int) -> DensityBlock:
        if i >= len(self._blocks) and self._factory is not None:
            while len(self._blocks) <= i:
                self._blocks.append(self._factory(len(self._blocks)))
        if not 0 <= i < len(self._blocks):
            raise BadQuery(f"state has {len(self._blocks)} blocks, asked for index {i}")
        return self._blocks[i]

    def block_offsets(self) -> list[int]:
        """Qubit offset of each materialized block (first block at offset 0)."""
        offsets = []
        total = 0
        for b in self._blocks:
            offsets.append(total)
            total += b.n
        return offsets

    @property
    def extendable(self) -> bool:
        return self._factory is not None

    def covered_qubits(self) -> int:
        return sum(b.n for b in self._blocks)

    def prefix_density(self, k: int) -> DenseStatePrefix:
        return prefix_density(self, k)

    def describe(self) -> dict:
        return {
            "label": self.label,
            "extendable": self.extendable,
            "blocks": [b.describe() for b in self._blocks],
        }


def prefix_density(state: FactoredState, k: int) -> DenseStatePrefix:
    """Dense density matrix on the first k qubits of a factored state.

    Complete blocks multiply in as Kronecker factors; a straddling block is
    materialized and partial-traced down to its first covered qubits.
    """
    if k < 0:
        raise BadQuery(f"prefix depth must be non-negative, got {k}")
    require_dense_qubits(k, f"prefix of depth {k}")
    state.ensure_covers(k)
    rho = np.eye(1)
    consumed = 0
    for block in state.blocks:
        if consumed >= k:
            break
        if consumed + block.n <= k:
            rho = kron(rho, block.to_dense())
            consumed += block.n
        else:
            keep = k - consumed
            part = block.to_dense()
            for _ in range(block.n - keep):
                part = partial_trace_last_qubit(part)
            rho = kron(rho, part)
            consumed = k
    return DenseStatePrefix(k, rho)


@dataclass(frozen=True)
class CoherenceReport:
    """Per-depth deviations of partial traces from the next-lower prefix."""

    ok: bool
    max_deviation: float
    deviations: tuple
    failed_at: int | None
    tol: float

    def payload(self) -> dict:
        return {
            "ok": self.ok,
            "max_deviation": self.max_deviation,
            "deviations": [{"depth": d, "deviation": v} for d, v in self.deviations],
            "failed_at": self.failed_at,
            "tol": self.tol,
        }


def _prefix_of(state, k: int) -> DenseStatePrefix:
    if isinstance(state, FactoredState):
        return state.prefix_density(k)
    if isinstance(state, DenseStateChain):
        return state.prefix(k)
    if isinstance(state, DenseStatePrefix):
        if k == state.depth:
            return state
        raise BadQuery("a single dense prefix only answers its own depth")
    raise BadQuery(f"unsupported state presentation {type(state).__name__}")


def check_coherence(state, depth: int, tol: float = 1e-10) -> CoherenceReport:
    """Verify that tracing the last qubit of each prefix yields the one below."""
    if depth < 1:
        raise BadQuery("coherence needs depth >= 1")
    deviations = []
    worst = 0.0
    failed_at = None
    for j in range(1, depth + 1):
        upper = _prefix_of(state, j).rho
        lower = _prefix_of(state, j - 1).rho
        dev = float(np.max(np.abs(partial_trace_last_qubit(upper) - lower)))
        deviations.append((j, dev))
        if dev > worst:
            worst = dev
        if failed_at is None and dev > tol:
            failed_at = j
    return CoherenceReport(failed_at is None, worst, tuple(deviations), failed_at, tol)


def parse_state_spec(doc: dict):
    """Build a state presentation from its JSON document."""
    if not isinstance(doc, dict) or "kind" not in doc:
        raise BadSpec("state spec must be an object with a 'kind' field")
    kind = doc["kind"]
    if kind == "paper_rho":
        return FactoredState.witness_state()
    if kind == "max_mixed":
        return FactoredState.maximally_mixed()
    if kind == "general":
        counts = _family_table(doc.get("h"), "h", int)
        values = _family_table(doc.get("g"), "g", float)
        return FactoredState.general_family(counts, values)
    if kind == "dense_prefix":
        mats = doc.get("matrices")
        if not isinstance(mats, list) or not mats:
            raise BadSpec("dense_prefix spec needs a non-empty 'matrices' list")
        chain = DenseStateChain.from_matrices([jsonio.matrix_from_json(m) for m in mats])
        for j in range(1, chain.depth + 1):
            check = is_density_matrix(chain.prefix(j).rho)
            if not check:
                raise BadSpec(f"matrix at depth {j} is not a density matrix")
        report = check_coherence(chain, chain.depth, tol=1e-9)
        if not report.ok:
            raise BadSpec(f"dense prefixes are not coherent at depth {report.failed_at}")
        return chain
    raise BadSpec(f"unknown state kind {kind!r}")


def _family_table(raw, name: str, cast) -> dict:
    """Normalize an h/g table given as {n: value} or as a list starting at n=5."""
    if isinstance(raw, dict):
        try:
            return {int(k): cast(v) for k, v in raw.items()}
        except (TypeError, ValueError):
            raise BadSpec(f"family table {name!r} has malformed entries") from None
    if isinstance(raw, list) and raw:
        try:
            return {5 + i: cast(v) for i, v in enumerate(raw)}
        except (TypeError, ValueError):
            raise BadSpec(f"family table {name!r} has malformed entries") from None
    raise BadSpec(f"family table {name!r} must be a mapping n->value or a list from n=5")


__all__ = [
    "CoherenceReport",
    "DenseStateChain",
    "DenseStatePrefix",
    "DensityBlock",
    "EigenGroup",
    "EigenPair",
    "FactoredState",
    "analytic_eigensystem",
    "build_corner_block",
    "build_corner_block_general",
    "check_coherence",
    "eigenvalue_groups",
    "parse_state_spec",
    "prefix_density",
]
