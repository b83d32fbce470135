"""LIBSVM-format ingestion and heterogeneous sample partitioning.

Parses the classic text format ("label idx:val idx:val ..." with 1-based,
strictly increasing indices), writes it back, and splits samples across
agents by label, by feature norm, by the largest eigenvalue of the sample
outer product, by a per-class Dirichlet draw, or uniformly at random.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .objectives import LogisticObjective

__all__ = [
    "Sample",
    "ParseError",
    "PartitionSpec",
    "parse_libsvm",
    "write_libsvm",
    "infer_dim",
    "partition",
    "write_partition_csv",
    "to_feature_matrix",
    "logistic_objective",
]

SCHEMES = ("by_label", "by_feature_norm", "by_max_eigenvalue", "dirichlet",
           "uniform")


class ParseError(ValueError):
    """Malformed LIBSVM input; the message names the offending line."""


@dataclass(frozen=True)
class Sample:
    """One labeled sparse sample with 1-based feature indices."""

    label: int
    indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=int)
        val = np.asarray(self.values, dtype=float)
        if self.label not in (-1, 1):
            raise ValueError(f"label must be -1 or +1, got {self.label}")
        if idx.shape != val.shape or idx.ndim != 1:
            raise ValueError("indices and values must be 1-d and aligned")
        if idx.size and (idx[0] < 1 or np.any(np.diff(idx) <= 0)):
            raise ValueError("indices must be strictly increasing and >= 1")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", val)

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))

    def max_outer_eigenvalue(self) -> float:
        # a a^T is rank one, so its top eigenvalue is ||a||^2
        return float(self.values @ self.values)


def _coerce_text(source) -> io.TextIOBase:
    if isinstance(source, bytes):
        return io.StringIO(source.decode("utf-8"))
    if isinstance(source, str):
        return io.StringIO(source)
    if isinstance(source, io.TextIOBase):
        return source
    return io.TextIOWrapper(source, encoding="utf-8")

_LABELS = {"+1": 1, "1": 1, "-1": -1}


def parse_libsvm(source) -> list[Sample]:
    """Parse LIBSVM text into samples; empty lines are skipped.

    Accepts a string, UTF-8 bytes, or a text/byte stream. Raises ParseError
    naming the 1-based line number on malformed tokens, labels outside
    {-1,+1}, or non-increasing indices.
    """
    out = []
    stream = _coerce_text(source)
    for lineno, raw in enumerate(stream, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        label = _LABELS.get(tokens[0])
        if label is None:
            raise ParseError(f"line {lineno}: label {tokens[0]!r} is not +/-1")
        indices, values = [], []
        for tok in tokens[1:]:
            try:
                idx_s, val_s = tok.split(":", 1)
                idx, val = int(idx_s), float(val_s)
            except ValueError:
                raise ParseError(
                    f"line {lineno}: malformed token {tok!r}") from None
            if idx < 1 or (indices and idx <= indices[-1]):
                raise ParseError(
                    f"line {lineno}: index {idx} not strictly increasing")
            indices.append(idx)
            values.append(val)
        out.append(Sample(label, np.array(indices, dtype=int),
                          np.array(values)))
    return out


def write_libsvm(samples, sink=None) -> str:
    """Serialize samples to LIBSVM text; returns the text (and writes sink)."""
    lines = []
    for s in samples:
        pairs = " ".join(f"{i}:{v:.17g}" for i, v in zip(s.indices, s.values))
        head = "+1" if s.label > 0 else "-1"
        lines.append(f"{head} {pairs}".rstrip())
    text = "\n".join(lines) + ("\n" if lines else "")
    if sink is not None:
        sink.write(text)
    return text


def infer_dim(samples) -> int:
    """Model dimension d = largest feature index seen across the whole file."""
    return max((int(s.indices[-1]) for s in samples if s.indices.size),
               default=0)


@dataclass(frozen=True)
class PartitionSpec:
    scheme: str
    n_agents: int
    alpha: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; "
                             f"choose from {SCHEMES}")
        if self.n_agents < 1:
            raise ValueError("n_agents must be >= 1")
        if self.scheme == "dirichlet" and not self.alpha > 0:
            raise ValueError("dirichlet requires alpha > 0")


def _split_sorted(order, n_agents):
    return [list(part) for part in np.array_split(np.asarray(order), n_agents)]


def partition(samples, spec: PartitionSpec) -> list[list[int]]:
    """Split sample indices into n_agents disjoint, covering parts.

    by_label groups equal labels (ordered by first appearance) and requires
    n_agents to equal the number of distinct labels. by_feature_norm and
    by_max_eigenvalue sort ascending by the respective statistic (ties broken
    by original index) and cut into equal contiguous chunks, which for two
    agents is the median split. dirichlet draws per-class agent proportions
    from Dir(alpha * 1) with the given seed; uniform shuffles and splits
    evenly.
    """
    if not samples:
        raise ValueError("cannot partition an empty sample list")
    n = len(samples)
    if spec.scheme == "by_label":
        groups: dict[int, list[int]] = {}
        for j, s in enumerate(samples):
            groups.setdefault(s.label, []).append(j)
        if len(groups) != spec.n_agents:
            raise ValueError(
                f"by_label needs n_agents == number of distinct labels "
                f"({len(groups)}), got {spec.n_agents}")
        return list(groups.values())
    if spec.scheme in ("by_feature_norm", "by_max_eigenvalue"):
        key = (Sample.norm if spec.scheme == "by_feature_norm"
               else Sample.max_outer_eigenvalue)
        stats = np.array([key(s) for s in samples])
        order = np.argsort(stats, kind="stable")
        return _split_sorted(order, spec.n_agents)
    rng = np.random.default_rng(spec.seed)
    if spec.scheme == "uniform":
        order = rng.permutation(n)
        return _split_sorted(order, spec.n_agents)
    # dirichlet: independent agent proportions per label class
    parts: list[list[int]] = [[] for _ in range(spec.n_agents)]
    labels_seen: list[int] = []
    for s in samples:
        if s.label not in labels_seen:
            labels_seen.append(s.label)
    for lab in labels_seen:
        members = np.array([j for j, s in enumerate(samples) if s.label == lab])
        rng.shuffle(members)
        props = rng.dirichlet(np.full(spec.n_agents, spec.alpha))
        cuts = np.floor(np.cumsum(props) * members.size + 0.5).astype(int)[:-1]
        for agent, chunk in enumerate(np.split(members, cuts)):
            parts[agent].extend(chunk.tolist())
    for p in parts:
        p.sort()
    return parts


def write_partition_csv(parts, sink) -> None:
    """Partition manifest rows 'sample_index,agent_id'."""
    sink.write("sample_index,agent_id\n")
    entries = sorted((j, a) for a, part in enumerate(parts) for j in part)
    for j, a in entries:
        sink.write(f"{j},{a}\n")


def to_feature_matrix(samples, d=None):
    """CSR feature matrix (m x d) and label vector for a list of samples."""
    if d is None:
        d = infer_dim(samples)
    m = len(samples)
    indptr = np.zeros(m + 1, dtype=int)
    cols, vals = [], []
    for j, s in enumerate(samples):
        cols.append(s.indices - 1)  # file format is 1-based
        vals.append(s.values)
        indptr[j + 1] = indptr[j] + s.indices.size
    col = np.concatenate(cols) if cols else np.zeros(0, dtype=int)
    val = np.concatenate(vals) if vals else np.zeros(0)
    A = sp.csr_matrix((val, col, indptr), shape=(m, d))
    labels = np.array([s.label for s in samples], dtype=float)
    return A, labels


def logistic_objective(samples, part, d, reg) -> LogisticObjective:
    """Ridge-logistic objective on the subset of samples selected by part."""
    subset = [samples[j] for j in part]
    A, b = to_feature_matrix(subset, d)
    return LogisticObjective(A, b, reg)
