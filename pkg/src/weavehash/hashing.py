"""Iterative pseudogroup hashing.

A target gate is first approximated by an ordered product of ``m`` elements
of a coarse pseudogroup (the preprocessor). Each following iteration
multiplies the current approximation on the right by the best element of a
mesh: all products of ``n + 1`` pseudogroup elements whose exact group
counterparts multiply to the identity. Mesh elements cluster around the
identity, so every iteration refines the approximation by a roughly constant
factor. The all-identity tuple is an exact identity, which makes the error
non-increasing from stage to stage.
"""

from __future__ import annotations

import dataclasses
import functools
import itertools
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from . import _kernels
from .approx import Pseudogroup, load_pseudogroup
from .groups import FiniteGroup, build_group, closing_elements
from .su2 import Gate, distance, qconj, qdistance, qmul
from .weave import BraidWord, evaluate, reduce

DATA_DIR = Path(__file__).resolve().parent / "data"
MESH_CAPACITY = 2_000_000
IDENTITY_QUAT = np.array([1.0, 0.0, 0.0, 0.0])


class MissingPseudogroupError(FileNotFoundError):
    pass


class ConfigError(ValueError):
    pass


def _product_quats(quats: np.ndarray, k: int) -> np.ndarray:
    """Quaternions of all ordered k-fold products, row-major over index tuples."""
    out = quats
    for _ in range(k - 1):
        out = qmul(out[:, None, :], quats[None, :, :]).reshape(-1, 4)
    return np.ascontiguousarray(out)


# --- mesh ----------------------------------------------------------------------

@dataclass(eq=False)
class Mesh:
    """All O^n products g_{i1} ... g_{in} g_k of pseudogroup elements where the
    exact group elements satisfy g_{i1} ... g_{in} g_k = 1.

    Item ``j`` corresponds to the index tuple ``np.unravel_index(j, (O,)*n)``
    extended by its closing element; item 0 is the all-identity tuple.
    """

    source: Pseudogroup
    n: int
    tuples: np.ndarray  # (O^n, n + 1) int
    quats: np.ndarray  # (O^n, 4)
    s0: float

    def __len__(self):
        return len(self.tuples)

    @property
    def L(self) -> int:
        return self.source.L

    def word(self, j: int) -> BraidWord:
        return reduce(itertools.chain.from_iterable(self.source.words[i].blocks for i in self.tuples[j]))

    def gate(self, j: int) -> Gate:
        return evaluate(self.word(j))

    def identity_distances(self) -> np.ndarray:
        """Distance of every item to the identity."""
        return qdistance(self.quats, IDENTITY_QUAT[None, :])


def build_mesh(p: Pseudogroup, n: int, group: FiniteGroup | None = None,
               capacity: int = MESH_CAPACITY) -> Mesh:
    if n < 2:
        raise ValueError("mesh needs n >= 2")
    G = group if group is not None else build_group(p.group_name)
    O = G.order
    if O**n > capacity:
        raise MemoryError(f"mesh of {O}^{n} items exceeds capacity {capacity}")
    heads = np.stack(np.unravel_index(np.arange(O**n), (O,) * n), axis=1).astype(np.int64)
    closing = closing_elements(G, heads)
    tuples = np.concatenate([heads, closing[:, None]], axis=1)
    quats = qmul(_product_quats(p.quats, n), p.quats[closing])
    quats = np.ascontiguousarray(quats)
    d = qdistance(quats[1:], IDENTITY_QUAT[None, :])
    return Mesh(p, n, tuples, quats, float(np.mean(d)))


# --- results and configuration ------------------------------------------------------

class StageRecord(NamedTuple):
    stage: str
    L: int
    error: float
    appended_length: int  # nominal, before reduction
    tail_used: bool


@dataclass
class HashResult:
    word: BraidWord
    error: float
    trace: list[StageRecord] = field(default_factory=list)
    quat: np.ndarray | None = field(default=None, repr=False)

    @property
    def unreduced_length(self) -> int:
        return sum(r.appended_length for r in self.trace)

    @property
    def stage_errors(self) -> list[float]:
        return [r.error for r in self.trace]


@dataclass(frozen=True)
class HashConfig:
    group: str = "icosahedral"
    L0: int = 8
    m: int = 3
    n: int = 3
    iterations: tuple[int, ...] = (24, 44, 68)
    tail_quantile: float = 0.994
    tail_delta: int = 4
    pseudogroup_dir: str | None = None
    # stage-input error above which iteration i (0-based) is retried with the
    # broader mesh; None disables the retry. The first iteration never retries.
    tail_thresholds: tuple[float | None, ...] | None = None

    def __post_init__(self):
        if self.m < 1 or self.n < 2:
            raise ConfigError("need m >= 1 and n >= 2")
        if not self.iterations:
            raise ConfigError("at least one iteration is required")
        if self.tail_thresholds is not None and len(self.tail_thresholds) != len(self.iterations):
            raise ConfigError("tail_thresholds must have one entry per iteration")

    @property
    def nominal_length(self) -> int:
        return self.m * self.L0 + sum((self.n + 1) * L for L in self.iterations)

    def directory(self) -> Path:
        return Path(self.pseudogroup_dir) if self.pseudogroup_dir else DATA_DIR

    def threshold(self, i: int) -> float | None:
        if i == 0 or self.tail_thresholds is None:
            return None
        return self.tail_thresholds[i]

    def without_tail(self) -> "HashConfig":
        return dataclasses.replace(self, tail_thresholds=None)

    def to_text(self) -> str:
        lines = [
            f"group={self.group}",
            f"L0={self.L0}",
            f"m={self.m}",
            f"n={self.n}",
            "iterations=" + ",".join(str(L) for L in self.iterations),
            f"tail_quantile={self.tail_quantile!r}",
            f"tail_delta={self.tail_delta}",
        ]
        if self.pseudogroup_dir:
            lines.append(f"pseudogroup_dir={self.pseudogroup_dir}")
        if self.tail_thresholds is not None:
            vals = ["-" if t is None else format(t, ".17g") for t in self.tail_thresholds]
            lines.append("tail_thresholds=" + ",".join(vals))
        return "\n".join(lines) + "\n"


def parse_config(text: str, base_dir: Path | None = None) -> HashConfig:
    fields: dict = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"expected key=value, got {raw!r}")
        key, value = key.strip(), value.strip()
        try:
            if key in ("L0", "m", "n", "tail_delta"):
                fields[key] = int(value)
            elif key == "iterations":
                fields[key] = tuple(int(v) for v in value.split(","))
            elif key == "tail_quantile":
                fields[key] = float(value)
            elif key == "tail_thresholds":
                fields[key] = tuple(None if v.strip() == "-" else float(v) for v in value.split(","))
            elif key == "group":
                fields[key] = value
            elif key == "pseudogroup_dir":
                path = Path(value)
                if not path.is_absolute() and base_dir is not None:
                    path = base_dir / path
                fields[key] = str(path)
            else:
                raise ConfigError(f"unknown config key {key!r}")
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad value for {key}: {value!r}") from None
    return HashConfig(**fields)


def load_config(path) -> HashConfig:
    path = Path(path)
    return parse_config(path.read_text(encoding="utf-8"), base_dir=path.parent)


def default_config() -> HashConfig:
    return load_config(DATA_DIR / "default.cfg")


# --- pipeline stages ----------------------------------------------------------------

@dataclass(eq=False)
class Preprocessor:
    """All O^m ordered products of a coarse pseudogroup."""

    source: Pseudogroup
    m: int
    quats: np.ndarray

    def word(self, j: int) -> BraidWord:
        idx = np.unravel_index(j, (self.source.order,) * self.m)
        return reduce(itertools.chain.from_iterable(self.source.words[int(i)].blocks for i in idx))


def build_preprocessor(p: Pseudogroup, m: int) -> Preprocessor:
    return Preprocessor(p, m, _product_quats(p.quats, m))


def _nearest(quats: np.ndarray, target: np.ndarray) -> tuple[int, float]:
    idx, _ = _kernels.nearest_many(quats, len(quats), target[None, :])
    j = int(idx[0])
    return j, float(qdistance(quats[j], target))


def _target_quat(target) -> np.ndarray:
    return np.array(target.quat if isinstance(target, Gate) else target, dtype=float)


def preprocess(target, p: Pseudogroup | Preprocessor, m: int | None = None) -> HashResult:
    pre = p if isinstance(p, Preprocessor) else build_preprocessor(p, m)
    t = _target_quat(target)
    j, err = _nearest(pre.quats, t)
    rec = StageRecord("pre", pre.source.L, err, pre.m * pre.source.L, False)
    return HashResult(pre.word(j), err, [rec], pre.quats[j].copy())


def iterate_once(current: HashResult, target, mesh: Mesh, stage: str = "iter",
                 tail_used: bool = False) -> HashResult:
    """Best T*s over mesh items s, T the current approximation."""
    t = _target_quat(target)
    residual = qmul(qconj(current.quat), t)
    j, _ = _nearest(mesh.quats, residual)
    quat = qmul(current.quat, mesh.quats[j])
    err = float(qdistance(quat, t))
    word = reduce(current.word.blocks + mesh.word(j).blocks) if j else current.word
    rec = StageRecord(stage, mesh.L, err, (mesh.n + 1) * mesh.L, tail_used)
    return HashResult(word, err, current.trace + [rec], quat)


class HashPipeline:
    """Loaded pseudogroups and meshes for one configuration."""

    def __init__(self, cfg: HashConfig):
        self.cfg = cfg
        self.group = build_group(cfg.group)
        self.preprocessor = build_preprocessor(self._load(cfg.L0), cfg.m)
        self.meshes = [build_mesh(self._load(L), cfg.n, self.group) for L in cfg.iterations]
        self._fallback: dict[int, Mesh] = {}

    def _load(self, L: int) -> Pseudogroup:
        path = self.cfg.directory() / f"{self.cfg.group}_L{L}.pg"
        if not path.exists():
            raise MissingPseudogroupError(f"no pseudogroup file {path}")
        return load_pseudogroup(path, self.group)

    def fallback_mesh(self, i: int) -> Mesh:
        if i not in self._fallback:
            L = self.cfg.iterations[i] - self.cfg.tail_delta
            self._fallback[i] = build_mesh(self._load(L), self.cfg.n, self.group)
        return self._fallback[i]

    def run(self, target, tail: bool = True) -> HashResult:
        t = _target_quat(target)
        res = preprocess(t, self.preprocessor)
        for i, mesh in enumerate(self.meshes):
            stage = f"iter{i + 1}"
            nxt = iterate_once(res, t, mesh, stage)
            threshold = self.cfg.threshold(i) if tail else None
            if threshold is not None and res.error > threshold:
                alt = iterate_once(res, t, self.fallback_mesh(i), stage, tail_used=True)
                if alt.error < nxt.error:
                    nxt = alt
            res = nxt
        g = target if isinstance(target, Gate) else Gate.from_quat(t)
        res.error = distance(evaluate(res.word), g)
        return res


@functools.lru_cache(maxsize=4)
def pipeline(cfg: HashConfig) -> HashPipeline:
    return HashPipeline(cfg)


def hash_target(target, cfg: HashConfig | None = None, tail: bool = True) -> HashResult:
    return pipeline(cfg if cfg is not None else default_config()).run(target, tail=tail)


def calibrate_tail(cfg: HashConfig, targets: Sequence) -> HashConfig:
    """Set each eligible iteration's threshold to the tail_quantile of its
    stage-input error over `targets`.

    Thresholds are fixed one iteration at a time, so each later quantile is
    measured with the earlier corrections already in place.
    """
    thresholds: list[float | None] = [None] * len(cfg.iterations)
    pipe = HashPipeline(cfg)
    for i in range(1, len(cfg.iterations)):
        pipe.cfg = dataclasses.replace(cfg, tail_thresholds=tuple(thresholds))
        inputs = [pipe.run(t).trace[i].error for t in targets]
        thresholds[i] = float(np.quantile(inputs, cfg.tail_quantile))
    return dataclasses.replace(cfg, tail_thresholds=tuple(thresholds))
