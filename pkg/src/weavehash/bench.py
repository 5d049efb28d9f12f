"""Trial campaigns, random-matrix statistics and analytic baselines.

Random targets are Haar-distributed: a normalized Gaussian 4-vector is a
uniform unit quaternion. Trial ``i`` of a run with seed ``s`` draws from its
own stream ``SeedSequence(s, spawn_key=(i,))``, so results do not depend on
how trials are scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import integrate, special, stats

from .approx import predicted_mean_error
from .hashing import HashConfig, HashPipeline, pipeline
from .su2 import Gate, qdistance
from .weave import count_weaves_upto

HIST_BINS = 60
SQRT2 = math.sqrt(2.0)


class InsufficientDataError(ValueError):
    pass


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


# --- random targets -----------------------------------------------------------------

def trial_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def haar_random_quats(rng: np.random.Generator, size: int) -> np.ndarray:
    q = rng.standard_normal((size, 4))
    return q / np.linalg.norm(q, axis=1)[:, None]


def haar_random_gate(rng: np.random.Generator) -> Gate:
    return Gate.from_quat(haar_random_quats(rng, 1)[0])


# --- trials ---------------------------------------------------------------------------

@dataclass(eq=False)
class TrialReport:
    config: HashConfig
    seed: int
    tail: bool
    stages: list[str]
    errors: np.ndarray  # (trials, stages), per-stage errors
    tail_used: np.ndarray  # (trials, stages) bool
    final_errors: np.ndarray  # recomputed from the final words
    word_lengths: np.ndarray
    stage_lengths: list[int]  # nominal cumulative length after each stage
    means: np.ndarray = field(init=False)
    stds: np.ndarray = field(init=False)

    def __post_init__(self):
        self.means = self.errors.mean(axis=0)
        self.stds = self.errors.std(axis=0, ddof=1) if len(self.errors) > 1 else np.zeros(len(self.stages))

    @property
    def trials(self) -> int:
        return len(self.errors)

    def stage_index(self, stage: str) -> int:
        try:
            return self.stages.index(stage)
        except ValueError:
            raise KeyError(f"unknown stage {stage!r}; have {self.stages}") from None

    def stage_errors(self, stage: str) -> np.ndarray:
        return self.errors[:, self.stage_index(stage)]

    def histogram(self, stage: str) -> tuple[np.ndarray, np.ndarray]:
        return log_histogram(self.stage_errors(stage))

    def summary_text(self) -> str:
        lines = [f"trials={self.trials}", f"seed={self.seed}", f"tail={int(self.tail)}"]
        lines += ["config." + ln for ln in self.config.to_text().splitlines()]
        for k, s in enumerate(self.stages):
            lines.append(f"{s}.L_cumulative={self.stage_lengths[k]}")
            lines.append(f"{s}.mean={_fmt(self.means[k])}")
            lines.append(f"{s}.std={_fmt(self.stds[k])}")
            lines.append(f"{s}.tail_count={int(self.tail_used[:, k].sum())}")
        lines.append(f"final.mean={_fmt(self.final_errors.mean())}")
        lines.append(f"word_length.mean={_fmt(self.word_lengths.mean())}")
        return "\n".join(lines) + "\n"

    def errors_csv(self) -> str:
        head = ["trial"] + [f"{s}_error" for s in self.stages] + [f"{s}_tail" for s in self.stages]
        head += ["final_error", "word_length"]
        rows = [",".join(head)]
        for i in range(self.trials):
            vals = [str(i)] + [_fmt(e) for e in self.errors[i]]
            vals += [str(int(f)) for f in self.tail_used[i]]
            vals += [_fmt(self.final_errors[i]), str(int(self.word_lengths[i]))]
            rows.append(",".join(vals))
        return "\n".join(rows) + "\n"

    def write(self, out_dir) -> list[Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = [out / "summary.txt", out / "errors.csv"]
        paths[0].write_text(self.summary_text(), encoding="utf-8", newline="\n")
        paths[1].write_text(self.errors_csv(), encoding="utf-8", newline="\n")
        for s in self.stages:
            p = out / f"hist_{s}.csv"
            emit_histogram(self, s, p)
            paths.append(p)
        return paths


def run_trials(cfg: HashConfig, count: int, seed: int, tail: bool = True,
               pipe: HashPipeline | None = None) -> TrialReport:
    if count < 1:
        raise ValueError("count must be positive")
    pipe = pipe if pipe is not None else pipeline(cfg)
    results = [pipe.run(haar_random_gate(trial_rng(seed, i)), tail=tail) for i in range(count)]
    stages = [r.stage for r in results[0].trace]
    cumulative = np.cumsum([r.appended_length for r in results[0].trace]).tolist()
    return TrialReport(
        config=cfg,
        seed=seed,
        tail=tail,
        stages=stages,
        errors=np.array([r.stage_errors for r in results]),
        tail_used=np.array([[s.tail_used for s in r.trace] for r in results], dtype=bool),
        final_errors=np.array([r.error for r in results]),
        word_lengths=np.array([r.word.length for r in results]),
        stage_lengths=[int(c) for c in cumulative],
    )


# --- histograms -------------------------------------------------------------------------

def log_histogram(values: np.ndarray, bins: int = HIST_BINS) -> tuple[np.ndarray, np.ndarray]:
    """Counts over log-spaced bins spanning [min/2, 2*max] of the positive values."""
    v = np.asarray(values, dtype=float)
    pos = v[v > 0]
    if len(pos) == 0:
        raise InsufficientDataError("no positive values to bin")
    edges = np.geomspace(pos.min() / 2, pos.max() * 2, bins + 1)
    counts, _ = np.histogram(pos, bins=edges)
    return edges, counts


def emit_histogram(report: TrialReport, stage: str, path) -> None:
    edges, counts = report.histogram(stage)
    widths = np.diff(edges)
    centers = np.sqrt(edges[:-1] * edges[1:])
    density = counts / (counts.sum() * widths)
    lines = ["bin_center,count,density"]
    lines += [f"{_fmt(c)},{int(k)},{_fmt(d)}" for c, k, d in zip(centers, counts, density)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


# --- Wigner-Dyson ---------------------------------------------------------------------

def wigner_dyson_pdf(s, s0: float):
    x = np.asarray(s, dtype=float) / s0
    return 32 / (math.pi**2 * s0) * x**2 * np.exp(-4 / math.pi * x**2)


def wigner_dyson_cdf(s, s0: float):
    x = np.asarray(s, dtype=float) / s0
    return special.erf(2 * x / math.sqrt(math.pi)) - 4 * x / math.pi * np.exp(-4 / math.pi * x**2)


@dataclass(frozen=True)
class WignerDysonFit:
    s0: float
    ks_statistic: float
    p_value: float
    passed: bool


def wigner_dyson_test(samples: Sequence[float], alpha: float = 0.01) -> WignerDysonFit:
    s = np.asarray(samples, dtype=float)
    if len(s) < 100:
        raise InsufficientDataError(f"need at least 100 samples, got {len(s)}")
    s0 = float(s.mean())
    res = stats.kstest(s, lambda x: wigner_dyson_cdf(x, s0))
    return WignerDysonFit(s0, float(res.statistic), float(res.pvalue), bool(res.pvalue >= alpha))


# --- brute-force baseline ----------------------------------------------------------------

def haar_distance_pdf(d):
    """Density of the distance between a Haar gate and a fixed gate."""
    d = np.asarray(d, dtype=float)
    inside = (d >= 0) & (d <= SQRT2)
    val = 4 / math.pi * d**2 * np.sqrt(np.clip(1 - (d / 2) ** 2, 0, None))
    return np.where(inside, val, 0.0)


def haar_distance_cdf(x):
    x = np.clip(np.asarray(x, dtype=float), 0.0, SQRT2)
    theta = np.arcsin(x / 2)
    return 4 / math.pi * (theta - np.sin(4 * theta) / 4)


def nearest_mean_closed_form(N: float) -> float:
    """Mean nearest distance among N random gates, small-distance form of the
    cumulative distribution, as a lower incomplete gamma function."""
    x = 8 * SQRT2 * N / (3 * math.pi)
    lower_gamma = special.gammainc(1 / 3, x) * special.gamma(1 / 3)
    return math.pi ** (1 / 3) * lower_gamma / (6 ** (2 / 3) * N ** (1 / 3))


@dataclass(frozen=True)
class BaselineModel:
    L: int
    N: int

    def p(self, d):
        return haar_distance_pdf(d)

    def P(self, x):
        return haar_distance_cdf(x)

    def Q(self, t):
        """Probability that none of the N weaves lies within distance t."""
        return np.exp(-self.N * self.P(t))

    def q(self, t):
        return self.N * self.p(t) * self.Q(t)

    def mean(self) -> float:
        return nearest_mean_closed_form(self.N)

    def _integrate(self, f) -> float:
        # q is sharply peaked near the mean for large N: split the range there
        m = self.mean()
        cuts = sorted({0.0, *(min(k * m, SQRT2) for k in (0.5, 1.0, 2.0, 4.0)), SQRT2})
        total = 0.0
        for a, b in zip(cuts, cuts[1:]):
            if b > a:
                total += integrate.quad(lambda t: float(f(t)), a, b, limit=200)[0]
        return total

    def mean_quadrature(self) -> float:
        """Mean nearest distance from the exact distribution (no small-t expansion)."""
        return self._integrate(lambda t: t * self.q(t))

    def normalization(self) -> float:
        return self._integrate(self.q)

    def asymptotic_mean(self) -> float:
        return predicted_mean_error(self.L)


def bf_baseline(L: int) -> BaselineModel:
    if L < 2 or L % 2:
        raise ValueError("L must be an even integer >= 2")
    return BaselineModel(L, count_weaves_upto(L))


def nearest_identity_monte_carlo(N: int, repetitions: int, seed: int) -> np.ndarray:
    """Distance from the identity to the nearest of N Haar gates, per repetition."""
    out = np.empty(repetitions)
    ident = np.array([1.0, 0.0, 0.0, 0.0])
    for r in range(repetitions):
        q = haar_random_quats(trial_rng(seed, r), N)
        out[r] = qdistance(q, ident[None, :]).min()
    return out


def baseline_csv(L: int, points: int = 400) -> str:
    m = bf_baseline(L)
    lines = [f"# L={L} N={m.N} mean={_fmt(m.mean())} mean_quadrature={_fmt(m.mean_quadrature())} "
             f"asymptotic={_fmt(m.asymptotic_mean())}",
             "t,p,P,Q,q"]
    for t in np.linspace(0.0, SQRT2, points):
        lines.append(",".join(_fmt(v) for v in (t, m.p(t), m.P(t), m.Q(t), m.q(t))))
    return "\n".join(lines) + "\n"


# --- scaling ---------------------------------------------------------------------------------

SK_FOOTER = (
    "# Solovay-Kitaev reference scalings (not executed):\n"
    "#   length   ~ ln(1/eps)^c, c = ln5/ln(3/2) ~ 3.97\n"
    "#   time     ~ ln(1/eps)^d, d = ln3/ln(3/2) ~ 2.71\n"
    "#   improved ~ ln(1/eps)^2 ln(ln(1/eps)) for both\n"
    "# hashing: length ~ ln(1/eps)^2, time ~ ln(1/eps)\n"
)


@dataclass(frozen=True)
class ScalingRow:
    stage: str
    length: int
    mean_error: float
    sqrt_length: float
    log_inverse_error: float


@dataclass(frozen=True)
class ScalingReport:
    rows: list[ScalingRow]
    slope: float
    intercept: float
    r_squared: float
    stage_ratios: list[float]

    def to_csv(self) -> str:
        lines = ["stage,length,mean_error,sqrt_length,ln_inverse_error"]
        for r in self.rows:
            lines.append(f"{r.stage},{r.length},{_fmt(r.mean_error)},{_fmt(r.sqrt_length)},"
                         f"{_fmt(r.log_inverse_error)}")
        lines.append(f"# fit sqrt_length = {_fmt(self.slope)} * ln_inverse_error + {_fmt(self.intercept)}, "
                     f"R2 = {_fmt(self.r_squared)}")
        return "\n".join(lines) + "\n" + SK_FOOTER


def stage_ratios(report: TrialReport) -> list[float]:
    """Ratios of consecutive stage means, mean(eps_{i-1}) / mean(eps_i)."""
    m = report.means
    return [float(m[k - 1] / m[k]) for k in range(1, len(m))]


def scaling_report(reports: TrialReport | Sequence[TrialReport]) -> ScalingReport:
    if isinstance(reports, TrialReport):
        reports = [reports]
    rows = []
    ratios: list[float] = []
    for rep in reports:
        for k, s in enumerate(rep.stages):
            L = rep.stage_lengths[k]
            e = float(rep.means[k])
            rows.append(ScalingRow(s, L, e, math.sqrt(L), math.log(1 / e)))
        ratios += stage_ratios(rep)
    if len(rows) < 3:
        raise InsufficientDataError(f"scaling fit needs at least 3 stages, got {len(rows)}")
    fit = stats.linregress([r.log_inverse_error for r in rows], [r.sqrt_length for r in rows])
    return ScalingReport(rows, float(fit.slope), float(fit.intercept), float(fit.rvalue**2), ratios)
