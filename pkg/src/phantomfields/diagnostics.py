"""Mixing functionals over block splits and the normal-comparison bound.

The 2-split functional measures how far a block-max probability is from
factorizing over the 2^d sub-blocks induced by a split p(1) + p(2) of the
rectangle; the k-split variant uses k parts and k^d sub-blocks. The true
functionals maximize over ALL admissible splits, which is infeasible in
general: MC mode maximizes over a configurable grid and every report
labels the value a lower bound. Exact mode (models with closed-form
block-max laws) can take the full finite split set.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import log_ndtr

from . import kernels
from .covariance import SeparableCovariance, delta_sup
from .lattice import MonotoneCurve
from .sampling import TwoAtomInnovations, replication_rng


@dataclass(frozen=True)
class BlockSplit:
    """k parts in N_0^d whose componentwise sum respects the constraint box."""

    parts: tuple[tuple[int, ...], ...]

    @property
    def k(self) -> int:
        return len(self.parts)

    @property
    def total(self) -> tuple[int, ...]:
        return tuple(int(s) for s in np.sum(self.parts, axis=0))

    def within(self, bound) -> bool:
        return all(t <= b for t, b in zip(self.total, bound))


def quarter_grid_splits(bound, k: int = 2) -> list[BlockSplit]:
    """Default MC split grid: part coordinates at the quarter points of the bound."""
    bound = tuple(int(b) for b in bound)
    marks = [sorted({0, b // 4, b // 2, (3 * b) // 4, b}) for b in bound]
    axis_vals = [list(itertools.product(*marks)) for _ in range(k)]
    out = []
    for combo in itertools.product(*axis_vals):
        s = BlockSplit(parts=tuple(combo))
        if s.within(bound):
            out.append(s)
    return out


def exhaustive_splits(bound, k: int = 2) -> list[BlockSplit]:
    """Every k-tuple of N_0^d parts with componentwise sum <= bound."""
    bound = tuple(int(b) for b in bound)
    d = len(bound)
    per_axis = []
    for b in bound:
        per_axis.append(
            [c for c in itertools.product(range(b + 1), repeat=k) if sum(c) <= b]
        )
    out = []
    for axis_choice in itertools.product(*per_axis):
        # axis_choice[j][i] = coordinate j of part i
        parts = tuple(tuple(axis_choice[j][i] for j in range(d)) for i in range(k))
        out.append(BlockSplit(parts=parts))
    return out


def _split_blocks(split: BlockSplit, d: int):
    """Sub-block dims (p_1(i_1), ..., p_d(i_d)) over the k^d multi-indices."""
    k = split.k
    for idx in itertools.product(range(k), repeat=d):
        yield tuple(split.parts[idx[j]][j] for j in range(d))


class _BlockProbabilities:
    """P(M_dims <= level) for every needed sub-block, exact or MC.

    MC mode samples the full constraint rectangle once per replication
    and reads every anchored sub-block probability off the running
    (cumulative) maximum, so all estimates come from the same seeded
    replications and empty blocks contribute probability 1.
    """

    def __init__(self, model, bound, level, mode, reps=0, seed=0):
        self.level = float(level)
        self.mode = mode
        self.reps = reps
        if mode == "exact":
            self._table = None
            self._model = model
            self._bound = tuple(bound)
            self._cache: dict = {}
        else:
            bound = tuple(int(b) for b in bound)
            counts = np.zeros(bound, dtype=np.int64)
            for r in range(reps):
                x = model.sample_values(bound, replication_rng(seed, r))
                m = x
                for ax in range(len(bound)):
                    m = np.maximum.accumulate(m, axis=ax)
                counts += m <= level
            self._table = counts / reps

    def get(self, dims) -> float:
        if any(n == 0 for n in dims):
            return 1.0  # max over an empty rectangle is -inf
        if self._table is not None:
            return float(self._table[tuple(n - 1 for n in dims)])
        p = self._cache.get(dims)
        if p is None:
            p = float(self._model.exact_block_max_cdf(dims, self.level))
            self._cache[dims] = p
        return p


@dataclass(frozen=True)
class BetaReport:
    value: float
    argmax: BlockSplit | None
    k: int
    mode: str
    n: int
    T: float
    bound: tuple[int, ...]
    level: float
    grid_size: int
    se: float | None
    lower_bound_only: bool = True

    def to_json(self) -> dict:
        return {
            "functional": f"beta_k{self.k}",
            "grid": self.grid_size,
            "value": self.value,
            "mode": self.mode,
            "se": self.se,
            "n": self.n,
            "T": self.T,
            "bound": list(self.bound),
            "level": self.level,
            "argmax": list(self.argmax.parts) if self.argmax else None,
            "lower_bound_only": self.lower_bound_only,
        }


def beta_k_estimate(
    model,
    psi: MonotoneCurve,
    levels,
    T: float,
    n: int,
    k: int = 2,
    splits: list[BlockSplit] | None = None,
    reps: int = 2000,
    seed: int = 0,
    mode: str = "auto",
) -> BetaReport:
    """Max over splits of |P(M_total <= v) - prod over k^d sub-blocks|.

    ``levels`` is a LevelSequence (the level at n is used) or a float.
    The constraint box is floor(T * psi(n)). mode "exact" requires a
    model with a closed-form block-max law; "auto" picks exact when
    available. The reported value is a lower bound for the true sup
    unless the splits cover the full admissible set.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    level = levels if isinstance(levels, (int, float)) else _level_at(levels, n)
    point = psi(n)
    bound = tuple(int(math.floor(T * c)) for c in point)
    if any(b < 0 for b in bound):
        raise ValueError("constraint box must be nonnegative")
    if mode == "auto":
        mode = "exact" if model.exact_block_max_cdf(bound, level) is not None else "mc"
    if splits is None:
        splits = quarter_grid_splits(bound, k)
    for s in splits:
        if s.k != k:
            raise ValueError(f"split {s} has {s.k} parts, expected {k}")
        if not s.within(bound):
            raise ValueError(f"split {s.parts} exceeds the constraint box {bound}")
    probs = _BlockProbabilities(model, bound, level, mode, reps=reps, seed=seed)
    d = len(bound)
    best, arg = -1.0, None
    for s in splits:
        total = probs.get(s.total)
        prod = 1.0
        for dims in _split_blocks(s, d):
            prod *= probs.get(dims)
        val = abs(total - prod)
        if val > best:
            best, arg = val, s
    # worst-case standard error of a single estimated probability
    se = None if mode == "exact" else math.sqrt(0.25 / reps)
    return BetaReport(
        value=best,
        argmax=arg,
        k=k,
        mode=mode,
        n=n,
        T=T,
        bound=bound,
        level=level,
        grid_size=len(splits),
        se=se,
        lower_bound_only=True,
    )


def beta_estimate(model, psi, levels, T, n, splits=None, reps=2000, seed=0, mode="auto") -> BetaReport:
    """The 2-split functional (the k = 2 case of beta_k_estimate)."""
    return beta_k_estimate(model, psi, levels, T, n, k=2, splits=splits, reps=reps, seed=seed, mode=mode)


def _level_at(levels, n: int) -> float:
    i = int(np.searchsorted(levels.n_values, n))
    if i >= len(levels.n_values) or levels.n_values[i] != n:
        raise ValueError(f"level sequence has no entry at n={n}")
    return float(levels.levels[i])


def enumeration_block_cdf(model, dims, level: float) -> float:
    """P(M_dims <= level) by exhaustive enumeration of innovation configs.

    Only for 2-d moving-max models with two-atom innovations and at most
    25 innovation sites; independent of the dilation-counting closed form.
    """
    innov = getattr(model, "innovations", None)
    if not isinstance(innov, TwoAtomInnovations):
        raise ValueError("enumeration oracle needs a moving-max model with two-atom innovations")
    if len(dims) != 2:
        raise ValueError("enumeration oracle is 2-d only")
    table = kernels.enum_block_cdf_table(
        tuple(int(x) for x in dims), model.window, innov.lo, innov.hi, innov.p_lo, level
    )
    return float(table[dims[0] - 1, dims[1] - 1])


def enumeration_beta(model, bound, level: float, k: int = 2) -> float:
    """beta over the FULL admissible split set with enumerated probabilities."""
    innov = model.innovations
    table = kernels.enum_block_cdf_table(
        tuple(int(b) for b in bound), model.window, innov.lo, innov.hi, innov.p_lo, level
    )

    def prob(dims):
        if any(x == 0 for x in dims):
            return 1.0
        return float(table[dims[0] - 1, dims[1] - 1])

    best = 0.0
    for s in exhaustive_splits(bound, k):
        val = abs(prob(s.total) - math.prod(prob(dims) for dims in _split_blocks(s, 2)))
        if val > best:
            best = val
    return best


# ---------------------------------------------------------------------------
# Berman comparison bound
# ---------------------------------------------------------------------------


def default_L_rule(delta: float) -> float:
    """Standard normal-comparison constant (1/2pi) / sqrt(1 - delta^2)."""
    return (1.0 / (2.0 * math.pi)) / math.sqrt(1.0 - delta * delta)


@dataclass(frozen=True)
class BermanReport:
    total: float
    sigma1: float
    sigma2: float
    delta: float
    L: float
    alpha: float
    a_lo: int
    n: int
    u: float

    def to_json(self) -> dict:
        return {
            "bound": self.total,
            "sigma1": self.sigma1,
            "sigma2": self.sigma2,
            "delta": self.delta,
            "L": self.L,
            "alpha": self.alpha,
            "a_lo": self.a_lo,
            "n": self.n,
            "u": self.u,
        }


def berman_bound(
    c: SeparableCovariance,
    n: int,
    u: float,
    L_rule=None,
    alpha: float | None = None,
    method: str = "direct",
) -> BermanReport:
    """4 L(delta) n^2 sum over the punctured box [0, n]^2 of r * exp(-u^2/(1+r)).

    Also reports the split of the sum into Sigma1 (indices in
    [ceil(n^alpha), n]^2) and Sigma2 (the rest), with alpha defaulting to
    the midpoint of (0, (1 - 3 delta)/(1 + delta)). The two summation
    methods ("direct" 2-d reduction vs "factored" row partial sums) are
    algebraically identical and serve as a cross-check pair.
    """
    if u <= 0:
        raise ValueError("u must be positive")
    if n < 1:
        raise ValueError("n must be >= 1")
    if c.d != 2:
        raise ValueError("the comparison bound is implemented for d = 2")
    delta = delta_sup(c, max(n, 1)).value
    L = (L_rule or default_L_rule)(delta)
    if alpha is None:
        hi = (1.0 - 3.0 * delta) / (1.0 + delta)
        if hi <= 0:
            raise ValueError(f"delta = {delta:.4f} leaves no admissible alpha")
        alpha = 0.5 * hi
    idx = np.arange(0, n + 1, dtype=np.float64)
    ax1 = np.asarray(c.axes[0](idx))
    ax2 = np.asarray(c.axes[1](idx))
    a_lo = int(math.ceil(n**alpha))
    scale = 4.0 * L * n * n
    if method == "direct":
        r = np.outer(ax1, ax2)
        terms = r * np.exp(-u * u / (1.0 + r))
        terms[0, 0] = 0.0
        in_a = np.zeros_like(terms, dtype=bool)
        if a_lo <= n:
            in_a[a_lo:, a_lo:] = True
        s1 = float(terms[in_a].sum())
        s2 = float(terms[~in_a].sum())
    elif method == "factored":
        # row-by-row from the axis factorization r_ij = ax1(i) * ax2(j)
        s1 = s2 = 0.0
        for i in range(n + 1):
            row = ax1[i] * ax2
            row = row * np.exp(-u * u / (1.0 + row))
            if i == 0:
                row = row.copy()
                row[0] = 0.0
            if a_lo <= n and i >= a_lo:
                s1 += float(row[a_lo:].sum())
                s2 += float(row[:a_lo].sum())
            else:
                s2 += float(row.sum())
    else:
        raise ValueError(f"unknown method {method!r}")
    return BermanReport(
        total=scale * (s1 + s2),
        sigma1=scale * s1,
        sigma2=scale * s2,
        delta=delta,
        L=L,
        alpha=float(alpha),
        a_lo=a_lo,
        n=n,
        u=float(u),
    )


@dataclass(frozen=True)
class GapReport:
    gap: float
    bound: float
    se: float
    verdict: bool
    p_hat: float
    target: float
    n: int
    u: float

    def to_json(self) -> dict:
        return {
            "gap": self.gap,
            "bound": self.bound,
            "se": self.se,
            "verdict": self.verdict,
            "p_hat": self.p_hat,
            "target": self.target,
            "n": self.n,
            "u": self.u,
        }


def bound_vs_empirical(model, n: int, u: float, reps: int, seed: int, workers: int = 1) -> GapReport:
    """Check that the comparison bound dominates |P_hat(M <= u) - Phi(u)^{n^2}|."""
    maxes = model.block_maxes((n, n), reps, seed, workers=workers)
    p_hat = float(np.mean(maxes <= u))
    target = float(np.exp(n * n * log_ndtr(u)))
    gap = abs(p_hat - target)
    se = math.sqrt(max(p_hat * (1.0 - p_hat), 1.0 / reps) / reps)
    b = berman_bound(model.cov, n, u).total
    return GapReport(
        gap=gap, bound=b, se=se, verdict=gap <= b + 3.0 * se, p_hat=p_hat, target=target, n=n, u=float(u)
    )
