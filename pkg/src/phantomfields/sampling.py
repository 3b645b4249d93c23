"""Exact samplers for the field models and their oracle laws.

Models share one RNG contract: replication r of a run with master seed s
draws from the generator seeded by SeedSequence([s, r]), so serial and
parallel executions (and any chunking of the replication range) produce
bit-identical output.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.linalg.lapack import dpotrf
from scipy.special import log_ndtr, ndtr

from . import kernels
from .covariance import CharacteristicPolygon, SeparableCovariance

DEFAULT_CHUNK = 256


class FactorizationError(RuntimeError):
    """Toeplitz factorization failed; carries the axis and leading minor."""

    def __init__(self, axis: int, minor: int):
        self.axis = axis
        self.minor = minor
        super().__init__(
            f"axis {axis} Toeplitz matrix is not positive definite "
            f"(leading minor {minor})"
        )


def replication_rng(seed: int, rep: int) -> np.random.Generator:
    """Independent substream for replication ``rep`` of master ``seed``."""
    return np.random.default_rng(np.random.SeedSequence([seed, rep]))


@dataclass(frozen=True)
class FieldSample:
    dims: tuple[int, ...]
    values: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        if self.values.shape != tuple(self.dims):
            raise ValueError(f"values shape {self.values.shape} != dims {self.dims}")


def dump_csv(sample: FieldSample, path) -> None:
    """Row-major CSV dump with a header comment carrying dims and seed."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# dims={','.join(map(str, sample.dims))} seed={sample.seed}\n")
        flat = sample.values.reshape(sample.dims[0], -1)
        for row in flat:
            fh.write(",".join(repr(float(x)) for x in row) + "\n")


# ---------------------------------------------------------------------------
# innovation / marginal distributions
#
# Anything with the scipy frozen-distribution trio (cdf, ppf, rvs) works;
# TwoAtomInnovations implements the same surface for the enumeration oracle.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TwoAtomInnovations:
    """P(Z = lo) = p_lo, P(Z = hi) = 1 - p_lo, with lo < hi."""

    lo: float = 0.0
    hi: float = 1.0
    p_lo: float = 0.5

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError("need lo < hi")
        if not 0.0 < self.p_lo < 1.0:
            raise ValueError("need p_lo in (0, 1)")

    def cdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        return np.where(x < self.lo, 0.0, np.where(x < self.hi, self.p_lo, 1.0))

    def ppf(self, q):
        q = np.asarray(q, dtype=np.float64)
        return np.where(q <= self.p_lo, self.lo, self.hi)

    def rvs(self, size=None, random_state=None):
        rng = random_state if random_state is not None else np.random.default_rng()
        return np.where(rng.random(size) < self.p_lo, self.lo, self.hi)


# ---------------------------------------------------------------------------
# field models
# ---------------------------------------------------------------------------


class FieldModel:
    """Base: stationary model sampled on rectangles [1, n1] x ... x [1, nd]."""

    name = "field"

    def sample_values(self, dims, rng) -> np.ndarray:
        raise NotImplementedError

    def marginal_cdf(self, x):
        raise NotImplementedError

    def marginal_ppf(self, q):
        raise NotImplementedError

    # exact block-max law, if the model has one (else None)
    def exact_block_max_cdf(self, dims, x):
        return None

    def exact_block_level(self, dims, gamma: float):
        """Level v with P(M_dims <= v) = gamma, for models with exact laws."""
        return None

    def sample(self, dims, seed: int, rep: int = 0) -> FieldSample:
        values = self.sample_values(tuple(dims), replication_rng(seed, rep))
        return FieldSample(dims=tuple(dims), values=values, seed=seed)

    def _chunk_maxes(self, dims, seed, lo, hi) -> np.ndarray:
        out = np.empty(hi - lo)
        for r in range(lo, hi):
            out[r - lo] = self.sample_values(dims, replication_rng(seed, r)).max()
        return out

    def block_maxes(
        self, dims, reps: int, seed: int, workers: int = 1, chunk: int = DEFAULT_CHUNK
    ) -> np.ndarray:
        """reps independent draws of M_dims; identical for any worker count."""
        dims = tuple(dims)
        bounds = [(lo, min(lo + chunk, reps)) for lo in range(0, reps, chunk)]
        if workers <= 1 or len(bounds) == 1:
            parts = [self._chunk_maxes(dims, seed, lo, hi) for lo, hi in bounds]
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                parts = list(
                    pool.map(lambda b: self._chunk_maxes(dims, seed, b[0], b[1]), bounds)
                )
        return np.concatenate(parts) if parts else np.empty(0)


class IIDField(FieldModel):
    """Independent draws from ``marginal`` at every lattice site."""

    name = "iid"

    def __init__(self, marginal):
        self.marginal = marginal

    def sample_values(self, dims, rng):
        return np.asarray(self.marginal.rvs(size=dims, random_state=rng), dtype=np.float64)

    def marginal_cdf(self, x):
        return self.marginal.cdf(x)

    def marginal_ppf(self, q):
        return self.marginal.ppf(q)

    def exact_block_max_cdf(self, dims, x):
        n_star = int(np.prod(dims))
        return np.asarray(self.marginal.cdf(x), dtype=np.float64) ** n_star

    def exact_block_level(self, dims, gamma):
        n_star = int(np.prod(dims))
        return float(self.marginal.ppf(gamma ** (1.0 / n_star)))


class MovingMaxField(FieldModel):
    """X_k = max of i.i.d. innovations over the window anchored at k.

    The block maximum over [1, n] is the max of the innovations on the
    dilated rectangle of shape n + window - 1, so
    P(M_n <= x) = F(x)^prod(n_i + w_i - 1) exactly.
    """

    name = "moving_max"

    def __init__(self, window, innovations):
        self.window = tuple(int(w) for w in window)
        if any(w < 1 for w in self.window):
            raise ValueError("window must be >= 1 componentwise")
        self.innovations = innovations

    def dilated(self, dims) -> tuple[int, ...]:
        return tuple(n + w - 1 for n, w in zip(dims, self.window))

    def sample_values(self, dims, rng):
        z = np.asarray(
            self.innovations.rvs(size=self.dilated(dims), random_state=rng),
            dtype=np.float64,
        )
        return kernels.window_max(z, self.window)

    def marginal_cdf(self, x):
        w_star = int(np.prod(self.window))
        return np.asarray(self.innovations.cdf(x), dtype=np.float64) ** w_star

    def marginal_ppf(self, q):
        w_star = int(np.prod(self.window))
        return self.innovations.ppf(np.asarray(q, dtype=np.float64) ** (1.0 / w_star))

    def exact_block_max_cdf(self, dims, x):
        m = int(np.prod(self.dilated(dims)))
        return np.asarray(self.innovations.cdf(x), dtype=np.float64) ** m

    def exact_block_level(self, dims, gamma):
        m = int(np.prod(self.dilated(dims)))
        return float(self.innovations.ppf(gamma ** (1.0 / m)))


class _NormalMarginal:
    def cdf(self, x):
        return ndtr(x)

    def log_cdf(self, x):
        return log_ndtr(x)

    def ppf(self, q):
        from scipy.stats import norm

        return norm.ppf(q)

    def rvs(self, size=None, random_state=None):
        rng = random_state if random_state is not None else np.random.default_rng()
        return rng.standard_normal(size)


def toeplitz_cholesky(poly: CharacteristicPolygon, n: int, axis: int = 0) -> np.ndarray:
    """Lower Cholesky factor of T[a, b] = poly(a - b), cached per length."""
    cached = poly._chol_cache.get(n)
    if cached is not None:
        return cached
    c = np.asarray(poly(np.arange(n, dtype=np.float64)))
    idx = np.abs(np.subtract.outer(np.arange(n), np.arange(n)))
    T = c[idx]
    L, info = dpotrf(T, lower=1, clean=1, overwrite_a=1)
    if info != 0:
        raise FactorizationError(axis=axis, minor=int(info))
    poly._chol_cache[n] = L
    return L


class GaussianSeparableField(FieldModel):
    """Zero-mean unit-variance Gaussian field with separable covariance.

    A draw on a rectangle is an i.i.d. standard normal array pushed
    through the per-axis Toeplitz Cholesky factors (valid because the
    covariance is a tensor product of the axis sequences). Exact in law;
    factors are cached per (polygon, length).
    """

    name = "gaussian_separable"

    def __init__(self, cov: SeparableCovariance):
        self.cov = cov
        self.marginal = _NormalMarginal()

    def marginal_cdf(self, x):
        return ndtr(x)

    def marginal_ppf(self, q):
        return self.marginal.ppf(q)

    def factors(self, dims) -> list[np.ndarray]:
        if len(dims) != self.cov.d:
            raise ValueError(f"dims must have {self.cov.d} coordinates")
        return [
            toeplitz_cholesky(ax, n, axis=i)
            for i, (ax, n) in enumerate(zip(self.cov.axes, dims))
        ]

    @staticmethod
    def _transform(z, factors):
        # mode-i product with each axis factor in turn; z may carry a
        # leading batch axis
        x = z
        d = len(factors)
        off = x.ndim - d
        for i, L in enumerate(factors):
            x = np.moveaxis(x, off + i, -1)
            x = x @ L.T
            x = np.moveaxis(x, -1, off + i)
        return x

    def sample_values(self, dims, rng):
        factors = self.factors(dims)
        z = rng.standard_normal(dims)
        return self._transform(z, factors)

    def _chunk_maxes(self, dims, seed, lo, hi):
        factors = self.factors(dims)
        z = np.empty((hi - lo,) + tuple(dims))
        for r in range(lo, hi):
            z[r - lo] = replication_rng(seed, r).standard_normal(dims)
        x = self._transform(z, factors)
        return x.max(axis=tuple(range(1, x.ndim)))


def sample_gaussian_separable(c: SeparableCovariance, dims, seed: int) -> FieldSample:
    """One exact draw of the separable Gaussian field. Deterministic per seed."""
    return GaussianSeparableField(c).sample(dims, seed)


def sample_moving_max(window, innovations, dims, seed: int) -> FieldSample:
    return MovingMaxField(window, innovations).sample(dims, seed)


def sample_iid(marginal, dims, seed: int) -> FieldSample:
    return IIDField(marginal).sample(dims, seed)


# ---------------------------------------------------------------------------
# equicorrelated comparison array
# ---------------------------------------------------------------------------


def equicorrelated_maxes(N: int, rho: float, reps: int, seed: int) -> np.ndarray:
    """Draws of sqrt(1-rho) * max(eta_1..eta_N) + sqrt(rho) * zeta.

    All variates standard normal, the eta's independent of zeta; one
    value per replication substream.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if not 0.0 <= rho < 1.0:
        raise ValueError("rho must be in [0, 1)")
    out = np.empty(reps)
    for r in range(reps):
        rng = replication_rng(seed, r)
        m = rng.standard_normal(N).max()
        z = rng.standard_normal()
        out[r] = np.sqrt(1.0 - rho) * m + np.sqrt(rho) * z
    return out


def sample_equicorrelated_max(N: int, rho: float, seed: int) -> float:
    return float(equicorrelated_maxes(N, rho, 1, seed)[0])
