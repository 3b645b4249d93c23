"""Polya-type characteristic polygons and separable lattice covariances.

A characteristic polygon is an even, convex, nonincreasing, strictly
positive piecewise-linear function on R with value 1 at 0; by Polya's
criterion any such function is a valid characteristic function, so its
restriction to the integers is a positive-definite sequence. Products of
such per-axis sequences give separable covariances on Z^d.

Two concrete families are provided; both are polygons through

    eta1:  (0,1), (1, g1*(27 L(27) - 26 L(28))), (28, g1*L(28)), (29, g1*L(29)), ...
    eta2:  (0,1), (1, g2*(2/ln 2 - 1/ln 3)),     (3, g2/ln 3),   (4, g2/ln 4), ...

with L(k) = ln(ln k)/ln k. The knot-1 values sit on the extension of the
first tail segment, which is what makes the whole polygon convex.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

DEFAULT_HORIZON = 1_000_000


class InfeasibleParameterError(ValueError):
    """Raised when a parameter produces a polygon violating Polya's criterion."""


def _loglog_ratio(k):
    k = np.asarray(k, dtype=np.float64)
    return np.log(np.log(k)) / np.log(k)


@dataclass(frozen=True, eq=False)
class CharacteristicPolygon:
    """Piecewise-linear convex decreasing function on R+, reflected to R.

    ``knots_t``/``knots_v`` hold the explicit knots up to the horizon;
    ``tail`` (if set) gives exact values at integer abscissae beyond the
    last stored knot, with linear interpolation in between. Without a
    tail rule the last knot value is held constant (still convex,
    nonincreasing and positive).
    """

    knots_t: np.ndarray
    knots_v: np.ndarray
    tail: Callable[[np.ndarray], np.ndarray] | None = None
    name: str = "polygon"

    # per-length Cholesky factors of the Toeplitz matrix, filled lazily
    _chol_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __call__(self, t) -> np.ndarray | float:
        t = np.abs(np.asarray(t, dtype=np.float64))
        scalar = t.ndim == 0
        t = np.atleast_1d(t)
        last = self.knots_t[-1]
        out = np.interp(np.minimum(t, last), self.knots_t, self.knots_v)
        beyond = t > last
        if np.any(beyond):
            if self.tail is None:
                out[beyond] = self.knots_v[-1]
            else:
                tb = t[beyond]
                k = np.floor(tb)
                frac = tb - k
                out[beyond] = self.tail(k) * (1.0 - frac) + self.tail(k + 1.0) * frac
        return float(out[0]) if scalar else out

    @property
    def knots(self) -> np.ndarray:
        return np.column_stack([self.knots_t, self.knots_v])


def validate_polya(p: CharacteristicPolygon) -> tuple[bool, list[str]]:
    """Check the defining conditions on the stored knots.

    Returns (ok, diagnostics); diagnostics name every violated condition
    in check order (origin knot, positivity, nonincreasing, convexity).
    Slope comparisons are done by cross multiplication with zero
    tolerance, which is exact for the stored float data.
    """
    t, v = p.knots_t, p.knots_v
    diags: list[str] = []
    if len(t) < 2:
        return False, ["fewer than two knots"]
    if not (t[0] == 0.0 and v[0] == 1.0):
        diags.append(f"first knot must be (0, 1), got ({t[0]}, {v[0]})")
    if np.any(np.diff(t) <= 0):
        i = int(np.argmax(np.diff(t) <= 0))
        diags.append(f"knot abscissae not strictly increasing at index {i}")
        return False, diags
    if np.any(v <= 0.0):
        i = int(np.argmax(v <= 0.0))
        diags.append(f"positivity violated at knot {i} (t={t[i]})")
    dv = np.diff(v)
    dt = np.diff(t)
    if np.any(dv > 0.0):
        i = int(np.argmax(dv > 0.0))
        diags.append(f"nonincreasing violated on segment {i} (t={t[i]}..{t[i + 1]})")
    # slopes nondecreasing: dv[i]/dt[i] <= dv[i+1]/dt[i+1]
    lhs = dv[:-1] * dt[1:]
    rhs = dv[1:] * dt[:-1]
    if np.any(lhs > rhs):
        i = int(np.argmax(lhs > rhs))
        diags.append(f"convexity violated at knot {i + 1} (t={t[i + 1]})")
    return len(diags) == 0, diags


def _build_polygon(gamma, knot1_value, tail_start, tail_fn, horizon, name):
    if not 0.0 < gamma < 1.0:
        raise InfeasibleParameterError(f"{name}: gamma must be in (0, 1), got {gamma}")
    ks = np.arange(tail_start, horizon + 1, dtype=np.float64)
    knots_t = np.concatenate(([0.0, 1.0], ks))
    knots_v = np.concatenate(([1.0, knot1_value], tail_fn(ks)))
    poly = CharacteristicPolygon(knots_t=knots_t, knots_v=knots_v, tail=tail_fn, name=name)
    ok, diags = validate_polya(poly)
    if not ok:
        raise InfeasibleParameterError(f"{name}(gamma={gamma}) infeasible: {diags[0]}")
    return poly


def build_eta1(gamma1: float, horizon: int = DEFAULT_HORIZON) -> CharacteristicPolygon:
    """First axis polygon: value gamma1*ln(ln k)/ln k at every integer k >= 28."""
    knot1 = gamma1 * (27.0 * _loglog_ratio(27.0) - 26.0 * _loglog_ratio(28.0))
    tail = lambda k: gamma1 * _loglog_ratio(k)
    return _build_polygon(gamma1, knot1, 28, tail, horizon, "eta1")


def build_eta2(gamma2: float, horizon: int = DEFAULT_HORIZON) -> CharacteristicPolygon:
    """Second axis polygon: value gamma2/ln k at every integer k >= 3."""
    knot1 = gamma2 * (2.0 / np.log(2.0) - 1.0 / np.log(3.0))
    tail = lambda k: gamma2 / np.log(np.asarray(k, dtype=np.float64))
    return _build_polygon(gamma2, knot1, 3, tail, horizon, "eta2")


@dataclass(frozen=True)
class GammaPair:
    gamma1: float
    gamma2: float


def validate_gammas(g: GammaPair) -> bool:
    """Feasibility chain: gamma1 > 1/4 and eta1(1) < eta2(1) < (1-2g1)/(1+2g1)."""
    if not (0.0 < g.gamma1 < 1.0 and 0.0 < g.gamma2 < 1.0):
        return False
    if not g.gamma1 > 0.25:
        return False
    a = g.gamma1 * (27.0 * _loglog_ratio(27.0) - 26.0 * _loglog_ratio(28.0))
    b = g.gamma2 * (2.0 / np.log(2.0) - 1.0 / np.log(3.0))
    c = (1.0 - 2.0 * g.gamma1) / (1.0 + 2.0 * g.gamma1)
    return a < b < c


DEFAULT_GAMMAS = GammaPair(0.26, 0.10)


@dataclass(frozen=True, eq=False)
class SeparableCovariance:
    """Covariance r(k) = prod_i axes[i](k_i) on Z^d."""

    axes: tuple[CharacteristicPolygon, ...]
    gammas: GammaPair | None = None

    @property
    def d(self) -> int:
        return len(self.axes)

    def at(self, k) -> float:
        k = np.atleast_1d(np.asarray(k, dtype=np.float64))
        if k.shape[-1] != self.d:
            raise ValueError(f"lattice point must have {self.d} coordinates")
        out = 1.0
        for i, ax in enumerate(self.axes):
            out = out * ax(np.abs(k[..., i]))
        return out


def covariance_at(c: SeparableCovariance, k) -> float:
    """Evaluate r at a single lattice point (symmetric in k -> -k)."""
    return float(c.at(k))


@dataclass(frozen=True)
class DeltaReport:
    value: float
    argmax: tuple[int, ...]
    bound: float | None
    below_bound: bool | None


def delta_sup(c: SeparableCovariance, search_radius: int = 5) -> DeltaReport:
    """Max of r over the punctured box [-R, R]^d.

    Each axis polygon is nonincreasing in |t|, so this equals the true
    supremum over all of Z^d \\ {0} for any R >= 1 (the max sits at a
    point with a single coordinate equal to +-1). When the covariance
    carries its gamma pair the report also states whether
    delta < (1 - 2*gamma1)/(1 + 2*gamma1).
    """
    if search_radius < 1:
        raise ValueError("search_radius must be >= 1")
    axis_vals = [ax(np.arange(search_radius + 1, dtype=np.float64)) for ax in c.axes]
    grid = axis_vals[0]
    for vals in axis_vals[1:]:
        grid = np.multiply.outer(grid, vals)
    flat = grid.ravel().copy()
    flat[0] = -np.inf  # puncture the origin
    j = int(np.argmax(flat))
    argmax = np.unravel_index(j, grid.shape)
    value = float(grid[argmax])
    bound = below = None
    if c.gammas is not None:
        bound = (1.0 - 2.0 * c.gammas.gamma1) / (1.0 + 2.0 * c.gammas.gamma1)
        below = value < bound
    return DeltaReport(value=value, argmax=tuple(int(a) for a in argmax), bound=bound, below_bound=below)


def example_covariance(
    gammas: GammaPair = DEFAULT_GAMMAS, horizon: int = DEFAULT_HORIZON
) -> SeparableCovariance:
    """The built-in 2-d model r_ij = eta1(i) * eta2(j).

    This is the library's canonical separable Gaussian model: it admits
    a sectorial phantom distribution function but no global one. The
    gamma pair is validated before construction.
    """
    if not validate_gammas(gammas):
        raise InfeasibleParameterError(f"gamma pair {gammas} fails the feasibility chain")
    return SeparableCovariance(
        axes=(build_eta1(gammas.gamma1, horizon), build_eta2(gammas.gamma2, horizon)),
        gammas=gammas,
    )


def to_config(c: SeparableCovariance) -> dict:
    cfg = {"d": c.d}
    if c.gammas is not None:
        cfg["gamma1"] = c.gammas.gamma1
        cfg["gamma2"] = c.gammas.gamma2
    else:
        cfg["axes"] = [{"knots": ax.knots.tolist()} for ax in c.axes]
    return cfg


def from_config(cfg: dict | str, horizon: int = DEFAULT_HORIZON) -> SeparableCovariance:
    """Build a covariance from a JSON document / dict.

    Schema: {"gamma1": number, "gamma2": number, "d": integer} with
    optional "axes": [{"knots": [[t, v], ...]}, ...] overriding the knot
    lists explicitly. With the gamma form, axes alternate eta1/eta2
    (d = 1 uses eta1 only; the canonical model is d = 2).
    """
    if isinstance(cfg, str):
        cfg = json.loads(cfg)
    d = int(cfg.get("d", 2))
    if "axes" in cfg:
        axes = []
        for axis_cfg in cfg["axes"]:
            knots = np.asarray(axis_cfg["knots"], dtype=np.float64)
            poly = CharacteristicPolygon(knots_t=knots[:, 0].copy(), knots_v=knots[:, 1].copy())
            ok, diags = validate_polya(poly)
            if not ok:
                raise InfeasibleParameterError(f"knot override invalid: {diags[0]}")
            axes.append(poly)
        if len(axes) != d:
            raise ValueError(f"expected {d} axes, got {len(axes)}")
        return SeparableCovariance(axes=tuple(axes))
    gammas = GammaPair(float(cfg["gamma1"]), float(cfg["gamma2"]))
    if d == 2:
        return example_covariance(gammas, horizon)
    if not validate_gammas(gammas):
        raise InfeasibleParameterError(f"gamma pair {gammas} fails the feasibility chain")
    builders = [build_eta1, build_eta2]
    axes = tuple(
        builders[i % 2]((gammas.gamma1, gammas.gamma2)[i % 2], horizon) for i in range(d)
    )
    return SeparableCovariance(axes=axes, gammas=gammas)
