"""Euler-Maruyama ensembles for polynomial Itô-Lévy SDEs.

Paths are simulated in fixed-size chunks, each with its own child of a
``numpy.random.SeedSequence``, so results depend only on the seed and the
configuration, not on how chunks are scheduled.
"""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .model import CompensatedGamma, LevyComponent, NoLevy, PolynomialSde, VarianceGamma

BLOWUP = 1e12
POSITIVITY_FLOOR = 1e-12


class NegativeDiffusion(ValueError):
    """``g(x)^2 < 0`` at a visited state."""


@dataclasses.dataclass(frozen=True)
class SimConfig:
    """Simulation settings.

    ``burn_in`` defaults to ``t_end / 2``.  Samples are recorded every
    ``record_every`` steps after the burn-in.  ``positive`` enables the
    reflecting guard at ``1e-12``; ``None`` enables it automatically for
    models that keep ``(0, inf)`` invariant.
    """

    dt: float = 1e-3
    t_end: float = 20.0
    burn_in: float | None = None
    paths: int = 1000
    seed: int = 0
    x0: float = 0.0
    record_every: int = 100
    batches: int = 20
    chunk: int = 500
    positive: bool | None = None
    bins: int = 100
    workers: int = 1

    def __post_init__(self):
        if self.burn_in is None:
            object.__setattr__(self, "burn_in", self.t_end / 2)
        if not (self.dt > 0 and self.t_end > 0):
            raise ValueError("dt and t_end must be positive")
        if self.dt > self.t_end / 100:
            raise ValueError(f"dt = {self.dt} exceeds t_end / 100 = {self.t_end / 100}")
        if not 0 <= self.burn_in < self.t_end:
            raise ValueError(f"burn_in must lie in [0, t_end), got {self.burn_in}")
        for name in ("paths", "record_every", "chunk", "bins", "workers"):
            if int(getattr(self, name)) != getattr(self, name) or getattr(self, name) < 1:
                raise ValueError(f"{name} must be a positive integer")
        if self.batches < 20:
            raise ValueError("batch means need at least 20 batches")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.n_records < 1:
            raise ValueError("no samples are recorded after the burn-in")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    @property
    def first_record(self) -> int:
        # first recorded step strictly after the burn-in
        return int(math.floor(self.burn_in / self.dt + 1e-9)) + 1

    @property
    def n_records(self) -> int:
        return self.n_steps // self.record_every - (self.first_record - 1) // self.record_every

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclasses.dataclass(frozen=True)
class EnsembleStats:
    moments: np.ndarray        # E[X^k], k = 1..6
    std_errors: np.ndarray
    effective_samples: float
    n_samples: int
    bin_edges: np.ndarray
    counts: np.ndarray
    blowups: int
    paths: int
    config: SimConfig
    samples: np.ndarray | None = None

    @property
    def mean(self) -> float:
        return float(self.moments[0])

    @property
    def variance(self) -> float:
        return float(self.moments[1] - self.moments[0] ** 2)

    @property
    def blowup_fraction(self) -> float:
        return self.blowups / self.paths

    def confidence_interval(self, k: int = 1, z: float = 1.959963984540054) -> tuple[float, float]:
        m, se = self.moments[k - 1], self.std_errors[k - 1]
        return float(m - z * se), float(m + z * se)

    def to_dict(self) -> dict:
        return {
            "moments": {str(k + 1): float(v) for k, v in enumerate(self.moments)},
            "std_errors": {str(k + 1): float(v) for k, v in enumerate(self.std_errors)},
            "effective_samples": float(self.effective_samples),
            "n_samples": int(self.n_samples),
            "blowups": int(self.blowups),
            "paths": int(self.paths),
            "config": self.config.to_dict(),
        }

    def histogram_csv(self) -> str:
        lines = ["bin_left,bin_right,count,density"]
        width = np.diff(self.bin_edges)
        total = max(int(self.counts.sum()), 1)
        for lo, hi, c, w in zip(self.bin_edges[:-1], self.bin_edges[1:], self.counts, width):
            lines.append(f"{float(lo)!r},{float(hi)!r},{int(c)},{float(c / (total * w))!r}")
        return "\n".join(lines) + "\n"


def sample_levy_increment(levy: LevyComponent, dt: float, rng: np.random.Generator, size=None):
    """Increment of the compensated jump process over ``dt``.

    Gamma draws use ``Generator.standard_gamma``, which is valid for shape
    below one (the regime ``a dt << 1`` that matters here).
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if isinstance(levy, NoLevy):
        return np.zeros(size) if size is not None else 0.0
    if isinstance(levy, VarianceGamma):
        g = rng.standard_gamma(levy.a * dt, size) / levy.b
        return levy.sigma * np.sqrt(g) * rng.standard_normal(size)
    if isinstance(levy, CompensatedGamma):
        g = rng.standard_gamma(levy.a * dt, size) / levy.b
        return g - levy.a / levy.b * dt
    raise TypeError(f"unknown Lévy component {levy!r}")


def keeps_positive(model: PolynomialSde) -> bool:
    """Whether ``(0, inf)`` is invariant: no jumps, ``g^2(0) = 0`` and ``f(0) > 0``."""
    return (
        isinstance(model.levy, NoLevy)
        and float(model.diffusion_sq(0.0)) == 0.0
        and float(model.drift(0.0)) > 0.0
    )


def _simulate_chunk(model: PolynomialSde, cfg: SimConfig, n: int, seed: np.random.SeedSequence,
                    guard: bool):
    rng = np.random.Generator(np.random.PCG64(seed))
    x = np.full(n, float(cfg.x0))
    alive = np.ones(n, dtype=bool)
    rec = np.empty((n, cfg.n_records))
    sdt = math.sqrt(cfg.dt)
    has_diffusion = bool(model.diffusion_sq_coeffs)
    has_jumps = not isinstance(model.levy, NoLevy)
    with np.errstate(over="ignore", invalid="ignore"):
        col, alive = _steps(model, cfg, rng, x, alive, rec, sdt, has_diffusion, has_jumps, guard)
    rec[~alive] = np.nan
    return rec[:, :col], int((~alive).sum())


def _steps(model, cfg, rng, x, alive, rec, sdt, has_diffusion, has_jumps, guard):
    # overflow on a path about to be flagged as blown up is expected
    n = x.size
    col = 0
    for step in range(1, cfg.n_steps + 1):
        dx = model.drift(x) * cfg.dt
        if has_diffusion:
            g2 = model.diffusion_sq(x)
            bad = alive & (g2 < 0)
            if bad.any():
                raise NegativeDiffusion(
                    f"g(x)^2 = {g2[bad][0]:.6g} < 0 at visited state x = {x[bad][0]:.6g}"
                )
            dx += np.sqrt(np.maximum(g2, 0.0)) * sdt * rng.standard_normal(n)
        if has_jumps:
            dx += sample_levy_increment(model.levy, cfg.dt, rng, n)
        x = x + dx
        if guard:
            low = x < POSITIVITY_FLOOR
            x[low] = 2 * POSITIVITY_FLOOR - x[low]
        blown = alive & ~(np.abs(x) <= BLOWUP)
        if blown.any():
            alive &= ~blown
            x[~alive] = 0.0
        if step >= cfg.first_record and step % cfg.record_every == 0:
            rec[:, col] = x
            col += 1
    return col, alive


def simulate(model: PolynomialSde, cfg: SimConfig, keep_samples: bool = False) -> EnsembleStats:
    guard = keeps_positive(model) if cfg.positive is None else cfg.positive
    if guard and cfg.x0 <= 0:
        raise ValueError("positive models need x0 > 0")
    if cfg.paths < cfg.batches:
        raise ValueError(f"need at least {cfg.batches} paths for batch means")
    sizes = [cfg.chunk] * (cfg.paths // cfg.chunk)
    if cfg.paths % cfg.chunk:
        sizes.append(cfg.paths % cfg.chunk)
    seeds = np.random.SeedSequence(cfg.seed).spawn(len(sizes))
    jobs = list(zip(sizes, seeds))
    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            results = list(pool.map(lambda a: _simulate_chunk(model, cfg, a[0], a[1], guard), jobs))
    else:
        results = [_simulate_chunk(model, cfg, n, s, guard) for n, s in jobs]
    rec = np.vstack([r[0] for r in results])
    blowups = sum(r[1] for r in results)
    good = rec[~np.isnan(rec).any(axis=1)]
    if good.shape[0] < cfg.batches:
        raise ValueError(f"only {good.shape[0]} of {cfg.paths} paths survived")
    return summarize(good, cfg, blowups, keep_samples)


def summarize(rec: np.ndarray, cfg: SimConfig, blowups: int = 0, keep_samples: bool = False) -> EnsembleStats:
    """Moments with batch-means errors from a ``(paths, records)`` array."""
    flat = rec.reshape(-1)
    powers = flat[:, None] ** np.arange(1, 7)[None, :]
    moments = powers.mean(axis=0)
    # contiguous batches of whole paths
    chunks = np.array_split(np.arange(rec.shape[0]), cfg.batches)
    per = rec.shape[1]
    bm = np.array([powers[c[0] * per:(c[-1] + 1) * per].mean(axis=0) for c in chunks])
    se = bm.std(axis=0, ddof=1) / math.sqrt(cfg.batches)
    var1 = flat.var()
    ess = float(var1 / se[0] ** 2) if se[0] > 0 else float(flat.size)
    counts, edges = np.histogram(flat, bins=cfg.bins)
    return EnsembleStats(moments, se, ess, int(flat.size), edges, counts, blowups, cfg.paths, cfg,
                         np.sort(flat) if keep_samples else None)
