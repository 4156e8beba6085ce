"""Ground-truth mixtures, the seeded Monte-Carlo benchmark, and statistical
oracle checks for nearest-neighbour ball volumes.

The registry ships three bivariate Gaussian mixtures truncated to the unit
square (two peaks of very different scale and orientation, two similar
peaks, and a four-peak comb of geometrically decreasing spread) plus a flat
uniform fixture.  Benchmarks are driven by a counter-based Philox generator
with one substream per (density, sample size, replication), so results do
not depend on worker count or sweep composition.
"""

from __future__ import annotations

import dataclasses
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy.special import gammaln

from .classical import classical_coefficients
from .errors import ConfigurationError, DataError, EstimationError
from .estimator import (
    DensityModel,
    EstimatorConfig,
    estimate_coefficients,
    normalize,
    truncate_details,
)
from .metrics import Field, GridSpec, grid_eval, mise_aggregate
from .neighbors import knn_stats, unit_ball_volume
from .wavelets import cached_family

SHAPE_PRESERVING = "shape-preserving"
CLASSICAL = "classical"

_NORMALIZER_RESOLUTION = 1024
_MIN_ACCEPTANCE = 1e-3


@dataclass(frozen=True)
class MixtureSpec:
    """A Gaussian mixture truncated to a box and renormalized.

    ``normalizer`` is the mass of the untruncated mixture over the box,
    computed once by high-resolution grid quadrature.  An empty component
    list denotes the uniform density on the box.
    """

    name: str
    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray
    domain: np.ndarray
    normalizer: float

    @property
    def d(self) -> int:
        return self.domain.shape[0]

    @property
    def is_uniform(self) -> bool:
        return self.weights.size == 0


def _raw_mixture_pdf(weights, means, covariances, points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    d = pts.shape[1]
    out = np.zeros(pts.shape[0])
    for w, mu, cov in zip(weights, means, covariances):
        chol = np.linalg.cholesky(cov)
        diff = pts - mu
        sol = np.linalg.solve(chol, diff.T)
        quad = np.sum(sol * sol, axis=0)
        norm = (2.0 * math.pi) ** (d / 2.0) * np.prod(np.diag(chol))
        out += w * np.exp(-0.5 * quad) / norm
    return out


def _box_volume(domain: np.ndarray) -> float:
    return float(np.prod(domain[:, 1] - domain[:, 0]))


def make_mixture(name, weights, means, covariances, domain) -> MixtureSpec:
    """Build a truncated-mixture spec, computing its normalizer by grid
    quadrature at resolution 1024 per axis."""
    weights = np.asarray(weights, dtype=float)
    means = np.asarray(means, dtype=float)
    covariances = np.asarray(covariances, dtype=float)
    domain = np.asarray(domain, dtype=float)
    if weights.size:
        if not np.all(weights > 0) or abs(weights.sum() - 1.0) > 1e-12:
            raise ConfigurationError("mixture weights must be positive and sum to 1")
        for cov in covariances:
            if not np.allclose(cov, cov.T) or np.linalg.eigvalsh(cov).min() <= 0:
                raise ConfigurationError("covariances must be symmetric positive definite")
        grid = GridSpec.from_box(domain, _NORMALIZER_RESOLUTION)
        centers = grid.cell_centers()
        values = _raw_mixture_pdf(weights, means, covariances, centers)
        normalizer = float(values.sum() * grid.cell_volume)
    else:
        normalizer = 1.0
    if normalizer <= 0:
        raise ConfigurationError("mixture has no mass on the domain")
    return MixtureSpec(
        name=name,
        weights=weights,
        means=means,
        covariances=covariances,
        domain=domain,
        normalizer=normalizer,
    )


_UNIT_SQUARE = [[0.0, 1.0], [0.0, 1.0]]


@lru_cache(maxsize=None)
def get_density(name: str) -> MixtureSpec:
    """Registry of benchmark densities on the unit square."""
    if name == "anisotropic-pair":
        # one broad tilted ridge plus one tight isotropic peak
        return make_mixture(
            name,
            weights=[0.5, 0.5],
            means=[[0.35, 0.40], [0.72, 0.72]],
            covariances=[
                [[0.040, 0.018], [0.018, 0.012]],
                [[0.0012, 0.0], [0.0, 0.0012]],
            ],
            domain=_UNIT_SQUARE,
        )
    if name == "similar-pair":
        # equal peaks near opposite corners; the truncation is deliberate
        return make_mixture(
            name,
            weights=[0.5, 0.5],
            means=[[0.22, 0.22], [0.78, 0.78]],
            covariances=[
                [[0.020, 0.0], [0.0, 0.020]],
                [[0.020, 0.0], [0.0, 0.020]],
            ],
            domain=_UNIT_SQUARE,
        )
    if name == "comb4":
        # four peaks of geometrically decreasing spread and weight
        s0 = 0.012
        return make_mixture(
            name,
            weights=[8 / 15, 4 / 15, 2 / 15, 1 / 15],
            means=[[0.22, 0.24], [0.48, 0.50], [0.66, 0.68], [0.80, 0.82]],
            covariances=[
                [[s0, 0.0], [0.0, s0]],
                [[s0 / 4, 0.0], [0.0, s0 / 4]],
                [[s0 / 16, 0.0], [0.0, s0 / 16]],
                [[s0 / 64, 0.0], [0.0, s0 / 64]],
            ],
            domain=_UNIT_SQUARE,
        )
    if name == "uniform":
        return make_mixture(
            name,
            weights=[],
            means=np.zeros((0, 2)),
            covariances=np.zeros((0, 2, 2)),
            domain=_UNIT_SQUARE,
        )
    raise ConfigurationError(f"unknown density {name!r}; known: {sorted(DENSITY_INDEX)}")


# stable substream keys; order must never change
DENSITY_INDEX = {"anisotropic-pair": 0, "similar-pair": 1, "comb4": 2, "uniform": 3}


def replication_rng(seed: int, density: str, n: int, replication: int) -> np.random.Generator:
    """Philox substream for one (density, n, replication) cell."""
    key = (DENSITY_INDEX[density], n, replication)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=key)))


def sample_mixture(spec: MixtureSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw n points from the truncated mixture by rejection against the box."""
    if n < 1:
        raise ValueError("n must be >= 1")
    lo = spec.domain[:, 0]
    hi = spec.domain[:, 1]
    if spec.is_uniform:
        return lo + rng.random((n, spec.d)) * (hi - lo)
    chols = [np.linalg.cholesky(cov) for cov in spec.covariances]
    accepted = np.empty((0, spec.d))
    proposed = 0
    while accepted.shape[0] < n:
        batch = max(2 * (n - accepted.shape[0]), 256)
        comp = rng.choice(spec.weights.size, size=batch, p=spec.weights)
        z = rng.standard_normal((batch, spec.d))
        draws = np.empty((batch, spec.d))
        for c in range(spec.weights.size):
            sel = comp == c
            draws[sel] = spec.means[c] + z[sel] @ chols[c].T
        inside = np.all((draws >= lo) & (draws <= hi), axis=1)
        accepted = np.vstack([accepted, draws[inside]])
        proposed += batch
        if proposed >= 10_000 and accepted.shape[0] < _MIN_ACCEPTANCE * proposed:
            raise ConfigurationError(
                f"acceptance rate below {_MIN_ACCEPTANCE} for density {spec.name!r}: "
                "degenerate truncation"
            )
    return accepted[:n]


def true_density_field(spec: MixtureSpec, grid: GridSpec) -> Field:
    """Truncated-mixture density at the grid's cell centers."""
    if spec.is_uniform:
        values = np.full((grid.resolution,) * grid.d, 1.0 / _box_volume(spec.domain))
        return Field(grid=grid, values=values)
    centers = grid.cell_centers()
    values = _raw_mixture_pdf(spec.weights, spec.means, spec.covariances, centers)
    values = values / spec.normalizer
    return Field(grid=grid, values=values.reshape((grid.resolution,) * grid.d))


def density_pdf(spec: MixtureSpec, points) -> np.ndarray:
    """Truncated-mixture pdf at arbitrary points (zero outside the box)."""
    pts = np.asarray(points, dtype=float)
    inside = np.all((pts >= spec.domain[:, 0]) & (pts <= spec.domain[:, 1]), axis=1)
    if spec.is_uniform:
        return inside / _box_volume(spec.domain)
    vals = _raw_mixture_pdf(spec.weights, spec.means, spec.covariances, pts)
    return np.where(inside, vals / spec.normalizer, 0.0)


# ---------------------------------------------------------------------------
# benchmark harness
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BenchmarkConfig:
    densities: tuple[str, ...] = ("anisotropic-pair", "similar-pair", "comb4")
    sample_sizes: tuple[int, ...] = (128, 512, 2048)
    replications: int = 50
    J_values: tuple[int, ...] = (-1, 0, 1, 2, 3)
    k_values: tuple[int, ...] = (1, 2, 4, 8)
    wavelet_order: int = 6
    j0: int = 0
    grid_resolution: int = 128
    seed: int = 0
    estimators: tuple[str, ...] = (SHAPE_PRESERVING, CLASSICAL)
    dyadic_resolution: int = 10

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        for group in (self.densities, self.sample_sizes, self.J_values, self.k_values, self.estimators):
            if len(group) == 0:
                raise ValueError("all sweep axes must be non-empty")
        for est in self.estimators:
            if est not in (SHAPE_PRESERVING, CLASSICAL):
                raise ValueError(f"unknown estimator {est!r}")

    @classmethod
    def from_json(cls, path) -> "BenchmarkConfig":
        with open(path, "r", encoding="utf-8") as handle:
            try:
                doc = json.load(handle)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}: not valid JSON ({exc})") from exc
        doc.pop("schema_version", None)
        try:
            kwargs = {
                key: tuple(val) if isinstance(val, list) else val
                for key, val in doc.items()
            }
            return cls(**kwargs)
        except TypeError as exc:
            raise DataError(f"{path}: bad benchmark config ({exc})") from exc

    def to_dict(self) -> dict:
        out = {"schema_version": 1}
        for fld in dataclasses.fields(self):
            val = getattr(self, fld.name)
            out[fld.name] = list(val) if isinstance(val, tuple) else val
        return out


class BenchRow(NamedTuple):
    density: str
    n: int
    J: int
    k: int
    estimator: str
    mise: float | None
    mise_se: float | None
    mean_negative_mass: float | None
    wall_time: float
    error: str | None


@dataclass(frozen=True)
class BenchmarkReport:
    rows: tuple[BenchRow, ...]
    provenance: dict

    @property
    def failed(self) -> bool:
        return any(row.error is not None for row in self.rows)

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "provenance": self.provenance,
            "rows": [row._asdict() for row in self.rows],
        }

    def write_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(self.to_dict(), handle, indent=2)
            handle.write("\n")

    def write_csv(self, path) -> None:
        """Flat table with shape-preserving and classical columns side by side."""
        cells: dict[tuple[str, int, int, int], dict[str, BenchRow]] = {}
        for row in self.rows:
            cells.setdefault((row.density, row.n, row.J, row.k), {})[row.estimator] = row
        lines = [
            "# wavedens benchmark report; seed="
            + str(self.provenance.get("config", {}).get("seed", "")),
            "density,n,J_plus_1,k,sp_mise,sp_se,classical_mise,classical_se",
        ]
        for (density, n, J, k), pair in cells.items():
            fields = [density, str(n), str(J + 1), str(k)]
            for est in (SHAPE_PRESERVING, CLASSICAL):
                row = pair.get(est)
                if row is None or row.mise is None:
                    fields.extend(["", ""])
                else:
                    fields.extend([repr(row.mise), repr(row.mise_se)])
            lines.append(",".join(fields))
        with open(path, "w", encoding="utf-8") as handle:
            handle.write("\n".join(lines) + "\n")


def _replicate_cell(spec, config, n, replication, truth_values, grid):
    """One Monte-Carlo replication: draw a sample, fit, evaluate every row.

    Returns {(J, k, estimator): (ise, negative_mass, seconds)} or an error
    marker per (k, estimator) group.
    """
    rng = replication_rng(config.seed, spec.name, n, replication)
    points = sample_mixture(spec, n, rng)
    j_max = max(config.J_values)
    family = cached_family(config.wavelet_order, config.dyadic_resolution)
    out: dict[tuple[int, int, str], tuple] = {}

    def eval_rows(raw, k, estimator):
        for J in config.J_values:
            t0 = time.perf_counter()
            try:
                coeffs = truncate_details(raw, J)
                if estimator == SHAPE_PRESERVING:
                    model = DensityModel(family, normalize(coeffs))
                    values = grid_eval(model, grid).values
                else:
                    # rescaling is linear, so dividing the field by its mass
                    # equals rescaling the coefficients
                    model = DensityModel(family, coeffs)
                    values = grid_eval(model, grid).values
                    total = float(grid.cell_volume * values.sum())
                    if total <= 0.0:
                        raise EstimationError("non-positive grid mass")
                    values = values / total
                err2 = float(grid.cell_volume * np.sum((values - truth_values) ** 2))
                neg = float(grid.cell_volume * np.minimum(values, 0.0).sum())
                out[(J, k, estimator)] = (err2, neg, time.perf_counter() - t0, None)
            except EstimationError as exc:
                out[(J, k, estimator)] = (None, None, time.perf_counter() - t0, str(exc))

    base = EstimatorConfig(
        wavelet_order=config.wavelet_order,
        j0=config.j0,
        J=j_max,
        k=1,
        normalize=False,
        domain=spec.domain,
        dyadic_resolution=config.dyadic_resolution,
    )
    if SHAPE_PRESERVING in config.estimators:
        for k in config.k_values:
            try:
                raw = estimate_coefficients(points, dataclasses.replace(base, k=k))
            except EstimationError as exc:
                for J in config.J_values:
                    out[(J, k, SHAPE_PRESERVING)] = (None, None, 0.0, str(exc))
                continue
            eval_rows(raw, k, SHAPE_PRESERVING)
    if CLASSICAL in config.estimators:
        try:
            raw = classical_coefficients(points, base)
        except EstimationError as exc:
            for J in config.J_values:
                for k in config.k_values:
                    out[(J, k, CLASSICAL)] = (None, None, 0.0, str(exc))
        else:
            eval_rows(raw, config.k_values[0], CLASSICAL)
            for J in config.J_values:
                template = out[(J, config.k_values[0], CLASSICAL)]
                for k in config.k_values[1:]:
                    out[(J, k, CLASSICAL)] = template
    return out


def run_benchmark(config: BenchmarkConfig, workers: int | None = None) -> BenchmarkReport:
    """Run the full sweep; the report is independent of the worker count.

    Replications are independent tasks keyed by their own RNG substream and
    reduced in fixed order; a failing row is marked rather than aborting the
    sweep.
    """
    import warnings as _warnings

    cached_family(config.wavelet_order, config.dyadic_resolution)
    rows: list[BenchRow] = []
    for density in config.densities:
        spec = get_density(density)
        grid = GridSpec.from_box(spec.domain, config.grid_resolution)
        truth = true_density_field(spec, grid).values
        for n in config.sample_sizes:
            def task(m, _n=n, _spec=spec):
                with _warnings.catch_warnings():
                    _warnings.simplefilter("ignore")
                    return _replicate_cell(_spec, config, _n, m, truth, grid)

            if workers is None or workers > 1:
                with ThreadPoolExecutor(max_workers=workers) as pool:
                    results = list(pool.map(task, range(config.replications)))
            else:
                results = [task(m) for m in range(config.replications)]

            for J in config.J_values:
                for k in config.k_values:
                    for estimator in config.estimators:
                        key = (J, k, estimator)
                        ises, negs, secs, errors = [], [], 0.0, []
                        for res in results:
                            err2, neg, sec, err = res[key]
                            secs += sec
                            if err is not None:
                                errors.append(err)
                            else:
                                ises.append(err2)
                                negs.append(neg)
                        if errors:
                            rows.append(
                                BenchRow(density, n, J, k, estimator, None, None, None, secs, errors[0])
                            )
                        else:
                            mise, se = mise_aggregate(ises)
                            rows.append(
                                BenchRow(
                                    density, n, J, k, estimator,
                                    mise, se, float(np.mean(negs)), secs, None,
                                )
                            )
    from . import __version__

    provenance = {"config": config.to_dict(), "artifact": f"wavedens {__version__}"}
    return BenchmarkReport(rows=tuple(rows), provenance=provenance)


# ---------------------------------------------------------------------------
# statistical oracle checks
# ---------------------------------------------------------------------------


class MomentCheck(NamedTuple):
    empirical: float
    predicted: float
    z_score: float
    std_error: float


def moment_identity_check(
    a: float, k: int, n: int, replications: int, rng: np.random.Generator
) -> MomentCheck:
    """Check the nearest-neighbour moment identity on uniform data.

    For X uniform on the unit square, n^a c0^a Gamma(k)/Gamma(k+a) R^(a*d)
    has expectation 1 up to an O(n^{-1/d}) boundary term.  Returns the
    replication-averaged empirical mean, the predicted value 1, and the
    z-score against the Monte-Carlo standard error (which does not absorb
    the boundary bias).
    """
    if a <= 0:
        raise ValueError("a must be > 0")
    d = 2
    c0 = unit_ball_volume(d)
    factor = math.exp(gammaln(k) - gammaln(k + a)) * (n * c0) ** a
    rep_means = np.empty(replications)
    for m in range(replications):
        pts = rng.random((n, d))
        stats = knn_stats(pts, k)
        rep_means[m] = factor * np.mean(stats.radii ** (a * d))
    empirical = float(rep_means.mean())
    se = float(rep_means.std(ddof=1) / math.sqrt(replications)) if replications > 1 else float("nan")
    z = (empirical - 1.0) / se if se and se > 0 else float("nan")
    return MomentCheck(empirical=empirical, predicted=1.0, z_score=z, std_error=se)


def ks_exponential(values) -> float:
    """One-sample Kolmogorov-Smirnov distance to the unit exponential law."""
    vals = np.sort(np.asarray(values, dtype=float))
    if vals.size == 0:
        raise ValueError("empty sample")
    cdf = 1.0 - np.exp(-vals)
    i = np.arange(1, vals.size + 1)
    d_plus = np.max(i / vals.size - cdf)
    d_minus = np.max(cdf - (i - 1) / vals.size)
    return float(max(d_plus, d_minus))


class NeighborLawSample(NamedTuple):
    """Scaled nearest-neighbour statistics n*V_(1) with their point context."""

    scaled_volumes: np.ndarray
    points: np.ndarray


def neighbor_law_sample(n: int, rng: np.random.Generator) -> NeighborLawSample:
    """Draw a uniform sample on the unit square and scale its first-neighbour
    ball volumes; the limit law of the scaled volumes is unit exponential."""
    d = 2
    pts = rng.random((n, d))
    stats = knn_stats(pts, 1)
    return NeighborLawSample(scaled_volumes=n * stats.volumes, points=pts)


def exp_law_check(n: int, replications: int, rng: np.random.Generator) -> float:
    """KS distance of pooled n*V_(1) draws (interior points, uniform sample)
    to the unit exponential limit law."""
    margin = n ** (-1.0 / 2)
    pooled = []
    for _ in range(replications):
        law = neighbor_law_sample(n, rng)
        interior = np.all((law.points > margin) & (law.points < 1.0 - margin), axis=1)
        pooled.append(law.scaled_volumes[interior])
    return ks_exponential(np.concatenate(pooled))
