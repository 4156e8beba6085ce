"""Classical linear wavelet density estimator, the benchmark baseline.

Coefficients are plain empirical averages of the basis functions over the
sample; the reconstruction is linear in the coefficients and may therefore
go negative.  A simple rescaling by the grid-integrated mass restores unit
integral.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .errors import DegenerateModelError, EstimationError
from .estimator import (
    CoefficientSet,
    DensityModel,
    EstimatorConfig,
    _coefficient_sums,
    domain_box,
)
from .metrics import GridSpec, grid_eval, mass
from .neighbors import as_points
from .wavelets import cached_family


def classical_coefficients(points, config: EstimatorConfig) -> CoefficientSet:
    """Empirical-average coefficients over the same translate enumeration as
    the shape-preserving estimator."""
    pts = as_points(points)
    n, d = pts.shape
    if n < 1:
        raise EstimationError("need at least one point")
    box = domain_box(config, d)
    if np.any(pts < box[:, 0]) or np.any(pts > box[:, 1]):
        raise EstimationError(
            "points fall outside the configured domain; "
            "rescale them first with rescale_to_domain"
        )
    sums = _coefficient_sums(pts, np.ones(n), config)
    entries = {key: val / n for key, val in sums.items()}
    return CoefficientSet(
        entries=entries,
        d=d,
        n=n,
        k=config.k,
        j0=config.j0,
        J=config.J,
        wavelet_order=config.wavelet_order,
        normalized=False,
        representation="trend-plus-details",
        kind="classical",
        dyadic_resolution=config.dyadic_resolution,
    )


def fit_classical(points, config: EstimatorConfig) -> DensityModel:
    coeffs = classical_coefficients(points, config)
    family = cached_family(config.wavelet_order, config.dyadic_resolution)
    return DensityModel(family, coeffs)


def classical_density_at(model: DensityModel, x) -> float:
    """Linear reconstruction at one point; may be negative."""
    return float(model.reconstruct(np.atleast_2d(np.asarray(x, dtype=float)))[0])


def rescale_classical(model: DensityModel, grid: GridSpec) -> DensityModel:
    """Divide the density by its grid-integrated mass.

    The estimator is linear, so this amounts to dividing every coefficient;
    the grid used is the caller's responsibility to record.
    """
    total = mass(grid_eval(model, grid))
    if total <= 0.0:
        raise DegenerateModelError(f"grid-integrated mass {total} is not positive")
    entries = {key: val / total for key, val in model.coefficients.entries.items()}
    coeffs = dataclasses.replace(model.coefficients, entries=entries, normalized=True)
    return DensityModel(model.family, coeffs)
