"""Nearest shift-invariant subspace of prescribed length.

At each grid cell the fibers of the observed functions span a small
subspace; the best approximation of length ``rank`` keeps, cellwise, the
dominant eigenvectors of the fiber Gramian.  The squared distance is the
quadrature sum of the discarded eigenvalues, and the kept eigenvectors
yield generator fibers that are orthonormal wherever they are nonzero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._parallel import run_chunked
from .errors import ValidationError
from .hermitian import EIG_TOL_DEFAULT, RANK_REL_TOL, eig_hermitian
from .spectral import SpectralDataset, SpectralGrid


@dataclass(eq=False)
class FittedModel:
    """Result of a subspace fit.

    ``eigenvalues[g, s]`` is the s-th kept eigenvalue at cell g (rows are
    zero-padded when fewer records exist than ``rank``); ``spectra[s]``
    holds the matching generator fiber over (cell, translation); the fiber
    is identically zero when its eigenvalue is numerically zero.
    """

    grid: SpectralGrid
    rank: int
    eigenvalues: np.ndarray
    spectra: np.ndarray
    residuals: np.ndarray
    error: float


def _check_rank(rank: int, minimum: int = 1) -> int:
    r = int(rank)
    if r < minimum or r != rank:
        raise ValidationError(f"rank must be an integer >= {minimum}, got {rank!r}")
    return r


def fit_sis(
    ds: SpectralDataset,
    rank: int,
    *,
    tol: float = EIG_TOL_DEFAULT,
    threads: int = 1,
) -> FittedModel:
    """Fit the nearest shift-invariant space of length ``rank``.

    Per cell: eigendecompose the fiber Gramian, keep the top
    min(rank, m) eigenpairs, scale each eigenvector combination by
    eigenvalue^(-1/2) (zero when the eigenvalue is numerically zero, i.e.
    at most 1e-10 of the cell's largest).  The residual at a cell is the
    sum of the discarded eigenvalues; ``error`` is their quadrature sum.
    """
    rank = _check_rank(rank)
    m = ds.m
    ncells = ds.grid.n_cells
    nk = ds.grid.n_translations
    take = min(rank, m)

    eigenvalues = np.zeros((ncells, rank))
    spectra = np.zeros((rank, ncells, nk), dtype=np.complex128)
    residuals = np.zeros(ncells)

    def work(lo: int, hi: int) -> None:
        for g in range(lo, hi):
            f = np.ascontiguousarray(ds.samples[:, g, :])
            gm = f @ f.conj().T
            gm = (gm + gm.conj().T) / 2.0
            es = eig_hermitian(gm, tol)
            lam = es.eigenvalues
            eigenvalues[g, :take] = lam[:take]
            residuals[g] = float(np.sum(lam[rank:]))
            lmax = lam[0] if lam[0] > 0.0 else 0.0
            for s in range(take):
                if lam[s] > RANK_REL_TOL * lmax and lam[s] > 0.0:
                    theta = 1.0 / math.sqrt(lam[s])
                    spectra[s, g, :] = theta * (es.vectors[:, s].conj() @ f)

    run_chunked(work, ncells, threads)
    error = float(residuals.sum()) * ds.grid.cell_volume
    return FittedModel(
        grid=ds.grid,
        rank=rank,
        eigenvalues=eigenvalues,
        spectra=spectra,
        residuals=residuals,
        error=error,
    )


def error_sis(
    ds: SpectralDataset,
    rank: int,
    *,
    tol: float = EIG_TOL_DEFAULT,
    threads: int = 1,
) -> float:
    """Squared distance to the nearest length-``rank`` shift-invariant
    space, without materializing generators.  ``rank`` 0 gives the total
    energy."""
    rank = _check_rank(rank, minimum=0)
    ncells = ds.grid.n_cells
    residuals = np.zeros(ncells)

    def work(lo: int, hi: int) -> None:
        for g in range(lo, hi):
            f = np.ascontiguousarray(ds.samples[:, g, :])
            gm = f @ f.conj().T
            gm = (gm + gm.conj().T) / 2.0
            lam = eig_hermitian(gm, tol).eigenvalues
            residuals[g] = float(np.sum(lam[rank:]))

    run_chunked(work, ncells, threads)
    return float(residuals.sum()) * ds.grid.cell_volume


def project_onto(model: FittedModel, ds: SpectralDataset):
    """Orthogonal projection of every function onto the fitted space.

    Generator fibers are assumed orthonormal-or-zero per cell, which
    holds for fitted models.  Returns the projected dataset and the
    squared projection residual of each function.
    """
    if model.grid != ds.grid:
        raise ValidationError(
            "model and dataset grids differ: "
            f"model ({model.grid.dim}, {model.grid.cells_per_dim}, {model.grid.trunc_radius}) "
            f"vs data ({ds.grid.dim}, {ds.grid.cells_per_dim}, {ds.grid.trunc_radius})"
        )
    m = ds.m
    ncells = ds.grid.n_cells
    proj = np.zeros_like(ds.samples)
    residuals = np.zeros(m)
    for g in range(ncells):
        x = ds.samples[:, g, :]
        e = model.spectra[:, g, :]
        coef = x @ e.conj().T
        p = coef @ e
        proj[:, g, :] = p
        r = x - p
        residuals += (r.real**2 + r.imag**2).sum(axis=1)
    residuals *= ds.grid.cell_volume
    return SpectralDataset(grid=ds.grid, samples=proj), residuals
