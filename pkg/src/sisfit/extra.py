"""Shift-invariant fits constrained to extra lattice invariance.

Prescribing invariance under a finer translation lattice splits every
fiber Gramian into blocks, one per coset of the dual sublattice.  The
best constrained subspace keeps the globally largest ``rank`` eigenvalues
across all blocks of a cell; each kept eigenvector yields a generator
fiber supported on a single coset.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._parallel import run_chunked
from .errors import ValidationError
from .hermitian import EIG_TOL_DEFAULT, RANK_REL_TOL, eig_hermitian
from .lattice import DualLattice, coset_of
from .reports import VerificationReport, Violation
from .sis import FittedModel, _check_rank
from .spectral import SpectralDataset


@dataclass(eq=False)
class ExtraInvariantModel(FittedModel):
    """Fitted model whose generators respect a coset structure.

    ``home_cosets[g, s]`` is the coset label carrying generator s at cell
    g and ``block_ranks[g, s]`` its eigenvalue's rank inside that block;
    both are -1 on zero-padded slots.
    """

    lattice: DualLattice
    home_cosets: np.ndarray
    block_ranks: np.ndarray


def _coset_labels(grid, lat: DualLattice) -> np.ndarray:
    if lat.dim != grid.dim:
        raise ValidationError(
            f"lattice dimension {lat.dim} does not match grid dimension {grid.dim}"
        )
    return np.array([coset_of(k, lat) for k in grid.translations], dtype=np.int64)


def split_by_coset(ds: SpectralDataset, lat: DualLattice) -> list[SpectralDataset]:
    """Split a dataset into per-coset parts.

    Part sigma keeps the samples at translations in coset sigma and is
    zero elsewhere; the parts sum to the original samples exactly.
    """
    labels = _coset_labels(ds.grid, lat)
    parts = []
    for sigma in range(lat.index):
        mask = labels == sigma
        parts.append(SpectralDataset(grid=ds.grid, samples=ds.samples * mask))
    return parts


def _merged_records(f: np.ndarray, cols_by_coset, tol: float, with_vectors: bool):
    """Eigen-records of all coset blocks at one cell, sorted by descending
    eigenvalue with ties broken by (coset label, in-block rank)."""
    records = []
    for sigma, cols in enumerate(cols_by_coset):
        fs = f[:, cols]
        gm = fs @ fs.conj().T
        gm = (gm + gm.conj().T) / 2.0
        es = eig_hermitian(gm, tol)
        lam = es.eigenvalues
        for j in range(lam.shape[0]):
            vec = es.vectors[:, j] if with_vectors else None
            records.append((float(lam[j]), sigma, j, vec))
    records.sort(key=lambda r: (-r[0], r[1], r[2]))
    return records


def fit_extra_invariant(
    ds: SpectralDataset,
    lat: DualLattice,
    rank: int,
    *,
    tol: float = EIG_TOL_DEFAULT,
    threads: int = 1,
) -> ExtraInvariantModel:
    """Fit the nearest length-``rank`` shift-invariant space that is also
    invariant under the lattice dual to ``lat``.

    Per cell the coset blocks of the Gramian are eigendecomposed
    separately, the records of all blocks are merged, and the top
    ``rank`` eigenvalues are kept (ties: smaller coset label, then
    smaller in-block rank).  Generators are supported on their home
    coset exactly.
    """
    rank = _check_rank(rank)
    m = ds.m
    ncells = ds.grid.n_cells
    nk = ds.grid.n_translations
    labels = _coset_labels(ds.grid, lat)
    cols_by_coset = [np.flatnonzero(labels == sigma) for sigma in range(lat.index)]
    take = min(rank, m * lat.index)

    eigenvalues = np.zeros((ncells, rank))
    spectra = np.zeros((rank, ncells, nk), dtype=np.complex128)
    residuals = np.zeros(ncells)
    home_cosets = np.full((ncells, rank), -1, dtype=np.int64)
    block_ranks = np.full((ncells, rank), -1, dtype=np.int64)

    def work(lo: int, hi: int) -> None:
        for g in range(lo, hi):
            f = np.ascontiguousarray(ds.samples[:, g, :])
            records = _merged_records(f, cols_by_coset, tol, with_vectors=True)
            acc = 0.0
            for lam_s, _, _, _ in records[rank:]:
                acc += lam_s
            residuals[g] = acc
            lmax = records[0][0] if records[0][0] > 0.0 else 0.0
            for s in range(take):
                lam_s, sigma, j, u = records[s]
                eigenvalues[g, s] = lam_s
                home_cosets[g, s] = sigma
                block_ranks[g, s] = j
                if lam_s > RANK_REL_TOL * lmax and lam_s > 0.0:
                    theta = 1.0 / math.sqrt(lam_s)
                    cols = cols_by_coset[sigma]
                    spectra[s, g, cols] = theta * (u.conj() @ f[:, cols])

    run_chunked(work, ncells, threads)
    error = float(residuals.sum()) * ds.grid.cell_volume
    return ExtraInvariantModel(
        grid=ds.grid,
        rank=rank,
        eigenvalues=eigenvalues,
        spectra=spectra,
        residuals=residuals,
        error=error,
        lattice=lat,
        home_cosets=home_cosets,
        block_ranks=block_ranks,
    )


def error_extra(
    ds: SpectralDataset,
    lat: DualLattice,
    rank: int,
    *,
    tol: float = EIG_TOL_DEFAULT,
    threads: int = 1,
) -> float:
    """Squared distance to the nearest extra-invariant space of length
    ``rank`` (0 gives the total energy)."""
    rank = _check_rank(rank, minimum=0)
    labels = _coset_labels(ds.grid, lat)
    cols_by_coset = [np.flatnonzero(labels == sigma) for sigma in range(lat.index)]
    ncells = ds.grid.n_cells
    residuals = np.zeros(ncells)

    def work(lo: int, hi: int) -> None:
        for g in range(lo, hi):
            f = np.ascontiguousarray(ds.samples[:, g, :])
            records = _merged_records(f, cols_by_coset, tol, with_vectors=False)
            acc = 0.0
            for lam_s, _, _, _ in records[rank:]:
                acc += lam_s
            residuals[g] = acc

    run_chunked(work, ncells, threads)
    return float(residuals.sum()) * ds.grid.cell_volume


MAX_REPORTED_VIOLATIONS = 64


def verify_extra_invariance(model: FittedModel, lat: DualLattice) -> VerificationReport:
    """Check that a model's generators respect the coset structure.

    Models carrying a home-coset table are held to exact zeros outside
    each generator's home coset.  Other models pass if, at every cell,
    the restriction of each generator fiber to any single coset stays in
    the span of that cell's generator fibers within 1e-8 relative
    residual.
    """
    labels = _coset_labels(model.grid, lat)
    spectra = np.asarray(model.spectra)
    if spectra.ndim != 3 or spectra.shape[1] != model.grid.n_cells or spectra.shape[2] != model.grid.n_translations:
        raise ValidationError(f"generator array shape {spectra.shape} does not match the grid")
    violations: list[Violation] = []
    total = 0

    if isinstance(model, ExtraInvariantModel) or hasattr(model, "home_cosets"):
        checks = ["coset-support"]
        home = np.asarray(model.home_cosets)
        for s in range(spectra.shape[0]):
            allowed = labels[None, :] == home[:, s][:, None]
            bad = (spectra[s] != 0) & ~allowed
            for g in np.flatnonzero(bad.any(axis=1)):
                total += 1
                if len(violations) < MAX_REPORTED_VIOLATIONS:
                    ki = int(np.flatnonzero(bad[g])[0])
                    violations.append(
                        Violation(
                            check="coset-support",
                            cell=int(g),
                            generator=s,
                            detail=(
                                f"nonzero sample at translation {tuple(int(x) for x in model.grid.translations[ki])} "
                                f"(coset {int(labels[ki])}) outside home coset {int(home[g, s])}"
                            ),
                        )
                    )
    else:
        checks = ["coset-support", "coset-span"]
        for g in range(model.grid.n_cells):
            e_all = spectra[:, g, :]
            for s in range(spectra.shape[0]):
                e = spectra[s, g, :]
                nz = e != 0
                touched = np.unique(labels[nz])
                if touched.size > 1:
                    total += 1
                    if len(violations) < MAX_REPORTED_VIOLATIONS:
                        violations.append(
                            Violation(
                                check="coset-support",
                                cell=g,
                                generator=s,
                                detail=f"support touches cosets {[int(t) for t in touched]}",
                            )
                        )
                norm_e = float(np.linalg.norm(e))
                if norm_e == 0.0:
                    continue
                for sigma in range(lat.index):
                    cut = np.where(labels == sigma, e, 0.0)
                    norm_cut = float(np.linalg.norm(cut))
                    if norm_cut == 0.0:
                        continue
                    coef, *_ = np.linalg.lstsq(e_all.T, cut, rcond=None)
                    resid = float(np.linalg.norm(cut - e_all.T @ coef))
                    if resid > 1e-8 * norm_cut:
                        total += 1
                        if len(violations) < MAX_REPORTED_VIOLATIONS:
                            violations.append(
                                Violation(
                                    check="coset-span",
                                    cell=g,
                                    generator=s,
                                    detail=(
                                        f"coset {sigma} cut leaves the generator span "
                                        f"(relative residual {resid / norm_cut:.3e})"
                                    ),
                                )
                            )
    return VerificationReport(
        passed=total == 0, checks=checks, violations=violations, n_violations=total
    )
