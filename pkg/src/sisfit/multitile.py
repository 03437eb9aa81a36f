"""Nearest multi-tile spectrum model.

Here the fitted object is a set picked per cell: among the translations
inside a centered box, keep the ``rank`` with the largest sample energy.
The chosen set tiles the line/space ``rank`` times and splits into
``rank`` single-tile layers; its generators are one-hot fibers, hence
exactly orthonormal.  Energy at in-grid translations outside the box is
beyond reach of any choice and is reported separately as ``tail``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._parallel import run_chunked
from .errors import ValidationError
from .reports import VerificationReport, Violation
from .sis import _check_rank
from .spectral import SpectralDataset, SpectralGrid


@dataclass(eq=False)
class MultiTileModel:
    """Per-cell choice of ``rank`` translations inside the box of radius
    ``box_radius``; ``chosen[g]`` is lexicographically sorted."""

    grid: SpectralGrid
    rank: int
    box_radius: int
    chosen: np.ndarray
    residuals: np.ndarray
    error: float
    tail: float


@dataclass
class TileLayer:
    """One single-tile layer: ``translations[g]`` is the layer's pick at
    cell g."""

    index: int
    translations: np.ndarray


def _check_box(grid: SpectralGrid, rank: int, box_radius: int) -> int:
    b = int(box_radius)
    if b < 1 or b != box_radius:
        raise ValidationError(f"box radius must be a positive integer, got {box_radius!r}")
    if b > grid.trunc_radius:
        raise ValidationError(
            f"box radius {b} exceeds the grid truncation radius {grid.trunc_radius}"
        )
    capacity = (2 * b + 1) ** grid.dim
    if capacity < rank:
        raise ValidationError(
            f"box of radius {b} holds {capacity} translations, fewer than rank {rank}"
        )
    return b


def _weights(ds: SpectralDataset) -> np.ndarray:
    s = ds.samples
    return (s.real**2 + s.imag**2).sum(axis=0)


def weight(ds: SpectralDataset, g: int, k) -> float:
    """Total sample energy of all functions at cell g, translation k."""
    if not (0 <= g < ds.grid.n_cells):
        raise ValidationError(f"cell index {g} out of range 0..{ds.grid.n_cells - 1}")
    ki = ds.grid.translation_index(k)
    col = ds.samples[:, g, ki]
    return float(np.sum(col.real**2 + col.imag**2))


def fit_multitile(
    ds: SpectralDataset,
    rank: int,
    box_radius: int,
    *,
    threads: int = 1,
) -> MultiTileModel:
    """Pick, per cell, the ``rank`` heaviest translations in the box.

    Ties go to the lexicographically smallest translation.  The residual
    at a cell is the weight sum of the unchosen in-box translations;
    ``error`` is the quadrature sum of residuals and ``tail`` the
    quadrature energy at in-grid translations outside the box.
    """
    rank = _check_rank(rank)
    box = _check_box(ds.grid, rank, box_radius)
    kk = ds.grid.translations
    inbox = np.flatnonzero(np.abs(kk).max(axis=1) <= box)
    k_in = kk[inbox]

    w_all = _weights(ds)
    w_in = w_all[:, inbox]
    w_out = np.delete(w_all, inbox, axis=1)
    ncells = ds.grid.n_cells

    # stable argsort on negated weights: ties keep lexicographic order,
    # because in-box translations are already lexicographically sorted
    order = np.argsort(-w_in, axis=1, kind="stable")

    chosen = np.zeros((ncells, rank, ds.grid.dim), dtype=np.int64)
    residuals = np.zeros(ncells)

    def work(lo: int, hi: int) -> None:
        for g in range(lo, hi):
            top = order[g, :rank]
            vecs = k_in[top]
            lex = np.lexsort(vecs.T[::-1])
            chosen[g] = vecs[lex]
            residuals[g] = float(np.sum(w_in[g, order[g, rank:]]))

    run_chunked(work, ncells, threads)
    error = float(residuals.sum()) * ds.grid.cell_volume
    tail = float(w_out.sum()) * ds.grid.cell_volume
    return MultiTileModel(
        grid=ds.grid,
        rank=rank,
        box_radius=box,
        chosen=chosen,
        residuals=residuals,
        error=error,
        tail=tail,
    )


def decompose_layers(model: MultiTileModel) -> list[TileLayer]:
    """Split the chosen sets into ``rank`` single-tile layers (layer s
    takes the s-th translation of each cell's sorted choice)."""
    return [
        TileLayer(index=s, translations=model.chosen[:, s, :].copy())
        for s in range(model.rank)
    ]


def multitile_spectra(model: MultiTileModel) -> np.ndarray:
    """One-hot generator fibers of the layers, shape (rank, cells,
    translations).  Exactly orthonormal per cell."""
    ncells = model.grid.n_cells
    nk = model.grid.n_translations
    spectra = np.zeros((model.rank, ncells, nk), dtype=np.complex128)
    for s in range(model.rank):
        for g in range(ncells):
            ki = model.grid.translation_index(model.chosen[g, s])
            spectra[s, g, ki] = 1.0
    return spectra


def verify_multitile(model: MultiTileModel) -> VerificationReport:
    """Check the chosen sets: right count, inside the box, pairwise
    distinct, and one-hot generators exactly orthonormal per cell."""
    checks = ["tile-count", "tile-box", "tile-distinct", "orthonormal"]
    violations: list[Violation] = []
    total = 0

    def add(check, cell, gen, detail):
        nonlocal total
        total += 1
        if len(violations) < 64:
            violations.append(Violation(check=check, cell=cell, generator=gen, detail=detail))

    chosen = np.asarray(model.chosen)
    if chosen.ndim != 3 or chosen.shape[0] != model.grid.n_cells or chosen.shape[2] != model.grid.dim:
        raise ValidationError(f"chosen array shape {chosen.shape} does not match the grid")
    for g in range(model.grid.n_cells):
        rows = [tuple(int(x) for x in v) for v in chosen[g]]
        if len(rows) != model.rank:
            add("tile-count", g, -1, f"{len(rows)} translations, expected {model.rank}")
        for s, v in enumerate(rows):
            if max(abs(c) for c in v) > model.box_radius:
                add("tile-box", g, s, f"translation {v} outside box radius {model.box_radius}")
        if len(set(rows)) != len(rows):
            dup = next(v for v in rows if rows.count(v) > 1)
            add("tile-distinct", g, -1, f"translation {dup} chosen more than once")

    if total == 0:
        spectra = multitile_spectra(model)
        eye = np.eye(model.rank, dtype=np.complex128)
        for g in range(model.grid.n_cells):
            e = spectra[:, g, :]
            gram = e @ e.conj().T
            if not np.array_equal(gram, eye):
                add("orthonormal", g, -1, "layer fibers are not exactly orthonormal")

    return VerificationReport(
        passed=total == 0, checks=checks, violations=violations, n_violations=total
    )


def error_multitile_series(
    ds: SpectralDataset,
    rank: int,
    box_radii,
    *,
    threads: int = 1,
) -> list[float]:
    """Total unreachable energy (error plus out-of-box tail) for an
    increasing sequence of box radii.  Non-increasing in the radius."""
    radii = [int(b) for b in box_radii]
    if not radii:
        raise ValidationError("box_radii must not be empty")
    if any(b2 <= b1 for b1, b2 in zip(radii, radii[1:])):
        raise ValidationError(f"box radii must be strictly increasing, got {radii}")
    out = []
    for b in radii:
        model = fit_multitile(ds, rank, b, threads=threads)
        out.append(model.error + model.tail)
    return out
