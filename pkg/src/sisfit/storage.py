"""On-disk model layout.

A fitted model is a directory: ``model.json`` with the shape and scalar
results, payloads next to it (generator spectra as little-endian complex
doubles, tables as plain text).  Floats in text files use ``repr``, so
values round-trip exactly and reruns produce byte-identical files.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .discrete import (
    DiscreteModel,
    parse_partition,
    write_discrete_sequences,
)
from .errors import ValidationError
from .extra import ExtraInvariantModel
from .lattice import format_basis, make_dual_lattice, parse_basis
from .multitile import MultiTileModel, multitile_spectra
from .sis import FittedModel
from .spectral import SpectralGrid

MODEL_JSON = "model.json"
GENERATORS_BIN = "generators.bin"
GENERATORS_TXT = "generators.txt"
RESIDUALS_CSV = "residuals.csv"
EIGENCURVES_CSV = "eigencurves.csv"
HOME_COSETS_CSV = "home_cosets.csv"
CHOSEN_CSV = "chosen.csv"
SELECTED_CSV = "selected.csv"
PARTITION_TXT = "partition.txt"


def _grid_json(grid: SpectralGrid) -> dict:
    return {
        "dim": grid.dim,
        "cells_per_dim": grid.cells_per_dim,
        "trunc_radius": grid.trunc_radius,
    }


def _write_json(out: Path, payload: dict) -> None:
    (out / MODEL_JSON).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _write_residuals(out: Path, residuals: np.ndarray) -> None:
    with open(out / RESIDUALS_CSV, "w") as fh:
        for g, r in enumerate(residuals):
            fh.write(f"{g},{float(r)!r}\n")


def _write_eigencurves(out: Path, grid: SpectralGrid, eigenvalues: np.ndarray) -> None:
    with open(out / EIGENCURVES_CSV, "w") as fh:
        for g in range(grid.n_cells):
            center = ",".join(repr(float(c)) for c in grid.cell_centers[g])
            vals = ",".join(repr(float(v)) for v in eigenvalues[g])
            fh.write(f"{g},{center},{vals}\n")


def _write_spectra(out: Path, spectra: np.ndarray) -> None:
    spectra.astype("<c16").tofile(out / GENERATORS_BIN)


def _read_spectra(path: Path, shape) -> np.ndarray:
    raw = np.fromfile(path, dtype="<c16")
    expected = int(np.prod(shape))
    if raw.size != expected:
        raise ValidationError(f"{path} holds {raw.size} samples, expected {expected}")
    return raw.astype(np.complex128).reshape(shape)


def save_model(model, out_dir) -> Path:
    """Serialize any fitted model into ``out_dir``; returns the model.json
    path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if isinstance(model, MultiTileModel):
        _save_pw(model, out)
    elif isinstance(model, ExtraInvariantModel):
        _save_extra(model, out)
    elif isinstance(model, FittedModel):
        _save_sis(model, out)
    elif isinstance(model, DiscreteModel):
        _save_discrete(model, out)
    else:
        raise ValidationError(f"cannot serialize object of type {type(model).__name__}")
    return out / MODEL_JSON


def _save_sis(model: FittedModel, out: Path, regime: str = "sis", extra_fields: dict | None = None) -> None:
    payload = {
        "regime": regime,
        "rank": model.rank,
        "error": model.error,
        "grid": _grid_json(model.grid),
        "n_generators": int(model.spectra.shape[0]),
        "payload_generators": GENERATORS_BIN,
    }
    if extra_fields:
        payload.update(extra_fields)
    _write_json(out, payload)
    _write_spectra(out, model.spectra)
    _write_residuals(out, model.residuals)
    _write_eigencurves(out, model.grid, model.eigenvalues)


def _save_extra(model: ExtraInvariantModel, out: Path) -> None:
    _save_sis(model, out, regime="extra", extra_fields={"dual_lattice": format_basis(model.lattice.basis)})
    with open(out / HOME_COSETS_CSV, "w") as fh:
        for g in range(model.grid.n_cells):
            for s in range(model.rank):
                fh.write(f"{g},{s},{int(model.home_cosets[g, s])},{int(model.block_ranks[g, s])}\n")


def _save_pw(model: MultiTileModel, out: Path) -> None:
    payload = {
        "regime": "pw",
        "rank": model.rank,
        "box_radius": model.box_radius,
        "error": model.error,
        "tail": model.tail,
        "grid": _grid_json(model.grid),
        "payload_generators": GENERATORS_BIN,
        "payload_chosen": CHOSEN_CSV,
    }
    _write_json(out, payload)
    _write_spectra(out, multitile_spectra(model))
    _write_residuals(out, model.residuals)
    with open(out / CHOSEN_CSV, "w") as fh:
        for g in range(model.grid.n_cells):
            flat = ",".join(str(int(x)) for x in model.chosen[g].ravel())
            fh.write(f"{g},{flat}\n")


def _save_discrete(model: DiscreteModel, out: Path) -> None:
    payload = {
        "regime": "discrete",
        "dim": model.dim,
        "rank": model.rank,
        "error": model.error,
        "labels": [str(lab) for lab in model.labels],
        "allocation": [int(a) for a in model.allocation],
        "payload_generators": GENERATORS_TXT,
    }
    _write_json(out, payload)
    write_discrete_sequences(model.support, model.generators, out / GENERATORS_TXT)
    with open(out / SELECTED_CSV, "w") as fh:
        for s, (lam, label, j) in enumerate(model.selected):
            fh.write(f"{s},{label},{j},{float(lam)!r}\n")


def load_model(model_dir):
    """Load a model directory written by ``save_model``.

    Returns the reconstructed model object.  Unsaved diagnostic fields
    (full eigenvalue rows beyond what the curve table holds) come back
    zero-padded.
    """
    mdir = Path(model_dir)
    jpath = mdir / MODEL_JSON
    if not jpath.is_file():
        raise ValidationError(f"model description not found: {jpath}")
    try:
        meta = json.loads(jpath.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{jpath} is not valid JSON: {exc}") from None
    regime = meta.get("regime")
    if regime in ("sis", "extra"):
        return _load_spectral(mdir, meta, regime)
    if regime == "pw":
        return _load_pw(mdir, meta)
    if regime == "discrete":
        return _load_discrete(mdir, meta)
    raise ValidationError(f"{jpath}: unknown regime {regime!r}")


def _load_grid(meta: dict) -> SpectralGrid:
    g = meta.get("grid")
    if not isinstance(g, dict):
        raise ValidationError("model.json is missing the grid description")
    return SpectralGrid(
        dim=int(g["dim"]),
        cells_per_dim=int(g["cells_per_dim"]),
        trunc_radius=int(g["trunc_radius"]),
    )


def _load_residuals(mdir: Path, ncells: int) -> np.ndarray:
    residuals = np.zeros(ncells)
    seen = 0
    with open(mdir / RESIDUALS_CSV) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            g_str, val = line.split(",")
            residuals[int(g_str)] = float(val)
            seen += 1
    if seen != ncells:
        raise ValidationError(f"{mdir / RESIDUALS_CSV}: {seen} rows, expected {ncells}")
    return residuals


def _load_eigencurves(mdir: Path, grid: SpectralGrid, rank: int) -> np.ndarray:
    eigenvalues = np.zeros((grid.n_cells, rank))
    path = mdir / EIGENCURVES_CSV
    if not path.is_file():
        return eigenvalues
    with open(path) as fh:
        for line in fh:
            parts = line.strip().split(",")
            if len(parts) < 1 + grid.dim + rank:
                raise ValidationError(f"{path}: malformed row {line.strip()!r}")
            g = int(parts[0])
            eigenvalues[g] = [float(x) for x in parts[1 + grid.dim :]]
    return eigenvalues


def _load_spectral(mdir: Path, meta: dict, regime: str):
    grid = _load_grid(meta)
    rank = int(meta["rank"])
    n_gen = int(meta.get("n_generators", rank))
    spectra = _read_spectra(mdir / meta.get("payload_generators", GENERATORS_BIN),
                            (n_gen, grid.n_cells, grid.n_translations))
    residuals = _load_residuals(mdir, grid.n_cells)
    eigenvalues = _load_eigencurves(mdir, grid, rank)
    error = float(meta["error"])
    if regime == "sis":
        return FittedModel(
            grid=grid, rank=rank, eigenvalues=eigenvalues, spectra=spectra,
            residuals=residuals, error=error,
        )
    lat = make_dual_lattice(parse_basis(meta["dual_lattice"]))
    home = np.full((grid.n_cells, rank), -1, dtype=np.int64)
    branks = np.full((grid.n_cells, rank), -1, dtype=np.int64)
    with open(mdir / HOME_COSETS_CSV) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            g_str, s_str, c_str, r_str = line.split(",")
            home[int(g_str), int(s_str)] = int(c_str)
            branks[int(g_str), int(s_str)] = int(r_str)
    return ExtraInvariantModel(
        grid=grid, rank=rank, eigenvalues=eigenvalues, spectra=spectra,
        residuals=residuals, error=error, lattice=lat, home_cosets=home,
        block_ranks=branks,
    )


def _load_pw(mdir: Path, meta: dict) -> MultiTileModel:
    grid = _load_grid(meta)
    rank = int(meta["rank"])
    chosen = np.zeros((grid.n_cells, rank, grid.dim), dtype=np.int64)
    with open(mdir / meta.get("payload_chosen", CHOSEN_CSV)) as fh:
        for line in fh:
            parts = line.strip().split(",")
            if len(parts) != 1 + rank * grid.dim:
                raise ValidationError(
                    f"{mdir / CHOSEN_CSV}: expected {1 + rank * grid.dim} columns, got {len(parts)}"
                )
            g = int(parts[0])
            chosen[g] = np.array([int(x) for x in parts[1:]]).reshape(rank, grid.dim)
    return MultiTileModel(
        grid=grid,
        rank=rank,
        box_radius=int(meta["box_radius"]),
        chosen=chosen,
        residuals=_load_residuals(mdir, grid.n_cells),
        error=float(meta["error"]),
        tail=float(meta["tail"]),
    )


def _load_discrete(mdir: Path, meta: dict):
    from .discrete import DiscreteDataset, parse_discrete_dataset

    rank = int(meta["rank"])
    dim = int(meta["dim"])
    gpath = mdir / meta.get("payload_generators", GENERATORS_TXT)
    has_rows = gpath.is_file() and any(
        ln.strip() and not ln.strip().startswith("#") for ln in gpath.read_text().splitlines()
    )
    if has_rows:
        gen_ds = parse_discrete_dataset(gpath)
    else:
        # every generator was the zero sequence; the text format drops
        # exact zeros, leaving nothing to parse
        gen_ds = DiscreteDataset.from_sequences(dim, [{} for _ in range(rank)])
    selected = []
    spath = mdir / SELECTED_CSV
    if spath.is_file():
        with open(spath) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                _, label, j, lam = line.split(",")
                selected.append((float(lam), label, int(j)))
    # sequences parse back densely over their own support; pad the
    # generator matrix out to the declared rank (zero rows are dropped by
    # the text format)
    generators = np.zeros((rank, gen_ds.n_points), dtype=np.complex128)
    generators[: gen_ds.m] = gen_ds.values
    return DiscreteModel(
        dim=int(meta["dim"]),
        rank=rank,
        support=gen_ds.support,
        generators=generators,
        selected=selected,
        allocation=[int(a) for a in meta.get("allocation", [])],
        labels=list(meta.get("labels", [])),
        error=float(meta["error"]),
    )


def load_partition_file(mdir: Path, dim: int):
    return parse_partition(Path(mdir) / PARTITION_TXT, dim)
