"""Sampled Fourier data on a uniform grid over the unit cell.

A grid fixes the sampling layout: the cube (-1/2, 1/2)^d is split into
``cells_per_dim`` cells per axis, each cell represented by its midpoint
omega_g, and every function is observed at the points omega_g + k for
integer translations k with max-norm at most ``trunc_radius``.  A dataset
is the resulting (m, n_cells, n_translations) array of complex samples.

Datasets live on disk as a small JSON manifest next to a payload that is
either raw little-endian complex doubles or a plain text table; see
``ingest`` and ``write_dataset``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ValidationError

PAYLOAD_BINARY = "binary-c64le"
PAYLOAD_CSV = "csv"

_MANIFEST_KEYS = ("dim", "m", "cells_per_dim", "trunc_radius", "payload_path", "payload_format")


@dataclass
class SpectralGrid:
    """Sampling layout: cell midpoints and the truncated translation set.

    Cells are indexed lexicographically by their d-dimensional multi-index;
    translations are the integer vectors with ||k||_inf <= trunc_radius in
    lexicographic order.  Equality compares the three defining integers.
    """

    dim: int
    cells_per_dim: int
    trunc_radius: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValidationError(f"dim must be at least 1, got {self.dim}")
        g = self.cells_per_dim
        if g < 2 or g % 2 != 0:
            raise ValidationError(f"cells_per_dim must be a positive even integer, got {g}")
        if self.trunc_radius < 1:
            raise ValidationError(f"trunc_radius must be at least 1, got {self.trunc_radius}")
        axis = -0.5 + (np.arange(g) + 0.5) / g
        mesh = np.meshgrid(*([axis] * self.dim), indexing="ij")
        self.cell_centers = np.stack([m.ravel() for m in mesh], axis=1)
        n = self.trunc_radius
        kaxis = np.arange(-n, n + 1)
        kmesh = np.meshgrid(*([kaxis] * self.dim), indexing="ij")
        self.translations = np.stack([m.ravel() for m in kmesh], axis=1).astype(np.int64)
        self.cell_volume = 1.0 / (g**self.dim)
        self._k_index = {tuple(int(x) for x in k): i for i, k in enumerate(self.translations)}

    @property
    def n_cells(self) -> int:
        return self.cell_centers.shape[0]

    @property
    def n_translations(self) -> int:
        return self.translations.shape[0]

    def translation_index(self, k) -> int:
        """Index of integer vector ``k`` in ``translations``; rejects
        vectors outside the truncation box."""
        key = tuple(int(x) for x in np.asarray(k).ravel())
        if len(key) != self.dim:
            raise ValidationError(f"expected a translation of length {self.dim}, got {key}")
        try:
            return self._k_index[key]
        except KeyError:
            raise ValidationError(
                f"translation {key} outside the truncation box (radius {self.trunc_radius})"
            ) from None


@dataclass(eq=False)
class SpectralDataset:
    """Complex samples of m functions on a grid: ``samples[j, g, k]`` is
    function j at cell g, translation index k."""

    grid: SpectralGrid
    samples: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.samples)
        if arr.ndim != 3:
            raise ValidationError(f"samples must be 3-d (m, cells, translations), got shape {arr.shape}")
        m, nc, nk = arr.shape
        if m < 1:
            raise ValidationError("dataset needs at least one function")
        if nc != self.grid.n_cells or nk != self.grid.n_translations:
            raise ValidationError(
                f"samples shape {arr.shape} does not match grid "
                f"({self.grid.n_cells} cells, {self.grid.n_translations} translations)"
            )
        arr = arr.astype(np.complex128, copy=False)
        finite = np.isfinite(arr.real) & np.isfinite(arr.imag)
        if not finite.all():
            j, g, ki = np.argwhere(~finite)[0]
            kvec = tuple(int(x) for x in self.grid.translations[ki])
            raise ValidationError(f"non-finite sample at (j={j}, g={g}, k={kvec})")
        self.samples = arr

    @property
    def m(self) -> int:
        return int(self.samples.shape[0])


_FAMILY_PARAM = {"gaussian": "sigma", "bspline": "order", "boxcar": "halfwidth"}


def synthesize(family: str, params, grid: SpectralGrid) -> SpectralDataset:
    """Sample a named single-function family on a grid.

    Families (xi runs over sampling points, coordinatewise products):

    - ``gaussian(sigma)``, sigma > 0: exp(-pi sigma^2 |xi|^2)
    - ``bspline(n)``, integer n >= 0: prod_c (sin(pi xi_c) / (pi xi_c))^(n+1)
    - ``boxcar(a)``, a > 0: prod_c sin(2 pi a xi_c) / (pi xi_c), value 2a at 0
    """
    if family not in _FAMILY_PARAM:
        known = ", ".join(sorted(_FAMILY_PARAM))
        raise ValidationError(f"unknown family {family!r} (known: {known})")
    params = list(np.atleast_1d(params))
    if len(params) != 1:
        raise ValidationError(f"family {family!r} takes one parameter, got {len(params)}")
    p = params[0]

    # evaluation points, shape (n_cells, n_translations, dim)
    xi = grid.cell_centers[:, None, :] + grid.translations[None, :, :]

    if family == "gaussian":
        sigma = float(p)
        if sigma <= 0:
            raise ValidationError(f"gaussian sigma must be positive, got {sigma}")
        vals = np.exp(-np.pi * sigma**2 * np.sum(xi**2, axis=2))
    elif family == "bspline":
        if float(p) != int(p) or int(p) < 0:
            raise ValidationError(f"bspline order must be a nonnegative integer, got {p}")
        n = int(p)
        vals = np.prod(np.sinc(xi) ** (n + 1), axis=2)
    else:
        a = float(p)
        if a <= 0:
            raise ValidationError(f"boxcar halfwidth must be positive, got {a}")
        vals = np.prod(2.0 * a * np.sinc(2.0 * a * xi), axis=2)

    return SpectralDataset(grid=grid, samples=vals[None, :, :].astype(np.complex128))


def fiber(ds: SpectralDataset, g: int, j: int) -> np.ndarray:
    """Copy of the sample vector of function j across translations at cell g."""
    if not (0 <= g < ds.grid.n_cells):
        raise ValidationError(f"cell index {g} out of range 0..{ds.grid.n_cells - 1}")
    if not (0 <= j < ds.m):
        raise ValidationError(f"function index {j} out of range 0..{ds.m - 1}")
    return ds.samples[j, g, :].copy()


def gramian(ds: SpectralDataset, g: int, mask=None) -> np.ndarray:
    """m x m Hermitian Gramian of the fibers at cell g.

    ``mask`` restricts the inner products to a subset of translations:
    either a boolean array over translation indices or a predicate taking
    an integer vector.  The result is explicitly symmetrized.
    """
    if not (0 <= g < ds.grid.n_cells):
        raise ValidationError(f"cell index {g} out of range 0..{ds.grid.n_cells - 1}")
    f = np.ascontiguousarray(ds.samples[:, g, :])
    if mask is not None:
        if callable(mask):
            sel = np.array([bool(mask(k)) for k in ds.grid.translations])
        else:
            sel = np.asarray(mask, dtype=bool)
            if sel.shape != (ds.grid.n_translations,):
                raise ValidationError(
                    f"mask shape {sel.shape} does not match {ds.grid.n_translations} translations"
                )
        f = f[:, sel]
    gm = f @ f.conj().T
    return (gm + gm.conj().T) / 2.0


def energy_report(ds: SpectralDataset) -> np.ndarray:
    """Quadrature energy of each function: sum of squared magnitudes
    times the cell volume."""
    s = ds.samples
    return (s.real**2 + s.imag**2).sum(axis=(1, 2)) * ds.grid.cell_volume


def total_energy(ds: SpectralDataset) -> float:
    return float(energy_report(ds).sum())


def ingest(manifest_path) -> SpectralDataset:
    """Load a dataset from its JSON manifest.

    The manifest must carry exactly the fields dim, m, cells_per_dim,
    trunc_radius, payload_path and payload_format; payload_path is
    resolved relative to the manifest.  Shape mismatches, non-finite
    samples and malformed payloads are rejected with locations.
    """
    path = Path(manifest_path)
    if not path.is_file():
        raise ValidationError(f"manifest not found: {path}")
    try:
        manifest = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"manifest {path} is not valid JSON: {exc}") from None
    missing = [k for k in _MANIFEST_KEYS if k not in manifest]
    if missing:
        raise ValidationError(f"manifest {path} missing fields: {', '.join(missing)}")

    try:
        dim = int(manifest["dim"])
        m = int(manifest["m"])
        cells = int(manifest["cells_per_dim"])
        trunc = int(manifest["trunc_radius"])
    except (TypeError, ValueError):
        raise ValidationError(f"manifest {path} has non-integer shape fields") from None
    if m < 1:
        raise ValidationError(f"manifest m must be at least 1, got {m}")
    grid = SpectralGrid(dim=dim, cells_per_dim=cells, trunc_radius=trunc)

    payload = path.parent / str(manifest["payload_path"])
    fmt = manifest["payload_format"]
    if not payload.is_file():
        raise ValidationError(f"payload not found: {payload}")
    expected = m * grid.n_cells * grid.n_translations

    if fmt == PAYLOAD_BINARY:
        raw = np.fromfile(payload, dtype="<c16")
        if raw.size != expected:
            raise ValidationError(
                f"payload {payload} has {raw.size} samples, expected {expected}"
            )
        samples = raw.astype(np.complex128).reshape(m, grid.n_cells, grid.n_translations)
    elif fmt == PAYLOAD_CSV:
        samples = _read_csv_payload(payload, grid, m, expected)
    else:
        raise ValidationError(f"unknown payload format {fmt!r}")
    return SpectralDataset(grid=grid, samples=samples)


def _read_csv_payload(payload: Path, grid: SpectralGrid, m: int, expected: int) -> np.ndarray:
    samples = np.zeros((m, grid.n_cells, grid.n_translations), dtype=np.complex128)
    seen = np.zeros((m, grid.n_cells, grid.n_translations), dtype=bool)
    d = grid.dim
    with open(payload) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = [tok.strip() for tok in line.split(",")]
            if len(parts) != 2 + d + 2:
                raise ValidationError(
                    f"{payload}:{lineno}: expected {2 + d + 2} columns, got {len(parts)}"
                )
            try:
                j = int(parts[0])
                g = int(parts[1])
                kvec = [int(tok) for tok in parts[2 : 2 + d]]
                re = float(parts[2 + d])
                im = float(parts[3 + d])
            except ValueError as exc:
                raise ValidationError(f"{payload}:{lineno}: {exc}") from None
            if not (0 <= j < m):
                raise ValidationError(f"{payload}:{lineno}: function index {j} out of range")
            if not (0 <= g < grid.n_cells):
                raise ValidationError(f"{payload}:{lineno}: cell index {g} out of range")
            ki = grid.translation_index(kvec)
            if seen[j, g, ki]:
                raise ValidationError(
                    f"{payload}:{lineno}: duplicate sample for (j={j}, g={g}, k={tuple(kvec)})"
                )
            seen[j, g, ki] = True
            samples[j, g, ki] = complex(re, im)
    n_seen = int(seen.sum())
    if n_seen != expected:
        raise ValidationError(f"payload {payload} has {n_seen} samples, expected {expected}")
    return samples


def write_dataset(ds: SpectralDataset, out_dir, payload_format: str = PAYLOAD_BINARY, stem: str = "dataset") -> Path:
    """Write manifest plus payload into ``out_dir``; returns the manifest path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if payload_format == PAYLOAD_BINARY:
        payload_name = f"{stem}.bin"
        ds.samples.astype("<c16").tofile(out / payload_name)
    elif payload_format == PAYLOAD_CSV:
        payload_name = f"{stem}.csv"
        with open(out / payload_name, "w") as fh:
            for j in range(ds.m):
                for g in range(ds.grid.n_cells):
                    for ki, k in enumerate(ds.grid.translations):
                        z = ds.samples[j, g, ki]
                        kcols = ",".join(str(int(x)) for x in k)
                        fh.write(f"{j},{g},{kcols},{float(z.real)!r},{float(z.imag)!r}\n")
    else:
        raise ValidationError(f"unknown payload format {payload_format!r}")
    manifest = {
        "dim": ds.grid.dim,
        "m": ds.m,
        "cells_per_dim": ds.grid.cells_per_dim,
        "trunc_radius": ds.grid.trunc_radius,
        "payload_path": payload_name,
        "payload_format": payload_format,
    }
    mpath = out / f"{stem}.json"
    mpath.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return mpath
