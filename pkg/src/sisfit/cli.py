"""Command line interface.

Four subcommands: ``synth`` writes sampled datasets, ``fit`` fits one
regime and saves a model directory, ``verify`` re-checks a saved model
against data, ``compare`` sweeps regimes and ranks and flags defects.
Exit codes: 0 success, 1 verification failure or defect, 2 usage or
input errors.  Reports are ``key: value`` lines; apart from the timing
line they are byte-identical across reruns and thread counts.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path

import numpy as np

from .discrete import (
    DiscreteDataset,
    DiscreteModel,
    DiscretePartition,
    fit_discrete,
    parse_discrete_dataset,
    parse_partition,
)
from .errors import SisfitError, ValidationError
from .extra import ExtraInvariantModel, fit_extra_invariant, verify_extra_invariance
from .hermitian import EIG_TOL_DEFAULT
from .lattice import make_dual_lattice, parse_basis
from .multitile import MultiTileModel, fit_multitile, verify_multitile, weight
from .sis import fit_sis, project_onto
from .spectral import (
    PAYLOAD_BINARY,
    PAYLOAD_CSV,
    ingest,
    synthesize,
    total_energy,
    write_dataset,
)
from . import storage

OUT_ENV = "SISFIT_OUT"

_FAMILY_FLAGS = {"gaussian": "sigma", "bspline": "order", "boxcar": "halfwidth"}


def _out_dir(args) -> Path:
    if getattr(args, "out", None):
        return Path(args.out)
    env = os.environ.get(OUT_ENV)
    return Path(env) if env else Path(".")


def _ranks(text: str) -> list[int]:
    try:
        vals = [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise ValidationError(f"expected a comma-separated integer list, got {text!r}") from None
    if not vals:
        raise ValidationError("empty integer list")
    return vals


def cmd_synth(args) -> int:
    family = args.family
    if family not in _FAMILY_FLAGS:
        raise ValidationError(f"unknown family {family!r} (known: {', '.join(sorted(_FAMILY_FLAGS))})")
    pname = _FAMILY_FLAGS[family]
    param = getattr(args, pname)
    if param is None:
        raise ValidationError(f"family {family!r} needs --{pname}")
    for other, flag in _FAMILY_FLAGS.items():
        if other != family and getattr(args, flag) is not None:
            raise ValidationError(f"--{flag} only applies to the {other!r} family")
    from .spectral import SpectralGrid

    grid = SpectralGrid(dim=args.dim, cells_per_dim=args.cells, trunc_radius=args.trunc)
    ds = synthesize(family, [param], grid)
    manifest = write_dataset(ds, _out_dir(args), payload_format=args.payload_format, stem=args.stem)
    print(f"manifest: {manifest}")
    return 0


def _require(args, flag: str, regime: str):
    val = getattr(args, flag.replace("-", "_"))
    if val is None:
        raise ValidationError(f"regime {regime!r} needs --{flag}")
    return val


def _forbid(args, flag: str, regime: str):
    if getattr(args, flag.replace("-", "_")) is not None:
        raise ValidationError(f"--{flag} does not apply to regime {regime!r}")


def _fit_once(args, regime: str):
    """Run one fit; returns (model, report_pairs, elapsed_seconds)."""
    t0 = time.perf_counter()
    if regime == "discrete":
        ds = parse_discrete_dataset(args.data)
        part = parse_partition(_require(args, "partition", regime), ds.dim)
        model = fit_discrete(ds, part, args.rank, tol=args.eig_tol)
        energy = float(ds.energies().sum())
        pairs = [
            ("regime", "discrete"),
            ("rank", model.rank),
            ("dim", ds.dim),
            ("sequences", ds.m),
            ("support_points", ds.n_points),
            ("blocks", part.n_blocks),
            ("allocation", " ".join(str(a) for a in model.allocation)),
            ("energy", repr(energy)),
            ("error", repr(model.error)),
        ]
        return model, part, pairs, time.perf_counter() - t0

    ds = ingest(args.data)
    energy = total_energy(ds)
    common = [
        ("rank", args.rank),
        ("grid", f"dim={ds.grid.dim} cells={ds.grid.cells_per_dim} trunc={ds.grid.trunc_radius}"),
        ("functions", ds.m),
        ("energy", repr(energy)),
    ]
    if regime == "sis":
        model = fit_sis(ds, args.rank, tol=args.eig_tol, threads=args.threads)
        pairs = [("regime", "sis")] + common + [("error", repr(model.error))]
    elif regime == "extra":
        lat = make_dual_lattice(parse_basis(_require(args, "dual-lattice", regime)))
        model = fit_extra_invariant(ds, lat, args.rank, tol=args.eig_tol, threads=args.threads)
        pairs = (
            [("regime", "extra")]
            + common
            + [
                ("dual_lattice", _require(args, "dual-lattice", regime)),
                ("cosets", lat.index),
                ("error", repr(model.error)),
            ]
        )
    elif regime == "pw":
        box = _require(args, "box", regime)
        model = fit_multitile(ds, args.rank, box, threads=args.threads)
        pairs = (
            [("regime", "pw")]
            + common
            + [
                ("box_radius", model.box_radius),
                ("error", repr(model.error)),
                ("tail", repr(model.tail)),
                ("total_unreachable", repr(model.error + model.tail)),
            ]
        )
    else:
        raise ValidationError(f"unknown regime {regime!r}")
    return model, None, pairs, time.perf_counter() - t0


def _check_fit_flags(args, regime: str) -> None:
    if regime != "extra":
        _forbid(args, "dual-lattice", regime)
    if regime != "pw":
        _forbid(args, "box", regime)
    if regime != "discrete":
        _forbid(args, "partition", regime)


def cmd_fit(args) -> int:
    regime = args.regime
    _check_fit_flags(args, regime)
    model, part, pairs, elapsed = _fit_once(args, regime)
    out = _out_dir(args)
    storage.save_model(model, out)
    if regime == "discrete":
        # keep the partition next to the model so verify is self-contained
        src = Path(args.partition)
        (out / storage.PARTITION_TXT).write_bytes(src.read_bytes())
    pairs = pairs + [("model_dir", str(out)), ("timing_seconds", f"{elapsed:.6f}")]
    lines = [f"{k}: {v}" for k, v in pairs]
    (out / "report.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    return 0


def _parseval_check(spectra: np.ndarray, tol: float = 1e-8):
    """Worst deviation from orthonormality of the nonzero fibers, per
    cell; returns list of (cell, deviation) violations."""
    bad = []
    ncells = spectra.shape[1]
    for g in range(ncells):
        e = spectra[:, g, :]
        nz = np.flatnonzero(np.any(e != 0, axis=1))
        if nz.size == 0:
            continue
        sub = e[nz]
        gram = sub @ sub.conj().T
        dev = float(np.abs(gram - np.eye(nz.size)).max())
        if dev > tol:
            bad.append((g, dev))
    return bad


def _verify_spectral(model, ds, args) -> list[str]:
    failures = []
    if model.grid != ds.grid:
        raise ValidationError(
            "model and dataset grids differ: "
            f"model ({model.grid.dim}, {model.grid.cells_per_dim}, {model.grid.trunc_radius}) "
            f"vs data ({ds.grid.dim}, {ds.grid.cells_per_dim}, {ds.grid.trunc_radius})"
        )
    energy = total_energy(ds)

    bad = _parseval_check(model.spectra)
    print(f"parseval: {'ok' if not bad else 'FAIL'}")
    for g, dev in bad[:8]:
        print(f"violation: [parseval] cell {g}: orthonormality deviation {dev:.3e}")
    if bad:
        failures.append("parseval")

    _, presid = project_onto(model, ds)
    diff = abs(float(presid.sum()) - model.error)
    ok = diff <= 1e-8 * (1.0 + energy)
    print(f"residual-identity: {'ok' if ok else 'FAIL'}")
    if not ok:
        print(
            f"violation: [residual-identity] projection residual {float(presid.sum())!r} "
            f"vs stored error {model.error!r}"
        )
        failures.append("residual-identity")

    if isinstance(model, ExtraInvariantModel):
        report = verify_extra_invariance(model, model.lattice)
        print(f"coset-support: {'ok' if report.passed else 'FAIL'}")
        for v in report.violations[:8]:
            print(f"violation: {v}")
        if not report.passed:
            failures.append("coset-support")
    return failures


def _verify_pw(model: MultiTileModel, ds, args) -> list[str]:
    failures = []
    if model.grid != ds.grid:
        raise ValidationError("model and dataset grids differ")
    energy = total_energy(ds)

    report = verify_multitile(model)
    print(f"tiles: {'ok' if report.passed else 'FAIL'}")
    for v in report.violations[:8]:
        print(f"violation: {v}")
    if not report.passed:
        failures.append("tiles")

    kk = ds.grid.translations
    inbox = np.flatnonzero(np.abs(kk).max(axis=1) <= model.box_radius)
    s = ds.samples
    w_all = (s.real**2 + s.imag**2).sum(axis=0)
    err = 0.0
    for g in range(ds.grid.n_cells):
        total = float(w_all[g, inbox].sum())
        kept = sum(weight(ds, g, model.chosen[g, s_]) for s_ in range(model.rank))
        err += total - kept
    err *= ds.grid.cell_volume
    tail = float(np.delete(w_all, inbox, axis=1).sum()) * ds.grid.cell_volume
    ok_err = abs(err - model.error) <= 1e-8 * (1.0 + energy)
    ok_tail = abs(tail - model.tail) <= 1e-8 * (1.0 + energy)
    print(f"residual-identity: {'ok' if ok_err else 'FAIL'}")
    if not ok_err:
        print(f"violation: [residual-identity] recomputed error {err!r} vs stored {model.error!r}")
        failures.append("residual-identity")
    print(f"tail: {'ok' if ok_tail else 'FAIL'}")
    if not ok_tail:
        print(f"violation: [tail] recomputed tail {tail!r} vs stored {model.tail!r}")
        failures.append("tail")
    return failures


def _verify_discrete(model: DiscreteModel, args) -> list[str]:
    failures = []
    ds = parse_discrete_dataset(args.data)
    if ds.dim != model.dim:
        raise ValidationError(f"data dimension {ds.dim} does not match model dimension {model.dim}")
    part = storage.load_partition_file(Path(args.model), ds.dim)
    energy = float(ds.energies().sum())

    gens = model.generators
    nzrows = np.flatnonzero(np.any(gens != 0, axis=1))
    dev = 0.0
    if nzrows.size:
        sub = gens[nzrows]
        gram = sub @ sub.conj().T
        dev = float(np.abs(gram - np.eye(nzrows.size)).max())
    ok = dev <= 1e-8
    print(f"orthonormal: {'ok' if ok else 'FAIL'}")
    if not ok:
        print(f"violation: [orthonormal] generator Gramian deviates by {dev:.3e}")
        failures.append("orthonormal")

    ok_support = True
    for s in nzrows:
        pos_idx = np.flatnonzero(gens[s] != 0)
        try:
            blocks = {part.label_index(model.support[i]) for i in pos_idx}
        except ValidationError as exc:
            print(f"violation: [block-support] generator {s}: {exc}")
            ok_support = False
            continue
        if len(blocks) > 1:
            print(f"violation: [block-support] generator {s} touches blocks {sorted(blocks)}")
            ok_support = False
    print(f"block-support: {'ok' if ok_support else 'FAIL'}")
    if not ok_support:
        failures.append("block-support")

    # explicit projection residual over the union of supports
    union = sorted(
        {tuple(int(x) for x in p) for p in ds.support}
        | {tuple(int(x) for x in p) for p in model.support}
    )
    col = {p: i for i, p in enumerate(union)}
    a = np.zeros((ds.m, len(union)), dtype=np.complex128)
    for i, p in enumerate(ds.support):
        a[:, col[tuple(int(x) for x in p)]] = ds.values[:, i]
    q = np.zeros((gens.shape[0], len(union)), dtype=np.complex128)
    for i, p in enumerate(model.support):
        q[:, col[tuple(int(x) for x in p)]] = gens[:, i]
    coef = a @ q.conj().T
    resid = a - coef @ q
    total = float((resid.real**2 + resid.imag**2).sum())
    ok = abs(total - model.error) <= 1e-8 * (1.0 + energy)
    print(f"residual-identity: {'ok' if ok else 'FAIL'}")
    if not ok:
        print(f"violation: [residual-identity] projection residual {total!r} vs stored {model.error!r}")
        failures.append("residual-identity")
    return failures


def cmd_verify(args) -> int:
    model = storage.load_model(args.model)
    if isinstance(model, MultiTileModel):
        print("regime: pw")
        failures = _verify_pw(model, ingest(args.data), args)
    elif isinstance(model, DiscreteModel):
        print("regime: discrete")
        failures = _verify_discrete(model, args)
    else:
        print(f"regime: {'extra' if isinstance(model, ExtraInvariantModel) else 'sis'}")
        failures = _verify_spectral(model, ingest(args.data), args)
    if failures:
        print(f"result: FAIL ({', '.join(failures)})")
        return 1
    print("result: pass")
    return 0


def cmd_compare(args) -> int:
    regimes = [r.strip() for r in args.regimes.split(",") if r.strip()]
    known = {"sis", "extra", "pw", "discrete"}
    for r in regimes:
        if r not in known:
            raise ValidationError(f"unknown regime {r!r} (known: {', '.join(sorted(known))})")
    if "discrete" in regimes and len(regimes) > 1:
        raise ValidationError("discrete data cannot be compared with spectral regimes")
    ranks = _ranks(args.ranks)
    if any(r < 1 for r in ranks):
        raise ValidationError(f"ranks must be positive, got {ranks}")

    rows = []  # (regime, rank, box or "", error, tail or "", total)
    defects = []

    if regimes == ["discrete"]:
        ds = parse_discrete_dataset(args.data)
        part = parse_partition(_require(args, "partition", "discrete"), ds.dim)
        energy = float(ds.energies().sum())
        from .discrete import error_discrete

        errs = [error_discrete(ds, part, r, tol=args.eig_tol) for r in ranks]
        for r, e in zip(ranks, errs):
            rows.append(("discrete", r, "", e, "", e))
        _check_monotone("discrete", ranks, errs, energy, defects)
    else:
        ds = ingest(args.data)
        energy = total_energy(ds)
        from .extra import error_extra
        from .sis import error_sis

        by_regime: dict[str, list[float]] = {}
        for regime in regimes:
            if regime == "sis":
                errs = [error_sis(ds, r, tol=args.eig_tol, threads=args.threads) for r in ranks]
                for r, e in zip(ranks, errs):
                    rows.append(("sis", r, "", e, "", e))
            elif regime == "extra":
                lat = make_dual_lattice(parse_basis(_require(args, "dual-lattice", "extra")))
                errs = [
                    error_extra(ds, lat, r, tol=args.eig_tol, threads=args.threads) for r in ranks
                ]
                for r, e in zip(ranks, errs):
                    rows.append(("extra", r, "", e, "", e))
            else:
                boxes = _ranks(args.boxes) if args.boxes else [ds.grid.trunc_radius]
                errs = []
                for r in ranks:
                    totals = []
                    for b in boxes:
                        mt = fit_multitile(ds, r, b, threads=args.threads)
                        rows.append(("pw", r, b, mt.error, mt.tail, mt.error + mt.tail))
                        totals.append(mt.error + mt.tail)
                    for i in range(1, len(totals)):
                        if totals[i] > totals[i - 1] + 1e-12 * energy:
                            defects.append(
                                f"pw rank {r}: total grows from box {boxes[i - 1]} to {boxes[i]} "
                                f"({totals[i - 1]!r} -> {totals[i]!r})"
                            )
                    errs.append(totals[-1])
                by_regime["pw"] = errs
                _check_monotone("pw", ranks, errs, energy, defects)
                continue
            by_regime[regime] = errs
            _check_monotone(regime, ranks, errs, energy, defects)

        if "sis" in by_regime and "extra" in by_regime:
            for r, es, ee in zip(ranks, by_regime["sis"], by_regime["extra"]):
                if ee < es - 1e-12 * energy:
                    defects.append(
                        f"rank {r}: extra-invariant error {ee!r} below unconstrained error {es!r}"
                    )

    header = f"{'regime':<9} {'rank':>4} {'box':>4} {'error':>24} {'tail':>24} {'total':>24}"
    print(header)
    for regime, r, b, e, t, tot in rows:
        print(f"{regime:<9} {r:>4} {str(b):>4} {e!r:>24} {str(t) if t == '' else repr(t):>24} {tot!r:>24}")
    for d in defects:
        print(f"defect: {d}")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write("regime,rank,box,error,tail,total\n")
            for regime, r, b, e, t, tot in rows:
                fh.write(f"{regime},{r},{b},{e!r},{'' if t == '' else repr(t)},{tot!r}\n")
            for d in defects:
                fh.write(f"# defect: {d}\n")
    return 1 if defects else 0


def _check_monotone(regime: str, ranks, errs, energy: float, defects: list) -> None:
    order = np.argsort(ranks, kind="stable")
    rr = [ranks[i] for i in order]
    ee = [errs[i] for i in order]
    for i in range(1, len(rr)):
        if ee[i] > ee[i - 1] + 1e-12 * energy:
            defects.append(
                f"{regime}: error grows from rank {rr[i - 1]} to {rr[i]} ({ee[i - 1]!r} -> {ee[i]!r})"
            )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sisfit",
        description="Fit nearest shift-invariant, extra-invariant, multi-tile and discrete subspaces to sampled spectra.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="sample a built-in function family onto a grid")
    p.add_argument("--family", required=True, help="gaussian, bspline or boxcar")
    p.add_argument("--sigma", type=float, help="gaussian width, positive")
    p.add_argument("--order", type=float, help="bspline order, nonnegative integer")
    p.add_argument("--halfwidth", type=float, help="boxcar half-width, positive")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--cells", type=int, required=True, help="cells per axis, even")
    p.add_argument("--trunc", type=int, required=True, help="translation truncation radius")
    p.add_argument(
        "--payload-format",
        default=PAYLOAD_BINARY,
        choices=[PAYLOAD_BINARY, PAYLOAD_CSV],
    )
    p.add_argument("--stem", default="dataset", help="basename for manifest and payload")
    p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or .)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("fit", help="fit one regime and save the model")
    p.add_argument("--regime", required=True, choices=["sis", "extra", "pw", "discrete"])
    p.add_argument("--data", required=True, help="dataset manifest (spectral) or text table (discrete)")
    p.add_argument("--rank", type=int, required=True, help="prescribed number of generators")
    p.add_argument("--dual-lattice", help="extra regime: lattice basis, row-major, rows ';'-separated")
    p.add_argument("--box", type=int, help="pw regime: translation box radius")
    p.add_argument("--partition", help="discrete regime: partition file")
    p.add_argument("--eig-tol", type=float, default=EIG_TOL_DEFAULT)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", help=f"model directory (default ${OUT_ENV} or .)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("verify", help="re-check a saved model against data")
    p.add_argument("--model", required=True, help="model directory")
    p.add_argument("--data", required=True)
    p.add_argument("--eig-tol", type=float, default=EIG_TOL_DEFAULT)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("compare", help="sweep regimes and ranks, flag defects")
    p.add_argument("--data", required=True)
    p.add_argument("--regimes", required=True, help="comma-separated: sis,extra,pw (or discrete alone)")
    p.add_argument("--ranks", required=True, help="comma-separated rank list")
    p.add_argument("--dual-lattice", help="lattice basis for the extra regime")
    p.add_argument("--boxes", help="pw regime: comma-separated box radii")
    p.add_argument("--partition", help="discrete regime: partition file")
    p.add_argument("--eig-tol", type=float, default=EIG_TOL_DEFAULT)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", help="also write the table as CSV to this file")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SisfitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
