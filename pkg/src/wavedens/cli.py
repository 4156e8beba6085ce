"""Command-line interface.

Subcommands: fit, eval, bench, check, wavelet-table.  Exit codes: 0 success,
1 usage, 2 data error, 3 numeric or degenerate error.  Diagnostics go to
stderr; data goes to the requested files or stdout.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings

import numpy as np

from . import __version__
from .classical import fit_classical, rescale_classical
from .errors import DataError, EstimationError, WavedensError
from .estimator import (
    EstimatorConfig,
    fit_model,
    model_from_file,
    rescale_to_domain,
    write_coefficients,
    AffineMap,
)
from .metrics import GridSpec, grid_eval
from .neighbors import knn_stats, validate_k
from .simulation import (
    BenchmarkConfig,
    exp_law_check,
    ks_exponential,
    moment_identity_check,
    run_benchmark,
)
from .wavelets import build_family, cached_family

USAGE_EXIT = 1
DATA_EXIT = 2
NUMERIC_EXIT = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_EXIT)


def _parse_wavelet(text: str) -> int:
    raw = text.lower().removeprefix("db")
    try:
        return int(raw)
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse wavelet order from {text!r}")


def read_points_csv(path, dim: int | None = None) -> np.ndarray:
    """Read an (n, d) point CSV: comma separated, '.' decimal, optional
    single header line, '#' comment lines allowed."""
    rows = []
    d = dim
    header_seen = False
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            fields = text.split(",")
            try:
                values = [float(fld) for fld in fields]
            except ValueError:
                if not rows and not header_seen:
                    # a single non-numeric line before any data is the header
                    header_seen = True
                    if d is None:
                        d = len(fields)
                    continue
                raise DataError(f"{path}: line {lineno}: cannot parse row {text!r}")
            if d is None:
                d = len(values)
            if len(values) != d:
                raise DataError(
                    f"{path}: line {lineno}: expected {d} columns, got {len(values)}"
                )
            rows.append(values)
    if not rows:
        raise DataError(f"{path}: no data rows")
    return np.asarray(rows, dtype=float)


def _provenance(args, seed=None) -> dict:
    flags = {key: val for key, val in vars(args).items() if key != "func"}
    for key, val in list(flags.items()):
        if isinstance(val, np.ndarray):
            flags[key] = val.tolist()
    return {"artifact": f"wavedens {__version__}", "flags": flags, "seed": seed}


def _write_field_csv(path_or_handle, centers, columns, header, provenance_line):
    own = isinstance(path_or_handle, str)
    handle = open(path_or_handle, "w", encoding="utf-8") if own else path_or_handle
    try:
        handle.write(provenance_line + "\n")
        handle.write(header + "\n")
        for i in range(centers.shape[0]):
            coords = ",".join(repr(float(c)) for c in centers[i])
            vals = ",".join(repr(float(col[i])) for col in columns)
            handle.write(f"{coords},{vals}\n")
    finally:
        if own:
            handle.close()


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_fit(args) -> int:
    points = read_points_csv(args.points, args.dim)
    affine = None
    if args.rescale:
        points, affine = rescale_to_domain(points, padding=args.pad)
    n = points.shape[0]
    if args.k >= n:
        raise DataError(f"k={args.k} needs at least k+1 points, got {n}")
    verdict = validate_k(n, args.k)
    if not verdict.ok:
        print(f"warning: {verdict.message}", file=sys.stderr)
    config = EstimatorConfig(
        wavelet_order=args.wavelet,
        j0=args.j0,
        J=args.J,
        k=args.k,
        normalize=not args.no_normalize,
        threshold_constant=args.threshold,
    )
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        if args.estimator == "classical":
            model = fit_classical(points, config)
            if not args.no_normalize:
                model = rescale_classical(model, GridSpec.unit(points.shape[1], args.grid or 128))
        else:
            model = fit_model(points, config)
    write_coefficients(
        args.output,
        model.coefficients,
        domain=np.column_stack([np.zeros(points.shape[1]), np.ones(points.shape[1])]),
        affine=affine,
        provenance=_provenance(args, args.seed),
    )
    print(f"wrote {args.output} ({len(model.coefficients.entries)} coefficients)", file=sys.stderr)
    if args.grid:
        grid = GridSpec.unit(points.shape[1], args.grid)
        field = grid_eval(model, grid)
        out = args.grid_output or args.output.rsplit(".", 1)[0] + ".grid.csv"
        centers = grid.cell_centers()
        header = ",".join(f"x{a + 1}" for a in range(grid.d)) + ",density"
        _write_field_csv(
            out, centers, [field.values.ravel()], header,
            f"# wavedens {__version__} fit grid; seed={args.seed}",
        )
        print(f"wrote {out}", file=sys.stderr)
    return 0


def cmd_eval(args) -> int:
    model, extras = model_from_file(args.coefficients)
    affine = None
    if "affine" in extras and args.data_coords:
        aff = extras["affine"]
        affine = AffineMap(
            scale=np.asarray(aff["scale"], dtype=float),
            offset=np.asarray(aff["offset"], dtype=float),
        )
    if args.points is not None:
        pts = read_points_csv(args.points, model.d)
        if pts.shape[1] != model.d:
            raise DataError(f"points have dimension {pts.shape[1]}, model expects {model.d}")
    elif args.grid is not None:
        box = extras.get("domain")
        grid = (
            GridSpec.from_box(box, args.grid) if box is not None else GridSpec.unit(model.d, args.grid)
        )
        pts = grid.cell_centers()
    else:
        raise DataError("need a points CSV or --grid R")
    eval_pts = affine.forward(pts) if affine is not None else pts
    g_vals = model.reconstruct(eval_pts)
    f_vals = model.density(eval_pts)
    if affine is not None:
        f_vals = f_vals * affine.jacobian
    header = ",".join(f"x{a + 1}" for a in range(model.d)) + ",g,f"
    target = args.output if args.output else sys.stdout
    _write_field_csv(
        target, pts, [g_vals, f_vals], header,
        f"# wavedens {__version__} eval; model={args.coefficients}",
    )
    if args.output:
        print(f"wrote {args.output}", file=sys.stderr)
    return 0


def cmd_bench(args) -> int:
    config = BenchmarkConfig.from_json(args.config)
    report = run_benchmark(config, workers=args.threads)
    report.write_json(args.output)
    csv_path = args.csv or args.output.rsplit(".", 1)[0] + ".csv"
    report.write_csv(csv_path)
    print(f"wrote {args.output} and {csv_path}", file=sys.stderr)
    if report.failed:
        failed = [row for row in report.rows if row.error is not None]
        print(f"{len(failed)} rows failed (first: {failed[0].error})", file=sys.stderr)
        return NUMERIC_EXIT
    return 0


def _check_line(ok: bool, name: str, value, tolerance) -> bool:
    status = "PASS" if ok else "FAIL"
    print(f"{status} {name}: value={value:.6g} tolerance={tolerance:g}")
    return ok


def _suite_wavelet() -> bool:
    import math

    ok = True
    for order in (1, 2, 3, 6, 7):
        fam = cached_family(order, 10)
        r = fam.dyadic_resolution
        step = 2.0 ** -r
        tab = fam.father_table
        ok &= _check_line(
            abs(fam.lowpass.sum() - math.sqrt(2)) < 1e-12,
            f"db{order}/filter-sum", abs(fam.lowpass.sum() - math.sqrt(2)), 1e-12,
        )
        orth = max(
            abs(np.dot(fam.lowpass[2 * m:], fam.lowpass[: fam.lowpass.size - 2 * m]) - (1.0 if m == 0 else 0.0))
            for m in range(order)
        )
        ok &= _check_line(orth < 1e-12, f"db{order}/filter-orthonormality", orth, 1e-12)
        cells = 1 << r
        pou = np.zeros(cells)
        for z in range(fam.support_length):
            pou += tab[z * cells : z * cells + cells]
        pou_err = float(np.max(np.abs(pou - 1.0)))
        ok &= _check_line(pou_err < 1e-8, f"db{order}/partition-of-unity", pou_err, 1e-8)
        int_phi = float(tab[:-1].sum() * step)
        int_phi2 = float((tab[:-1] ** 2).sum() * step)
        ok &= _check_line(abs(int_phi - 1) < 5e-4, f"db{order}/integral-phi", abs(int_phi - 1), 5e-4)
        ok &= _check_line(abs(int_phi2 - 1) < 5e-4, f"db{order}/integral-phi-squared", abs(int_phi2 - 1), 5e-4)
        x = np.arange(tab.size - 1) * step
        moments = max(
            abs(float((x**j * fam.mother_table[:-1]).sum() * step)) for j in range(order)
        )
        ok &= _check_line(moments < 1e-6, f"db{order}/vanishing-moments", moments, 1e-6)
    return bool(ok)


def _suite_dilation(seed: int) -> bool:
    from .estimator import dilation_coefficients, estimate_coefficients, to_single_trend

    rng = np.random.default_rng(seed)
    worst = 0.0
    for order in (2, 6):
        fam = cached_family(order, 10)
        for _ in range(10):
            pts = rng.random((200, 2))
            direct = estimate_coefficients(
                pts, EstimatorConfig(wavelet_order=order, j0=2, J=2, k=1, normalize=False)
            )
            fine = estimate_coefficients(
                pts, EstimatorConfig(wavelet_order=order, j0=3, J=2, k=1, normalize=False)
            )
            filtered = dilation_coefficients(to_single_trend(fine, fam), fam)
            keys = set(direct.entries) | set(filtered.entries)
            worst = max(
                worst,
                max(
                    abs(direct.entries.get(key, 0.0) - filtered.entries.get(key, 0.0))
                    for key in keys
                ),
            )
    return _check_line(worst < 1e-10, "dilation/direct-vs-filtered", worst, 1e-10)


def _suite_moment_identity(seed: int) -> bool:
    import math
    from scipy.special import gammaln

    ok = True
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(101,))))
    half = moment_identity_check(0.5, 1, 1024, 200, rng)
    ok &= _check_line(abs(half.empirical - 1.0) < 0.05, "moment-identity/a-half-k1", half.empirical - 1.0, 0.05)
    print(f"     z-score {half.z_score:.2f} (boundary bias excluded from the SE)")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(102,))))
    one = moment_identity_check(1.0, 1, 1024, 200, rng)
    ok &= _check_line(abs(one.empirical - 1.0) < 0.05, "moment-identity/a-one-k1", one.empirical - 1.0, 0.05)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(103,))))
    two = moment_identity_check(1.0, 2, 1024, 200, rng)
    raw1 = one.empirical * math.exp(gammaln(2.0) - gammaln(1.0))
    raw2 = two.empirical * math.exp(gammaln(3.0) - gammaln(2.0))
    ratio = raw2 / raw1
    ok &= _check_line(abs(ratio - 2.0) < 0.2, "moment-identity/k2-over-k1-ratio", ratio, 0.2)
    return bool(ok)


def _suite_exp_law(seed: int) -> bool:
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(201,))))
    ks = exp_law_check(4096, 50, rng)
    ok = _check_line(ks < 0.03, "exp-law/ks-n4096", ks, 0.03)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(202,))))
    synthetic = rng.exponential(size=50_000)
    ks_self = ks_exponential(synthetic)
    crit = 1.358 / np.sqrt(synthetic.size)
    ok &= _check_line(ks_self < crit, "exp-law/ks-self-test", ks_self, crit)
    return bool(ok)


def cmd_check(args) -> int:
    if args.suite == "knn":
        if args.points is None:
            print("error: check knn needs a points CSV", file=sys.stderr)
            return USAGE_EXIT
        return _knn_audit(args)
    stochastic = {"dilation", "moment-identity", "exp-law"}
    suites = [args.suite] if args.suite != "all" else ["wavelet", "dilation", "moment-identity", "exp-law"]
    if any(s in stochastic for s in suites) and args.seed is None:
        print("error: --seed is required for stochastic check suites", file=sys.stderr)
        return USAGE_EXIT
    ok = True
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for suite in suites:
            if suite == "wavelet":
                ok &= _suite_wavelet()
            elif suite == "dilation":
                ok &= _suite_dilation(args.seed)
            elif suite == "moment-identity":
                ok &= _suite_moment_identity(args.seed)
            elif suite == "exp-law":
                ok &= _suite_exp_law(args.seed)
    return 0 if ok else NUMERIC_EXIT


def cmd_wavelet_table(args) -> int:
    family = build_family(args.wavelet, args.resolution)
    step = 2.0 ** -family.dyadic_resolution
    target = args.output if args.output else sys.stdout
    own = isinstance(target, str)
    handle = open(target, "w", encoding="utf-8") if own else target
    try:
        handle.write(f"# wavedens {__version__} wavelet-table db{args.wavelet} r={args.resolution}\n")
        handle.write("x,phi,psi\n")
        for i in range(family.father_table.size):
            handle.write(
                f"{repr(i * step)},{repr(float(family.father_table[i]))},"
                f"{repr(float(family.mother_table[i]))}\n"
            )
    finally:
        if own:
            handle.close()
    return 0


def _knn_audit(args) -> int:
    points = read_points_csv(args.points, args.dim)
    stats = knn_stats(points, args.k)
    target = args.output if args.output else sys.stdout
    own = isinstance(target, str)
    handle = open(target, "w", encoding="utf-8") if own else target
    try:
        handle.write(f"# wavedens {__version__} check knn; k={args.k}\n")
        handle.write("index,radius,volume\n")
        for i in range(points.shape[0]):
            handle.write(f"{i},{repr(float(stats.radii[i]))},{repr(float(stats.volumes[i]))}\n")
    finally:
        if own:
            handle.close()
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="wavedens", description=__doc__)
    parser.add_argument("--version", action="version", version=f"wavedens {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="fit a density model to a point CSV")
    fit.add_argument("points", help="CSV of n rows x d float columns")
    fit.add_argument("-o", "--output", required=True, help="coefficient JSON to write")
    fit.add_argument("--wavelet", type=_parse_wavelet, default=6, metavar="dbP")
    fit.add_argument("--j0", type=int, default=0)
    fit.add_argument("--J", type=int, required=True)
    fit.add_argument("--k", type=int, default=1)
    fit.add_argument("--threshold", type=float, default=None, metavar="C")
    fit.add_argument("--no-normalize", action="store_true")
    fit.add_argument("--rescale", action="store_true", help="map the data box to the unit cube")
    fit.add_argument("--pad", type=float, default=0.0, help="padding fraction for --rescale")
    fit.add_argument("--dim", type=int, default=None, help="number of columns when there is no header")
    fit.add_argument("--grid", type=int, default=None, metavar="R", help="also write an R^d density grid")
    fit.add_argument("--grid-output", default=None)
    fit.add_argument("--estimator", choices=["shape-preserving", "classical"], default="shape-preserving")
    fit.add_argument("--seed", type=int, default=None, help="recorded in provenance")
    fit.set_defaults(func=cmd_fit)

    ev = sub.add_parser("eval", help="evaluate a coefficient file at points or on a grid")
    ev.add_argument("coefficients", help="coefficient JSON from fit")
    ev.add_argument("points", nargs="?", default=None, help="CSV of evaluation points")
    ev.add_argument("--grid", type=int, default=None, metavar="R")
    ev.add_argument("-o", "--output", default=None)
    ev.add_argument(
        "--data-coords", action="store_true",
        help="treat inputs as original data coordinates when the model was fit with --rescale",
    )
    ev.set_defaults(func=cmd_eval)

    bench = sub.add_parser("bench", help="run the Monte-Carlo benchmark sweep")
    bench.add_argument("config", help="benchmark config JSON")
    bench.add_argument("-o", "--output", required=True, help="report JSON to write")
    bench.add_argument("--csv", default=None, help="report CSV (default: next to the JSON)")
    bench.add_argument("--threads", type=int, default=None)
    bench.set_defaults(func=cmd_bench)

    check = sub.add_parser("check", help="run statistical and numerical oracle suites")
    check.add_argument(
        "suite", choices=["wavelet", "dilation", "moment-identity", "exp-law", "knn", "all"]
    )
    check.add_argument("points", nargs="?", default=None, help="point CSV (knn suite only)")
    check.add_argument("--seed", type=int, default=None)
    check.add_argument("--k", type=int, default=1, help="neighbour order (knn suite)")
    check.add_argument("--dim", type=int, default=None)
    check.add_argument("-o", "--output", default=None, help="audit CSV (knn suite)")
    check.set_defaults(func=cmd_check)

    table = sub.add_parser("wavelet-table", help="dump (x, phi, psi) at the dyadic grid as CSV")
    table.add_argument("--wavelet", type=_parse_wavelet, default=6, metavar="dbP")
    table.add_argument("--resolution", type=int, default=10)
    table.add_argument("-o", "--output", default=None)
    table.set_defaults(func=cmd_wavelet_table)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_EXIT
    except (EstimationError, WavedensError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return NUMERIC_EXIT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_EXIT


if __name__ == "__main__":
    sys.exit(main())
