"""Command-line front end.

Subcommands: ``fidelity``, ``optimize``, ``table1``, ``fig1``, ``fig2``,
``simulate``, ``check`` and ``replay``. Tables and figure data are CSV,
single results are JSON. Every file written with ``--out`` gets a
``<out>.manifest.json`` next to it recording the exact invocation.
"""

import argparse
import csv
import datetime
import io
import json
import math
import platform
import sys

import numpy as np
import scipy

from . import __version__
from .fidelity import (
    SCHEMES,
    FeedforwardParams,
    SchemeConfig,
    fid_gaussian_benchmark,
    fid_quadrature,
    scheme_config,
    series_fidelity,
)
from .optimizer import optimize_ff, sweep_m
from .phasedist import IDEAL, MeasurementModel, SeriesControl, dh_density, dh_density_marginal, sg_density
from .simulator import simulate
from .specfun import log_gamma, scaled_bessel_i, scaled_bessel_row

TABLE1_ALPHAS = (3.0, 4.0, 5.0, 6.0)
TABLE1_HEADER = ["alpha", "F_ff_SG", "k_SG", "theta_SG", "F_ff_DH_eta0.8", "k_DH",
                 "theta_DH", "F_cl_SG", "F_cl_DH"]
FIG1_HEADER = ["alpha", "F_ff_SG", "F_ff_DH_eta1", "F_ff_DH_eta0.8", "F_cl_SG"]
FIG2_HEADER = ["M", "F_ff_SG", "F_ff_DH_eta1"]

EXIT_INVALID = 2
EXIT_IO = 3


def _fmt(x):
    return format(x, ".6g")


def manifest(command, args, argv, seed=None, extras=None):
    config = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "command")}
    out = {
        "command": command,
        "argv": list(argv),
        "config": config,
        "seed": seed,
        "versions": {
            "phasecov": __version__,
            "manifest_format": 1,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds"),
    }
    if extras:
        out["extras"] = extras
    return out


def _write(path, text, man):
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
        with open(path + ".manifest.json", "w") as fh:
            json.dump(man, fh, indent=2)
            fh.write("\n")
    except OSError as exc:
        print(f"error: cannot write {path}: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_IO)


def _emit_csv(args, argv, header, rows, extras=None):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) if isinstance(v, float) else v for v in row])
    text = buf.getvalue()
    if args.out:
        _write(args.out, text, manifest(args.command, args, argv, extras=extras))
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)


def _model(args, scheme):
    if scheme.endswith("sg"):
        return IDEAL
    return MeasurementModel.double_homodyne(args.eta if args.eta is not None else 1.0,
                                            args.noise_convention)


def _scheme_inputs(parser, args):
    scheme = args.scheme
    if scheme.endswith("sg") and args.eta is not None:
        parser.error(f"--eta does not apply to {scheme}")
    if args.eta is not None and not 0.0 < args.eta <= 1.0:
        parser.error("--eta must lie in (0, 1]")
    if args.alpha < 0 or args.n < 1 or args.m < 1:
        parser.error("need --alpha >= 0, --n >= 1, --m >= 1")
    cfg = SchemeConfig(args.n, args.m, args.alpha, _model(args, scheme))
    theta, k = getattr(args, "theta", None), getattr(args, "k", None)
    par = None
    if scheme.startswith("cl"):
        if theta is not None or k is not None:
            parser.error(f"--theta/--k do not apply to the semiclassical scheme {scheme}")
    elif hasattr(args, "theta"):
        if theta is None or k is None:
            parser.error(f"{scheme} needs both --theta and --k")
        if not 0.0 <= theta <= math.pi or k < 0:
            parser.error("need 0 <= --theta <= pi and --k >= 0")
        par = FeedforwardParams(theta, k)
    return cfg, par


def _emit_json(args, argv, payload, seed=None):
    if args.out:
        _write(args.out, json.dumps(payload, indent=2) + "\n",
               manifest(args.command, args, argv, seed))
        print(f"wrote {args.out}")
    else:
        payload = dict(payload, manifest=manifest(args.command, args, argv, seed))
        print(json.dumps(payload))


def cmd_fidelity(parser, args, argv):
    cfg, par = _scheme_inputs(parser, args)
    if args.quadrature:
        res = fid_quadrature(cfg, par)
    else:
        res = series_fidelity(cfg, par)
    print(f"{args.scheme}: F = {res.value:.6f} (error bound {res.tail_bound:.2e}, {res.method})")
    _emit_json(args, argv, {"scheme": args.scheme, "result": res.as_dict()})
    return 0


def cmd_optimize(parser, args, argv):
    if not args.scheme.startswith("ff"):
        parser.error("optimize needs a feedforward scheme (ff-sg or ff-dh)")
    cfg, _ = _scheme_inputs(parser, args)
    rep = optimize_ff(cfg, opt_tol=args.tol)
    print(f"{args.scheme}: F = {rep.fidelity.value:.6f} at theta = {rep.best.theta:.6f}, "
          f"k = {rep.best.k:.6f} (converged: {rep.converged})")
    _emit_json(args, argv, {"scheme": args.scheme, "optimum": rep.as_dict()})
    return 0


def table1_rows(eta=0.8, convention="standard", tol=1e-6):
    """Rows of the 1-to-2 table plus the eta-alternative semiclassical values."""
    dh = MeasurementModel.double_homodyne(eta, convention)
    dh1 = MeasurementModel.double_homodyne(1.0, convention)
    rows, alt = [], []
    for a in TABLE1_ALPHAS:
        sg = optimize_ff(SchemeConfig(1, 2, a, IDEAL), opt_tol=tol)
        ff_dh = optimize_ff(SchemeConfig(1, 2, a, dh), opt_tol=tol)
        cl_sg = series_fidelity(SchemeConfig(1, 2, a, IDEAL)).value
        cl_dh = series_fidelity(SchemeConfig(1, 2, a, dh1)).value
        rows.append([a, sg.fidelity.value, sg.best.k, sg.best.theta,
                     ff_dh.fidelity.value, ff_dh.best.k, ff_dh.best.theta, cl_sg, cl_dh])
        alt.append(series_fidelity(SchemeConfig(1, 2, a, dh)).value)
    return rows, alt


def cmd_table1(parser, args, argv):
    rows, alt = table1_rows(args.eta, args.noise_convention, args.tol)
    extras = {"F_cl_DH_at_eta": args.eta,
              "F_cl_DH_alternative": dict(zip([_fmt(a) for a in TABLE1_ALPHAS], alt))}
    _emit_csv(args, argv, TABLE1_HEADER, rows, extras)
    note = ", ".join(f"{a:g}: {_fmt(v)}" for a, v in zip(TABLE1_ALPHAS, alt))
    print(f"# F_cl_DH column uses eta = 1; at eta = {args.eta:g}: {note}", file=sys.stderr)
    return 0


def fig1_rows(alphas, convention="standard", tol=1e-6):
    dh1 = MeasurementModel.double_homodyne(1.0, convention)
    dh08 = MeasurementModel.double_homodyne(0.8, convention)
    rows = []
    for a in alphas:
        a = float(a)
        rows.append([
            a,
            optimize_ff(SchemeConfig(1, 2, a, IDEAL), opt_tol=tol).fidelity.value,
            optimize_ff(SchemeConfig(1, 2, a, dh1), opt_tol=tol).fidelity.value,
            optimize_ff(SchemeConfig(1, 2, a, dh08), opt_tol=tol).fidelity.value,
            series_fidelity(SchemeConfig(1, 2, a, IDEAL)).value,
        ])
    return rows


def cmd_fig1(parser, args, argv):
    if not 0 <= args.alpha_min < args.alpha_max or args.steps < 2:
        parser.error("need 0 <= --alpha-min < --alpha-max and --steps >= 2")
    alphas = np.linspace(args.alpha_min, args.alpha_max, args.steps)
    _emit_csv(args, argv, FIG1_HEADER, fig1_rows(alphas, args.noise_convention, args.tol))
    return 0


def fig2_grid(m_max, m_min=2):
    grid = set(range(m_min, min(30, m_max) + 1)) | {m for m in (50, 100, 200) if m <= m_max}
    grid.add(m_max)
    return sorted(grid)


def fig2_rows(ms, alpha=5.0, convention="standard", tol=1e-6):
    template = SchemeConfig(1, 2, alpha, IDEAL)
    dh = SchemeConfig(1, 2, alpha, MeasurementModel.double_homodyne(1.0, convention))
    sg_rows = sweep_m(template, ms, opt_tol=tol)
    dh_rows = sweep_m(dh, ms, opt_tol=tol)
    return [[m, r1.fidelity.value, r2.fidelity.value]
            for (m, r1), (_, r2) in zip(sg_rows, dh_rows)]


def cmd_fig2(parser, args, argv):
    if args.m_max < 2 or not 1 <= args.m_min <= args.m_max:
        parser.error("need --m-max >= 2 and 1 <= --m-min <= --m-max")
    ms = fig2_grid(args.m_max, args.m_min)
    _emit_csv(args, argv, FIG2_HEADER, fig2_rows(ms, args.alpha, args.noise_convention, args.tol))
    return 0


def cmd_simulate(parser, args, argv):
    cfg, par = _scheme_inputs(parser, args)
    if args.samples < 1000:
        parser.error("--samples must be at least 1000")
    est = simulate(cfg, par, args.samples, args.seed, args.input_phase)
    ref = series_fidelity(cfg, par).value
    diff = abs(est.mean - ref)
    ok = diff <= 3.0 * est.std_error or diff < 1e-12
    verdict = "PASS" if ok else "FAIL"
    print(f"{args.scheme}: MC {est.mean:.6f} +/- {est.std_error:.2e}, "
          f"series {ref:.6f} -> {verdict}")
    _emit_json(args, argv, {"scheme": args.scheme, "estimate": est.as_dict(),
                            "analytic": ref, "verdict": verdict}, seed=args.seed)
    return 0 if ok else 1


def run_checks(ctrl=None):
    """Self-test suite; yields ``(name, passed, detail)`` in a fixed order."""
    from scipy.integrate import quad

    # Poisson form: positive integrand, so relative accuracy survives tiny values
    worst = 0.0
    for z in (0.5, 2.0, 10.0, 50.0):
        for m in (0, 1, 2, 7, 20):
            integral = quad(lambda p: math.exp(z * (math.cos(p) - 1.0)) * math.sin(p) ** (2 * m),
                            0.0, math.pi, epsabs=0, epsrel=1e-13, limit=200)[0]
            log_ref = (m * math.log(z / 2) - 0.5 * math.log(math.pi) - math.lgamma(m + 0.5)
                       + math.log(integral))
            worst = max(worst, abs(math.log(scaled_bessel_i(m, z)) - log_ref))
    yield "bessel-quadrature", worst < 1e-9, f"max log err {worst:.2e}"

    worst = 0.0
    for z in (0.5, 2.0, 10.0, 50.0, 200.0):
        row = scaled_bessel_row(int(z + 40 * math.sqrt(z) + 40), z)
        worst = max(worst, abs(row[0] + 2 * row[1:].sum() - 1.0))
    yield "bessel-normalization", worst < 1e-10, f"max err {worst:.2e}"

    err = abs(log_gamma(0.5) - 0.5 * math.log(math.pi)) / (0.5 * math.log(math.pi))
    yield "log-gamma-half", err < 1e-13, f"rel err {err:.2e}"

    phi = np.linspace(0.0, 2 * math.pi, 4096, endpoint=False)
    worst = 0.0
    for g in (0.0, 0.5, 2.0, 5.0, 10.0):
        worst = max(worst, abs(sg_density(phi, g).mean() * 2 * math.pi - 1.0))
        for eta in (0.5, 0.8, 1.0):
            worst = max(worst, abs(dh_density(phi, g, eta).mean() * 2 * math.pi - 1.0))
    yield "density-normalization", worst < 1e-9, f"max err {worst:.2e}"

    worst = 0.0
    for g, eta in ((2.0, 1.0), (5.0, 0.8), (0.3, 0.5)):
        a, b = dh_density(phi, g, eta), dh_density_marginal(phi, g, eta)
        worst = max(worst, float(np.max(np.abs(a - b))))
    yield "dh-series-vs-marginal", worst < 1e-9, f"max abs diff {worst:.2e}"

    worst = 0.0
    for scheme, a, eta, par in (
            ("cl-sg", 2.0, 1.0, None), ("cl-dh", 3.0, 0.8, None),
            ("ff-sg", 3.0, 1.0, FeedforwardParams(0.861, 0.746)),
            ("ff-dh", 5.0, 0.8, FeedforwardParams(0.793, 0.703)),
            ("ff-sg", 1.0, 1.0, FeedforwardParams(2.2, 1.5))):
        cfg = scheme_config(scheme, 1, 2, a, eta)
        diff = abs(series_fidelity(cfg, par, ctrl).value - fid_quadrature(cfg, par).value)
        worst = max(worst, diff)
    yield "oracle-equivalence", worst < 1e-6, f"max |series - quadrature| {worst:.2e}"

    vals = [
        series_fidelity(SchemeConfig(2, 2, 7.0, IDEAL), FeedforwardParams(0.0, 0.0), ctrl).value,
        series_fidelity(SchemeConfig(1, 2, 0.0, IDEAL), None, ctrl).value,
        series_fidelity(SchemeConfig(1, 2, 0.0, MeasurementModel.double_homodyne(0.8)),
                        FeedforwardParams(0.7, 0.0), ctrl).value,
    ]
    worst = max(abs(v - 1.0) for v in vals)
    yield "identity", worst < 1e-12, f"max |F - 1| {worst:.2e}"

    ok = True
    dh08 = MeasurementModel.double_homodyne(0.8)
    dh1 = MeasurementModel.double_homodyne(1.0)
    bench = fid_gaussian_benchmark(1, 2)
    for a, sg_par, dh_par in ((3.0, (0.861, 0.746), (0.809, 0.694)),
                              (5.0, (0.802, 0.714), (0.794, 0.702))):
        f = [series_fidelity(SchemeConfig(1, 2, a, IDEAL), FeedforwardParams(*sg_par), ctrl).value,
             series_fidelity(SchemeConfig(1, 2, a, IDEAL), None, ctrl).value,
             series_fidelity(SchemeConfig(1, 2, a, dh08), FeedforwardParams(*dh_par), ctrl).value,
             series_fidelity(SchemeConfig(1, 2, a, dh1), None, ctrl).value]
        ok &= f[0] > f[1] > f[2] > f[3] > bench
    yield "ordering", bool(ok), "ff-sg > cl-sg > ff-dh(0.8) > cl-dh > 2/3"


def cmd_check(parser, args, argv):
    ctrl = None
    if args.force_nmax is not None:
        ctrl = SeriesControl(n_max=args.force_nmax, tail_tol=math.inf)
    for name, ok, detail in run_checks(ctrl):
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        if not ok:
            print(f"check failed: {name}", file=sys.stderr)
            return 1
    return 0


def cmd_replay(parser, args, argv):
    try:
        with open(args.manifest) as fh:
            man = json.load(fh)
    except (OSError, ValueError) as exc:
        print(f"error: cannot read manifest {args.manifest}: {exc}", file=sys.stderr)
        return EXIT_IO
    return main(man["argv"])


def _add_scheme_flags(p, feedforward=True):
    p.add_argument("--scheme", choices=SCHEMES, required=True)
    p.add_argument("--n", type=int, default=1, help="input copies N")
    p.add_argument("--m", type=int, default=2, help="output clones M")
    p.add_argument("--alpha", type=float, required=True, help="amplitude modulus |alpha|")
    p.add_argument("--eta", type=float, default=None, help="detector efficiency (dh schemes)")
    if feedforward:
        p.add_argument("--theta", type=float, default=None, help="splitting angle")
        p.add_argument("--k", type=float, default=None, help="feedforward gain")


def _add_common(p):
    p.add_argument("--out", default=None, help="output file (stdout if omitted)")
    p.add_argument("--noise-convention", choices=("standard", "squared"), default="standard",
                   help="double-homodyne excess noise: (1-eta)/eta or its square")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="phasecov", description="Fidelities of phase-covariant coherent-state cloners.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fidelity", help="evaluate one fidelity")
    _add_scheme_flags(p)
    _add_common(p)
    p.add_argument("--quadrature", action="store_true", help="integrate directly instead of the series")
    p.set_defaults(func=cmd_fidelity)

    p = sub.add_parser("optimize", help="optimize theta and k of a feedforward scheme")
    _add_scheme_flags(p, feedforward=False)
    _add_common(p)
    p.add_argument("--tol", type=float, default=1e-6, help="fidelity tolerance of the simplex")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("table1", help="1-to-2 table for |alpha| = 3..6 (CSV)")
    _add_common(p)
    p.add_argument("--eta", type=float, default=0.8, help="efficiency for the ff-dh column")
    p.add_argument("--tol", type=float, default=1e-6)
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("fig1", help="optimized 1-to-2 fidelities versus |alpha| (CSV)")
    _add_common(p)
    p.add_argument("--alpha-min", type=float, default=0.0)
    p.add_argument("--alpha-max", type=float, default=6.0)
    p.add_argument("--steps", type=int, default=61)
    p.add_argument("--tol", type=float, default=1e-6)
    p.set_defaults(func=cmd_fig1)

    p = sub.add_parser("fig2", help="optimized 1-to-M fidelities versus M (CSV)")
    _add_common(p)
    p.add_argument("--m-max", type=int, default=200)
    p.add_argument("--m-min", type=int, default=2)
    p.add_argument("--alpha", type=float, default=5.0)
    p.add_argument("--tol", type=float, default=1e-6)
    p.set_defaults(func=cmd_fig2)

    p = sub.add_parser("simulate", help="Monte Carlo estimate against the series")
    _add_scheme_flags(p)
    _add_common(p)
    p.add_argument("--samples", type=int, default=10**6)
    p.add_argument("--seed", type=int, default=12345)
    p.add_argument("--input-phase", type=float, default=0.0)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("check", help="run the built-in self-test")
    p.add_argument("--force-nmax", type=int, default=None, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv=None):
    if argv is None:
        argv = sys.argv[1:]
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(parser, args, argv)


if __name__ == "__main__":
    sys.exit(main())
