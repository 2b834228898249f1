"""Command-line interface: ``entspec <subcommand> [options]``.

Exit codes: 0 success, 1 invalid input, 2 convergence failure.
"""
from __future__ import annotations

import argparse
import hashlib
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, diagrams, entropy, montecarlo, resolvent
from .estimators import MODELS, build_spec
from .exceptions import ConvergenceError, EntspecError
from .space import GOLDEN, blockaded_chain_space, scaling_constants


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return "%.12g" % float(x)


def parse_phi(text: str) -> float:
    if text.strip().lower() == "golden":
        return GOLDEN
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"phi must be a number or 'golden', got {text!r}") from None
    return value


def parse_n_list(text: str):
    out = []
    for part in text.split(","):
        part = part.strip()
        if part:
            v = float(part)
            out.append(int(v) if v.is_integer() else v)
    if not out:
        raise argparse.ArgumentTypeError("empty list of Renyi indices")
    return out


def _jsonable(obj, exact=False):
    if isinstance(obj, dict):
        return {k: _jsonable(v, exact) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v, exact) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist(), exact)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if not math.isfinite(v):
            return None
        return v if exact else float(fmt(v))
    return obj


def dumps_json(obj, exact=False) -> str:
    """JSON text; numbers use 12 significant digits unless ``exact``."""
    return json.dumps(_jsonable(obj, exact), indent=2, sort_keys=True) + "\n"


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(fmt(v) for v in row) + "\n")
    return buf.getvalue()


class Output:
    """Collects files written by a subcommand and emits their manifest."""

    def __init__(self, args):
        self.args = args
        self.written = {}

    def emit(self, text: str, suffix: str = ""):
        out = self.args.out
        if out is None:
            sys.stdout.write(text)
            return
        path = Path(str(out) + suffix)
        path.write_bytes(text.encode("utf-8"))
        self.written[path.name] = hashlib.sha256(text.encode("utf-8")).hexdigest()

    def finish(self):
        if not self.written:
            return
        params = {k: v for k, v in vars(self.args).items() if k not in ("func", "out")}
        manifest = {
            "subcommand": self.args.command,
            "parameters": params,
            "seed": params.get("seed"),
            "version": __version__,
            "outputs": self.written,
        }
        # parameters keep full precision so a replay sees the same inputs
        Path(str(self.args.out) + ".manifest.json").write_text(dumps_json(manifest, exact=True), encoding="utf-8")


def _spec_from(args):
    return build_spec(args.model, args.phi, args.lam, args.L, args.M)


def cmd_space(args, out):
    if args.model == "blockaded" and args.L is not None:
        space = blockaded_chain_space(args.L)
        spec = space.relative_spec()
        report = {
            "model": "blockaded",
            "L": space.L,
            "D": space.D.tolist(),
            "D_prime": space.D_prime.tolist(),
            "N_ref": space.N_ref,
            "allowed_pairs": space.n_allowed_pairs(),
            "phi_L": float(space.D[0] / space.D[1]),
        }
    else:
        spec = _spec_from(args)
        report = {"model": args.model}
    sc = scaling_constants(spec)
    report.update(spec.to_dict())
    report.update(
        norm_per_N=sc.norm_per_N,
        sum_d=sc.sum_d,
        eps_scale=sc.eps_scale,
        sectors=spec.n_left,
    )
    if spec.is_diagonal:
        partner = np.argmax(spec.C, axis=1)
        ratios = spec.d / spec.d_prime[partner]
        report["lambda"] = ratios.tolist()
        report["balanced"] = bool(np.allclose(ratios, 1.0))
    if args.format == "json":
        out.emit(dumps_json(report))
    else:
        rows = [(l, spec.d[l], ",".join(str(r) for r in np.nonzero(spec.C[l])[0])) for l in range(spec.n_left)]
        out.emit(csv_text(["sector", "d", "allowed_r"], rows))


def cmd_dos(args, out):
    spec = _spec_from(args)
    dens = resolvent.density(spec, grid=args.grid, method=args.method, eta=args.eta)
    header = ["epsilon", "p_total"] + [f"p_sector_{l}" for l in range(spec.n_left)] + ["cdf"]
    rows = [
        (e, p, *ps, c)
        for e, p, ps, c in zip(dens.eps_grid, dens.p_total, dens.p_sector.T, dens.cdf)
    ]
    summary = {
        "model": spec.to_dict(),
        "method": dens.method,
        "delta_mass": dens.delta_mass_at_zero,
        "delta_sector": dens.delta_sector,
        "support": list(dens.support),
        "grid": len(dens.eps_grid),
    }
    if args.format == "json":
        doc = dict(summary, columns=header, rows=[list(r) for r in rows])
        out.emit(dumps_json(doc))
    else:
        out.emit(csv_text(header, rows))
        if args.out is not None:
            out.emit(dumps_json(summary), ".json")


def cmd_moments(args, out):
    spec = _spec_from(args)
    ns = list(range(1, args.n_max + 1))
    doc = {
        "n": ns,
        "m_n": [diagrams.planar_moment(spec, n) for n in ns],
        "mu_n": [diagrams.normalized_moment(spec, n) for n in ns],
        "catalan": [diagrams.catalan(n) for n in ns],
    }
    if args.quadrature:
        dens = resolvent.density(spec, grid=16)
        doc["mu_n_quadrature"] = [entropy.moment_integral(dens, n) for n in ns]
    if args.finite_L is not None:
        space = blockaded_chain_space(args.finite_L)
        doc["finite_L"] = args.finite_L
        doc["finite_N"] = space.N_ref
        if args.exact:
            doc["finite_exact"] = [
                diagrams.finite_moment_exact((space.D, space.D_prime), space.C, space.N_ref, n)
                if n <= diagrams.MAX_ORDER_EXACT else None
                for n in ns
            ]
    if args.mc_samples:
        target = blockaded_chain_space(args.finite_L) if args.finite_L is not None else spec
        cfg = montecarlo.SampleConfig(target, N=args.N, seed=args.seed, samples=args.mc_samples)
        mc_ns = [n for n in ns if n <= 6]
        mean, err, _ = montecarlo.moment_estimates(cfg, mc_ns)
        doc["mc_n"] = mc_ns
        doc["mc_mean"] = mean
        doc["mc_stderr"] = err
    out.emit(dumps_json(doc))


def cmd_entropy(args, out):
    spec = _spec_from(args)
    dens = resolvent.density(spec, grid=64, method=args.method)
    rep = entropy.entropy_report(spec, args.n, dens)
    rows = rep.rows() + [("inf", None, None, None, rep.asymptote)]
    out.emit(csv_text(["n", "mu_n", "S_avg_minus_lnN", "S_inf_minus_lnN", "delta_S"], rows))


def cmd_sample(args, out):
    spec = _spec_from(args)
    cfg = montecarlo.SampleConfig(spec, N=args.N, seed=args.seed, samples=args.samples)
    emp = montecarlo.sample_spectrum(cfg)
    counts, edges = np.histogram(emp.eps_values, bins=args.bins)
    rows = list(zip(edges[:-1], edges[1:], counts))
    summary = {
        "model": spec.to_dict(),
        "N": args.N,
        "samples": args.samples,
        "seed": args.seed,
        "dim": emp.dim,
        "zero_fraction": emp.zero_fraction,
        "moments": {str(n): entropy.moment_integral(emp, n) for n in (1, 2, 3, 4)},
    }
    if args.compare:
        dens = resolvent.density(spec, grid=64)
        summary["cdf_distance"] = montecarlo.empirical_cdf_distance(emp, dens)
    out.emit(csv_text(["epsilon_bin_lo", "epsilon_bin_hi", "count"], rows))
    if args.out is not None:
        out.emit(dumps_json(summary), ".json")
    else:
        sys.stderr.write(dumps_json(summary))


def cmd_scan(args, out):
    if args.steps < 1:
        raise EntspecError("steps must be at least 1")
    rows = []
    for phi in np.linspace(args.phi_min, args.phi_max, args.steps):
        phi = float(phi)
        info = resolvent.classify_phase(phi)
        spec = build_spec("blockaded", phi)
        dens = resolvent.density(spec, grid=16)
        ds1 = entropy.page_correction(spec, dens, 1)
        rows.append((phi, info.z_minus, info.z_plus, info.delta_mass, info.exponent, info.phase, ds1))
    out.emit(csv_text(["phi", "z_minus", "z_plus", "delta_mass", "fitted_exponent", "phase", "delta_S1"], rows))


def cmd_replay(args, out):
    manifest_path = Path(args.manifest)
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    params = dict(manifest["parameters"])
    target = manifest_path.with_name(manifest_path.name[: -len(".manifest.json")])
    argv = _argv_from(manifest["subcommand"], params, str(target) + ".replay")
    code = main(argv)
    if code != 0:
        return code
    ok = True
    for name, digest in manifest["outputs"].items():
        base = str(target)
        replayed = Path(base + ".replay" + name[len(target.name):])
        got = hashlib.sha256(replayed.read_bytes()).hexdigest()
        status = "ok" if got == digest else "MISMATCH"
        ok &= got == digest
        sys.stdout.write(f"{name}: {status}\n")
    return 0 if ok else 1


def _argv_from(command, params, out):
    argv = [command]
    for key, value in params.items():
        if key == "command" or value is None or value is False:
            continue
        flag = "--" + key.replace("_", "-")
        if key == "lam":
            flag = "--lambda"
        if value is True:
            argv.append(flag)
        elif isinstance(value, list):
            argv += [flag, ",".join(str(v) for v in value)]
        else:
            argv += [flag, repr(value) if isinstance(value, float) else str(value)]
    return argv + ["--out", out]


def _model_flags(p, default_model="blockaded"):
    p.add_argument("--model", choices=MODELS, default=default_model, help="constraint model")
    p.add_argument("--phi", type=parse_phi, default=GOLDEN,
                   help="relative sector dimension (number or 'golden')")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0, help="imbalance ratio d/d'")
    p.add_argument("--L", type=int, default=None, help="chain length (blockaded enumeration, diagonal-sz)")
    p.add_argument("--M", type=int, default=None, help="number of up spins (diagonal-sz)")
    p.add_argument("--out", default=None, help="output path; stdout when omitted")


def build_parser() -> argparse.ArgumentParser:
    fmt_cls = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(prog="entspec", description=__doc__, formatter_class=fmt_cls)
    parser.add_argument("--version", action="version", version=f"entspec {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("space", help="sector dimensions of a model", formatter_class=fmt_cls)
    _model_flags(p)
    p.add_argument("--format", choices=("json", "csv"), default="json", help="output format")
    p.set_defaults(func=cmd_space)

    p = sub.add_parser("dos", help="entanglement density of states", formatter_class=fmt_cls)
    _model_flags(p)
    p.add_argument("--grid", type=int, default=resolvent.DEFAULT_GRID, help="Chebyshev grid points")
    p.add_argument("--method", choices=("closed", "fixedpoint"), default="closed", help="density solver")
    p.add_argument("--eta", type=float, default=resolvent.DEFAULT_ETA, help="imaginary offset for fixedpoint")
    p.add_argument("--format", choices=("csv", "json"), default="csv", help="output format")
    p.set_defaults(func=cmd_dos)

    p = sub.add_parser("moments", help="planar trace moments", formatter_class=fmt_cls)
    _model_flags(p)
    p.add_argument("--n-max", type=int, default=6, help="highest moment order")
    p.add_argument("--finite-L", type=int, default=None, help="also report the enumerated chain of this length")
    p.add_argument("--exact", action="store_true", help="exact finite-size Wick sum (needs --finite-L)")
    p.add_argument("--quadrature", action="store_true", help="also integrate the density")
    p.add_argument("--mc-samples", type=int, default=0, help="Monte Carlo samples (0 disables)")
    p.add_argument("--N", type=int, default=500, help="Monte Carlo scale")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("entropy", help="Renyi entropies and Page corrections", formatter_class=fmt_cls)
    _model_flags(p)
    p.add_argument("--n", type=parse_n_list, default=[1, 2, 3], help="comma-separated Renyi indices")
    p.add_argument("--method", choices=("closed", "fixedpoint"), default="closed", help="density solver")
    p.set_defaults(func=cmd_entropy)

    p = sub.add_parser("sample", help="Monte Carlo entanglement spectra", formatter_class=fmt_cls)
    _model_flags(p)
    p.add_argument("--N", type=int, default=1000, help="reference scale N")
    p.add_argument("--samples", type=int, default=1, help="number of random states")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--bins", type=int, default=50, help="histogram bins")
    p.add_argument("--compare", action="store_true", help="report the CDF distance to the analytic density")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("scan", help="blockaded phase diagram over phi", formatter_class=fmt_cls)
    p.add_argument("--phi-min", type=float, default=0.5, help="first phi")
    p.add_argument("--phi-max", type=float, default=2.0, help="last phi")
    p.add_argument("--steps", type=int, default=4, help="number of phi values")
    p.add_argument("--out", default=None, help="output path; stdout when omitted")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("replay", help="re-run a manifest and verify its checksums", formatter_class=fmt_cls)
    p.add_argument("manifest", help="path to a .manifest.json file")
    p.set_defaults(func=cmd_replay, out=None)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    out = Output(args)
    try:
        code = args.func(args, out)
        out.finish()
    except ConvergenceError as exc:
        where = f" at z={exc.z}" if exc.z is not None else ""
        if getattr(args, "eta", None) is not None:
            where += f" (eta={args.eta})"
        sys.stderr.write(f"entspec: convergence failure{where}: {exc}\n")
        return 2
    except (EntspecError, ValueError) as exc:
        sys.stderr.write(f"entspec: {exc}\n")
        return 1
    return code or 0


if __name__ == "__main__":
    sys.exit(main())
