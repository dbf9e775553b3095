"""Batch command-line interface.

Subcommands ``simulate``, ``fit``, ``diagnose`` and ``simstudy`` read and
write CSV (header required) and JSON. Every output carries a metadata
block with the tool version, the command line, the seed and the SHA-256
of the input file; CSV outputs get it in a ``<file>.meta.json`` sidecar.

Exit codes: 0 success, 2 invalid input, 3 numerical failure.
"""

import argparse
import csv
import hashlib
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .copula import sample_mgl_copula
from .diagnostics import (TailWeightConfig, bootstrap_ci, fit_error_eA, load_scenario, simstudy,
                          tw_dep_empirical, tw_dep_model)
from .errors import DimensionError, DomainError, NonConvergenceError, NonFiniteError
from .evcopula import sample_ev
from .families import CopulaFamily, CopulaSpec
from .glmga import GlmgaParams, glmga_fit, glmga_sample
from .margins import PseudoSample, kernel_pseudo_obs, rank_pseudo_obs, spliced_fit
from .mgl import MglParams, mgl_sample
from .regression import fit_copula_reg, ifm_fit, ns_basis, quantile_knots

COPULAS = ["mgl", "surv-mgl", "mgl-ev", "surv-mgl-ev", "gumbel"]


class InputError(ValueError):
    """Bad command-line input (exit code 2)."""


@dataclass
class RunConfig:
    command: str
    seed: int
    input: str = None
    output: str = None
    family: str = None
    options: dict = field(default_factory=dict)


# -- serialisation ------------------------------------------------------------

def _json_text(obj, indent=0):
    """JSON with every float written to 17 significant digits."""
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_json_text(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + f"\n{end}}}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj.tolist() if isinstance(obj, np.ndarray) else obj)
        if not seq:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq):
            return "[" + ", ".join(_json_text(v, indent + 1) for v in seq) + "]"
        return "[\n" + ",\n".join(pad + _json_text(v, indent + 1) for v in seq) + f"\n{end}]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format(float(obj), ".17g") if math.isfinite(obj) else "null"
    if obj is None:
        return "null"
    return json.dumps(str(obj))


def _write_json(path, payload):
    text = _json_text(payload) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format(float(v), ".17g") if isinstance(v, (float, np.floating))
                             else v for v in row])


def _checksum(path):
    if path is None:
        return None
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _meta(cfg, argv):
    return {"tool": "mglcop", "version": __version__, "command_line": list(argv),
            "seed": cfg.seed, "input_sha256": _checksum(cfg.input), "config": asdict(cfg)}


# -- input helpers ------------------------------------------------------------

def _read_columns(path, names):
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames or []
            missing = [n for n in names if n not in header]
            if missing:
                raise InputError(f"missing column(s) in {path}: {', '.join(missing)}")
            rows = list(reader)
    except FileNotFoundError as exc:
        raise InputError(f"input file not found: {path}") from exc
    out = {}
    for n in names:
        try:
            out[n] = np.array([float(r[n]) for r in rows])
        except ValueError as exc:
            raise InputError(f"column {n} has non-numeric entries") from exc
    return out


def _floats(text, name):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise InputError(f"--{name} expects comma-separated numbers") from exc


def _names(text):
    names = [v.strip() for v in text.split(",") if v.strip()]
    if not names:
        raise InputError("--columns must name at least one column")
    return names


def _family(name):
    return CopulaFamily(name.replace("-", "_"))


def _seed(value):
    if value is None:
        return int(np.random.SeedSequence().entropy % 2 ** 64)
    if not 0 <= value < 2 ** 64:
        raise InputError("seed must be an unsigned 64-bit integer")
    return value


def _pseudo(data, method, bandwidth, log):
    y = np.column_stack(list(data.values()))
    if log:
        if np.any(y <= 0):
            raise InputError("--log needs positive data")
        y = np.log(y)
    if method == "rank":
        return rank_pseudo_obs(y)
    if method == "kernel":
        return kernel_pseudo_obs(y, bandwidth)
    return PseudoSample(y, "parametric")


def _knots(spec, x):
    """Parse ``q50`` / ``q33.333,q66.667`` (quantiles in percent) or raw values."""
    out = []
    for token in [t.strip() for t in spec.split(",") if t.strip()]:
        if token.startswith("q"):
            out.append(float(quantile_knots(x, float(token[1:]) / 100.0)))
        else:
            out.append(float(token))
    return out


def _design(args, n):
    if not args.covariate:
        return np.ones((n, 1)), None
    x = _read_columns(args.input, [args.covariate])[args.covariate]
    if args.spline_knots is not None:
        knots = _knots(args.spline_knots, x) if args.spline_knots else []
        return ns_basis(x, knots), {"covariate": args.covariate, "knots": knots}
    return np.column_stack([np.ones(n), x]), {"covariate": args.covariate, "linear": True}


# -- commands -----------------------------------------------------------------

def cmd_simulate(args, cfg, argv):
    if args.n < 1:
        raise InputError("--n must be at least 1")
    fam = args.family
    if fam in ("glmga", "mgl-dist"):
        sigma, b = _floats(args.sigma, "sigma"), _floats(args.b, "b")
        if fam == "glmga":
            p = GlmgaParams(sigma[0], args.a, b[0])
            values = glmga_sample(p, args.n, cfg.seed)[:, None]
            params = asdict(p)
        else:
            p = MglParams(tuple(sigma), args.a, tuple(b))
            values = mgl_sample(p, args.n, cfg.seed)
            params = asdict(p)
        prefix = "y"
    else:
        if args.delta is None or not args.delta > 0:
            raise InputError("--delta must be positive")
        family = _family(fam)
        if family in (CopulaFamily.MGL, CopulaFamily.SURV_MGL):
            if args.d < 2:
                raise InputError("--d must be at least 2")
            values = sample_mgl_copula(args.delta, args.d, args.n, cfg.seed,
                                       survival=family is CopulaFamily.SURV_MGL).values
        elif family in (CopulaFamily.SURV_MGL_EV, CopulaFamily.MGL_EV):
            if args.d != 2:
                raise InputError("EV copula sampling is bivariate (--d 2)")
            values = np.asarray(CopulaSpec(family, args.delta).sample(args.n, cfg.seed))
        else:
            raise InputError(f"sampling is not available for {fam}")
        params = {"delta": args.delta}
        prefix = "u"
    header = [f"{prefix}{j + 1}" for j in range(values.shape[1])]
    _write_csv(args.out, header, values.tolist())
    _write_json(f"{args.out}.meta.json",
                {"meta": _meta(cfg, argv), "family": fam, "params": params,
                 "n": args.n, "columns": header})


def cmd_fit(args, cfg, argv):
    names = _names(args.columns)
    data = _read_columns(args.input, names)
    fam = args.family
    report = {"meta": _meta(cfg, argv), "family": fam}
    if fam == "glmga":
        fit = glmga_fit(data[names[0]])
        report.update(fit.to_dict())
    elif fam == "spliced":
        if args.threshold is None:
            raise InputError("--threshold is required for the spliced margin")
        fit = spliced_fit(data[names[0]], args.threshold, args.variance)
        report.update(fit.to_dict())
    elif fam == "ifm":
        if len(names) != 2:
            raise InputError("ifm needs exactly two columns")
        X, design = _design(args, len(data[names[0]]))
        (f1, f2), reg = ifm_fit(data[names[0]], data[names[1]], X, _family(args.copula),
                                threshold=args.threshold, variance=args.variance)
        report.update({"copula": args.copula, "design": design, "margin1": f1.to_dict(),
                       "margin2": f2.to_dict(), "regression": reg.to_dict()})
    else:
        if len(names) < 2:
            raise InputError("copula fits need at least two columns")
        u = _pseudo(data, args.pseudo, args.bandwidth, args.log)
        X, design = _design(args, len(u))
        reg = fit_copula_reg(u, X, _family(fam))
        report.update({"design": design, "pseudo": args.pseudo, **reg.to_dict()})
        report["family"] = fam
    _write_json(args.out, report)


def _delta_from_report(path, override):
    if override is not None:
        return override
    try:
        report = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise InputError(f"fit report not found: {path}") from exc
    deltas = np.asarray(report.get("fitted_delta", []), dtype=float)
    if deltas.size == 0:
        raise InputError("fit report has no fitted_delta")
    if np.ptp(deltas) > 1e-12 * abs(deltas[0]):
        raise InputError("diagnostics need a constant delta; pass --delta for regression fits")
    return float(deltas[0]), report.get("family")


def cmd_diagnose(args, cfg, argv):
    names = _names(args.columns)
    data = _read_columns(args.input, names)
    u = _pseudo(data, args.pseudo, args.bandwidth, args.log)
    if args.delta is not None:
        if args.family is None:
            raise InputError("--family is required with --delta")
        delta, fam = args.delta, args.family
    else:
        if args.fit is None:
            raise InputError("pass --fit REPORT or --family with --delta")
        delta, fam = _delta_from_report(args.fit, None)
        fam = args.family or fam
    family = _family(fam)
    spec = CopulaSpec(family, delta)
    report = {"meta": _meta(cfg, argv), "family": fam, "delta": delta, "n": len(u)}

    regions = []
    for chunk in args.regions.split(";"):
        r = _floats(chunk, "regions")
        if len(r) != 4:
            raise InputError("each region needs four numbers a1,b1,a2,b2")
        regions.append(((r[0], r[1]), (r[2], r[3])))
    report["fit_error"] = [fit_error_eA(u, spec.cdf, reg, args.grid) for reg in regions]
    if args.grid_csv:
        (a1, b1), (a2, b2) = regions[0]
        g1 = a1 + (np.arange(args.grid) + 0.5) * (b1 - a1) / args.grid
        g2 = a2 + (np.arange(args.grid) + 0.5) * (b2 - a2) / args.grid
        pts = np.stack(np.meshgrid(g1, g2, indexing="ij"), axis=-1).reshape(-1, 2)
        from .diagnostics import empirical_copula
        _write_csv(args.grid_csv, ["u1", "u2", "model", "empirical"],
                   np.column_stack([pts, spec.cdf(pts), empirical_copula(u, pts)]).tolist())

    table = []
    for k in [int(v) for v in _floats(args.tw_k, "tw-k")]:
        tw = TailWeightConfig(k, args.tw_p)
        row = {"k": k, "p": args.tw_p, "empirical": tw_dep_empirical(u, tw),
               "model": tw_dep_model(spec.cdf, tw)}
        table.append(row)
    report["tail_weighted"] = table

    if args.n_boot:
        tw = TailWeightConfig(int(_floats(args.tw_k, "tw-k")[0]), args.tw_p)
        X = np.ones((len(u), 1))

        def fit(sample):
            return float(fit_copula_reg(sample, X, family).fitted_delta[0])

        def stat(d):
            # bootstrap spread dwarfs 1e-4, so a coarser rule is enough here
            return tw_dep_model(CopulaSpec(family, d).cdf, tw, nodes=24, tol=1e-4)

        def draw(d, n, rng):
            return CopulaSpec(family, d).sample(n, rng)

        ci = bootstrap_ci(u, fit, stat, draw, args.n_boot, args.level, cfg.seed)
        ci.pop("draws")
        report["bootstrap"] = {"k": tw.k, "p": tw.p, **ci}
    _write_json(args.out, report)


def cmd_simstudy(args, cfg, argv):
    try:
        scenario = load_scenario(args.scenario)
    except FileNotFoundError as exc:
        raise InputError(f"scenario not found: {args.scenario}") from exc
    if args.replicates is not None:
        scenario["replicates"] = args.replicates
    result = simstudy(scenario, cfg.seed)
    keys = ["n", "coef", "true", "bias", "variance", "mse", "median", "mc_se_median",
            "replicates", "failures"]
    _write_csv(args.out, keys, [[row[k] for k in keys] for row in result["rows"]])
    _write_json(f"{args.out}.meta.json", {"meta": _meta(cfg, argv), "scenario": scenario})


# -- parser -------------------------------------------------------------------

def _add_pseudo(p):
    p.add_argument("--pseudo", choices=["none", "rank", "kernel"], default="none",
                   help="transform to pseudo-observations (none: columns already uniform)")
    p.add_argument("--bandwidth", type=float, default=0.2)
    p.add_argument("--log", action="store_true", help="log-transform data before the kernel")


def build_parser():
    parser = argparse.ArgumentParser(prog="mglcop", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"mglcop {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="draw samples from a copula or distribution")
    p.add_argument("--family", required=True, choices=COPULAS + ["glmga", "mgl-dist"])
    p.add_argument("--delta", type=float)
    p.add_argument("--sigma", default="0.5", help="comma list (distributions)")
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--b", default="1.0", help="comma list (distributions)")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)

    p = sub.add_parser("fit", help="fit a margin, copula or copula regression")
    p.add_argument("--input", required=True)
    p.add_argument("--columns", required=True)
    p.add_argument("--family", required=True, choices=COPULAS + ["glmga", "spliced", "ifm"])
    p.add_argument("--copula", choices=COPULAS, default="surv-mgl", help="copula for ifm")
    p.add_argument("--covariate")
    p.add_argument("--spline-knots", help="interior knots, e.g. q50 or q33.333,q66.667")
    p.add_argument("--threshold", type=int)
    p.add_argument("--variance", choices=["quadratic", "linear"], default="quadratic")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    _add_pseudo(p)

    p = sub.add_parser("diagnose", help="fit error, tail-weighted measures, bootstrap CI")
    p.add_argument("--input", required=True)
    p.add_argument("--columns", required=True)
    p.add_argument("--fit", help="JSON report written by 'fit'")
    p.add_argument("--family", choices=COPULAS)
    p.add_argument("--delta", type=float)
    p.add_argument("--regions", default="0.95,1,0.95,1;0,0.05,0,0.05")
    p.add_argument("--grid", type=int, default=50)
    p.add_argument("--grid-csv")
    p.add_argument("--tw-k", default="5,6,7")
    p.add_argument("--tw-p", type=float, default=0.5)
    p.add_argument("--n-boot", type=int, default=0)
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    _add_pseudo(p)

    p = sub.add_parser("simstudy", help="replicated copula-regression simulation study")
    p.add_argument("--scenario", default="d2", help="'d2', 'dynamic' or a JSON file")
    p.add_argument("--replicates", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    return parser


COMMANDS = {"simulate": cmd_simulate, "fit": cmd_fit, "diagnose": cmd_diagnose,
            "simstudy": cmd_simstudy}


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)
    try:
        seed = _seed(args.seed)
        opts = {k: v for k, v in vars(args).items()
                if k not in ("command", "seed", "input", "out", "family")}
        cfg = RunConfig(args.command, seed, getattr(args, "input", None),
                        getattr(args, "out", None), getattr(args, "family", None), opts)
        COMMANDS[args.command](args, cfg, ["mglcop"] + argv)
    except (NonConvergenceError, NonFiniteError) as exc:
        print(f"mglcop: numerical failure: {exc}", file=sys.stderr)
        trace = getattr(exc, "trace", None)
        if trace and getattr(args, "out", None) and args.command == "fit":
            _write_json(args.out, {"error": str(exc), "trace": trace})
        return 3
    except (InputError, DomainError, DimensionError, ValueError) as exc:
        print(f"mglcop: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
