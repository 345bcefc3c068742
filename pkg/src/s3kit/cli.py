"""Command-line entry point: ``s3kit <command> ...``.

Exit status is 0 on success, 1 on a domain or validation error (reported
as a single ``error: <kind>: <message>`` line on stderr) and 2 on I/O
failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, bounds, builtins, ka, omega, spectral, stats, training
from .chain import build_chain, sup_error
from .io import RunManifest, atomic_write_text, dumps, manifest_path, read_json, write_csv, write_json
from .piecewise import PiecewiseLinear, fit_uniform, simplify


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: usage: {message}", file=sys.stderr)
        raise SystemExit(1)


class _Run:
    """Collects outputs of one command and writes its manifest."""

    def __init__(self, command: str, args: argparse.Namespace):
        self.command = command
        self.params = {k: v for k, v in vars(args).items() if k not in ("func",) and not k.startswith("_")}
        self.inputs: list[str] = []
        self.outputs: list[str] = []
        self.start = time.perf_counter()

    def json(self, path, obj):
        write_json(path, obj)
        self.outputs.append(str(path))

    def csv(self, path, header, rows):
        write_csv(path, header, rows)
        self.outputs.append(str(path))

    def finish(self, anchor=None, seed=None):
        if not self.outputs:
            return
        anchor = anchor or self.outputs[0]
        RunManifest(
            command=self.command,
            params=self.params,
            inputs=self.inputs,
            outputs=self.outputs,
            seed=seed,
            version=__version__,
            duration_s=round(time.perf_counter() - self.start, 6),
        ).write(manifest_path(anchor))


def _emit(obj):
    sys.stdout.write(dumps(obj))


def _interval(args, name):
    if args.interval is not None:
        return tuple(args.interval)
    return builtins.DEFAULT_INTERVALS[name]


# approx --------------------------------------------------------------------

def cmd_approx(args):
    run = _Run("approx", args)
    f = builtins.get_function(args.fn)
    interval = _interval(args, args.fn)
    pwl = simplify(fit_uniform(lambda x: float(f(x)), interval, args.step))
    net = build_chain(pwl)
    grid = np.linspace(*pwl.domain, args.grid)
    report = {
        "function": args.fn,
        "interval": list(interval),
        "breakpoints": len(pwl.breakpoints),
        "neurons": net.n_neurons,
        "sup_error_vs_pwl": sup_error(net, pwl, args.grid),
        "sup_error_vs_function": sup_error(net, f, args.grid),
        "spline_bound_note": "second-derivative bound max|f''| step^2 / 8 applies to smooth targets",
    }
    if args.out:
        run.json(args.out, net.to_dict())
        csv_path = args.csv or str(Path(args.out).with_suffix(".csv"))
        run.csv(csv_path, ["x", "target", "network"], zip(grid, f(grid), net(grid)))
        report_path = Path(args.out).with_name(Path(args.out).stem + ".report.json")
        run.json(report_path, report)
    _emit(report)
    run.finish(args.out)
    return 0


# omega ---------------------------------------------------------------------

def _topology(text):
    t = omega.parse_topology(text)
    bad = omega.validate_topology(t)
    if bad:
        raise ValueError("invalid topology: " + "; ".join(bad))
    return t


def _target_pwl(args, n_segments):
    if args.pwl:
        return PiecewiseLinear.from_dict(read_json(args.pwl))
    rng = np.random.default_rng(args.seed)
    xs = np.concatenate([[0.0], np.sort(rng.uniform(0, 1, n_segments - 1)), [1.0]])
    ys = rng.uniform(-5, 5, n_segments + 1)
    pwl = simplify(PiecewiseLinear(tuple(xs), tuple(ys)))
    if pwl.n_segments != n_segments:
        raise ValueError("random target collapsed segments; pick another --seed")
    return pwl


def cmd_omega_gen(args):
    if args.kind == "chain":
        t = omega.OmegaTopology.chain(args.n)
    elif args.kind == "star":
        t = omega.OmegaTopology.star(args.n)
    else:
        t = omega.random_topology(args.n, args.seed)
    print(t.to_text())
    return 0


def cmd_omega_check(args):
    t = omega.parse_topology(args.topology)
    bad = omega.validate_topology(t)
    _emit({"topology": args.topology, "valid": not bad, "violations": bad, "edge_count": t.edge_count})
    if bad:
        print(f"error: validation: {bad[0]}", file=sys.stderr)
        return 1
    return 0


def cmd_omega_rewire(args):
    t = _topology(args.topology)
    parent = omega.INPUT if args.parent.upper() == "I" else int(args.parent)
    print(omega.cut_rewire(t, args.neuron, parent).to_text())
    return 0


def cmd_omega_enum(args):
    n = args.n
    if n > omega.MAX_ENUMERATE:
        raise ValueError(f"n={n} would produce {omega.count_topologies(n)} topologies")
    run = _Run("omega enum", args)
    lines = [t.to_text() for t in omega.enumerate_topologies(n)]
    if args.out:
        atomic_write_text(args.out, "\n".join(lines) + "\n")
        run.outputs.append(args.out)
        print(f"{len(lines)} topologies")
    else:
        print("\n".join(lines))
    run.finish()
    return 0


def cmd_omega_equiv(args):
    run = _Run("omega equiv", args)
    if args.all is not None:
        tops = list(omega.enumerate_topologies(args.all))
    else:
        if not args.topology:
            raise UsageError("give --topology (repeatable) or --all N")
        tops = [_topology(t) for t in args.topology]
    n = tops[0].n_hidden
    if any(t.n_hidden != n for t in tops):
        raise ValueError("all topologies must have the same number of hidden neurons")
    if args.pwl:
        run.inputs.append(args.pwl)
    pwl = _target_pwl(args, n)
    nets = [omega.build_omega(t, pwl) for t in tops]
    grid = np.linspace(*pwl.domain, args.grid)
    vs_target = max(sup_error(net, pwl, args.grid) for net in nets)
    report = {
        "members": len(nets),
        "n_hidden": n,
        "pairwise_sup_difference": omega.pairwise_sup_difference(nets, grid),
        "max_sup_error_vs_target": vs_target,
        "target": pwl.to_dict(),
    }
    if args.out:
        run.json(args.out, {"report": report, "nets": [net.to_dict() for net in nets]})
    _emit(report)
    run.finish(seed=args.seed)
    return 0


# spectra / trees -----------------------------------------------------------

def cmd_spectra(args):
    run = _Run("spectra", args)
    t = _topology(args.topology)
    g = spectral.hidden_graph(t)
    r = spectral.spectral_radius(g, args.tol)
    out = {
        "topology": t.to_text(),
        "n_vertices": g.n_vertices,
        "spectral_radius": r.value,
        "iterations": r.iterations,
        "residual": r.residual,
        "converged": r.converged,
        **spectral.classify(g),
        "star_bound_sqrt_n": math.sqrt(t.n_hidden),
        "adjacency": g.adjacency.astype(int).tolist(),
    }
    if args.out:
        run.json(args.out, out)
    _emit(out)
    run.finish()
    return 0


def cmd_trees_sweep(args):
    run = _Run("trees sweep", args)
    rows = []
    for n in range(args.n_min, args.n_max + 1):
        row, radii = spectral.extremal_sweep(n, args.tol)
        rows.append(row.__dict__)
        if args.csv_dir:
            path = Path(args.csv_dir) / f"radii_n{n}.csv"
            run.csv(path, ["tree", "spectral_radius"], ((i, float(v)) for i, v in enumerate(radii)))
    out = {"rows": rows, "all_pass": all(r["maximisers_all_stars"] and r["all_below_n_minus_1"]
                                          and abs(r["max_radius"] - r["expected_star_radius"]) <= 1e-9
                                          for r in rows)}
    if args.out:
        run.json(args.out, out)
    _emit(out)
    run.finish(args.out)
    return 0 if out["all_pass"] else 1


# ka ------------------------------------------------------------------------

def _decomposition(name, n, c):
    if name == "exp_log_product":
        return ka.exp_log_product()
    if name == "constant":
        return ka.constant(n, c)
    return ka.get_decomposition(name, n=n)


def cmd_ka_build(args):
    run = _Run("ka build", args)
    dec = _decomposition(args.decomp, args.n, args.c)
    net = ka.assemble(dec, args.sigma, args.step)
    err = ka.composite_error(net, dec, args.grid)
    report = {
        "decomposition": dec.name,
        "n": dec.n,
        "sigma": args.sigma,
        "outer_tolerance": args.sigma / (4 * dec.n + 2),
        "composite_error": err,
        "within_sigma": err <= args.sigma,
        "width": ka.width_of(net),
        "width_bound": 2 * dec.n**2 + dec.n,
    }
    if args.out:
        run.json(args.out, net.to_dict())
        run.json(Path(args.out).with_name(Path(args.out).stem + ".report.json"), report)
    _emit(report)
    run.finish(args.out)
    return 0


def cmd_ka_eval(args):
    run = _Run("ka eval", args)
    run.inputs.append(args.net)
    net = ka.KANet.from_dict(read_json(args.net))
    params = dict(net.params)
    dec = _decomposition(net.decomposition, params.get("n", net.n), params.get("c", 1.0))
    err = ka.composite_error(net, dec, args.grid)
    report = {"decomposition": dec.name, "n": net.n, "sigma": net.sigma, "composite_error": err,
              "within_sigma": err <= net.sigma, "width": ka.width_of(net)}
    if args.out:
        run.json(args.out, report)
    _emit(report)
    run.finish()
    return 0


# bounds --------------------------------------------------------------------

def _inputs(args):
    return bounds.BoundInputs(args.samples, args.gamma, args.data_bound, args.delta, args.classes)


def _profile(obj):
    if isinstance(obj, dict) and "layers" in obj:
        return bounds.NormProfile.from_dict(obj)
    return bounds.profile_from_matrices([np.asarray(m, dtype=float) for m in obj])


def cmd_bounds_eval(args):
    run = _Run("bounds eval", args)
    run.inputs.append(args.profile)
    data = read_json(args.profile)
    prof = _profile(data.get("dense", data) if isinstance(data, dict) else data)
    inp = _inputs(args)
    out = {"profile": prof.to_dict()}
    if prof.is_dense_shaped():
        out["bartlett_dense"] = bounds.bartlett_dense(prof, inp)
    for v in bounds.AUX_VARIANTS:
        try:
            out[v] = bounds.aux_bound(prof, inp, v)
        except ValueError as exc:
            out[v] = None
            out.setdefault("skipped", {})[v] = str(exc)
    if args.out:
        run.json(args.out, out)
    _emit(out)
    run.finish()
    return 0


def cmd_bounds_compare(args):
    run = _Run("bounds compare", args)
    inp = _inputs(args)
    if args.profile:
        run.inputs.append(args.profile)
        data = read_json(args.profile)
        if "dense_matrices" in data:
            report = bounds.compare_bounds(
                [np.asarray(m) for m in data["dense_matrices"]],
                [np.asarray(m) for m in data["s3_matrices"]], inp)
        else:
            dp, sp = _profile(data["dense"]), _profile(data["s3"])
            dims = dp.column("in_dim")
            dense = {"bartlett": bounds.bartlett_dense(dp, inp), **bounds._aux_all(dp, inp)}
            s3 = {"bartlett": bounds.bartlett_s3(sp, dims, inp), **bounds._aux_all(sp, inp)}
            report = bounds.BoundReport(dense, s3, dp, sp)
    else:
        rng = np.random.default_rng(args.seed)
        dense_m, s3_m = bounds.random_stack(rng, args.input_dim, args.widths)
        report = bounds.compare_bounds(dense_m, s3_m, inp)
    if args.out:
        run.json(args.out, report.to_dict())
    print(report.table())
    run.finish(seed=args.seed)
    return 0


# train / ttest -------------------------------------------------------------

def cmd_train(args):
    run = _Run("train", args)
    f = builtins.get_function(args.target)
    interval = _interval(args, args.target)
    x = np.array(fit_uniform(lambda v: 0.0, interval, args.step).breakpoints)
    y = f(x)
    cfg = training.TrainConfig(args.lr, args.epochs, args.seed, args.init_scale)
    try:
        net, history = training.train_chain(args.layers, x, y, cfg, domain=interval)
    except training.TrainingDiverged as exc:
        if args.out:
            out = Path(args.out)
            run.csv(out / "loss.csv", ["epoch", "mse"], ((i, float(v)) for i, v in enumerate(exc.history)))
            run.finish(seed=args.seed)
        raise
    pred = net(x)
    rmse = float(np.sqrt(np.mean((pred - y) ** 2)))
    summary = {"layers": args.layers, "final_mse": history[-1], "final_rmse": rmse, "epochs": len(history)}
    if args.out:
        out = Path(args.out)
        run.csv(out / "loss.csv", ["epoch", "mse"], ((i, float(v)) for i, v in enumerate(history)))
        run.csv(out / "fit.csv", ["x", "target", "network"], zip(x, y, pred))
        run.json(out / "net.json", net.to_dict())
        run.json(out / "summary.json", summary)
    _emit(summary)
    run.finish(seed=args.seed)
    return 0


def cmd_ttest(args):
    run = _Run("ttest", args)
    run.inputs.append(args.csv)
    table = stats.SampleTable.read_csv(args.csv)
    cols = [c.strip() for c in args.cols.split(",")]
    if len(cols) != 2:
        raise UsageError("--cols takes exactly two names, e.g. III,IV")
    for c in cols:
        if c not in table:
            raise KeyError(f"column {c!r} not in {', '.join(table)}")
    test = stats.student_t_test if args.equal_var else stats.welch_t_test
    r = test(table.present(cols[0]), table.present(cols[1]))
    out = {"a": cols[0], "b": cols[1], "t": r.t, "dof": r.dof, "p": r.p,
           "test": "student" if args.equal_var else "welch"}
    if args.out:
        run.json(args.out, out)
    print(f"t={r.t:.6g} dof={r.dof:.6g} p={r.p:.4f}")
    run.finish()
    return 0


# parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="s3kit", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    a = sub.add_parser("approx", help="fit a builtin function, build the exact chain, verify, emit")
    a.add_argument("--fn", required=True, choices=sorted(builtins.FUNCTIONS))
    a.add_argument("--interval", nargs=2, type=float, metavar=("A", "B"))
    a.add_argument("--step", type=float, default=0.01)
    a.add_argument("--grid", type=int, default=10_000, help="verification grid points")
    a.add_argument("--out", help="network JSON path")
    a.add_argument("--csv", help="plot CSV path (default: <out>.csv)")
    a.set_defaults(func=cmd_approx)

    o = sub.add_parser("omega", help="topology family tools")
    osub = o.add_subparsers(dest="omega_command", parser_class=_Parser)
    g = osub.add_parser("gen", help="print a chain, star or random topology")
    g.add_argument("--n", type=int, required=True, help="hidden neurons")
    g.add_argument("--kind", choices=("random", "chain", "star"), default="random")
    g.add_argument("--seed", type=int, default=0)
    g.set_defaults(func=cmd_omega_gen)
    c = osub.add_parser("check", help="validate a topology")
    c.add_argument("--topology", required=True, help="parent list, e.g. I,0,I,2")
    c.set_defaults(func=cmd_omega_check)
    r = osub.add_parser("rewire", help="move one neuron's inbound edge")
    r.add_argument("--topology", required=True)
    r.add_argument("--neuron", type=int, required=True)
    r.add_argument("--parent", required=True, help="I or an earlier neuron index")
    r.set_defaults(func=cmd_omega_rewire)
    e = osub.add_parser("equiv", help="build members on one target and compare them")
    e.add_argument("--topology", action="append", help="repeatable")
    e.add_argument("--all", type=int, metavar="N", help="use every member with N hidden neurons")
    e.add_argument("--pwl", help="target JSON {breakpoints, values}; default: random")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--grid", type=int, default=10_000)
    e.add_argument("--out")
    e.set_defaults(func=cmd_omega_equiv)
    n = osub.add_parser("enum", help="list all members with N hidden neurons")
    n.add_argument("--n", type=int, required=True)
    n.add_argument("--out")
    n.set_defaults(func=cmd_omega_enum)

    s = sub.add_parser("spectra", help="spectral radius and tree/star classification of a topology")
    s.add_argument("--topology", required=True)
    s.add_argument("--tol", type=float, default=spectral.DEFAULT_TOL)
    s.add_argument("--out")
    s.set_defaults(func=cmd_spectra)

    t = sub.add_parser("trees", help="labeled tree sweeps")
    tsub = t.add_subparsers(dest="trees_command", parser_class=_Parser)
    sw = tsub.add_parser("sweep", help="extremal spectral radius over all labeled trees")
    sw.add_argument("--n-min", type=int, default=3)
    sw.add_argument("--n-max", type=int, default=8)
    sw.add_argument("--tol", type=float, default=spectral.DEFAULT_TOL)
    sw.add_argument("--csv-dir", help="write per-tree radii CSVs here")
    sw.add_argument("--out")
    sw.set_defaults(func=cmd_trees_sweep)

    k = sub.add_parser("ka", help="width-bounded composite approximator")
    ksub = k.add_subparsers(dest="ka_command", parser_class=_Parser)
    kb = ksub.add_parser("build")
    kb.add_argument("--decomp", required=True, choices=sorted(ka.DECOMPOSITIONS))
    kb.add_argument("--n", type=int, default=2)
    kb.add_argument("--c", type=float, default=1.0, help="value for the constant decomposition")
    kb.add_argument("--sigma", type=float, default=0.05)
    kb.add_argument("--step", type=float, default=0.02)
    kb.add_argument("--grid", type=int, default=101, help="validation points per axis")
    kb.add_argument("--out")
    kb.set_defaults(func=cmd_ka_build)
    ke = ksub.add_parser("eval")
    ke.add_argument("--net", required=True)
    ke.add_argument("--grid", type=int, default=101)
    ke.add_argument("--out")
    ke.set_defaults(func=cmd_ka_eval)

    b = sub.add_parser("bounds", help="generalization-bound calculators")
    bsub = b.add_subparsers(dest="bounds_command", parser_class=_Parser)
    for name, fn in (("eval", cmd_bounds_eval), ("compare", cmd_bounds_compare)):
        bp = bsub.add_parser(name)
        bp.add_argument("--profile", required=(name == "eval"),
                        help="JSON profile (layers with rho,s,b,B_F,d,n) or matrices")
        bp.add_argument("--samples", type=int, default=50_000)
        bp.add_argument("--gamma", type=float, default=1.0)
        bp.add_argument("--data-bound", type=float, default=1.0)
        bp.add_argument("--delta", type=float, default=0.05)
        bp.add_argument("--classes", type=int, default=10)
        bp.add_argument("--out")
        if name == "compare":
            bp.add_argument("--seed", type=int, default=0, help="random stack when no --profile")
            bp.add_argument("--input-dim", type=int, default=8)
            bp.add_argument("--widths", type=int, nargs="+", default=[4, 4, 4, 3])
        bp.set_defaults(func=fn)

    tr = sub.add_parser("train", help="gradient-train a one-neuron chain on a builtin target")
    tr.add_argument("--layers", type=int, default=10)
    tr.add_argument("--lr", type=float, default=1e-3)
    tr.add_argument("--epochs", type=int, default=20_000)
    tr.add_argument("--seed", type=int, default=0)
    tr.add_argument("--init-scale", type=float, default=0.1)
    tr.add_argument("--target", default="cubic_fig3", choices=sorted(builtins.FUNCTIONS))
    tr.add_argument("--interval", nargs=2, type=float, metavar=("A", "B"))
    tr.add_argument("--step", type=float, default=0.01)
    tr.add_argument("--out", help="output directory")
    tr.set_defaults(func=cmd_train)

    tt = sub.add_parser("ttest", help="Welch t-test between two CSV columns")
    tt.add_argument("--csv", required=True)
    tt.add_argument("--cols", required=True, help="two column names, e.g. III,IV")
    tt.add_argument("--equal-var", action="store_true", help="pooled-variance Student test instead")
    tt.add_argument("--out")
    tt.set_defaults(func=cmd_ttest)
    return p


def dispatch(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "func"):
        parser.print_help(sys.stderr)
        return 1
    try:
        return args.func(args)
    except OSError as exc:
        print(f"error: io: {exc}", file=sys.stderr)
        return 2
    except training.TrainingDiverged as exc:
        print(f"error: diverged: {exc}", file=sys.stderr)
        return 1
    except UsageError as exc:
        print(f"error: usage: {exc}", file=sys.stderr)
        return 1
    except (ValueError, KeyError, ArithmeticError, json.JSONDecodeError) as exc:
        kind = type(exc).__name__
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {kind}: {msg}", file=sys.stderr)
        return 1


def main() -> None:
    raise SystemExit(dispatch())


if __name__ == "__main__":
    main()
