"""Command-line interface: ``vfnn {gen,train,sweep,gradcheck,reproduce}``.

Every flag can also come from a JSON config file (``--config``); explicit
flags win over file values.  ``--save-config`` writes the resolved flags back
out in the same format.  Set ``VFNN_THREADS`` to cap worker threads.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import _backend
from .core import Dataset, DatasetError, FlowConfig, LinearHead, TrainConfig, init_params, make_rng
from .data import KINDS, GenSpec, generate, read_csv, split, write_csv
from .export import (
    ModelFormatError,
    export_boundary_map,
    export_cost_curves,
    export_field_plot,
    export_meshgrid_distortion,
    export_scatter,
    export_streamlines,
    load_model,
    padded_bounds,
    rate_tag,
    save_model,
)
from .flow import transport_batch
from .model import (
    ModelState,
    compare_gradients,
    grad_analytic_n1,
    grad_backprop,
    grad_numeric,
    predict,
    relative_error,
)
from .train import RunResult, sweep, train

log = logging.getLogger("vfnn")

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_DIVERGED = 4
EXIT_IO = 5

DEFAULT_RATES = (0.03, 0.3, 3.0)
GRAD_TOL = 1e-5
GRAD_ATOL = 1e-8
ANALYTIC_TOL = 1e-10

# keys never stored in a config file
_NON_CONFIG = {"command", "config", "save_config", "verbose", "func"}


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


# ------------------------------------------------------------------ parser


def _add_data_flags(p, m_default=200):
    p.add_argument("--dataset", default="circles", help=f"dataset kind ({', '.join(KINDS)}) or path to a CSV file")
    p.add_argument("--m", type=int, default=m_default, help="number of generated samples")
    p.add_argument("--noise", type=float, default=0.1, help="Gaussian noise std of generated points")
    p.add_argument("--data-seed", type=int, default=0, help="seed of the dataset generator")
    p.add_argument("--radius-ratio", type=float, default=0.5, help="circles: inner/outer radius")
    p.add_argument("--amplitude", type=float, default=1.0, help="sin: curve amplitude")
    p.add_argument("--margin", type=float, default=0.3, help="sin: empty band half-width around the curve")


def _add_model_flags(p):
    p.add_argument("--seed", type=int, default=0, help="parameter initialization seed")
    p.add_argument("--gaussians", type=int, default=2, help="number of Gaussians S")
    p.add_argument("--steps", type=int, default=1, help="Euler steps N")
    p.add_argument("--step-size", type=float, default=1.0, help="Euler step size h")
    p.add_argument("--lambda", dest="lam", type=float, default=0.0, help="L2 penalty on the direction vectors")
    p.add_argument("--epochs", type=int, default=10000, help="full-batch gradient descent epochs")


def _add_common(p):
    p.add_argument("--out", default="out", help="output file or directory")
    p.add_argument("--format", choices=("text", "json"), default="text", help="summary format on stdout")
    p.add_argument("--config", default=None, help="JSON config file supplying flag values")
    p.add_argument("--save-config", default=None, help="write the resolved flags to this JSON file")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(prog="vfnn", description="Vector-field neural network experiments.", formatter_class=fmt)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic dataset CSV", formatter_class=fmt)
    _add_data_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_gen, out=None)

    p = sub.add_parser("train", help="train one model", formatter_class=fmt)
    _add_data_flags(p)
    _add_model_flags(p)
    p.add_argument("--rate", type=float, default=0.03, help="learning rate")
    p.add_argument("--holdout", type=float, default=0.0, help="fraction held out for evaluation (0 = train on all)")
    p.add_argument("--resume", default=None, help="checkpoint to continue from; --epochs counts the total")
    p.add_argument("--plots", action="store_true", help="also write boundary maps and field plots")
    p.add_argument("--resolution", type=int, default=64, help="grid resolution of plots")
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sweep", help="repeated runs over several learning rates", formatter_class=fmt)
    _add_data_flags(p)
    _add_model_flags(p)
    p.add_argument("--rates", type=float, nargs="+", default=list(DEFAULT_RATES), help="learning rates")
    p.add_argument("--repeats", type=int, default=30, help="runs per rate (seeds seed, seed+1, ...)")
    _add_common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("gradcheck", help="compare gradients with finite differences", formatter_class=fmt)
    p.add_argument("--n", type=int, default=2, help="input dimension")
    p.add_argument("--m", type=int, default=8, help="random samples in the check batch")
    p.add_argument("--seed", type=int, default=0, help="seed of the random configuration")
    p.add_argument("--gaussians", type=int, default=2, help="number of Gaussians S")
    p.add_argument("--steps", type=int, default=1, help="Euler steps N")
    p.add_argument("--step-size", type=float, default=1.0, help="Euler step size h")
    p.add_argument("--lambda", dest="lam", type=float, default=0.0005, help="L2 penalty on the direction vectors")
    p.add_argument("--probe", type=float, default=1e-6, help="finite-difference probe")
    p.add_argument("--perturb-gradient", type=float, default=0.0,
                   help="add this to every back-propagated component (negative control)")
    _add_common(p)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("reproduce", help="write every file of one figure recipe", formatter_class=fmt)
    p.add_argument("figure", choices=("fig1", "fig3", "fig4", "fig5", "all"))
    p.add_argument("--seed", type=int, default=0, help="initialization seed (fig3: first seed)")
    p.add_argument("--data-seed", type=int, default=0, help="seed of the dataset generator")
    p.add_argument("--epochs", type=int, default=None, help="override the recipe's epoch count")
    p.add_argument("--repeats", type=int, default=None, help="fig3: override the number of runs per rate")
    p.add_argument("--resolution", type=int, default=64, help="grid resolution of plots")
    _add_common(p)
    p.set_defaults(func=cmd_reproduce)
    return parser


def resolve_args(argv) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                values = json.load(fh)
        except OSError as exc:
            raise CliError(f"cannot read config {args.config}: {exc}", EXIT_IO) from None
        except json.JSONDecodeError as exc:
            raise CliError(f"malformed config {args.config}: {exc}", EXIT_USAGE) from None
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sub._actions}
        unknown = set(values) - known
        if unknown:
            raise CliError(f"unknown keys in {args.config}: {', '.join(sorted(unknown))}", EXIT_USAGE)
        sub.set_defaults(**values)
        args = parser.parse_args(argv)
    return args


def config_dict(args: argparse.Namespace) -> dict:
    return {k: v for k, v in vars(args).items() if k not in _NON_CONFIG}


# ---------------------------------------------------------------- helpers


def _emit(args, payload: dict, text: str):
    if args.format == "json":
        print(json.dumps(payload, indent=1, default=float))
    else:
        print(text)


def load_dataset(args) -> Dataset:
    src = args.dataset
    if src in KINDS:
        try:
            spec = GenSpec(
                src, args.m, args.noise, args.data_seed,
                radius_ratio=args.radius_ratio, amplitude=args.amplitude, margin=args.margin,
            )
            return generate(spec)
        except ValueError as exc:
            raise CliError(str(exc), EXIT_DATA) from None
    path = Path(src)
    if not path.is_file():
        raise CliError(f"dataset {src!r} is neither a known kind ({', '.join(KINDS)}) nor a readable file", EXIT_DATA)
    return read_csv(path)


def _train_config(args, rate: float) -> TrainConfig:
    try:
        return TrainConfig(
            learning_rate=rate,
            reg_lambda=args.lam,
            epochs=args.epochs,
            seed=args.seed,
            num_gaussians=args.gaussians,
            flow=FlowConfig(args.step_size, args.steps),
        )
    except ValueError as exc:
        raise CliError(str(exc), EXIT_USAGE) from None


def _write_history(path, result: RunResult, offset: int = 0):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("epoch,cost,accuracy\n")
        for i, (c, a) in enumerate(zip(result.costs, result.accuracies)):
            fh.write(f"{i + offset},{format(float(c), '.17g')},{format(float(a), '.17g')}\n")


def _model_plots(state: ModelState, ds: Dataset, outdir: Path, prefix: str, resolution: int) -> list[Path]:
    bounds = padded_bounds(ds.points)
    export_boundary_map(state, ds, "original", outdir / f"{prefix}_original", bounds, resolution)
    export_boundary_map(state, ds, "transformed", outdir / f"{prefix}_transformed", None, resolution)
    export_field_plot(state.theta, bounds, max(2, resolution // 3), outdir / f"{prefix}_field")
    return [
        outdir / f"{prefix}_{s}.{e}"
        for s in ("original", "transformed", "field")
        for e in ("svg", "csv")
    ] + [outdir / f"{prefix}_original_points.csv", outdir / f"{prefix}_transformed_points.csv"]


# ---------------------------------------------------------------- commands


def cmd_gen(args) -> int:
    ds = load_dataset(args)
    out = Path(args.out or f"{ds.name}.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    write_csv(ds, out)
    c0, c1 = ds.class_counts()
    _emit(args, {"path": str(out), "m": len(ds), "n": ds.dim, "class0": c0, "class1": c1, "data_seed": args.data_seed},
          f"wrote {out}: m={len(ds)} n={ds.dim} class0={c0} class1={c1} data_seed={args.data_seed}")
    return EXIT_OK


def cmd_train(args) -> int:
    ds = load_dataset(args)
    ds, holdout = split(ds, args.holdout, args.data_seed)
    config = _train_config(args, args.rate)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)

    initial, offset = None, 0
    if args.resume:
        initial, meta = load_model(args.resume, with_meta=True)
        offset = int(meta.get("epochs_completed", 0))
        remaining = args.epochs - offset
        if remaining < 1:
            raise CliError(f"checkpoint already has {offset} epochs; --epochs must exceed it", EXIT_USAGE)
        config = replace(config, epochs=remaining)

    log.info("training on %s (m=%d) with %s, backend %s", ds.name, len(ds), config, _backend.BACKEND)
    result = train(ds, config, initial=initial)
    done = offset + result.epochs_completed
    meta = {"epochs_completed": done, "train_config": replace(config, epochs=args.epochs).to_dict(),
            "dataset": ds.name, "aborted": result.aborted}
    save_model(result.final_state, outdir / "model.json", meta)
    _write_history(outdir / "history.csv", result, offset)
    files = [outdir / "model.json", outdir / "history.csv"]
    if args.plots:
        files += _model_plots(result.final_state, ds, outdir, "boundary", args.resolution)

    acc = float(np.mean((predict(ds.points, result.final_state) > 0.5) == (ds.labels == 1)))
    payload = {"seed": config.seed, "backend": _backend.BACKEND, "epochs_completed": done,
               "initial_cost": float(result.costs[0]), "final_cost": result.final_cost,
               "train_accuracy": acc, "aborted": result.aborted, "files": [str(f) for f in files]}
    text = (f"seed={config.seed} epochs={done} cost {result.costs[0]:.6g} -> {result.final_cost:.6g} "
            f"train_accuracy={acc:.4f}")
    if holdout is not None:
        hacc = float(np.mean((predict(holdout.points, result.final_state) > 0.5) == (holdout.labels == 1)))
        payload["holdout_accuracy"] = hacc
        text += f" holdout_accuracy={hacc:.4f}"
    if result.aborted:
        text += " (ABORTED: non-finite cost or gradient)"
    _emit(args, payload, text)
    return EXIT_DIVERGED if result.aborted else EXIT_OK


def cmd_sweep(args) -> int:
    ds = load_dataset(args)
    base = _train_config(args, args.rates[0])
    if args.repeats < 1:
        raise CliError("--repeats must be >= 1", EXIT_USAGE)
    stats = sweep(ds, base, args.rates, args.repeats)
    outdir = Path(args.out)
    files = export_cost_curves([s.runs for s in stats], outdir)
    rows = [{"rate": s.rate, "final_mean": float(s.mean[-1]), "final_std": float(s.std[-1]), "aborted": s.aborted}
            for s in stats]
    lines = [f"seeds {args.seed}..{args.seed + args.repeats - 1}, data_seed {args.data_seed}"]
    for r in rows:
        line = f"rate {r['rate']:g}: final cost {r['final_mean']:.6g} +/- {r['final_std']:.3g}"
        if r["aborted"]:
            line += f" ({r['aborted']} runs aborted)"
        lines.append(line)
    _emit(args, {"seed": args.seed, "repeats": args.repeats, "data_seed": args.data_seed, "rates": rows,
                 "files": [str(f) for f in files]}, "\n".join(lines))
    return EXIT_DIVERGED if any(s.aborted for s in stats) else EXIT_OK


def gradcheck_config(n: int, S: int, N: int, h: float, seed: int, m: int = 8):
    """Random (dataset, state) pair for gradient checks."""
    theta, head = init_params(n, S, seed)
    rng = make_rng(seed + 1_000_003)
    head = LinearHead(head.weights, rng.normal())
    pts = rng.uniform(-1.0, 2.0, size=(m, n))
    labels = (rng.random(m) < 0.5).astype(int)
    return Dataset(pts, labels, "gradcheck"), ModelState(theta, head, FlowConfig(h, N))


def cmd_gradcheck(args) -> int:
    try:
        ds, state = gradcheck_config(args.n, args.gaussians, args.steps, args.step_size, args.seed, args.m)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_USAGE) from None
    back = grad_backprop(ds, state, args.lam).flat() + args.perturb_gradient
    num = grad_numeric(ds, state, args.lam, args.probe).flat()
    err, abs_err, ok = compare_gradients(back, num, GRAD_TOL, GRAD_ATOL)
    payload = {"max_rel_error_vs_fd": err, "max_abs_error_vs_fd": abs_err, "tolerance": GRAD_TOL, "ok": ok}
    text = [f"backprop vs finite differences: max rel error {err:.3e}, max abs error {abs_err:.3e} "
            f"(tol rel {GRAD_TOL:g} / abs {GRAD_ATOL:g})"]
    if args.steps == 1 and args.step_size == 1.0:
        per = [grad_analytic_n1(x, y, state, args.lam).flat() for x, y in zip(ds.points, ds.labels)]
        aerr = float(relative_error(np.mean(per, axis=0), back).max())
        payload["max_rel_error_analytic_vs_backprop"] = aerr
        text.append(f"closed form vs backprop: max rel error {aerr:.3e} (tol {ANALYTIC_TOL:g})")
        ok = ok and aerr <= ANALYTIC_TOL
        payload["ok"] = ok
    text.append("PASS" if ok else "FAIL")
    _emit(args, payload, "\n".join(text))
    return EXIT_OK if ok else EXIT_CHECK_FAILED


# ------------------------------------------------------------------ recipes


def _gen(kind: str, seed: int) -> Dataset:
    return generate(GenSpec(kind, 200, 0.1, seed))


def recipe_fig1(outdir: Path, seed: int, data_seed: int, epochs: int | None, resolution: int) -> list[Path]:
    """Moons: input scatter, transformed scatter, field, streamlines, meshgrid."""
    ds = _gen("moons", data_seed)
    cfg = TrainConfig(learning_rate=0.3, epochs=epochs or 10000, seed=seed)
    res = train(ds, cfg)
    st = res.final_state
    bounds = padded_bounds(ds.points)
    moved = transport_batch(ds.points, st.theta, st.flow)
    export_scatter(ds.points, ds.labels, outdir / "fig1_input", "input data", bounds)
    export_scatter(moved, ds.labels, outdir / "fig1_transformed", "transformed data")
    export_field_plot(st.theta, bounds, 21, outdir / "fig1_field")
    export_streamlines(st.theta, bounds, 9, outdir / "fig1_streamlines")
    export_meshgrid_distortion(st.theta, st.flow, bounds, 17, outdir / "fig1_meshgrid")
    save_model(st, outdir / "fig1_model.json", {"epochs_completed": res.epochs_completed, "train_config": cfg.to_dict()})
    return [outdir / f"fig1_{s}.{e}" for s in ("input", "transformed", "field", "streamlines", "meshgrid")
            for e in ("svg", "csv")] + [outdir / "fig1_model.json"]


def recipe_fig3(outdir: Path, seed: int, data_seed: int, epochs: int | None, repeats: int | None) -> list[Path]:
    """Circles cost curves for the three learning rates."""
    ds = _gen("circles", data_seed)
    stats = sweep(ds, TrainConfig(epochs=epochs or 10000, seed=seed), DEFAULT_RATES, repeats or 30)
    return export_cost_curves([s.runs for s in stats], outdir, prefix="fig3_cost")


def recipe_fig4(outdir: Path, seed: int, data_seed: int, epochs: int | None, resolution: int) -> list[Path]:
    """Circles: original-space map, vector field, transformed-space map."""
    ds = _gen("circles", data_seed)
    cfg = TrainConfig(learning_rate=0.3, epochs=epochs or 10000, seed=seed)
    res = train(ds, cfg)
    files = _model_plots(res.final_state, ds, outdir, "fig4", resolution)
    save_model(res.final_state, outdir / "fig4_model.json", {"epochs_completed": res.epochs_completed, "train_config": cfg.to_dict()})
    return files + [outdir / "fig4_model.json"]


def recipe_fig5(outdir: Path, seed: int, data_seed: int, epochs: int | None, resolution: int) -> list[Path]:
    """Sin: boundary maps without and with the L2 penalty."""
    ds = _gen("sin", data_seed)
    bounds = padded_bounds(ds.points)
    files = []
    for lam in (0.0, 0.0005):
        cfg = TrainConfig(learning_rate=3.0, reg_lambda=lam, epochs=epochs or 5000, seed=seed)
        res = train(ds, cfg)
        stem = outdir / f"fig5_lambda_{rate_tag(lam)}"
        export_boundary_map(res.final_state, ds, "original", stem, bounds, resolution)
        save_model(res.final_state, Path(f"{stem}_model.json"),
                   {"epochs_completed": res.epochs_completed, "train_config": cfg.to_dict()})
        files += [stem.with_suffix(".svg"), stem.with_suffix(".csv"), Path(f"{stem}_points.csv"), Path(f"{stem}_model.json")]
    return files


def cmd_reproduce(args) -> int:
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    figures = ("fig1", "fig3", "fig4", "fig5") if args.figure == "all" else (args.figure,)
    manifest = {}
    for fig in figures:
        log.info("reproducing %s into %s", fig, outdir)
        if fig == "fig3":
            files = recipe_fig3(outdir, args.seed, args.data_seed, args.epochs, args.repeats)
        else:
            recipe = {"fig1": recipe_fig1, "fig4": recipe_fig4, "fig5": recipe_fig5}[fig]
            files = recipe(outdir, args.seed, args.data_seed, args.epochs, args.resolution)
        manifest[fig] = [str(f) for f in files]
    with open(outdir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1)
    text = [f"seed {args.seed}, data_seed {args.data_seed}"] + [f"{fig}: {len(fs)} files" for fig, fs in manifest.items()]
    _emit(args, {"seed": args.seed, "data_seed": args.data_seed, "files": manifest}, "\n".join(text))
    return EXIT_OK


# --------------------------------------------------------------------- main


def main(argv=None) -> int:
    try:
        args = resolve_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except CliError as exc:
        print(f"vfnn: error: {exc}", file=sys.stderr)
        return exc.code
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.save_config:
            with open(args.save_config, "w", encoding="utf-8") as fh:
                json.dump(config_dict(args), fh, indent=1, sort_keys=True)
                fh.write("\n")
        return args.func(args)
    except CliError as exc:
        print(f"vfnn: error: {exc}", file=sys.stderr)
        return exc.code
    except (DatasetError, ModelFormatError) as exc:
        print(f"vfnn: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FloatingPointError as exc:
        print(f"vfnn: numeric divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except OSError as exc:
        print(f"vfnn: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
