"""Acceptance criteria 1-8, each at its stated tolerance and runtime budget.

Every criterion prints one ``[criterion N] PASS|FAIL ...`` line to the
terminal, also when pytest captures output.
"""
import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from vfnn.cli import gradcheck_config, main
from vfnn.core import FieldParams, FlowConfig, TrainConfig, init_params, make_rng
from vfnn.data import GenSpec, generate, read_csv, write_csv
from vfnn.export import (
    boundary_values,
    level_set_points,
    line_deviation,
    load_model,
    padded_bounds,
    read_table,
    save_model,
)
from vfnn.flow import transport, transport_batch
from vfnn.model import ModelState, compare_gradients, grad_analytic_n1, grad_backprop, grad_numeric, relative_error
from vfnn.train import aggregate, run_repeated, train

from conftest import reference_euler

RATES = (0.03, 0.3, 3.0)


@pytest.fixture
def report(capsys):
    def emit(name, ok, detail):
        with capsys.disabled():
            print(f"\n[criterion {name}] {'PASS' if ok else 'FAIL'}: {detail}")
    return emit


def test_criterion_1_gradient_oracle(report):
    rng = make_rng(20240101)
    t0 = time.perf_counter()
    worst_rel, failures = 0.0, 0
    for k in range(100):
        S = int(rng.choice([1, 2, 4]))
        N = int(rng.choice([1, 2, 3]))
        h = float(rng.choice([1.0, 0.5]))
        lam = float(rng.choice([0.0, 0.0005]))
        ds, state = gradcheck_config(2, S, N, h, seed=k)
        back = grad_backprop(ds, state, lam).flat()
        num = grad_numeric(ds, state, lam, probe=1e-6).flat()
        rel, _, ok = compare_gradients(back, num, rtol=1e-5, atol=1e-8)
        worst_rel = max(worst_rel, rel)
        failures += not ok
    elapsed = time.perf_counter() - t0
    ok = failures == 0 and elapsed < 10
    report(1, ok, f"100 configs, {failures} outside tolerance, max rel error {worst_rel:.2e}, {elapsed:.2f} s")
    assert failures == 0
    assert elapsed < 10


def test_criterion_2_analytic_formula(report):
    rng = make_rng(7)
    t0 = time.perf_counter()
    worst = 0.0
    for k in range(100):
        S = int(rng.integers(1, 5))
        lam = float(rng.choice([0.0, 0.0005]))
        ds, state = gradcheck_config(2, S, 1, 1.0, seed=1000 + k, m=1)
        closed = grad_analytic_n1(ds.points[0], ds.labels[0], state, lam).flat()
        back = grad_backprop(ds, state, lam).flat()
        worst = max(worst, float(relative_error(closed, back).max()))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-10 and elapsed < 1
    report(2, ok, f"max rel error {worst:.2e} over 100 per-sample configs, {elapsed:.3f} s")
    assert worst <= 1e-10
    assert elapsed < 1


def test_criterion_3_euler_convergence(report):
    # h = 1/8 against h = 1/16 over T = 1
    t0 = time.perf_counter()
    ratios = []
    for k in range(20):
        theta = init_params(2, 2, seed=k)[0]
        x0 = make_rng(500 + k).random(2)
        ref = reference_euler(x0, theta.centers, theta.directions, 1.0, 2**14)
        e1 = np.linalg.norm(transport(x0, theta, FlowConfig(1 / 8, 8)).endpoint - ref)
        e2 = np.linalg.norm(transport(x0, theta, FlowConfig(1 / 16, 16)).endpoint - ref)
        ratios.append(e1 / e2)
    elapsed = time.perf_counter() - t0
    ratios = np.array(ratios)
    inside = int(np.sum((ratios >= 1.5) & (ratios <= 2.5)))
    ok = inside == 20 and elapsed < 5
    report(3, ok, f"{inside}/20 ratios in [1.5, 2.5] (range {ratios.min():.3f}..{ratios.max():.3f}), {elapsed:.2f} s")
    assert inside == 20
    assert elapsed < 5


@pytest.fixture(scope="module")
def fig3_sweep():
    ds = generate(GenSpec("circles", 200, 0.1, 0))
    t0 = time.perf_counter()
    groups = {r: run_repeated(ds, TrainConfig(learning_rate=r, epochs=10000, num_gaussians=2), 30) for r in RATES}
    return ds, groups, time.perf_counter() - t0


def test_criterion_4a_cost_trend(report, fig3_sweep):
    _, groups, elapsed = fig3_sweep
    rows, ok = [], elapsed < 300
    for rate, runs in groups.items():
        mean, _ = aggregate(runs)
        first, last = float(mean[:100].mean()), float(mean[-100:].mean())
        ok &= last < first
        rows.append(f"rate {rate:g}: first100 {first:.4f} last100 {last:.4f}")
    report("4a", ok, "; ".join(rows) + f"; sweep {elapsed:.1f} s")
    for rate, runs in groups.items():
        mean, _ = aggregate(runs)
        assert mean[-100:].mean() < mean[:100].mean(), f"rate {rate}: cost did not decrease"
    assert elapsed < 300


def test_criterion_4b_std_grows_with_rate(report, fig3_sweep):
    _, groups, _ = fig3_sweep
    s_lo = float(np.std([r.final_cost for r in groups[0.03]]))
    s_hi = float(np.std([r.final_cost for r in groups[3.0]]))
    report("4b", s_hi > s_lo, f"final-cost std {s_hi:.4g} at rate 3.0 vs {s_lo:.4g} at rate 0.03")
    assert s_hi > s_lo


def test_criterion_5_separability(report, fig3_sweep):
    ds, groups, _ = fig3_sweep
    qualifying = [r for runs in groups.values() for r in runs if r.final_cost < 0.05]
    worst_acc, worst_dev_cells = 1.0, 0.0
    for r in qualifying:
        st = r.final_state
        moved = transport_batch(ds.points, st.theta, st.flow)
        z = moved @ st.head.weights + st.head.bias
        acc = float(np.mean((z > 0) == (ds.labels == 1)))
        bounds = padded_bounds(moved)
        bmap = boundary_values(st, "transformed", bounds, 64)
        xs, ys = bmap.axes
        cell = math.hypot(xs[1] - xs[0], ys[1] - ys[0])
        dev = line_deviation(level_set_points(bmap.values, xs, ys))
        worst_acc = min(worst_acc, acc)
        worst_dev_cells = max(worst_dev_cells, dev / cell)
    ok = bool(qualifying) and worst_acc >= 0.99 and worst_dev_cells <= 1.0
    report(5, ok, f"{len(qualifying)} runs with cost < 0.05; min transported accuracy {worst_acc:.4f}; "
                  f"max contour deviation {worst_dev_cells:.2e} cells")
    assert qualifying, "no run reached cost < 0.05"
    assert worst_acc >= 0.99
    assert worst_dev_cells <= 1.0


def test_criterion_6_regularization_damps(report):
    ds = generate(GenSpec("sin", 200, 0.1, 0))
    t0 = time.perf_counter()
    energy = {}
    for lam in (0.0, 0.0005):
        runs = run_repeated(ds, TrainConfig(learning_rate=3.0, reg_lambda=lam, epochs=5000), 30)
        energy[lam] = np.array([np.sum(r.final_state.theta.directions ** 2) for r in runs])
    elapsed = time.perf_counter() - t0
    wins = int(np.sum(energy[0.0005] < energy[0.0]))
    ok = wins >= 27 and elapsed < 180
    report(6, ok, f"{wins}/30 seeds with smaller sum ||V_i||^2 under the penalty "
                  f"(median {np.median(energy[0.0005]):.3g} vs {np.median(energy[0.0]):.3g}), {elapsed:.1f} s")
    assert wins >= 27
    assert elapsed < 180


def test_criterion_7_structural_identities(report, tmp_path):
    checks = {}
    pts = make_rng(3).normal(size=(50, 2))
    theta0 = FieldParams(make_rng(4).random((3, 2)), np.zeros((3, 2)))
    checks["V=0 identity"] = np.array_equal(transport_batch(pts, theta0, FlowConfig(0.7, 5)), pts)

    ds = generate(GenSpec("circles", 200, 0.1, 0))
    res = train(ds, TrainConfig(learning_rate=0.0, epochs=200))
    checks["eta=0 fixed point"] = res.final_state == res.initial_state and bool(np.all(res.costs == res.costs[0]))

    a, b = init_params(2, 4, 11), init_params(2, 4, 11)
    checks["init determinism"] = a[0] == b[0] and a[1] == b[1]

    run1 = train(ds, TrainConfig(learning_rate=0.3, epochs=100, seed=2))
    run2 = train(ds, TrainConfig(learning_rate=0.3, epochs=100, seed=2))
    checks["training determinism"] = run1.final_state == run2.final_state and np.array_equal(run1.costs, run2.costs)

    save_model(run1.final_state, tmp_path / "m.json")
    checks["checkpoint round trip"] = load_model(tmp_path / "m.json") == run1.final_state

    for kind in ("moons", "circles", "sin"):
        spec = GenSpec(kind, 200, 0.1, 5)
        d1, d2 = generate(spec), generate(spec)
        write_csv(d1, tmp_path / f"{kind}.csv")
        checks[f"{kind} determinism + csv round trip"] = d1 == d2 and read_csv(tmp_path / f"{kind}.csv", kind) == d1

    failed = [k for k, v in checks.items() if not v]
    report(7, not failed, f"{len(checks) - len(failed)}/{len(checks)} identities bit-exact" +
           (f"; failed: {', '.join(failed)}" if failed else ""))
    assert not failed


SCHEMAS = {
    "fig1_input.csv": ["x1", "x2", "label"],
    "fig1_transformed.csv": ["x1", "x2", "label"],
    "fig1_field.csv": ["x1", "x2", "k1", "k2"],
    "fig1_streamlines.csv": ["line", "index", "x1", "x2"],
    "fig1_meshgrid.csv": ["axis", "line", "index", "x1", "x2", "t1", "t2"],
    "fig3_cost_rate_0p03.csv": ["epoch", "mean", "std"],
    "fig3_cost_rate_0p3.csv": ["epoch", "mean", "std"],
    "fig3_cost_rate_3.csv": ["epoch", "mean", "std"],
    "fig4_original.csv": ["x1", "x2", "p"],
    "fig4_original_points.csv": ["x1", "x2", "label"],
    "fig4_transformed.csv": ["x1", "x2", "p"],
    "fig4_transformed_points.csv": ["x1", "x2", "label"],
    "fig4_field.csv": ["x1", "x2", "k1", "k2"],
    "fig5_lambda_0.csv": ["x1", "x2", "p"],
    "fig5_lambda_0_points.csv": ["x1", "x2", "label"],
    "fig5_lambda_0p0005.csv": ["x1", "x2", "p"],
    "fig5_lambda_0p0005_points.csv": ["x1", "x2", "label"],
}


def test_criterion_8_end_to_end_recipes(report, tmp_path, capsys):
    code = main(["reproduce", "all", "--out", str(tmp_path)])
    capsys.readouterr()
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    problems = []
    files = [Path(f) for fs in manifest.values() for f in fs]
    for f in files:
        if not f.exists():
            problems.append(f"missing {f.name}")
        elif f.suffix == ".csv":
            header, rows = read_table(f)
            if f.name in SCHEMAS and header != SCHEMAS[f.name]:
                problems.append(f"{f.name}: header {header}")
            if not np.all(np.isfinite(rows)):
                problems.append(f"{f.name}: non-finite values")
            if header[-1] == "p" and not np.all((rows[:, -1] > 0) & (rows[:, -1] < 1)):
                problems.append(f"{f.name}: probability outside (0, 1)")
        elif f.suffix == ".svg":
            import xml.etree.ElementTree as ET
            if not ET.parse(f).getroot().tag.endswith("svg"):
                problems.append(f"{f.name}: not svg")
        elif f.suffix == ".json":
            load_model(f)
    missing_schema = [name for name in SCHEMAS if not (tmp_path / name).exists()]
    problems += [f"missing {n}" for n in missing_schema]
    _, cost_rows = read_table(tmp_path / "fig3_cost_rate_0p3.csv")
    if cost_rows.shape[0] != 10001:
        problems.append(f"fig3 curve has {cost_rows.shape[0]} rows")
    ok = code == 0 and not problems
    report(8, ok, f"{len(files)} files from fig1/fig3/fig4/fig5 re-parsed" + (f"; problems: {problems}" if problems else ""))
    assert code == 0
    assert not problems
