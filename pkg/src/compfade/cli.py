"""Command-line front end: figure data as CSV plus a validation suite.

Subcommands
-----------
pdf          composite-density grids over a channel-parameter sweep
power-alloc  water-filling policy surfaces and capacity-vs-budget tables
joint-alloc  full iteration trace of the joint bandwidth-power allocator
energy       reflecting-surface vs relay energy-efficiency sweeps
validate     deterministic self-check suites (identities, normalization,
             Monte Carlo vs quadrature, power balance)

Every command is deterministic for a given (config, seed, threads) and
writes a sidecar `<out>.config.txt` echoing the effective configuration.
Exit codes: 0 success, 1 validation failure, 2 config error, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import channel, energy, joint_alloc, power_alloc, specfun
from .config import ConfigError, ExperimentConfig
from .numerics import (
    McConfig,
    QuadratureConfig,
    ToleranceNotReached,
    integrate_semi_infinite,
)

_FLOAT_FMT = "{:.11e}"

_PDF_AXES = ("k", "n_reflectors", "fading_m", "shadowing_ms", "pathloss_exp")
_INT_AXES = ("k", "n_reflectors")
_DEFAULT_SWEEPS = {
    "pdf": ("k", [1.0, 2.0, 3.0, 4.0]),
    "power-alloc": ("shadowing_ms", [1.0, 2.0, 5.0, 10.0]),
    "energy": ("avg_power", list(np.linspace(0.01, 1.0, 10))),
}


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return _FLOAT_FMT.format(float(value))
    return str(value)


def _write_csv(path: str, header: list[str], rows) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _write_sidecar(out_path: str, cfg: ExperimentConfig) -> None:
    Path(out_path + ".config.txt").write_text(cfg.effective_text())


def _sweep_axis(cfg: ExperimentConfig, command: str) -> tuple[str, list[float]]:
    default_axis, default_values = _DEFAULT_SWEEPS[command]
    if not cfg.sweep_name:
        return default_axis, default_values
    values = list(np.linspace(cfg.sweep_start, cfg.sweep_stop, cfg.sweep_points))
    if cfg.sweep_name in _INT_AXES:
        values = [float(int(round(v))) for v in values]
    return cfg.sweep_name, values


def cmd_pdf(cfg: ExperimentConfig, args) -> int:
    axis, values = _sweep_axis(cfg, "pdf")
    if axis not in _PDF_AXES:
        raise ConfigError(f"pdf sweep axis must be one of {_PDF_AXES}, got {axis!r}")
    h = np.linspace(cfg.h_min, cfg.h_max, cfg.h_points)
    rows = []
    for v in values:
        cp = cfg.channel_params(**{axis: v})
        dens = np.asarray(channel.pdf_composite(h, cp))
        norm = dens / cp.pathloss_product
        for hi, di, ni in zip(h, dens, norm):
            rows.append((axis, v, hi, di, ni))
    _write_csv(args.out, ["axis", "sweep_value", "h", "density", "density_normalized"], rows)
    _write_sidecar(args.out, cfg)
    return 0


def cmd_power_alloc(cfg: ExperimentConfig, args) -> int:
    axis, values = _sweep_axis(cfg, "power-alloc")
    if axis not in ("fading_m", "shadowing_ms"):
        raise ConfigError(
            f"power-alloc sweeps fading_m or shadowing_ms, got {axis!r}"
        )
    method = "exact" if args.exact_threshold else "closed-form"
    h = np.linspace(cfg.h_min, cfg.h_max, cfg.h_points)
    rows = []
    for v in values:
        cp = cfg.channel_params(**{axis: v})
        pol = power_alloc.make_policy(cp, cfg.power_budget(), method=method)
        power = np.asarray(power_alloc.policy_eval(pol, h))
        for hi, pi in zip(h, power):
            rows.append(("policy", v, hi, pi, ""))
    cp = cfg.channel_params()
    for pbar in np.linspace(cfg.avg_power, cfg.peak_power, 5):
        pb = cfg.power_budget(avg_power=pbar)
        pol = power_alloc.make_policy(cp, pb, method=method)
        adapted = power_alloc.ergodic_capacity_p1(cp, pb, pol)
        baseline = power_alloc.rayleigh_baseline_capacity(cp, pb)
        rows.append(("capacity", "", pbar, adapted, baseline))
    _write_csv(
        args.out,
        ["record", "sweep_value", "x", "value_a", "value_b"],
        rows,
    )
    _write_sidecar(args.out, cfg)
    return 0


def cmd_joint_alloc(cfg: ExperimentConfig, args) -> int:
    problem = cfg.joint_problem()
    scfg = cfg.solver_config()
    result = joint_alloc.solve(problem, scfg, keep_trace=True)
    k = problem.k
    header = (
        ["iteration"]
        + [f"bandwidth_{j+1}_hz" for j in range(k)]
        + [f"power_{j+1}_w" for j in range(k)]
        + ["capacity_bps", "flag"]
    )
    tr = result.trace
    rows = []
    last = len(tr.iterations) - 1
    for i in range(len(tr.iterations)):
        flag = ""
        if i == last:
            flag = "converged" if result.converged else "max-iterations"
        rows.append(
            (int(tr.iterations[i]), *tr.bandwidths[i], *tr.powers[i], tr.capacity[i], flag)
        )
    fixed = joint_alloc.solve_fixed_bandwidth(problem, scfg)
    rows.append(("", *fixed.bandwidths, *fixed.powers, fixed.capacity, "fixed-bandwidth"))
    _write_csv(args.out, header, rows)
    _write_sidecar(args.out, cfg)
    return 0


def cmd_energy(cfg: ExperimentConfig, args) -> int:
    axis, values = _sweep_axis(cfg, "energy")
    if axis != "avg_power":
        raise ConfigError(f"energy sweeps avg_power only, got {axis!r}")
    rows = []
    family = 0
    for k in cfg.int_list("ee_k_list"):
        for n in cfg.int_list("ee_n_list"):
            scenario = cfg.scenario(k=k, n_reflectors=n)
            mc = McConfig(
                seed=cfg.seed + 10_000 * family,
                samples=cfg.samples,
                chunk_size=cfg.chunk_size,
            )
            for point in energy.ee_sweep(scenario, values, mc, threads=args.threads):
                rows.append(
                    (
                        k,
                        n,
                        point["avg_power"],
                        point["ee_relay"],
                        point["ee_irs"],
                        point["se_relay"],
                        point["se_irs"],
                    )
                )
            family += 1
    _write_csv(
        args.out,
        ["k", "n_reflectors", "avg_power_w", "ee_relay_bpj", "ee_irs_bpj",
         "se_relay_bpj", "se_irs_bpj"],
        rows,
    )
    _write_sidecar(args.out, cfg)
    return 0


def _validate_suites(cfg: ExperimentConfig, threads: int) -> list[tuple[str, bool, float, float]]:
    """Run the self-check suites; returns (name, passed, measured, tolerance)."""
    results = []
    rng = np.random.default_rng(cfg.seed)

    # parameter-collapse identity of the hypergeometric evaluator
    worst = 0.0
    for _ in range(100):
        a = rng.uniform(0.5, 30.0)
        b = rng.uniform(0.5, 50.0)
        z = rng.uniform(1e-3, 50.0)
        got = specfun.gauss_2f1(a, b, b, -z)
        want = (1.0 + z) ** (-a)
        worst = max(worst, abs(got - want) / abs(want))
    results.append(("identity_2f1_collapse", worst <= 1e-10, worst, 1e-10))

    # Meijer-G route vs elementary log-space density route
    worst = 0.0
    fading = cfg.fading()
    grid = np.linspace(0.05, 40.0, 50)
    for n in (1, 2, 4):
        fast = np.asarray(channel.pdf_sum_gain(grid, fading, n, method="elementary"))
        slow = np.asarray(channel.pdf_sum_gain(grid, fading, n, method="meijer-g"))
        scale = np.maximum(np.abs(fast), 1e-300)
        worst = max(worst, float(np.max(np.abs(fast - slow) / scale)))
    results.append(("identity_meijer_density", worst <= 1e-9, worst, 1e-9))

    # exact gamma-ratio vs the ln-gamma route
    worst = 0.0
    for a in np.linspace(1.1, 200.0, 25):
        for b in np.linspace(1.1, 200.0, 25):
            via_lgamma = np.exp(
                specfun.ln_gamma(a - 1.0) + specfun.ln_gamma(b + 1.0)
                - specfun.ln_gamma(a) - specfun.ln_gamma(b)
            )
            exact = specfun.gamma_ratio_epsilon(a, b)
            worst = max(worst, abs(via_lgamma - exact) / exact)
    results.append(("gamma_ratio_exact", worst <= 1e-12, worst, 1e-12))

    # density normalization
    quad = QuadratureConfig()
    worst = 0.0
    for m in (1.0, 5.0):
        for ms in (1.0, 5.0):
            for n in (4, 16):
                f = channel.FadingParams(m, ms, cfg.mean_gain)
                val = integrate_semi_infinite(
                    lambda x, f=f, n=n: np.asarray(channel.pdf_sum_gain(x, f, n)), quad
                )
                worst = max(worst, abs(val - 1.0))
    results.append(("normalization_sum_gain", worst <= 1e-6, worst, 1e-6))

    cp = cfg.channel_params()
    val = integrate_semi_infinite(
        lambda x: np.asarray(channel.pdf_composite(x, cp)), quad
    )
    err = abs(val / cp.pathloss_product - 1.0)
    results.append(("normalization_composite", err <= 1e-6, err, 1e-6))

    # exact threshold satisfies the average-power balance
    pb = cfg.power_budget()
    pol = power_alloc.make_policy(cp, pb, method="exact")
    spent = power_alloc.average_spent_power(pol)
    err = abs(spent - pb.avg_power) / pb.avg_power
    results.append(("waterfill_balance_exact", err <= 5e-3, err, 5e-3))

    # Monte Carlo vs quadrature where the composite model is exact (K=N=1)
    cp1 = cfg.channel_params(k=1, n_reflectors=1)
    pol1 = power_alloc.make_policy(cp1, pb, method="exact")
    quad_cap = power_alloc.ergodic_capacity_p1(cp1, pb, pol1) / cp1.pathloss_product
    mc_cap, se = power_alloc.ergodic_capacity_p1_mc(
        cp1, pb, pol1, cfg.mc_config(), threads=threads
    )
    err = abs(mc_cap - quad_cap)
    tol = 6.0 * se
    results.append(("mc_vs_quadrature_capacity", err <= tol, err, tol))

    # sampling matches the composite model exactly at K=N=1
    gap = channel.sampling_model_gap(cp1, min(cfg.samples, 200_000), cfg.seed)
    tol = 0.005 + 2.0 / np.sqrt(min(cfg.samples, 200_000))
    results.append(("sampling_model_exact_k1n1", gap <= tol, gap, tol))

    return results


def cmd_validate(cfg: ExperimentConfig, args) -> int:
    results = _validate_suites(cfg, args.threads)
    lines = []
    for name, ok, measured, tol in results:
        verdict = "PASS" if ok else "FAIL"
        lines.append(f"{verdict} {name} measured={measured:.6e} tol={tol:.6e}")
    cp = cfg.channel_params()
    gap = channel.sampling_model_gap(cp, min(cfg.samples, 200_000), cfg.seed)
    lines.append(f"INFO composite_model_gap_ks measured={gap:.6e} (model vs exact sampler)")
    report = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(report)
        _write_sidecar(args.out, cfg)
    sys.stdout.write(report)
    return 0 if all(r[1] for r in results) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="compfade",
        description="Composite-fading channel model, resource allocation, and "
        "energy-efficiency experiments (CSV output).",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, needs_out=True):
        p.add_argument("--config", default=None, help="key=value config file")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--threads", type=int, default=1, help="worker threads for Monte Carlo")
        if needs_out:
            p.add_argument("--out", required=True, help="output CSV path")

    p = sub.add_parser("pdf", help="composite density sweep grids")
    add_common(p)
    p.set_defaults(func=cmd_pdf)

    p = sub.add_parser("power-alloc", help="water-filling policy and capacity tables")
    add_common(p)
    p.add_argument(
        "--exact-threshold",
        action="store_true",
        help="solve the outage threshold exactly instead of the closed form",
    )
    p.set_defaults(func=cmd_power_alloc)

    p = sub.add_parser("joint-alloc", help="joint bandwidth-power iteration trace")
    add_common(p)
    p.set_defaults(func=cmd_joint_alloc)

    p = sub.add_parser("energy", help="energy-efficiency sweeps")
    add_common(p)
    p.set_defaults(func=cmd_energy)

    p = sub.add_parser("validate", help="run the self-check suites")
    add_common(p, needs_out=False)
    p.add_argument("--out", default=None, help="optional report path")
    p.set_defaults(func=cmd_validate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = ExperimentConfig.load(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        return args.func(cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ToleranceNotReached, specfun.ConvergenceError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
