"""Batch command-line front end.

Subcommands: julia-render, pressure, measure, verify, simulate.  Flags
override config-file values; outputs carry a content-hash suffix of the
resolved configuration so identical runs produce byte-identical files.
"""

from __future__ import annotations

import argparse
import os
import sys


def _cap_threads():
    cap = os.environ.get("RDS_SPHERE_THREADS")
    if not cap:
        return
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
                "NUMEXPR_NUM_THREADS"):
        os.environ.setdefault(var, cap)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="randrat",
        description="Random rational dynamics at desk scale: transfer operators, "
                    "pressure estimation, and verification reports.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in [
        ("julia-render", "escape-horizon image of the derivative criterion"),
        ("pressure", "separated-set pressure ladder with the cocycle cross-check"),
        ("measure", "eigenfunction, cocycle, conformal and equilibrium measures"),
        ("verify", "the quantitative lemma battery"),
        ("simulate", "a single trajectory dump"),
    ]:
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", default=None, help="INI config file")
        p.add_argument("--seed", type=int, default=None, help="override run seed")
        p.add_argument("--net", type=int, default=None, help="override net size")
        p.add_argument("--horizon", type=int, default=None, help="override horizon n")
        p.add_argument("--out", default=None, help="override output directory")
        p.add_argument("--ladder", default=None,
                       help="override the epsilon ladder, e.g. '0.2,0.1,0.05'")
        p.add_argument("--no-figures", action="store_true",
                       help="skip matplotlib figure rendering")
    return parser


def _load_config(args):
    from .config import RunConfig

    overrides = {
        "run.seed": args.seed,
        "net.size": args.net,
        "run.horizon": args.horizon,
        "output.directory": args.out,
        "pressure.eps_ladder": args.ladder.replace(",", " ") if args.ladder else None,
    }
    if args.no_figures:
        overrides["output.figures"] = "false"
    return RunConfig.load(args.config, overrides)


def cmd_julia_render(cfg):
    import numpy as np

    from . import iofmt
    from .sphere import normalize_arrays

    sys_ = cfg.build_system()
    h = cfg.get_int("render", "height")
    w = cfg.get_int("render", "width")
    xs = np.linspace(cfg.get_float("render", "x_min"), cfg.get_float("render", "x_max"), w)
    ys = np.linspace(cfg.get_float("render", "y_min"), cfg.get_float("render", "y_max"), h)
    big = cfg.get_float("render", "escape_threshold")
    max_iter = cfg.get_int("render", "max_iter")
    seq = sys_.sample_sequence(0, max_iter)
    panels = [_escape_field(seq, xs, ys, big, max_iter, flipped=False)]
    if cfg.get_bool("render", "inf_chart"):
        panels.append(_escape_field(seq, xs, ys, big, max_iter, flipped=True))
    field = np.concatenate(panels, axis=1)
    gray = np.zeros(field.shape, dtype=np.uint8)
    escaped = field > 0
    gray[escaped] = (55 + 200 * (1.0 - (field[escaped] - 1) / max_iter)).astype(np.uint8)
    rgb = np.stack([gray] * 3, axis=-1)
    outdir = cfg.get("output", "directory")
    ppm_path = iofmt.output_path(outdir, "julia", "ppm", cfg)
    iofmt.write_ppm(ppm_path, rgb)
    manifest = iofmt.output_path(outdir, "julia_manifest", "txt", cfg)
    iofmt.write_manifest(manifest, cfg, {
        "flagged_pixels": int(np.count_nonzero(escaped)),
        "panels": len(panels),
    })
    paths = [ppm_path, manifest]
    if cfg.get_bool("output", "figures"):
        from . import figures

        fig_path = iofmt.output_path(outdir, "julia", "png", cfg)
        extent = (xs[0], xs[-1], ys[0], ys[-1])
        figures.save_julia_figure(fig_path, panels[0], extent)
        paths.append(fig_path)
    return paths


def _escape_field(seq, xs, ys, big, max_iter, *, flipped):
    import numpy as np

    X, Y = np.meshgrid(xs, ys)
    z = (X + 1j * Y).ravel()
    from .sphere import normalize_arrays

    w, fl = normalize_arrays(z, np.zeros(z.shape, bool))
    if flipped:
        fl = ~fl
    acc = np.ones(len(w))
    out = np.zeros(len(w), dtype=np.int32)
    alive = np.ones(len(w), dtype=bool)
    for n in range(1, max_iter + 1):
        t = seq[n - 1][0]
        acc[alive] = acc[alive] * t.sph_deriv_nf(w[alive], fl[alive])
        hit = alive & (acc >= big)
        out[hit] = n
        alive &= ~hit
        if not np.any(alive):
            break
        nw, nf = t.eval_nf(w[alive], fl[alive])
        w[alive] = nw
        fl[alive] = nf
    return out.reshape(X.shape)


def cmd_pressure(cfg):
    import math

    import numpy as np

    from . import iofmt, thermo, transfer
    from .sphere import standard_net

    net = standard_net(cfg.get_int("net", "size"))
    sys_ = cfg.build_system(net)
    n_ladder = cfg.get_ints("pressure", "n_ladder")
    eps_ladder = cfg.get_floats("pressure", "eps_ladder")
    samples = cfg.get_int("pressure", "samples")
    g_horizon = cfg.get_int("run", "g_horizon")
    lam_samples = max(1, min(samples, 5))
    rows = []
    for n in n_ladder:
        lam_logs = []
        for s in range(lam_samples):
            draw = sys_ if sys_.mode == "explicit" else sys_.reseeded(
                thermo._omega_seed(sys_.seed, s))
            coc, _, _, _ = transfer.lambda_cocycle(draw, n, net, g_horizon=g_horizon)
            lam_logs.append(coc.log_sum() / n)
        lam_mean = float(np.mean(lam_logs))
        for eps in eps_ladder:
            mean, half = thermo.pressure_estimate(sys_, n, eps, samples, net=net)
            rows.append((n, eps, mean, half, lam_mean, abs(mean - lam_mean)))
    outdir = cfg.get("output", "directory")
    csv_path = iofmt.output_path(outdir, "pressure", "csv", cfg)
    iofmt.write_csv(csv_path, ["n", "eps", "estimate", "half_width",
                               "lambda_mean", "gap"], rows)
    manifest = iofmt.output_path(outdir, "pressure_manifest", "txt", cfg)
    iofmt.write_manifest(manifest, cfg, {
        "net_points": len(net),
        "mean_log_degree": sys_.mean_log_degree(),
        "final_estimate": rows[-1][2],
    })
    paths = [csv_path, manifest]
    if cfg.get_bool("output", "figures"):
        from . import figures

        fig_path = iofmt.output_path(outdir, "pressure", "png", cfg)
        figures.save_pressure_figure(fig_path, [(r[0], r[1], r[2], r[3]) for r in rows],
                                     reference=sys_.mean_log_degree())
        paths.append(fig_path)
    return paths


def cmd_measure(cfg):
    import numpy as np

    from . import iofmt, transfer
    from .sphere import standard_net

    net = standard_net(cfg.get_int("net", "size"))
    sys_ = cfg.build_system(net)
    n = cfg.get_int("run", "horizon")
    g_horizon = cfg.get_int("run", "g_horizon")
    depth = cfg.get_int("run", "tree_depth")
    coc, gs, anchors, residual = transfer.lambda_cocycle(sys_, n, net,
                                                         g_horizon=g_horizon)
    anchor_depth = transfer.anchors_from(sys_.shifted(depth), 0, net)
    nu = transfer.conformal_measure(sys_, depth, net, gs[0], anchor_depth,
                                    seed=sys_.seed)
    mu = transfer.equilibrium_measure(gs[0], nu)
    outdir = cfg.get("output", "directory")
    mu_path = iofmt.output_path(outdir, "measure", "csv", cfg)
    iofmt.write_measure_csv(mu_path, mu)
    g_path = iofmt.output_path(outdir, "density", "csv", cfg)
    iofmt.write_grid_csv(g_path, gs[0])
    manifest = iofmt.output_path(outdir, "measure_manifest", "txt", cfg)
    iofmt.write_manifest(manifest, cfg, {
        "net_points": len(net),
        "eigen_residual": residual,
        "lambda_log_mean": coc.log_sum() / n,
        "atoms": len(mu.weights),
        "total_mass": mu.total,
        "moment_1": abs(mu.moment(1)),
        "moment_2": abs(mu.moment(2)),
    })
    paths = [mu_path, g_path, manifest]
    if cfg.get_bool("output", "figures"):
        from . import figures

        fig_path = iofmt.output_path(outdir, "measure", "png", cfg)
        figures.save_measure_figure(fig_path, mu)
        paths.append(fig_path)
    return paths


def cmd_verify(cfg):
    from . import iofmt, verify

    scale = cfg.get_float("verify", "scale")
    reports = verify.run_battery(quick=scale < 1.0)
    outdir = cfg.get("output", "directory")
    csv_path = iofmt.output_path(outdir, "verify", "csv", cfg)
    iofmt.write_csv(csv_path, ["lemma", "trials", "violations", "worst_margin"],
                    [r.row() for r in reports])
    manifest = iofmt.output_path(outdir, "verify_manifest", "txt", cfg)
    iofmt.write_manifest(manifest, cfg, {
        "all_passed": all(r.passed for r in reports),
        "total_trials": sum(r.trials for r in reports),
    })
    paths = [csv_path, manifest]
    if cfg.get_bool("output", "figures"):
        from . import figures

        fig_path = iofmt.output_path(outdir, "verify", "png", cfg)
        figures.save_verify_figure(fig_path, reports)
        paths.append(fig_path)
    ok = all(r.passed for r in reports)
    return paths, ok


def cmd_simulate(cfg):
    from . import iofmt, rds
    from .sphere import SpherePoint

    sys_ = cfg.build_system()
    n = cfg.get_int("run", "horizon")
    start_text = cfg.get("run", "start")
    if start_text.strip().lower() in ("inf", "infinity"):
        start = SpherePoint.infinity()
    else:
        re_s, im_s = start_text.split(",")
        start = SpherePoint(complex(float(re_s), float(im_s)))
    seq = sys_.sample_sequence(0, max(n, 0))
    traj = rds.pseudo_iterate(seq, n, start)
    outdir = cfg.get("output", "directory")
    csv_path = iofmt.output_path(outdir, "trajectory", "csv", cfg)
    iofmt.write_trajectory_csv(csv_path, traj)
    manifest = iofmt.output_path(outdir, "trajectory_manifest", "txt", cfg)
    iofmt.write_manifest(manifest, cfg, {"steps": n})
    paths = [csv_path, manifest]
    if cfg.get_bool("output", "figures"):
        from . import figures

        fig_path = iofmt.output_path(outdir, "trajectory", "png", cfg)
        figures.save_trajectory_figure(fig_path, traj)
        paths.append(fig_path)
    return paths


def main(argv=None):
    _cap_threads()
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_config(args)
        if args.command == "julia-render":
            paths = cmd_julia_render(cfg)
        elif args.command == "pressure":
            paths = cmd_pressure(cfg)
        elif args.command == "measure":
            paths = cmd_measure(cfg)
        elif args.command == "verify":
            paths, ok = cmd_verify(cfg)
            for p in paths:
                print(p)
            return 0 if ok else 1
        elif args.command == "simulate":
            paths = cmd_simulate(cfg)
        else:  # pragma: no cover
            raise SystemExit(2)
    except Exception as exc:  # propagate module errors as exit codes
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for p in paths:
        print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
