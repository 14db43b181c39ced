"""Command line entry point.

Every subcommand reads ``--config <json>``, applies ``--set key.path=value``
overrides, and writes its artifacts under ``--out``.  Exit status: 0 on
success, 1 on invalid input, 2 on numerical failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, load_config_file, parse_override
from .critical import AlphaTable, class_grid, critical_value_bisection, min_mean_cycle
from .errors import NumericalFailure
from .examples import ExampleSpec, build_example, classify, verify_example
from .flow import energy_drift, integrate
from .graph import build_graph
from .lagrangian import CohomologyClass, MagneticLagrangian, OneForm, PhaseState
from .measures import energy_level_check, graph_property_check, measure_json, min_closed_measure
from .potential import partition_json, write_potential_csv
from .report import RunReport
from .sweep import SweepSpec, perturb_sweep

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 1, 2


class _Setup:
    """Lagrangian and grids resolved from a validated config."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        lag_cfg = cfg.lagrangian
        if hasattr(lag_cfg, "f_kind"):
            self.example = ExampleSpec(lag_cfg.f_kind, dict(lag_cfg.params), lag_cfg.cantor_stage)
            self.lag = build_example(self.example)
            alpha_est = self.example.alpha_exact
        else:
            self.example = None
            self.lag = MagneticLagrangian(OneForm.from_dict(lag_cfg.oneform))
            xs = np.arange(128) / 128
            gx, gy = np.meshgrid(xs, xs, indexing="ij")
            e1, e2 = self.lag.eta(gx, gy)
            alpha_est = 0.5 * float((e1 ** 2 + e2 ** 2).max())
        self.grid = cfg.grid.spec(alpha_est)
        self.pgrid = cfg.potential_grid.spec(alpha_est) if cfg.potential_grid else self.grid
        if self.example is not None:
            self.example.grid = self.grid
            self.example.potential_grid = self.pgrid

    def echo(self) -> dict:
        d = self.cfg.model_dump(mode="json")
        d["grid"]["speed_cap"] = self.grid.speed_cap
        if d.get("potential_grid") is not None:
            d["potential_grid"]["speed_cap"] = self.pgrid.speed_cap
        return d


def _write(out: Path, name: str, text: str) -> None:
    with open(out / name, "w", newline="\n") as fh:
        fh.write(text)


def _finish(out: Path, rep: RunReport) -> int:
    _write(out, "report.json", rep.to_json())
    _write(out, "timings.json", rep.timings_json())
    failed = rep.failed
    if failed:
        print(f"stages failed: {', '.join(failed)}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_integrate(setup: _Setup, out: Path, args) -> int:
    ic = setup.cfg.integrate
    x0, v2 = ic.x0, ic.v2
    if setup.example is not None and (x0 is None or v2 is None):
        from .examples import example_profile, minimum_components
        a0, a1 = minimum_components(setup.example)[0]
        x0 = 0.5 * (a0 + a1) if x0 is None else x0
        v2 = -float(example_profile(setup.example).value(x0)) if v2 is None else v2
    if x0 is None or v2 is None:
        raise ConfigError("integrate.x0 and integrate.v2 are required for a general 1-form")
    rep = RunReport("integrate", setup.echo())
    with rep.stage("integrate"):
        tr = integrate(setup.lag, PhaseState.of(x0, ic.y0, ic.v1, v2), ic.T, ic.h, ic.backward)
    tr.write_csv(out / "trajectory.csv")
    rep.results = {"samples": len(tr), "energy_drift": energy_drift(tr),
                   "final_winding": tr.winding[-1].tolist(), "final_time": float(tr.t[-1])}
    return _finish(out, rep)


def cmd_alpha(setup: _Setup, out: Path, args) -> int:
    ac = setup.cfg.alpha
    size = ac.classes_grid
    if args.classes_grid:
        try:
            a, b = (int(s) for s in args.classes_grid.lower().split("x"))
        except ValueError:
            raise ConfigError(f"--classes-grid must look like 5x5, got {args.classes_grid!r}")
        size = (a, b)
    if size[0] < 1 or size[1] < 1:
        raise ConfigError("classes grid must be at least 1x1")
    classes = class_grid(size, ac.radius)
    rep = RunReport("alpha", setup.echo())
    with rep.stage("graph"):
        g = build_graph(setup.lag, setup.grid)
    with rep.stage("alpha"):
        certs = [min_mean_cycle(g, c, ac.method) for c in classes]
    table = AlphaTable(classes, [cert.alpha for cert in certs])
    table.write_csv(out / "alpha.csv")
    c0 = CohomologyClass()
    cert0 = min_mean_cycle(g, c0, ac.method)
    _write(out, "certificate.json", json.dumps(cert0.to_dict(g), sort_keys=True) + "\n")
    rep.results = {"classes": len(classes), "alpha_at_zero": cert0.alpha,
                   "alpha_min": min(table.values), "alpha_max": max(table.values)}
    if ac.bisection:
        with rep.stage("bisection"):
            tol = setup.cfg.tolerances
            ab = critical_value_bisection(g, c0, tol.bisection_tol,
                                          tol.tol_zero_rel * g.cost_scale(c0))
        rep.results["alpha_bisection_at_zero"] = ab
    return _finish(out, rep)


def _potential_setup(setup: _Setup, rep: RunReport):
    with rep.stage("graph"):
        g = build_graph(setup.lag, setup.pgrid)
    with rep.stage("potential"):
        pt, part = classify(g, CohomologyClass(), setup.cfg.tolerances)
    return g, pt, part


def cmd_potential(setup: _Setup, out: Path, args) -> int:
    rep = RunReport("potential", setup.echo())
    g, pt, part = _potential_setup(setup, rep)
    threshold = args.threshold if args.threshold is not None else part.eps_class
    write_potential_csv(pt, out / "potential.csv", threshold)
    rep.results = {"k_used": pt.k_used, "nodes": g.n_nodes, "threshold": threshold,
                   "min_phi": float(pt.phi.min()), "self_loop_min": float(pt.self_loop.min())}
    return _finish(out, rep)


def cmd_classes(setup: _Setup, out: Path, args) -> int:
    rep = RunReport("classes", setup.echo())
    g, pt, part = _potential_setup(setup, rep)
    _write(out, "classes.json", partition_json(part) + "\n")
    rep.results = {"count": part.count, "aubry_nodes": int(part.aubry_nodes.size),
                   "class_sizes": [len(cl) for cl in part.classes], "k_used": pt.k_used}
    return _finish(out, rep)


def cmd_measure(setup: _Setup, out: Path, args) -> int:
    rep = RunReport("measure", setup.echo())
    c0 = CohomologyClass()
    with rep.stage("graph"):
        g = build_graph(setup.lag, setup.grid)
    with rep.stage("measure"):
        value, mu = min_closed_measure(g, c0, setup.cfg.alpha.method)
    _write(out, "measure.json", measure_json(mu, value, c0) + "\n")
    rep.results = {"value": value, "alpha": -value,
                   "conservation_residual": mu.conservation_residual(),
                   "normalization_residual": mu.normalization_residual(),
                   "energy_level": energy_level_check(mu, -value),
                   "graph_property": graph_property_check(mu)}
    return _finish(out, rep)


def cmd_example_verify(setup: _Setup, out: Path, args) -> int:
    if setup.example is None:
        raise ConfigError("example-verify needs lagrangian.f_kind")
    cfg = setup.cfg
    rep = verify_example(setup.example, cfg.tolerances, refine=cfg.refine, seed=cfg.seed,
                         config=setup.echo())
    state = rep.extra_state
    if "alpha" in state:
        AlphaTable([CohomologyClass()], [state["alpha"]]).write_csv(out / "alpha.csv")
    if "partition" in state:
        _write(out, "classes.json", partition_json(state["partition"]) + "\n")
    if "mu" in state:
        _write(out, "measure.json", measure_json(state["mu"], -state["alpha"],
                                                 CohomologyClass()) + "\n")
    return _finish(out, rep)


def cmd_sweep(setup: _Setup, out: Path, args) -> int:
    sc = setup.cfg.sweep
    sweep = SweepSpec(sc.seed, sc.num_perturbations, sc.amplitude, sc.fourier_degree,
                      [CohomologyClass(a, b) for a, b in sc.classes])
    rep, text = perturb_sweep(setup.lag, sweep, setup.grid, setup.pgrid,
                              setup.cfg.tolerances, sc.workers, setup.echo())
    _write(out, "sweep.csv", text)
    return _finish(out, rep)


COMMANDS = {
    "integrate": cmd_integrate,
    "alpha": cmd_alpha,
    "potential": cmd_potential,
    "classes": cmd_classes,
    "measure": cmd_measure,
    "example-verify": cmd_example_verify,
    "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="magtorus", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config entry, e.g. grid.n=32")
        p.add_argument("--n", type=int, help="shortcut for grid.n")
        p.add_argument("--h-time", type=float, help="shortcut for grid.h_time")
        p.add_argument("--seed", type=int, help="shortcut for sweep.seed and seed")
        if name == "alpha":
            p.add_argument("--classes-grid", help="class grid size, e.g. 5x5")
        if name == "potential":
            p.add_argument("--threshold", type=float, help="export phi <= threshold")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    try:
        overrides = dict(parse_override(s) for s in args.set)
        if args.n is not None:
            overrides["grid.n"] = args.n
        if args.h_time is not None:
            overrides["grid.h_time"] = args.h_time
        if args.seed is not None:
            overrides["sweep.seed"] = args.seed
            overrides["seed"] = args.seed
        cfg = load_config_file(args.config, overrides)
        setup = _Setup(cfg)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](setup, out, args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
