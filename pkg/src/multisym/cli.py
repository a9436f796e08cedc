"""Command-line front end.

    python -m multisym derive --model nonlinear_wave --n 1
    python -m multisym noether-check --generator time
    python -m multisym simulate --config run.json
    python -m multisym pattern-index --k-center "[1.0]" --amplitude 0.8

Every subcommand writes ``<subcommand>.csv`` and
``<subcommand>_summary.txt`` into ``--outdir`` (default: ``$MULTISYM_OUTDIR``
or the working directory).  Settings come from built-in defaults, then a
JSON ``--config`` file, then explicit flags; ``--print-config`` shows the
merged result.  Exit status: 0 pass, 1 check failure, 2 usage error.
"""

import argparse
import copy
import csv
import json
import logging
import os
import sys

import numpy as np

from .bundle import FieldSpec, random_patch
from .errors import MultisymError, UnknownModelError
from .integrate import exact_solution, simulate
from .lagrangian import make_lagrangian
from .multihamiltonian import (assemble_structure_matrices, bridges_form_residual,
                               ddw_as_bridges, ddw_residual, equivalence_check)
from .noether import divergence_residual, parse_generator
from .patterns import constraint_levels, hessian_index

log = logging.getLogger("multisym")

DEFAULTS = {
    "derive": {"model": "nonlinear_wave", "n": 1, "N": 1, "potential": "zero"},
    "equivalence-check": {
        "model": "nonlinear_wave", "n": 1, "N": 1, "potential": "klein_gordon(1)",
        "patches": 100, "tol": 1e-8, "bridges_tol": 1e-10,
    },
    "noether-check": {
        "model": "nonlinear_wave", "potential": "klein_gordon(1)",
        "solution": "kg_plane_wave", "solution_params": {"A": 1.0, "k": 1.0, "m": 1.0},
        "generator": "time", "samples": 16, "box": 5.0, "tol": 1e-8,
    },
    "simulate": {
        "model": "nonlinear_wave", "potential": None,
        "grid": {"nx": 256, "length": 25.6, "dt": 0.05, "t_end": 50.0, "x0": -12.8},
        "initial": {"name": "sg_kink", "params": {"c": 0.5}},
        "diagnostics": {"sample_every": 10}, "scheme": "box",
    },
    "pattern-index": {
        "model": "particle", "n": 0, "potential": "duffing(-1, -0.5)",
        "k_center": [1.0], "amplitude": 0.8, "deltas": None, "solve_for": 0,
        "samples": 512,
    },
}


class UsageError(Exception):
    pass


def _value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    if isinstance(x, np.ndarray):
        return "[" + ", ".join(_fmt(v) for v in x.ravel()) + "]"
    if isinstance(x, (list, tuple)):
        return "[" + ", ".join(_fmt(v) for v in x) + "]"
    return str(x)


def _matrix_text(w):
    return "[" + ", ".join("[" + ", ".join(str(int(v)) for v in row) + "]" for row in w) + "]"


def build_parser():
    p = argparse.ArgumentParser(prog="multisym", allow_abbrev=False,
                                description="Multisymplectic field theory checks and simulations.")
    sub = p.add_subparsers(dest="command", metavar="subcommand")
    sub.required = True
    for name, defaults in DEFAULTS.items():
        sp = sub.add_parser(name, allow_abbrev=False)
        sp.add_argument("--config", help="JSON file overriding the defaults")
        sp.add_argument("--print-config", action="store_true",
                        help="print the merged configuration and exit")
        sp.add_argument("--seed", type=int, default=None, help="seed for sample points (default 0)")
        sp.add_argument("--outdir", default=None,
                        help="output directory (default $MULTISYM_OUTDIR or .)")
        for key in defaults:
            sp.add_argument("--" + key.replace("_", "-"), dest="opt_" + key, type=_value,
                            default=None, metavar="VALUE")
    return p


def resolve_config(args):
    cfg = copy.deepcopy(DEFAULTS[args.command])
    cfg["seed"] = 0
    if args.config:
        try:
            with open(args.config) as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config!r}: {exc}")
        if not isinstance(loaded, dict):
            raise UsageError("config file must hold a JSON object")
        for key, val in loaded.items():
            if key not in cfg:
                raise UsageError(f"unknown config key {key!r} for {args.command}")
            if isinstance(cfg[key], dict) and isinstance(val, dict):
                extra = set(val) - set(cfg[key]) - ({"x0"} if key == "grid" else set())
                if extra and key in ("grid", "diagnostics"):
                    raise UsageError(f"unknown config key {key}.{sorted(extra)[0]!r}")
                cfg[key] = {**cfg[key], **val} if key != "initial" else val
            else:
                cfg[key] = val
    for key in DEFAULTS[args.command]:
        val = getattr(args, "opt_" + key)
        if val is not None:
            cfg[key] = val
    if args.seed is not None:
        cfg["seed"] = args.seed
    cfg["outdir"] = args.outdir or os.environ.get("MULTISYM_OUTDIR") or "."
    return cfg


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def _write_summary(path, items):
    with open(path, "w") as fh:
        for k, v in items:
            fh.write(f"{k}: {_fmt(v)}\n")


def _paths(cfg, name):
    out = cfg["outdir"]
    os.makedirs(out, exist_ok=True)
    return os.path.join(out, f"{name}.csv"), os.path.join(out, f"{name}_summary.txt")


def _lagrangian(cfg):
    return make_lagrangian(cfg["model"], n=cfg.get("n"), N=cfg.get("N"),
                           potential=cfg.get("potential"))


# ---------------------------------------------------------------------------

def cmd_derive(cfg):
    L = _lagrangian(cfg)
    omegas = assemble_structure_matrices(L.spec)
    csv_path, summary_path = _paths(cfg, "derive")
    rows = [(mu, i, j, int(w[i, j])) for mu, w in enumerate(omegas.matrices)
            for i in range(omegas.d) for j in range(omegas.d)]
    _write_csv(csv_path, ("mu", "row", "col", "value"), rows)
    lines = [("model", cfg["model"]), ("n", L.spec.n_space), ("N", L.spec.fiber_dim),
             ("state_dim", omegas.d)]
    if L.spec.n_space == 1:
        lines += [("M", _matrix_text(omegas[0])), ("K", _matrix_text(omegas[1]))]
    else:
        lines += [(f"omega[{mu}]", _matrix_text(w)) for mu, w in enumerate(omegas.matrices)]
    for k, v in lines:
        print(f"{k} = {v}")
    _write_summary(summary_path, lines)
    return 0


def cmd_equivalence(cfg):
    L = _lagrangian(cfg)
    rng = np.random.default_rng(cfg["seed"])
    rows, worst_sum, worst_rp, worst_bridges = [], 0.0, 0.0, 0.0
    for i in range(int(cfg["patches"])):
        patch = random_patch(L.spec, rng)
        x = rng.uniform(-2.0, 2.0, L.spec.base_dim)
        rep = equivalence_check(L, patch, [x], tol=cfg["tol"])
        bdiff = float("nan")
        if L.spec.n_space == 1:
            b = bridges_form_residual(L, patch, x)
            bdiff = float(np.max(np.abs(b - ddw_as_bridges(ddw_residual(L, patch, x)))))
            worst_bridges = max(worst_bridges, bdiff)
        worst_sum = max(worst_sum, rep.max_sum)
        worst_rp = max(worst_rp, rep.max_rp)
        rows.append((i, *x, rep.max_sum, rep.max_rp, bdiff))
    header = ("patch", *[f"x{mu}" for mu in range(L.spec.base_dim)],
              "max_ry_plus_E", "max_rp", "bridges_diff")
    csv_path, summary_path = _paths(cfg, "equivalence-check")
    _write_csv(csv_path, header, rows)
    ok = worst_sum <= cfg["tol"] and worst_rp <= cfg["tol"] and worst_bridges <= cfg["bridges_tol"]
    summary = [("model", cfg["model"]), ("seed", cfg["seed"]), ("patches", cfg["patches"]),
               ("max_ry_plus_E", worst_sum), ("max_rp", worst_rp),
               ("max_bridges_diff", worst_bridges), ("passed", ok)]
    _write_summary(summary_path, summary)
    print(f"equivalence-check: max|r_y+E| = {worst_sum:.3e}, max|r_p| = {worst_rp:.3e}, "
          f"bridges diff = {worst_bridges:.3e} -> {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


def cmd_noether(cfg):
    L = make_lagrangian(cfg["model"], n=1, N=1, potential=cfg["potential"])
    patch = exact_solution(cfg["solution"], cfg["solution_params"])
    xi = parse_generator(L.spec, cfg["generator"])
    rng = np.random.default_rng(cfg["seed"])
    box = float(cfg["box"])
    xs = rng.uniform(-box, box, (int(cfg["samples"]), 2))
    log.info("noether-check sample points drawn with seed %s", cfg["seed"])
    field = divergence_residual(L, xi, patch, xs)
    rows = [(*x, *J, d) for x, J, d in zip(xs, field.J, field.div)]
    csv_path, summary_path = _paths(cfg, "noether-check")
    _write_csv(csv_path, ("x0", "x1", "J0", "J1", "div"), rows)
    ok = field.max_div <= cfg["tol"]
    _write_summary(summary_path, [("model", cfg["model"]), ("potential", cfg["potential"]),
                                  ("solution", cfg["solution"]), ("generator", cfg["generator"]),
                                  ("seed", cfg["seed"]), ("max_div", field.max_div),
                                  ("tol", cfg["tol"]), ("passed", ok)])
    print(f"noether-check [{cfg['generator']}]: max|div J| = {field.max_div:.3e} "
          f"-> {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


def cmd_simulate(cfg):
    csv_path, summary_path = _paths(cfg, "simulate")
    conf = {k: cfg[k] for k in ("model", "grid", "initial", "diagnostics", "scheme")}
    if cfg.get("potential") is not None:
        conf["potential"] = cfg["potential"]
    conf["output"] = csv_path
    res = simulate(conf)
    E, P = res.column("energy"), res.column("momentum")
    drift_e = float(np.max(np.abs(E - E[0])) / max(abs(E[0]), 1e-300))
    drift_p = float(np.max(np.abs(P - P[0])) / max(abs(P[0]), 1e-300))
    _write_summary(summary_path, [("rows", len(res.rows)), ("energy0", E[0]), ("momentum0", P[0]),
                                  ("energy_rel_drift", drift_e), ("momentum_rel_drift", drift_p),
                                  ("max_div_residual", float(res.column("max_div_residual").max()))])
    print(f"simulate: {len(res.rows)} rows, energy drift {drift_e:.3e}, "
          f"momentum drift {drift_p:.3e}")
    return 0


def cmd_pattern(cfg):
    L = _lagrangian(cfg)
    rep = hessian_index(L, cfg["k_center"], cfg["amplitude"], cfg["deltas"],
                        int(cfg["solve_for"]), int(cfg["samples"]))
    orb = rep.orbit
    m = orb.k.size
    rows = [(c, f, fp, *p) for c, f, fp, p in zip(orb.chi, orb.f, orb.fp, orb.momenta)]
    csv_path, summary_path = _paths(cfg, "pattern-index")
    _write_csv(csv_path, ("chi", "f", "fprime", *[f"p{mu}" for mu in range(m)]), rows)
    _write_summary(summary_path, [("model", cfg["model"]), ("potential", cfg["potential"]),
                                  ("k", rep.k), ("amplitude", rep.amplitude), ("I", rep.I),
                                  ("I_phi_dp", constraint_levels(orb, "phi_dp")),
                                  ("hessian", rep.hessian), ("det", rep.determinant),
                                  ("index", rep.index), ("degenerate", rep.degenerate),
                                  ("asymmetry", rep.asymmetry)])
    print(f"pattern-index: k = {_fmt(rep.k)}, I = {_fmt(rep.I)}, det = {rep.determinant:.6g}, "
          f"index = {rep.index}, degenerate = {rep.degenerate}")
    return 0


COMMANDS = {"derive": cmd_derive, "equivalence-check": cmd_equivalence,
            "noether-check": cmd_noether, "simulate": cmd_simulate,
            "pattern-index": cmd_pattern}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        cfg = resolve_config(args)
    except UsageError as exc:
        print(f"multisym {args.command}: error: {exc}", file=sys.stderr)
        return 2
    if args.print_config:
        shown = {k: v for k, v in cfg.items() if k != "outdir"}
        shown["outdir"] = cfg["outdir"]
        print(json.dumps(shown, indent=2, sort_keys=True))
        return 0
    try:
        return COMMANDS[args.command](cfg)
    except (UnknownModelError, KeyError, TypeError, ValueError) as exc:
        msg = str(exc) if not isinstance(exc, KeyError) else exc.args[0]
        print(f"multisym {args.command}: error: {msg}", file=sys.stderr)
        return 2
    except MultisymError as exc:
        print(f"multisym {args.command}: failed: {exc}", file=sys.stderr)
        return 1


def main():
    logging.basicConfig(level=os.environ.get("MULTISYM_LOGLEVEL", "WARNING"))
    sys.exit(run())


if __name__ == "__main__":
    main()
