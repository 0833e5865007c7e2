"""Command-line front end.

Exit codes: 0 success, 2 configuration error, 3 invariant violation,
4 I/O error.
"""

import argparse
import json
import math
import os
import sys
import warnings

import numpy as np

from . import geometry, observables, proxies
from .errors import ConfigError, DimensionCapExceeded, FidsusError, InvariantViolation
from .harness import SweepConfig, emit, run_sweep, write_csv, _svg_setup
from .states import (SystemSpec, build_model, check_strong_symmetry, load_state, random_symmetric_state,
                     save_state, ChargeOperatorSet)

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT, EXIT_IO = 0, 2, 3, 4


def _shared(p):
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--out", help="output directory (default: out)")
    p.add_argument("--format", help="csv, json or svg; comma-separated for several")
    p.add_argument("--seed", type=int, help="seed for random states")
    p.add_argument("--workers", type=int, help="parallel sweep workers")
    p.add_argument("--per-site", action="store_true", default=None,
                   help="evaluate every site instead of the centre site times N")


def _model_args(p, sweep=False):
    p.add_argument("--model", help="src, swssb, ghz, bond_dephased or random")
    p.add_argument("--local-dim", type=int, help="Z_n order n (default 2)")
    if sweep:
        p.add_argument("--sites", help="comma-separated chain lengths")
        p.add_argument("--q", help="comma-separated dephasing strengths (bond_dephased)")
        p.add_argument("--quantities", help="comma-separated subset of "
                       "correlators,susceptibility,bounds,geometry,proxies")
        p.add_argument("--proxy-depth", type=int)
        p.add_argument("--numeric-p", type=float, help="also record the finite-difference value")
        p.add_argument("--timing", action="store_true", default=None, help="record wall time")
    else:
        p.add_argument("--sites", type=int, help="chain length N")
        p.add_argument("--q", type=float, help="dephasing strength (bond_dephased)")
        p.add_argument("--state", help="load the state from a text container instead")


def build_parser():
    parser = argparse.ArgumentParser(prog="fidsus", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("model", help="build, validate and export a state")
    _model_args(p)
    _shared(p)
    p = sub.add_parser("correlators", help="fidelity, linear and Renyi-2 correlators with decay fits")
    _model_args(p)
    _shared(p)
    p = sub.add_parser("susceptibility", help="closed-form and finite-difference susceptibility")
    _model_args(p)
    _shared(p)
    p.add_argument("--p", type=float, action="append", help="finite-difference strength (repeatable)")
    p = sub.add_parser("geometry", help="Bures geometry probes")
    _model_args(p)
    _shared(p)
    p = sub.add_parser("proxies", help="polynomial proxy chain for the susceptibility")
    _model_args(p)
    _shared(p)
    p.add_argument("--depth", type=int, default=4)
    p.add_argument("--recursion", choices=("corrected", "literal"), default="corrected")
    p = sub.add_parser("sweep", help="sweep N and q and emit csv/json/svg")
    _model_args(p, sweep=True)
    _shared(p)
    return parser


def _list(text, cast):
    if text is None:
        return None
    try:
        return [cast(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"cannot parse list {text!r}") from exc


def _settings(args):
    """Merge defaults, the config file and flags for the single-state commands."""
    data = {"model": "swssb", "local_dim": 2, "sites": 4, "q": None, "seed": 0, "out": "out",
            "format": "csv", "per_site": False}
    if args.config:
        try:
            with open(args.config) as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"{args.config}: {exc}") from exc
        data.update(loaded.get(args.command, {}) if isinstance(loaded, dict) else {})
    for key in ("model", "local_dim", "sites", "q", "seed", "out", "format", "per_site"):
        value = getattr(args, key, None)
        if value is not None:
            data[key] = value
    formats = data["format"].split(",") if isinstance(data["format"], str) else list(data["format"])
    data["formats"] = formats
    return data


def _state(args, cfg):
    if getattr(args, "state", None):
        rho = load_state(args.state)
        if rho.system is None:
            raise ConfigError(f"{args.state}: the container needs a 'system' line")
        cfg["model"] = "state"
        return rho, ChargeOperatorSet.clock_shift(rho.system)
    try:
        system = SystemSpec(int(cfg["sites"]), int(cfg["local_dim"]))
    except DimensionCapExceeded as exc:
        raise ConfigError(str(exc)) from exc
    if cfg["model"] == "random":
        return random_symmetric_state(system, np.random.default_rng(cfg["seed"]))
    q = cfg["q"]
    if cfg["model"] == "bond_dephased" and q is None:
        raise ConfigError("bond_dephased needs --q")
    try:
        return build_model(system, cfg["model"], q)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _write_rows(rows, cfg, stem, plot=None):
    if not rows:
        raise ValueError("no rows to write")
    os.makedirs(cfg["out"], exist_ok=True)
    base = os.path.join(cfg["out"], stem)
    written = []
    for fmt in cfg["formats"]:
        if fmt == "csv":
            write_csv(rows, base + ".csv", columns=tuple(rows[0]))
            written.append(base + ".csv")
        elif fmt == "json":
            with open(base + ".json", "w") as fh:
                json.dump(rows, fh, indent=2, default=str)
                fh.write("\n")
            written.append(base + ".json")
        elif fmt == "svg":
            if plot is None:
                raise ConfigError(f"svg output is not available for '{stem}'")
            written.append(plot(base + ".svg"))
        else:
            raise ConfigError(f"unknown format {fmt!r}")
    return written


def cmd_model(args):
    cfg = _settings(args)
    rho, ops = _state(args, cfg)
    check = check_strong_symmetry(rho, ops)
    os.makedirs(cfg["out"], exist_ok=True)
    path = os.path.join(cfg["out"], f"state_{cfg['model']}_N{ops.n_sites}.txt")
    save_state(path, rho)
    summary = {"model": cfg["model"], "N": ops.n_sites, "n": ops.system.local_dim,
               "dim": ops.system.dim, "eta": ops.eta, "trace_defect": rho.trace_defect,
               "min_eigenvalue": rho.min_eigenvalue, "purity": rho.purity(),
               "strong": check.strong, "weak": check.weak, "state_file": path}
    print(json.dumps(summary, indent=2, default=str))
    return [path]


def cmd_correlators(args):
    cfg = _settings(args)
    rho, ops = _state(args, cfg)
    recs = observables.correlator_records(rho, ops, max_r=ops.n_sites)
    rows = [{"i": r.i, "j": r.j, "r": r.r, "fidelity": r.fidelity_corr,
             "linear_re": r.linear_corr.real, "linear_im": r.linear_corr.imag,
             "renyi2_bare": r.renyi2_bare, "renyi2_normalized": r.renyi2_normalized} for r in recs]

    def plot(path):
        plt = _svg_setup()
        fig, ax = plt.subplots(figsize=(5, 4))
        ax.semilogy([r.r for r in recs[1:]], [max(r.fidelity_corr, 1e-16) for r in recs[1:]],
                    "o-", label="fidelity")
        ax.semilogy([r.r for r in recs[1:]], [max(r.renyi2_bare, 1e-16) for r in recs[1:]],
                    "s--", label="Renyi-2 (bare)")
        ax.set_xlabel("r")
        ax.set_ylabel("correlator")
        ax.legend()
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
        return path

    for model in ("exponential", "algebraic"):
        try:
            fit = observables.fit_decay(recs, model)
            print(f"{model} fit: xi={fit.xi} gamma={fit.gamma} residual={fit.residual:.3g}")
        except ValueError as exc:
            print(f"{model} fit: {exc}")
    return _write_rows(rows, cfg, f"correlators_{cfg['model']}_N{ops.n_sites}", plot)


def cmd_susceptibility(args):
    cfg = _settings(args)
    rho, ops = _state(args, cfg)
    res = observables.susceptibility_closed(rho, ops, translation_invariant=not cfg["per_site"])
    row = {"N": ops.n_sites, "eta": res.eta, "chi_F": res.chi_F, "chi_norm": res.chi_normalized,
           "lower_bound": res.lower_bound, "upper_bound": res.upper_bound,
           "D_eff": geometry.effective_dimension(res.chi_F, ops.n_sites)}
    if not res.lower_bound - 1e-9 <= res.chi_normalized <= res.upper_bound + 1e-9:
        raise InvariantViolation("two-sided bound violated")
    for p in args.p or []:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            num = observables.susceptibility_numeric(rho, ops, p)
        row[f"numeric_p{p:g}"] = num.value
    return _write_rows([row], cfg, f"susceptibility_{cfg['model']}_N{ops.n_sites}")


def cmd_geometry(args):
    cfg = _settings(args)
    rho, ops = _state(args, cfg)
    n = ops.n_sites
    rows = []
    for t in geometry.ANGLE_LADDER:
        theta = np.full(n, t)
        d2 = geometry.perturbed_self_distance(rho, ops, theta)
        phi = np.roll(theta * np.linspace(0.5, 1.0, n), 1)
        rows.append({"t": t, "self_distance": d2, "ratio": d2 / float(theta @ theta),
                     "g_defining": geometry.bures_inner_defining(rho, ops, theta, phi),
                     "g_second_order": geometry.bures_inner_second_order(rho, ops, theta, phi)})
    if n >= 3:
        c = ops.system.center
        j, k = (c - 1, c + 1) if c + 1 < n else (c - 1, c - 2)
        gap = geometry.subadditivity_gap(rho, ops, c, j, k, 0.1, 0.1, 0.1)
        print(f"subadditivity gap at sites ({c}, {j}, {k}): {gap:.6g}")
        if gap < -1e-9:
            raise InvariantViolation(f"negative subadditivity gap {gap}")
    return _write_rows(rows, cfg, f"geometry_{cfg['model']}_N{n}")


def cmd_proxies(args):
    cfg = _settings(args)
    rho, ops = _state(args, cfg)
    ti = not cfg["per_site"]
    levels = proxies.susceptibility_proxy_levels(rho, ops, args.depth, ti, args.recursion)
    chi = observables.susceptibility_closed(rho, ops, translation_invariant=ti).chi_normalized
    rows = [{"depth": d + 1, "proxy": float(v), "chi_norm": chi} for d, v in enumerate(levels)]
    if args.recursion == "corrected" and np.any(levels > chi + 1e-9):
        raise InvariantViolation("proxy exceeds chi_F/eta")
    return _write_rows(rows, cfg, f"proxies_{cfg['model']}_N{ops.n_sites}")


def cmd_sweep(args):
    overrides = {
        "model": args.model, "local_dim": args.local_dim, "sites": _list(args.sites, int),
        "q": _list(args.q, float), "quantities": _list(args.quantities, str),
        "proxy_depth": args.proxy_depth, "numeric_p": args.numeric_p, "seed": args.seed,
        "out": args.out, "formats": _list(args.format, str), "workers": args.workers,
        "per_site": args.per_site, "timing": args.timing,
    }
    try:
        config = SweepConfig.load(args.config, overrides)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    records = run_sweep(config)
    written = []
    for fmt in config.formats:
        written += emit(records, fmt, config.out, stem=f"sweep_{config.model}", config=config)
    for rec in records:
        q = "" if math.isnan(rec.q) else f" q={rec.q:g}"
        print(f"N={rec.N}{q} chi_F={rec.chi_F:.12g}")
    return written


COMMANDS = {"model": cmd_model, "correlators": cmd_correlators, "susceptibility": cmd_susceptibility,
            "geometry": cmd_geometry, "proxies": cmd_proxies, "sweep": cmd_sweep}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        written = COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (FidsusError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for path in written or []:
        print(f"wrote {path}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
