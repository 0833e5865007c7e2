"""Sweeps over system size and dephasing strength, with CSV/JSON/SVG output.

Configuration precedence, lowest to highest: built-in defaults, the JSON
config file, command-line flags.
"""

import csv
import json
import math
import os
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .errors import ConfigError, DimensionCapExceeded, InvariantViolation, NoSignal
from .geometry import correlation_volume_estimate, effective_dimension, subadditivity_gap
from .observables import (classify_scaling, correlator_records, fidelity_magnetization, fit_decay,
                          susceptibility_closed, susceptibility_numeric)
from .proxies import susceptibility_proxy_levels
from .states import SystemSpec, build_model, random_symmetric_state

MODELS = ("src", "swssb", "ghz", "bond_dephased", "random")
QUANTITIES = ("correlators", "susceptibility", "bounds", "geometry", "proxies")
FORMATS = ("csv", "json", "svg")
CSV_COLUMNS = ("model", "n", "N", "q", "eta", "chi_F", "chi_norm", "lower_bound", "upper_bound",
               "M_F", "D_eff", "xi", "gamma", "proxy_L1", "proxy_L2", "proxy_L3", "proxy_L4",
               "gap_min", "seconds")
SLACK = 1e-9
GAP_AMPLITUDE = 0.1


@dataclass
class SweepConfig:
    """Everything that determines a sweep; two equal configs give identical output.

    Wall time is recorded only with ``timing=True``, since it would
    otherwise break byte-identical reruns.
    """

    model: str = "swssb"
    local_dim: int = 2
    sites: list = field(default_factory=lambda: [2, 3, 4])
    q: list = field(default_factory=lambda: [0.0])
    quantities: list = field(default_factory=lambda: list(QUANTITIES))
    proxy_depth: int = 4
    numeric_p: float | None = None
    seed: int = 0
    out: str = "out"
    formats: list = field(default_factory=lambda: ["csv"])
    workers: int = 1
    per_site: bool = False
    timing: bool = False
    max_dim: int = 4096

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.model not in MODELS:
            raise ConfigError(f"unknown model {self.model!r}; choose from {MODELS}")
        if self.local_dim < 2:
            raise ConfigError("local_dim must be at least 2")
        bad = [x for x in self.quantities if x not in QUANTITIES]
        if bad:
            raise ConfigError(f"unknown quantities {bad}; choose from {QUANTITIES}")
        bad = [x for x in self.formats if x not in FORMATS]
        if bad:
            raise ConfigError(f"unknown formats {bad}; choose from {FORMATS}")
        if not self.sites or any(int(n) < 1 for n in self.sites):
            raise ConfigError("sites must be a non-empty list of positive integers")
        for n_sites in self.sites:
            dim = self.local_dim ** int(n_sites)
            if dim > self.max_dim:
                raise ConfigError(f"{self.local_dim}^{n_sites} = {dim} exceeds the cap {self.max_dim}")
        qmax = (self.local_dim - 1) / self.local_dim
        if self.model == "bond_dephased":
            if not self.q or any(not 0.0 <= float(x) <= qmax + 1e-12 for x in self.q):
                raise ConfigError(f"q values must lie in [0, {qmax:.6g}]")
        if not 1 <= self.proxy_depth <= 8:
            raise ConfigError("proxy_depth must lie in [1, 8]")
        if self.numeric_p is not None and not 0.0 < self.numeric_p <= 1.0:
            raise ConfigError("numeric_p must lie in (0, 1]")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")

    @classmethod
    def from_mapping(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path, overrides=None):
        """Read a JSON config file and apply ``overrides`` (entries that are None are ignored)."""
        data = {}
        if path:
            try:
                with open(path) as fh:
                    data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
            except OSError as exc:
                raise ConfigError(f"{path}: cannot read config ({exc})") from exc
            if not isinstance(data, dict):
                raise ConfigError(f"{path}: top level must be an object")
            sweep = data.get("sweep", data)
            data = dict(sweep)
        for key, value in (overrides or {}).items():
            if value is not None:
                data[key] = value
        return cls.from_mapping(data)

    def points(self):
        qs = self.q if self.model == "bond_dephased" else [math.nan]
        return [(int(n), float(q)) for n in self.sites for q in qs]


@dataclass
class SweepRecord:
    model: str
    n: int
    N: int
    q: float
    eta: int
    chi_F: float = math.nan
    chi_norm: float = math.nan
    lower_bound: float = math.nan
    upper_bound: float = math.nan
    M_F: float = math.nan
    D_eff: float = math.nan
    xi: float = math.nan
    gamma: float = math.nan
    proxy_L1: float = math.nan
    proxy_L2: float = math.nan
    proxy_L3: float = math.nan
    proxy_L4: float = math.nan
    gap_min: float = math.nan
    seconds: float = 0.0
    D_eff_xi: float = math.nan
    chi_numeric: float = math.nan
    proxy_deepest: float = math.nan

    def check(self):
        """Raise InvariantViolation if a recorded inequality fails."""
        problems = []
        if not math.isnan(self.lower_bound):
            if self.chi_norm < self.lower_bound - SLACK:
                problems.append(f"chi_norm {self.chi_norm!r} below lower bound {self.lower_bound!r}")
            if self.chi_norm > self.upper_bound + SLACK:
                problems.append(f"chi_norm {self.chi_norm!r} above upper bound {self.upper_bound!r}")
        for name in ("proxy_L1", "proxy_L2", "proxy_L3", "proxy_L4", "proxy_deepest"):
            value = getattr(self, name)
            if not math.isnan(value) and not math.isnan(self.chi_norm) and value > self.chi_norm + SLACK:
                problems.append(f"{name} {value!r} exceeds chi_norm {self.chi_norm!r}")
        if not math.isnan(self.gap_min) and self.gap_min < -SLACK:
            problems.append(f"negative subadditivity gap {self.gap_min!r}")
        if not math.isnan(self.M_F) and self.M_F > SLACK:
            problems.append(f"fidelity magnetization {self.M_F!r} of a strongly symmetric state")
        if problems:
            raise InvariantViolation(
                f"{self.model} n={self.n} N={self.N} q={self.q}: " + "; ".join(problems))
        return self


def _build(config, n_sites, q):
    system = SystemSpec(n_sites, config.local_dim, max_dim=config.max_dim)
    if config.model == "random":
        rng = np.random.default_rng([config.seed, n_sites])
        return random_symmetric_state(system, rng)
    return build_model(system, config.model, None if math.isnan(q) else q)


def _gap_triples(n_sites):
    c = n_sites // 2
    others = [s for s in (c - 1, c + 1, c - 2) if 0 <= s < n_sites and s != c]
    return [(c, j, k) for a, j in enumerate(others) for k in others[a + 1:]]


def evaluate_point(config, n_sites, q):
    """Compute one SweepRecord and verify its invariants."""
    start = time.perf_counter()
    rho, ops = _build(config, n_sites, q)
    rec = SweepRecord(config.model, config.local_dim, n_sites, q, ops.eta)
    ti = not config.per_site
    wanted = set(config.quantities)
    if wanted & {"susceptibility", "bounds", "proxies"}:
        res = susceptibility_closed(rho, ops, translation_invariant=ti)
        rec.chi_F, rec.chi_norm = res.chi_F, res.chi_normalized
        rec.M_F = fidelity_magnetization(rho, ops)
        rec.D_eff = effective_dimension(res.chi_F, n_sites)
        if "bounds" in wanted:
            rec.lower_bound, rec.upper_bound = res.lower_bound, res.upper_bound
        if config.numeric_p is not None:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                rec.chi_numeric = susceptibility_numeric(rho, ops, config.numeric_p).value
    if "correlators" in wanted:
        records = correlator_records(rho, ops)
        rec.xi = _fit(records, "exponential")
        rec.gamma = _fit(records, "algebraic")
        rec.D_eff_xi = correlation_volume_estimate(n_sites, rec.xi)
    if "proxies" in wanted:
        depth = max(4, config.proxy_depth)
        levels = susceptibility_proxy_levels(rho, ops, depth, ti, check_symmetry=False)
        rec.proxy_L1, rec.proxy_L2, rec.proxy_L3, rec.proxy_L4 = (float(x) for x in levels[:4])
        rec.proxy_deepest = float(levels[config.proxy_depth - 1])
    if "geometry" in wanted:
        triples = _gap_triples(n_sites)
        if triples:
            t = GAP_AMPLITUDE
            rec.gap_min = min(subadditivity_gap(rho, ops, i, j, k, t, t, t, check_symmetry=False)
                              for i, j, k in triples)
    if config.timing:
        rec.seconds = time.perf_counter() - start
    return rec.check()


def _fit(records, model):
    """Fitted decay parameter; ``NoSignal`` maps to zero length (infinite exponent)."""
    try:
        fit = fit_decay(records, model)
    except NoSignal:
        return 0.0 if model == "exponential" else math.inf
    except ValueError:
        return math.nan
    return fit.xi if model == "exponential" else fit.gamma


def _evaluate_args(args):
    return evaluate_point(*args)


def run_sweep(config):
    """Evaluate every ``(N, q)`` point in config order.

    With ``workers > 1`` points run in a process pool; results are still
    returned in config order. Any invariant violation aborts the sweep.
    """
    jobs = [(config, n, q) for n, q in config.points()]
    try:
        if config.workers == 1 or len(jobs) == 1:
            return [evaluate_point(*job) for job in jobs]
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            return list(pool.map(_evaluate_args, jobs))
    except DimensionCapExceeded as exc:
        raise ConfigError(str(exc)) from exc


def _fmt(value):
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.12g}"
    return str(value)


def _json_value(value):
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    return value


def write_csv(records, path, columns=CSV_COLUMNS):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for rec in records:
            row = rec if isinstance(rec, dict) else asdict(rec)
            writer.writerow([_fmt(row[c]) for c in columns])


def read_csv(path):
    """Parse a CSV written by :func:`write_csv` back into dictionaries of floats and strings."""
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            parsed = {}
            for key, value in row.items():
                try:
                    parsed[key] = float(value)
                except ValueError:
                    parsed[key] = value
            out.append(parsed)
    return out


def _svg_setup():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    plt.rcParams["svg.hashsalt"] = "fidsus"
    return plt


def write_svg(records, stem):
    """Two figures: chi_F against N (log-log, fitted exponent per q) and against q (per N)."""
    plt = _svg_setup()
    paths = []
    by_q = {}
    for rec in records:
        by_q.setdefault(_fmt(rec.q), []).append(rec)
    fig, ax = plt.subplots(figsize=(5, 4))
    for key, recs in by_q.items():
        pts = [(r.N, r.chi_F) for r in recs if r.chi_F > 0]
        if not pts:
            continue
        ns, chis = zip(*pts)
        label = records[0].model if key == "nan" else f"q={key}"
        if len(pts) >= 3:
            cls = classify_scaling(pts)
            label += f" (alpha={cls.alpha:.3f}, {cls.label})"
        ax.loglog(ns, chis, "o-", label=label)
    ax.set_xlabel("N")
    ax.set_ylabel("chi_F")
    ax.legend(fontsize="small")
    fig.tight_layout()
    path = f"{stem}_vs_N.svg"
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    paths.append(path)
    if records[0].model == "bond_dephased":
        fig, ax = plt.subplots(figsize=(5, 4))
        for n_sites in sorted({r.N for r in records}):
            recs = [r for r in records if r.N == n_sites]
            ax.plot([r.q for r in recs], [r.chi_F for r in recs], "o-", label=f"N={n_sites}")
        ax.set_xlabel("q")
        ax.set_ylabel("chi_F")
        ax.legend(fontsize="small")
        fig.tight_layout()
        path = f"{stem}_vs_q.svg"
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
        paths.append(path)
    return paths


def emit(records, fmt, out_dir, stem="sweep", config=None):
    """Write records as csv, json or svg into ``out_dir``; returns the written paths.

    Raises:
        ValueError: no records (nothing is written).
        OSError: the output location is not writable.
    """
    if not records:
        raise ValueError("no records to emit")
    if fmt not in FORMATS:
        raise ConfigError(f"unknown format {fmt!r}")
    os.makedirs(out_dir, exist_ok=True)
    base = os.path.join(out_dir, stem)
    if fmt == "csv":
        write_csv(records, base + ".csv")
        return [base + ".csv"]
    if fmt == "json":
        payload = {"records": [{k: _json_value(v) for k, v in asdict(r).items()} for r in records]}
        if config is not None:
            payload["config"] = asdict(config)
        with open(base + ".json", "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return [base + ".json"]
    return write_svg(records, base)
