"""Command-line orchestration of the experiments.

Each subcommand builds an :class:`ExperimentConfig` (from ``--config`` JSON
and command-line overrides), runs it and writes its outputs atomically to
``--out`` together with a ``manifest.json``.  Outputs other than the
manifest's wall-clock field are byte-identical across reruns and thread
counts.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""
import argparse
import copy
import csv
import hashlib
import io
import json
import math
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from . import bernoulli as bn
from . import chaos
from . import covariance as cov
from . import presets
from . import simulate as sim
from . import spectral as sp
from .errors import ConfigError, GaussZerosError

KINDS = ("mean", "variance", "bound_overlay", "bernoulli_suite", "predictability", "diagnostics")
SUBCOMMAND_KIND = {"mean": "mean", "variance": "variance", "bound": "bound_overlay",
                   "bernoulli": "bernoulli_suite", "predictability": "predictability",
                   "diagnose": "diagnostics"}

DEFAULTS = {
    "kind": None,
    "measure": None,
    "raw": False,
    "T_list": [10.0],
    "n_reps": 1000,
    "dt": None,
    "master_seed": 0,
    "out": "out",
    "threads": None,
    "tolerance": 1e-10,
    "method": None,
    "phi": {"type": "indicator", "a": -1.0, "b": 1.0},
    "n_freq": 64,
    "circulant_ceiling": sim.DEFAULT_CEILING,
    "epsilon": 0.1,
    "bernoulli": {"n_values": list(range(4, 13)), "T_grid": [1e2, 1e4, 1e6, 1e8],
                  "growth_epsilon": 0.5, "small_ball_T": [1.0, 1e2, 1e4], "cesaro_T": [1e3, 1e4],
                  "n_max": 30},
    "predictability": {"interval": [0.0, 2.0], "threshold": 0.01, "t_max": 200.0,
                       "control_shift": 1.0},
    "diagnostics": {"delta": 0.1, "levels": 6, "t_max_grid": [2.0 ** k for k in range(4, 13)],
                    "cesaro_T": [1e3], "recurrence_threshold": 0.01, "recurrence_t_max": 100.0},
}
_NOT_HASHED = ("out", "threads")
_VARIANCE_KINDS = ("mean", "variance", "bound_overlay")


@dataclass
class ExperimentConfig:
    values: dict

    @classmethod
    def from_dict(cls, d):
        unknown = sorted(set(d) - set(DEFAULTS))
        if unknown:
            raise ConfigError(f"unknown config fields: {', '.join(unknown)}", unknown)
        merged = copy.deepcopy(DEFAULTS)
        for k, v in d.items():
            if isinstance(merged.get(k), dict) and isinstance(v, dict) and k != "phi":
                merged[k].update(v)
            else:
                merged[k] = v
        cfg = cls(merged)
        cfg.validate()
        return cfg

    def __getitem__(self, k):
        return self.values[k]

    def validate(self):
        v, bad = self.values, []
        if v["kind"] not in KINDS:
            bad.append("kind")
        if v["measure"] is None:
            bad.append("measure")
        else:
            try:
                self.measure()
            except (KeyError, ValueError, TypeError):
                bad.append("measure")
        T = v["T_list"]
        try:
            T = [float(x) for x in T]
            if not T or T[0] <= 0.0 or any(b <= a for a, b in zip(T, T[1:])):
                bad.append("T_list")
        except (TypeError, ValueError):
            bad.append("T_list")
        if v["kind"] in _VARIANCE_KINDS and not (isinstance(v["n_reps"], int) and v["n_reps"] >= 2):
            bad.append("n_reps")
        if v["method"] not in (None,) + sim.METHODS:
            bad.append("method")
        if v["dt"] is not None and not (isinstance(v["dt"], (int, float)) and v["dt"] > 0):
            bad.append("dt")
        if v["threads"] is not None and not (isinstance(v["threads"], int) and v["threads"] >= 1):
            bad.append("threads")
        if not (isinstance(v["tolerance"], (int, float)) and v["tolerance"] > 0):
            bad.append("tolerance")
        try:
            self.phi()
        except (KeyError, ValueError, TypeError):
            bad.append("phi")
        if bad:
            raise ConfigError(f"invalid config fields: {', '.join(bad)}", bad)

    def measure(self):
        m = self.values["measure"]
        if isinstance(m, str):
            return presets.preset(m, raw=bool(self.values["raw"]))[0]
        mu = sp.from_json(m)
        return mu if self.values["raw"] else sp.normalize(mu)[0]

    def measure_id(self):
        m = self.values["measure"]
        return m if isinstance(m, str) else "inline"

    def phi(self):
        p = self.values["phi"]
        t = p.get("type", "indicator")
        if t == "indicator":
            return sim.Indicator(float(p["a"]), float(p["b"]))
        if t == "piecewise_constant":
            return sim.PiecewiseConstant(p["edges"], p["levels"])
        if t == "tabulated":
            return sim.Tabulated(p["grid"], p["values"])
        raise ValueError(f"unknown test function type {t!r}")

    def method(self, mu):
        if self.values["method"]:
            return self.values["method"]
        if isinstance(mu, sp.Atomic):
            return "atomic_exact"
        if isinstance(mu, sp.Density):
            return "circulant"
        return "spectral_mc"

    def hash(self):
        d = {k: v for k, v in self.values.items() if k not in _NOT_HASHED}
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()


@dataclass
class RunManifest:
    config_hash: str
    tool_version: str
    wall_clock: float
    seeds: dict
    outputs: list = field(default_factory=list)

    def to_dict(self):
        return {"config_hash": self.config_hash, "tool_version": self.tool_version,
                "wall_clock": self.wall_clock, "seeds": self.seeds, "outputs": self.outputs}


def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def dumps(obj):
    return json.dumps(_clean(obj), sort_keys=True, indent=1) + "\n"


class _Writer:
    """Serialized atomic writer: temp file in the target directory, then rename."""

    def __init__(self, out_dir):
        self.out_dir = out_dir
        self.files = []
        os.makedirs(out_dir, exist_ok=True)

    def write(self, name, text):
        fd, tmp = tempfile.mkstemp(dir=self.out_dir, prefix="." + name, suffix=".tmp")
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, os.path.join(self.out_dir, name))
        if name not in self.files:
            self.files.append(name)


def _variance(cfg, mu, method):
    ceiling = cfg["circulant_ceiling"]
    return sim.variance_experiment(mu, cfg.phi(), cfg["T_list"], cfg["n_reps"], method,
                                   cfg["master_seed"], dt=cfg["dt"], threads=cfg["threads"],
                                   n_freq=cfg["n_freq"], circulant_ceiling=ceiling)


def _csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(x) if isinstance(x, float) else x for x in r])
    return buf.getvalue()


def _run_mean(cfg, mu, out):
    method = cfg.method(mu)
    rep = _variance(cfg, mu, method)
    K = cov.CovarianceKernel(mu)
    rows = [(float(r.T), r.n_reps, r.mean_count, r.mean_se, chaos.kac_rice_mean(K, r.T),
             method, cfg["master_seed"]) for r in rep.rows]
    out.write("mean.csv", _csv(("T", "n_reps", "mean_count", "mean_se", "kac_rice", "method", "seed"), rows))


def _run_variance(cfg, mu, out):
    rep = _variance(cfg, mu, cfg.method(mu))
    out.write("variance.csv", rep.to_csv())
    return rep


def _run_bound_overlay(cfg, mu, out):
    rep = _run_variance(cfg, mu, out)
    phi = cfg.phi()
    K = cov.CovarianceKernel(mu)
    mid = cfg.measure_id()
    tol = cfg["tolerance"]
    rows = [(T, chaos.chaos2_variance_time(K, phi.scaled(T), tol), 1.0 / (4.0 * math.pi), mid)
            for T in cfg["T_list"]]
    bounds_text = chaos.bounds_to_csv(rows)
    out.write("bounds.csv", bounds_text)
    pc = chaos.phi_constants(phi)
    try:
        prow = [(T, chaos.bound_var_phi_mu(mu, T, pc.c_phi, pc.alpha, tol), pc.c_phi, mid)
                for T in cfg["T_list"]]
        out.write("bound_var_phi_mu.csv", chaos.bounds_to_csv(prow))
    except GaussZerosError:
        pass
    try:
        res = chaos.restricted_measure(mu, cfg["epsilon"])
        Ke = cov.CovarianceKernel(res.measure)
        T0 = cfg["T_list"][0]
        c_lin = chaos.lin_constant(phi, res, T0)
        lrow = [(T, chaos.bound_lin(Ke, T, c_lin, tol), c_lin, mid) for T in cfg["T_list"]]
        out.write("bound_lin.csv", chaos.bounds_to_csv(lrow))
    except (GaussZerosError, ValueError):
        pass
    merged, verdict = overlay_text(rep.to_csv(), bounds_text)
    out.write("overlay.csv", merged)
    out.write("overlay.json", dumps({"verdict": verdict}))


def _run_bernoulli(cfg, mu, out):
    if not isinstance(mu, sp.CosineProduct):
        raise ConfigError("bernoulli suite needs a cosine-product measure", ["measure"])
    b = cfg["bernoulli"]
    # the sequence statements refer to the unscaled frequencies
    lam = bn.LambdaSequence(mu.sequence.kind, mu.sequence.a, mu.sequence.values)
    res = {"sequence": lam.to_dict(), "normalization_scale": mu.sequence.scale}
    cv = bn.cantor_criterion(lam, b["n_max"])
    res["cantor"] = {"status": cv.status, "n": cv.n}
    res["vieta_max_error"] = bn.vieta_check(np.arange(0.0, 50.0 + 1e-9, 0.01), 40)
    if lam.kind == "factorial":
        rec = []
        for n in b["n_values"]:
            r = bn.factorial_recurrence(n)
            rec.append({"n": n, "t": float(math.factorial(n)), "signed_value": r.signed_value,
                        "lower_bound": r.lower_bound, "prefix_sign": r.prefix_sign,
                        "alternating_sign": r.alternating_sign, "direct_value": r.direct_value})
        res["recurrence"] = rec
    sb = []
    for T in b["small_ball_T"]:
        try:
            s = bn.small_ball(lam, T)
        except ValueError as exc:
            sb.append({"T": T, "error": str(exc)})
            continue
        sb.append({"T": T, "N_T": s.N, "radius": s.radius, "exact_prob": s.exact_prob,
                   "bound": s.bound, "separated": s.separated, "flagged": s.flagged})
    res["small_ball"] = sb
    res["growth_certificate"] = bn.quadratic_growth_certificate(lam, b["T_grid"], b["growth_epsilon"]).to_dict()
    K = cov.CovarianceKernel(sp.CosineProduct(lam))
    res["cesaro"] = [{"T": T, "mean": cov.cesaro_mean(K, T, 1)} for T in b["cesaro_T"]]
    out.write("bernoulli.json", dumps(res))


def _run_predictability(cfg, mu, out):
    if not isinstance(mu, sp.Atomic):
        raise ConfigError("predictability needs an atomic measure", ["measure"])
    p = cfg["predictability"]
    K = cov.CovarianceKernel(mu)
    rec = cov.recurrence_times(K, p["threshold"], p["t_max"])
    shifts = [t for t, _ in rec] + [float(p["control_shift"])]
    rep = sim.predictability_experiment(mu, p["interval"], shifts, cfg["n_reps"], cfg["master_seed"], cfg["dt"])
    rows = [{"shift": t, "agreement": a, "C": c, "recurrent": i < len(rec)}
            for i, (t, a, c) in enumerate(zip(rep.shifts, rep.agreement, rep.covariance))]
    out.write("predictability.json", dumps({"interval": list(rep.interval), "n_reps": rep.n_reps,
                                            "occupancy": rep.occupancy, "rows": rows}))


def _run_diagnostics(cfg, mu, out):
    d = cfg["diagnostics"]
    K = cov.CovarianceKernel(mu)
    res = {"geman": cov.geman_check(K, d["delta"], d["levels"]).to_dict()}
    res["l2"] = {w: cov.l2_condition_scan(K, w, d["t_max_grid"]).to_dict() for w in ("C", "C''", "C+C''")}
    res["cesaro"] = [{"T": T, "power": p, "mean": cov.cesaro_mean(K, T, p)}
                     for T in d["cesaro_T"] for p in (1, 2)]
    res["recurrence"] = [[t, c] for t, c in cov.recurrence_times(K, d["recurrence_threshold"],
                                                                 d["recurrence_t_max"])]
    out.write("diagnostics.json", dumps(res))


_RUNNERS = {"mean": _run_mean, "variance": _run_variance, "bound_overlay": _run_bound_overlay,
            "bernoulli_suite": _run_bernoulli, "predictability": _run_predictability,
            "diagnostics": _run_diagnostics}


def run(config):
    """Execute ``config`` (an :class:`ExperimentConfig` or dict) and return its manifest."""
    cfg = config if isinstance(config, ExperimentConfig) else ExperimentConfig.from_dict(config)
    start = time.perf_counter()
    out = _Writer(cfg["out"])
    mu = cfg.measure()
    _RUNNERS[cfg["kind"]](cfg, mu, out)
    seeds = {"master_seed": cfg["master_seed"],
             "streams": "philox(master_seed; stage, T index, replication)"}
    man = RunManifest(cfg.hash(), __version__, time.perf_counter() - start, seeds, list(out.files))
    out.write("manifest.json", dumps(man.to_dict()))
    return man


def _read_csv(text):
    rows = list(csv.DictReader(io.StringIO(text)))
    return rows


def overlay_text(variance_csv, bound_csv):
    """Merge variance and bound CSV texts; returns ``(merged_csv, verdict)``."""
    vrows = _read_csv(variance_csv)
    brows = _read_csv(bound_csv)
    if not brows:
        raise ValueError("bound file has no rows")
    if [float(r["T"]) for r in vrows] != [float(r["T"]) for r in brows]:
        raise ValueError("variance and bound T grids differ")
    out = []
    for v, b in zip(vrows, brows):
        var, hi, bound = float(v["var_count"]), float(v["ci_high"]), float(b["bound_value"])
        se = float(v["var_se"]) if "var_se" in v and v["var_se"] not in ("", "nan") else 0.0
        if var >= bound:
            ok = "true"
        elif bound <= max(hi, var + 3.0 * se):
            ok = "within_ci"
        else:
            ok = "false"
        out.append((float(v["T"]), var, float(v["ci_low"]), hi, float(v["var_over_T2"]), bound, ok))
    text = _csv(("T", "var_count", "ci_low", "ci_high", "var_over_T2", "bound_value", "bound_satisfied"), out)
    verdict = "consistent" if all(r[-1] != "false" for r in out) else "violated"
    return text, verdict


def overlay(variance_csv, bound_csv):
    with open(variance_csv) as fh:
        v = fh.read()
    with open(bound_csv) as fh:
        b = fh.read()
    return overlay_text(v, b)


def _tables_from_file(path):
    with open(path) as fh:
        text = fh.read()
    base = os.path.basename(path)
    tables = []
    if text.lstrip().startswith("{"):
        d = json.loads(text)
        if "table" in d and "epsilon" in d:
            tables.append((f"{base} L(T)", [(r["T"], r["L"]) for r in d["table"]]))
        elif "growth_certificate" in d:
            tables.append((f"{base} L(T)", [(r["T"], r["L"]) for r in d["growth_certificate"]["table"]]))
        else:
            raise ValueError(f"{path}: unrecognized report schema")
        return tables
    rows = _read_csv(text)
    if not rows:
        raise ValueError(f"{path}: empty report")
    cols = set(rows[0])
    if {"T", "var_count", "var_over_T", "var_over_T2"} <= cols:
        T = [float(r["T"]) for r in rows]
        tables.append((f"{base} T var", list(zip(T, (float(r["var_count"]) for r in rows)))))
        tables.append((f"{base} T var/T", list(zip(T, (float(r["var_over_T"]) for r in rows)))))
        tables.append((f"{base} T var/T^2", list(zip(T, (float(r["var_over_T2"]) for r in rows)))))
    elif {"T", "bound_value"} <= cols:
        T = [float(r["T"]) for r in rows]
        tables.append((f"{base} T bound/T", [(t, float(r["bound_value"]) / t) for t, r in zip(T, rows)]))
    else:
        raise ValueError(f"{path}: unrecognized report schema")
    return tables


def plotdata(paths):
    """Whitespace-separated tables, one per curve, separated for gnuplot ``index``."""
    blocks = []
    for p in paths:
        for title, rows in _tables_from_file(p):
            lines = [f"# {title}"] + [f"{float(a)!r} {float(b)!r}" for a, b in rows]
            blocks.append("\n".join(lines))
    return "\n\n\n".join(blocks) + "\n"


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--seed", type=int, help="master seed (u64)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--threads", type=int, help="worker threads")
    common.add_argument("--tolerance", type=float, help="quadrature tolerance")
    exp = argparse.ArgumentParser(add_help=False)
    exp.add_argument("--preset", help="named measure: " + ", ".join(presets.NAMES))
    exp.add_argument("--measure-json", help="file with an inline measure JSON document")
    exp.add_argument("--raw", action="store_true", default=None, help="skip normalization")
    exp.add_argument("--T", type=float, nargs="+", dest="T_list", help="window half-widths")
    exp.add_argument("--reps", type=int, dest="n_reps", help="replications per T")
    exp.add_argument("--method", choices=sim.METHODS)
    exp.add_argument("--dt", type=float)
    exp.add_argument("--n-freq", type=int, dest="n_freq")
    exp.add_argument("--ceiling", type=float, dest="circulant_ceiling",
                     help="maximal clipped spectral mass in circulant embedding")
    p = argparse.ArgumentParser(prog="gausszeros", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in SUBCOMMAND_KIND:
        sub.add_parser(name, parents=[common, exp])
    ov = sub.add_parser("overlay", parents=[common])
    ov.add_argument("variance_csv")
    ov.add_argument("bound_csv")
    pdp = sub.add_parser("plotdata", parents=[common])
    pdp.add_argument("reports", nargs="+")
    return p


def _config_from_args(args):
    d = {}
    if args.config:
        try:
            with open(args.config) as fh:
                d = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}", ["config"]) from exc
    d["kind"] = SUBCOMMAND_KIND[args.command]
    if args.preset:
        d["measure"] = args.preset
    if args.measure_json:
        with open(args.measure_json) as fh:
            d["measure"] = json.load(fh)
    for key in ("raw", "T_list", "n_reps", "method", "dt", "n_freq", "circulant_ceiling",
                "threads", "tolerance", "out"):
        val = getattr(args, key, None)
        if val is not None:
            d[key] = val
    if args.seed is not None:
        d["master_seed"] = args.seed
    return ExperimentConfig.from_dict(d)


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        if args.command == "overlay":
            text, verdict = overlay(args.variance_csv, args.bound_csv)
            out = _Writer(args.out or ".")
            out.write("overlay.csv", text)
            out.write("overlay.json", dumps({"verdict": verdict}))
            print(verdict)
            return 0
        if args.command == "plotdata":
            text = plotdata(args.reports)
            if args.out:
                _Writer(args.out).write("plotdata.dat", text)
            else:
                sys.stdout.write(text)
            return 0
        man = run(_config_from_args(args))
        print(json.dumps({"outputs": man.outputs, "config_hash": man.config_hash}))
        return 0
    except ConfigError as exc:
        print(f"config error: {exc} (fields: {', '.join(exc.fields)})", file=sys.stderr)
        return 2
    except (GaussZerosError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except (ValueError, KeyError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
