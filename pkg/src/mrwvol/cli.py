"""Command-line interface.

    mrwvol simulate --model mrw --lambda 0.33 --sigma 0.01 --R 512 --T 2048 --seed 7 --output sim.csv
    mrwvol fit --model mrw --input sim.csv --mode returns --output fit.json
    mrwvol forecast --model mrw --input sim.csv --mode returns --params fit.json --N-max 250
    mrwvol rerun fit.json

Every artifact carries ``meta.config`` (the fully resolved run
configuration minus the output path) and ``meta.version``; ``rerun``
replays that configuration.
"""

import argparse
import dataclasses
import json
import logging
import sys
import traceback
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import __version__
from .data import ingest_prices, read_artifact, write_csv, write_json
from .inference import (conditional_return_density, default_grid,
                        filter_sequence, fit_ml, forecast_curve, smooth)
from .model import DEFAULT_MAX_TAU, MrwParams, SvParams
from .simulate import (abs_return_acf, sample_mrw, sample_sv,
                       scaling_curvature, structure_functions)

logger = logging.getLogger("mrwvol")

COMMANDS = ("fit", "smooth", "filter-seq", "forecast", "density", "simulate",
            "diagnose")
PARAM_NAMES = {"sv": ("psi", "sigma_u", "sigma"),
               "mrw": ("lam", "sigma", "R")}


@dataclass
class RunConfig:
    command: str
    model: str = "mrw"
    input: Optional[str] = None
    column: Optional[str] = None
    date_column: Optional[str] = None
    mode: str = "returns"
    end: Optional[int] = None
    output: Optional[str] = None
    format: str = "json"
    seed: int = 0
    tau: Optional[int] = None
    jobs: int = 1
    params: dict = field(default_factory=dict)
    params_file: Optional[str] = None
    T: Optional[int] = None
    with_h: bool = False
    N: int = 1
    N_max: int = 250
    grid_points: int = 257
    grid_width: float = 8.0
    start: int = 1
    restarts: int = 2
    q_values: list = field(default_factory=lambda: [1.0, 2.0, 3.0, 4.0])
    max_lag: Optional[int] = None
    fit_range: Optional[list] = None

    def validate(self):
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command {self.command!r}")
        if self.model not in PARAM_NAMES:
            raise ValueError(f"model must be 'sv' or 'mrw', got {self.model!r}")
        if self.format not in ("json", "csv"):
            raise ValueError("format must be 'json' or 'csv'")
        if self.command == "simulate":
            if self.input is not None:
                raise ValueError("simulate takes no --input")
            if not self.T or self.T < 1:
                raise ValueError("simulate needs --T >= 1")
        elif self.input is None:
            raise ValueError(f"{self.command} needs --input")
        if self.N < 1 or self.N_max < 1:
            raise ValueError("horizons must be >= 1")


# ---------------------------------------------------------------------------

def _model_from(kind, values, tau):
    if kind == "sv":
        return SvParams(values["psi"], values["sigma_u"], values["sigma"])
    return MrwParams(values["lam"], values["sigma"], values["R"], tau)


def _resolve_params(cfg, x):
    """Explicit values override a fit artifact; otherwise fit on the data."""
    values = {}
    if cfg.params_file:
        meta, data = read_artifact(cfg.params_file)
        if meta["config"]["model"] != cfg.model:
            raise ValueError(f"{cfg.params_file} holds a {meta['config']['model']} fit")
        values.update({k: data["params"][k] for k in PARAM_NAMES[cfg.model]})
    values.update(cfg.params)
    missing = [k for k in PARAM_NAMES[cfg.model] if k not in values]
    if not missing:
        return _model_from(cfg.model, values, cfg.tau), None
    fit = fit_ml(cfg.model, x, tau=cfg.tau, restarts=cfg.restarts, seed=cfg.seed)
    return fit.params, fit


def _load(cfg):
    series = ingest_prices(cfg.input, cfg.column, cfg.mode, cfg.date_column)
    if cfg.end is not None:
        series = series.head(cfg.end)
    return series


def _labels(series):
    if series.labels is not None:
        return list(series.labels)
    return list(range(1, len(series) + 1))


def _execute(cfg):
    """Run one command; returns ``(extra_meta, data_columns)``."""
    if cfg.command == "simulate":
        params = _model_from(cfg.model, cfg.params, cfg.tau)
        sim = (sample_mrw(params, cfg.T, cfg.seed) if cfg.model == "mrw"
               else sample_sv(params, cfg.T, cfg.seed))
        cols = {"t": list(range(1, cfg.T + 1)), "x": sim.x}
        if cfg.with_h:
            cols["h"] = sim.h
        return {"params": params.as_dict()}, cols

    series = _load(cfg)
    x = np.asarray(series.values)

    if cfg.command == "diagnose":
        T = x.size
        max_lag = cfg.max_lag or max(1, min(T // 8, 1000))
        fr = tuple(cfg.fit_range) if cfg.fit_range else None
        sf = structure_functions(x, cfg.q_values)
        acf = abs_return_acf(x, max_lag, fr)
        meta = {"acf_slope": acf.slope, "acf_fit_range": list(acf.fit_range),
                "acf_reliable": acf.reliable,
                "scaling_fit_range": list(sf.fit_range)}
        if sf.q_values.size >= 3:
            curv, se = scaling_curvature(sf)
            meta["zeta_second_differences"] = curv
            meta["zeta_second_differences_stderr"] = se
        return meta, {"q": sf.q_values, "zeta": sf.zeta_hat,
                      "stderr": sf.stderr, "r2": sf.r2}

    if cfg.command == "fit":
        start = None
        if all(k in cfg.params for k in PARAM_NAMES[cfg.model]):
            start = _model_from(cfg.model, cfg.params, cfg.tau)
        fit = fit_ml(cfg.model, x, tau=cfg.tau, start=start,
                     restarts=cfg.restarts, seed=cfg.seed)
        meta = {"params": fit.params.as_dict(),
                "log_likelihood": fit.log_likelihood,
                "converged": fit.converged, "at_boundary": fit.at_boundary,
                "n_evals": fit.n_evals}
        if fit.params.kind == "mrw":
            meta["tau_effective"] = fit.params.truncation(x.size)
        return meta, {"params": fit.params.as_dict(),
                      "log_likelihood": fit.log_likelihood,
                      "converged": fit.converged,
                      "at_boundary": fit.at_boundary,
                      "trace": fit.trace}

    params, fit = _resolve_params(cfg, x)
    meta = {"params": params.as_dict()}
    if params.kind == "mrw":
        meta["tau_effective"] = params.truncation(x.size)
        meta["c"] = params.c
    if fit is not None:
        meta["fitted_log_likelihood"] = fit.log_likelihood

    if cfg.command == "smooth":
        h = smooth(params, x).values
        return meta, {"t": _labels(series), "h": h, "volatility": np.exp(0.5 * h)}
    if cfg.command == "filter-seq":
        h = filter_sequence(params, x, start=cfg.start)
        return meta, {"t": _labels(series)[cfg.start - 1:], "h": h,
                      "volatility": np.exp(0.5 * h)}
    if cfg.command == "forecast":
        fc = forecast_curve(params, x, cfg.N_max)
        meta["origin"] = _labels(series)[-1]
        return meta, {"N": fc.horizons, "h": fc.values,
                      "volatility": fc.volatility, "variance": fc.variances}
    if cfg.command == "density":
        grid = default_grid(x, cfg.grid_points, cfg.grid_width)
        dc = conditional_return_density(params, x, cfg.N, grid, jobs=cfg.jobs)
        meta.update({"normalization": dc.normalization, "horizon": cfg.N,
                     "origin": _labels(series)[-1],
                     "unconditional_variance": float(np.var(x)),
                     "conditional_variance": dc.variance()})
        return meta, {"xi": dc.grid, "density": dc.density}
    raise ValueError(f"unknown command {cfg.command!r}")


def run(cfg):
    """Execute ``cfg`` and write its artifact; returns the output path."""
    cfg.validate()
    extra, cols = _execute(cfg)
    meta = {"version": __version__, "command": cfg.command, "seed": cfg.seed,
            "config": {k: v for k, v in dataclasses.asdict(cfg).items()
                       if k != "output"}}
    meta.update(extra)
    out = cfg.output or f"{cfg.command}.{cfg.format}"
    if cfg.format == "json":
        write_json(out, meta, {k: list(v) if isinstance(v, np.ndarray) else v
                               for k, v in cols.items()})
    else:
        if cfg.command == "fit":
            p = cols["params"]
            cols = {"name": list(p) + ["log_likelihood"],
                    "value": [np.nan if v is None else float(v) for v in p.values()]
                    + [cols["log_likelihood"]]}
        write_csv(out, meta, cols)
    return out


# ---------------------------------------------------------------------------

def _parser():
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("global options")
    g.add_argument("--model", choices=["sv", "mrw"], default="mrw")
    g.add_argument("--input", help="CSV file with a header row")
    g.add_argument("--output", help="artifact path (default: <command>.<format>)")
    g.add_argument("--format", choices=["json", "csv"], default="json")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--tau", type=int, help=f"MRW truncation lag (default min(T-1, {DEFAULT_MAX_TAU}))")
    g.add_argument("--jobs", type=int, default=1)
    g.add_argument("--column", help="numeric column name")
    g.add_argument("--date-column", help="column holding date labels")
    g.add_argument("--mode", choices=["prices", "returns"], default="returns")
    g.add_argument("--end", type=int, help="use only the first END returns")
    g.add_argument("--params", dest="params_file", help="fit artifact to take parameters from")
    g.add_argument("--lambda", dest="lam", type=float)
    g.add_argument("--sigma", type=float)
    g.add_argument("--R", type=float)
    g.add_argument("--psi", type=float)
    g.add_argument("--sigma-u", type=float)
    g.add_argument("--restarts", type=int, default=2)
    g.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="mrwvol",
                                description="MRW and SV volatility inference")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("fit", parents=[common], help="maximum-likelihood fit")
    sub.add_parser("smooth", parents=[common], help="smoothed log-volatility")
    s = sub.add_parser("filter-seq", parents=[common],
                       help="filtered log-volatility on growing prefixes")
    s.add_argument("--start", type=int, default=1)
    s = sub.add_parser("forecast", parents=[common],
                       help="log-volatility forecasts for N = 1..N_max")
    s.add_argument("--N-max", dest="N_max", type=int, default=250)
    s = sub.add_parser("density", parents=[common],
                       help="conditional density of the return N steps ahead")
    s.add_argument("--N", type=int, default=1)
    s.add_argument("--grid-points", type=int, default=257)
    s.add_argument("--grid-width", type=float, default=8.0,
                   help="half-width in sample standard deviations")
    s = sub.add_parser("simulate", parents=[common], help="simulate returns")
    s.add_argument("--T", type=int, required=True)
    s.add_argument("--with-h", action="store_true")
    s = sub.add_parser("diagnose", parents=[common],
                       help="structure functions and absolute-return ACF")
    s.add_argument("--q", dest="q_values", type=float, nargs="+",
                   default=[1.0, 2.0, 3.0, 4.0])
    s.add_argument("--max-lag", type=int)
    s.add_argument("--fit-range", type=int, nargs=2)
    s = sub.add_parser("rerun", help="replay the configuration embedded in an artifact")
    s.add_argument("artifact")
    s.add_argument("--output")
    return p


def config_from_args(ns):
    d = vars(ns).copy()
    params = {}
    for key, name in (("lam", "lam"), ("sigma", "sigma"), ("R", "R"),
                      ("psi", "psi"), ("sigma_u", "sigma_u")):
        v = d.pop(key, None)
        if v is not None:
            params[name] = v
    d.pop("verbose", None)
    names = {f.name for f in dataclasses.fields(RunConfig)}
    cfg = RunConfig(**{k: v for k, v in d.items() if k in names})
    cfg.params = {k: v for k, v in params.items() if k in PARAM_NAMES[cfg.model]}
    return cfg


def main(argv=None):
    ns = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(ns, "verbose", False)
                        else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if ns.command == "rerun":
            meta, _ = read_artifact(ns.artifact)
            cfg = RunConfig(**meta["config"])
            if ns.output:
                cfg.output = ns.output
        else:
            cfg = config_from_args(ns)
        out = run(cfg)
    except Exception as exc:
        logger.debug("".join(traceback.format_exception(exc)))
        json.dump({"error": {"type": type(exc).__name__, "message": str(exc)}},
                  sys.stderr)
        sys.stderr.write("\n")
        return 1
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
