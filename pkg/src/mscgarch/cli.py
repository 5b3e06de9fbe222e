"""Command-line interface: ``mscgarch simulate|fit|forecast|stability|evaluate``.

Every subcommand writes its artifacts into ``--out-dir`` and is a pure
function of its inputs and ``--seed``. Failures exit nonzero and print a JSON
object ``{"error": <category>, "message": ...}`` on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import io
from .bayes import GibbsConfig, PriorSpec, gelman_rubin, run_chains
from .errors import DataError, MSCGARCHError
from .evaluation import compare_models
from .filtering import run_filter
from .model import ModelSpec, benchmark_dgp, simulate
from .stability import DEFAULT_DELTA, analyze

log = logging.getLogger("mscgarch")

_PRICE_HEADERS = ("adj close", "adj_close", "close", "price")


def _configure_logging():
    level = os.environ.get("MSCGARCH_LOG", "WARNING").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
        stream=sys.stderr,
    )


# ----------------------------------------------------------------------------
# input helpers


def load_returns(args) -> io.ReturnsSeries:
    labels, values = io.read_series_csv(args.input)
    kind = args.kind
    if kind == "auto":
        kind = "prices" if np.all(values > 0) else "returns"
    if kind == "prices":
        series = io.prices_to_returns(values, labels)
        log.info("converted %d prices to percentage log returns", values.size)
    else:
        series = io.ReturnsSeries(values, labels)
    if args.demean:
        series = io.ReturnsSeries(series.r - series.r.mean(), series.timestamps)
    return series


def _split(n: int, holdout: float) -> int:
    """Index where the evaluation sample starts (``n`` when there is no hold-out)."""
    if not 0.0 <= holdout < 1.0:
        raise DataError("--holdout must be a fraction in [0, 1)")
    return n - int(round(holdout * n))


def _out(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _spec(args) -> ModelSpec:
    return io.load_spec(args.spec) if args.spec else benchmark_dgp()


# ----------------------------------------------------------------------------
# artifact writers


def write_forecasts(path, y, result, labels=None):
    K = result.forecasts[0].per_regime.shape[0]
    header = ["t", "y", "y_squared", "var_forecast"]
    header += [f"alpha_{k + 1}" for k in range(K)] + [f"H_{k + 1}" for k in range(K)]
    if labels is not None:
        header.insert(1, "label")
    rows = []
    for i, (yt, f) in enumerate(zip(y, result.forecasts)):
        row = [i + 1, yt, yt * yt, f.var_forecast, *f.alpha, *f.per_regime[:, 0]]
        if labels is not None:
            row.insert(1, labels[i])
        rows.append(row)
    io.write_csv(path, header, rows)


def write_posterior(path, draws, chains):
    names, data = draws.as_table()
    n_per = chains[0].n
    rows = (
        [c + 1, i + 1, *vals]
        for c in range(len(chains))
        for i, vals in enumerate(data[c * n_per:(c + 1) * n_per])
    )
    io.write_csv(path, ["chain", "draw", *names], rows)


def fit_summary(draws, chains, cfg, args) -> dict:
    names = draws.theta_names
    spec = draws.posterior_mean_spec()
    doc = {
        "model": "MS-CGARCH" if cfg.model == "cgarch" else "MS-GARCH",
        "parameters": draws.summary(),
        "metadata": {
            "n_iter": cfg.n_iter,
            "n_burnin": cfg.n_burnin,
            "grid_size": cfg.grid_size,
            "seed": cfg.seed,
            "chains": len(chains),
            "n_draws": draws.n,
            "identification": "a0 of regime 1 > a0 of regime 2" if cfg.identification else None,
            "edge_hits": dict(zip(names, map(int, draws.edge_hits))),
            "plug_in": "posterior mean",
        },
    }
    if len(chains) > 1:
        r = gelman_rubin([c.theta_draws for c in chains])
        doc["metadata"]["gelman_rubin"] = dict(zip(names, map(float, r)))
    try:
        doc["stability_at_posterior_mean"] = analyze(spec, args.delta).to_dict()
    except MSCGARCHError as exc:
        doc["stability_at_posterior_mean"] = {"error": str(exc)}
    return doc


def _fit(y, args, model: str):
    cfg = GibbsConfig(
        n_iter=args.iters,
        n_burnin=args.burnin,
        grid_size=args.grid_size,
        seed=args.seed,
        model=model,
    )
    log.info("fitting %s: %d iterations on %d observations", model, cfg.n_iter, y.size)
    draws, chains = run_chains(y, PriorSpec(), cfg, args.chains)
    return draws, chains, cfg


# ----------------------------------------------------------------------------
# subcommands


def cmd_simulate(args):
    spec = _spec(args)
    sim = simulate(spec, args.T, args.seed, args.H_init)
    out = _out(args)
    K = spec.K
    rows = ([t + 1, sim.y[t], int(sim.z[t]), *sim.H[t]] for t in range(sim.y.size))
    io.write_csv(out / "simulated.csv", ["t", "y", "z", *[f"H_{k + 1}" for k in range(K)]], rows)
    stats = io.descriptive_stats(sim.y) if sim.y.size >= 4 else {}
    io.write_json(out / "simulated_stats.json", stats)
    return stats


def cmd_fit(args):
    series = load_returns(args)
    y = series.r[: _split(series.r.size, args.holdout)]
    draws, chains, cfg = _fit(y, args, args.model)
    out = _out(args)
    write_posterior(out / "posterior.csv", draws, chains)
    doc = fit_summary(draws, chains, cfg, args)
    io.write_json(out / "summary.json", doc)
    io.save_spec(draws.posterior_mean_spec(), out / "fitted_spec.json")
    return {k: {"mean": v["mean"], "std": v["std"]} for k, v in doc["parameters"].items()}


def cmd_forecast(args):
    spec = io.load_spec(args.spec)
    series = load_returns(args)
    res = run_filter(spec, series.r)
    out = _out(args)
    write_forecasts(out / "forecasts.csv", series.r, res, series.timestamps)
    return {"n": len(res.forecasts), "loglik": res.loglik}


def cmd_stability(args):
    report = analyze(_spec(args), args.delta, args.form)
    doc = report.to_dict()
    io.write_json(_out(args) / "stability.json", doc)
    return doc


def cmd_evaluate(args):
    series = load_returns(args)
    y = series.r
    start = _split(y.size, args.holdout)
    y_fit = y[:start]
    out = _out(args)
    if args.cgarch_spec and args.garch_spec:
        spec_c = io.load_spec(args.cgarch_spec)
        spec_g = io.load_spec(args.garch_spec)
        summaries = None
    elif args.cgarch_spec or args.garch_spec:
        raise DataError("give both --cgarch-spec and --garch-spec, or neither to fit both models")
    else:
        summaries = {}
        specs = {}
        for model, tag in (("cgarch", "MS-CGARCH"), ("garch", "MS-GARCH")):
            draws, chains, cfg = _fit(y_fit, args, model)
            write_posterior(out / f"posterior_{model}.csv", draws, chains)
            summaries[tag] = fit_summary(draws, chains, cfg, args)
            specs[model] = draws.posterior_mean_spec()
            io.save_spec(specs[model], out / f"fitted_spec_{model}.json")
        spec_c, spec_g = specs["cgarch"], specs["garch"]
        io.write_json(out / "summary.json", summaries)
        io.write_csv(out / "summary.csv", *_side_by_side(summaries))

    in_sample = start == y.size
    cmp = compare_models(y, spec_c, spec_g, start=0 if in_sample else start)
    doc = cmp.to_dict()
    doc["evaluation"] = "in-sample" if in_sample else f"hold-out of {y.size - start} observations"
    doc["plug_in"] = "posterior mean"
    io.write_json(out / "comparison.json", doc)
    io.write_csv(out / "comparison.csv", cmp.table()[0], cmp.table()[1:])
    H0 = None if in_sample else float(np.var(y_fit))
    for model, spec in (("cgarch", spec_c), ("garch", spec_g)):
        write_forecasts(out / f"forecasts_{model}.csv", y, run_filter(spec, y, H0), series.timestamps)
    return doc


def _side_by_side(summaries):
    """Posterior mean/std of both models, one row per parameter, blanks where absent."""
    c = summaries["MS-CGARCH"]["parameters"]
    g = summaries["MS-GARCH"]["parameters"]
    header = ["parameter", "MS-CGARCH mean", "MS-CGARCH std", "MS-GARCH mean", "MS-GARCH std"]
    rows = []
    for name, s in c.items():
        gs = g.get(name)
        rows.append([name, s["mean"], s["std"], gs["mean"] if gs else "", gs["std"] if gs else ""])
    return header, rows


# ----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mscgarch", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=True):
        sp.add_argument("--out-dir", default=".", help="directory for output files")
        if seed:
            sp.add_argument("--seed", type=int, default=0)

    def data(sp):
        sp.add_argument("--input", required=True, help="CSV of prices or returns")
        sp.add_argument(
            "--kind",
            choices=("auto", "prices", "returns"),
            default="auto",
            help="auto treats an all-positive series as prices",
        )
        sp.add_argument("--demean", action="store_true", help="subtract the sample mean")
        sp.add_argument("--holdout", type=float, default=0.0, help="fraction kept out of the fit")

    def mcmc(sp):
        sp.add_argument("--iters", type=int, default=500)
        sp.add_argument("--burnin", type=int, default=None, help="default: 20%% of --iters")
        sp.add_argument("--grid-size", type=int, default=33)
        sp.add_argument("--chains", type=int, default=1)
        sp.add_argument("--delta", type=float, default=DEFAULT_DELTA)

    sp = sub.add_parser("simulate", help="simulate a series from a spec")
    sp.add_argument("--spec", help="model spec JSON (default: the two-regime simulation DGP)")
    sp.add_argument("--T", type=int, default=300)
    sp.add_argument("--H-init", type=float, default=1.0)
    common(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("fit", help="Gibbs-sample the posterior")
    data(sp)
    mcmc(sp)
    sp.add_argument("--model", choices=("cgarch", "garch"), default="cgarch")
    common(sp)
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("forecast", help="one-step variance forecasts")
    sp.add_argument("--spec", required=True)
    data(sp)
    common(sp, seed=False)
    sp.set_defaults(func=cmd_forecast)

    sp = sub.add_parser("stability", help="second-moment stability report")
    sp.add_argument("--spec", help="model spec JSON (default: the simulation DGP)")
    sp.add_argument("--delta", type=float, default=DEFAULT_DELTA)
    sp.add_argument("--form", choices=("general", "literal"), default="general")
    common(sp, seed=False)
    sp.set_defaults(func=cmd_stability)

    sp = sub.add_parser("evaluate", help="compare MS-CGARCH and MS-GARCH forecasts")
    data(sp)
    mcmc(sp)
    sp.add_argument("--cgarch-spec")
    sp.add_argument("--garch-spec")
    common(sp)
    sp.set_defaults(func=cmd_evaluate)
    return p


def main(argv=None) -> int:
    _configure_logging()
    args = build_parser().parse_args(argv)
    try:
        result = args.func(args)
    except MSCGARCHError as exc:
        print(json.dumps({"error": exc.category, "message": str(exc)}), file=sys.stderr)
        return exc.exit_code
    print(json.dumps(result, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
