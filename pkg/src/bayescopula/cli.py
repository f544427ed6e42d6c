"""Command line interface: ``bayescopula fit | simulate | summarize``.

Exit codes: 0 success, 2 configuration or data error, 3 sampler invariant
violation, 4 corrupted or missing chain files.
"""
import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import corr_param as cp
from . import inference as inf
from .chainio import ChainFileError, ChainWriter, layout, read_chain
from .config import ConfigError, from_dict, load, read_csv, write_csv
from .dvine import DVine
from .gaussian_copula import GaussianCopula
from .margins import DomainError, MarginSpec
from .mcmc import ProposalError
from .samplers import FitTask, SamplerError, run

log = logging.getLogger("bayescopula")

OUT_ENV = "BAYESCOPULA_OUT"
EXIT_OK, EXIT_CONFIG, EXIT_SAMPLER, EXIT_CHAIN = 0, 2, 3, 4


def _out_dir(cfg, out, base):
    chosen = out or os.environ.get(OUT_ENV) or cfg.output
    p = Path(chosen)
    return p if p.is_absolute() or out or os.environ.get(OUT_ENV) else base / p


def build_task(cfg, data):
    margins = [MarginSpec(m.family, tuple(m.params)) if m.params is not None else m.family
               for m in cfg.margins]
    c, mc = cfg.copula, cfg.mcmc
    return FitTask(
        data=data, margins=margins, copula=c.type, family=c.family,
        parameterisation=c.parameterisation, selection=c.selection, sweeps=mc.sweeps,
        burn_in=mc.burn_in, thin=mc.thin, step=mc.step, adapt=mc.adapt,
        proposal_df=mc.proposal_df, freeze_proposals=mc.freeze_proposals,
        block_size=mc.block_size, lambda_prior=c.lambda_prior,
        lambda_beta=tuple(c.lambda_beta), allow_negative_clayton=c.allow_negative_clayton,
        prior_only=mc.prior_only, keep_latent=mc.keep_latent)


def _chain_header(cfg, task, chain, seed):
    m = task.dim
    names = [list(mg.param_names) for mg in task.margins]
    has_corr = task.copula == "gaussian" or (task.copula == "dvine" and task.family == "gaussian")
    n_accept = m + (0 if task.copula == "independence" else cp.n_pairs(m))
    discrete = any(task.discrete_flags)
    latent_shape = list(task.data.shape) if (discrete and task.keep_latent) else None
    return {
        "config": cfg.to_dict(), "config_hash": cfg.hash(), "dim": m,
        "param_names": names, "families": [mg.family for mg in task.margins],
        "layout": layout(names, m, has_corr, n_accept, latent_shape),
        "latent_shape": latent_shape, "burn_in": task.burn_in, "thin": task.thin,
        "chain": chain, "seed": seed,
    }


def _run_chain(cfg_dict, data, chain, seed, path):
    cfg = from_dict(cfg_dict)
    task = build_task(cfg, data)
    rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(chain + 1)[chain])
    with ChainWriter(path, _chain_header(cfg, task, chain, seed)) as w:
        for rec in run(task, rng):
            w.write(rec)
    return str(path)


def cmd_fit(config_path, out=None, seed=None, chains=None):
    cfg = load(config_path)
    base = Path(config_path).resolve().parent
    if seed is not None:
        cfg.mcmc.seed = seed
    if chains is not None:
        cfg.mcmc.chains = chains
    if cfg.mcmc.seed is None:
        raise ConfigError("mcmc.seed is mandatory (or pass --seed)", path=config_path)
    if cfg.data is None:
        raise ConfigError("'data' is required for fit", path=config_path)
    data_path = Path(cfg.data) if Path(cfg.data).is_absolute() else base / cfg.data
    header, data = read_csv(data_path)
    if data.shape[1] != len(cfg.margins):
        raise ConfigError(f"data have {data.shape[1]} columns but {len(cfg.margins)} "
                          "margins are configured", path=config_path)
    try:
        build_task(cfg, data)
    except DomainError as exc:
        raise ConfigError(str(exc), path=config_path) from None
    outdir = _out_dir(cfg, out, base)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = [outdir / f"chain_{k}.txt" for k in range(cfg.mcmc.chains)]
    args = [(cfg.to_dict(), data, k, cfg.mcmc.seed, paths[k]) for k in range(cfg.mcmc.chains)]
    if len(args) == 1:
        _run_chain(*args[0])
    else:
        with ProcessPoolExecutor(max_workers=min(len(args), os.cpu_count() or 1)) as ex:
            list(ex.map(_run_chain, *zip(*args)))
    log.info("wrote %d chain file(s) to %s", len(paths), outdir)
    write_summaries(outdir)
    return EXIT_OK


# ----------------------------------------------------------------- simulate
def simulate_data(cfg, n, rng):
    """Draw ``n`` rows from the fully specified model in ``cfg``."""
    m = len(cfg.margins)
    for j, mg in enumerate(cfg.margins):
        if mg.params is None:
            raise ConfigError(f"margin {j} needs 'params' to simulate")
    margins = [MarginSpec(mg.family, tuple(mg.params)) for mg in cfg.margins]
    c = cfg.copula
    try:
        if c.type == "independence":
            u = rng.random((n, m))
        elif c.type == "gaussian":
            if c.corr is not None:
                corr = np.array(c.corr, dtype=float)
            elif c.partials is not None:
                corr = cp.gamma_from_partials(np.array(c.partials, dtype=float), m)
            else:
                raise ConfigError("simulation needs copula.corr or copula.partials")
            if corr.shape != (m, m):
                raise ConfigError(f"copula.corr must be {m} x {m}")
            u = GaussianCopula(corr).sample_u(n, rng)
        else:
            if c.phi is None:
                raise ConfigError("simulation needs copula.phi for a D-vine")
            phi = np.array(c.phi, dtype=float)
            if len(phi) != cp.n_pairs(m):
                raise ConfigError(f"copula.phi needs {cp.n_pairs(m)} values")
            u = DVine(c.family, phi, c.gamma, dim=m).sample_u(n, rng)
    except DomainError as exc:
        raise ConfigError(str(exc)) from None
    return margins, np.column_stack([mg.quantile(u[:, j]) for j, mg in enumerate(margins)])


def cmd_simulate(config_path, out=None, seed=None):
    cfg = load(config_path)
    base = Path(config_path).resolve().parent
    sim = cfg.simulate
    if sim is None:
        raise ConfigError("a 'simulate' section is required", path=config_path)
    seed = seed if seed is not None else (sim.seed if sim.seed is not None else cfg.mcmc.seed)
    if seed is None:
        raise ConfigError("simulate.seed is mandatory (or pass --seed)", path=config_path)
    try:
        margins, y = simulate_data(cfg, sim.n, np.random.default_rng(seed))
    except ConfigError as exc:
        raise ConfigError(str(exc), path=config_path) from None
    outdir = _out_dir(cfg, out, base)
    outdir.mkdir(parents=True, exist_ok=True)
    header = [f"y{j + 1}" for j in range(len(margins))]
    ints = [j for j, mg in enumerate(margins) if mg.discrete]
    write_csv(outdir / sim.file, header, y, ints)
    log.info("wrote %d rows to %s", sim.n, outdir / sim.file)
    return EXIT_OK


# ---------------------------------------------------------------- summarize
def _summaries(header, records):
    cfg = header["config"]
    c = cfg["copula"]
    s = cfg["summary"]
    kept = inf.retained(records, header["burn_in"], header["thin"])
    summ = inf.summarize(kept, header["families"], header["param_names"], c["type"],
                         c["family"], c["selection"], s["level"])
    return kept, summ


def _dependence(header, kept, seed_key):
    cfg = header["config"]
    c, s = cfg["copula"], cfg["summary"]
    m = header["dim"]
    if not kept or c["type"] == "independence":
        return None
    rng = np.random.default_rng([cfg["mcmc"]["seed"], 7919, seed_key])
    models = inf.copula_models(kept, c["type"], c["family"], m)
    pairs = cp.pair_index(m)
    table = inf.dependence_by_simulation(models, pairs, rng, m, draws=s["draws"],
                                         k_inner=s["k_inner"])
    return {f"{t},{u}": row for (t, u), row in table.items()}


def write_summaries(chain_dir):
    chain_dir = Path(chain_dir)
    files = sorted(chain_dir.glob("chain_*.txt"), key=lambda p: int(p.stem.split("_")[1])
                   if p.stem.split("_")[1].isdigit() else 0)
    if not files:
        raise ChainFileError(f"{chain_dir}: no chain files found")
    chains = [read_chain(f) for f in files]
    hashes = {h["config_hash"] for h, _ in chains}
    if len(hashes) != 1:
        raise ChainFileError(f"{chain_dir}: chain files come from different configurations")
    result = {"chains": [], "pooled": None}
    pooled = []
    for k, (header, records) in enumerate(chains):
        kept, summ = _summaries(header, records)
        d = summ.to_dict()
        d["file"] = files[k].name
        d["n_records"] = len(records)
        if header["config"]["summary"]["dependence"]:
            d["dependence"] = _dependence(header, kept, k)
        result["chains"].append(d)
        pooled.extend(kept)
    header = chains[0][0]
    cfgd = header["config"]
    c = cfgd["copula"]
    psumm = inf.summarize(pooled, header["families"], header["param_names"], c["type"],
                          c["family"], c["selection"], cfgd["summary"]["level"])
    pd = psumm.to_dict()
    if cfgd["summary"]["dependence"]:
        pd["dependence"] = _dependence(header, pooled, len(chains))
    result["pooled"] = pd
    result["config_hash"] = header["config_hash"]
    (chain_dir / "summary.json").write_text(
        json.dumps(result, indent=2, sort_keys=True, default=_jsonable) + "\n", encoding="utf-8")
    (chain_dir / "summary.txt").write_text(render_report(result, header), encoding="utf-8")
    return result


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(type(x))


def _g(x):
    return "NA" if x is None else f"{x:.4f}"


def _iv(iv):
    return "NA" if iv is None else f"[{iv[0]:.4f}, {iv[1]:.4f}]"


def render_report(result, header):
    cfg = header["config"]
    c = cfg["copula"]
    lines = [f"bayescopula summary  config {result['config_hash'][:16]}",
             f"copula: {c['type']}"
             + (f" ({c['family']} pairs)" if c["type"] == "dvine" else "")
             + (", selection on" if c["selection"] else ""),
             ""]
    blocks = [(f"chain {k} ({d['file']})", d) for k, d in enumerate(result["chains"])]
    if len(result["chains"]) > 1:
        blocks.append(("pooled", result["pooled"]))
    for title, d in blocks:
        level = d["level"]
        lines.append(f"== {title}: {d['n_retained']} retained iterates, "
                     f"{100 * (1 - level):.0f}% intervals")
        for note in d["notes"]:
            lines.append(f"   note: {note}")
        if d["n_retained"]:
            for row in d["margins"]:
                lines.append(f"   margin {row['margin']} {row['family']:<11} "
                             f"{row['param']:<6} mean {_g(row['mean'])}  {_iv(row['interval'])}")
            for row in d["copula"]:
                t, s = row["pair"]
                txt = f"   pair ({t + 1},{s + 1}) mean {_g(row['mean'])}  {_iv(row['interval'])}"
                if "inclusion" in row:
                    txt += f"  pr(included) {row['inclusion']:.3f}"
                lines.append(txt)
            if d["corr_mean"] is not None:
                lines.append("   correlation matrix (posterior mean):")
                for r in d["corr_mean"]:
                    lines.append("     " + " ".join(f"{v:8.4f}" for v in r))
            if d.get("dependence"):
                lines.append("   dependence by simulation:")
                for key, row in d["dependence"].items():
                    t, s = (int(v) + 1 for v in key.split(","))
                    flag = " (approximate C)" if row["approximate"] else ""
                    lines.append(f"     ({t},{s}) tau {row['tau']:.4f} +/- {row['tau_se']:.4f}"
                                 f"  rho_S {row['rho_s']:.4f} +/- {row['rho_s_se']:.4f}{flag}")
            lines.append("   acceptance rates: "
                         + " ".join(f"{a:.3f}" for a in d["acceptance"]))
        lines.append("")
    return "\n".join(lines)


def cmd_summarize(chain_dir):
    write_summaries(chain_dir)
    return EXIT_OK


# --------------------------------------------------------------------- main
def make_parser():
    p = argparse.ArgumentParser(prog="bayescopula",
                                description="Bayesian estimation of copula models")
    sub = p.add_subparsers(dest="command", required=True)
    f = sub.add_parser("fit", help="run the sampler and write chains plus a summary")
    f.add_argument("--config", required=True)
    f.add_argument("--out", help=f"output directory (overrides ${OUT_ENV} and the config)")
    f.add_argument("--seed", type=int)
    f.add_argument("--chains", type=int)
    s = sub.add_parser("simulate", help="simulate data from a fully specified model")
    s.add_argument("--config", required=True)
    s.add_argument("--out")
    s.add_argument("--seed", type=int)
    z = sub.add_parser("summarize", help="summarise existing chain files")
    z.add_argument("chain_dir", nargs="?")
    z.add_argument("--out", help="chain directory (alternative to the positional argument)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None):
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        if args.command == "fit":
            if args.chains is not None and args.chains < 1:
                raise ConfigError("--chains must be >= 1")
            return cmd_fit(args.config, args.out, args.seed, args.chains)
        if args.command == "simulate":
            return cmd_simulate(args.config, args.out, args.seed)
        target = args.chain_dir or args.out or os.environ.get(OUT_ENV)
        if target is None:
            raise ChainFileError("no chain directory given")
        return cmd_summarize(target)
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SamplerError, ProposalError) as exc:
        print(f"sampler error: {exc}", file=sys.stderr)
        return EXIT_SAMPLER
    except ChainFileError as exc:
        print(f"chain file error: {exc}", file=sys.stderr)
        return EXIT_CHAIN


if __name__ == "__main__":
    sys.exit(main())
