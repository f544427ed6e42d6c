"""Plain-text chain files.

The first line is ``#`` followed by a JSON header (configuration, its hash,
dimension, column layout, burn-in, thinning).  Each further line holds one
sweep as whitespace-separated numbers with 17 significant digits.  A final
line without its newline is an interrupted write and is dropped with a
warning.
"""
import json
import warnings

import numpy as np

from . import corr_param as cp
from .mcmc import SweepRecord

FORMAT = "bayescopula-chain"
VERSION = 1


class ChainFileError(ValueError):
    """A chain file is missing, malformed or inconsistent."""


def layout(param_names, m, has_corr, n_accept, latent_shape=None):
    """Column names of a record line, plus the block lengths used to split it."""
    pairs = [f"{t}_{s}" for t, s in cp.pair_index(m)]
    blocks = [("sweep", 1), ("loglik", 1)]
    for j, names in enumerate(param_names):
        blocks.append((f"theta_{j}", len(names)))
    blocks += [("copula", len(pairs)), ("latent_copula", len(pairs)), ("gamma", len(pairs))]
    if has_corr:
        blocks.append(("corr", len(pairs)))
    blocks.append(("accepted", n_accept))
    if latent_shape is not None:
        blocks.append(("latent", int(np.prod(latent_shape))))
    return blocks


def _fmt(x):
    return format(float(x), ".17g")


def format_record(rec):
    vals = [rec.sweep, rec.loglik]
    for th in rec.theta:
        vals.extend(th)
    vals.extend(rec.copula)
    vals.extend(rec.latent_copula)
    vals.extend(rec.gamma)
    if rec.corr is not None:
        vals.extend(rec.corr)
    vals.extend(np.asarray(rec.accepted, dtype=int))
    if rec.latent is not None:
        vals.extend(np.asarray(rec.latent).ravel())
    return " ".join(str(int(v)) if isinstance(v, (int, np.integer)) else _fmt(v)
                    for v in vals) + "\n"


class ChainWriter:
    """Append records to a chain file as they are produced."""

    def __init__(self, path, header):
        self.path = path
        self.fh = open(path, "w", encoding="utf-8", newline="\n")
        header = dict(header, format=FORMAT, version=VERSION)
        self.fh.write("# " + json.dumps(header, sort_keys=True, separators=(",", ":")) + "\n")

    def write(self, rec):
        self.fh.write(format_record(rec))

    def close(self):
        self.fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_chain(path):
    """Return ``(header, records)``; raises :class:`ChainFileError` naming the bad line."""
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            text = fh.read()
    except OSError as exc:
        raise ChainFileError(f"{path}: {exc.strerror}") from None
    lines = text.split("\n")
    if not lines or not lines[0].startswith("# "):
        raise ChainFileError(f"{path}:1: missing chain header")
    try:
        header = json.loads(lines[0][2:])
    except json.JSONDecodeError as exc:
        raise ChainFileError(f"{path}:1: unreadable header ({exc.msg})") from None
    if header.get("format") != FORMAT:
        raise ChainFileError(f"{path}:1: not a chain file")
    blocks = [tuple(b) for b in header["layout"]]
    width = sum(n for _, n in blocks)
    body = lines[1:]
    # text ends with "\n" iff the last split element is empty
    if body and body[-1] != "":
        warnings.warn(f"{path}:{len(lines)}: dropping truncated final line")
        body = body[:-1]
    elif body:
        body = body[:-1]
    records = []
    for k, line in enumerate(body):
        lineno = k + 2
        parts = line.split()
        if len(parts) != width:
            raise ChainFileError(f"{path}:{lineno}: expected {width} values, found {len(parts)}")
        try:
            vals = np.array([float(p) for p in parts])
        except ValueError:
            raise ChainFileError(f"{path}:{lineno}: non-numeric value") from None
        records.append(_split(vals, blocks, header))
    return header, records


def _split(vals, blocks, header):
    out = {}
    pos = 0
    theta = []
    for name, n in blocks:
        chunk = vals[pos:pos + n]
        pos += n
        if name.startswith("theta_"):
            theta.append(chunk)
        else:
            out[name] = chunk
    latent = out.get("latent")
    if latent is not None:
        latent = latent.reshape(header["latent_shape"])
    return SweepRecord(
        sweep=int(out["sweep"][0]), theta=theta, copula=out["copula"],
        latent_copula=out["latent_copula"], gamma=out["gamma"].astype(int),
        corr=out.get("corr"), loglik=float(out["loglik"][0]),
        accepted=out["accepted"].astype(bool), latent=latent)
