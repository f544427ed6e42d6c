"""Run configuration: YAML parsing with line-numbered diagnostics, and CSV input."""
import csv
import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .margins import DISCRETE, FAMILIES as MARGIN_FAMILIES
from .pair_copulas import FAMILIES as PAIR_FAMILIES
from .samplers import COPULA_TYPES, PARAMETERISATIONS

SCHEMES = ("auto", "continuous", "discrete")
LAMBDA_PRIORS = ("uniform", "beta")
_TOP = ("data", "margins", "copula", "mcmc", "model", "output", "summary", "simulate")


class ConfigError(ValueError):
    """Invalid configuration or data; ``line`` points into the offending file."""

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        elif line is not None:
            where = f"line {line}: "
        super().__init__(where + message)


@dataclass
class MarginConfig:
    family: str
    params: list = None


@dataclass
class CopulaConfig:
    type: str = "gaussian"
    family: str = "gaussian"
    parameterisation: str = "partial"
    selection: bool = False
    allow_negative_clayton: bool = False
    lambda_prior: str = "uniform"
    lambda_beta: list = field(default_factory=lambda: [1.0, 1.0])
    # fully specified parameters, used by ``simulate``
    corr: list = None
    partials: list = None
    phi: list = None
    gamma: list = None


@dataclass
class McmcConfig:
    seed: int = None
    sweeps: int = 10000
    burn_in: int = None
    thin: int = 1
    chains: int = 1
    step: float = 0.01
    adapt: bool = False
    proposal_df: float = 5.0
    freeze_proposals: bool = True
    block_size: int = 6
    keep_latent: bool = False
    prior_only: bool = False


@dataclass
class SummaryConfig:
    level: float = 0.1
    dependence: bool = False
    draws: int = 1
    k_inner: int = 256


@dataclass
class SimulateConfig:
    n: int = 1000
    seed: int = None
    file: str = "simulated.csv"


@dataclass
class RunConfig:
    margins: list
    copula: CopulaConfig = field(default_factory=CopulaConfig)
    mcmc: McmcConfig = field(default_factory=McmcConfig)
    summary: SummaryConfig = field(default_factory=SummaryConfig)
    simulate: SimulateConfig = None
    data: str = None
    output: str = "out"
    scheme: str = "auto"

    def to_dict(self):
        """Canonical nested dictionary (all defaults filled in)."""
        out = {
            "data": self.data,
            "output": self.output,
            "model": {"scheme": self.scheme},
            "margins": [_drop_none(asdict(m)) for m in self.margins],
            "copula": _drop_none(asdict(self.copula)),
            "mcmc": _drop_none(asdict(self.mcmc)),
            "summary": asdict(self.summary),
        }
        if self.simulate is not None:
            out["simulate"] = _drop_none(asdict(self.simulate))
        return _drop_none(out)

    def dump(self):
        return yaml.safe_dump(self.to_dict(), sort_keys=True, default_flow_style=False)

    def hash(self):
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()


def _drop_none(d):
    return {k: v for k, v in d.items() if v is not None}


# ------------------------------------------------------------------ parsing
class _Lines:
    """Map key paths to line numbers using the composed YAML node tree."""

    def __init__(self, node):
        self.node = node

    def line(self, *path):
        node = self.node
        best = node.start_mark.line + 1 if node is not None else None
        for key in path:
            nxt = None
            if isinstance(node, yaml.MappingNode):
                for k, v in node.value:
                    if k.value == key:
                        best = k.start_mark.line + 1
                        nxt = v
                        break
            elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) \
                    and key < len(node.value):
                nxt = node.value[key]
                best = nxt.start_mark.line + 1
            if nxt is None:
                break
            node = nxt
        return best


def loads(text, path=None):
    """Parse configuration text into a validated :class:`RunConfig`."""
    try:
        raw = yaml.safe_load(text)
        node = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"YAML syntax error: {getattr(exc, 'problem', exc)}",
                          None if mark is None else mark.line + 1, path) from None
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a mapping", 1, path)
    lines = _Lines(node)

    def fail(msg, *keypath):
        raise ConfigError(msg, lines.line(*keypath), path)

    for key in raw:
        if key not in _TOP:
            fail(f"unknown section {key!r}", key)

    margins = raw.get("margins")
    if not isinstance(margins, list) or not margins:
        fail("'margins' must be a non-empty list", "margins")
    mconf = []
    for j, mg in enumerate(margins):
        if isinstance(mg, str):
            mg = {"family": mg}
        if not isinstance(mg, dict) or "family" not in mg:
            fail(f"margin {j} needs a 'family'", "margins", j)
        extra = set(mg) - {"family", "params"}
        if extra:
            fail(f"margin {j}: unknown key(s) {sorted(extra)}", "margins", j)
        fam = mg["family"]
        if fam not in MARGIN_FAMILIES:
            fail(f"margin {j}: unknown family {fam!r}; choose from "
                 f"{sorted(MARGIN_FAMILIES)}", "margins", j, "family")
        params = mg.get("params")
        if params is not None:
            if not isinstance(params, list) or len(params) != len(MARGIN_FAMILIES[fam]):
                fail(f"margin {j}: {fam} takes {len(MARGIN_FAMILIES[fam])} params",
                     "margins", j, "params")
            params = [_num(p, fail, "margins", j, "params") for p in params]
        mconf.append(MarginConfig(fam, params))

    copula = _section(raw, "copula", CopulaConfig, fail)
    if copula.type not in COPULA_TYPES:
        fail(f"copula type must be one of {list(COPULA_TYPES)}", "copula", "type")
    if copula.family not in PAIR_FAMILIES or copula.family == "independence":
        fail(f"pair family must be one of {list(PAIR_FAMILIES[1:])}", "copula", "family")
    if copula.parameterisation not in PARAMETERISATIONS:
        fail(f"parameterisation must be one of {list(PARAMETERISATIONS)}",
             "copula", "parameterisation")
    if copula.lambda_prior not in LAMBDA_PRIORS:
        fail(f"lambda_prior must be one of {list(LAMBDA_PRIORS)}", "copula", "lambda_prior")
    if copula.selection and copula.type == "gaussian" and copula.parameterisation != "partial":
        fail("selection needs parameterisation 'partial'", "copula", "selection")

    mcmc = _section(raw, "mcmc", McmcConfig, fail)
    if mcmc.sweeps < 0 or mcmc.thin < 1 or mcmc.chains < 1:
        fail("sweeps must be >= 0, thin and chains >= 1", "mcmc")
    if mcmc.burn_in is not None and not (0 <= mcmc.burn_in <= mcmc.sweeps):
        fail("burn_in must lie in [0, sweeps]", "mcmc", "burn_in")
    if mcmc.step <= 0:
        fail("step must be positive", "mcmc", "step")
    summary = _section(raw, "summary", SummaryConfig, fail)
    if not 0 < summary.level < 1:
        fail("summary level must lie in (0, 1)", "summary", "level")
    simulate = _section(raw, "simulate", SimulateConfig, fail) if "simulate" in raw else None

    model = raw.get("model") or {}
    if not isinstance(model, dict) or set(model) - {"scheme"}:
        fail("'model' accepts only 'scheme'", "model")
    scheme = model.get("scheme", "auto")
    if scheme not in SCHEMES:
        fail(f"scheme must be one of {list(SCHEMES)}", "model", "scheme")
    discrete = [m.family in DISCRETE for m in mconf]
    if scheme == "continuous" and any(discrete):
        fail("discrete margins cannot be fitted with the continuous scheme", "model", "scheme")
    if scheme == "discrete" and not all(discrete):
        fail("the discrete scheme needs every margin to be discrete", "model", "scheme")
    if any(discrete) and not all(discrete):
        fail("mixed discrete and continuous margins are not supported", "margins")
    if any(discrete) and copula.type == "dvine":
        fail("discrete margins support the Gaussian copula only", "copula", "type")

    data = raw.get("data")
    if data is not None and not isinstance(data, str):
        fail("'data' must be a path", "data")
    output = raw.get("output", "out")
    if not isinstance(output, str):
        fail("'output' must be a path", "output")
    return RunConfig(margins=mconf, copula=copula, mcmc=mcmc, summary=summary,
                     simulate=simulate, data=data, output=output, scheme=scheme)


def _num(v, fail, *keypath):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        fail(f"expected a number, got {v!r}", *keypath)
    return float(v)


def _section(raw, name, cls, fail):
    sec = raw.get(name) or {}
    if not isinstance(sec, dict):
        fail(f"'{name}' must be a mapping", name)
    fields = cls.__dataclass_fields__
    kwargs = {}
    for key, val in sec.items():
        if key not in fields:
            fail(f"{name}: unknown key {key!r}", name, key)
        default = fields[key].default
        kind = type(default) if default is not None and not callable(default) else None
        if kind is bool and not isinstance(val, bool):
            fail(f"{name}.{key} must be true or false", name, key)
        if kind is int and (isinstance(val, bool) or not isinstance(val, int)):
            fail(f"{name}.{key} must be an integer", name, key)
        if kind is float:
            val = _num(val, fail, name, key)
        if kind is str and not isinstance(val, str):
            fail(f"{name}.{key} must be a string", name, key)
        if key in ("seed", "burn_in") and val is not None and (
                isinstance(val, bool) or not isinstance(val, int)):
            fail(f"{name}.{key} must be an integer", name, key)
        kwargs[key] = val
    return cls(**kwargs)


def load(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", path=path) from None
    return loads(text, path)


def from_dict(d):
    return loads(yaml.safe_dump(d, sort_keys=True))


# --------------------------------------------------------------------- CSV
def read_csv(path):
    """Numeric CSV with a header row.  Returns (column names, n x m array)."""
    path = Path(path)
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read data: {exc.strerror}", path=path) from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ConfigError("empty data file (header row required)", 1, path) from None
        header = [h.strip() for h in header]
        rows = []
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != len(header):
                raise ConfigError(f"expected {len(header)} fields, got {len(row)}", line, path)
            vals = []
            for k, cell in enumerate(row):
                cell = cell.strip()
                if cell == "" or cell.lower() in ("na", "nan"):
                    raise ConfigError(f"missing value in column {header[k]!r}", line, path)
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise ConfigError(f"non-numeric value {cell!r} in column {header[k]!r}",
                                      line, path) from None
            rows.append(vals)
    if not rows:
        raise ConfigError("data file has no rows", path=path)
    return header, np.array(rows, dtype=float)


def write_csv(path, header, data, integer_cols=()):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in data:
            w.writerow([str(int(v)) if j in integer_cols else format(float(v), ".17g")
                        for j, v in enumerate(row)])
