"""Command-line front door: configs, campaign dispatch and report files.

    nllab <command> [--config FILE] [--d N --s X --p Q --gamma0 G0 --gamma G]
                    [--out PATH --format csv|json] [--tol X --budget N] ...

Exit codes: 0 when nothing contradicts the theory (UNRESOLVED rows are
warnings), 1 when a row does or a report cannot be written, 2 for
configuration errors.
"""

import argparse
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import io
import json
import math
import os
import re
import sys

import numpy as np

from .errors import ConfigError, DomainError, IoError, NllabError, NonIntegrableTail, QuadratureFailure
from .experiments import (
    ALPHA_RULES,
    DECAY_OPERATORS,
    PASS,
    FAIL,
    UNRESOLVED,
    ExperimentReport,
    Record,
    _membership_records,
    decay_report,
    mollification_convergence,
    remainder_report,
    scan_gamma,
    spec_digest,
    symmetry_check,
    verify_ibp,
)
from .fields import (
    PowerWeight,
    make_bump,
    make_constant,
    make_cutoff,
    make_gaussian,
    make_power_tail,
    make_singular_power,
    mollify,
    shift,
    standard_mollifier,
)
from .nonlocal_ops import frac_laplacian, l_ps, riesz_potential, riesz_potential_field
from .params import ProblemParams
from .quadrature import QuadratureSpec

__all__ = ["RunConfig", "parse_config", "config_to_dict", "build_field", "run", "emit_report",
           "emit_plot_data", "main", "COLUMNS", "COMMANDS"]

COMMANDS = ("eval", "ibp", "scan-gamma", "remainder", "mollify", "decay", "membership", "symmetry",
            "oracle-check")
# campaigns whose theory is stated for p >= 2
P2_COMMANDS = ("ibp", "scan-gamma", "remainder", "membership", "symmetry")
FORMATS = ("csv", "json")
COLUMNS = ("experiment", "d", "s", "p", "gamma0", "gamma", "input_id", "measured", "expected",
           "tolerance", "error_estimate", "verdict")

SECTIONS = ("command", "params", "weight", "fields", "quadrature", "campaign", "output")
PARAM_KEYS = ("d", "s", "p")
WEIGHT_KEYS = ("gamma0", "gamma")
QUAD_KEYS = ("inner_split", "outer_split", "rel_tol", "abs_tol", "max_subdivisions",
             "sphere_rule_order", "core_order")
CAMPAIGN_KEYS = ("gammas", "R", "eps", "lambda", "radii", "operator", "points", "tol",
                 "waive_membership", "n", "L", "alpha")
OUTPUT_KEYS = ("path", "format", "plot_data")

# recipe kind -> (required keys, optional keys)
RECIPES = {
    "bump": (("radius",), ("center",)),
    "gaussian": (("width",), ("center",)),
    "constant": ((), ("value",)),
    "cutoff": ((), ("R",)),
    "power_tail": (("a",), ("scale",)),
    "singular_power": (("lam",), ("p",)),
    "riesz_potential": (("of",), ()),
    "mollified": (("of", "eps"), ()),
    "shifted": (("of", "by"), ()),
}

ORACLE_GRIDS = {1: (8192, 32.0), 2: (2048, 16.0), 3: (128, 16.0)}


@dataclass
class RunConfig:
    command: str
    params: ProblemParams
    gamma0: float = 0.0
    gamma: float = 0.0
    fields: list = field(default_factory=list)
    quadrature: dict = field(default_factory=dict)
    campaign: dict = field(default_factory=dict)
    output_path: str = None
    output_format: str = "csv"
    plot_data: str = None

    def spec(self):
        return QuadratureSpec(**self.quadrature)

    def weight(self):
        return PowerWeight(self.gamma0, self.gamma, self.params.p)


# ------------------------------------------------------------------ parsing

def _line_of(text, key):
    if text is None:
        return None
    m = re.search(r'"%s"\s*:' % re.escape(str(key)), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _strict(section, allowed, where, text):
    if not isinstance(section, dict):
        raise ConfigError(f"{where} must be an object", key=where, line=_line_of(text, where))
    for k in section:
        if k not in allowed:
            raise ConfigError(f"unknown key {k!r} in {where}", key=f"{where}.{k}", line=_line_of(text, k))


def _number(value, key, text, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key} must be a number", key=key, line=_line_of(text, key.split(".")[-1]))
    if integer and int(value) != value:
        raise ConfigError(f"{key} must be an integer", key=key, line=_line_of(text, key.split(".")[-1]))
    return int(value) if integer else float(value)


def _check_recipe(recipe, d, key, text):
    if not isinstance(recipe, dict) or "kind" not in recipe:
        raise ConfigError("a field recipe needs a 'kind'", key=key, line=_line_of(text, "kind"))
    kind = recipe["kind"]
    if kind not in RECIPES:
        raise ConfigError(f"unknown field kind {kind!r}", key=f"{key}.kind", line=_line_of(text, "kind"))
    required, optional = RECIPES[kind]
    for k in recipe:
        if k != "kind" and k not in required + optional:
            raise ConfigError(f"unknown key {k!r} for a {kind} field", key=f"{key}.{k}",
                              line=_line_of(text, k))
    for k in required:
        if k not in recipe:
            raise ConfigError(f"a {kind} field needs {k!r}", key=f"{key}.{k}")
    for k in ("center", "by"):
        if k in recipe:
            c = recipe[k]
            c = [c] if isinstance(c, (int, float)) and not isinstance(c, bool) else c
            if not isinstance(c, list) or len(c) != d:
                raise ConfigError(f"{k} must have {d} coordinates", key=f"{key}.{k}", line=_line_of(text, k))
            for v in c:
                _number(v, f"{key}.{k}", text)
    for k in ("radius", "width", "eps", "a", "scale"):
        if k in recipe and not _number(recipe[k], f"{key}.{k}", text) > 0:
            raise ConfigError(f"{k} must be positive", key=f"{key}.{k}", line=_line_of(text, k))
    for k in ("value", "lam", "p"):
        if k in recipe:
            _number(recipe[k], f"{key}.{k}", text)
    if "R" in recipe and not _number(recipe["R"], f"{key}.R", text) >= 1:
        raise ConfigError("cut-off scale R must be >= 1", key=f"{key}.R", line=_line_of(text, "R"))
    if "of" in recipe:
        _check_recipe(recipe["of"], d, f"{key}.of", text)


def _from_dict(raw, text=None):
    _strict(raw, SECTIONS, "config", text)
    if "command" not in raw:
        raise ConfigError("missing command", key="command")
    command = raw["command"]
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}", key="command", line=_line_of(text, "command"))

    praw = raw.get("params", {})
    _strict(praw, PARAM_KEYS, "params", text)
    for k in ("d", "s"):
        if k not in praw:
            raise ConfigError(f"missing params.{k}", key=f"params.{k}")
    d = _number(praw["d"], "params.d", text, integer=True)
    s = _number(praw["s"], "params.s", text)
    p = _number(praw.get("p", 2.0), "params.p", text)
    if d < 1:
        raise ConfigError("d must be >= 1", key="params.d", line=_line_of(text, "d"))
    if not 0.0 < s < 1.0:
        raise ConfigError(f"s must lie in (0, 1), got {s}", key="params.s", line=_line_of(text, "s"))
    if not p > 1.0:
        raise ConfigError(f"p must exceed 1, got {p}", key="params.p", line=_line_of(text, "p"))
    if command in P2_COMMANDS and p < 2.0:
        raise ConfigError(f"{command} needs p >= 2, got {p}", key="params.p", line=_line_of(text, "p"))

    wraw = raw.get("weight", {})
    _strict(wraw, WEIGHT_KEYS, "weight", text)
    gamma0 = _number(wraw.get("gamma0", 0.0), "weight.gamma0", text)
    gamma = _number(wraw.get("gamma", 0.0), "weight.gamma", text)
    if not 0.0 <= gamma0 < d:
        raise ConfigError(f"gamma0 must lie in [0, d) = [0, {d}), got {gamma0}", key="weight.gamma0",
                          line=_line_of(text, "gamma0"))

    fields_raw = raw.get("fields", [])
    if not isinstance(fields_raw, list):
        raise ConfigError("fields must be a list", key="fields", line=_line_of(text, "fields"))
    for i, rec in enumerate(fields_raw):
        _check_recipe(rec, d, f"fields[{i}]", text)

    qraw = raw.get("quadrature", {})
    _strict(qraw, QUAD_KEYS, "quadrature", text)
    quad = {}
    for k, v in qraw.items():
        integer = k in ("max_subdivisions", "sphere_rule_order", "core_order")
        quad[k] = _number(v, f"quadrature.{k}", text, integer=integer)
    try:
        QuadratureSpec(**quad)
    except DomainError as exc:
        raise ConfigError(str(exc), key="quadrature") from None

    craw = raw.get("campaign", {})
    _strict(craw, CAMPAIGN_KEYS, "campaign", text)
    camp = _check_campaign(dict(craw), command, d, text)

    oraw = raw.get("output", {})
    _strict(oraw, OUTPUT_KEYS, "output", text)
    fmt = oraw.get("format", "csv")
    if fmt not in FORMATS:
        raise ConfigError(f"format must be one of {FORMATS}", key="output.format", line=_line_of(text, "format"))
    for k in ("path", "plot_data"):
        if k in oraw and oraw[k] is not None and not isinstance(oraw[k], str):
            raise ConfigError(f"output.{k} must be a string", key=f"output.{k}", line=_line_of(text, k))

    return RunConfig(command, ProblemParams(d, s, p), gamma0, gamma, list(fields_raw), quad, camp,
                     oraw.get("path"), fmt, oraw.get("plot_data"))


def _number_list(v, key, text, positive=False):
    if not isinstance(v, list) or not v:
        raise ConfigError(f"{key} must be a nonempty list", key=key, line=_line_of(text, key.split(".")[-1]))
    out = [_number(x, key, text) for x in v]
    if positive and any(x <= 0 for x in out):
        raise ConfigError(f"{key} must be positive", key=key, line=_line_of(text, key.split(".")[-1]))
    return out


def _check_campaign(c, command, d, text):
    for k in ("gammas", "R", "eps", "radii"):
        if k in c:
            c[k] = _number_list(c[k], f"campaign.{k}", text, positive=k != "gammas")
    if "R" in c:
        R = c["R"]
        if R[0] < 1 or any(b <= a for a, b in zip(R, R[1:])):
            raise ConfigError("campaign.R must increase strictly from >= 1", key="campaign.R",
                              line=_line_of(text, "R"))
    if "eps" in c and any(b >= a for a, b in zip(c["eps"], c["eps"][1:])):
        raise ConfigError("campaign.eps must decrease strictly", key="campaign.eps", line=_line_of(text, "eps"))
    for k in ("lambda", "tol", "L"):
        if k in c:
            c[k] = _number(c[k], f"campaign.{k}", text)
    if "tol" in c and not c["tol"] > 0:
        raise ConfigError("campaign.tol must be positive", key="campaign.tol", line=_line_of(text, "tol"))
    if "n" in c:
        c["n"] = _number(c["n"], "campaign.n", text, integer=True)
    if "operator" in c and c["operator"] not in DECAY_OPERATORS:
        raise ConfigError(f"operator must be one of {DECAY_OPERATORS}", key="campaign.operator",
                          line=_line_of(text, "operator"))
    if "alpha" in c:
        a = c["alpha"]
        ok = a in ALPHA_RULES or (isinstance(a, (int, float)) and not isinstance(a, bool) and 0 < a < 1)
        if not ok:
            raise ConfigError("alpha must be 'sqrt', 'log' or an exponent in (0, 1)", key="campaign.alpha",
                              line=_line_of(text, "alpha"))
    if "waive_membership" in c and not isinstance(c["waive_membership"], bool):
        raise ConfigError("waive_membership must be true or false", key="campaign.waive_membership",
                          line=_line_of(text, "waive_membership"))
    if "points" in c:
        pts = c["points"]
        if not isinstance(pts, list) or not pts:
            raise ConfigError("campaign.points must be a nonempty list", key="campaign.points")
        norm = []
        for pt in pts:
            pt = [pt] if isinstance(pt, (int, float)) and not isinstance(pt, bool) else pt
            if not isinstance(pt, list) or len(pt) != d:
                raise ConfigError(f"each point needs {d} coordinates", key="campaign.points",
                                  line=_line_of(text, "points"))
            norm.append([_number(x, "campaign.points", text) for x in pt])
        c["points"] = norm
    if command == "scan-gamma" and "gammas" not in c:
        raise ConfigError("scan-gamma needs campaign.gammas", key="campaign.gammas")
    if command == "mollify" and "lambda" not in c:
        raise ConfigError("mollify needs campaign.lambda", key="campaign.lambda")
    return c


def config_to_dict(cfg):
    """The JSON form of a RunConfig; parse_config reads it back unchanged."""
    out = {
        "command": cfg.command,
        "params": {"d": cfg.params.d, "s": cfg.params.s, "p": cfg.params.p},
        "weight": {"gamma0": cfg.gamma0, "gamma": cfg.gamma},
        "fields": cfg.fields,
        "quadrature": cfg.quadrature,
        "campaign": cfg.campaign,
        "output": {"format": cfg.output_format},
    }
    if cfg.output_path is not None:
        out["output"]["path"] = cfg.output_path
    if cfg.plot_data is not None:
        out["output"]["plot_data"] = cfg.plot_data
    return out


def _parse_list(text, key):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"--{key} expects comma separated numbers", key=key) from None


def _parse_field_flag(text, key="field"):
    """bump:radius=1,center=0  or  riesz_potential:of=bump;radius=1  or
    mollified:of=bump;radius=1|eps=0.1.  Vector values are space separated."""
    kind, _, rest = text.partition(":")
    recipe = {"kind": kind.strip()}
    if rest.startswith("of="):
        inner, _, rest = rest[3:].partition("|")
        ikind, _, iopts = inner.partition(";")
        recipe["of"] = _parse_field_flag(ikind + (":" + iopts.replace(";", ",") if iopts else ""), key)
    for item in filter(None, rest.split(",")):
        k, eq, v = item.partition("=")
        if not eq:
            raise ConfigError(f"field option {item!r} is not key=value", key=key)
        try:
            nums = [float(x) for x in v.split()]
        except ValueError:
            raise ConfigError(f"field option {item!r} is not numeric", key=key) from None
        if not nums:
            raise ConfigError(f"field option {item!r} has no value", key=key)
        recipe[k.strip()] = nums if len(nums) > 1 else nums[0]
    return recipe


def _build_parser():
    ap = argparse.ArgumentParser(prog="nllab", description=__doc__.split("\n\n")[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="JSON config file; flags override its values")
    for k, t in (("d", int), ("s", float), ("p", float), ("gamma0", float), ("gamma", float)):
        ap.add_argument(f"--{k}", type=t)
    ap.add_argument("--out", help="report path (default: standard output)")
    ap.add_argument("--format", choices=FORMATS)
    ap.add_argument("--plot-data", help="write (group, x, y) rows here")
    ap.add_argument("--tol", type=float, help="relative quadrature tolerance")
    ap.add_argument("--budget", type=int, help="subdivision budget per integral")
    ap.add_argument("--field", action="append", help="field recipe, e.g. bump:radius=1,center=0")
    ap.add_argument("--gammas")
    ap.add_argument("--R")
    ap.add_argument("--eps")
    ap.add_argument("--lambda", dest="lam", type=float)
    ap.add_argument("--radii")
    ap.add_argument("--operator", choices=DECAY_OPERATORS)
    ap.add_argument("--points", help="points separated by ';', coordinates by ','")
    ap.add_argument("--campaign-tol", type=float, help="agreement tolerance of the campaign")
    ap.add_argument("--alpha", help="alpha(R) rule: sqrt, log or an exponent in (0, 1)")
    ap.add_argument("--n", type=int, help="oracle grid points per axis")
    ap.add_argument("--L", type=float, help="oracle box half width")
    ap.add_argument("--waive-membership", action="store_true")
    return ap


def parse_config(argv=None, text=None):
    """Build a validated RunConfig from flags, a JSON file, or JSON text."""
    if text is not None and argv is None:
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON: {exc.msg}", line=exc.lineno) from None
        return _from_dict(raw, text)
    try:
        ns = _build_parser().parse_args(argv)
    except SystemExit as exc:
        if exc.code == 0:  # --help
            raise
        raise ConfigError("invalid command line") from None
    raw, text = {}, None
    if ns.config:
        try:
            with open(ns.config, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}", key="--config") from None
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON: {exc.msg}", line=exc.lineno) from None
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object", line=1)
        if raw.get("command", ns.command) != ns.command:
            raise ConfigError("command on the command line differs from the config", key="command")
    raw["command"] = ns.command

    def sec(name):
        # a malformed section is left in place for _from_dict to reject
        part = raw.setdefault(name, {})
        return part if isinstance(part, dict) else {}

    for k in ("d", "s", "p"):
        if getattr(ns, k) is not None:
            sec("params")[k] = getattr(ns, k)
    for k in ("gamma0", "gamma"):
        if getattr(ns, k) is not None:
            sec("weight")[k] = getattr(ns, k)
    if ns.tol is not None:
        sec("quadrature")["rel_tol"] = ns.tol
    if ns.budget is not None:
        sec("quadrature")["max_subdivisions"] = ns.budget
    if ns.field:
        raw["fields"] = [_parse_field_flag(f) for f in ns.field]
    for k in ("gammas", "R", "eps", "radii"):
        v = getattr(ns, k)
        if v is not None:
            sec("campaign")[k] = _parse_list(v, k)
    if ns.lam is not None:
        sec("campaign")["lambda"] = ns.lam
    if ns.operator is not None:
        sec("campaign")["operator"] = ns.operator
    if ns.points is not None:
        sec("campaign")["points"] = [_parse_list(pt, "points") for pt in ns.points.split(";") if pt.strip()]
    if ns.campaign_tol is not None:
        sec("campaign")["tol"] = ns.campaign_tol
    if ns.alpha is not None:
        sec("campaign")["alpha"] = ns.alpha if ns.alpha in ALPHA_RULES else _parse_list(ns.alpha, "alpha")[0]
    if ns.n is not None:
        sec("campaign")["n"] = ns.n
    if ns.L is not None:
        sec("campaign")["L"] = ns.L
    if ns.waive_membership:
        sec("campaign")["waive_membership"] = True
    if ns.out is not None:
        sec("output")["path"] = ns.out
    if ns.format is not None:
        sec("output")["format"] = ns.format
    if ns.plot_data is not None:
        sec("output")["plot_data"] = ns.plot_data
    return _from_dict(raw, text)


# ------------------------------------------------------------------- fields

def build_field(recipe, params, spec=None):
    d = params.d
    kind = recipe["kind"]

    def point(key, default=0.0):
        v = recipe.get(key, default)
        return np.broadcast_to(np.asarray(v, dtype=float), (d,)).copy()

    if kind == "bump":
        return make_bump(point("center"), float(recipe["radius"]), d=d)
    if kind == "gaussian":
        return make_gaussian(point("center"), float(recipe["width"]), d=d)
    if kind == "constant":
        return make_constant(float(recipe.get("value", 1.0)), d)
    if kind == "cutoff":
        return make_cutoff(d, float(recipe.get("R", 1.0)))
    if kind == "power_tail":
        return make_power_tail(d, float(recipe["a"]), float(recipe.get("scale", 1.0)))
    if kind == "singular_power":
        return make_singular_power(d, float(recipe["lam"]), float(recipe.get("p", params.p)))
    inner = build_field(recipe["of"], params, spec)
    if kind == "riesz_potential":
        return riesz_potential_field(inner, params, spec)
    if kind == "mollified":
        return mollify(inner, standard_mollifier(d, float(recipe["eps"])), spec)
    if kind == "shifted":
        return shift(inner, point("by"))
    raise ConfigError(f"unknown field kind {kind!r}", key="kind")


def _fields(cfg, n, default):
    recipes = list(cfg.fields)
    while len(recipes) < n:
        recipes.append(default(len(recipes)))
    return [build_field(r, cfg.params, cfg.spec()) for r in recipes[:n]]


def _bump_recipe(i):
    return {"kind": "bump", "radius": 1.0 if i == 0 else 0.6}


# -------------------------------------------------------------------- running

def _threads():
    raw = os.environ.get("NLLAB_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"NLLAB_THREADS must be a positive integer, got {raw!r}", key="NLLAB_THREADS") from None
    if n < 1:
        raise ConfigError("NLLAB_THREADS must be a positive integer", key="NLLAB_THREADS")
    return n


def _seed():
    raw = os.environ.get("NLLAB_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"NLLAB_SEED must be an integer, got {raw!r}", key="NLLAB_SEED") from None


def _ordered_map(fn, items, threads):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _new_report(cfg, name, seed):
    return ExperimentReport(name, cfg.params, cfg.gamma0, cfg.gamma,
                            provenance={"spec_hash": spec_digest(cfg.spec()), "seed": seed})


def _run_eval(cfg, seed, threads):
    op = cfg.campaign.get("operator", "laplacian")
    f = _fields(cfg, 1, _bump_recipe)[0]
    pts = cfg.campaign.get("points") or [[0.0] * cfg.params.d]
    spec = cfg.spec()
    fn = {"laplacian": lambda x: frac_laplacian(f, x, cfg.params, spec),
          "lps": lambda x: l_ps(f, x, cfg.params.p, cfg.params, spec),
          "riesz": lambda x: riesz_potential(f, x, cfg.params, spec)}[op]
    rep = _new_report(cfg, "eval", seed)

    def one(x):
        try:
            ev = fn(np.asarray(x, dtype=float))
            return Record(f"{op}({','.join(f'{c:g}' for c in x)})", ev.value, None, None, ev.error_estimate,
                          PASS, group=op, x=float(np.linalg.norm(x)), observation=True)
        except (QuadratureFailure, NonIntegrableTail) as exc:
            return Record(f"{op}({','.join(f'{c:g}' for c in x)})", float("nan"), verdict=UNRESOLVED,
                          note=type(exc).__name__)

    rep.extend(_ordered_map(one, pts, threads))
    return rep


def _run_oracle(cfg, seed, threads):
    from .oracle import PeriodicGrid, compare, oracle_frac_laplacian

    d, s = cfg.params.d, cfg.params.s
    if d not in ORACLE_GRIDS:
        raise ConfigError("oracle grids exist for d = 1, 2, 3 only", key="params.d")
    n0, L0 = ORACLE_GRIDS[d]
    n, L = cfg.campaign.get("n", n0), cfg.campaign.get("L", L0)
    tol = cfg.campaign.get("tol", 1e-2)
    f = _fields(cfg, 1, lambda i: {"kind": "gaussian", "width": 1.0})[0]
    rep = _new_report(cfg, "oracle_check", seed)
    try:
        grid = PeriodicGrid(d, n, L)
        ref = oracle_frac_laplacian(grid.sample(f), s)
    except NllabError as exc:
        rep.add(Record("oracle", float("nan"), None, tol, verdict=UNRESOLVED, note=str(exc)))
        return rep
    pts = cfg.campaign.get("points")
    if pts is None:
        rng = np.random.default_rng(seed)
        r = min(0.45 * L, 3.0 * f.scale)
        pts = rng.uniform(-r, r, size=(20, d)) + np.asarray(f.center)
        # on grid nodes the interpolation is exact, so only the two operators are compared
        pts = np.round((pts + L) / grid.spacing) * grid.spacing - L
    pts = np.asarray(pts, dtype=float).reshape(-1, d)
    spec = cfg.spec()
    evs = _ordered_map(lambda x: frac_laplacian(f, x, cfg.params, spec), list(pts), threads)
    vals = [ev.value for ev in evs]
    stats = compare(pts, vals, ref)
    for x, ev in zip(pts, evs):
        rep.add(Record(f"laplacian({','.join(f'{c:.6g}' for c in x)})", ev.value, None, None,
                       ev.error_estimate, PASS, group="laplacian", x=float(x[0]), observation=True))
    rep.add(Record("oracle:max_rel_error", stats.max_rel_error, 0.0, tol, 0.0,
                   PASS if stats.max_rel_error <= tol else FAIL))
    return rep


def _dispatch(cfg, seed, threads):
    c, params, spec = cfg.campaign, cfg.params, cfg.spec()
    weight = cfg.weight()
    cmd = cfg.command
    if cmd == "eval":
        return _run_eval(cfg, seed, threads)
    if cmd == "oracle-check":
        return _run_oracle(cfg, seed, threads)
    if cmd == "ibp":
        v, w = _fields(cfg, 2, _bump_recipe)
        return verify_ibp(v, w, params, weight, spec, tol=c.get("tol", 5e-3),
                          check_membership=not c.get("waive_membership", False))
    if cmd == "symmetry":
        f, g = _fields(cfg, 2, _bump_recipe)
        return symmetry_check(f, g, params, weight, spec, tol=c.get("tol", 5e-3))
    if cmd == "scan-gamma":
        return scan_gamma(c["gammas"], params, spec, gamma0=cfg.gamma0, tol=c.get("tol", 5e-3),
                          **({"R_values": tuple(c["R"])} if "R" in c else {}))
    if cmd == "remainder":
        v = _fields(cfg, 1, _bump_recipe)[0]
        return remainder_report(v, params, weight, c.get("R", [1.0, 2.0, 4.0, 8.0, 16.0]), spec,
                                alpha_rule=c.get("alpha", "sqrt"))
    if cmd == "mollify":
        f = _fields(cfg, 1, _bump_recipe)[0]
        return mollification_convergence(f, c["lambda"], params.p, c.get("eps", [0.2, 0.1, 0.05]), spec)
    if cmd == "decay":
        f = _fields(cfg, 1, _bump_recipe)[0]
        return decay_report(f, params, c.get("operator", "laplacian"),
                            c.get("radii", [4.0, 8.0, 16.0, 32.0, 64.0]), spec, tol=c.get("tol", 0.15))
    if cmd == "membership":
        f = _fields(cfg, 1, _bump_recipe)[0]
        rep = _new_report(cfg, "membership_check", seed)
        mv, recs = _membership_records("membership", f, params, weight, spec)
        rep.extend(recs)
        if mv is not None:
            rep.add(Record("in_X", float(mv.in_X), None, None, 0.0, PASS if mv.in_X else FAIL,
                           observation=True))
        return rep
    raise ConfigError(f"unknown command {cmd!r}", key="command")


def run(cfg, stdout=None, stderr=None):
    """Run a campaign, write its report and return the exit code."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        seed, threads = _seed(), _threads()
    except ConfigError as exc:
        print(f"nllab: config error: {exc}", file=stderr)
        return 2
    try:
        rep = _dispatch(cfg, seed, threads)
    except ConfigError as exc:
        print(f"nllab: config error: {exc}", file=stderr)
        return 2
    except (QuadratureFailure, NonIntegrableTail) as exc:
        rep = _new_report(cfg, cfg.command, seed)
        rep.add(Record(cfg.command, float("nan"), verdict=UNRESOLVED, note=f"{type(exc).__name__}: {exc}"))
    except DomainError as exc:
        print(f"nllab: config error: {exc}", file=stderr)
        return 2
    rep.provenance["seed"] = seed
    code = 0
    try:
        emit_report(rep, cfg.output_format, cfg.output_path, stdout=stdout)
        if cfg.plot_data:
            emit_plot_data(rep, cfg.plot_data)
    except IoError as exc:
        print(f"nllab: {exc}", file=stderr)
        code = 1
    bad = rep.contradictions()
    warn = rep.warnings()
    if warn:
        print(f"nllab: warning: {len(warn)} UNRESOLVED record(s)", file=stderr)
    if bad:
        for r in bad:
            print(f"nllab: contradiction: {r.input_id} verdict {r.verdict}"
                  + (f" (predicted {r.predicted})" if r.predicted else ""), file=stderr)
        code = 1
    return code


# ------------------------------------------------------------------ reports

def _num(x):
    if x is None:
        return ""
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, int):
        return str(x)
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.17g}"


def _rows(rep):
    for r in rep.records:
        gamma = rep.gamma if r.gamma is None else r.gamma
        yield (rep.name, rep.params.d, rep.params.s, rep.params.p, rep.gamma0, gamma, r.input_id,
               r.measured, r.expected, r.tolerance, r.error_estimate, r.verdict)


def _csv_field(x):
    if isinstance(x, str):
        if any(c in x for c in ',"\n'):
            return '"' + x.replace('"', '""') + '"'
        return x
    return _num(x)


def report_csv(rep):
    lines = [",".join(COLUMNS)]
    for row in _rows(rep):
        lines.append(",".join(_csv_field(x) for x in row))
    return "\n".join(lines) + "\n"


def _json_value(x):
    if isinstance(x, str):
        return json.dumps(x)
    if x is None:
        return "null"
    t = _num(x)
    return json.dumps(t) if t in ("nan", "inf", "-inf") else t


def report_json(rep):
    buf = io.StringIO()
    buf.write("{\n")
    buf.write(f'  "experiment": {json.dumps(rep.name)},\n')
    buf.write('  "params": {' + ", ".join(f'"{k}": {_json_value(v)}' for k, v in (
        ("d", rep.params.d), ("s", rep.params.s), ("p", rep.params.p),
        ("gamma0", rep.gamma0), ("gamma", rep.gamma))) + "},\n")
    buf.write('  "provenance": {' + ", ".join(
        f'"{k}": {_json_value(rep.provenance[k])}' for k in sorted(rep.provenance)) + "},\n")
    buf.write('  "records": [')
    rows = list(_rows(rep))
    for i, row in enumerate(rows):
        body = ", ".join(f'"{k}": {_json_value(v)}' for k, v in zip(COLUMNS, row))
        buf.write(("\n    " if i == 0 else ",\n    ") + "{" + body + "}")
    buf.write("\n  ]\n}\n" if rows else "]\n}\n")
    return buf.getvalue()


def _write(text, path, stdout):
    data = text.encode("utf-8")
    if path is None:
        target = getattr(stdout, "buffer", None)
        if target is not None:
            target.write(data)
            target.flush()
        else:
            stdout.write(text)
        return data
    try:
        with open(path, "wb") as fh:
            fh.write(data)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from None
    return data


def emit_report(rep, fmt="csv", path=None, stdout=None):
    """Serialise a report as CSV or JSON (17 significant digits, LF endings)."""
    if fmt not in FORMATS:
        raise IoError(f"unknown report format {fmt!r}")
    text = report_csv(rep) if fmt == "csv" else report_json(rep)
    return _write(text, path, stdout or sys.stdout)


def emit_plot_data(rep, path=None, stdout=None):
    """(group, x, y) rows for every record that belongs to a plot group."""
    lines = ["group,x,y"]
    for r in rep.records:
        if r.group is not None and r.x is not None:
            lines.append(",".join((_csv_field(r.group), _num(r.x), _num(r.measured))))
    return _write("\n".join(lines) + "\n", path, stdout or sys.stdout)


def main(argv=None):
    try:
        cfg = parse_config(argv if argv is not None else sys.argv[1:])
    except ConfigError as exc:
        print(f"nllab: config error: {exc}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
