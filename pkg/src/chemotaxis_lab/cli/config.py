"""YAML configuration: schema, defaults, line-precise validation."""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from chemotaxis_lab.construction.atoms import AtomSpec
from chemotaxis_lab.construction.family import ConstructionParams, constraint_problems
from chemotaxis_lab.errors import IoError, ParseError, ValidationError
from chemotaxis_lab.evolution.solver import INTEGRATORS
from chemotaxis_lab.verification import CHECKS

FORMATS = ("csv", "json")

DEFAULTS = {
    "grid": {"d": 2, "points_per_axis": 1024, "box_length": "auto"},
    "construction": {
        "r": 1.0, "m": 7, "m_sweep": None, "K": [4, 5], "count_sweep": None,
        "beta": 0.2, "offsets": "auto", "count_factor": "auto",
    },
    "solver": {
        "integrator": "ifrk4", "steps": 8, "dealias_fraction": 2.0 / 3.0,
        "epsilon": [0.0625],
    },
    "checks": {"enabled": list(CHECKS), "corpus_sizes": {}, "seed": 0},
    "analysis": {
        "besov": [[-1.5, 4.0, 1.0], [-0.5, 4.0, 1.0]],
        "lebesgue": [2.0, 4.0, "inf"],
        "shells": None,
    },
    "experiment": {
        "counts": [1, 2, 3, 4], "m": 10, "points_per_axis": 4096, "r": 1.0,
        "epsilon": 0.0625, "epsilon_sweep": [0.125, 0.0625, 0.03125],
        "epsilon_member": {"m": 7, "K": [4, 5], "points_per_axis": 1024},
        "gate": 0.05,
    },
    "output": {"directory": "chemotaxis-out", "formats": ["csv", "json"]},
}


@dataclass
class ExperimentConfig:
    """Validated configuration with every default filled in.

    Attributes
    ----------
    data : dict
        Nested blocks ``grid``, ``construction``, ``solver``, ``checks``,
        ``analysis``, ``experiment`` and ``output``.
    source : str
        Path of the file it came from, or ``"<defaults>"``.
    """

    data: dict
    source: str = "<defaults>"
    lines: dict = field(default_factory=dict, repr=False)

    def __getitem__(self, block: str) -> dict:
        return self.data[block]

    def canonical(self) -> str:
        return json.dumps(self.data, sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()

    def construction_params(self, K=None, m=None) -> ConstructionParams:
        c = self["construction"]
        K = tuple(c["K"] if K is None else K)
        # explicit offsets belong to the configured K; sweeps place atoms automatically
        explicit = c["offsets"] != "auto" and list(K) == list(c["K"])
        offsets = tuple(c["offsets"]) if explicit else None
        r = float(c["r"])
        amplitude = 1.0
        if c["count_factor"] != "auto":
            amplitude = float(c["count_factor"]) / len(K) ** (-1.0 / (2.0 * r))
        return ConstructionParams(self["grid"]["d"], r, c["m"] if m is None else m, K,
                                  offsets=offsets, offset_axis=1 if self["grid"]["d"] > 1 else 0,
                                  amplitude=amplitude)

    def atom_spec(self) -> AtomSpec:
        return AtomSpec(float(self["construction"]["beta"]))


def dump_defaults() -> str:
    """YAML text of the default configuration."""
    return yaml.safe_dump(DEFAULTS, sort_keys=False)


# ------------------------------------------------------------------ loading

def _line_map(node, path=(), out=None) -> dict:
    """Map key paths to 1-based source lines using the composed node tree."""
    out = {} if out is None else out
    if isinstance(node, yaml.MappingNode):
        for key_node, value_node in node.value:
            p = path + (str(key_node.value),)
            out[p] = key_node.start_mark.line + 1
            _line_map(value_node, p, out)
    elif isinstance(node, yaml.SequenceNode):
        for i, item in enumerate(node.value):
            out[path + (i,)] = item.start_mark.line + 1
            _line_map(item, path + (i,), out)
    return out


def _merge(base: dict, override: dict, path, problems, lines) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        p = path + (str(key),)
        if key not in base:
            problems.append(_msg(lines, p, f"unknown key (allowed: {', '.join(base)})"))
            continue
        if isinstance(base[key], dict) and key not in ("corpus_sizes",):
            if not isinstance(value, dict):
                problems.append(_msg(lines, p, "must be a mapping"))
                continue
            out[key] = _merge(base[key], value, p, problems, lines)
        else:
            out[key] = value
    return out


def _msg(lines: dict, path, text: str) -> str:
    name = ".".join(str(p) for p in path)
    line = None
    for cut in range(len(path), 0, -1):
        if tuple(path[:cut]) in lines:
            line = lines[tuple(path[:cut])]
            break
    return f"line {line}: {name}: {text}" if line else f"{name}: {text}"


def load_config(path: str | Path | None) -> ExperimentConfig:
    """Load, merge with defaults and validate a YAML configuration.

    Raises
    ------
    ParseError
        The file is not valid YAML or is not a mapping.
    ValidationError
        With every violation found, each prefixed by its line.
    IoError
        The file cannot be read.
    """
    if path is None:
        cfg = ExperimentConfig(copy.deepcopy(DEFAULTS))
        problems = validate(cfg)
        if problems:
            raise ValidationError(problems)
        return cfg
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise IoError(f"cannot read config {path}: {exc}") from exc
    return loads_config(text, str(path))


def loads_config(text: str, source: str = "<string>") -> ExperimentConfig:
    try:
        node = yaml.compose(text)
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ParseError(f"{source}: {exc}") from exc
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ParseError(f"{source}: top level must be a mapping")
    lines = _line_map(node) if node is not None else {}
    problems: list[str] = []
    data = _merge(DEFAULTS, raw, (), problems, lines)
    cfg = ExperimentConfig(data, source, lines)
    problems += validate(cfg)
    if problems:
        raise ValidationError(problems)
    return cfg


# --------------------------------------------------------------- validation

def _is_int(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def _is_num(x) -> bool:
    return (isinstance(x, (int, float)) and not isinstance(x, bool)) or x in ("inf", ".inf")


def _num(x) -> float:
    return math.inf if x in ("inf", ".inf") else float(x)


def _power_of_two(n) -> bool:
    return _is_int(n) and n >= 4 and (n & (n - 1)) == 0


def validate(cfg: ExperimentConfig) -> list[str]:
    """Every violation of the module preconditions, with source lines."""
    L = cfg.lines
    out: list[str] = []

    def bad(path, text):
        out.append(_msg(L, path, text))

    g = cfg["grid"]
    if not _is_int(g["d"]) or g["d"] < 1:
        bad(("grid", "d"), f"must be a positive integer, got {g['d']!r}")
    if not _power_of_two(g["points_per_axis"]):
        bad(("grid", "points_per_axis"), f"must be a power of two >= 4, got {g['points_per_axis']!r}")
    box = g["box_length"]
    if box != "auto":
        vals = box if isinstance(box, list) else [box]
        if not all(_is_num(v) and _num(v) > 0 and math.isfinite(_num(v)) for v in vals):
            bad(("grid", "box_length"), f"must be 'auto', a positive number or a list, got {box!r}")
        elif isinstance(box, list) and _is_int(g["d"]) and len(box) != g["d"]:
            bad(("grid", "box_length"), f"needs {g['d']} entries, got {len(box)}")

    c = cfg["construction"]
    d = g["d"] if _is_int(g["d"]) else 2
    r_ok = _is_num(c["r"])
    if not r_ok:
        bad(("construction", "r"), f"must be a number, got {c['r']!r}")
    elif not (1.0 <= _num(c["r"]) < d):
        bad(("construction", "r"), f"requires 1 ≤ r < d, got r = {c['r']}, d = {d}")
    if d < 2:
        bad(("grid", "d"), "the atom construction requires d >= 2")
    if not _is_int(c["m"]):
        bad(("construction", "m"), f"must be an integer, got {c['m']!r}")
    for key in ("m_sweep", "count_sweep"):
        v = c[key]
        if v is not None and not (isinstance(v, list) and v and all(_is_int(x) for x in v)):
            bad(("construction", key), f"must be null or a non-empty list of integers, got {v!r}")
    if c["count_sweep"] is not None and isinstance(c["count_sweep"], list) \
            and any(_is_int(x) and x < 1 for x in c["count_sweep"]):
        bad(("construction", "count_sweep"), "counts must be >= 1")
    if not (isinstance(c["K"], list) and c["K"] and all(_is_int(k) for k in c["K"])):
        bad(("construction", "K"), f"must be a non-empty list of integers, got {c['K']!r}")
    if not (_is_num(c["beta"]) and _num(c["beta"]) > 0):
        bad(("construction", "beta"), f"must be positive, got {c['beta']!r}")
    if c["offsets"] != "auto" and not (isinstance(c["offsets"], list)
                                       and all(_is_num(o) for o in c["offsets"])):
        bad(("construction", "offsets"), f"must be 'auto' or a list of numbers, got {c['offsets']!r}")
    if c["count_factor"] != "auto" and not (_is_num(c["count_factor"])
                                            and _num(c["count_factor"]) > 0):
        bad(("construction", "count_factor"), f"must be 'auto' or positive, got {c['count_factor']!r}")
    if not out:
        out += _construction_problems(cfg)

    s = cfg["solver"]
    if s["integrator"] not in INTEGRATORS:
        bad(("solver", "integrator"), f"must be one of {', '.join(INTEGRATORS)}, got {s['integrator']!r}")
    if not _is_int(s["steps"]) or s["steps"] < 8:
        bad(("solver", "steps"), f"must be an integer >= 8, got {s['steps']!r}")
    if not (_is_num(s["dealias_fraction"]) and 0 < _num(s["dealias_fraction"]) <= 1):
        bad(("solver", "dealias_fraction"), f"must lie in (0, 1], got {s['dealias_fraction']!r}")
    eps = s["epsilon"]
    if not (isinstance(eps, list) and eps and all(_is_num(e) and 0 < _num(e) < math.inf
                                                  for e in eps)):
        bad(("solver", "epsilon"), f"must be a non-empty list of positive numbers, got {eps!r}")

    ch = cfg["checks"]
    if not isinstance(ch["enabled"], list):
        bad(("checks", "enabled"), "must be a list of check ids")
    else:
        for i, cid in enumerate(ch["enabled"]):
            if cid not in CHECKS:
                bad(("checks", "enabled", i), f"unknown check id {cid!r}")
    if not isinstance(ch["corpus_sizes"], dict):
        bad(("checks", "corpus_sizes"), "must be a mapping of check id to size")
    else:
        for cid, n in ch["corpus_sizes"].items():
            if cid not in CHECKS:
                bad(("checks", "corpus_sizes", str(cid)), f"unknown check id {cid!r}")
            elif not _is_int(n) or n < 1:
                bad(("checks", "corpus_sizes", str(cid)), f"must be a positive integer, got {n!r}")
    if not _is_int(ch["seed"]) or ch["seed"] < 0:
        bad(("checks", "seed"), f"must be a non-negative integer, got {ch['seed']!r}")

    a = cfg["analysis"]
    if not (isinstance(a["besov"], list) and all(
            isinstance(t, list) and len(t) == 3 and all(_is_num(x) for x in t)
            and _num(t[1]) >= 1 and _num(t[2]) >= 1 for t in a["besov"])):
        bad(("analysis", "besov"), "must be a list of [s, p, r] with p, r >= 1")
    if not (isinstance(a["lebesgue"], list) and all(_is_num(p) and _num(p) >= 1
                                                     for p in a["lebesgue"])):
        bad(("analysis", "lebesgue"), "must be a list of exponents >= 1")
    if a["shells"] is not None and not (isinstance(a["shells"], list)
                                        and all(_is_int(j) for j in a["shells"])):
        bad(("analysis", "shells"), "must be null or a list of integers")

    e = cfg["experiment"]
    if not (isinstance(e["counts"], list) and len(e["counts"]) >= 3
            and all(_is_int(x) and x >= 1 for x in e["counts"])):
        bad(("experiment", "counts"), "must list at least three counts >= 1")
    if not _is_int(e["m"]):
        bad(("experiment", "m"), f"must be an integer, got {e['m']!r}")
    if not _power_of_two(e["points_per_axis"]):
        bad(("experiment", "points_per_axis"), "must be a power of two >= 4")
    if not (_is_num(e["r"]) and 1.0 <= _num(e["r"]) < 2):
        bad(("experiment", "r"), f"requires 1 ≤ r < d = 2, got {e['r']!r}")
    if not (_is_num(e["epsilon"]) and 0 < _num(e["epsilon"]) < math.inf):
        bad(("experiment", "epsilon"), "must be positive")
    if not (isinstance(e["epsilon_sweep"], list) and all(
            _is_num(x) and 0 < _num(x) < math.inf for x in e["epsilon_sweep"])):
        bad(("experiment", "epsilon_sweep"), "must be a list of positive numbers")
    em = e["epsilon_member"]
    if not (isinstance(em, dict) and set(em) == {"m", "K", "points_per_axis"}
            and _is_int(em.get("m")) and isinstance(em.get("K"), list)
            and _power_of_two(em.get("points_per_axis"))):
        bad(("experiment", "epsilon_member"), "needs integer m, list K and power-of-two points_per_axis")
    if not (_is_num(e["gate"]) and _num(e["gate"]) > 0):
        bad(("experiment", "gate"), "must be positive")

    o = cfg["output"]
    if not isinstance(o["directory"], str) or not o["directory"]:
        bad(("output", "directory"), "must be a non-empty path")
    if not (isinstance(o["formats"], list) and o["formats"]
            and all(f in FORMATS for f in o["formats"])):
        bad(("output", "formats"), f"must be a non-empty subset of {list(FORMATS)}")
    return out


def _construction_problems(cfg: ExperimentConfig) -> list[str]:
    """Support inequalities for every member the construction block describes."""
    c = cfg["construction"]
    out = []
    spec = AtomSpec(float(c["beta"]))
    members = []
    ms = c["m_sweep"] or [c["m"]]
    if c["count_sweep"]:
        for m in ms:
            for n in c["count_sweep"]:
                members.append((m, list(range(m - 2 - n + 1, m - 1))))
    else:
        members = [(m, c["K"]) for m in ms]
    if c["offsets"] != "auto" and len(c["offsets"]) != len(c["K"]):
        out.append(_msg(cfg.lines, ("construction", "offsets"), "needs one entry per scale in K"))
        return out
    for m, K in members:
        try:
            params = cfg.construction_params(K=K, m=m)
        except ValueError as exc:
            out.append(_msg(cfg.lines, ("construction", "K"), str(exc)))
            continue
        for p in constraint_problems(params, spec):
            out.append(_msg(cfg.lines, ("construction", "beta"),
                            f"support constraint fails (m = {m}, K = {K}): {p}"))
    return out
