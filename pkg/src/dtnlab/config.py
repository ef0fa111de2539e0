"""Experiment configuration files.

A config is a single YAML document. Unknown keys are errors, and every
diagnostic carries the dotted key and the line it was found on. The grammar
is documented in the README.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import yaml

from .conductivity import gamma_from_config, validate_ellipticity
from .errors import ConfigError, DtnError, HypothesisViolation
from .geometry import Annulus, Circle, Sphere, domain_from_config

__all__ = ["EXPERIMENTS", "ExperimentConfig", "load_config", "parse_config"]

EXPERIMENTS = {
    "spectrum": "DtN eigenvalues with multiplicity groups (and optionally the matrix)",
    "weyl": "power-law fit of the eigenvalue growth",
    "localization": "interior decay of lifted eigenfunctions on disks and balls",
    "semigroup": "multipliers exp(-t lambda_k) and trace-norm curve of U(t)",
    "lax": "Lax semigroup against spectral calculus on disks and balls (gamma = I)",
    "chernoff": "operator and trace-norm errors of (V(t/n))^n against U(t)",
    "trace_conjecture": "trace-norm error split, trace-norm ratio of V powers to U and W-factor norms",
    "flux": "membrane concentration and total flux over a sweep of mu = D/W",
}

TOP_KEYS = {
    "experiment", "domain", "gamma", "resolution", "backend", "fd_factor", "richardson", "t_list", "n_list",
    "mu_list", "k_range", "modes", "radii", "n_samples", "approx", "transport", "output_dir", "seed", "plots",
    "matrix_format", "K_list",
}
APPROX_KEYS = {"s", "n_list", "t_list"}
TRANSPORT_KEYS = {"R", "R0", "D", "C0", "W_list", "mu_list", "shell"}


@dataclass
class ExperimentConfig:
    experiment: str
    domain: object
    gamma: object
    resolution: int
    raw: dict
    source: str = "<string>"
    defaulted: list = field(default_factory=list)

    def __getitem__(self, key):
        return self.raw[key]

    def get(self, key, default=None):
        return self.raw.get(key, default)


def _line_map(node, prefix="", out=None):
    out = {} if out is None else out
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            path = f"{prefix}.{k.value}" if prefix else str(k.value)
            out[path] = k.start_mark.line + 1
            _line_map(v, path, out)
    return out


def _locate(lines, key):
    while key:
        if key in lines:
            return lines[key]
        key = key.rpartition(".")[0]
    return None


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    return parse_config(text, str(path))


def parse_config(text, source="<string>") -> ExperimentConfig:
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"malformed YAML: {getattr(exc, 'problem', exc)}",
                          line=None if mark is None else mark.line + 1) from exc
    lines = _line_map(node) if node is not None else {}
    try:
        return _build(data, source)
    except ConfigError as exc:
        if exc.line is None:
            raise ConfigError(exc.message, exc.key, _locate(lines, exc.key or "")) from exc
        raise


def _number_list(raw, key, *, positive=False, nonneg=False, integer=False, required=True):
    val = raw.get(key)
    if val is None:
        if required:
            raise ConfigError(f"{key} is required", key=key)
        return None
    if not isinstance(val, list) or not val:
        raise ConfigError(f"{key} must be a non-empty list", key=key)
    out = []
    for v in val:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or (integer and not isinstance(v, int)):
            raise ConfigError(f"{key} entries must be {'integers' if integer else 'numbers'}, got {v!r}", key=key)
        if positive and not v > 0:
            raise ConfigError(f"{key} entries must be positive, got {v!r}", key=key)
        if nonneg and not v >= 0:
            raise ConfigError(f"{key} entries must be non-negative, got {v!r}", key=key)
        out.append(v)
    return out


def _check_keys(block, allowed, prefix):
    if not isinstance(block, dict):
        raise ConfigError(f"{prefix} must be a mapping", key=prefix)
    for k in block:
        if k not in allowed:
            raise ConfigError(f"unknown key {k!r} (allowed: {sorted(allowed)})", key=f"{prefix}.{k}" if prefix else k)


def _build(data, source):
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping at top level")
    raw = copy.deepcopy(data)
    _check_keys(raw, TOP_KEYS, "")
    defaulted = []

    def default(key, value):
        if key not in raw:
            raw[key] = value
            defaulted.append(f"{key} = {value!r}")

    exp = raw.get("experiment")
    if exp is None:
        raise ConfigError("experiment is required", key="experiment")
    if exp not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {exp!r} (expected one of {sorted(EXPERIMENTS)})", key="experiment")

    if exp == "flux":
        return _build_flux(raw, source, defaulted, default)

    if "domain" not in raw:
        raise ConfigError("domain block is required", key="domain")
    domain = domain_from_config(raw["domain"])
    if isinstance(domain, Annulus) and exp != "spectrum":
        raise ConfigError(f"annulus domains are only used by 'flux' and 'spectrum', not {exp!r}", key="domain.kind")
    if "gamma" not in raw:
        defaulted.append("gamma = {kind: identity}")
    gamma = gamma_from_config(raw.get("gamma"), domain.dim)
    try:
        validate_ellipticity(gamma, domain)
    except HypothesisViolation as exc:
        raise ConfigError(str(exc), key="gamma") from exc
    scalar = gamma.constant_scalar is not None

    default("resolution", 16 if isinstance(domain, Sphere) else 32)
    res = raw["resolution"]
    if isinstance(res, bool) or not isinstance(res, int) or res < 4:
        raise ConfigError(f"resolution must be an integer >= 4, got {res!r}", key="resolution")
    default("backend", "auto")
    if raw["backend"] not in ("auto", "spectral", "fd"):
        raise ConfigError(f"backend must be auto, spectral or fd, got {raw['backend']!r}", key="backend")
    default("fd_factor", None)
    if raw["fd_factor"] is not None and (not isinstance(raw["fd_factor"], int) or raw["fd_factor"] < 2):
        raise ConfigError("fd_factor must be an integer >= 2", key="fd_factor")
    default("richardson", False)
    default("output_dir", "dtn_out")
    default("seed", 0)
    if not isinstance(raw["seed"], int) or isinstance(raw["seed"], bool):
        raise ConfigError("seed must be an integer", key="seed")
    default("plots", True)
    if not (isinstance(domain, (Circle, Sphere)) and scalar) and raw["backend"] == "spectral":
        raise ConfigError("the spectral backend needs a disk or ball with gamma = a I", key="backend")
    if isinstance(domain, Sphere) and not scalar:
        raise ConfigError("variable conductivity on the ball is not supported; use gamma = a I", key="gamma")

    if exp == "spectrum":
        default("matrix_format", "none")
        if raw["matrix_format"] not in ("none", "csv", "bin"):
            raise ConfigError("matrix_format must be none, csv or bin", key="matrix_format")
    if exp == "weyl":
        default("k_range", None)
        if raw["k_range"] is not None:
            kr = _number_list(raw, "k_range", positive=True, integer=True)
            if len(kr) != 2 or kr[0] > kr[1]:
                raise ConfigError("k_range must be [k_lo, k_hi] with k_lo <= k_hi", key="k_range")
    if exp == "localization":
        if not isinstance(domain, (Circle, Sphere)) or not scalar:
            raise ConfigError("localization profiles need a disk or ball with gamma = a I", key="domain.kind")
        default("modes", [1, 2, 5, 10])
        _number_list(raw, "modes", positive=True, integer=True)
        default("radii", [0.5, 0.7, 0.9, 0.99])
        radii = _number_list(raw, "radii", positive=True)
        if any(r > 1 for r in radii):
            raise ConfigError("radii are relative and must lie in (0, 1]", key="radii")
    if exp in ("semigroup", "lax"):
        _number_list(raw, "t_list", nonneg=(exp == "lax"), positive=(exp == "semigroup"))
    if exp == "lax":
        if not isinstance(domain, (Circle, Sphere)) or not gamma.is_identity:
            raise ConfigError("the Lax semigroup needs a disk or ball with gamma = I", key="domain.kind")
        default("n_samples", 5)
    if exp in ("chernoff", "trace_conjecture"):
        if "approx" not in raw:
            defaulted.append("approx = {}")
        approx = raw.setdefault("approx", {})
        _check_keys(approx, APPROX_KEYS, "approx")
        if "s" not in approx:
            approx["s"] = 1.0
            defaulted.append("approx.s = 1.0")
        if not isinstance(approx["s"], (int, float)) or not 0 < approx["s"] <= 1:
            raise ConfigError("approx.s must lie in (0, 1]", key="approx.s")
        for key, fallback in (("n_list", [2, 4, 8, 16, 32, 64]), ("t_list", [0.5])):
            if key not in approx:
                approx[key] = raw.get(key, fallback)
                defaulted.append(f"approx.{key} = {approx[key]!r}")
        _number_list(approx, "n_list", positive=True, integer=True)
        if any(n < 2 for n in approx["n_list"]):
            raise ConfigError("approx.n_list entries must be >= 2", key="approx.n_list")
        _number_list(approx, "t_list", positive=True)
    if exp == "trace_conjecture":
        default("K_list", [8, 16, 24])
        _number_list(raw, "K_list", positive=True, integer=True)
    return ExperimentConfig(exp, domain, gamma, res, raw, source, defaulted)


def _build_flux(raw, source, defaulted, default):
    if "transport" not in raw:
        raise ConfigError("flux needs a transport block", key="transport")
    tr = raw["transport"]
    _check_keys(tr, TRANSPORT_KEYS, "transport")
    for key, value in (("R", 1.0), ("R0", 2.0), ("D", 1.0), ("C0", 1.0), ("shell", False)):
        if key not in tr:
            tr[key] = value
            defaulted.append(f"transport.{key} = {value!r}")
    for key in ("R", "R0", "D", "C0"):
        v = tr[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not v > 0:
            raise ConfigError(f"transport.{key} must be positive, got {v!r}", key=f"transport.{key}")
    if not tr["R"] < tr["R0"]:
        raise ConfigError(f"annulus requires R < R0, got R={tr['R']}, R0={tr['R0']}", key="transport.R0")
    if ("W_list" in tr) == ("mu_list" in tr):
        raise ConfigError("give exactly one of transport.W_list or transport.mu_list", key="transport")
    if "W_list" in tr:
        _number_list(tr, "W_list", positive=True)
    else:
        _number_list(tr, "mu_list", nonneg=True)
    try:
        domain = Annulus(float(tr["R"]), float(tr["R0"]), 3 if tr["shell"] else 2)
    except DtnError as exc:
        raise ConfigError(str(exc), key="transport") from exc
    default("resolution", 8 if tr["shell"] else 32)
    res = raw["resolution"]
    if isinstance(res, bool) or not isinstance(res, int) or res < 4:
        raise ConfigError(f"resolution must be an integer >= 4, got {res!r}", key="resolution")
    default("output_dir", "dtn_out")
    default("seed", 0)
    default("plots", True)
    for key in ("domain", "gamma"):
        if key in raw:
            raise ConfigError(f"flux takes its geometry from the transport block; remove {key!r}", key=key)
    return ExperimentConfig("flux", domain, None, res, raw, source, defaulted)
