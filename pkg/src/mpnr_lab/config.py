"""Parsing and validation of experiment configuration files (TOML)."""

from __future__ import annotations

import hashlib
import math
import re
import sys
from dataclasses import dataclass
from typing import Any, Dict, Optional

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .fock import MAX_DIM

EXPERIMENTS = ("moments", "squeezed-calib", "cat-breed", "gps-breed", "correlated", "frontier")
SCHEMES = ("subtraction", "generalized")
STATES = ("coherent", "cat", "squeezed")

_COMMON = {"experiment", "output", "seed", "truncation"}
_BREED = {
    "squeezing_db", "n_detectors", "kappa", "dark_eps", "k_clicks",
    "eta", "eta_grid", "count_rate_hz", "scheme",
}
ALLOWED: Dict[str, set] = {
    "moments": _COMMON | {"state", "alpha", "squeezing_db", "moment_order", "n_detectors", "kappa", "dark_eps"},
    "squeezed-calib": _COMMON | {"squeezing_db", "n_detectors", "kappa", "dark_eps", "corr_p"},
    "cat-breed": _COMMON | _BREED,
    "gps-breed": _COMMON | _BREED,
    "frontier": _COMMON | _BREED | {"fidelity_floor"},
    "correlated": _COMMON | {"squeezing_db", "n_detectors", "corr_p", "moment_order"},
}
REQUIRED: Dict[str, tuple] = {
    "moments": ("state", "n_detectors"),
    "squeezed-calib": ("squeezing_db", "n_detectors"),
    "cat-breed": ("squeezing_db", "k_clicks"),
    "gps-breed": ("squeezing_db",),
    "frontier": ("squeezing_db", "k_clicks"),
    "correlated": ("squeezing_db", "n_detectors", "corr_p"),
}


class ConfigError(ValueError):
    """Invalid configuration; ``line`` is the 1-based line of the offending key if known."""

    def __init__(self, message: str, key: Optional[str] = None, line: Optional[int] = None):
        self.key = key
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key '{key}'")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    params: Dict[str, Any]
    sha256: str
    source: str = "<string>"

    def get(self, key, default=None):
        return self.params.get(key, default)


def _key_line(text: str, key: str) -> Optional[int]:
    pat = re.compile(rf"^\s*[\"']?{re.escape(key)}[\"']?\s*=")
    for i, line in enumerate(text.splitlines(), start=1):
        if pat.match(line):
            return i
    return None


def _real(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _as_list(v):
    return v if isinstance(v, list) else [v]


def _check(params: Dict[str, Any], text: str) -> None:
    def fail(key, msg):
        raise ConfigError(msg, key, _key_line(text, key))

    def real_in(key, lo, hi, lo_open=False, hi_open=False, allow_list=False):
        if key not in params:
            return
        values = _as_list(params[key]) if allow_list else [params[key]]
        if allow_list and not values:
            fail(key, "must not be empty")
        for v in values:
            if not _real(v):
                fail(key, f"expected a number, got {v!r}")
            if v < lo or v > hi or (lo_open and v == lo) or (hi_open and v == hi):
                fail(key, f"value {v} outside {'(' if lo_open else '['}{lo}, {hi}{')' if hi_open else ']'}")

    exp = params["experiment"]
    real_in("squeezing_db", 0.0, 40.0)
    real_in("kappa", 0.0, 1.0, allow_list=exp in ("cat-breed", "gps-breed", "frontier"))
    real_in("dark_eps", 0.0, 1.0, hi_open=True)
    real_in("corr_p", 0.0, 1.0, allow_list=exp == "correlated")
    real_in("eta", 0.0, 1.0)
    real_in("alpha", 0.0, 10.0)
    real_in("count_rate_hz", 0.0, math.inf, lo_open=True)
    real_in("fidelity_floor", 0.0, 1.0)

    if "n_detectors" in params:
        values = _as_list(params["n_detectors"])
        if not values:
            fail("n_detectors", "must not be empty")
        for v in values:
            if v == "inf" and exp in ("cat-breed", "gps-breed", "frontier"):
                continue
            if not _int(v) or v < 1:
                fail("n_detectors", f"expected a positive integer, got {v!r}")
    for key, lo in (("k_clicks", 0), ("moment_order", 1), ("seed", 0), ("truncation", 2)):
        if key in params:
            v = params[key]
            if not _int(v) or v < lo:
                fail(key, f"expected an integer >= {lo}, got {v!r}")
    if params.get("truncation", 2) > MAX_DIM:
        fail("truncation", f"must not exceed {MAX_DIM}")
    if "scheme" in params and params["scheme"] not in SCHEMES:
        fail("scheme", f"expected one of {', '.join(SCHEMES)}")
    if exp == "gps-breed" and params.get("scheme", "generalized") != "generalized":
        fail("scheme", "gps-breed always uses the generalized scheme")
    if "state" in params and params["state"] not in STATES:
        fail("state", f"expected one of {', '.join(STATES)}")
    if "output" in params and (not isinstance(params["output"], str) or not params["output"]):
        fail("output", "expected a non-empty file name")
    if "eta" in params and "eta_grid" in params:
        fail("eta_grid", "give either eta or eta_grid, not both")
    if "eta_grid" in params:
        g = params["eta_grid"]
        if not (isinstance(g, list) and len(g) == 3 and all(_real(x) for x in g)):
            fail("eta_grid", "expected [lo, hi, step]")
        lo, hi, step = g
        if not (0.0 <= lo <= hi <= 1.0 and step > 0):
            fail("eta_grid", "need 0 <= lo <= hi <= 1 and step > 0")
    if exp == "moments":
        state = params["state"]
        if state in ("coherent", "cat") and "alpha" not in params:
            fail("state", f"state '{state}' needs alpha")
        if state == "squeezed" and "squeezing_db" not in params:
            fail("state", "state 'squeezed' needs squeezing_db")
    if exp == "correlated":
        for n in _as_list(params["n_detectors"]):
            if n % 2:
                fail("n_detectors", "correlated pairs need an even detector count")
    if "corr_p" in params and params["corr_p"] and exp == "squeezed-calib":
        for n in _as_list(params["n_detectors"]):
            if n % 2:
                fail("n_detectors", "correlated pairs need an even detector count")
    if exp in ("cat-breed", "gps-breed", "frontier"):
        k = params.get("k_clicks", 2)
        for n in _as_list(params.get("n_detectors", "inf")):
            if n != "inf" and k > n:
                fail("k_clicks", f"k_clicks={k} exceeds n_detectors={n}")


def parse_config(text: str, source: str = "<string>") -> ExperimentConfig:
    try:
        params = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        line = getattr(exc, "lineno", None)
        if line is None:
            m = re.search(r"line (\d+)", str(exc))
            line = int(m.group(1)) if m else None
        raise ConfigError(f"malformed TOML: {exc}", line=line) from None

    if "experiment" not in params:
        raise ConfigError("missing required key", "experiment")
    exp = params["experiment"]
    if exp not in EXPERIMENTS:
        raise ConfigError(
            f"unknown experiment {exp!r}; expected one of {', '.join(EXPERIMENTS)}",
            "experiment", _key_line(text, "experiment"),
        )
    known = set().union(*ALLOWED.values())
    for key in params:
        if key not in known:
            raise ConfigError("unknown key", key, _key_line(text, key))
        if key not in ALLOWED[exp]:
            raise ConfigError(f"not used by experiment '{exp}'", key, _key_line(text, key))
    for key in REQUIRED[exp]:
        if key not in params:
            raise ConfigError(f"required by experiment '{exp}'", key)
    _check(params, text)
    digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
    return ExperimentConfig(exp, dict(params), digest, source)


def load_config(path) -> ExperimentConfig:
    with open(path, "rb") as fh:
        raw = fh.read()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ConfigError(f"config is not UTF-8: {exc}") from None
    return parse_config(text, str(path))
