"""Experiment configuration: strict TOML into dataclasses.

Unknown keys, missing required fields and out-of-range values raise
ConfigError naming the dotted field and, when it can be found, the line.
"""
import hashlib
import json
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ArgumentError, ConfigError
from .kernels import HurstFunction, KernelFamily

EXPERIMENTS = (
    "simulate", "localtime", "occupation", "tanaka-expectation", "tanaka-path",
    "ito-quadratic", "chaos-variance", "kernel-verify",
)

# per experiment: parameter defaults, tolerance defaults, whether paths are sampled
SCHEMAS: Dict[str, Dict[str, Any]] = {
    "simulate": {
        "params": {"refine": 256},
        "tolerances": {"variance_z": 4.0},
        "paths": True,
    },
    "localtime": {
        "params": {"weighting": "lebesgue", "levels": [0.0], "curve_points": 0,
                   "curve_range": [-2.0, 2.0]},
        "tolerances": {"rel": 0.05},
        "paths": True,
    },
    "occupation": {
        "params": {"refinements": 4, "paths_checked": 20},
        "tolerances": {"exact": 1e-12},
        "paths": True,
    },
    "tanaka-expectation": {
        "params": {"levels": [0.0, 0.5, 1.0]},
        "tolerances": {"residual": 1e-6},
        "paths": False,
    },
    "tanaka-path": {
        "params": {"c": 0.0, "delta": None, "binwidth": None},
        "tolerances": {"z": 3.0},
        "paths": True,
    },
    "ito-quadratic": {
        "params": {"exponents": [8, 9, 10, 11, 12]},
        "tolerances": {"final_rel": 0.02},
        "paths": True,
    },
    "chaos-variance": {
        "params": {"level": 0.2, "K": 30},
        "tolerances": {"rel": 0.10},
        "paths": True,
    },
    "kernel-verify": {
        "params": {"times": [0.1, 0.325, 0.55, 0.775, 1.0], "refine": 256},
        "tolerances": {"parseval_rel": 1e-3, "z": 3.0},
        "paths": False,
    },
}

KERNEL_KEYS = {"family", "H", "alpha", "h", "domain"}
HURST_KEYS = {"kind", "params", "eps"}
GRID_KEYS = {"T", "n_steps", "times"}
BINS_KEYS = {"width", "level"}
TOP_KEYS = {"experiment", "seed", "n_paths", "out", "kernel", "grid", "bins", "params", "tolerances"}


def _find_line(text, dotted):
    """Best-effort line of ``dotted`` (table.key) in TOML source."""
    if text is None:
        return None
    parts = dotted.split(".")
    key, table = parts[-1], ".".join(parts[:-1])
    current = ""
    pat = re.compile(rf"^\s*(\"{re.escape(key)}\"|{re.escape(key)})\s*=")
    header = re.compile(r"^\s*\[([^\[\]]+)\]\s*(#.*)?$")
    for n, line in enumerate(text.splitlines(), 1):
        m = header.match(line)
        if m:
            current = m.group(1).strip()
            if current == dotted:
                return n
            continue
        if current == table and pat.match(line):
            return n
    return None


@dataclass(frozen=True)
class GridSpec:
    T: float = 1.0
    n_steps: int = 1024
    times: Optional[tuple] = None  # explicit grid, overrides n_steps


@dataclass(frozen=True)
class BinsConfig:
    width: Optional[float] = None
    level: float = 0.0


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    seed: int
    kernel: KernelFamily
    grid: GridSpec
    n_paths: int = 0
    bins: BinsConfig = BinsConfig()
    params: Dict[str, Any] = field(default_factory=dict)
    tolerances: Dict[str, float] = field(default_factory=dict)
    out: Optional[str] = None

    def to_dict(self):
        return {
            "experiment": self.experiment,
            "seed": self.seed,
            "n_paths": self.n_paths,
            "kernel": self.kernel.to_dict(),
            "grid": {"T": self.grid.T, "n_steps": self.grid.n_steps,
                     "times": None if self.grid.times is None else list(self.grid.times)},
            "bins": asdict(self.bins),
            "params": dict(self.params),
            "tolerances": dict(self.tolerances),
        }

    def digest(self):
        """SHA-256 of the canonical JSON form (output directory excluded)."""
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def with_seed(self, seed):
        return ExperimentConfig(self.experiment, int(seed), self.kernel, self.grid, self.n_paths,
                                self.bins, self.params, self.tolerances, self.out)


class _Reader:
    def __init__(self, text):
        self.text = text

    def fail(self, msg, dotted):
        raise ConfigError(msg, field=dotted, line=_find_line(self.text, dotted))

    def table(self, data, dotted, allowed):
        if not isinstance(data, dict):
            self.fail("expected a table", dotted)
        for key in data:
            if key not in allowed:
                path = f"{dotted}.{key}" if dotted else key
                self.fail(f"unknown key '{key}'", path)
        return data

    def number(self, data, key, dotted, required=False, default=None, integer=False, positive=False):
        path = f"{dotted}.{key}" if dotted else key
        if key not in data:
            if required:
                raise ConfigError(f"missing required field '{key}'", field=path,
                                  line=_find_line(self.text, dotted) if dotted else None)
            return default
        v = data[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)) or (integer and not isinstance(v, int)):
            self.fail(f"expected {'an integer' if integer else 'a number'}, got {v!r}", path)
        if positive and not v > 0:
            self.fail(f"must be positive, got {v!r}", path)
        return v


def _kernel(r: _Reader, data):
    if "kernel" not in data:
        raise ConfigError("missing required table 'kernel'", field="kernel")
    kd = r.table(data["kernel"], "kernel", KERNEL_KEYS)
    if "family" not in kd:
        raise ConfigError("missing required field 'family'", field="kernel.family",
                          line=_find_line(r.text, "kernel"))
    fam = kd["family"]
    needs = {"bm": set(), "bridge": set(), "fbm": {"H"}, "mbm": {"h"}, "vgamma": {"alpha"}}
    if fam not in needs:
        r.fail(f"unknown kernel family {fam!r}; expected one of {sorted(needs)}", "kernel.family")
    for key in ("H", "alpha", "h"):
        if key in kd and key not in needs[fam]:
            r.fail(f"'{key}' does not apply to kernel family {fam!r}", f"kernel.{key}")
    for key in needs[fam]:
        if key not in kd:
            raise ConfigError(f"kernel family {fam!r} needs '{key}'", field=f"kernel.{key}",
                              line=_find_line(r.text, "kernel"))
    domain = None
    if "domain" in kd:
        d = kd["domain"]
        if not (isinstance(d, list) and len(d) == 2):
            r.fail("domain must be a two-element array", "kernel.domain")
        domain = (float(d[0]), float(d[1]))
    try:
        if fam == "fbm":
            H = r.number(kd, "H", "kernel", required=True)
            k = KernelFamily.fbm(H) if domain is None else KernelFamily.fbm(H, domain=domain)
        elif fam == "vgamma":
            a = r.number(kd, "alpha", "kernel", required=True)
            k = KernelFamily.vgamma(a) if domain is None else KernelFamily.vgamma(a, domain=domain)
        elif fam == "mbm":
            hd = r.table(kd["h"], "kernel.h", HURST_KEYS)
            if "kind" not in hd:
                raise ConfigError("missing required field 'kind'", field="kernel.h.kind",
                                  line=_find_line(r.text, "kernel.h"))
            params = hd.get("params", [])
            if not isinstance(params, list):
                r.fail("params must be an array", "kernel.h.params")
            h = HurstFunction(hd["kind"], tuple(float(p) for p in params), float(hd.get("eps", 0.01)))
            k = KernelFamily.mbm(h) if domain is None else KernelFamily.mbm(h, domain=domain)
        else:
            ctor = getattr(KernelFamily, fam)
            k = ctor() if domain is None else ctor(domain=domain)
    except (ArgumentError, TypeError) as exc:
        r.fail(f"invalid kernel: {exc}", "kernel")
    return k


def parse_config(text, source=None) -> ExperimentConfig:
    """Validate a TOML document; nothing is computed before this succeeds."""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigError(f"malformed config{'' if source is None else ' ' + str(source)}: {exc}",
                          line=int(m.group(1)) if m else None) from None
    r = _Reader(text)
    r.table(data, "", TOP_KEYS)
    if "experiment" not in data:
        raise ConfigError("missing required field 'experiment'", field="experiment")
    name = data["experiment"]
    if name not in EXPERIMENTS:
        r.fail(f"unknown experiment {name!r}; expected one of {list(EXPERIMENTS)}", "experiment")
    schema = SCHEMAS[name]
    seed = r.number(data, "seed", "", required=True, integer=True)
    if seed < 0:
        r.fail("seed must be non-negative", "seed")
    kernel = _kernel(r, data)

    gd = r.table(data.get("grid", {}), "grid", GRID_KEYS)
    T = float(r.number(gd, "T", "grid", default=1.0, positive=True))
    n_steps = int(r.number(gd, "n_steps", "grid", default=1024, integer=True, positive=True))
    times = gd.get("times")
    if times is not None:
        if not isinstance(times, list) or len(times) == 0:
            r.fail("times must be a non-empty array", "grid.times")
        times = tuple(float(t) for t in times)
    grid = GridSpec(T, n_steps, times)

    bd = r.table(data.get("bins", {}), "bins", BINS_KEYS)
    bins = BinsConfig(r.number(bd, "width", "bins", default=None, positive=True),
                      float(r.number(bd, "level", "bins", default=0.0)))

    n_paths = r.number(data, "n_paths", "", required=schema["paths"], default=0, integer=True)
    if schema["paths"] and n_paths < 1:
        r.fail("n_paths must be at least 1", "n_paths")

    pd = r.table(data.get("params", {}), "params", set(schema["params"]))
    params = {**schema["params"], **pd}
    td = r.table(data.get("tolerances", {}), "tolerances", set(schema["tolerances"]))
    for key in td:
        r.number(td, key, "tolerances", positive=True)
    tolerances = {**schema["tolerances"], **td}
    if name == "localtime" and params["weighting"] not in ("lebesgue", "dR"):
        r.fail("weighting must be 'lebesgue' or 'dR'", "params.weighting")

    out = data.get("out")
    if out is not None and not isinstance(out, str):
        r.fail("out must be a string", "out")
    try:
        kernel._check(T)
    except ArgumentError as exc:
        r.fail(str(exc), "grid.T")
    return ExperimentConfig(name, int(seed), kernel, grid, int(n_paths), bins, params, tolerances, out)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return parse_config(text, source=path)
