"""Command-line driver: coupling tables, Fisher curves, error-bound sweeps, Monte Carlo.

Configuration is a flat ``key = value`` text file (``#`` starts a comment)
plus ``--set key=value`` overrides.  Lists are comma separated and numbers may
be written with ``pi`` (``3*pi/4``).  Every subcommand writes a CSV whose first
line is ``# qradar-fisher v1`` followed by the column header.

Exit codes: 0 success, 2 invalid configuration, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import ast
import dataclasses
import math
import operator
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .antenna import AntennaParams, couplings
from .inference import (ParametricModel, SmoothnessError, crb, fisher_matrix,
                        fisher_rare_event, zeta_step)
from .montecarlo import RNG_NAME, LeastSquaresEstimator, sweep_estimation
from .oracle import PropagationError
from .schemes import (AntennaDistance, AssemblyError, FarFieldTwo, MeasurementSetting,
                      NearField, Rotation, ThreeScatterer, same_angle)

CSV_MAGIC = "# qradar-fisher v1"
COMMANDS = ("coupling", "fisher", "crb-sweep", "estimate")
PRESETS = ("fig1b", "fig4a", "fig4b", "fig5", "fig6a", "fig6b")
SCHEMES = ("rotation", "antenna_distance", "far_two", "three", "near")
# scalar fields each scheme lets you sweep or infer
SCHEME_PARAMS = {
    "rotation": ("delta_alpha", "zeta12", "theta"),
    "antenna_distance": ("zeta12", "theta"),
    "far_two": ("kr", "zeta12", "theta", "kRo"),
    "three": ("kr1", "kr2", "zeta12", "theta", "kRo"),
    "near": ("delta_psi", "x", "zeta12", "theta"),
}

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


# ---------------------------------------------------------------- parsing

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_NAMES = {"pi": math.pi, "inf": math.inf}


def parse_number(text: str) -> float:
    """Evaluate a numeric literal or a small arithmetic expression in ``pi``."""

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id in _NAMES:
            return _NAMES[node.id]
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        raise ValueError(f"not a number: {text!r}")

    try:
        return ev(ast.parse(text.strip(), mode="eval"))
    except (SyntaxError, ZeroDivisionError, OverflowError) as exc:
        raise ValueError(f"not a number: {text!r}") from exc


def parse_config_text(text: str, source: str = "<config>") -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}", f"expected key = value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in out:
            raise ConfigError(key, f"given twice in {source}")
        out[key] = value
    return out


def load_preset(name: str) -> dict:
    if name not in PRESETS:
        raise ConfigError("preset", f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    text = resources.files("qradar").joinpath("presets", f"{name}.cfg").read_text()
    return parse_config_text(text, f"preset {name}")


# ---------------------------------------------------------------- config

def _floats(s):
    return tuple(parse_number(v) for v in s.split(",") if v.strip())


def _int(s):
    v = parse_number(s)
    if v != int(v):
        raise ValueError(f"not an integer: {s!r}")
    return int(v)


@dataclass(frozen=True)
class RunConfig:
    command: str = "fisher"
    scheme: str = "rotation"
    gamma: float = 1.0
    zeta12: float = 1.0
    theta: tuple = (0.0,)
    delta_alpha: float = 0.0
    kr: float = 0.0
    kRo: float = 1.0
    kr1: float = 0.0
    kr2: float = 0.0
    delta_psi: float = 0.0
    x: float = 1.0
    angles: tuple = (0.0,)
    angles2: tuple = ()
    tau0: tuple = (0.0,)
    delta_tau: tuple = (0.0,)
    sweep: str = "zeta12"
    param: str = "delta_alpha"
    grid: tuple = ()
    grid_start: float = 0.0
    grid_stop: float = 1.0
    grid_count: int = 0
    grid_scale: str = "linear"
    bounds: tuple = ()
    N: int = 10_000_000
    seeds: int = 100
    root_seed: int = 0
    threads: int = 1
    out: str = ""
    svg: str = ""

    @classmethod
    def from_mapping(cls, mapping: dict) -> "RunConfig":
        conv = {}
        for f in dataclasses.fields(cls):
            if f.type == "float":
                conv[f.name] = parse_number
            elif f.type == "int":
                conv[f.name] = _int
            elif f.type == "tuple":
                conv[f.name] = _floats
            else:
                conv[f.name] = str
        kwargs = {}
        for key, raw in mapping.items():
            if key not in conv:
                raise ConfigError(key, "unknown key")
            try:
                kwargs[key] = conv[key](str(raw))
            except ValueError as exc:
                raise ConfigError(key, str(exc)) from None
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg

    # ------------------------------------------------------------ checks

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigError("command", f"must be one of {', '.join(COMMANDS)}")
        if self.scheme not in SCHEMES:
            raise ConfigError("scheme", f"must be one of {', '.join(SCHEMES)}")
        for key in ("gamma", "zeta12"):
            try:
                AntennaParams(**{key: getattr(self, key)})
            except ValueError as exc:
                raise ConfigError(key, str(exc)) from None
        for key in ("N", "seeds", "threads"):
            if getattr(self, key) < 1:
                raise ConfigError(key, "must be >= 1")
        if self.svg and self.out in ("", "-"):
            raise ConfigError("svg", "SVG output needs an output CSV path to draw from")
        if self.grid_scale not in ("linear", "log"):
            raise ConfigError("grid_scale", "must be linear or log")
        if self.grid_count < 0:
            raise ConfigError("grid_count", "must be >= 0")
        if self.grid_scale == "log" and not self.grid and self.grid_count and \
                min(self.grid_start, self.grid_stop) <= 0:
            raise ConfigError("grid_start", "log grids need positive endpoints")
        if self.command != "coupling" and not self.sweep_values():
            raise ConfigError("grid", "empty sweep grid")
        if self.command == "coupling":
            if not self.sweep_values():
                raise ConfigError("grid", "empty sweep grid")
            for v in self.sweep_values():
                if not v > 0:
                    raise ConfigError("grid", f"zeta12 must be positive, got {v}")
            return
        allowed = SCHEME_PARAMS[self.scheme]
        if self.command == "fisher":
            if self.sweep not in allowed:
                raise ConfigError("sweep", f"{self.scheme} cannot sweep {self.sweep!r}")
        if self.command in ("fisher", "estimate") and self.param not in allowed:
            raise ConfigError("param", f"{self.scheme} has no parameter {self.param!r}")
        if self.command == "estimate":
            if len(self.bounds) != 2 or not self.bounds[1] > self.bounds[0]:
                raise ConfigError("bounds", "need two increasing values lo, hi")
            for v in self.sweep_values():
                if not self.bounds[0] <= v <= self.bounds[1]:
                    raise ConfigError("grid", f"{v} lies outside bounds")
        if self.command == "crb-sweep" and self.scheme != "three":
            raise ConfigError("scheme", "crb-sweep works with the three-scatterer scheme")
        n = self.n_settings()
        for key in ("tau0", "delta_tau", "angles", "angles2", "theta"):
            vals = getattr(self, key)
            if len(vals) not in (0, 1, n) or (key != "angles2" and not vals):
                raise ConfigError(key, f"expected 1 or {n} values, got {len(vals)}")
        for i in range(n):
            t0, dt = self._pick(self.tau0, i), self._pick(self.delta_tau, i)
            if t0 < 0:
                raise ConfigError("tau0", f"must be >= 0, got {t0}")
            if dt < 0 or t0 - dt < 0:
                raise ConfigError("delta_tau", f"window [{t0}-{dt}, {t0}+{dt}] starts below zero")
        # let the scheme constructors check the remaining ranges
        for v in self.sweep_values()[:1] + self.sweep_values()[-1:]:
            for i in range(n):
                values = self.values(i, {self.sweep: v} if self.command == "fisher" else {})
                try:
                    build_scheme(self.scheme, values)
                except ValueError as exc:
                    key = str(exc).split(" ", 1)[0]
                    raise ConfigError(key if key in self.__dataclass_fields__ else self.scheme,
                                      str(exc)) from None

    # ------------------------------------------------------------ helpers

    @staticmethod
    def _pick(vals, i):
        return vals[i] if len(vals) > 1 else vals[0]

    def n_settings(self) -> int:
        if self.command == "fisher":
            return max(len(self.tau0), len(self.delta_tau), len(self.theta), 1)
        return max(len(self.angles), len(self.tau0), len(self.delta_tau), 1)

    def sweep_values(self) -> list:
        if self.grid:
            return list(self.grid)
        if self.grid_count == 0:
            return []
        if self.grid_scale == "log":
            return list(np.geomspace(self.grid_start, self.grid_stop, self.grid_count))
        return list(np.linspace(self.grid_start, self.grid_stop, self.grid_count))

    def values(self, i: int, override: dict | None = None) -> dict:
        """Scalar field values for setting (or curve) ``i``."""
        v = {k: getattr(self, k) for k in
             ("gamma", "zeta12", "delta_alpha", "kr", "kRo", "kr1", "kr2", "delta_psi", "x")}
        v["theta"] = self._pick(self.theta, i)
        v["tau0"] = self._pick(self.tau0, i)
        v["delta_tau"] = self._pick(self.delta_tau, i)
        v["angle_a"] = self._pick(self.angles, i)
        v["angle_b"] = self._pick(self.angles2, i) if self.angles2 else v["angle_a"]
        v.update(override or {})
        return v


def build_scheme(name: str, v: dict):
    if name == "rotation":
        return Rotation(v["delta_alpha"])
    if name == "antenna_distance":
        return AntennaDistance()
    if name == "far_two":
        return FarFieldTwo(v["theta"], v["kr"], v["kRo"])
    if name == "three":
        return ThreeScatterer(v["theta"], v["kr1"], v["kr2"], v["kRo"])
    if name == "near":
        return NearField(v["theta"], v["delta_psi"], v["x"])
    raise ValueError(f"scheme unknown scheme {name!r}")


def build_setting(name: str, v: dict) -> MeasurementSetting:
    scheme = build_scheme(name, v)
    if name in ("rotation", "antenna_distance"):
        # the observation angle is the detector angle itself
        return same_angle(scheme, v["theta"], v["tau0"], v["delta_tau"])
    return MeasurementSetting(scheme, (v["angle_a"], v["angle_b"]), v["tau0"], v["delta_tau"])


def build_model(cfg: RunConfig, names, override: dict | None = None,
                zero_delay: bool = False) -> ParametricModel:
    """Parametric model over all settings of ``cfg``; ``zero_delay`` drops every delay."""
    settings = []
    for i in range(cfg.n_settings()):
        v = cfg.values(i, override)
        if zero_delay:
            v["tau0"] = v["delta_tau"] = 0.0
        settings.append(build_setting(cfg.scheme, v))
    params = AntennaParams(cfg.gamma, (override or {}).get("zeta12", cfg.zeta12))
    return ParametricModel(params, settings, names)


def _map(fn, items, threads):
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


# ---------------------------------------------------------------- commands

def cmd_coupling(cfg: RunConfig):
    rows = []
    for z in cfg.sweep_values():
        cc = couplings(AntennaParams(cfg.gamma, z))
        rows.append([z, cc.f12, cc.gamma12])
    return ["zeta12", "f12", "gamma12"], rows


def _curve_label(cfg: RunConfig, i: int) -> str:
    v = cfg.values(i)
    parts = [f"tau0={v['tau0']:.6g}", f"dtau={v['delta_tau']:.6g}"]
    if cfg.sweep != "theta":
        parts.append(f"theta={v['theta']:.6g}")
    return "fi[" + " ".join(parts) + "]"


def fisher_point(cfg: RunConfig, curve: int, value: float) -> float:
    """Rare-event Fisher information of curve ``curve`` at sweep value ``value``."""
    model = build_model(cfg, (cfg.param,), {cfg.sweep: value})
    v = cfg.values(curve, {cfg.sweep: value})
    model = ParametricModel(model.params, [model.settings[curve]], model.names)
    x0 = v[cfg.param]
    step = None
    if cfg.param == "zeta12":
        step = zeta_step(x0, v["tau0"] + v["delta_tau"], cfg.gamma)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return fisher_rare_event(lambda a: model.probabilities(a)[0], x0, step)


def cmd_fisher(cfg: RunConfig):
    n = cfg.n_settings()
    header = [cfg.sweep] + [_curve_label(cfg, i) for i in range(n)]

    def row(value):
        return [value] + [fisher_point(cfg, i, value) for i in range(n)]

    return header, _map(row, cfg.sweep_values(), cfg.threads)


def trace_bound(cfg: RunConfig, kr: float, zero_delay: bool) -> float:
    """``Tr[F^-1]`` of the setting bank with ``kr1 = kr``, ``kr2 = 2 kr``."""
    if kr == 0:
        # coinciding scatterers sit on the edge of the parameter domain
        return math.inf
    model = build_model(cfg, ("kr1", "kr2"), {"kr1": kr, "kr2": 2 * kr}, zero_delay)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return fisher_matrix(model, [kr, 2 * kr]).trace_inverse


def cmd_crb_sweep(cfg: RunConfig):
    def row(kr):
        return [kr, trace_bound(cfg, kr, False), trace_bound(cfg, kr, True)]

    return ["kr", "trace_inv_delayed", "trace_inv_zero_delay"], _map(row, cfg.sweep_values(),
                                                                       cfg.threads)


def estimation_model(cfg: RunConfig) -> ParametricModel:
    return build_model(cfg, (cfg.param,))


def cmd_estimate(cfg: RunConfig):
    model = estimation_model(cfg)
    est = LeastSquaresEstimator(model, cfg.bounds)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        runs = sweep_estimation(cfg.sweep_values(), model, cfg.N, cfg.seeds, cfg.bounds,
                                root_seed=cfg.root_seed, threads=cfg.threads, estimator=est)
    header = ["truth", "estimate", "crb", "seed", "boundary_hit", "N", "rng"]
    rows = [[r.true_x, r.estimate, r.crb_bound, r.seed, int(r.boundary_hit), r.N, RNG_NAME]
            for r in runs]
    return header, rows


HANDLERS = {"coupling": cmd_coupling, "fisher": cmd_fisher,
            "crb-sweep": cmd_crb_sweep, "estimate": cmd_estimate}


# ---------------------------------------------------------------- CSV / SVG

def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return "%.17g" % v
    return str(v)


def write_csv(path, header, rows) -> None:
    lines = [CSV_MAGIC, ",".join(header)]
    lines += [",".join(format_value(v) for v in row) for row in rows]
    text = "\n".join(lines) + "\n"
    if path in ("", "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _parse_cell(s: str):
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


def read_csv(path):
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != CSV_MAGIC:
        raise ValueError(f"{path}: missing {CSV_MAGIC!r} line")
    header = lines[1].split(",")
    rows = [[_parse_cell(c) for c in line.split(",")] for line in lines[2:] if line]
    for r in rows:
        if len(r) != len(header):
            raise ValueError(f"{path}: row width {len(r)} != header width {len(header)}")
    return header, rows


def render_svg(csv_path, svg_path) -> None:
    """Plot a CSV written by any subcommand."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "qradar"
    header, rows = read_csv(csv_path)
    cols = list(zip(*rows)) if rows else [[] for _ in header]
    fig, ax = plt.subplots(figsize=(5, 3.6))
    if header[0] == "truth":
        truth = np.array(cols[0], float)
        est = np.array(cols[1], float)
        sig = np.sqrt(np.array(cols[2], float))
        ax.plot(truth, est, ".", ms=2, alpha=0.4, color="k")
        u, idx = np.unique(truth, return_index=True)
        ax.plot(u, u, "r-", lw=1)
        ax.plot(u, u + sig[idx], "b--", lw=1)
        ax.plot(u, u - sig[idx], "b--", lw=1)
        ax.set_xlabel("true kr")
        ax.set_ylabel("estimate")
    else:
        x = np.array(cols[0], float)
        for name, col in zip(header[1:], cols[1:]):
            y = np.array(col, float)
            ax.plot(x, np.where(np.isfinite(y), y, np.nan), label=name)
        ax.set_xlabel(header[0])
        if header[1] == "f12":
            ax.set_yscale("symlog")
        else:
            ax.set_yscale("log")
        if header[0] in ("kr", "zeta12") and x.size and x.min() > 0:
            ax.set_xscale("log")
        ax.legend(fontsize=6)
    fig.tight_layout()
    fig.savefig(svg_path, format="svg", metadata={"Date": None})
    plt.close(fig)


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qradar", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--preset", choices=PRESETS)
        s.add_argument("--config", type=Path, help="flat key = value file")
        s.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override one config key (repeatable)")
        s.add_argument("--out", help="CSV path (default: stdout)")
        s.add_argument("--svg", help="also render the CSV to this SVG file")
        s.add_argument("--seeds", type=int)
        s.add_argument("--threads", type=int)
    return p


def config_from_args(args) -> RunConfig:
    mapping = {}
    if args.preset:
        mapping.update(load_preset(args.preset))
    if args.config:
        try:
            text = args.config.read_text()
        except OSError as exc:
            raise ConfigError("config", str(exc)) from None
        mapping.update(parse_config_text(text, str(args.config)))
    for item in args.set:
        if "=" not in item:
            raise ConfigError(item, "--set expects key=value")
        k, v = item.split("=", 1)
        mapping[k.strip()] = v.strip()
    for key in ("out", "svg", "seeds", "threads"):
        if getattr(args, key) is not None:
            mapping[key] = str(getattr(args, key))
    if mapping.get("command", args.command) != args.command:
        raise ConfigError("command", f"config is for {mapping['command']!r}, not {args.command!r}")
    mapping["command"] = args.command
    return RunConfig.from_mapping(mapping)


def run(cfg: RunConfig):
    header, rows = HANDLERS[cfg.command](cfg)
    write_csv(cfg.out, header, rows)
    if cfg.svg:
        render_svg(cfg.out, cfg.svg)
    return header, rows


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SmoothnessError, PropagationError, AssemblyError, FloatingPointError,
            np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
