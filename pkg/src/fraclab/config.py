"""Run configuration: flat key=value text with section headers (INI), presets,
and validation that names the violated invariant.

The grammar is documented in the README; every list is space-separated.
Presets are complete configurations; a config file or request overrides
individual keys on top of a preset.
"""

import configparser
import io
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError


@dataclass
class RunConfig:
    # problem
    t: float = 0.7
    s: float = 0.4
    omega_lo: float = -1.0
    omega_hi: float = 1.0
    radius: float = 4.0
    h: float = 2.0 ** -7
    # coefficients (truth for synthetic data; also the recovery cell layout)
    b_edges: tuple[float, ...] = (-0.75, -0.375, 0.0, 0.375, 0.75)
    b_values: tuple[float, ...] = (0.8, 0.3, 0.0, 0.5)
    q_edges: tuple[float, ...] = (-0.75, -0.375, 0.0, 0.375, 0.75)
    q_values: tuple[float, ...] = (0.4, -0.2, 0.6, 0.1)
    # sources
    source_window: tuple[float, float] = (2.0, 3.0)
    source_count: int = 16
    source_amplitude: float = 100.0
    # observations
    observation_points: tuple[float, ...] = tuple(1.5 + 0.1 * k for k in range(10))
    # forward command
    forward_rhs: str = "zero"        # zero | getoor
    forward_datum: int = 0           # source index, or -1 for no exterior datum
    # recover command
    recover_mode: str = "all"        # all | single
    lambda_tik: float = 0.0
    max_iter: int = 30
    recover_start: str = "zero"      # zero | truth
    single_source_index: int = 0
    # runge command
    runge_demos: tuple[str, ...] = ("regional", "two_set", "sq", "solution")
    runge_order: float = 0.6
    runge_sub: tuple[float, float] = (-0.5, 0.5)
    runge_sub2: tuple[float, float, float, float] = (-0.625, -0.125, 0.125, 0.625)
    runge_basis_sizes: tuple[int, ...] = (5, 10, 20, 40)
    runge_target: str = "sin"        # sin | bump | const
    # verify command
    verify_orders: tuple[float, ...] = (0.25, 0.4, 0.5, 0.6, 0.75)
    verify_tol: float = 1e-4
    corrupt_constant: bool = False
    # run
    seed: int = 0

    def validate(self) -> "RunConfig":
        if not (0.0 < self.s < self.t < 1.0):
            raise ConfigError(
                f"order invariant violated: need 0 < s < t < 1 (operator order "
                f"hypothesis of the perturbed fractional model), got s={self.s}, t={self.t}")
        if not self.omega_lo < self.omega_hi:
            raise ConfigError("geometry invariant violated: omega_lo < omega_hi required")
        if self.radius <= max(abs(self.omega_lo), abs(self.omega_hi)):
            raise ConfigError(
                "geometry invariant violated: the truncation radius must contain the "
                "closed interval (exterior data live outside it)")
        if self.h <= 0 or self.h > 0.25 * (self.omega_hi - self.omega_lo):
            raise ConfigError(
                "mesh invariant violated: h must be positive and the interval at "
                "least four cells wide")
        for name, edges, values in (("b", self.b_edges, self.b_values),
                                    ("q", self.q_edges, self.q_values)):
            if len(edges) != len(values) + 1 or any(
                    e2 <= e1 for e1, e2 in zip(edges, edges[1:])):
                raise ConfigError(
                    f"coefficient invariant violated: {name} needs strictly increasing "
                    f"cell edges with one value per cell")
            if edges[0] < self.omega_lo + self.h or edges[-1] > self.omega_hi - self.h:
                raise ConfigError(
                    f"support invariant violated: {name} must be compactly supported, "
                    f"vanishing within one cell of the interval boundary")
        lo, hi = self.source_window
        if not (lo < hi and (lo >= self.omega_hi + self.h or hi <= self.omega_lo - self.h)):
            raise ConfigError(
                "source invariant violated: the source window must be an exterior "
                "interval separated from the closed interval (exterior-datum class)")
        if self.source_count < 1:
            raise ConfigError("source invariant violated: at least one source required")
        pts = np.asarray(self.observation_points)
        inside = (pts >= self.omega_lo) & (pts <= self.omega_hi)
        if len(pts) == 0 or np.any(inside):
            raise ConfigError(
                "observation invariant violated: points must be exterior (nonempty "
                "set at positive distance from the interval)")
        if self.forward_rhs not in ("zero", "getoor"):
            raise ConfigError("forward.rhs must be 'zero' or 'getoor'")
        if self.recover_mode not in ("all", "single"):
            raise ConfigError("recover.mode must be 'all' or 'single'")
        if self.recover_start not in ("zero", "truth"):
            raise ConfigError("recover.start must be 'zero' or 'truth'")
        if self.runge_target not in ("sin", "bump", "const"):
            raise ConfigError("runge.target must be sin, bump, or const")
        for name in self.runge_demos:
            if name not in ("regional", "two_set", "sq", "solution"):
                raise ConfigError(f"unknown runge demo '{name}'")
        if not 0.0 < self.runge_order < 1.0:
            raise ConfigError("runge.a must lie strictly in (0, 1) (admissible order)")
        for a in self.verify_orders:
            if not 0.0 < a < 1.0:
                raise ConfigError("verify.orders must lie strictly in (0, 1)")
        return self


_SCHEMA: dict[tuple[str, str], tuple[str, type]] = {
    ("run", "seed"): ("seed", int),
    ("problem", "t"): ("t", float),
    ("problem", "s"): ("s", float),
    ("problem", "omega_lo"): ("omega_lo", float),
    ("problem", "omega_hi"): ("omega_hi", float),
    ("problem", "radius"): ("radius", float),
    ("problem", "h"): ("h", float),
    ("coefficients", "b_edges"): ("b_edges", tuple),
    ("coefficients", "b_values"): ("b_values", tuple),
    ("coefficients", "q_edges"): ("q_edges", tuple),
    ("coefficients", "q_values"): ("q_values", tuple),
    ("sources", "window_lo"): ("source_window_lo", float),
    ("sources", "window_hi"): ("source_window_hi", float),
    ("sources", "count"): ("source_count", int),
    ("sources", "amplitude"): ("source_amplitude", float),
    ("observations", "points"): ("observation_points", tuple),
    ("forward", "rhs"): ("forward_rhs", str),
    ("forward", "datum"): ("forward_datum", int),
    ("recover", "mode"): ("recover_mode", str),
    ("recover", "lambda_tik"): ("lambda_tik", float),
    ("recover", "max_iter"): ("max_iter", int),
    ("recover", "start"): ("recover_start", str),
    ("recover", "source_index"): ("single_source_index", int),
    ("runge", "demos"): ("runge_demos", "strtuple"),
    ("runge", "a"): ("runge_order", float),
    ("runge", "sub"): ("runge_sub", tuple),
    ("runge", "sub2"): ("runge_sub2", tuple),
    ("runge", "basis_sizes"): ("runge_basis_sizes", "inttuple"),
    ("runge", "target"): ("runge_target", str),
    ("verify", "orders"): ("verify_orders", tuple),
    ("verify", "tol"): ("verify_tol", float),
    ("verify", "corrupt_constant"): ("corrupt_constant", bool),
}


def parse_config_text(text: str, base: RunConfig | None = None) -> RunConfig:
    """Parse key=value sections on top of a base configuration."""
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"configuration syntax error: {exc}") from exc
    cfg = base or RunConfig()
    updates: dict[str, object] = {}
    for section in cp.sections():
        for key, raw in cp.items(section):
            spec = _SCHEMA.get((section, key))
            if spec is None:
                raise ConfigError(f"unknown configuration key [{section}] {key}")
            name, kind = spec
            try:
                if kind is float:
                    val: object = float(raw)
                elif kind is int:
                    val = int(raw)
                elif kind is bool:
                    val = raw.strip().lower() in ("1", "true", "yes", "on")
                elif kind is tuple:
                    val = tuple(float(x) for x in raw.split())
                elif kind == "inttuple":
                    val = tuple(int(x) for x in raw.split())
                elif kind == "strtuple":
                    val = tuple(raw.split())
                else:
                    val = raw.strip()
            except ValueError as exc:
                raise ConfigError(f"invalid value for [{section}] {key}: {raw!r}") from exc
            updates[name] = val
    lo = updates.pop("source_window_lo", None)
    hi = updates.pop("source_window_hi", None)
    if lo is not None or hi is not None:
        cur = cfg.source_window
        updates["source_window"] = (cur[0] if lo is None else lo,
                                    cur[1] if hi is None else hi)
    cfg = replace(cfg, **updates)
    return cfg.validate()


def config_to_text(cfg: RunConfig) -> str:
    """Serialize a configuration back to the documented INI grammar."""
    def fmt(v):
        if isinstance(v, (tuple, list)):
            return " ".join(fmt(x) for x in v)
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, float):
            return format(v, ".17g")
        return str(v)

    cp = configparser.ConfigParser()
    for (section, key), (name, _) in _SCHEMA.items():
        if section not in cp:
            cp[section] = {}
        if name == "source_window_lo":
            cp[section][key] = fmt(cfg.source_window[0])
        elif name == "source_window_hi":
            cp[section][key] = fmt(cfg.source_window[1])
        else:
            cp[section][key] = fmt(getattr(cfg, name))
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


PRESETS: dict[str, RunConfig] = {
    "paper-desk": RunConfig(),
    "getoor": RunConfig(
        b_values=(0.0, 0.0, 0.0, 0.0), q_values=(0.0, 0.0, 0.0, 0.0),
        forward_rhs="getoor", forward_datum=-1),
    "zero": RunConfig(forward_rhs="zero", forward_datum=-1),
    "recover-single": RunConfig(
        h=2.0 ** -6,
        b_edges=(-0.5, 0.0, 0.5), b_values=(0.8, 0.3),
        q_edges=(-0.5, 0.0, 0.5), q_values=(0.6, -0.4),
        observation_points=tuple(np.concatenate([np.linspace(-3.5, -1.3, 20),
                                                 np.linspace(1.3, 3.5, 20)])),
        recover_mode="single", source_count=1, max_iter=50),
    "recover-all": RunConfig(h=2.0 ** -6,
                             b_values=(0.9, 0.4, 0.0, 0.6), q_values=(0.5, -0.3, 0.8, 0.2)),
    "runge": RunConfig(h=2.0 ** -6),
    "verify": RunConfig(h=2.0 ** -5),
}


def get_preset(name: str) -> RunConfig:
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError(
            f"unknown preset '{name}'; available: {', '.join(sorted(PRESETS))}") from None
