"""Scenario configuration, fixed-step integration and CSV persistence.

A scenario bundles a market, a starting share vector, an engine choice, a
time horizon and an ordered event timeline (utility steps, product
injections, noise on/off).  Integration is classical fixed-step RK4 with
the step grid split at event times, so events land exactly on their
timestamps and repeated runs are bit-identical for identical
(scenario, seed, dt).

The plain-text scenario format (see ``parse_scenario``)::

    format_version = 1

    [market]
    sigma = 1.0
    alpha = 1.0
    products = 1, 2, 3, 4
    utility = 0.0, 0.0, 0.0, 0.0
    tau = 5.0, 5.0, 5.0, 5.0
    t_acq = 5.0, 5.0, 5.0, 5.0

    [initial]
    shares = 0.4, 0.3, 0.2, 0.1

    [run]
    engine = shares-ode
    t_end = 100.0
    dt = 0.05
    seed = 42

    [events]
    at 20.0 set-utility product=1 value=0.5
    at 60.0 inject label=5 utility=1.0 tau=1.0 t_acq=1.0 seed_share=1e-06
    at 80.0 noise-on amplitude_s=0.001 amplitude_u=0.0
    at 90.0 noise-off

Blank lines and ``#`` comments are ignored on input; the serializer emits
the canonical comment-free layout above, and shipped scenarios round-trip
through it byte-identically.  Unknown sections, keys, event kinds or event
arguments are rejected with the offending line number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

import numpy as np

from . import equilibrium
from .dynamics import (
    Market,
    interacting_preferences,
    lotka_volterra_rhs,
    replicator_rhs,
    shares_rhs,
    validate_shares,
)
from .errors import ConfigError, DomainError, IntegrationError
from .innovation import InnovationEvent, inject_product
from .thermo import NoiseSpec, aggregates, perturb

__all__ = [
    "ENGINES",
    "UtilityStep",
    "NoiseOn",
    "NoiseOff",
    "Scenario",
    "TrajectoryLog",
    "integrate",
    "parse_scenario",
    "parse_scenario_text",
    "serialize_scenario",
    "write_scenario",
    "shipped_scenario",
]

ENGINES = ("shares-ode", "replicator", "lotka-volterra", "mnl-equilibrium")

_RHS = {
    "shares-ode": shares_rhs,
    "replicator": replicator_rhs,
    "lotka-volterra": lotka_volterra_rhs,
}


@dataclass(frozen=True)
class UtilityStep:
    """Set one product's baseline utility to ``value`` at ``time``."""

    time: float
    product: str
    value: float


@dataclass(frozen=True)
class NoiseOn:
    """Switch on stochastic share/utility noise from ``time`` onward."""

    time: float
    amplitude_s: float = 0.0
    amplitude_u: float = 0.0

    def __post_init__(self):
        if self.amplitude_s < 0.0 or self.amplitude_u < 0.0:
            raise ConfigError("noise amplitudes must be >= 0")


@dataclass(frozen=True)
class NoiseOff:
    """Switch stochastic noise off at ``time``."""

    time: float


_EVENT_TYPES = (UtilityStep, InnovationEvent, NoiseOn, NoiseOff)


@dataclass(frozen=True)
class Scenario:
    """A validated, immutable description of one integration run."""

    market: Market
    initial_shares: np.ndarray
    t_end: float
    dt: float
    engine: str
    seed: int = 0
    events: tuple = ()

    def __post_init__(self):
        if not isinstance(self.market, Market):
            raise ConfigError("market must be a Market")
        try:
            shares = validate_shares(self.initial_shares, self.market.n)
        except DomainError as exc:
            raise ConfigError(f"invalid initial shares: {exc}") from exc
        shares = shares.astype(float).copy()
        shares.setflags(write=False)
        if not (np.isfinite(self.dt) and self.dt > 0.0):
            raise ConfigError(f"dt must be finite and > 0, got {self.dt!r}")
        if not (np.isfinite(self.t_end) and self.t_end >= self.dt):
            raise ConfigError(f"t_end must be >= dt, got {self.t_end!r}")
        if self.engine not in ENGINES:
            raise ConfigError(f"unknown engine {self.engine!r}; expected one of {ENGINES}")
        events = self._normalise_events(tuple(self.events))
        object.__setattr__(self, "initial_shares", shares)
        object.__setattr__(self, "t_end", float(self.t_end))
        object.__setattr__(self, "dt", float(self.dt))
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "events", events)

    def _normalise_events(self, events: tuple) -> tuple:
        available = set(self.market.labels)
        taken = set(self.market.labels)
        counter = self.market.n + 1
        previous = -math.inf
        out = []
        for ev in events:
            if not isinstance(ev, _EVENT_TYPES):
                raise ConfigError(f"unknown event type {type(ev).__name__}")
            if not np.isfinite(ev.time) or ev.time < 0.0 or ev.time > self.t_end:
                raise ConfigError(
                    f"event time {ev.time!r} falls outside [0, t_end={self.t_end}]"
                )
            if ev.time < previous:
                raise ConfigError("events must be sorted by time")
            previous = ev.time
            if isinstance(ev, InnovationEvent):
                label = ev.label
                if label is None:
                    while str(counter) in taken:
                        counter += 1
                    label = str(counter)
                    ev = replace(ev, label=label)
                if label in taken:
                    raise ConfigError(f"injected product label {label!r} already exists")
                taken.add(label)
                available.add(label)
            elif isinstance(ev, UtilityStep):
                if ev.product not in available:
                    raise ConfigError(
                        f"utility step references unknown product {ev.product!r}"
                    )
                if not np.isfinite(ev.value):
                    raise ConfigError("utility step value must be finite")
            out.append(ev)
        return tuple(out)

    @property
    def all_labels(self) -> tuple:
        """Stable column roster: initial products plus every injection."""
        extra = tuple(ev.label for ev in self.events if isinstance(ev, InnovationEvent))
        return self.market.labels + extra

    def with_overrides(self, seed=None, dt=None, t_end=None) -> "Scenario":
        sc = self
        if seed is not None:
            sc = replace(sc, seed=int(seed))
        if dt is not None:
            sc = replace(sc, dt=float(dt))
        if t_end is not None:
            sc = replace(sc, t_end=float(t_end))
        return sc


@dataclass(frozen=True)
class TrajectoryLog:
    """Time series of one run, padded to the full product roster.

    Columns for products that have not yet been injected hold share and
    preference 0 (and utility NaN), so every row's shares sum to 1 and the
    column set is stable across injections.
    """

    labels: tuple
    t: np.ndarray
    shares: np.ndarray
    prefs: np.ndarray
    utilities: np.ndarray
    u_bar: np.ndarray
    u_avg: np.ndarray
    entropy: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        if t.ndim != 1 or t.size == 0:
            raise DomainError("trajectory must contain at least one row")
        if np.any(np.diff(t) <= 0.0):
            raise DomainError("trajectory times must be strictly increasing")
        if self.shares.shape != (t.size, len(self.labels)):
            raise DomainError("share rows must match (rows, products)")
        if np.any(np.abs(self.shares.sum(axis=1) - 1.0) > 1e-9):
            raise DomainError("every logged share row must sum to 1 within 1e-9")

    @property
    def n_rows(self) -> int:
        return self.t.size

    def column(self, name: str) -> np.ndarray:
        """Fetch one CSV column by header name (e.g. 'S_1', 'U_bar')."""
        if name == "t":
            return self.t
        if name.startswith("S_") and name[2:] in self.labels:
            return self.shares[:, self.labels.index(name[2:])]
        if name.startswith("P_") and name[2:] in self.labels:
            return self.prefs[:, self.labels.index(name[2:])]
        scalar = {"U_bar": self.u_bar, "U_avg": self.u_avg, "entropy": self.entropy}
        if name in scalar:
            return scalar[name]
        raise KeyError(name)

    def header(self) -> list:
        return (
            ["t"]
            + [f"S_{lab}" for lab in self.labels]
            + [f"P_{lab}" for lab in self.labels]
            + ["U_bar", "U_avg", "entropy"]
        )

    def to_csv(self, path) -> None:
        """Write UTF-8 CSV with 17-significant-digit scientific rendering."""
        cols = [self.column(name) for name in self.header()]
        lines = [",".join(self.header())]
        for k in range(self.n_rows):
            lines.append(",".join(f"{col[k]:.16e}" for col in cols))
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _rk4_step(s, market, h, rhs):
    def f(x):
        return rhs(np.clip(x, 0.0, None), market)

    k1 = f(s)
    k2 = f(s + 0.5 * h * k1)
    k3 = f(s + 0.5 * h * k2)
    k4 = f(s + h * k3)
    return s + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate(sc: Scenario) -> TrajectoryLog:
    """Run one scenario and log every grid point.

    Dynamic engines advance the shares ODE with RK4 (negative shares are
    clipped and the vector renormalised after every step); the
    ``mnl-equilibrium`` engine ignores the dynamics entirely and logs the
    instantaneous logit allocation of the current utilities.  Events apply
    exactly at their timestamps, before the row logged there.
    """
    market = sc.market
    s = sc.initial_shares.copy()
    labels = sc.all_labels
    col = {lab: i for i, lab in enumerate(labels)}
    n_total = len(labels)
    equilibrium_engine = sc.engine == "mnl-equilibrium"
    rhs = None if equilibrium_engine else _RHS[sc.engine]
    rng = np.random.default_rng(sc.seed)
    noise = None

    events_by_time: dict = {}
    for ev in sc.events:
        events_by_time.setdefault(float(ev.time), []).append(ev)

    rows_t, rows_s, rows_p, rows_u = [], [], [], []
    rows_ub, rows_ua, rows_ent = [], [], []

    def apply_events(at_time: float):
        nonlocal market, s, noise
        for ev in events_by_time.get(at_time, ()):
            if isinstance(ev, UtilityStep):
                market = market.set_utility(market.labels.index(ev.product), ev.value)
            elif isinstance(ev, InnovationEvent):
                if equilibrium_engine:
                    market = market.with_product(ev.utility, ev.tau_new, ev.t_new, ev.label)
                else:
                    s, market = inject_product(s, market, ev, label=ev.label)
            elif isinstance(ev, NoiseOn):
                noise = (ev.amplitude_s, ev.amplitude_u)
            elif isinstance(ev, NoiseOff):
                noise = None

    def log_row(t: float):
        if equilibrium_engine:
            p_active = equilibrium.mnl(market.baseline_utilities, market.sigma)
            s_active = p_active
            rep = equilibrium.representative_utility(market.baseline_utilities, market.sigma)
            avg = equilibrium.average_utility(market.baseline_utilities, market.sigma)
            ent = equilibrium.entropy(p_active)
        else:
            p_active = interacting_preferences(s, market)
            s_active = s
            agg = aggregates(s, market)
            rep, avg, ent = agg.representative_utility, agg.average_utility, agg.entropy
        s_full = np.zeros(n_total)
        p_full = np.zeros(n_total)
        u_full = np.full(n_total, np.nan)
        idx = [col[lab] for lab in market.labels]
        s_full[idx] = s_active
        p_full[idx] = p_active
        u_full[idx] = market.baseline_utilities
        rows_t.append(t)
        rows_s.append(s_full)
        rows_p.append(p_full)
        rows_u.append(u_full)
        rows_ub.append(rep)
        rows_ua.append(avg)
        rows_ent.append(ent)

    boundaries = sorted({t for t in events_by_time if 0.0 < t <= sc.t_end} | {sc.t_end})
    apply_events(0.0)
    log_row(0.0)

    prev = 0.0
    for t_next in boundaries:
        seg = t_next - prev
        n_steps = max(1, math.ceil(seg / sc.dt - 1e-12))
        h = seg / n_steps
        for k in range(1, n_steps + 1):
            t_k = t_next if k == n_steps else prev + k * h
            if not equilibrium_engine:
                if noise is not None:
                    scale = math.sqrt(h)
                    step_noise = NoiseSpec(noise[0] * scale, noise[1] * scale)
                    s, u_eff = perturb(s, market.baseline_utilities, step_noise, rng)
                    step_market = market.replace_utilities(u_eff)
                else:
                    step_market = market
                s = _rk4_step(s, step_market, h, rhs)
                if not np.all(np.isfinite(s)):
                    raise IntegrationError(
                        "state became non-finite during integration",
                        last_valid_time=prev + (k - 1) * h,
                    )
                s = np.clip(s, 0.0, None)
                total = s.sum()
                if total <= 0.0:
                    raise IntegrationError(
                        "every share collapsed to zero during integration",
                        last_valid_time=prev + (k - 1) * h,
                    )
                s = s / total
            if k < n_steps:
                log_row(t_k)
        apply_events(t_next)
        log_row(t_next)
        prev = t_next

    return TrajectoryLog(
        labels=labels,
        t=np.array(rows_t),
        shares=np.array(rows_s),
        prefs=np.array(rows_p),
        utilities=np.array(rows_u),
        u_bar=np.array(rows_ub),
        u_avg=np.array(rows_ua),
        entropy=np.array(rows_ent),
    )


# --------------------------------------------------------------------------
# scenario text format

_MARKET_KEYS = {"sigma", "alpha", "products", "utility", "tau", "t_acq"}
_INITIAL_KEYS = {"shares"}
_RUN_KEYS = {"engine", "t_end", "dt", "seed"}
_SECTIONS = {"market", "initial", "run", "events"}

_EVENT_ARGS = {
    "set-utility": {"product", "value"},
    "inject": {"label", "utility", "tau", "t_acq", "seed_share"},
    "noise-on": {"amplitude_s", "amplitude_u"},
    "noise-off": set(),
}


def _fail(source: str, lineno: int, message: str):
    raise ConfigError(f"{source}:{lineno}: {message}")


def _parse_float(source, lineno, text, key):
    try:
        return float(text)
    except ValueError:
        _fail(source, lineno, f"{key} must be a number, got {text!r}")


def _parse_float_list(source, lineno, text, key):
    return [_parse_float(source, lineno, item.strip(), key) for item in text.split(",")]


def _parse_event_line(source, lineno, line):
    tokens = line.split()
    if len(tokens) < 3 or tokens[0] != "at":
        _fail(source, lineno, "event lines look like: at <time> <kind> key=value ...")
    time = _parse_float(source, lineno, tokens[1], "event time")
    kind = tokens[2]
    if kind not in _EVENT_ARGS:
        _fail(source, lineno, f"unknown event kind {kind!r}")
    args = {}
    for token in tokens[3:]:
        if "=" not in token:
            _fail(source, lineno, f"event arguments look like key=value, got {token!r}")
        key, _, value = token.partition("=")
        if key not in _EVENT_ARGS[kind]:
            _fail(source, lineno, f"unknown argument {key!r} for event {kind!r}")
        if key in args:
            _fail(source, lineno, f"duplicate argument {key!r}")
        args[key] = value

    def need(key):
        if key not in args:
            _fail(source, lineno, f"event {kind!r} requires {key}=...")
        return args[key]

    if kind == "set-utility":
        return UtilityStep(
            time=time,
            product=need("product"),
            value=_parse_float(source, lineno, need("value"), "value"),
        )
    if kind == "inject":
        try:
            return InnovationEvent(
                time=time,
                utility=_parse_float(source, lineno, need("utility"), "utility"),
                tau_new=_parse_float(source, lineno, need("tau"), "tau"),
                t_new=_parse_float(source, lineno, need("t_acq"), "t_acq"),
                seed_share=_parse_float(source, lineno, args.get("seed_share", "1e-06"), "seed_share"),
                label=args.get("label"),
            )
        except ConfigError as exc:
            _fail(source, lineno, str(exc))
    if kind == "noise-on":
        return NoiseOn(
            time=time,
            amplitude_s=_parse_float(source, lineno, need("amplitude_s"), "amplitude_s"),
            amplitude_u=_parse_float(source, lineno, need("amplitude_u"), "amplitude_u"),
        )
    return NoiseOff(time=time)


def parse_scenario_text(text: str, source: str = "<string>") -> Scenario:
    """Parse the scenario format; every violation names its line."""
    sections = {"market": {}, "initial": {}, "run": {}}
    key_lines = {}
    events = []
    section = None
    format_version = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            if name not in _SECTIONS:
                _fail(source, lineno, f"unknown section [{name}]")
            section = name
            continue
        if section == "events":
            events.append(_parse_event_line(source, lineno, line))
            continue
        if "=" not in line:
            _fail(source, lineno, f"expected key = value, got {line!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if section is None:
            if key != "format_version":
                _fail(source, lineno, "the file must start with format_version = 1")
            format_version = value
            if value != "1":
                _fail(source, lineno, f"unsupported format_version {value!r}")
            continue
        allowed = {"market": _MARKET_KEYS, "initial": _INITIAL_KEYS, "run": _RUN_KEYS}[section]
        if key not in allowed:
            _fail(source, lineno, f"unknown key {key!r} in section [{section}]")
        if key in sections[section]:
            _fail(source, lineno, f"duplicate key {key!r} in section [{section}]")
        sections[section][key] = value
        key_lines[(section, key)] = lineno

    if format_version is None:
        _fail(source, 1, "missing format_version = 1 header")
    for sect, key in (("market", "sigma"), ("market", "utility"), ("market", "tau"),
                      ("initial", "shares"), ("run", "engine"), ("run", "t_end"),
                      ("run", "dt")):
        if key not in sections[sect]:
            _fail(source, 1, f"missing required key {key!r} in section [{sect}]")

    mk = sections["market"]
    lineof = lambda sect, key: key_lines.get((sect, key), 1)
    utility = _parse_float_list(source, lineof("market", "utility"), mk["utility"], "utility")
    tau = _parse_float_list(source, lineof("market", "tau"), mk["tau"], "tau")
    t_acq = (
        _parse_float_list(source, lineof("market", "t_acq"), mk["t_acq"], "t_acq")
        if "t_acq" in mk
        else None
    )
    labels = None
    if "products" in mk:
        labels = tuple(item.strip() for item in mk["products"].split(","))
    try:
        market = Market(
            baseline_utilities=utility,
            tau=tau,
            t_acq=t_acq,
            sigma=_parse_float(source, lineof("market", "sigma"), mk["sigma"], "sigma"),
            alpha=_parse_float(source, lineof("market", "alpha"), mk.get("alpha", "0"), "alpha"),
            labels=labels,
        )
    except DomainError as exc:
        _fail(source, lineof("market", "utility"), f"invalid market: {exc}")

    rn = sections["run"]
    seed_text = rn.get("seed", "0")
    try:
        seed = int(seed_text)
    except ValueError:
        _fail(source, lineof("run", "seed"), f"seed must be an integer, got {seed_text!r}")
    try:
        return Scenario(
            market=market,
            initial_shares=_parse_float_list(
                source, lineof("initial", "shares"), sections["initial"]["shares"], "shares"
            ),
            t_end=_parse_float(source, lineof("run", "t_end"), rn["t_end"], "t_end"),
            dt=_parse_float(source, lineof("run", "dt"), rn["dt"], "dt"),
            engine=rn["engine"],
            seed=seed,
            events=tuple(events),
        )
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from exc


def parse_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read scenario file {path}: {exc}") from exc
    return parse_scenario_text(text, source=str(path))


def _fmt(x: float) -> str:
    return repr(float(x))


def serialize_scenario(sc: Scenario) -> str:
    """Render the canonical text form (the inverse of ``parse_scenario_text``)."""
    m = sc.market
    lines = [
        "format_version = 1",
        "",
        "[market]",
        f"sigma = {_fmt(m.sigma)}",
        f"alpha = {_fmt(m.alpha)}",
        "products = " + ", ".join(m.labels),
        "utility = " + ", ".join(_fmt(v) for v in m.baseline_utilities),
        "tau = " + ", ".join(_fmt(v) for v in m.tau),
        "t_acq = " + ", ".join(_fmt(v) for v in m.t_acq),
        "",
        "[initial]",
        "shares = " + ", ".join(_fmt(v) for v in sc.initial_shares),
        "",
        "[run]",
        f"engine = {sc.engine}",
        f"t_end = {_fmt(sc.t_end)}",
        f"dt = {_fmt(sc.dt)}",
        f"seed = {sc.seed}",
    ]
    if sc.events:
        lines += ["", "[events]"]
        for ev in sc.events:
            if isinstance(ev, UtilityStep):
                lines.append(
                    f"at {_fmt(ev.time)} set-utility product={ev.product} value={_fmt(ev.value)}"
                )
            elif isinstance(ev, InnovationEvent):
                lines.append(
                    f"at {_fmt(ev.time)} inject label={ev.label} utility={_fmt(ev.utility)} "
                    f"tau={_fmt(ev.tau_new)} t_acq={_fmt(ev.t_new)} seed_share={_fmt(ev.seed_share)}"
                )
            elif isinstance(ev, NoiseOn):
                lines.append(
                    f"at {_fmt(ev.time)} noise-on amplitude_s={_fmt(ev.amplitude_s)} "
                    f"amplitude_u={_fmt(ev.amplitude_u)}"
                )
            else:
                lines.append(f"at {_fmt(ev.time)} noise-off")
    return "\n".join(lines) + "\n"


def write_scenario(sc: Scenario, path) -> None:
    Path(path).write_text(serialize_scenario(sc), encoding="utf-8")


def shipped_scenario(name: str) -> Scenario:
    """Load one of the packaged scenarios ('figure1' or 'figure2')."""
    ref = resources.files("choicedyn").joinpath(f"scenarios/{name}.scn")
    try:
        text = ref.read_text(encoding="utf-8")
    except FileNotFoundError as exc:
        raise ConfigError(f"no shipped scenario named {name!r}") from exc
    return parse_scenario_text(text, source=f"{name}.scn")
