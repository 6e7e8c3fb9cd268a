"""Experiment plumbing: run configs, spec parsing, CSV rows, sweeps and validation.

Exit codes are a stable contract::

    0  run completed / validation passed
    1  model or protocol violation, or validation failed
    2  stopped before completion (horizon reached, or the protocol went quiet)
    64 usage error (bad config, unreadable input)
"""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import itertools
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from . import lowerbound as lb
from . import rng as _rng
from .adversaries import FreeEdgeAdversary, IdleCutterAdversary, ObliviousAdversary
from .engine import ExecutionReport, Kind, run
from .errors import ConfigurationError, ConstructionError, DynGossipError, ModelViolation, ProtocolBug
from .graph import (
    GeneratorSpec,
    GraphStream,
    first_sigma_violation,
    generate,
    is_connected,
    parse_generator_spec,
    read_trace,
    format_trace,
)
from .protocols import PROTOCOLS, ObliviousMultiSource

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_HORIZON = 2
EXIT_USAGE = 64

REPORT_COLUMNS = (
    "run_id", "protocol", "adversary", "n", "k", "s", "sigma", "seed", "rounds", "completed",
    "msgs_total", "msgs_token", "msgs_request", "msgs_completeness", "msgs_center", "msgs_walk",
    "tc", "amortized", "residual_alpha1",
)
ECHO_COLUMNS = ("placement", "horizon", "completion_round")


@dataclass(frozen=True)
class RunConfig:
    protocol: str
    adversary: str
    k: int
    seed: int
    n: int | None = None
    s: int | None = None
    placement: str | None = None
    sigma: int = 1
    horizon: int | None = None
    alphas: tuple = (1.0,)
    c_f: float = 1.0
    c_gamma: float = 1.0
    c_ell: float = 1.0
    f: int | None = None
    gamma: int | None = None
    ell: int | None = None
    s_threshold: float | None = None
    walk_rule: str = "prose"
    output: str | None = None
    events: str | None = None

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise ConfigurationError(f"unknown protocol {self.protocol!r}; expected one of {sorted(PROTOCOLS)}")
        if self.seed is None:
            raise ConfigurationError("seed is required")
        if self.seed < 0:
            raise ConfigurationError("seed must be >= 0")
        if self.k < 0:
            raise ConfigurationError("k must be >= 0")
        if self.n is not None and self.n < 1:
            raise ConfigurationError("n must be >= 1")
        if self.s is not None and self.s < 1:
            raise ConfigurationError("s must be >= 1")
        if self.sigma < 1:
            raise ConfigurationError("sigma must be >= 1")
        if self.horizon is not None and self.horizon < 1:
            raise ConfigurationError("horizon must be >= 1")
        if any(a < 0 for a in self.alphas):
            raise ConfigurationError("alpha values must be >= 0")
        if min(self.c_f, self.c_gamma, self.c_ell) <= 0:
            raise ConfigurationError("oblivious multipliers must be > 0")

    def echo(self) -> str:
        """Canonical text of every field that affects the outcome."""
        skip = {"output", "events"}
        return ";".join(f"{f.name}={getattr(self, f.name)!r}" for f in dataclasses.fields(self) if f.name not in skip)

    @property
    def run_id(self) -> str:
        return hashlib.sha256(self.echo().encode()).hexdigest()[:12]

    @property
    def placement_spec(self) -> str:
        if self.placement:
            return self.placement
        return f"uniform:{self.s}" if self.s else "single:0"


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}
_INT_KEYS = {"k", "seed", "n", "s", "sigma", "horizon", "f", "gamma", "ell"}
_FLOAT_KEYS = {"c_f", "c_gamma", "c_ell", "s_threshold"}


def coerce(key: str, value):
    """Turn a textual config value into the field's type."""
    key = key.replace("-", "_")
    if key not in _FIELDS:
        raise ConfigurationError(f"unknown config key {key!r}")
    if value is None or not isinstance(value, str):
        return key, value
    text = value.strip()
    try:
        if key in _INT_KEYS:
            return key, int(text)
        if key in _FLOAT_KEYS:
            return key, float(text)
        if key == "alphas":
            return key, tuple(float(a) for a in text.replace(",", " ").split())
    except ValueError:
        raise ConfigurationError(f"bad value for {key}: {value!r}") from None
    return key, text


def parse_config_text(text: str) -> dict:
    """``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"config line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        k, v = coerce(key, value)
        out[k] = v
    return out


def load_config(path: str | None, overrides: dict) -> RunConfig:
    values: dict = {}
    if path:
        try:
            with open(path) as fh:
                values.update(parse_config_text(fh.read()))
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from None
    for key, value in overrides.items():
        if value is not None:
            k, v = coerce(key, value)
            values[k] = v
    missing = [key for key in ("protocol", "adversary", "k", "seed") if key not in values]
    if missing:
        raise ConfigurationError(f"missing required config keys: {', '.join(missing)}")
    try:
        return RunConfig(**values)
    except TypeError as exc:
        raise ConfigurationError(str(exc)) from None


def build_adversary(cfg: RunConfig):
    """Adversary from ``oblivious:<trace-file|generator-spec>``, ``freeedge[:p]`` or ``idlecut:<sigma>``."""
    kind, _, arg = cfg.adversary.partition(":")
    if kind == "oblivious":
        if not arg:
            raise ConfigurationError("oblivious adversary needs a trace file or generator spec")
        if os.path.isfile(arg):
            trace = read_trace(arg)
            if cfg.n is not None and cfg.n != trace.n:
                raise ConfigurationError(f"config n={cfg.n} but trace has n={trace.n}")
            return ObliviousAdversary(trace, freeze=True, name=f"oblivious:{os.path.basename(arg)}")
        if cfg.n is None and arg.split(",", 1)[0].strip() != "trace-file":
            raise ConfigurationError("n is required with a generator spec")
        spec = parse_generator_spec(arg, cfg.n or 0, cfg.sigma, cfg.seed)
        if spec.family == "trace-file":
            trace = read_trace(spec.path)
            if cfg.n is not None and cfg.n != trace.n:
                raise ConfigurationError(f"config n={cfg.n} but trace has n={trace.n}")
            return ObliviousAdversary(trace, freeze=True, name=f"oblivious:{os.path.basename(spec.path)}")
        return ObliviousAdversary(GraphStream(spec))
    if cfg.n is None:
        raise ConfigurationError(f"n is required for adversary {kind!r}")
    if kind == "freeedge":
        p = float(arg) if arg else 0.25
        return FreeEdgeAdversary(cfg.n, cfg.k, p=p, seed=cfg.seed)
    if kind == "idlecut":
        sigma = int(arg) if arg else cfg.sigma
        return IdleCutterAdversary(cfg.n, sigma, seed=cfg.seed)
    raise ConfigurationError(f"unknown adversary {cfg.adversary!r}")


def parse_placement(spec: str, n: int, k: int, seed: int = 0) -> dict[int, frozenset]:
    """Token -> holders from ``single:<node>``, ``uniform:<s>`` or ``file:<path>``.

    ``uniform:s`` draws s distinct sources from the placement stream and
    deals tokens to them round-robin in ascending source order.
    """
    kind, _, arg = spec.partition(":")
    try:
        if kind == "single":
            v = int(arg or 0)
            if not 0 <= v < n:
                raise ConfigurationError(f"source {v} outside 0..{n - 1}")
            return {t: frozenset([v]) for t in range(k)}
        if kind == "uniform":
            s = int(arg)
            if not 1 <= s <= n:
                raise ConfigurationError(f"uniform placement needs 1 <= s <= n, got {s}")
            if k and s > k:
                raise ConfigurationError(f"uniform:{s} needs at least {s} tokens, got k={k}")
            g = _rng.stream(seed, _rng.PLACEMENT)
            sources = sorted(int(v) for v in g.choice(n, size=s, replace=False))
            return {t: frozenset([sources[t % s]]) for t in range(k)}
    except ValueError:
        raise ConfigurationError(f"bad placement {spec!r}") from None
    if kind == "file":
        return read_placement(arg)
    raise ConfigurationError(f"unknown placement {spec!r}")


def read_placement(path: str) -> dict[int, frozenset]:
    """``token <id> at <node>`` lines; repeating a token gives it several holders."""
    out: dict[int, set] = {}
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ConfigurationError(f"cannot read placement {path}: {exc}") from None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        if len(tok) != 4 or tok[0] != "token" or tok[2] != "at":
            raise ConfigurationError(f"{path}:{lineno}: expected 'token <id> at <node>'")
        try:
            out.setdefault(int(tok[1]), set()).add(int(tok[3]))
        except ValueError:
            raise ConfigurationError(f"{path}:{lineno}: expected integers") from None
    return {t: frozenset(v) for t, v in out.items()}


def build_protocol(cfg: RunConfig):
    cls = PROTOCOLS[cfg.protocol]
    if cls is ObliviousMultiSource:
        return cls(
            c_f=cfg.c_f, c_gamma=cfg.c_gamma, c_ell=cfg.c_ell, f=cfg.f, gamma=cfg.gamma,
            ell=cfg.ell, s_threshold=cfg.s_threshold, walk_rule=cfg.walk_rule,
        )
    return cls()


def columns(cfg: RunConfig) -> tuple:
    extra = tuple(f"residual_alpha{_fmt(a)}" for a in cfg.alphas if a != 1.0)
    return REPORT_COLUMNS + extra + ECHO_COLUMNS


def _fmt(x) -> str:
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, float):
        return str(int(x)) if x.is_integer() else f"{x:.6f}".rstrip("0")
    return str(x)


def report_row(report: ExecutionReport, cfg: RunConfig) -> dict:
    pk = report.per_kind
    row = {
        "run_id": cfg.run_id,
        "protocol": report.protocol,
        "adversary": cfg.adversary,
        "n": report.n,
        "k": report.k,
        "s": report.s,
        "sigma": cfg.sigma,
        "seed": cfg.seed,
        "rounds": report.rounds,
        "completed": int(report.completed),
        "msgs_total": report.total,
        "msgs_token": pk[Kind.TOKEN],
        "msgs_request": pk[Kind.REQUEST],
        "msgs_completeness": pk[Kind.COMPLETENESS],
        "msgs_center": pk[Kind.CENTER],
        "msgs_walk": pk[Kind.WALK],
        "tc": report.tc,
        "amortized": f"{report.amortized:.6f}",
        "residual_alpha1": _fmt(report.residual(1.0)),
    }
    for a in cfg.alphas:
        if a != 1.0:
            row[f"residual_alpha{_fmt(a)}"] = _fmt(report.residual(a))
    row["placement"] = cfg.placement_spec
    row["horizon"] = report.horizon
    row["completion_round"] = "" if report.completion_round is None else report.completion_round
    return {k: _fmt(v) for k, v in row.items()}


def format_rows(rows: Iterable[dict], cols: Sequence[str], header: bool) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(cols), lineterminator="\n")
    if header:
        w.writeheader()
    for row in rows:
        w.writerow(row)
    return buf.getvalue()


def append_rows(path: str | None, rows: list[dict], cols: Sequence[str], out=None) -> None:
    """Append to a CSV file, writing the header only if the file is new or empty."""
    if path is None or path == "-":
        (out or sys.stdout).write(format_rows(rows, cols, header=True))
        return
    fresh = not os.path.exists(path) or os.path.getsize(path) == 0
    if not fresh:
        with open(path, newline="") as fh:
            existing = next(csv.reader(fh), [])
        if existing != list(cols):
            raise ConfigurationError(f"{path} has different columns; refusing to append")
    with open(path, "a", newline="") as fh:
        fh.write(format_rows(rows, cols, header=fresh))


def format_events(events: Iterable[tuple]) -> str:
    return "".join(",".join(str(x) for x in e) + "\n" for e in events)


@dataclass
class RunOutcome:
    code: int
    row: dict | None = None
    events: list | None = None
    error: str | None = None
    report: ExecutionReport | None = field(default=None, repr=False)


def execute(cfg: RunConfig, want_events: bool = False) -> RunOutcome:
    """Run one config; never raises for model, protocol or usage problems."""
    try:
        adversary = build_adversary(cfg)
        n = adversary.n
        placement = parse_placement(cfg.placement_spec, n, cfg.k, cfg.seed)
        protocol = build_protocol(cfg)
        events = [] if want_events else None
        report = run(protocol, adversary, cfg.k, placement, horizon=cfg.horizon, seed=cfg.seed, events=events)
    except (ModelViolation, ProtocolBug, ConstructionError) as exc:
        return RunOutcome(EXIT_VIOLATION, error=f"{type(exc).__name__}: {exc}")
    except (ConfigurationError, OSError) as exc:
        return RunOutcome(EXIT_USAGE, error=f"{type(exc).__name__}: {exc}")
    except DynGossipError as exc:
        return RunOutcome(EXIT_VIOLATION, error=f"{type(exc).__name__}: {exc}")
    if cfg.n is None:
        cfg = dataclasses.replace(cfg, n=n)
    row = report_row(report, cfg)
    return RunOutcome(EXIT_OK if report.completed else EXIT_HORIZON, row, events, report=report)


def run_command(cfg: RunConfig, out=None, err=None) -> int:
    err = err or sys.stderr
    outcome = execute(cfg, want_events=cfg.events is not None)
    if outcome.error:
        err.write(outcome.error + "\n")
        return outcome.code
    append_rows(cfg.output, [outcome.row], columns(cfg), out)
    if cfg.events:
        with open(cfg.events, "w") as fh:
            fh.write(format_events(outcome.events))
    if outcome.code == EXIT_HORIZON:
        rep = outcome.report
        why = "horizon reached" if rep.rounds >= rep.horizon else "protocol went quiet"
        err.write(f"stopped after {rep.rounds} rounds without completing ({why})\n")
    return outcome.code


def parse_axis(text: str) -> list[str]:
    """Comma-separated values; ``a..b`` expands to an inclusive integer range."""
    values = []
    for part in (p.strip() for p in text.split(",")):
        if not part:
            continue
        if ".." in part:
            lo, hi = part.split("..", 1)
            try:
                values.extend(str(v) for v in range(int(lo), int(hi) + 1))
            except ValueError:
                raise ConfigurationError(f"bad range {part!r}") from None
        else:
            values.append(part)
    if not values:
        raise ConfigurationError(f"empty axis {text!r}")
    return values


def resolve(value: str, n: int | None) -> int:
    """Integer or a multiple of n such as ``n``, ``4n``."""
    v = value.strip()
    try:
        if v.endswith("n"):
            if n is None:
                raise ConfigurationError(f"{value!r} needs n")
            mult = v[:-1]
            return int(mult or 1) * n
        return int(v)
    except ValueError:
        raise ConfigurationError(f"bad axis value {value!r}") from None


AXIS_ORDER = ("n", "k", "s", "seed")


def expand_sweep(template: RunConfig, axes: dict[str, list[str]]) -> list[RunConfig]:
    """Cartesian product in the fixed order n, k, s, seed."""
    for name in axes:
        if name not in AXIS_ORDER:
            raise ConfigurationError(f"cannot sweep over {name!r}")
        if not axes[name]:
            raise ConfigurationError(f"axis {name} is empty")
    names = [a for a in AXIS_ORDER if a in axes]
    configs = []
    for combo in itertools.product(*(axes[a] for a in names)):
        raw = dict(zip(names, combo))
        n = resolve(raw["n"], None) if "n" in raw else template.n
        values = {}
        for a in names:
            values[a] = resolve(raw[a], n)
        configs.append(dataclasses.replace(template, **values))
    return configs


def _execute_quiet(cfg: RunConfig) -> RunOutcome:
    outcome = execute(cfg)
    outcome.report = None
    return outcome


def sweep_command(template: RunConfig, axes: dict[str, list[str]], jobs: int = 1, out=None, err=None) -> int:
    """Run every grid point and write rows in grid order.

    The first failing point (in grid order) stops the sweep; the rows before
    it are still written.
    """
    err = err or sys.stderr
    configs = expand_sweep(template, axes)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_execute_quiet, configs))
    else:
        outcomes = []
        for cfg in configs:
            outcomes.append(_execute_quiet(cfg))
            if outcomes[-1].error:
                break
    rows = []
    code = EXIT_OK
    for cfg, outcome in zip(configs, outcomes):
        if outcome.error:
            append_rows(template.output, rows, columns(template), out)
            err.write(f"sweep aborted at n={cfg.n} k={cfg.k} s={cfg.s} seed={cfg.seed}: {outcome.error}\n")
            return outcome.code
        rows.append(outcome.row)
        if outcome.code == EXIT_HORIZON:
            code = EXIT_HORIZON
    append_rows(template.output, rows, columns(template), out)
    return code


def validate_command(path: str, sigma: int, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        trace = read_trace(path)
    except (ConfigurationError, OSError) as exc:
        err.write(f"{type(exc).__name__}: {exc}\n")
        return EXIT_USAGE
    if sigma < 1:
        err.write("sigma must be >= 1\n")
        return EXIT_USAGE
    ok = True
    for r in range(1, trace.horizon + 1):
        connected = is_connected(trace.edges(r), trace.n)
        ok &= connected
        out.write(f"round {r}: {'connected' if connected else 'DISCONNECTED'}\n")
    bad = first_sigma_violation(trace, sigma)
    if bad is None:
        out.write(f"sigma={sigma}: stable\n")
    else:
        (u, v), r = bad
        ok = False
        out.write(f"sigma={sigma}: VIOLATED by edge {u} {v} inserted in round {r}\n")
    out.write("PASS\n" if ok else "FAIL\n")
    return EXIT_OK if ok else EXIT_VIOLATION


def gen_trace_command(spec: GeneratorSpec, horizon: int, output: str | None, out=None) -> int:
    text = format_trace(generate(spec, horizon))
    if output is None or output == "-":
        (out or sys.stdout).write(text)
    else:
        with open(output, "w") as fh:
            fh.write(text)
    return EXIT_OK


def lowerbound_command(
    ns: Sequence[int], k: int | None, p: float, c: float, trials: int, seed: int, output: str | None, out=None, err=None
) -> int:
    """Sparse/dense free-graph statistics per n; k defaults to n."""
    err = err or sys.stderr
    rows = []
    stats = []
    for n in ns:
        st = lb.sparse_connectivity_experiment(n, k if k is not None else n, p, c, trials, seed)
        stats.append(st)
        rows.extend({key: _fmt(v) for key, v in row.items()} for row in st.rows)
    append_rows(output, rows, lb.LAB_COLUMNS, out)
    for st in stats:
        lo, hi = st.connected_ci
        err.write(
            f"n={st.n} k={st.k}: sparse connected {st.connected_fraction:.3f} [{lo:.3f}, {hi:.3f}] "
            f"(beta={st.beta}), dense max components {st.max_components}, "
            f"phi0 bound held in {st.phi0_ok_fraction:.3f}\n"
        )
    if len(stats) > 1:
        a = lb.fit_log_growth([s.n for s in stats], [s.max_components for s in stats])
        err.write(f"fitted a = {a:.3f} (max components <= a * log2 n)\n")
    return EXIT_OK
