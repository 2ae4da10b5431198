"""Command-line front end.

Every command reads a JSON run configuration (``--config``), applies
``--set key=value`` overrides and writes CSV to ``--out`` (default stdout).
Each CSV starts with a ``#`` line holding the version and the effective
configuration. Exit codes: 0 success, 1 check failure, 2 invalid input,
3 cost guard.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .assembly import ChannelCoefficients, DensityMatrix2, fermi_probability, optimal_pm_probability, \
    plus_probability_at
from .channel2 import compute_second_order
from .channel4 import compute_fourth_order
from .errors import ConfigurationError, CostGuardError, UnsupportedConfiguration
from .field import CavityConfig, DetectorParams, check_time
from .sweeps import (SELECTORS, ScanParams, SweepSeries, cutoff_scan, envelope, evaluate, fit_power_law,
                     normalize_series, time_scan)

EXIT_OK, EXIT_CHECK, EXIT_INPUT, EXIT_COST = 0, 1, 2, 3
SERIES_COLUMNS = ("axis", "value_re", "value_im", "value_abs")
FIT_COLUMNS = ("n_min", "n_max", "slope", "intercept", "r_squared")
NAMED_STATES = {
    "ground": DensityMatrix2.ground,
    "excited": DensityMatrix2.excited_state,
    "plus": DensityMatrix2.plus,
    "minus": DensityMatrix2.minus,
}
KNOWN_KEYS = {
    "L", "N_C", "detector_A", "detector_B", "T", "times", "cutoffs", "coefficient", "fourth_order",
    "rho_A", "rho_B", "fit_window", "reference", "measurement_times", "on_lightcone",
}


class InputError(Exception):
    """Invalid configuration, reported with the offending line when known."""


# configuration


def _line_of(text: str, key: str) -> int | None:
    needle = f'"{key}"'
    for i, line in enumerate(text.splitlines(), 1):
        if needle in line:
            return i
    return None


def _fail(text: str, key: str, msg: str):
    line = _line_of(text, key) if text else None
    where = f"line {line}: " if line else ""
    raise InputError(f"{where}{key}: {msg}")


def _complex(v):
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise ValueError("complex numbers are written as [re, im]")
        return complex(float(v[0]), float(v[1]))
    return complex(float(v))


def _state(v) -> DensityMatrix2:
    if isinstance(v, str):
        if v not in NAMED_STATES:
            raise ValueError(f"unknown state {v!r}; use one of {sorted(NAMED_STATES)} or a 2x2 matrix")
        return NAMED_STATES[v]()
    m = np.array([[_complex(x) for x in row] for row in v])
    return DensityMatrix2.from_matrix(m)


def _grid(v, integer: bool):
    if isinstance(v, dict):
        if integer:
            return list(range(int(v["start"]), int(v["stop"]) + 1, int(v.get("step", 1))))
        return list(np.linspace(float(v["start"]), float(v["stop"]), int(v["num"])))
    return [int(x) if integer else float(x) for x in v]


def _override(raw: dict, assignment: str) -> None:
    key, sep, value = assignment.partition("=")
    if not sep:
        raise InputError(f"--set expects key=value, got {assignment!r}")
    try:
        parsed = json.loads(value)
    except json.JSONDecodeError:
        parsed = value
    target = raw
    parts = key.split(".")
    for p in parts[:-1]:
        target = target.setdefault(p, {})
    target[parts[-1]] = parsed


@dataclass(frozen=True)
class RunConfig:
    raw: dict
    cavity: CavityConfig
    detA: DetectorParams
    detB: DetectorParams
    lam_A: float
    lam_B: float
    T: float

    @classmethod
    def load(cls, path: str | None, overrides=()) -> "RunConfig":
        text = ""
        raw: dict = {}
        if path is not None:
            p = Path(path)
            if not p.is_file():
                raise InputError(f"config file not found: {path}")
            text = p.read_text()
            try:
                raw = json.loads(text)
            except json.JSONDecodeError as err:
                raise InputError(f"line {err.lineno}: malformed JSON ({err.msg})") from None
            if not isinstance(raw, dict):
                raise InputError("config must be a JSON object")
        for o in overrides:
            _override(raw, o)
        return cls.from_dict(raw, text)

    @classmethod
    def from_dict(cls, raw: dict, text: str = "") -> "RunConfig":
        unknown = sorted(set(raw) - KNOWN_KEYS)
        if unknown:
            _fail(text, unknown[0], "unknown key")
        for key in ("L", "detector_A", "detector_B"):
            if key not in raw:
                raise InputError(f"missing required key {key!r}")
        try:
            L = float(raw["L"])
            CavityConfig(L, 1)
        except (ConfigurationError, TypeError, ValueError) as err:
            _fail(text, "L", str(err))
        try:
            n_c = raw.get("N_C", 100)
            if isinstance(n_c, bool) or not isinstance(n_c, int):
                raise ConfigurationError(f"N_C must be an integer, got {n_c!r}")
            cavity = CavityConfig(L, n_c)
        except ConfigurationError as err:
            _fail(text, "N_C", str(err))
        dets, lams = [], []
        for key in ("detector_A", "detector_B"):
            d = raw[key]
            try:
                det = DetectorParams(float(d["x"]), int(d["n"]))
                det.validate(cavity)
                lam = float(d.get("lambda", 0.0))
                if lam < 0 or not math.isfinite(lam):
                    raise ConfigurationError("lambda must be finite and >= 0")
            except (ConfigurationError, KeyError, TypeError, ValueError) as err:
                _fail(text, key, str(err))
            dets.append(det)
            lams.append(lam)
        try:
            T = check_time(raw.get("T", 0.0))
        except (ConfigurationError, TypeError, ValueError) as err:
            _fail(text, "T", str(err))
        cfg = cls(raw, cavity, dets[0], dets[1], lams[0], lams[1], T)
        cfg._validate_optional(text)
        return cfg

    def _validate_optional(self, text: str) -> None:
        checks = {
            "times": lambda: self.times(),
            "cutoffs": lambda: self.cutoffs(),
            "coefficient": lambda: self.coefficient(),
            "rho_A": lambda: self.state("rho_A"),
            "rho_B": lambda: self.state("rho_B"),
            "fit_window": lambda: self.fit_window(),
            "measurement_times": lambda: self.measurement_times(),
            "reference": lambda: self.raw["reference"],
        }
        for key, check in checks.items():
            if key in self.raw:
                try:
                    check()
                except (ConfigurationError, InputError, KeyError, TypeError, ValueError) as err:
                    _fail(text, key, str(err))

    def snapshot(self) -> str:
        return json.dumps(self.raw, sort_keys=True, separators=(",", ":"))

    def params(self, T: float | None = None) -> ScanParams:
        return ScanParams(self.cavity, self.detA, self.detB, self.T if T is None else T)

    @property
    def distance(self) -> float:
        return abs(self.detA.x - self.detB.x)

    def times(self):
        t = _grid(self.raw["times"], integer=False)
        for v in t:
            check_time(v)
        if any(b <= a for a, b in zip(t, t[1:])):
            raise ConfigurationError("times must be strictly increasing")
        return t

    def cutoffs(self):
        c = _grid(self.raw["cutoffs"], integer=True) if "cutoffs" in self.raw else [self.cavity.N_C]
        if not c or c[0] < 1 or any(b <= a for a, b in zip(c, c[1:])):
            raise ConfigurationError("cutoffs must be strictly increasing integers >= 1")
        return c

    def coefficient(self) -> str:
        c = self.raw.get("coefficient", "A4")
        if c not in SELECTORS:
            raise ConfigurationError(f"unknown coefficient {c!r}; choose from {', '.join(SELECTORS)}")
        return c

    def state(self, key: str) -> DensityMatrix2:
        return _state(self.raw.get(key, "ground"))

    def fit_window(self):
        if "fit_window" in self.raw:
            lo, hi = (float(v) for v in self.raw["fit_window"])
            if lo > hi:
                raise ConfigurationError("fit_window must be [low, high]")
            return lo, hi
        n = self.detB.n
        return float(2 * n), float(50 * n)

    def measurement_times(self):
        return _grid(self.raw["measurement_times"], integer=False)

    def scan_T(self) -> float:
        return self.distance if self.raw.get("on_lightcone") else self.T

    def reference_value(self, coefficient: str) -> float | None:
        ref = self.raw.get("reference")
        if ref is None:
            return None
        if isinstance(ref, dict):
            cav = self.cavity.with_cutoff(int(ref.get("N_C", 100)))
            T = float(ref["T"]) if "T" in ref else 1.5 * self.distance
            return abs(evaluate(coefficient, ScanParams(cav, self.detA, self.detB, T)))
        return float(ref)


# output


def _fmt(x: float) -> str:
    return repr(float(x))


class Output:
    """Collects CSV text and writes it once, to a file or stdout."""

    def __init__(self, cfg_snapshot: str, command: str):
        self.buf = io.StringIO()
        self.buf.write(f"# cavsignal {__version__} command={command} config={cfg_snapshot}\n")
        self.writer = csv.writer(self.buf, lineterminator="\n")

    def row(self, *cells):
        self.writer.writerow(cells)

    def text(self) -> str:
        return self.buf.getvalue()


def _emit(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _series_csv(series: SweepSeries, snapshot: str, command: str) -> str:
    o = Output(snapshot, command)
    o.row(*SERIES_COLUMNS)
    for a, v in zip(series.axis, series.values):
        o.row(_fmt(a), _fmt(v.real), _fmt(v.imag), _fmt(abs(v)))
    return o.text()


def _fit_csv(fit, snapshot: str, command: str) -> str:
    o = Output(snapshot, command)
    o.row(*FIT_COLUMNS)
    o.row(_fmt(fit.window[0]), _fmt(fit.window[1]), _fmt(fit.slope), _fmt(fit.intercept), _fmt(fit.r_squared))
    return o.text()


def _svg_path(args) -> Path | None:
    if not args.svg:
        return None
    if args.out is None:
        raise InputError("--svg needs --out (the figure is written next to the CSV)")
    return Path(args.out).with_suffix(".svg")


def _plot(args, series: SweepSeries, ylabel: str, *, loglog=False, lightcone=None):
    path = _svg_path(args)
    if path is None:
        return
    from .plotting import plot_series

    xlabel = "cutoff N_C" if series.axis_label == "N_C" else "switching time T"
    plot_series(path, series.axis, series.magnitude, xlabel=xlabel, ylabel=ylabel, loglog=loglog,
                lightcone=lightcone)


def read_series_csv(path: str) -> SweepSeries:
    p = Path(path)
    if not p.is_file():
        raise InputError(f"series file not found: {path}")
    rows = [r for r in csv.reader(p.read_text().splitlines()) if r and not r[0].startswith("#")]
    if not rows or tuple(rows[0]) != SERIES_COLUMNS:
        raise InputError(f"{path}: expected header {','.join(SERIES_COLUMNS)}")
    try:
        axis = [float(r[0]) for r in rows[1:]]
        values = [complex(float(r[1]), float(r[2])) for r in rows[1:]]
    except (ValueError, IndexError) as err:
        raise InputError(f"{path}: malformed row ({err})") from None
    return SweepSeries("N_C", axis, values, {"source": str(p.name)})


# commands


def cmd_coeffs(args, cfg: RunConfig) -> int:
    s = compute_second_order(cfg.cavity, cfg.detA, cfg.detB, cfg.T)
    o = Output(cfg.snapshot(), "coeffs")
    o.row("coefficient", "value_re", "value_im", "value_abs")
    for name, v in s.as_dict().items():
        v = complex(v)
        o.row(name, _fmt(v.real), _fmt(v.imag), _fmt(abs(v)))
    if cfg.raw.get("fourth_order"):
        f = compute_fourth_order(cfg.cavity, cfg.detA, cfg.detB, cfg.T)
        for name in ("A4", "B4", "P4"):
            v = getattr(f, name)
            o.row(name, _fmt(v), _fmt(0.0), _fmt(abs(v)))
    _emit(o.text(), args.out)
    return EXIT_OK


def _scan(args, cfg: RunConfig, kind: str) -> SweepSeries:
    coefficient = cfg.coefficient()
    if kind == "time":
        if "times" not in cfg.raw:
            raise InputError("a time scan needs 'times'")
        return time_scan(coefficient, cfg.params(), cfg.times(), threads=args.threads)
    return cutoff_scan(coefficient, cfg.params(cfg.scan_T()), cfg.cutoffs())


def cmd_sweep(args, cfg: RunConfig) -> int:
    series = _scan(args, cfg, args.kind)
    _emit(_series_csv(series, cfg.snapshot(), f"sweep-{args.kind}"), args.out)
    lightcone = cfg.distance if args.kind == "time" else None
    _plot(args, series, f"|{cfg.coefficient()}|", lightcone=lightcone)
    return EXIT_OK


def _envelope_series(args, cfg: RunConfig | None):
    if args.series:
        env = envelope(read_series_csv(args.series))
        snapshot = json.dumps({"series": Path(args.series).name}, sort_keys=True, separators=(",", ":"))
        return env, snapshot
    env = envelope(_scan(args, cfg, "cutoff"))
    ref = cfg.reference_value(cfg.coefficient())
    if ref is not None:
        env = normalize_series(env, ref)
    return env, cfg.snapshot()


def cmd_envelope(args, cfg: RunConfig | None) -> int:
    env, snapshot = _envelope_series(args, cfg)
    _emit(_series_csv(env, snapshot, "envelope"), args.out)
    _plot(args, env, "envelope", loglog=True)
    return EXIT_OK


def cmd_fit(args, cfg: RunConfig | None) -> int:
    env, snapshot = _envelope_series(args, cfg)
    if args.window:
        window = tuple(args.window)
    elif cfg is not None:
        window = cfg.fit_window()
    else:
        window = None
    fit = fit_power_law(env, window)
    fit_text = _fit_csv(fit, snapshot, "fit")
    if args.out is None:
        sys.stdout.write(fit_text)
    else:
        out = Path(args.out)
        out.write_text(_series_csv(env, snapshot, "fit-series"))
        out.with_name(out.stem + "_fit.csv").write_text(fit_text)
    _plot(args, env, "envelope", loglog=True)
    return EXIT_OK


def _channel(cfg: RunConfig, fourth: bool) -> ChannelCoefficients:
    s = compute_second_order(cfg.cavity, cfg.detA, cfg.detB, cfg.T)
    f = compute_fourth_order(cfg.cavity, cfg.detA, cfg.detB, cfg.T) if fourth else None
    return ChannelCoefficients(s, cfg.lam_A, cfg.lam_B, f)


def cmd_fermi(args, cfg: RunConfig) -> int:
    if not cfg.state("rho_B").is_ground():
        raise UnsupportedConfiguration("Fermi probabilities need Bob in the ground state")
    coeffs = _channel(cfg, fourth=True)
    o = Output(cfg.snapshot(), "fermi")
    o.row("quantity", "value", "in_range")
    pe = fermi_probability("excited", coeffs)
    pg = fermi_probability("ground", coeffs)
    o.row("p_excited", _fmt(pe.value), str(pe.in_range).lower())
    o.row("p_ground", _fmt(pg.value), str(pg.in_range).lower())
    o.row("difference", _fmt(pe.value - pg.value), "")
    _emit(o.text(), args.out)
    return EXIT_OK


def cmd_pm(args, cfg: RunConfig) -> int:
    if not cfg.state("rho_B").is_ground():
        raise UnsupportedConfiguration("the |+-> coding analysis needs Bob in the ground state")
    coeffs = _channel(cfg, fourth=False)
    if "measurement_times" in cfg.raw:
        rhoA = cfg.state("rho_A") if "rho_A" in cfg.raw else DensityMatrix2.plus()
        times = cfg.measurement_times()
        values = [plus_probability_at(rhoA, coeffs, t) for t in times]
        series = SweepSeries("t", times, values, {})
        _emit(_series_csv(series, cfg.snapshot(), "pm"), args.out)
        _plot(args, series, "p(+)")
        return EXIT_OK
    o = Output(cfg.snapshot(), "pm")
    o.row("quantity", "value")
    plus, minus = optimal_pm_probability("+", coeffs), optimal_pm_probability("-", coeffs)
    o.row("p_plus_given_plus", _fmt(plus))
    o.row("p_plus_given_minus", _fmt(minus))
    o.row("difference", _fmt(plus - minus))
    _emit(o.text(), args.out)
    return EXIT_OK


def cmd_oracle_check(args, cfg: RunConfig | None) -> int:
    from .oracle.checks import run_checks

    results = run_checks(tolerance_scale=args.tolerance_scale)
    o = Output(cfg.snapshot() if cfg else "{}", "oracle-check")
    o.row("check", "error", "tolerance", "status")
    for r in results:
        o.row(r.name, f"{r.error:.3e}", f"{r.tolerance:.1e}", "pass" if r.passed else "FAIL")
    _emit(o.text(), args.out)
    return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK


COMMANDS = {
    "coeffs": cmd_coeffs,
    "sweep": cmd_sweep,
    "envelope": cmd_envelope,
    "fit": cmd_fit,
    "fermi": cmd_fermi,
    "pm": cmd_pm,
    "oracle-check": cmd_oracle_check,
}
CONFIG_OPTIONAL = {"envelope", "fit", "oracle-check"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cavsignal", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config field (dotted keys, JSON values)")
    common.add_argument("--out", help="output CSV path (default stdout)")
    common.add_argument("--threads", type=int, default=1, help="worker threads for time scans")
    common.add_argument("--svg", action="store_true", help="also write an SVG plot next to --out")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("coeffs", parents=[common], help="second (and fourth) order coefficients")
    p = sub.add_parser("sweep", parents=[common], help="cutoff or switching-time scan")
    p.add_argument("--kind", choices=("cutoff", "time"), default="cutoff")
    for name, text in (("envelope", "max over higher cutoffs"), ("fit", "power-law fit of the envelope")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--series", help="read the series from a CSV instead of computing it")
        if name == "fit":
            p.add_argument("--window", type=float, nargs=2, metavar=("N_MIN", "N_MAX"))
    sub.add_parser("fermi", parents=[common], help="excitation probabilities for |e> and |g> inputs")
    sub.add_parser("pm", parents=[common], help="|+-> coding detection probabilities")
    p = sub.add_parser("oracle-check", parents=[common], help="run the oracle concordance suite")
    p.add_argument("--tolerance-scale", type=float, default=1.0,
                   help="multiply every tolerance (test hook; 0 forces failures)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.threads < 1:
            raise InputError("--threads must be >= 1")
        needs_config = args.command not in CONFIG_OPTIONAL or (
            args.command in ("envelope", "fit") and not getattr(args, "series", None)
        )
        if args.config is None and needs_config:
            raise InputError(f"{args.command} needs --config")
        cfg = RunConfig.load(args.config, args.set) if args.config or args.set else None
        return COMMANDS[args.command](args, cfg)
    except (InputError, ConfigurationError, UnsupportedConfiguration) as err:
        print(f"cavsignal: error: {err}", file=sys.stderr)
        return EXIT_INPUT
    except CostGuardError as err:
        print(f"cavsignal: cost guard: {err}", file=sys.stderr)
        return EXIT_COST


if __name__ == "__main__":
    sys.exit(main())
