"""Command-line front end: single-shot runs, parameter sweeps and verification suites.

Usage:
  python3 -m cvtele --mode single --input coherent:1+0i --q 0.5 --g 1 --beta 0.3-0.2i
  python3 -m cvtele --mode sweep --input coherent:1+0i --g 1 --q-grid 0:0.9:10 --method quadrature
  python3 -m cvtele --mode verify --suite eq7-commutation --q 0.3333 --N 80
  python3 -m cvtele --config run.cfg --out results.csv

Exit codes: 0 success (warnings allowed), 1 configuration or input error,
2 verification-suite failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import re
import sys
import traceback
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .analytic import squeeze_convert
from .config import APP_NAME, LOG_LEVEL, QUAD_NODES, THREADS
from .errors import ConfigError, CvTeleError
from .fock import FockVector, cat_state, coherent_state, fidelity, from_amplitudes, number_state
from .measurement import SweepPoint, sweep
from .transfer import TeleportParams, converged_outcome
from .verify import SUITES, SuiteSettings, run_suites

logger = logging.getLogger(__name__)

MODES = ("single", "sweep", "verify")
FORMATS = ("csv", "json")
METHODS = ("quadrature", "montecarlo")
SWEEP_COLUMNS = ["q", "g", "N", "fidelity", "stderr", "n_samples", "phi_m2", "converged"]

_NUMBER = r"(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?"
_COMPLEX_RE = re.compile(
    rf"^(?P<re>[+-]?{_NUMBER})(?P<im>[+-]{_NUMBER})i$"
    rf"|^(?P<real_only>[+-]?{_NUMBER})$"
    rf"|^(?P<imag_only>[+-]?{_NUMBER})i$"
)

InputFactory = Callable[[int], Tuple[FockVector, Optional[complex]]]


@dataclass(frozen=True)
class RunConfig:
    """Everything a run needs; artifacts embed it so a run can be replayed."""

    mode: str = "single"
    input_spec: str = "coherent:1+0i"
    q: Optional[float] = None
    s: Optional[float] = None
    db: Optional[float] = None
    q_grid: Optional[str] = None
    g: str = "1"
    g_grid: Optional[str] = None
    N: int = 40
    beta: str = "0+0i"
    samples: int = 2000
    quad_nodes: int = QUAD_NODES
    method: str = "quadrature"
    suite: str = "all"
    seed: int = 0
    out: Optional[str] = None
    format: str = "csv"
    threads: int = THREADS
    log_level: str = LOG_LEVEL

    def to_dict(self) -> Dict[str, object]:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, object]) -> "RunConfig":
        unknown = set(data) - set(_FIELD_TYPES)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        return cls(**{key: _coerce(key, value) for key, value in data.items()}).validate()

    def validate(self) -> "RunConfig":
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {', '.join(MODES)}, got {self.mode!r}")
        if self.format not in FORMATS:
            raise ConfigError(f"format must be csv or json, got {self.format!r}")
        if self.method not in METHODS:
            raise ConfigError(f"method must be quadrature or montecarlo, got {self.method!r}")
        given = [name for name in ("q", "s", "db", "q_grid") if getattr(self, name) is not None]
        if len(given) != 1:
            raise ConfigError(f"give exactly one of --q, --s, --db or --q-grid (got {', '.join(given) or 'none'})")
        if self.q_grid is not None and self.mode != "sweep":
            raise ConfigError("--q-grid is only valid in sweep mode")
        if self.N < 8:
            raise ConfigError(f"cutoff N must be >= 8, got {self.N}")
        if self.samples < 1 or self.quad_nodes < 2 or self.threads < 1:
            raise ConfigError("sample counts, quadrature nodes and threads must be positive")
        if self.suite != "all" and self.suite not in SUITES:
            raise ConfigError(f"unknown suite {self.suite!r}; choose from all, {', '.join(SUITES)}")
        parse_input_spec(self.input_spec)
        parse_complex(self.beta)
        if self.g != "match-q":
            _parse_gain(self.g)
        if self.q_grid is not None:
            parse_grid(self.q_grid)
        if self.g_grid is not None:
            parse_grid(self.g_grid)
        return self


_FIELD_TYPES: Dict[str, type] = {
    "N": int, "samples": int, "quad_nodes": int, "seed": int, "threads": int,
    "q": float, "s": float, "db": float,
}
_FIELD_TYPES.update({f.name: str for f in dataclasses.fields(RunConfig) if f.name not in _FIELD_TYPES})


def _coerce(name: str, value: object) -> object:
    if value is None:
        return None
    kind = _FIELD_TYPES[name]
    try:
        if kind is int and isinstance(value, float) and not value.is_integer():
            raise ValueError(value)
        return kind(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} expects {kind.__name__}, got {value!r}") from None


def parse_complex(text: str) -> complex:
    """Parse ``a+bi``, ``a-bi``, ``a`` or ``bi``; anything else is rejected."""
    match = _COMPLEX_RE.match(str(text).strip())
    if not match:
        raise ConfigError(f"cannot parse complex number {text!r}; use forms like 1.5-0.2i")
    if match.group("re") is not None:
        return complex(float(match.group("re")), float(match.group("im")))
    if match.group("real_only") is not None:
        return complex(float(match.group("real_only")), 0.0)
    return complex(0.0, float(match.group("imag_only")))


def parse_grid(text: str) -> List[float]:
    """``start:stop:count`` -> evenly spaced values, endpoints included."""
    parts = str(text).split(":")
    if len(parts) != 3:
        raise ConfigError(f"grid must look like start:stop:count, got {text!r}")
    try:
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ConfigError(f"grid must look like start:stop:count, got {text!r}") from None
    if count < 1:
        raise ConfigError(f"grid needs at least one point, got {count}")
    return [float(v) for v in np.linspace(start, stop, count)]


def _parse_gain(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ConfigError(f"--g expects a number or match-q, got {text!r}") from None
    if not value >= 0.0:
        raise ConfigError(f"gain must be >= 0, got {text!r}")
    return value


def _read_amplitude_file(path: Path) -> List[complex]:
    values: List[complex] = []
    for number, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ConfigError(f"{path}:{number}: expected 're im', got {line!r}")
        try:
            values.append(complex(float(parts[0]), float(parts[1])))
        except ValueError:
            raise ConfigError(f"{path}:{number}: not a number pair: {line!r}") from None
    return values


def parse_input_spec(spec: str) -> InputFactory:
    """Turn ``coherent:Z``, ``number:n``, ``cat:Z`` or ``file:PATH`` into a state builder.

    The builder takes a cutoff so the same input can be rebuilt at 2N for the
    convergence check. Only coherent inputs report their amplitude.
    """
    kind, sep, arg = str(spec).partition(":")
    if not sep or not arg:
        raise ConfigError(f"input must look like kind:value, got {spec!r}")
    if kind == "coherent":
        alpha = parse_complex(arg)
        return lambda N: (coherent_state(alpha, N), alpha)
    if kind == "cat":
        alpha = parse_complex(arg)
        return lambda N: (cat_state(alpha, N), None)
    if kind == "number":
        if not arg.isdigit():
            raise ConfigError(f"number input needs a non-negative integer, got {arg!r}")
        n = int(arg)
        return lambda N: (number_state(n, N), None)
    if kind == "file":
        path = Path(arg)
        if not path.exists():
            raise ConfigError(f"amplitude file not found: {path}")
        values = _read_amplitude_file(path)
        return lambda N: (from_amplitudes(values, N), None)
    raise ConfigError(f"unknown input kind {kind!r}; use coherent, number, cat or file")


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog=APP_NAME, description="Continuous-variable teleportation in a truncated Fock space.")
    parser.add_argument("--config", help="key=value file; flags given on the command line win")
    parser.add_argument("--mode", choices=MODES)
    parser.add_argument("--input", dest="input_spec", help="coherent:RE+IMi | number:n | cat:RE+IMi | file:PATH")
    entanglement = parser.add_mutually_exclusive_group()
    entanglement.add_argument("--q", type=float, help="entanglement parameter in [0, 1)")
    entanglement.add_argument("--s", type=float, help="squeezing factor in (0, 1]")
    entanglement.add_argument("--db", type=float, help="noise suppression in dB")
    entanglement.add_argument("--q-grid", dest="q_grid", help="start:stop:count (sweep mode)")
    parser.add_argument("--g", help="gain, or match-q")
    parser.add_argument("--g-grid", dest="g_grid", help="start:stop:count (sweep mode)")
    parser.add_argument("--N", type=int, help="Fock cutoff (>= 8)")
    parser.add_argument("--beta", help="measurement outcome for single mode, e.g. 0.5-0.1i")
    parser.add_argument("--samples", type=int, help="Monte Carlo samples per point")
    parser.add_argument("--quad-nodes", dest="quad_nodes", type=int, help="radial quadrature nodes")
    parser.add_argument("--method", choices=METHODS)
    parser.add_argument("--suite", help="verification suite name or all")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--out", help="output path (default stdout)")
    parser.add_argument("--format", choices=FORMATS)
    parser.add_argument("--threads", type=int, help=f"sweep workers (capped by CVTELE_THREADS={THREADS})")
    parser.add_argument("--log-level", dest="log_level")
    return parser


def load_config_file(path: str) -> Dict[str, str]:
    """Read ``key=value`` lines; keys may be written like the long flags."""
    config_path = Path(path)
    if not config_path.exists():
        raise ConfigError(f"config file not found: {config_path}")
    values: Dict[str, str] = {}
    for number, line in enumerate(config_path.read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{config_path}:{number}: expected key=value, got {line!r}")
        key = key.strip().lstrip("-").replace("-", "_")
        key = "input_spec" if key == "input" else key
        if key not in _FIELD_TYPES:
            raise ConfigError(f"{config_path}:{number}: unknown key {key!r}")
        values[key] = value.strip()
    return values


def build_config(argv: Optional[Sequence[str]] = None) -> RunConfig:
    args = build_parser().parse_args(argv)
    values: Dict[str, object] = {}
    if args.config:
        values.update(load_config_file(args.config))
    for name in _FIELD_TYPES:
        flag_value = getattr(args, name, None)
        if flag_value is not None:
            values[name] = flag_value
    if any(getattr(args, name) is not None for name in ("q", "s", "db", "q_grid")):
        # an entanglement flag replaces whatever the file chose
        for name in ("q", "s", "db", "q_grid"):
            if getattr(args, name) is None:
                values.pop(name, None)
    return RunConfig.from_dict(values)


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def _csv_text(header: List[str], rows: List[List[str]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _json_text(payload: Dict[str, object]) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _entanglement(config: RunConfig) -> float:
    if config.q is not None:
        return squeeze_convert(q=config.q).q
    if config.s is not None:
        return squeeze_convert(s=config.s).q
    return squeeze_convert(db=config.db).q


def _gain(config: RunConfig, q: float) -> float:
    return q if config.g == "match-q" else _parse_gain(config.g)


def _status(config: RunConfig, message: str) -> None:
    # keep stdout clean when it carries the artifact
    stream = sys.stderr if config.out is None else sys.stdout
    print(message, file=stream)


def _run_single(config: RunConfig) -> Tuple[str, int]:
    make_input = parse_input_spec(config.input_spec)
    q = _entanglement(config)
    params = TeleportParams(q, _gain(config, q), config.N)
    beta = parse_complex(config.beta)
    psi_in, _ = make_input(config.N)
    outcome = converged_outcome(params, beta, lambda size: make_input(size)[0])

    warnings: List[str] = []
    if not outcome.converged:
        warnings.append(f"cutoff N={config.N} not converged; rerun with a larger --N")
    if outcome.degenerate:
        warnings.append("outcome density below floor; output state undefined")
    if psi_in.truncation_weight > 1e-9:
        warnings.append(f"input truncation weight {psi_in.truncation_weight:.3g}")
    overlap = 0.0 if outcome.degenerate else fidelity(psi_in, outcome.out_state)

    if config.format == "json":
        text = _json_text({
            "mode": "single",
            "config": config.to_dict(),
            "beta": [beta.real, beta.imag],
            "density": outcome.density,
            "fidelity_to_input": overlap,
            "converged": bool(outcome.converged),
            "degenerate": outcome.degenerate,
            "amplitudes": [[float(z.real), float(z.imag)] for z in outcome.out_state.amps],
            "warnings": warnings,
        })
    else:
        rows = [
            [str(n), _fmt(z.real), _fmt(z.imag), _fmt(outcome.density), str(bool(outcome.converged)).lower()]
            for n, z in enumerate(outcome.out_state.amps)
        ]
        text = _csv_text(["n", "re", "im", "density", "converged"], rows)
    for warning in warnings:
        logger.warning(warning)
    _status(config, f"SINGLE_COMPLETE density={_fmt(outcome.density)} converged={bool(outcome.converged)}")
    return text, 0


def _sweep_rows(points: List[SweepPoint]) -> List[List[str]]:
    return [
        [
            _fmt(p.q), _fmt(p.g), str(p.N), _fmt(p.fidelity_mean), _fmt(p.fidelity_stderr),
            str(p.n_samples), _fmt(p.phi_second_moment), str(p.converged).lower(),
        ]
        for p in points
    ]


def _run_sweep(config: RunConfig) -> Tuple[str, int]:
    make_input = parse_input_spec(config.input_spec)
    q_values = parse_grid(config.q_grid) if config.q_grid is not None else [_entanglement(config)]
    grid: List[Tuple[float, float]] = []
    for q in q_values:
        gains = parse_grid(config.g_grid) if config.g_grid is not None else [_gain(config, q)]
        grid.extend((q, g) for g in gains)
    points = sweep(
        grid, make_input, config.N, config.method, config.samples, config.seed,
        threads=min(config.threads, THREADS), nodes=config.quad_nodes,
    )
    warnings = [f"q={p.q:.6g} g={p.g:.6g} not converged" for p in points if not p.converged]
    if config.format == "json":
        text = _json_text({
            "mode": "sweep",
            "config": config.to_dict(),
            "columns": SWEEP_COLUMNS,
            "points": [dict(zip(SWEEP_COLUMNS, row)) for row in _sweep_rows(points)],
            "warnings": warnings,
        })
    else:
        text = _csv_text(SWEEP_COLUMNS, _sweep_rows(points))
    for warning in warnings:
        logger.warning(warning)
    _status(config, f"SWEEP_COMPLETE points={len(points)} nonconverged={len(warnings)}")
    return text, 0


def _run_verify(config: RunConfig) -> Tuple[str, int]:
    names = list(SUITES) if config.suite == "all" else [config.suite]
    settings = SuiteSettings(_entanglement(config), config.N, config.seed, config.samples)
    results = run_suites(names, settings)
    for result in results:
        marker = "VERIFY_OK" if result.passed else "VERIFY_FAIL"
        _status(config, f"{marker} suite={result.name} residual={result.residual:.3g} tol={result.tolerance:g}")
    if config.format == "json":
        text = _json_text({
            "mode": "verify",
            "config": config.to_dict(),
            "suites": [dataclasses.asdict(result) for result in results],
        })
    else:
        rows = [[r.name, str(r.passed).lower(), _fmt(r.residual), _fmt(r.tolerance)] for r in results]
        text = _csv_text(["suite", "passed", "residual", "tolerance"], rows)
    return text, 0 if all(result.passed for result in results) else 2


def run(config: RunConfig) -> int:
    """Execute one configured run and write its artifact; returns the exit status."""
    runners = {"single": _run_single, "sweep": _run_sweep, "verify": _run_verify}
    try:
        text, status = runners[config.mode](config)
    except CvTeleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if config.out:
        Path(config.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return status


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        config = build_config(argv)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    logging.basicConfig(
        level=getattr(logging, config.log_level.upper(), logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return run(config)
    except Exception:
        traceback.print_exc()
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
