"""Batch experiment runner.

Subcommands
-----------
``kernel``          resolve kernels and export tap files plus a summary
``recover``         recovery sweep over band indices, CSV of report rows
``robustness``      noisy recovery study with bound-violation accounting
``validate-weight`` run the numerical admissibility checks on a weight

Every command takes ``--config <path>`` (JSON, schema below), ``--out``
(output file or directory, overriding the config's ``output_path``), and
``--threads`` (0 = auto).  Exit codes: 0 success, 1 configuration error,
2 numerical failure.  Outputs are byte-identical across reruns and thread
counts: rows are sorted canonically, floats serialize via repr, and every
file opens with a header comment carrying the tool version, a hash of the
canonical config, and the seeds in play.

Config schema (JSON)::

    {
      "weight": {"family": "power_law", "nu": 1.0, "p": "inf"},
      "signal": {"kind": "bandlimited", "omega": 1.5707963267948966,
                 "seed": 7},
      "n_values": [2, 4, 8],
      "T": 512,
      "S": 1024,
      "grid_size": 65536,
      "noise": {"sigma": 1e-6, "seeds": [0, 1, 2]},
      "output_path": "reports.csv"
    }

``weight.family`` is one of ``power_law`` (needs ``nu``), ``general_power``
(needs ``nu`` and ``a``), ``direct`` (needs ``nu``; ``p`` is forced to
infinity).  ``p`` accepts a number or the string ``"inf"``.  ``signal.kind``
is ``bandlimited`` (needs ``omega``) or ``powerdecay`` (needs ``nu``); both
need ``seed``.  ``noise`` is optional for ``recover``, required for
``robustness``.

Tap exports: ``taps_n<k>.txt`` (two columns: t, k(t), one header comment
line) and ``taps_n<k>.f64`` (flat little-endian float64, t = -T..T).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import warnings
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from ._quadrature import QuadratureError
from .kernel import (
    TruncationWarning,
    normalization_residual,
    resolve_kernel,
    synthesize_taps,
    write_taps_binary,
    write_taps_text,
)
from .recovery import CSV_COLUMNS, convergence_sweep
from .signals import SpectralSignal, make_bandlimited, make_power_decay
from .weights import (
    WeightSpec,
    make_direct_weight,
    make_general_power_weight,
    make_power_weight,
    validate_weight,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2


class ConfigError(ValueError):
    """A config field is missing, malformed, or violates a precondition."""


@dataclass(frozen=True)
class ExperimentConfig:
    weight: WeightSpec
    signal_kind: str
    signal_omega: float | None
    signal_nu: float | None
    signal_seed: int
    n_values: tuple[int, ...]
    T: int
    S: int
    grid_size: int
    noise_sigma: float | None
    noise_seeds: tuple[int, ...]
    output_path: str | None

    def to_dict(self) -> dict:
        weight = {
            "family": self.weight.family.value,
            "nu": self.weight.nu,
            "a": self.weight.a,
            "p": "inf" if self.weight.p == math.inf else self.weight.p,
        }
        signal: dict = {"kind": self.signal_kind, "seed": self.signal_seed}
        if self.signal_omega is not None:
            signal["omega"] = self.signal_omega
        if self.signal_nu is not None:
            signal["nu"] = self.signal_nu
        out = {
            "weight": weight,
            "signal": signal,
            "n_values": list(self.n_values),
            "T": self.T,
            "S": self.S,
            "grid_size": self.grid_size,
        }
        if self.noise_sigma is not None:
            out["noise"] = {"sigma": self.noise_sigma,
                            "seeds": list(self.noise_seeds)}
        if self.output_path is not None:
            out["output_path"] = self.output_path
        return out

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True,
                          separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()

    def build_signal(self) -> SpectralSignal:
        if self.signal_kind == "bandlimited":
            return make_bandlimited(self.signal_omega, self.signal_seed,
                                    self.grid_size)
        return make_power_decay(self.signal_nu, self.signal_seed,
                                self.grid_size)


def _require(mapping: dict, key: str, kind, where: str):
    if key not in mapping:
        raise ConfigError(f"{where}.{key}: required field missing")
    value = mapping[key]
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}.{key}: expected a number, "
                              f"got {value!r}")
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}.{key}: expected an integer, "
                              f"got {value!r}")
        return value
    return value


def _parse_p(raw, where: str) -> float:
    if raw == "inf":
        return math.inf
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise ConfigError(f'{where}.p: expected a number or "inf", '
                          f"got {raw!r}")
    return float(raw)


def _parse_weight(raw: dict) -> WeightSpec:
    family = _require(raw, "family", str, "weight")
    nu = _require(raw, "nu", float, "weight")
    try:
        if family == "power_law":
            return make_power_weight(nu, _parse_p(raw.get("p", "inf"),
                                                  "weight"))
        if family == "general_power":
            return make_general_power_weight(
                nu, _require(raw, "a", float, "weight"),
                _parse_p(raw.get("p", "inf"), "weight"))
        if family == "direct":
            return make_direct_weight(nu)
    except ValueError as exc:
        raise ConfigError(f"weight: {exc}") from exc
    raise ConfigError(f"weight.family: unknown family {family!r}")


def parse_config(raw: dict) -> ExperimentConfig:
    """Validate a raw config mapping; failures name the offending field."""
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    weight = _parse_weight(_require(raw, "weight", dict, "config"))

    sig = _require(raw, "signal", dict, "config")
    kind = _require(sig, "kind", str, "signal")
    if kind not in ("bandlimited", "powerdecay"):
        raise ConfigError(f"signal.kind: unknown kind {kind!r}")
    seed = _require(sig, "seed", int, "signal")
    omega = nu = None
    if kind == "bandlimited":
        omega = _require(sig, "omega", float, "signal")
        if not 0.0 < omega < math.pi:
            raise ConfigError(f"signal.omega: must lie in (0, pi), "
                              f"got {omega}")
    else:
        nu = _require(sig, "nu", float, "signal")
        if not nu > 0:
            raise ConfigError(f"signal.nu: must be positive, got {nu}")

    n_values = _require(raw, "n_values", list, "config")
    if (not isinstance(n_values, list) or not n_values
            or any(isinstance(n, bool) or not isinstance(n, int)
                   for n in n_values)):
        raise ConfigError("n_values: expected a nonempty list of integers")
    if sorted(n_values) != n_values or any(n < 2 for n in n_values):
        raise ConfigError("n_values: must be ascending integers >= 2")

    T = _require(raw, "T", int, "config")
    S = _require(raw, "S", int, "config")
    grid_size = _require(raw, "grid_size", int, "config")
    if T < 1:
        raise ConfigError(f"T: must be >= 1, got {T}")
    if S < T:
        raise ConfigError(f"S: must be >= T, got S={S} T={T}")
    if grid_size < 8 * (2 * S + 1):
        raise ConfigError(
            f"grid_size: must be >= 8 * (2 * S + 1) = {8 * (2 * S + 1)}, "
            f"got {grid_size}")
    if grid_size < 1024 or grid_size & (grid_size - 1):
        raise ConfigError(
            f"grid_size: must be a power of two >= 1024, got {grid_size}")

    noise_sigma = None
    noise_seeds: tuple[int, ...] = ()
    if "noise" in raw:
        noise = raw["noise"]
        if not isinstance(noise, dict):
            raise ConfigError("noise: expected an object")
        noise_sigma = _require(noise, "sigma", float, "noise")
        if noise_sigma < 0:
            raise ConfigError(f"noise.sigma: must be nonnegative, "
                              f"got {noise_sigma}")
        seeds = _require(noise, "seeds", list, "noise")
        if (not isinstance(seeds, list) or not seeds
                or any(isinstance(s, bool) or not isinstance(s, int)
                       for s in seeds)):
            raise ConfigError("noise.seeds: expected a nonempty list of "
                              "integers")
        noise_seeds = tuple(sorted(seeds))

    output_path = raw.get("output_path")
    if output_path is not None and not isinstance(output_path, str):
        raise ConfigError("output_path: expected a string")

    return ExperimentConfig(
        weight=weight, signal_kind=kind, signal_omega=omega, signal_nu=nu,
        signal_seed=seed, n_values=tuple(n_values), T=T, S=S,
        grid_size=grid_size, noise_sigma=noise_sigma,
        noise_seeds=noise_seeds, output_path=output_path)


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return parse_config(raw)


def _header_lines(config: ExperimentConfig) -> list[str]:
    seeds = [config.signal_seed, *config.noise_seeds]
    return [
        f"# specfill-version={__version__}",
        f"# config-sha256={config.config_hash()}",
        f"# seeds={','.join(str(s) for s in seeds)}",
    ]


def _resolve_out(args, config: ExperimentConfig, what: str) -> Path:
    if args.out is not None:
        return Path(args.out)
    if config.output_path is not None:
        return Path(config.output_path)
    raise ConfigError(f"output_path: required for {what} (or pass --out)")


def _threads(args) -> int:
    if args.threads < 0:
        raise ConfigError(f"--threads: must be >= 0, got {args.threads}")
    if args.threads == 0:
        return os.cpu_count() or 1
    return args.threads


def cmd_kernel(args) -> int:
    config = load_config(args.config)
    out_dir = _resolve_out(args, config, "kernel")
    out_dir.mkdir(parents=True, exist_ok=True)
    header = " ".join(line[2:] for line in _header_lines(config))
    for n in config.n_values:
        spec = resolve_kernel(config.weight, n)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", TruncationWarning)
            taps = synthesize_taps(spec, config.T)
        write_taps_text(taps, out_dir / f"taps_n{n}.txt",
                        header=f"{header} n={n} T={config.T}")
        write_taps_binary(taps, out_dir / f"taps_n{n}.f64")
        print(f"kernel n={n}: epsilon_n={spec.epsilon_n!r} "
              f"kappa={spec.kappa!r} "
              f"en_residual={normalization_residual(spec)!r} "
              f"zero_residual={taps.zero_residual!r} "
              f"tail_ratio={taps.tail_ratio!r}")
    return EXIT_OK


def _write_reports_csv(path: Path, config: ExperimentConfig, reports,
                       trailer: str | None = None) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in _header_lines(config):
            fh.write(line + "\n")
        fh.write(",".join((*CSV_COLUMNS, "error")) + "\n")
        for report, err in reports:
            fh.write(",".join((*report.csv_row(), err)) + "\n")
        if trailer is not None:
            fh.write(trailer + "\n")


def _run_sweep(config: ExperimentConfig, threads: int):
    signal = config.build_signal()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", TruncationWarning)
        reports = convergence_sweep(
            config.weight, signal, list(config.n_values), config.T, config.S,
            noise_sigma=config.noise_sigma, noise_seeds=config.noise_seeds,
            base_seed=config.signal_seed, threads=threads)
    if any(issubclass(w.category, TruncationWarning) for w in caught):
        print(f"note: tap tail not converged at T={config.T}; estimates "
              f"lean on signal decay beyond the window", file=sys.stderr)
    return [(r, "") for r in reports]


def cmd_recover(args) -> int:
    config = load_config(args.config)
    out = _resolve_out(args, config, "recover")
    rows = _run_sweep(config, _threads(args))
    _write_reports_csv(out, config, rows)
    print(f"recover: wrote {len(rows)} rows to {out}")
    return EXIT_OK


def cmd_robustness(args) -> int:
    config = load_config(args.config)
    if config.noise_sigma is None:
        raise ConfigError("noise: required for robustness")
    out = _resolve_out(args, config, "robustness")
    rows = _run_sweep(config, _threads(args))
    violations = sum(
        1 for r, _ in rows
        if r.abs_error is not None and r.robust_bound is not None
        and r.abs_error > r.robust_bound)
    _write_reports_csv(out, config, rows,
                       trailer=f"# violations={violations}")
    print(f"robustness: wrote {len(rows)} rows to {out}; "
          f"violations={violations}")
    return EXIT_OK


def cmd_validate_weight(args) -> int:
    config = load_config(args.config)
    report = validate_weight(config.weight)
    print(report)
    return EXIT_OK if report.ok else EXIT_NUMERICAL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="specfill",
        description="Recovering-kernel construction and verification runner")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (("kernel", cmd_kernel), ("recover", cmd_recover),
                     ("robustness", cmd_robustness),
                     ("validate-weight", cmd_validate_weight)):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON config path")
        p.add_argument("--out", default=None,
                       help="output file or directory (overrides config)")
        p.add_argument("--threads", type=int, default=0,
                       help="worker threads, 0 = auto")
        p.set_defaults(fn=fn)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (QuadratureError, ValueError, RuntimeError) as exc:
        print(f"numerical failure in stage '{args.command}': {exc}",
              file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
