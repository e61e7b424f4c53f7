"""Command-line front end: curves, compression analytics, and simulations.

Subcommands emit data files (CSV or JSON) rather than plots; every numeric
column is plain decimal with 12 significant digits, and simulation output is
byte-reproducible for a fixed seed.  Exit codes: 0 success (including a
protocol abort, which is a valid outcome), 2 configuration or input error,
3 internal integrity error.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence

import numpy as np

from . import config as cfgmod
from . import squeeze
from .core import determine_optimality, efficiency_curve
from .errors import (
    ConfigError,
    MalformedStreamError,
    ParameterError,
    SimulationIntegrityError,
)
from .proto_bb84 import run_session
from .proto_tf import run_tf_session

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INTEGRITY = 3


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return f"{x:.12g}"
    if x is None:
        return ""
    return str(x)


def _load_cfg(args) -> dict[str, str]:
    base = cfgmod.load_flat_config(args.config) if args.config else {}
    return cfgmod.apply_overrides(base, args.set or [])


def _write_out(args, text: str) -> None:
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _csv(rows: list[dict]) -> str:
    header = list(rows[0].keys())
    lines = [",".join(header)]
    lines += [",".join(_fmt(r[k]) for k in header) for r in rows]
    return "\n".join(lines) + "\n"


def _emit_rows(args, rows: list[dict]) -> None:
    if args.format == "json":
        _write_out(args, json.dumps(rows, indent=2) + "\n")
    else:
        _write_out(args, _csv(rows))


def cmd_curve(args) -> int:
    cfg = _load_cfg(args)
    cfgmod.reject_unknown(
        cfg, cfgmod.CHANNEL_KEYS + cfgmod.PROTOCOL_KEYS + cfgmod.CURVE_KEYS
    )
    ch = cfgmod.channel_from_mapping(cfg)
    pp = cfgmod.protocol_from_mapping(cfg)
    l_min = cfgmod._float(cfg, "l_min", 0.0)
    l_max = cfgmod._float(cfg, "l_max", 100.0)
    l_step = cfgmod._float(cfg, "l_step", 1.0)
    if l_step <= 0 or l_max < l_min:
        raise ConfigError("need l_step > 0 and l_max >= l_min")
    count = int(round((l_max - l_min) / l_step, 9)) + 1
    lengths = [l_min + i * l_step for i in range(count)]

    points = efficiency_curve(ch, pp, lengths)
    if args.format == "json":
        rows = [
            {
                "L_km": pt.length_km,
                "eff_standard": pt.standard.efficiency,
                "eff_optimal": pt.optimal.efficiency,
                "extinct_standard": pt.standard.extinct,
                "extinct_optimal": pt.optimal.extinct,
            }
            for pt in points
        ]
        _write_out(args, json.dumps(rows, indent=2) + "\n")
    else:
        rows = [
            {
                "L_km": pt.length_km,
                "eff_standard": pt.standard.efficiency,
                "eff_optimal": pt.optimal.efficiency,
            }
            for pt in points
        ]
        _write_out(args, _csv(rows))
    return EXIT_OK


def cmd_sigma(args) -> int:
    cfg = _load_cfg(args)
    cfgmod.reject_unknown(cfg, cfgmod.SIGMA_KEYS)
    k_min = cfgmod._int(cfg, "k_min", 2)
    k_max = cfgmod._int(cfg, "k_max", 24)
    p = cfgmod._float(cfg, "p", 0.999999)
    n_raw = cfg.get("n_bits")
    n = int(float(n_raw)) if n_raw else None
    if k_min < 2 or k_max < k_min:
        raise ConfigError("need 2 <= k_min <= k_max")
    try:
        series = squeeze.sigma_curve(range(k_min, k_max + 1), p, n)
    except ParameterError as exc:
        raise ConfigError(str(exc)) from exc
    rows = [
        {
            "k": k,
            "sigma_percent": sig,
            "sigma_asymptotic": squeeze.sigma_asymptotic(k),
        }
        for k, sig in series
    ]
    _emit_rows(args, rows)
    return EXIT_OK


def cmd_optimality(args) -> int:
    cfg = _load_cfg(args)
    cfgmod.reject_unknown(cfg, cfgmod.CHANNEL_KEYS + ("xi",))
    ch = cfgmod.channel_from_mapping(cfg)
    xi = cfgmod._float(cfg, "xi", 1.0)
    try:
        report = determine_optimality(ch, xi)
    except ParameterError as exc:
        raise ConfigError(str(exc)) from exc
    row = report.as_dict()
    if args.format == "json":
        _write_out(args, json.dumps(row, indent=2) + "\n")
    else:
        _emit_rows(args, [row])
    return EXIT_OK


def _emit_session(args, report) -> int:
    row = report.as_dict()
    if args.format == "json":
        _write_out(args, json.dumps(row, indent=2) + "\n")
    else:
        _emit_rows(args, [row])
    status = "aborted" if report.aborted else "ok"
    print(
        f"status={status} key_bits={report.final_key_bits} "
        f"classical_bits={_fmt(report.ledger.total())} "
        f"efficiency={_fmt(report.empirical_efficiency)}",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_simulate_bb84(args) -> int:
    cfg = _load_cfg(args)
    cfgmod.reject_unknown(
        cfg, cfgmod.CHANNEL_KEYS + cfgmod.BB84_KEYS + ("n_qubits",)
    )
    session = cfgmod.bb84_from_mapping(cfg, seed=args.seed)
    return _emit_session(args, run_session(session))


def cmd_simulate_tf(args) -> int:
    cfg = _load_cfg(args)
    cfgmod.reject_unknown(cfg, cfgmod.TF_KEYS)
    session = cfgmod.tf_from_mapping(cfg, seed=args.seed)
    return _emit_session(args, run_tf_session(session))


def _read_stdin_bits(fmt: str) -> np.ndarray:
    data = sys.stdin.buffer.read()
    if fmt == "packed":
        return squeeze.unpack_bits(data, 8 * len(data))
    try:
        text = "".join(data.decode("ascii").split())
    except UnicodeDecodeError as exc:
        raise ConfigError(f"text bit input is not ASCII: {exc}") from exc
    if any(c not in "01" for c in text):
        raise ConfigError("text bit input may contain only 0, 1, and whitespace")
    return squeeze.as_bits(text)


def cmd_squeeze_encode(args) -> int:
    cfg = _load_cfg(args)
    cfgmod.reject_unknown(cfg, cfgmod.SQUEEZE_KEYS)
    k = cfgmod._int(cfg, "k", 8)
    p = cfgmod._float(cfg, "p", 0.999)
    fmt = cfg.get("bits_format", "text")
    if fmt not in ("text", "packed"):
        raise ConfigError("bits_format must be 'text' or 'packed'")
    bits = _read_stdin_bits(fmt)
    try:
        container, stats = squeeze.squeeze_bits(bits, k, p)
    except ParameterError as exc:
        raise ConfigError(str(exc)) from exc
    if args.out:
        with open(args.out, "wb") as fh:
            fh.write(container)
    else:
        sys.stdout.buffer.write(container)
    print(
        f"bits_in={stats.n_input_bits} blocks={stats.m_blocks} "
        f"bits_out={stats.output_bits} sigma_percent={_fmt(stats.sigma_percent)}",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_squeeze_decode(args) -> int:
    cfg = _load_cfg(args)
    cfgmod.reject_unknown(cfg, cfgmod.SQUEEZE_KEYS)
    fmt = cfg.get("bits_format", "text")
    if fmt not in ("text", "packed"):
        raise ConfigError("bits_format must be 'text' or 'packed'")
    data = sys.stdin.buffer.read()
    bits = squeeze.unsqueeze_bits(data)
    if fmt == "packed":
        payload = squeeze.pack_bits(bits)
        if args.out:
            with open(args.out, "wb") as fh:
                fh.write(payload)
        else:
            sys.stdout.buffer.write(payload)
    else:
        _write_out(args, squeeze.bits_to_string(bits) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qkdeff",
        description="QKD efficiency curves, channel-squeezing analytics, "
        "and protocol simulations",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    handlers = {
        "curve": (cmd_curve, "standard vs optimal efficiency over link length"),
        "sigma": (cmd_sigma, "expected compression percent per degree k"),
        "optimality": (cmd_optimality, "efficiency ceiling for one channel"),
        "simulate-bb84": (cmd_simulate_bb84, "run one biased-basis BB84 session"),
        "simulate-tf": (cmd_simulate_tf, "run one relay (twin-field style) session"),
        "squeeze-encode": (cmd_squeeze_encode, "compress stdin bits to a container"),
        "squeeze-decode": (cmd_squeeze_decode, "expand a container back to bits"),
    }
    for name, (fn, help_text) in handlers.items():
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--config", help="flat key=value or JSON config file")
        sp.add_argument("--out", help="output path (default: stdout)")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument(
            "--set", action="append", metavar="KEY=VALUE",
            help="override a config key (repeatable)",
        )
        sp.add_argument("--seed", type=int, help="RNG seed (overrides rng_seed)")
        sp.set_defaults(handler=fn)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (ConfigError, ParameterError, MalformedStreamError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationIntegrityError as exc:
        print(f"integrity error: {exc}", file=sys.stderr)
        return EXIT_INTEGRITY


if __name__ == "__main__":
    sys.exit(main())
