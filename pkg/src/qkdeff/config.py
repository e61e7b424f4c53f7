"""Flat key-value configuration for the CLI and the External-Interface contract.

Accepted file syntax: one ``key = value`` pair per line ('#' comments, blank
lines ignored), or a flat JSON object.  Overrides arrive as repeatable
``key=value`` strings and are validated against the owning module's parameter
domain before anything runs; unknown keys are rejected.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any, Iterable, Mapping

from .core import ChannelParams, ProtocolParams
from .errors import ConfigError, ParameterError
from .proto_bb84 import SessionConfig
from .proto_tf import TfConfig

CHANNEL_KEYS = ("alpha", "length_km", "eta_det", "p_dark", "e_opt", "e0", "f")
PROTOCOL_KEYS = ("s", "sigma", "xi", "delta", "n_qubits")
BB84_KEYS = (
    "p_b", "degree_k", "epsilon_frac", "lambda_frac", "qber_threshold",
    "lossless", "abort_on_either", "rng_seed",
)
TF_KEYS = (
    "n_pulses", "rng_seed",
    "tf.p_x", "tf.amplitudes", "tf.amplitude_probs", "tf.degree_k",
    "tf.p_click_match", "tf.p_click_conflict", "tf.p_dark_relay",
    "tf.pe_frac", "tf.f_ec",
)
CURVE_KEYS = ("l_min", "l_max", "l_step")
SIGMA_KEYS = ("k_min", "k_max", "p", "n_bits")
SQUEEZE_KEYS = ("k", "p", "bits_format")


def load_flat_config(path: str | Path) -> dict[str, str]:
    """Read a flat config file into a string-to-string mapping."""
    text = Path(path).read_text()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
        if not isinstance(obj, dict):
            raise ConfigError(f"{path}: JSON config must be a flat object")
        return {str(k): _scalar_to_str(path, k, v) for k, v in obj.items()}

    out: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _scalar_to_str(path, key, v) -> str:
    if isinstance(v, (str, int, float, bool)):
        return str(v)
    if isinstance(v, list):  # amplitude lists
        return ",".join(str(x) for x in v)
    raise ConfigError(f"{path}: key {key!r} must be a scalar or list")


def apply_overrides(cfg: Mapping[str, str], sets: Iterable[str]) -> dict[str, str]:
    merged = dict(cfg)
    for item in sets:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        merged[key.strip()] = value.strip()
    return merged


def reject_unknown(cfg: Mapping[str, str], allowed: Iterable[str]) -> None:
    allowed_set = set(allowed)
    unknown = sorted(k for k in cfg if k not in allowed_set)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")


def _float(cfg: Mapping[str, str], key: str, default: float) -> float:
    raw = cfg.get(key)
    if raw is None:
        return default
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"key {key!r}: not a number: {raw!r}") from exc


def _int(cfg: Mapping[str, str], key: str, default: int) -> int:
    raw = cfg.get(key)
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        as_float = float(raw)  # allow 1e6-style counts
    except ValueError as exc:
        raise ConfigError(f"key {key!r}: not an integer: {raw!r}") from exc
    if not as_float.is_integer():
        raise ConfigError(f"key {key!r}: not an integer: {raw!r}")
    return int(as_float)


def _bool(cfg: Mapping[str, str], key: str, default: bool) -> bool:
    raw = cfg.get(key)
    if raw is None:
        return default
    low = raw.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"key {key!r}: not a boolean: {raw!r}")


def _float_tuple(cfg: Mapping[str, str], key: str, default: tuple) -> tuple:
    raw = cfg.get(key)
    if raw is None:
        return default
    try:
        return tuple(float(x) for x in raw.split(",") if x.strip())
    except ValueError as exc:
        raise ConfigError(f"key {key!r}: not a number list: {raw!r}") from exc


def channel_from_mapping(cfg: Mapping[str, str]) -> ChannelParams:
    base = ChannelParams()
    try:
        return ChannelParams(
            alpha=_float(cfg, "alpha", base.alpha),
            length_km=_float(cfg, "length_km", base.length_km),
            eta_det=_float(cfg, "eta_det", base.eta_det),
            p_dark=_float(cfg, "p_dark", base.p_dark),
            e_opt=_float(cfg, "e_opt", base.e_opt),
            e0=_float(cfg, "e0", base.e0),
            f=_float(cfg, "f", base.f),
        )
    except ParameterError as exc:
        raise ConfigError(str(exc)) from exc


def protocol_from_mapping(cfg: Mapping[str, str]) -> ProtocolParams:
    raw_n = cfg.get("n_qubits", "inf").strip().lower()
    n: float = math.inf if raw_n in ("inf", "none", "") else float(raw_n)
    try:
        return ProtocolParams(
            s=_float(cfg, "s", 0.5),
            sigma=_float(cfg, "sigma", 0.0),
            xi=_float(cfg, "xi", 1.0),
            delta=_float(cfg, "delta", 0.0),
            n_qubits=n,
        )
    except (ParameterError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def bb84_from_mapping(cfg: Mapping[str, str], seed: int | None = None) -> SessionConfig:
    try:
        return SessionConfig(
            n_qubits=_int(cfg, "n_qubits", 100_000),
            p_b=_float(cfg, "p_b", 0.999),
            degree_k=_int(cfg, "degree_k", 8),
            epsilon_frac=_float(cfg, "epsilon_frac", 0.01),
            lambda_frac=_float(cfg, "lambda_frac", 0.01),
            qber_threshold=_float(cfg, "qber_threshold", 0.11),
            channel=channel_from_mapping(cfg),
            rng_seed=seed if seed is not None else _int(cfg, "rng_seed", 0),
            lossless=_bool(cfg, "lossless", False),
            abort_on_either=_bool(cfg, "abort_on_either", False),
        )
    except ParameterError as exc:
        raise ConfigError(str(exc)) from exc


def tf_from_mapping(cfg: Mapping[str, str], seed: int | None = None) -> TfConfig:
    try:
        return TfConfig(
            n_pulses=_int(cfg, "n_pulses", 100_000),
            p_x=_float(cfg, "tf.p_x", 0.999),
            amplitudes=_float_tuple(cfg, "tf.amplitudes", (0.1, 0.2)),
            amplitude_probs=_float_tuple(cfg, "tf.amplitude_probs", (0.5, 0.5)),
            degree_k=_int(cfg, "tf.degree_k", 8),
            p_click_match=_float(cfg, "tf.p_click_match", 0.9),
            p_click_conflict=_float(cfg, "tf.p_click_conflict", 0.0),
            p_dark_relay=_float(cfg, "tf.p_dark_relay", 0.0),
            pe_frac=_float(cfg, "tf.pe_frac", 0.01),
            f_ec=_float(cfg, "tf.f_ec", 1.1),
            rng_seed=seed if seed is not None else _int(cfg, "rng_seed", 0),
        )
    except ParameterError as exc:
        raise ConfigError(str(exc)) from exc
