"""Flat run configuration shared by the protocol harness and the CLI.

Precedence when assembling a config: built-in defaults, then a flat
``key=value`` config file, then ``RELSTANCE_<KEY>`` environment variables,
then command-line flags.  Unknown keys are rejected, and every run emits its
fully resolved config (plus its hash) alongside the outputs.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass
from pathlib import Path

ENV_PREFIX = "RELSTANCE_"


class ConfigError(ValueError):
    """Unknown key or unparsable value."""


@dataclass
class RunConfig:
    # data
    data: str | None = None
    format: str = "jsonl"
    table: str | None = None
    # graph construction
    tau: float | None = None  # None = one snapshot per interaction
    rho: float = 0.3
    ratios: tuple[float, float, float] = (0.8, 0.1, 0.1)
    per_topic_split: bool = False
    # autoencoder
    d: int = 64
    decoder_kind: str = "distmult"
    gae_lr: float = 1e-2
    gae_epochs: int = 2000
    edge_keep_fraction: float = 0.5
    triplet_batch: int = 100_000
    transe_margin: float = 1.0
    message_all_edges: bool = False
    # classifier
    text_dim: int = 256
    fusion_mode: str = "concat"
    d_rel_out: int = 64
    lambda_recon: float = 1.0
    clf_lr: float = 1e-3
    clf_epochs: int = 30
    batch_size: int = 8
    radius: int = 1
    freeze_encoder: bool = True
    no_pretraining: bool = False
    use_relations: bool = True
    # protocol
    mode: str = "in-domain"
    seed: int = 0
    seeds: tuple[int, ...] | None = None
    out_dir: str = "runs"

    def resolved(self) -> dict:
        """JSON-able view of every tunable."""
        doc = dataclasses.asdict(self)
        doc["tau"] = "per-edge" if self.tau is None else self.tau
        doc["ratios"] = list(self.ratios)
        doc["seeds"] = list(self.seeds) if self.seeds is not None else None
        return doc

    def config_hash(self) -> str:
        blob = json.dumps(self.resolved(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()[:12]


_FIELD_TYPES = {f.name: f for f in dataclasses.fields(RunConfig)}


def _parse_value(key: str, raw):
    """Coerce a string (file/env/CLI) to the field's python type."""
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    if key == "tau":
        return None if text in ("per-edge", "none", "") else float(text)
    if key == "ratios":
        parts = tuple(float(x) for x in text.split(","))
        if len(parts) != 3:
            raise ConfigError(f"ratios needs three fractions, got {text!r}")
        return parts
    if key == "seeds":
        return None if text in ("", "none") else tuple(int(x) for x in text.split(","))
    if key in ("data", "table"):
        return None if text in ("", "none") else text
    default = _FIELD_TYPES[key].default
    if isinstance(default, bool):
        if text.lower() in ("1", "true", "yes", "on"):
            return True
        if text.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {text!r}")
    if isinstance(default, int):
        return int(text)
    if isinstance(default, float):
        return float(text)
    return text


def build_config(
    file_path: str | Path | None = None,
    overrides: dict | None = None,
    environ: dict | None = None,
) -> RunConfig:
    """Defaults < config file < environment < explicit overrides."""
    values: dict = {}

    if file_path is not None:
        for lineno, line in enumerate(Path(file_path).read_text(encoding="utf-8").splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{file_path}:{lineno}: expected key=value")
            key, _, raw = line.partition("=")
            key = key.strip()
            if key not in _FIELD_TYPES:
                raise ConfigError(f"{file_path}:{lineno}: unknown key {key!r}")
            values[key] = _parse_value(key, raw)

    env = os.environ if environ is None else environ
    for key in _FIELD_TYPES:
        env_key = ENV_PREFIX + key.upper()
        if env_key in env:
            values[key] = _parse_value(key, env[env_key])

    for key, raw in (overrides or {}).items():
        if key not in _FIELD_TYPES:
            raise ConfigError(f"unknown config key {key!r}")
        if raw is not None:
            values[key] = _parse_value(key, raw)

    return RunConfig(**values)
