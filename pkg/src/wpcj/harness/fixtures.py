"""Stored channel fixtures: one JSON file per (config, channel draw) pair."""

from __future__ import annotations

import dataclasses
import json
import os

from ..model import ChannelSet, SystemConfig


def config_to_dict(cfg: SystemConfig) -> dict:
    d = dataclasses.asdict(cfg)
    d["p_harvested"] = list(cfg.p_harvested)
    return d


def config_from_dict(d: dict) -> SystemConfig:
    d = dict(d)
    d["p_harvested"] = tuple(d["p_harvested"])
    return SystemConfig(**d)


def save_fixture(path: str | os.PathLike, ch: ChannelSet, cfg: SystemConfig) -> None:
    ch.check(cfg)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump({"config": config_to_dict(cfg), "channels": ch.to_dict()}, fh, indent=1)
        fh.write("\n")


def load_fixture(path: str | os.PathLike) -> tuple[ChannelSet, SystemConfig]:
    with open(path, encoding="utf-8") as fh:
        d = json.load(fh)
    cfg = config_from_dict(d["config"])
    ch = ChannelSet.from_dict(d["channels"])
    ch.check(cfg)
    return ch, cfg
