"""Small helpers shared by the experiment scripts."""

from __future__ import annotations

import argparse
import json
from dataclasses import asdict, fields
from pathlib import Path


def parser_for(config_cls, description: str) -> argparse.ArgumentParser:
    """One ``--flag`` per dataclass field, defaults taken from the class."""
    p = argparse.ArgumentParser(description=description)
    for f in fields(config_cls):
        default = f.default
        flag = "--" + f.name.replace("_", "-")
        if isinstance(default, tuple):
            p.add_argument(flag, type=type(default[0]), nargs="+", default=list(default))
        else:
            p.add_argument(flag, type=type(default), default=default)
    return p


def config_from_args(config_cls, description: str, argv=None):
    ns = parser_for(config_cls, description).parse_args(argv)
    values = {k: tuple(v) if isinstance(v, list) else v for k, v in vars(ns).items()}
    return config_cls(**values)


def save_json(path: str | Path, config, payload) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps({"config": asdict(config), "result": payload}, indent=2, sort_keys=True) + "\n")
    return path
