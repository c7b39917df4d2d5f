"""Dataclass configs from the command line, and result writing."""

from __future__ import annotations

import argparse
import dataclasses
import json
from pathlib import Path


def parse(cls, argv=None):
    """Build ``cls`` from its defaults, overridden by --field value flags."""
    ap = argparse.ArgumentParser(description=cls.__doc__)
    for f in dataclasses.fields(cls):
        default = f.default if f.default is not dataclasses.MISSING else f.default_factory()
        if isinstance(default, (tuple, list)):
            kind = type(default[0]) if default else float
            ap.add_argument(f"--{f.name.replace('_', '-')}", dest=f.name, type=kind, nargs="+", default=default)
        else:
            ap.add_argument(f"--{f.name.replace('_', '-')}", dest=f.name, type=type(default), default=default)
    args = vars(ap.parse_args(argv))
    return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in args.items()})


def out_dir(cfg) -> Path:
    d = Path(cfg.out)
    d.mkdir(parents=True, exist_ok=True)
    (d / "config.json").write_text(json.dumps(dataclasses.asdict(cfg), indent=2) + "\n")
    return d
