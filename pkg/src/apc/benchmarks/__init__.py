"""Bundled benchmark programs."""

from __future__ import annotations

from importlib import resources

from ..ir import Flowgraph, parse_program

NAMES = [
    "running_example",
    "hello",
    "hw",
    "hwm",
    "matrir",
    "oneloop",
    "twoloops",
    "windriver",
    "t2witness",
]


def source(name: str) -> str:
    if name not in NAMES:
        raise KeyError(f"unknown benchmark {name!r} (choose from {', '.join(NAMES)})")
    return (resources.files(__package__) / f"{name}.apc").read_text()


def load(name: str) -> Flowgraph:
    return parse_program(source(name))
