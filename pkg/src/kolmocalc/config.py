"""Experiment configuration: structure choice + quadrature budgets + run plan.

Configs are INI files with three sections::

    [structure]
    name = langevin          ; or blocks = [2, 1] (optional B1 = [[...]], ...)
                             ; or file = /path/to/structure.ini
    [quadrature]
    nodes_per_axis = 32      ; any QuadratureSpec field
    seed = 12345

    [run]
    suites = group, taylor   ; comma list, or "all"
    out = runs/langevin

Every value is parsed with ast.literal_eval, so numbers and tuples look
like Python literals.  Unknown quadrature keys are rejected rather than
silently ignored.
"""

from __future__ import annotations

import ast
import configparser
import dataclasses
import hashlib
import importlib.resources
from dataclasses import dataclass

from . import group as G
from .errors import ConfigError
from .group import GroupStructure
from .quadrature import QuadratureSpec

__all__ = ["ExperimentConfig", "load_config", "default_config", "builtin_config_path"]

_STRUCTURE_BUILDERS = {
    "langevin": G.langevin_structure,
    "chain3": lambda: G.chain_structure(2),
}


@dataclass(frozen=True)
class ExperimentConfig:
    structure: GroupStructure
    structure_label: str
    spec: QuadratureSpec
    suites: tuple[str, ...]
    out_dir: str

    def fingerprint(self) -> str:
        blob = repr(
            (
                self.structure_label,
                self.structure.block_sizes,
                self.structure.B.tolist(),
                sorted(self.spec.to_dict().items()),
                self.suites,
            )
        ).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _literal(section, key, raw):
    try:
        return ast.literal_eval(raw)
    except (ValueError, SyntaxError):
        raise ConfigError(f"[{section}] {key} = {raw!r} is not a Python literal") from None


def _parse_structure(sec) -> tuple[GroupStructure, str]:
    if "name" in sec:
        name = sec["name"].strip().strip("\"'")
        if name not in _STRUCTURE_BUILDERS:
            raise ConfigError(
                f"unknown structure name {name!r}; known: {sorted(_STRUCTURE_BUILDERS)}"
            )
        return _STRUCTURE_BUILDERS[name](), name
    if "file" in sec:
        path = sec["file"].strip()
        return G.load_structure(path), path
    if "blocks" in sec:
        blocks = _literal("structure", "blocks", sec["blocks"])
        mats = []
        j = 1
        while f"b{j}" in sec:
            mats.append(_literal("structure", f"b{j}", sec[f"b{j}"]))
            j += 1
        sub = mats if mats else "ones"
        label = f"blocks{tuple(int(b) for b in blocks)}"
        return G.make_structure(blocks, sub), label
    raise ConfigError("[structure] needs one of: name, file, blocks")


def _parse_quadrature(sec) -> QuadratureSpec:
    fields = {f.name: f.type for f in dataclasses.fields(QuadratureSpec)}
    kwargs = {}
    for key in sec:
        if key not in fields:
            raise ConfigError(
                f"[quadrature] unknown key {key!r}; valid keys: {sorted(fields)}"
            )
        kwargs[key] = _literal("quadrature", key, sec[key])
    return QuadratureSpec(**kwargs)


def load_config(path) -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    read = cp.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    if "structure" not in cp:
        raise ConfigError(f"{path}: missing [structure] section")
    structure, label = _parse_structure(cp["structure"])
    spec = _parse_quadrature(cp["quadrature"]) if "quadrature" in cp else QuadratureSpec()
    suites: tuple[str, ...] = ("all",)
    out_dir = "runs/latest"
    if "run" in cp:
        run = cp["run"]
        if "suites" in run:
            suites = tuple(
                s.strip() for s in run["suites"].split(",") if s.strip()
            ) or ("all",)
        if "out" in run:
            out_dir = run["out"].strip()
    return ExperimentConfig(structure, label, spec, suites, out_dir)


def default_config(name: str = "langevin") -> ExperimentConfig:
    if name not in _STRUCTURE_BUILDERS:
        raise ConfigError(f"unknown structure name {name!r}")
    return ExperimentConfig(
        _STRUCTURE_BUILDERS[name](), name, QuadratureSpec(), ("all",), f"runs/{name}"
    )


def builtin_config_path(name: str) -> str:
    """Filesystem path of a packaged example config (langevin, chain3)."""
    res = importlib.resources.files("kolmocalc") / "data" / f"{name}.ini"
    if not res.is_file():
        raise ConfigError(f"no packaged config named {name!r}")
    return str(res)
