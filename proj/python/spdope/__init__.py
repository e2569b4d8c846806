"""Python access to the spdope library.

Configs are plain dicts with the same tables as the TOML run files
(``grid``, ``params``, ``profile``, ``minimize`` ...), or TOML text.
Fields are numpy arrays of shape (N, N, N) indexed ``[iz, iy, ix]``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Mapping, Sequence, Union

import numpy as np

from . import _spdope
from ._spdope import BracketError, ConfigError, FieldIoError, NumericalError

__version__ = _spdope.__version__

ConfigLike = Union[Mapping[str, Any], str, None]

__all__ = [
    "BracketError",
    "ConfigError",
    "FieldIoError",
    "MinimizerResult",
    "NumericalError",
    "ball_geometry",
    "config",
    "config_hash",
    "energy",
    "minimize",
    "read_field",
    "run",
    "sample_rho",
    "write_field",
]


def _document(cfg: ConfigLike, overrides: Mapping[str, Any] | None = None) -> str:
    if cfg is None:
        doc: dict = {}
    elif isinstance(cfg, str):
        doc = json.loads(_spdope.parse_toml(cfg))
    else:
        doc = json.loads(json.dumps(cfg))
    for key, value in (overrides or {}).items():
        table = doc
        *path, last = key.split(".")
        for part in path:
            table = table.setdefault(part, {})
        table[last] = value
    return json.dumps(doc)


def config(cfg: ConfigLike = None, **overrides: Any) -> dict:
    """Validated, canonical config. Overrides use dotted keys with ``__``:
    ``config(params__e=0.5)``."""
    flat = {k.replace("__", "."): v for k, v in overrides.items()}
    return json.loads(_spdope.canonical_config(_document(cfg, flat)))


def config_hash(cfg: ConfigLike = None) -> str:
    return _spdope.config_hash(_document(cfg))


@dataclass
class MinimizerResult:
    mu: float
    c: float
    omega: float
    converged: bool
    iterations: int
    residuals: dict
    energy: dict
    warnings: list
    u: np.ndarray


def minimize(cfg: ConfigLike = None, **overrides: Any) -> MinimizerResult:
    flat = {k.replace("__", "."): v for k, v in overrides.items()}
    text, u = _spdope.minimize(_document(cfg, flat))
    r = json.loads(text)
    return MinimizerResult(
        mu=r["mu"],
        c=r["c"],
        omega=r["omega"],
        converged=r["converged"],
        iterations=r["iterations"],
        residuals=r["residuals"],
        energy=r["energy"],
        warnings=r["warnings"],
        u=u,
    )


def energy(u: np.ndarray, cfg: ConfigLike = None) -> dict:
    """Energy breakdown of u on the configured box (N is taken from u)."""
    return json.loads(_spdope.energy_breakdown(_document(cfg), np.asarray(u, dtype=np.complex128)))


def sample_rho(cfg: ConfigLike = None) -> np.ndarray:
    return _spdope.sample_rho(_document(cfg))


def read_field(path: str) -> tuple[np.ndarray, float]:
    return _spdope.read_field(str(path))


def write_field(path: str, array: np.ndarray, box_length: float) -> None:
    _spdope.write_field(str(path), np.asarray(array, dtype=np.complex128), float(box_length))


def ball_geometry(center: Sequence[float], radius: float) -> dict:
    return _spdope.ball_geometry(list(center), float(radius))


def run(*args: str) -> int:
    """Run a CLI subcommand in process, e.g. ``run("minimize", "--config", "a.toml")``."""
    return _spdope.run_cli([str(a) for a in args])
