"""Experiment configuration: sectioned key=value files plus shipped presets.

The format is deliberately flat and diffable; every key is validated and
unknown keys are rejected with their section path.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field
from pathlib import Path

from .chain import ChainSpec
from .propagator import EvolutionModel

_KNOWN = {
    "chain": {"n_total", "n_sender", "n_receiver", "n_ext_receiver", "coupling_exponent"},
    "model": {"kind", "n", "eps_tilde"},
    "solver": {"k_omega", "n_starts", "seed", "tol_root", "max_iters"},
    "sweep": {"horizon", "horizon_factor", "grid_step", "n_list", "tau_reg"},
    "output": {"directory", "formats"},
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    chain: ChainSpec
    model_kinds: tuple[str, ...]
    trotter_ns: tuple[int, ...]
    eps_tildes: tuple[float, ...]
    k_omega: int
    n_starts: int
    seed: int
    tol_root: float
    max_iters: int
    horizon: float | None
    horizon_factor: float
    grid_step: float
    n_list: tuple[int, ...]
    tau_reg: float | None
    output_dir: str
    formats: tuple[str, ...]
    source_text: str = ""

    def variants(self) -> list[EvolutionModel]:
        """One evolution model per requested kind/parameter combination."""
        out = []
        for kind in self.model_kinds:
            if kind == "exact":
                out.append(EvolutionModel("exact"))
            elif kind == "trotter":
                out.extend(EvolutionModel("trotter", n=n) for n in self.trotter_ns)
            elif kind == "pulse":
                out.extend(
                    EvolutionModel("pulse", eps_tilde=e) for e in self.eps_tildes
                )
            else:
                raise ConfigError(f"model.kind: unknown kind {kind!r}")
        return out

    def resolved_horizon(self) -> float:
        if self.horizon is not None:
            return self.horizon
        return self.horizon_factor * self.chain.n_total


def _get(parser, section, key, conv, default=None, required=False):
    if parser.has_option(section, key):
        raw = parser.get(section, key)
        try:
            return conv(raw)
        except Exception as exc:
            raise ConfigError(f"{section}.{key}: cannot parse {raw!r}") from exc
    if required:
        raise ConfigError(f"{section}.{key}: missing required key")
    return default


def _int_list(raw: str):
    return tuple(int(x) for x in raw.replace(",", " ").split())


def _float_list(raw: str):
    return tuple(float(x) for x in raw.replace(",", " ").split())


def _str_list(raw: str):
    return tuple(x.strip() for x in raw.split(",") if x.strip())


def parse_config(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config parse error: {exc}") from exc
    for section in parser.sections():
        if section not in _KNOWN:
            raise ConfigError(f"unknown section [{section}]")
        for key in parser.options(section):
            if key not in _KNOWN[section]:
                raise ConfigError(f"unknown key {section}.{key}")
    try:
        chain = ChainSpec(
            n_total=_get(parser, "chain", "n_total", int, required=True),
            n_sender=_get(parser, "chain", "n_sender", int, required=True),
            n_receiver=_get(parser, "chain", "n_receiver", int, required=True),
            n_ext_receiver=_get(parser, "chain", "n_ext_receiver", int, required=True),
            coupling_exponent=_get(parser, "chain", "coupling_exponent", float, 3.0),
        )
    except ValueError as exc:
        raise ConfigError(f"chain: {exc}") from exc
    kinds = _get(parser, "model", "kind", _str_list, required=True)
    for kind in kinds:
        if kind not in ("exact", "trotter", "pulse"):
            raise ConfigError(f"model.kind: unknown kind {kind!r}")
    cfg = ExperimentConfig(
        chain=chain,
        model_kinds=kinds,
        trotter_ns=_get(parser, "model", "n", _int_list, (1,)),
        eps_tildes=_get(parser, "model", "eps_tilde", _float_list, (1.0,)),
        k_omega=_get(parser, "solver", "k_omega", int, required=True),
        n_starts=_get(parser, "solver", "n_starts", int, 100),
        seed=_get(parser, "solver", "seed", int, 0),
        tol_root=_get(parser, "solver", "tol_root", float, 1e-10),
        max_iters=_get(parser, "solver", "max_iters", int, 200),
        horizon=_get(parser, "sweep", "horizon", float),
        horizon_factor=_get(parser, "sweep", "horizon_factor", float, 10.0),
        grid_step=_get(parser, "sweep", "grid_step", float, 0.1),
        n_list=_get(parser, "sweep", "n_list", _int_list, ()),
        tau_reg=_get(parser, "sweep", "tau_reg", float),
        output_dir=_get(parser, "output", "directory", str, "out"),
        formats=_get(parser, "output", "formats", _str_list, ("csv", "json", "svg")),
        source_text=text,
    )
    for n in cfg.trotter_ns:
        if n < 1:
            raise ConfigError("model.n: Trotterization numbers must be >= 1")
    for e in cfg.eps_tildes:
        if not (0.0 < e <= 1.0):
            raise ConfigError("model.eps_tilde: values must lie in (0, 1]")
    if cfg.k_omega < 1:
        raise ConfigError("solver.k_omega: must be >= 1")
    if cfg.grid_step <= 0:
        raise ConfigError("sweep.grid_step: must be positive")
    return cfg


PRESETS = {
    # N=6 two-qubit sender, Trotterized model, S-curves per n
    "fig2": """\
[chain]
n_total = 6
n_sender = 2
n_receiver = 2
n_ext_receiver = 2

[model]
kind = trotter
n = 10, 20, 30, 60

[solver]
k_omega = 4
n_starts = 1000
seed = 0

[sweep]
horizon = 60
grid_step = 0.1
tau_reg = 20

[output]
directory = out/fig2
""",
    # N=6, exact evolution alongside n=60 Trotterization
    "fig4": """\
[chain]
n_total = 6
n_sender = 2
n_receiver = 2
n_ext_receiver = 2

[model]
kind = exact, trotter
n = 60

[solver]
k_omega = 4
n_starts = 1000
seed = 0

[sweep]
horizon = 60
grid_step = 0.1
tau_reg = 20

[output]
directory = out/fig4
""",
    # N=6, strong-pulse model across pulse ratios
    "fig6": """\
[chain]
n_total = 6
n_sender = 2
n_receiver = 2
n_ext_receiver = 2

[model]
kind = pulse
eps_tilde = 0.01, 0.001, 0.0001

# the four-segment pulse system has no roots at this chain length; five
# segments make the constraint system overdetermined-free and solvable
[solver]
k_omega = 5
n_starts = 1000
seed = 0

[sweep]
horizon = 60
grid_step = 0.1
tau_reg = 20

[output]
directory = out/fig6
""",
    # two-qubit sender, chain-length sweep, strong-pulse model
    "fig7": """\
[chain]
n_total = 6
n_sender = 2
n_receiver = 2
n_ext_receiver = 2

[model]
kind = pulse
eps_tilde = 0.01, 0.001, 0.0001, 0.00001

[solver]
k_omega = 5
n_starts = 1000
seed = 0

[sweep]
horizon_factor = 30
grid_step = 0.1
n_list = 6, 8, 10, 12, 14, 16, 18, 20, 22, 24, 26, 28, 30

[output]
directory = out/fig7
""",
    # three-qubit sender, chain-length sweep, strong-pulse model
    "fig8": """\
[chain]
n_total = 8
n_sender = 3
n_receiver = 3
n_ext_receiver = 3

[model]
kind = pulse
eps_tilde = 0.01, 0.001, 0.0001, 0.00001

[solver]
k_omega = 7
n_starts = 2000
seed = 0

[sweep]
horizon_factor = 30
grid_step = 0.1
n_list = 8, 10, 12, 14, 16, 18, 20, 22, 24, 26, 28, 30
tau_reg = 26

[output]
directory = out/fig8
""",
}


def load_config(path: str) -> ExperimentConfig:
    """Load a config file; bare preset names resolve to shipped presets."""
    p = Path(path)
    if p.exists():
        return parse_config(p.read_text())
    if path in PRESETS:
        return parse_config(PRESETS[path])
    raise ConfigError(f"no such config file or preset: {path}")
