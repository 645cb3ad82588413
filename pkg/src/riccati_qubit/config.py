"""Run configuration for the command-line front end.

A configuration is a YAML document::

    model: {alpha: 0.8, beta: 0.25, omega: 0.0}
    environment:
      spinBath: {omegas: [1.0, 0.5], couplings: [0.3, 0.1]}
      # or  explicit: {hE: he.txt, v: v.txt}
    initial:
      qubit: {bloch: [1, 0, 0]}          # or {matrix: file-or-inline}
      environment: maximallyMixed        # groundState, or {matrix: ...}
      correlated:                        # optional, replaces the product state
        gamma: [[...]]
        qubitFactors: [...]
        environmentFactors: [...]
    timeGrid: {start: 0, stop: 10, points: 101}
    branch: positive
    outputs:
      - {path: out.csv, format: csv}

Matrix entries are either file names (read relative to the config file) or
inline nested lists of numbers / ``"re+imj"`` strings.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .dynamics import JointState, QubitState, validate_env_density
from .exceptions import HermiticityError, InvalidStateError
from .hamiltonians import EnvironmentPair, ModelParams, spin_bath
from .matrix_io import format_complex, parse_complex, read_matrix
from .riccati import Branch

OUTPUT_FORMATS = ("csv", "jsonl")
ENV_PRESETS = ("maximallyMixed", "groundState")


class ConfigError(ValueError):
    """Malformed or invalid run configuration; carries the field path and line when known."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if path:
            where.append(f"field {path}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)


MatrixSpec = Any  # str (file name) or tuple of tuples of complex


@dataclass(frozen=True)
class ModelSection:
    alpha: float
    beta: float
    omega: float = 0.0


@dataclass(frozen=True)
class SpinBathSource:
    omegas: tuple[float, ...]
    couplings: tuple[float, ...]


@dataclass(frozen=True)
class ExplicitSource:
    h_e: MatrixSpec
    v: MatrixSpec


@dataclass(frozen=True)
class CorrelatedSection:
    gamma: tuple[tuple[complex, ...], ...]
    qubit_factors: tuple[MatrixSpec, ...]
    environment_factors: tuple[MatrixSpec, ...]


@dataclass(frozen=True)
class InitialSection:
    qubit_bloch: tuple[float, float, float] | None = None
    qubit_matrix: MatrixSpec | None = None
    environment: str | MatrixSpec | None = None
    correlated: CorrelatedSection | None = None


@dataclass(frozen=True)
class TimeGrid:
    start: float
    stop: float
    points: int

    def values(self) -> np.ndarray:
        if self.points == 1:
            return np.array([self.start])
        return np.linspace(self.start, self.stop, self.points)


@dataclass(frozen=True)
class OutputSpec:
    path: str
    format: str


@dataclass(frozen=True)
class RunConfig:
    model: ModelSection
    environment: SpinBathSource | ExplicitSource
    initial: InitialSection
    time_grid: TimeGrid
    branch: Branch = Branch.POSITIVE
    outputs: tuple[OutputSpec, ...] = ()
    base_dir: Path = field(default=Path("."), compare=False)

    # --- runtime objects ---------------------------------------------------

    def params(self) -> ModelParams:
        return ModelParams(self.model.alpha, self.model.beta, self.model.omega)

    def load_matrix(self, spec: MatrixSpec, path: str) -> np.ndarray:
        if isinstance(spec, str):
            file = self.base_dir / spec
            try:
                return read_matrix(file)
            except OSError as exc:
                raise ConfigError(f"cannot read matrix file {file}: {exc.strerror}", path) from None
            except ValueError as exc:
                raise ConfigError(str(exc), path) from None
        return np.array(spec, dtype=complex)

    def build_environment(self) -> EnvironmentPair:
        src = self.environment
        try:
            if isinstance(src, SpinBathSource):
                return spin_bath(src.omegas, src.couplings)
            return EnvironmentPair(
                self.load_matrix(src.h_e, "environment.explicit.hE"),
                self.load_matrix(src.v, "environment.explicit.v"),
            )
        except HermiticityError as exc:
            raise ConfigError(str(exc), "environment.explicit") from None
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc), "environment") from None

    def qubit_state(self) -> np.ndarray:
        init = self.initial
        try:
            if init.qubit_bloch is not None:
                return QubitState.from_bloch(init.qubit_bloch).rho
            return QubitState(self.load_matrix(init.qubit_matrix, "initial.qubit.matrix")).rho
        except InvalidStateError as exc:
            raise ConfigError(str(exc), "initial.qubit") from None

    def environment_state(self, env: EnvironmentPair) -> np.ndarray:
        spec = self.initial.environment
        d = env.dim
        if spec == "maximallyMixed":
            return np.eye(d, dtype=complex) / d
        if spec == "groundState":
            w, u = np.linalg.eigh(env.h_e.matrix)
            ground = u[:, w - w[0] <= 1e-9 * max(1.0, abs(w).max())]
            return ground @ ground.conj().T / ground.shape[1]
        rho = self.load_matrix(spec, "initial.environment.matrix")
        if rho.shape != (d, d):
            raise ConfigError(f"environment state has shape {rho.shape}, expected {(d, d)}", "initial.environment")
        try:
            return validate_env_density(rho)
        except InvalidStateError as exc:
            raise ConfigError(str(exc), "initial.environment") from None

    def joint_state(self, env: EnvironmentPair) -> JointState:
        corr = self.initial.correlated
        try:
            if corr is None:
                return JointState.product(self.qubit_state(), self.environment_state(env))
            qs = [self.load_matrix(s, f"initial.correlated.qubitFactors[{k}]") for k, s in enumerate(corr.qubit_factors)]
            es = [self.load_matrix(s, f"initial.correlated.environmentFactors[{k}]") for k, s in enumerate(corr.environment_factors)]
            for k, r in enumerate(es):
                if r.shape != (env.dim, env.dim):
                    raise ConfigError(f"factor has shape {r.shape}, expected {(env.dim, env.dim)}", f"initial.correlated.environmentFactors[{k}]")
            return JointState.structured(corr.gamma, qs, es)
        except InvalidStateError as exc:
            raise ConfigError(str(exc), "initial") from None

    # --- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        def mat(spec):
            if isinstance(spec, str):
                return spec
            return [[format_complex(z) for z in row] for row in spec]

        env = self.environment
        if isinstance(env, SpinBathSource):
            env_d = {"spinBath": {"omegas": list(env.omegas), "couplings": list(env.couplings)}}
        else:
            env_d = {"explicit": {"hE": mat(env.h_e), "v": mat(env.v)}}
        init = self.initial
        init_d: dict = {}
        if init.qubit_bloch is not None:
            init_d["qubit"] = {"bloch": list(init.qubit_bloch)}
        elif init.qubit_matrix is not None:
            init_d["qubit"] = {"matrix": mat(init.qubit_matrix)}
        if init.environment is not None:
            init_d["environment"] = (
                init.environment if init.environment in ENV_PRESETS else {"matrix": mat(init.environment)}
            )
        if init.correlated is not None:
            c = init.correlated
            init_d["correlated"] = {
                "gamma": mat(c.gamma),
                "qubitFactors": [mat(s) for s in c.qubit_factors],
                "environmentFactors": [mat(s) for s in c.environment_factors],
            }
        return {
            "model": {"alpha": self.model.alpha, "beta": self.model.beta, "omega": self.model.omega},
            "environment": env_d,
            "initial": init_d,
            "timeGrid": {"start": self.time_grid.start, "stop": self.time_grid.stop, "points": self.time_grid.points},
            "branch": self.branch.value,
            "outputs": [{"path": o.path, "format": o.format} for o in self.outputs],
        }

    def dumps(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False, default_flow_style=None, width=100)

    def digest(self) -> str:
        return hashlib.sha256(self.dumps().encode()).hexdigest()


# --- parsing ---------------------------------------------------------------------


class _Reader:
    """Walks the loaded document while tracking field paths and source lines."""

    def __init__(self, node: yaml.Node | None):
        self.root = node

    def line(self, path: tuple) -> int | None:
        node = self.root
        for key in path:
            if isinstance(node, yaml.MappingNode):
                nxt = None
                for k, v in node.value:
                    if k.value == key:
                        nxt = v
                        break
                if nxt is None:
                    break
                node = nxt
            elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
                node = node.value[key]
            else:
                break
        return None if node is None else node.start_mark.line + 1

    def error(self, path: tuple, message: str) -> ConfigError:
        dotted = ".".join(f"[{p}]" if isinstance(p, int) else str(p) for p in path).replace(".[", "[")
        return ConfigError(message, dotted or None, self.line(path))


def _mapping(r: _Reader, value, path, required=(), optional=()) -> dict:
    if not isinstance(value, dict):
        raise r.error(path, "expected a mapping")
    unknown = set(value) - set(required) - set(optional)
    if unknown:
        raise r.error(path, f"unknown keys {sorted(unknown)}")
    for key in required:
        if key not in value:
            raise r.error(path, f"missing key {key!r}")
    return value


def _number(r: _Reader, value, path) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise r.error(path, f"expected a number, got {value!r}")
    if not np.isfinite(value):
        raise r.error(path, "must be finite")
    return float(value)


def _numbers(r: _Reader, value, path) -> tuple[float, ...]:
    if not isinstance(value, list):
        raise r.error(path, "expected a list of numbers")
    return tuple(_number(r, v, path + (k,)) for k, v in enumerate(value))


def _complex(r: _Reader, value, path) -> complex:
    if isinstance(value, str):
        try:
            return parse_complex(value)
        except ValueError as exc:
            raise r.error(path, str(exc)) from None
    return complex(_number(r, value, path))


def _matrix_spec(r: _Reader, value, path) -> MatrixSpec:
    if isinstance(value, str):
        return value
    if not isinstance(value, list) or not value or not all(isinstance(row, list) for row in value):
        raise r.error(path, "expected a file name or a nested list of entries")
    rows = tuple(tuple(_complex(r, z, path + (i, j)) for j, z in enumerate(row)) for i, row in enumerate(value))
    if len({len(row) for row in rows}) != 1:
        raise r.error(path, "rows have different lengths")
    return rows


def _parse(r: _Reader, doc, base_dir: Path) -> RunConfig:
    doc = _mapping(r, doc, (), ("model", "environment", "initial", "timeGrid"), ("branch", "outputs"))

    m = _mapping(r, doc["model"], ("model",), ("alpha", "beta"), ("omega",))
    model = ModelSection(
        _number(r, m["alpha"], ("model", "alpha")),
        _number(r, m["beta"], ("model", "beta")),
        _number(r, m.get("omega", 0.0), ("model", "omega")),
    )

    e = _mapping(r, doc["environment"], ("environment",), (), ("spinBath", "explicit"))
    if len(e) != 1:
        raise r.error(("environment",), "exactly one of 'spinBath' or 'explicit' is required")
    if "spinBath" in e:
        p = ("environment", "spinBath")
        sb = _mapping(r, e["spinBath"], p, ("omegas", "couplings"))
        omegas = _numbers(r, sb["omegas"], p + ("omegas",))
        couplings = _numbers(r, sb["couplings"], p + ("couplings",))
        if len(omegas) != len(couplings) or not omegas:
            raise r.error(p, "omegas and couplings must be non-empty and of equal length")
        environment: SpinBathSource | ExplicitSource = SpinBathSource(omegas, couplings)
    else:
        p = ("environment", "explicit")
        ex = _mapping(r, e["explicit"], p, ("hE", "v"))
        environment = ExplicitSource(_matrix_spec(r, ex["hE"], p + ("hE",)), _matrix_spec(r, ex["v"], p + ("v",)))

    p = ("initial",)
    i = _mapping(r, doc["initial"], p, (), ("qubit", "environment", "correlated"))
    bloch = qmat = env_init = corr = None
    if "correlated" in i:
        cp = p + ("correlated",)
        c = _mapping(r, i["correlated"], cp, ("gamma", "qubitFactors", "environmentFactors"))
        gamma = _matrix_spec(r, c["gamma"], cp + ("gamma",))
        if isinstance(gamma, str):
            raise r.error(cp + ("gamma",), "gamma must be given inline")
        for key in ("qubitFactors", "environmentFactors"):
            if not isinstance(c[key], list) or not c[key]:
                raise r.error(cp + (key,), "expected a non-empty list of matrices")
        qf = tuple(_matrix_spec(r, s, cp + ("qubitFactors", k)) for k, s in enumerate(c["qubitFactors"]))
        ef = tuple(_matrix_spec(r, s, cp + ("environmentFactors", k)) for k, s in enumerate(c["environmentFactors"]))
        if (len(gamma), len(gamma[0])) != (len(qf), len(ef)):
            raise r.error(cp + ("gamma",), f"gamma must be {len(qf)}x{len(ef)}")
        corr = CorrelatedSection(gamma, qf, ef)
    else:
        for key in ("qubit", "environment"):
            if key not in i:
                raise r.error(p, f"missing key {key!r} (required without 'correlated')")
    if "qubit" in i:
        qp = p + ("qubit",)
        q = _mapping(r, i["qubit"], qp, (), ("bloch", "matrix"))
        if len(q) != 1:
            raise r.error(qp, "exactly one of 'bloch' or 'matrix' is required")
        if "bloch" in q:
            b = _numbers(r, q["bloch"], qp + ("bloch",))
            if len(b) != 3:
                raise r.error(qp + ("bloch",), "Bloch vector needs 3 components")
            if np.dot(b, b) > 1 + 1e-12:
                raise r.error(qp + ("bloch",), "Bloch vector longer than 1")
            bloch = b
        else:
            qmat = _matrix_spec(r, q["matrix"], qp + ("matrix",))
    if "environment" in i:
        ep = p + ("environment",)
        val = i["environment"]
        if isinstance(val, str):
            if val not in ENV_PRESETS:
                raise r.error(ep, f"expected one of {ENV_PRESETS} or {{matrix: ...}}")
            env_init = val
        else:
            env_init = _matrix_spec(r, _mapping(r, val, ep, ("matrix",))["matrix"], ep + ("matrix",))
    initial = InitialSection(bloch, qmat, env_init, corr)

    g = _mapping(r, doc["timeGrid"], ("timeGrid",), ("start", "stop", "points"))
    pts = g["points"]
    if isinstance(pts, bool) or not isinstance(pts, int) or pts < 1:
        raise r.error(("timeGrid", "points"), "points must be an integer >= 1")
    grid = TimeGrid(_number(r, g["start"], ("timeGrid", "start")), _number(r, g["stop"], ("timeGrid", "stop")), pts)
    if grid.stop < grid.start:
        raise r.error(("timeGrid",), "stop must be >= start")

    try:
        branch = Branch.parse(doc.get("branch", "positive"))
    except ValueError:
        raise r.error(("branch",), "branch must be 'positive' or 'negative'") from None

    outs = doc.get("outputs", [])
    if not isinstance(outs, list):
        raise r.error(("outputs",), "expected a list")
    outputs = []
    for k, o in enumerate(outs):
        op = ("outputs", k)
        o = _mapping(r, o, op, ("path",), ("format",))
        if not isinstance(o["path"], str) or not o["path"]:
            raise r.error(op + ("path",), "path must be a non-empty string")
        fmt = o.get("format", Path(o["path"]).suffix.lstrip(".") or "csv")
        if fmt not in OUTPUT_FORMATS:
            raise r.error(op + ("format",), f"format must be one of {OUTPUT_FORMATS}")
        outputs.append(OutputSpec(o["path"], fmt))

    return RunConfig(model, environment, initial, grid, branch, tuple(outputs), base_dir)


def loads(text: str, base_dir=".") -> RunConfig:
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        doc = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        raise ConfigError(f"YAML syntax error: {exc.problem}", line=None if mark is None else mark.line + 1) from None
    return _parse(_Reader(node), doc, Path(base_dir))


def load(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return loads(text, path.parent)
