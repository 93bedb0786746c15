"""Scenario configuration, method dispatch, comparison and export."""

import configparser
import dataclasses
import datetime
import json
import logging
import math
import os
import subprocess
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
from tqdm import tqdm

import oracle
from correlators import CorrelationGrid, GridKind, Method, count_rate, g3_connected, jacobi_grid, time_grid
from errors import CapacityError, ConfigValidationError, GridShapeError
from results_database import create_tables, database_url, engine_for
from scattering import EnsembleParams
from wavefield import Wavefield

ENV_PREFIX = "TRIPLES"
SWEEP_AXES = {"M": "num_atoms", "P_in": "drive_power", "beta": "beta"}
LOOP_FLAGS = ("auto", "on", "off")
GRID_KINDS = ("time", "jacobi")

DEFAULTS = {
    "ensemble": {
        "beta": "0.05",
        "num_atoms": "2",
        "gamma_tot": "1.0",
        "drive_power": "0.02",
        "gamma_tot_hz": str(2 * math.pi * 5e6),
    },
    "method": {"method": "diagrammatic", "loop": "auto", "threads": "1"},
    "grid": {
        "kind": "time",
        "t_start": "0.0",
        "t_stop": "5.0",
        "points": "50",
        "eta_min": "-4.0",
        "eta_max": "4.0",
        "zeta_min": "-4.0",
        "zeta_max": "4.0",
        "center": "0.0",
    },
    "tolerances": {
        "segment_nodes": "48",
        "tail_nodes": "64",
        "steady_state_tol": "1e-10",
        "oracle_cap": str(oracle.MAX_ATOMS),
        "window": "3.0",
    },
    "output": {"directory": "results", "database": "", "name": "scenario"},
}


@dataclass
class GridSpec:
    kind: str = "time"
    t_start: float = 0.0
    t_stop: float = 5.0
    points: int = 50
    eta_range: tuple = (-4.0, 4.0)
    zeta_range: tuple = (-4.0, 4.0)
    center: float = 0.0


@dataclass
class Tolerances:
    segment_nodes: int = 48
    tail_nodes: int = 64
    steady_state_tol: float = 1e-10
    oracle_cap: int = oracle.MAX_ATOMS


@dataclass
class ScenarioConfig:
    params: EnsembleParams
    method: Method = Method.DIAGRAMMATIC
    grid: GridSpec = field(default_factory=GridSpec)
    loop: str = "auto"
    tolerances: Tolerances = field(default_factory=Tolerances)
    out_dir: Path = Path("results")
    gamma_tot_hz: float = 2 * math.pi * 5e6
    window: float = 3.0
    threads: int = 1
    database: str = ""
    name: str = "scenario"

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def violations(self):
        found = []
        grid = self.grid
        if grid.kind not in GRID_KINDS:
            found.append(f"grid kind must be one of {GRID_KINDS}, got {grid.kind!r}")
        if grid.points < 2:
            found.append(f"grid resolution must be at least 2, got {grid.points}")
        bounds = [grid.t_start, grid.t_stop, *grid.eta_range, *grid.zeta_range, grid.center]
        if not all(math.isfinite(v) for v in bounds):
            found.append("grid ranges must be finite")
        if grid.kind == "time" and not 0.0 <= grid.t_start < grid.t_stop:
            found.append(f"time range must satisfy 0 <= start < stop, got [{grid.t_start}, {grid.t_stop}]")
        if grid.kind == "jacobi" and not (
            grid.eta_range[0] < grid.eta_range[1] and grid.zeta_range[0] < grid.zeta_range[1]
        ):
            found.append("jacobi ranges must be increasing")
        if self.method in (Method.ORACLE, Method.BOTH) and grid.kind != "time":
            found.append("the oracle only evaluates time grids")
        if self.method in (Method.ORACLE, Method.BOTH) and self.params.drive_power <= 0.0:
            found.append("the oracle needs a nonzero drive power")
        if self.loop not in LOOP_FLAGS:
            found.append(f"loop flag must be one of {LOOP_FLAGS}, got {self.loop!r}")
        if self.threads < 1:
            found.append(f"threads must be positive, got {self.threads}")
        if not self.window > 0.0:
            found.append(f"count window must be positive, got {self.window}")
        if not self.gamma_tot_hz > 0.0:
            found.append(f"gamma_tot_hz must be positive, got {self.gamma_tot_hz}")
        if self.tolerances.segment_nodes < 4 or self.tolerances.tail_nodes < 4:
            found.append("quadrature node counts must be at least 4")
        if not self.tolerances.steady_state_tol > 0.0:
            found.append("steady_state_tol must be positive")
        return found

    def validate(self):
        found = self.violations()
        if found:
            raise ConfigValidationError(found)
        cap = self.tolerances.oracle_cap
        if self.method in (Method.ORACLE, Method.BOTH) and self.params.num_atoms > cap:
            raise CapacityError(f"the oracle handles at most M={cap} atoms, got M={self.params.num_atoms}")
        return self


def _read(config, path, environ):
    if path is not None:
        if not Path(path).is_file():
            raise ConfigValidationError(f"configuration file {path} does not exist")
        config.read(path)
    for section in config.sections():
        for key in config[section]:
            variable = f"{ENV_PREFIX}_{section.upper()}_{key.upper()}"
            if variable in environ:
                config.set(section, key, environ[variable])


def load_config(path=None, overrides=None, environ=None):
    """Scenario from an INI file, TRIPLES_<SECTION>_<KEY> variables and overrides.

    ``overrides`` maps (section, key) to a string value and wins over both.
    """
    config = configparser.ConfigParser()
    config.read_dict(DEFAULTS)
    _read(config, path, os.environ if environ is None else environ)
    for (section, key), value in (overrides or {}).items():
        if value is not None:
            config.set(section, key, str(value))

    found = []

    def typed(getter, section, key):
        try:
            return getter(section, key)
        except ValueError:
            found.append(f"[{section}] {key} = {config.get(section, key)!r} is not a valid value")
            return None

    beta = typed(config.getfloat, "ensemble", "beta")
    num_atoms = typed(config.getint, "ensemble", "num_atoms")
    gamma_tot = typed(config.getfloat, "ensemble", "gamma_tot")
    drive_power = typed(config.getfloat, "ensemble", "drive_power")
    gamma_tot_hz = typed(config.getfloat, "ensemble", "gamma_tot_hz")
    threads = typed(config.getint, "method", "threads")
    points = typed(config.getint, "grid", "points")
    bounds = {
        key: typed(config.getfloat, "grid", key)
        for key in ("t_start", "t_stop", "eta_min", "eta_max", "zeta_min", "zeta_max", "center")
    }
    segment_nodes = typed(config.getint, "tolerances", "segment_nodes")
    tail_nodes = typed(config.getint, "tolerances", "tail_nodes")
    steady_state_tol = typed(config.getfloat, "tolerances", "steady_state_tol")
    oracle_cap = typed(config.getint, "tolerances", "oracle_cap")
    window = typed(config.getfloat, "tolerances", "window")

    method = config.get("method", "method")
    if method not in {m.value for m in Method}:
        found.append(f"[method] method must be one of {[m.value for m in Method]}, got {method!r}")

    params = None
    if None not in (beta, num_atoms, gamma_tot, drive_power):
        try:
            params = EnsembleParams(beta, num_atoms, gamma_tot, drive_power)
        except ConfigValidationError as error:
            found.extend(error.violations)
    if found:
        raise ConfigValidationError(found)

    scenario = ScenarioConfig(
        params=params,
        method=Method(method),
        grid=GridSpec(
            kind=config.get("grid", "kind"),
            t_start=bounds["t_start"],
            t_stop=bounds["t_stop"],
            points=points,
            eta_range=(bounds["eta_min"], bounds["eta_max"]),
            zeta_range=(bounds["zeta_min"], bounds["zeta_max"]),
            center=bounds["center"],
        ),
        loop=config.get("method", "loop"),
        tolerances=Tolerances(segment_nodes, tail_nodes, steady_state_tol, oracle_cap),
        out_dir=Path(config.get("output", "directory")),
        gamma_tot_hz=gamma_tot_hz,
        window=window,
        threads=threads,
        database=config.get("output", "database"),
        name=config.get("output", "name"),
    )
    scenario.validate()
    return scenario


@dataclass
class ComparisonReport:
    epsilon: float
    max_deviation: float
    kind: GridKind
    shape: tuple
    axes: dict
    runtime: dict = field(default_factory=dict)

    def as_dict(self):
        return {
            "epsilon": self.epsilon,
            "max_deviation": self.max_deviation,
            "kind": self.kind.value,
            "shape": list(self.shape),
            "axes": {name: [float(axis[0]), float(axis[-1]), len(axis)] for name, axis in self.axes.items()},
            "runtime": self.runtime,
        }


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    grids: dict
    report: ComparisonReport = None
    files: list = field(default_factory=list)


def compare_grids(a, b):
    """epsilon = ||a - b||_F / ||a||_F with a as the reference."""
    if a.kind != b.kind:
        raise GridShapeError(f"cannot compare a {a.kind.value} grid with a {b.kind.value} grid")
    if list(a.axes) != list(b.axes) or any(
        not np.array_equal(a.axes[name], b.axes[name]) for name in a.axes
    ):
        raise GridShapeError("grids are defined on different axes")
    difference = a.values - b.values
    reference = np.linalg.norm(a.values.ravel())
    distance = np.linalg.norm(difference.ravel())
    if reference == 0.0:
        epsilon = 0.0 if distance == 0.0 else math.inf
    else:
        epsilon = float(distance / reference)
    return ComparisonReport(
        epsilon=epsilon,
        max_deviation=float(np.max(np.abs(difference))) if difference.size else 0.0,
        kind=a.kind,
        shape=a.shape,
        axes=a.axes,
    )


def version():
    try:
        described = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            capture_output=True,
            text=True,
            check=False,
            cwd=Path(__file__).parent,
        )
    except OSError:
        return "unknown"
    return described.stdout.strip() or "unknown"


def wavefield_for(config):
    return Wavefield(
        config.params,
        config.loop,
        config.tolerances.segment_nodes,
        config.tolerances.tail_nodes,
    )


def diagrammatic_grid(config, wave=None):
    wave = wave or wavefield_for(config)
    grid = config.grid
    if grid.kind == "jacobi":
        return jacobi_grid(config.params, grid.eta_range, grid.zeta_range, grid.points, grid.center, wave)
    return time_grid(config.params, (grid.t_start, grid.t_stop), grid.points, wave)


def oracle_grid(config):
    grid = config.grid
    times = np.linspace(grid.t_start, grid.t_stop, grid.points)
    liouvillian = oracle.build_liouvillian(config.params, config.tolerances.oracle_cap)
    state = oracle.steady_state(liouvillian, config.tolerances.steady_state_tol)
    return oracle.qrt_g3(
        config.params,
        times,
        times,
        connected=True,
        threads=config.threads,
        liouvillian=liouvillian,
        state=state,
        cap=config.tolerances.oracle_cap,
    )


def _sidecar(grid, config):
    return {
        "params": grid.params.as_dict(),
        "method": grid.method.value,
        "kind": grid.kind.value,
        "axes": list(grid.axes),
        "meta": grid.meta,
        "version": version(),
        "loop": config.loop if config is not None else None,
        "tolerances": dataclasses.asdict(config.tolerances) if config is not None else None,
    }


def write_grid(grid, path, config=None):
    """Long-format CSV plus a JSON sidecar next to it; returns both paths."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    grid.to_frame().to_csv(path, index=False)
    sidecar = path.with_suffix(".json")
    sidecar.write_text(json.dumps(_sidecar(grid, config), indent=2, sort_keys=True))
    return path, sidecar


def read_grid(path):
    path = Path(path)
    frame = pd.read_csv(path, float_precision="round_trip")
    sidecar = json.loads(path.with_suffix(".json").read_text())
    frame = frame[sidecar["axes"] + ["value"]]
    return CorrelationGrid.from_frame(
        frame,
        GridKind(sidecar["kind"]),
        EnsembleParams(**sidecar["params"]),
        Method(sidecar["method"]),
        sidecar.get("meta"),
    )


def _origin(grid):
    """Grid value closest to the coincidence point."""
    index = tuple(int(np.argmin(np.abs(axis))) for axis in grid.axes.values())
    return float(grid.values[index])


def _record(config, result, runtimes):
    engine = engine_for(database_url(config.out_dir, config.database))
    create_tables(engine)
    created = datetime.datetime.now()
    params = config.params
    rows = []
    for method, grid in result.grids.items():
        rows.append(
            {
                "name": config.name,
                "method": method.value,
                "kind": grid.kind.value,
                "grid": config.grid.kind,
                "beta": params.beta,
                "num_atoms": params.num_atoms,
                "gamma_tot": params.gamma_tot,
                "drive_power": params.drive_power,
                "optical_depth": params.optical_depth,
                "points": int(grid.values.size),
                "g3c_origin": _origin(grid),
                "runtime": runtimes[method],
                "csv_path": str(config.out_dir / f"{config.name}_{method.value}.csv"),
                "version": version(),
                "created": created,
            }
        )
    pd.DataFrame(rows).to_sql("scenarios", engine, if_exists="append", index=False)
    if result.report is not None:
        report = result.report
        pd.DataFrame(
            [
                {
                    "name": config.name,
                    "kind": report.kind.value,
                    "beta": params.beta,
                    "num_atoms": params.num_atoms,
                    "drive_power": params.drive_power,
                    "epsilon": report.epsilon,
                    "max_deviation": report.max_deviation,
                    "points": int(np.prod(report.shape)),
                    "created": created,
                }
            ]
        ).to_sql("comparisons", engine, if_exists="append", index=False)
    logging.info(f"Records for {config.name} written at {created}")


def run_scenario(config, record=True):
    """Compute the requested grids and write them under ``config.out_dir``."""
    config.validate()
    logging.info(
        f"Scenario {config.name}: method={config.method.value}, beta={config.params.beta}, "
        f"M={config.params.num_atoms}, P_in={config.params.drive_power}"
    )
    methods = [Method.DIAGRAMMATIC, Method.ORACLE] if config.method == Method.BOTH else [config.method]
    grids = {}
    runtimes = {}
    for method in methods:
        start = time.time()
        grids[method] = diagrammatic_grid(config) if method == Method.DIAGRAMMATIC else oracle_grid(config)
        runtimes[method] = time.time() - start
        logging.info(f"{method.value} grid for {config.name} in {runtimes[method]:.2f} s")

    result = ScenarioResult(config, grids)
    for method, grid in grids.items():
        result.files.extend(write_grid(grid, config.out_dir / f"{config.name}_{method.value}.csv", config))
    if config.method == Method.BOTH:
        result.report = compare_grids(grids[Method.DIAGRAMMATIC], grids[Method.ORACLE])
        result.report.runtime = {method.value: seconds for method, seconds in runtimes.items()}
        path = config.out_dir / f"{config.name}_comparison.json"
        path.write_text(json.dumps(result.report.as_dict(), indent=2, sort_keys=True))
        result.files.append(path)
        logging.info(f"Comparison for {config.name}: epsilon={result.report.epsilon:.4f}")
    if record:
        _record(config, result, runtimes)
    return result


SWEEP_COLUMNS = [
    "axis",
    "value",
    "beta",
    "num_atoms",
    "drive_power",
    "optical_depth",
    "epsilon",
    "g3c_origin",
    "count_rate",
    "error",
]


def _sweep_point(base, axis, value, index):
    attribute = SWEEP_AXES[axis]
    row = {"axis": axis, "value": value}
    try:
        cast = int(value) if attribute == "num_atoms" else float(value)
        params = base.params.replace(**{attribute: cast})
        row.update(
            beta=params.beta,
            num_atoms=params.num_atoms,
            drive_power=params.drive_power,
            optical_depth=params.optical_depth,
        )
        config = base.replace(params=params, name=f"{base.name}_{axis}_{index}", threads=1)
        wave = wavefield_for(config)
        epsilon = math.nan
        if config.method != Method.DIAGRAMMATIC:
            result = run_scenario(config, record=False)
            if result.report is not None:
                epsilon = result.report.epsilon
        row.update(
            epsilon=epsilon,
            g3c_origin=float(g3_connected(0.0, 0.0, 0.0, params, wave)),
            count_rate=count_rate(params, config.gamma_tot_hz, config.window, field=wave),
            error=None,
        )
    except Exception as error:
        logging.error(f"Sweep point {axis}={value} failed: {error}")
        row["error"] = f"{type(error).__name__}: {error}"
    return row


def sweep(base, axis, values, threads=None, progress=True, record=True):
    """Run scenarios along one parameter axis; returns the summary table."""
    if axis not in SWEEP_AXES:
        raise ConfigValidationError(f"sweep axis must be one of {list(SWEEP_AXES)}, got {axis!r}")
    values = list(values)
    rows = [None] * len(values)
    with ThreadPoolExecutor(max_workers=threads or base.threads) as pool:
        futures = {pool.submit(_sweep_point, base, axis, value, i): i for i, value in enumerate(values)}
        for future in tqdm(as_completed(futures), total=len(futures), disable=not progress, desc=f"sweep {axis}"):
            rows[futures[future]] = future.result()
    table = pd.DataFrame(rows, columns=SWEEP_COLUMNS)
    table["value"] = pd.to_numeric(table["value"], errors="coerce")
    if record and len(table):
        base.out_dir.mkdir(parents=True, exist_ok=True)
        table.to_csv(base.out_dir / f"{base.name}_sweep_{axis}.csv", index=False)
        engine = engine_for(database_url(base.out_dir, base.database))
        create_tables(engine)
        stored = table.assign(sweep=base.name, created=datetime.datetime.now())
        stored.to_sql("sweep_points", engine, if_exists="append", index=False)
        logging.info(f"Sweep {base.name} over {axis}: {len(table)} points recorded")
    return table
