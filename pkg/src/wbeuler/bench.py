"""Benchmark harness: configs, case execution, sweeps, canned tables.

Configs are flat key=value files under a [case] section (see parse_config).
Every run writes, under <outdir>/<label>/:

    <field>_<k>.csv   one file per field per snapshot, k=0 the initial state
    errors.csv        final-time error norms against the hydrostatic profile
                      (or the exact solution where one exists)
    energy.csv        per-step energy breakdown (t, internal, kinetic, total)
    report.txt        human-readable summary

All floats are written with repr-exact precision, so re-running a config
reproduces the outputs byte for byte.
"""

from __future__ import annotations

import configparser
import os
import statistics
import time
from dataclasses import dataclass, field

import numpy as np

from . import cases as case_lib
from .anelastic import make_anelastic_state, project_divergence_free, run_anelastic
from .cases import build_case
from .diagnostics import cell_velocity, energy_breakdown, eoc, face_momentum, l1_error
from .grid import PERIODIC, STEADY, TRANSMISSIVE, WALL
from .rusanov import SchemeCrash, run_rusanov
from .solver import SolverFailure, run

_FMT = "%.17g"
_BC_TAGS = {"wall": WALL, "periodic": PERIODIC, "transmissive": TRANSMISSIVE,
            "steady": STEADY}
_SCHEMES = ("wb", "rusanov", "anelastic")


class ConfigError(Exception):
    """Malformed or inconsistent benchmark configuration."""


@dataclass
class CaseConfig:
    name: str
    scheme: str = "wb"
    eps: float = None
    gamma: float = None
    n: tuple = None
    t_end: float = None
    potential: str = None
    zeta: float = None
    bc: str = None
    eta1: float = None
    cfl_safety: float = None
    newton_tol: float = None
    dt_max: float = None
    cfl: float = None  # explicit-scheme CFL
    outdir: str = "bench_out"
    snapshots: tuple = None
    label: str = None

    def __post_init__(self):
        if self.name not in case_lib.CASES:
            raise ConfigError(f"unknown case {self.name!r}")
        if self.scheme not in _SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        if self.eps is not None and not self.eps > 0.0:
            raise ConfigError("eps must be positive")
        if self.zeta is not None and self.zeta < 0.0:
            raise ConfigError("zeta must be non-negative")
        if self.bc is not None and self.bc not in _BC_TAGS:
            raise ConfigError(f"unknown bc {self.bc!r}")


_FLOAT_KEYS = {"eps", "gamma", "t_end", "zeta", "eta1", "cfl_safety",
               "newton_tol", "dt_max", "cfl"}
_KNOWN_KEYS = _FLOAT_KEYS | {"name", "case", "scheme", "n", "potential", "bc",
                             "outdir", "snapshots", "label"}


def _parse_pairs(pairs):
    kw = {}
    for key, raw in pairs:
        key = key.strip().lower()
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        if key == "case":
            key = "name"
        val = raw.strip()
        if key in _FLOAT_KEYS:
            try:
                kw[key] = float(val)
            except ValueError:
                raise ConfigError(f"bad float for {key}: {val!r}") from None
        elif key == "n":
            try:
                kw[key] = tuple(int(p) for p in val.replace("x", ",").split(","))
            except ValueError:
                raise ConfigError(f"bad mesh spec for n: {val!r}") from None
        elif key == "snapshots":
            try:
                kw[key] = tuple(float(p) for p in val.split(","))
            except ValueError:
                raise ConfigError(f"bad snapshot list: {val!r}") from None
        else:
            kw[key] = val
    return kw


def parse_config(path):
    """Read a [case] section of flat key=value pairs into a CaseConfig."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path!r}")
    if "case" not in parser:
        raise ConfigError("config needs a [case] section")
    kw = _parse_pairs(parser["case"].items())
    if "name" not in kw:
        raise ConfigError("config must set 'name' (or 'case')")
    try:
        return CaseConfig(**kw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def apply_overrides(cfg, overrides):
    """New CaseConfig with key=value strings applied on top."""
    pairs = []
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override must look like key=value, got {item!r}")
        pairs.append(item.split("=", 1))
    kw = {**cfg.__dict__, **_parse_pairs(pairs)}
    return CaseConfig(**kw)


def _build(cfg):
    kwargs = {}
    for key in ("eps", "gamma", "t_end", "zeta", "potential"):
        val = getattr(cfg, key)
        if val is not None:
            kwargs[key] = val
    if cfg.n is not None:
        kwargs["n"] = cfg.n if len(cfg.n) > 1 else cfg.n[0]
    if cfg.bc is not None:
        kwargs["bc"] = _BC_TAGS[cfg.bc]
    for key in ("eta1", "cfl_safety", "newton_tol", "dt_max"):
        val = getattr(cfg, key)
        if val is not None:
            kwargs[key] = val
    try:
        return build_case(cfg.name, **kwargs)
    except (TypeError, KeyError, ValueError) as exc:
        raise ConfigError(f"case {cfg.name!r}: {exc}") from None


@dataclass
class RunReport:
    case: str
    scheme: str
    status: str  # completed | crashed-as-expected | failed
    outdir: str
    snapshot_files: list = field(default_factory=list)
    errors: dict = field(default_factory=dict)
    energy: list = field(default_factory=list)
    step_reports: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)
    final: object = None
    setup: object = None


def _write_csv(path, header, columns):
    data = np.column_stack([np.asarray(c, dtype=float).ravel() for c in columns])
    np.savetxt(path, data, fmt=_FMT, delimiter=",", header=header, comments="")


def _coord_columns(grid):
    mesh = grid.cell_center_mesh()
    return [m.ravel() for m in mesh]


def _snapshot(dirpath, grid, k, fields):
    """fields: dict name -> cell array; returns written paths."""
    coords = _coord_columns(grid)
    head = ",".join(["x", "y"][: grid.dim])
    written = []
    for name, arr in fields.items():
        path = os.path.join(dirpath, f"{name}_{k}.csv")
        _write_csv(path, f"{head},{name}", coords + [np.asarray(arr)])
        written.append(path)
    return written


def _snapshot_times(cfg, t_end):
    times = list(cfg.snapshots) if cfg.snapshots else [t_end]
    times = sorted(t for t in times if 0.0 < t <= t_end + 1e-12)
    if not times or abs(times[-1] - t_end) > 1e-12 * max(1.0, t_end):
        times.append(t_end)
    return times


def _wb_fields(case, state):
    comps = cell_velocity(case.grid, state.u)
    fields = {"rho": state.rho, "drho": state.rho - case.hydro.rho, "u": comps[0]}
    if case.grid.dim == 2:
        fields["v"] = comps[1]
    return fields


def _rusanov_fields(case, state):
    fields = {"rho": state.rho, "drho": state.rho - case.hydro.rho,
              "u": state.m[0] / state.rho}
    if case.grid.dim == 2:
        fields["v"] = state.m[1] / state.rho
    return fields


def _error_rows(case, state, u_ref=None):
    """Error norms vs the hydrostatic profile (or the exact data when given)."""
    grid = case.grid
    mom = face_momentum(grid, state.rho, state.u)
    if u_ref is not None:
        ref_rho = case.rho0
        ref_mom = face_momentum(grid, case.rho0, u_ref)
    else:
        ref_rho = case.hydro.rho
        ref_mom = None
    rows = {"l1_rho": l1_error(grid, state.rho, ref_rho)}
    for axis in range(grid.dim):
        suffix = "xy"[axis] if grid.dim == 2 else "x"
        rows[f"l1_mom_{suffix}"] = l1_error(grid, mom, ref_mom, axis=axis)
    return rows


def run_case(cfg):
    """Execute one configured run and write its artifact directory."""
    case = _build(cfg)
    label = cfg.label or case.name
    outdir = os.path.join(cfg.outdir, label)
    os.makedirs(outdir, exist_ok=True)
    times = _snapshot_times(cfg, case.t_end)
    t0 = time.perf_counter()
    if cfg.scheme == "wb":
        report = _run_wb(cfg, case, outdir, times)
    elif cfg.scheme == "rusanov":
        report = _run_rusanov(cfg, case, outdir, times)
    else:
        report = _run_anelastic(cfg, case, outdir, times)
    report.meta["wall_time"] = time.perf_counter() - t0
    report.meta.update(eps=case.eps, n=tuple(case.grid.n), zeta=case.zeta,
                       t_end=case.t_end, scheme=cfg.scheme)
    _write_report_txt(report, outdir)
    return report


def _write_energy(outdir, rows):
    path = os.path.join(outdir, "energy.csv")
    if not rows:
        rows = [(0.0, 0.0, 0.0, 0.0)]
    arr = np.asarray(rows)
    np.savetxt(path, arr, fmt=_FMT, delimiter=",",
               header="t,internal,kinetic,total", comments="")
    return path


def _write_errors(outdir, rows):
    path = os.path.join(outdir, "errors.csv")
    keys = list(rows.keys())
    vals = [rows[k] for k in keys]
    np.savetxt(path, np.asarray([vals]), fmt=_FMT, delimiter=",",
               header=",".join(keys), comments="")
    return path


def _write_report_txt(report, outdir):
    lines = [
        f"case: {report.case}",
        f"scheme: {report.scheme}",
        f"status: {report.status}",
    ]
    for key in sorted(report.meta):
        lines.append(f"{key}: {report.meta[key]}")
    for key, val in report.errors.items():
        lines.append(f"{key}: {val:.17g}")
    with open(os.path.join(outdir, "report.txt"), "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _run_wb(cfg, case, outdir, times):
    state = case.initial_state()
    energy = [  # row for the initial state
        _energy_row(case, state)
    ]
    reports = []

    def observer(s, rep):
        reports.append(rep)
        energy.append(_energy_row(case, s))

    files = _snapshot(outdir, case.grid, 0, _wb_fields(case, state))
    status = "completed"
    try:
        for k, t_stop in enumerate(times, start=1):
            state, _ = run(case.grid, case.law, state, case.hydro, case.params,
                           t_stop, observer=observer)
            files += _snapshot(outdir, case.grid, k, _wb_fields(case, state))
    except SolverFailure as exc:
        status = "failed"
        errors = {"failure_time": state.t}
        _write_energy(outdir, energy)
        return RunReport(case=case.name, scheme="wb", status=status, outdir=outdir,
                         snapshot_files=files, errors=errors, energy=energy,
                         step_reports=reports, meta={"failure": str(exc)},
                         final=state, setup=case)
    u_ref = case.face_velocity if case.name == "vortex2d" else None
    errors = _error_rows(case, state, u_ref=u_ref)
    _write_errors(outdir, errors)
    _write_energy(outdir, energy)
    iters = [r.newton_iters for r in reports if not r.frozen]
    meta = {
        "steps": len(reports),
        "newton_median": statistics.median(iters) if iters else 0,
        "newton_max": max(iters) if iters else 0,
        "frozen_steps": sum(1 for r in reports if r.frozen),
    }
    return RunReport(case=case.name, scheme="wb", status=status, outdir=outdir,
                     snapshot_files=files, errors=errors, energy=energy,
                     step_reports=reports, meta=meta, final=state, setup=case)


def _energy_row(case, state):
    e = energy_breakdown(case.grid, case.law, state, case.hydro.rho, case.eps)
    return (state.t, e.internal, e.kinetic, e.total)


def _run_rusanov(cfg, case, outdir, times):
    state = case.colocated_initial()
    cfl = cfg.cfl if cfg.cfl is not None else 0.45
    files = _snapshot(outdir, case.grid, 0, _rusanov_fields(case, state))
    steps = 0
    status = "completed"
    errors = {}
    try:
        for k, t_stop in enumerate(times, start=1):
            state, n = run_rusanov(case.grid, case.law, state, case.phi, case.eps,
                                   t_stop, cfl=cfl, hydro=case.hydro)
            steps += n
            files += _snapshot(outdir, case.grid, k, _rusanov_fields(case, state))
    except SchemeCrash as exc:
        stiff = case.eps < 1.0
        status = "crashed-as-expected" if stiff else "failed"
        errors = {"crash_time": exc.t}
        return RunReport(case=case.name, scheme="rusanov", status=status,
                         outdir=outdir, snapshot_files=files, errors=errors,
                         meta={"steps": steps + exc.n_steps, "crash": str(exc)},
                         final=None, setup=case)
    errors = {"l1_rho": l1_error(case.grid, state.rho, case.hydro.rho)}
    for axis in range(case.grid.dim):
        suffix = "xy"[axis] if case.grid.dim == 2 else "x"
        errors[f"l1_mom_{suffix}"] = l1_error(case.grid, state.m[axis],
                                              np.zeros_like(state.rho))
    _write_errors(outdir, errors)
    _write_energy(outdir, [])
    return RunReport(case=case.name, scheme="rusanov", status=status,
                     outdir=outdir, snapshot_files=files, errors=errors,
                     meta={"steps": steps}, final=state, setup=case)


def _run_anelastic(cfg, case, outdir, times):
    U0 = project_divergence_free(case.grid, case.hydro, case.face_velocity)
    state = make_anelastic_state(case.grid, U0)
    eta1 = cfg.eta1 if cfg.eta1 is not None else 2.0
    cfl = cfg.cfl if cfg.cfl is not None else 0.45
    dt_max = cfg.dt_max if cfg.dt_max else case.t_end / 100.0
    infos = []
    comps = cell_velocity(case.grid, state.U)
    fields = {"u": comps[0], "pi": state.pi}
    if case.grid.dim == 2:
        fields["v"] = comps[1]
    files = _snapshot(outdir, case.grid, 0, fields)
    for k, t_stop in enumerate(times, start=1):
        state, info = run_anelastic(case.grid, case.law, case.hydro, state, t_stop,
                                    eta1=eta1, cfl=cfl, dt_max=dt_max)
        infos.extend(info)
        comps = cell_velocity(case.grid, state.U)
        fields = {"u": comps[0], "pi": state.pi}
        if case.grid.dim == 2:
            fields["v"] = comps[1]
        files += _snapshot(outdir, case.grid, k, fields)
    residual = max((i["constraint_residual"] for i in infos), default=0.0)
    errors = {"constraint_residual": residual}
    _write_errors(outdir, errors)
    _write_energy(outdir, [])
    return RunReport(case=case.name, scheme="anelastic", status="completed",
                     outdir=outdir, snapshot_files=files, errors=errors,
                     meta={"steps": len(infos)}, final=state, setup=case)


def sweep(cfg, axis, values):
    """Run the config once per value of eps or mesh; emit a summary table.

    Mesh sweeps attach EOC columns between consecutive levels (ratio 2).
    """
    values = list(values)
    if not values:
        raise ConfigError("sweep needs a non-empty value list")
    if axis not in ("eps", "mesh"):
        raise ConfigError(f"sweep axis must be eps or mesh, got {axis!r}")
    reports = []
    rows = []
    for val in values:
        if axis == "eps":
            sub = CaseConfig(**{**cfg.__dict__, "eps": float(val),
                                "label": f"{cfg.name}_eps{float(val):g}"})
        else:
            nval = int(val)
            sub = CaseConfig(**{**cfg.__dict__, "n": (nval,),
                                "label": f"{cfg.name}_n{nval}"})
        rep = run_case(sub)
        reports.append(rep)
        row = {"eps": rep.meta.get("eps"), "n": rep.meta.get("n", (0,))[0],
               "status": rep.status}
        row.update(rep.errors)
        rows.append(row)
    if axis == "mesh":
        _attach_eoc(rows)
    path = _write_sweep_summary(cfg, rows)
    return reports, rows, path


def _attach_eoc(rows):
    err_keys = [k for k in rows[0] if k.startswith("l1_")]
    for i, row in enumerate(rows):
        for k in err_keys:
            tag = "eoc" + k[2:]
            if i == 0 or rows[i - 1].get(k) in (None, 0.0) or row.get(k) in (None, 0.0):
                row[tag] = float("nan")
            else:
                ratio = row["n"] / rows[i - 1]["n"]
                row[tag] = eoc(rows[i - 1][k], row[k], ratio=ratio)


def _write_sweep_summary(cfg, rows):
    os.makedirs(cfg.outdir, exist_ok=True)
    path = os.path.join(cfg.outdir, f"{cfg.name}_sweep.csv")
    keys = list(rows[0].keys())
    with open(path, "w") as fh:
        fh.write(",".join(keys) + "\n")
        for row in rows:
            cells = []
            for k in keys:
                v = row.get(k, "")
                cells.append(_FMT % v if isinstance(v, float) else str(v))
            fh.write(",".join(cells) + "\n")
    return path


def block_average(arr, factors):
    """Coarsen by integer factors per axis (conservative mean)."""
    arr = np.asarray(arr)
    factors = (factors,) * arr.ndim if np.isscalar(factors) else tuple(factors)
    for axis, f in enumerate(factors):
        if arr.shape[axis] % f:
            raise ValueError(f"axis {axis}: {arr.shape[axis]} not divisible by {f}")
        shape = list(arr.shape)
        shape[axis] //= f
        shape.insert(axis + 1, f)
        arr = arr.reshape(shape).mean(axis=axis + 1)
    return arr


def _read_field_csv(path):
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    ncoord = data.shape[1] - 1
    if ncoord == 1:
        return data[:, 1], data[:, 0:1]
    nx = len(np.unique(data[:, 0]))
    ny = data.shape[0] // nx
    return data[:, 2].reshape(nx, ny), data[:, :2]


def compare_dirs(dir_a, dir_b):
    """Field-wise L1 differences between two run directories.

    Matching snapshot files are compared at the highest common index; a mesh
    mismatch by an integer factor is handled by block-averaging the finer
    field (same-volume averaging, so the comparison is conservative).
    """
    def inventory(d):
        out = {}
        for fn in sorted(os.listdir(d)):
            if fn.endswith(".csv") and "_" in fn:
                stem, idx = fn[:-4].rsplit("_", 1)
                if idx.isdigit():
                    out.setdefault(stem, {})[int(idx)] = os.path.join(d, fn)
        return out

    inv_a, inv_b = inventory(dir_a), inventory(dir_b)
    rows = []
    for stem in sorted(set(inv_a) & set(inv_b)):
        common = sorted(set(inv_a[stem]) & set(inv_b[stem]))
        if not common:
            continue
        k = common[-1]
        fa, _ = _read_field_csv(inv_a[stem][k])
        fb, _ = _read_field_csv(inv_b[stem][k])
        if fa.size < fb.size:
            fb = block_average(fb, tuple(sb // sa for sa, sb in zip(fa.shape, fb.shape)))
        elif fb.size < fa.size:
            fa = block_average(fa, tuple(sa // sb for sa, sb in zip(fb.shape, fa.shape)))
        vol = 1.0 / fa.size  # unit domain
        rows.append({"field": stem, "snapshot": k,
                     "l1_diff": float(vol * np.abs(fa - fb).sum())})
    return rows


def sod_reference_gap(outdir, n=200, n_ref=2000):
    """L1 density gap between the wb Sod run and a fine Rusanov reference."""
    cfg = CaseConfig(name="sod1d", scheme="wb", n=(n,), outdir=outdir, label="sod_wb")
    rep = run_case(cfg)
    cfg_ref = CaseConfig(name="sod1d", scheme="rusanov", n=(n_ref,), outdir=outdir,
                         label="sod_ref")
    rep_ref = run_case(cfg_ref)
    rho = rep.final.rho
    rho_ref = block_average(rep_ref.final.rho, n_ref // n)
    gap = float(np.abs(rho - rho_ref).sum() / n)
    return gap, rep, rep_ref


def table1(outdir, eps_values=(1e-1, 1e-2, 1e-3),
           potentials=("linear", "quadratic", "sine")):
    """Hydrostatic-preservation error table (nine runs)."""
    rows = []
    for pot in potentials:
        for eps in eps_values:
            cfg = CaseConfig(name="wellbalance1d", eps=eps, potential=pot,
                             outdir=outdir, label=f"wb_{pot}_eps{eps:g}")
            rep = run_case(cfg)
            rows.append({"potential": pot, "eps": eps,
                         "l1_rho": rep.errors["l1_rho"],
                         "l1_mom": rep.errors["l1_mom_x"],
                         "status": rep.status})
    os.makedirs(outdir, exist_ok=True)
    path = os.path.join(outdir, "table1.csv")
    with open(path, "w") as fh:
        fh.write("potential,eps,l1_rho,l1_mom,status\n")
        for r in rows:
            fh.write(f"{r['potential']},{_FMT % r['eps']},{_FMT % r['l1_rho']},"
                     f"{_FMT % r['l1_mom']},{r['status']}\n")
    return rows, path


def table2(outdir, eps_values=(1e-1, 1e-2, 1e-3), meshes=(25, 50, 100, 200)):
    """Vortex mesh-refinement table with EOC columns."""
    rows = []
    for eps in eps_values:
        prev = None
        for n in meshes:
            cfg = CaseConfig(name="vortex2d", eps=eps, n=(n,), outdir=outdir,
                             label=f"vortex_eps{eps:g}_n{n}")
            rep = run_case(cfg)
            row = {"eps": eps, "n": n,
                   "l1_rho": rep.errors["l1_rho"],
                   "l1_mom_x": rep.errors["l1_mom_x"],
                   "l1_mom_y": rep.errors["l1_mom_y"]}
            if prev is None:
                row.update(eoc_rho=float("nan"), eoc_mom_x=float("nan"),
                           eoc_mom_y=float("nan"))
            else:
                ratio = n / prev["n"]
                row.update(
                    eoc_rho=eoc(prev["l1_rho"], row["l1_rho"], ratio),
                    eoc_mom_x=eoc(prev["l1_mom_x"], row["l1_mom_x"], ratio),
                    eoc_mom_y=eoc(prev["l1_mom_y"], row["l1_mom_y"], ratio),
                )
            rows.append(row)
            prev = row
    os.makedirs(outdir, exist_ok=True)
    path = os.path.join(outdir, "table2.csv")
    keys = ["eps", "n", "l1_rho", "eoc_rho", "l1_mom_x", "eoc_mom_x",
            "l1_mom_y", "eoc_mom_y"]
    with open(path, "w") as fh:
        fh.write(",".join(keys) + "\n")
        for r in rows:
            fh.write(",".join(_FMT % r[k] if isinstance(r[k], float) else str(r[k])
                              for k in keys) + "\n")
    return rows, path
