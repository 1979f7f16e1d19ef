"""Batch front end: JSON run configurations in, deterministic CSV/JSON tables out.

Units are fixed by the schema: energies in eV (electron kinetic energy in
keV), lengths in nm, frequencies in rad/fs, dipoles in e*nm.

Example::

    qpinem spectrum --config run.json --out results --format csv
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .cavity_qe import default_time_grid, evolve, spectra_over_time
from .coupling_models import (
    DipoleMode,
    ElectronKinematics,
    HBAR_EV_FS,
    depolarization_factor,
    dipolar_beta0,
    driven_boson_population,
    ellipsoid_mode,
    fermion_steady_state,
    isotropic_eels_probability,
    kappa_over_g,
    max_abs_beta0,
    purcell_enhancement,
    shell_mode,
)
from .errors import CapacityError, DomainError, NumericalError, UndefinedError, ValidationError
from .interaction import (
    ElectronSpectrum,
    exact_spectrum,
    large_n_spectrum,
    pinem_limit_spectrum,
)
from .populations import coherent, fock, load_custom, thermal
from .propagation import GaussianProfile, solve_boson_ladder
from .spectra import broaden, gains_losses_ratio, read_spectrum, retrieve_g

THREADS_ENV = "QPINEM_THREADS"
MODES = ("spectrum", "fig1", "sweep", "cavity-qe", "coupling", "retrieve")
EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3


# ---------------------------------------------------------------- config access


def _field(cfg: dict, key: str, where: str, default=..., kind=None):
    path = f"{where}.{key}" if where else key
    if key not in cfg:
        if default is ...:
            raise ValidationError(f"{path}: required field is missing")
        return default
    val = cfg[key]
    if kind is float:
        if isinstance(val, bool) or not isinstance(val, (int, float)) or not math.isfinite(val):
            raise ValidationError(f"{path}: expected a finite number, got {val!r}")
        return float(val)
    if kind is int:
        if isinstance(val, bool) or not isinstance(val, (int, float)) or int(val) != val:
            raise ValidationError(f"{path}: expected an integer, got {val!r}")
        return int(val)
    if kind is str and not isinstance(val, str):
        raise ValidationError(f"{path}: expected a string, got {val!r}")
    if kind is dict and not isinstance(val, dict):
        raise ValidationError(f"{path}: expected an object")
    return val


def _complex(val, path: str) -> complex:
    if isinstance(val, (int, float)) and not isinstance(val, bool):
        return complex(float(val), 0.0)
    if isinstance(val, list) and len(val) == 2 and all(isinstance(v, (int, float)) for v in val):
        return complex(float(val[0]), float(val[1]))
    if isinstance(val, dict) and set(val) <= {"re", "im"}:
        return complex(float(val.get("re", 0.0)), float(val.get("im", 0.0)))
    raise ValidationError(f"{path}: expected a number, [re, im] or {{re, im}}, got {val!r}")


def _axis(val, path: str) -> list[float]:
    """A list of numbers or ``{start, stop, num[, log]}``; never empty."""
    if isinstance(val, list):
        vals = [v for v in val]
        if any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in vals):
            raise ValidationError(f"{path}: axis entries must be numbers")
        out = [float(v) for v in vals]
    elif isinstance(val, dict):
        start = _field(val, "start", path, kind=float)
        stop = _field(val, "stop", path, kind=float)
        num = _field(val, "num", path, kind=int)
        if num < 0:
            raise ValidationError(f"{path}.num: must be non-negative")
        if val.get("log", False):
            if start <= 0 or stop <= 0:
                raise ValidationError(f"{path}: log axis needs positive bounds")
            out = np.geomspace(start, stop, num).tolist()
        else:
            out = np.linspace(start, stop, num).tolist()
    else:
        raise ValidationError(f"{path}: expected a list or {{start, stop, num}}")
    if not out:
        raise ValidationError(f"{path}: axis is empty")
    return out


def _statistics(cfg: dict, where: str = "statistics"):
    kind = _field(cfg, "kind", where, kind=str).lower()
    if kind == "custom":
        path = _field(cfg, "path", where, kind=str)
        if not Path(path).is_file():
            raise ValidationError(f"{where}.path: no such file {path!r}")
        return load_custom(path)
    nbar = _field(cfg, "nbar", where, kind=float)
    if nbar < 0:
        raise ValidationError(f"{where}.nbar: must be >= 0")
    tail = _field(cfg, "tail_eps", where, 1e-12, kind=float)
    if kind == "fock":
        if nbar != int(nbar):
            raise ValidationError(f"{where}.nbar: Fock population must be an integer")
        return fock(int(nbar))
    if kind == "coherent":
        return coherent(nbar, tail)
    if kind == "thermal":
        return fock(0) if nbar == 0 else thermal(nbar, tail)
    raise ValidationError(f"{where}.kind: unknown statistics {kind!r}")


def _cavity_beta0(cfg: dict, where: str) -> complex:
    model = _field(cfg, "model", where, kind=str)
    kin = ElectronKinematics.from_kinetic_energy(_field(cfg, "electron_kev", where, kind=float))
    if model == "dipole":
        mode = DipoleMode(
            _field(cfg, "omega0", where, kind=float),
            _complex(cfg.get("px", 0.0), f"{where}.px"),
            _complex(cfg.get("pz", 0.0), f"{where}.pz"),
            _field(cfg, "b", where, kind=float),
        )
        return dipolar_beta0(mode, kin)
    if model in ("ellipsoid", "shell"):
        omega0, p, radius = _particle(cfg, where)
        b = _field(cfg, "b", where, radius, kind=float)
        if b < radius:
            raise ValidationError(f"{where}.b: beam would cross the particle (b < {radius})")
        orient = _field(cfg, "orientation", where, "x", kind=str)
        if orient not in ("x", "z"):
            raise ValidationError(f"{where}.orientation: expected 'x' or 'z'")
        px, pz = (p, 0.0) if orient == "x" else (0.0, p)
        return dipolar_beta0(DipoleMode(omega0, px, pz, b), kin)
    raise ValidationError(f"{where}.model: unknown cavity model {model!r}")


def _particle(cfg: dict, where: str) -> tuple[float, float, float]:
    """``(omega0, dipole, outer radius)`` of an ellipsoid or shell preset."""
    model = cfg["model"]
    plasma = _field(cfg, "plasma_energy", where, 9.17, kind=float)
    if model == "ellipsoid":
        r = _field(cfg, "aspect_ratio", where, kind=float)
        d = _field(cfg, "diameter", where, kind=float)
        a = 0.5 * d
        volume = 4.0 * math.pi / 3.0 * a * a * (a / r)
        omega0, p = ellipsoid_mode(r, volume, plasma, _field(cfg, "eps_b", where, 4.0, kind=float))
        return omega0, p, a
    a = _field(cfg, "radius", where, kind=float)
    t = _field(cfg, "thickness", where, kind=float)
    omega0, p = shell_mode(t, a, _field(cfg, "eps_core", where, 2.0, kind=float), plasma)
    return omega0, p, a


def _beta0(cfg: dict, where: str = "") -> complex:
    if "beta0" in cfg:
        return _complex(cfg["beta0"], f"{where}.beta0" if where else "beta0")
    if "cavity" in cfg:
        return _cavity_beta0(_field(cfg, "cavity", where, kind=dict), "cavity")
    raise ValidationError("beta0: give either beta0 or a cavity block")


# ---------------------------------------------------------------- output


def canonical(cfg: dict) -> str:
    return json.dumps(cfg, sort_keys=True, separators=(",", ":"))


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(canonical(cfg).encode("utf-8")).hexdigest()


def _num(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return repr(float(x))


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, complex):
        return [_jsonable(x.real), _jsonable(x.imag)]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def _header_value(v) -> str:
    if isinstance(v, (dict, list, tuple, complex)):
        return canonical(_jsonable(v))
    if isinstance(v, float):
        return repr(v)
    return str(v)


class Writer:
    """Emits tables with a metadata header (CSV comments or a JSON ``meta`` block)."""

    def __init__(self, out: Path, fmt: str, cfg: dict, mode: str):
        self.out = out
        self.fmt = fmt
        self.meta = {
            "tool": "qpinem",
            "version": __version__,
            "mode": mode,
            "config_sha256": config_hash(cfg),
            "config": cfg,
        }
        self.written: list[Path] = []

    def table(self, name: str, columns: list[str], rows, extra: dict | None = None) -> Path:
        self.out.mkdir(parents=True, exist_ok=True)
        meta = dict(self.meta)
        if extra:
            meta.update(extra)
        if self.fmt == "json":
            path = self.out / f"{name}.json"
            doc = {"meta": meta, "columns": columns, "rows": [list(r) for r in rows]}
            path.write_text(json.dumps(_jsonable(doc), sort_keys=True, indent=1) + "\n", encoding="utf-8")
        else:
            path = self.out / f"{name}.csv"
            lines = [f"# {k}: {_header_value(v)}" for k, v in meta.items()]
            lines.append(",".join(columns))
            lines.extend(",".join(_num(v) for v in r) for r in rows)
            path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        self.written.append(path)
        return path


def _threads() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValidationError(f"{THREADS_ENV}: expected an integer, got {raw!r}") from None
    if n < 1:
        raise ValidationError(f"{THREADS_ENV}: must be >= 1")
    return n


def _pmap(fn, items):
    # map() keeps the input order whatever the completion order
    n = _threads()
    if n == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def _spectrum_row_block(specs: list[ElectronSpectrum]) -> tuple[int, list[list[float]]]:
    L = max(s.l_max for s in specs)
    return L, [list(s.truncated(L).probabilities) for s in specs]


def _ell_columns(L: int) -> list[str]:
    return [f"P[{ell}]" for ell in range(-L, L + 1)]


# ---------------------------------------------------------------- modes


def run_spectrum(cfg: dict, w: Writer, tol: float) -> None:
    dist = _statistics(_field(cfg, "statistics", "", kind=dict))
    beta0 = _beta0(cfg)
    method = _field(cfg, "method", "", "exact", kind=str)
    l_max = _field(cfg, "l_max", "", None)
    if l_max is not None:
        l_max = _field(cfg, "l_max", "", kind=int)
        if l_max < 0:
            raise ValidationError("l_max: must be >= 0")
    if method == "exact":
        spec = exact_spectrum(dist, beta0, l_max)
    elif method == "pinem":
        spec = pinem_limit_spectrum(dist, beta0, l_max)
    elif method == "large_n":
        spec = large_n_spectrum(dist.kind, math.sqrt(dist.mean) * abs(beta0), l_max)
    elif method == "ode":
        prof = _field(cfg, "profile", "", {}, kind=dict)
        sigma = _field(prof, "sigma", "profile", 20.0, kind=float)
        omega0 = _field(prof, "omega0", "profile", 2.0, kind=float)
        kin = ElectronKinematics.from_kinetic_energy(_field(prof, "electron_kev", "profile", 100.0, kind=float))
        unit = GaussianProfile(1.0, sigma).beta0_closed_form(omega0, kin.velocity)
        if abs(unit) < 1e-300:
            raise ValidationError("profile: Gaussian envelope too wide to reach the requested beta0")
        spec = solve_boson_ladder(GaussianProfile(beta0 / unit, sigma), dist, omega0, kin.velocity, l_max, tol)
    else:
        raise ValidationError(f"method: unknown method {method!r}")
    extra = {"source": spec.source, "beta0": beta0, "deficit": spec.deficit, "nbar": dist.mean}
    w.table("spectrum", ["ell", "P"], [(int(l), float(p)) for l, p in zip(spec.ells, spec.probabilities)], extra)
    if "broaden" in cfg:
        b = _field(cfg, "broaden", "", kind=dict)
        fwhm = _field(b, "fwhm", "broaden", 0.1, kind=float)
        axis = _axis(b["axis"], "broaden.axis") if "axis" in b else None
        trace = broaden(spec, fwhm, axis)
        w.table("trace", ["dE_over_hw0", "intensity"], zip(trace.energy_axis, trace.intensity), {"fwhm": fwhm})


def run_sweep(cfg: dict, w: Writer, tol: float) -> None:
    dist = _statistics(_field(cfg, "statistics", "", kind=dict))
    sweep = _field(cfg, "sweep", "", kind=dict)
    variable = _field(sweep, "variable", "sweep", "beta", kind=str)
    values = _axis(_field(sweep, "values", "sweep"), "sweep.values")
    phase = _field(sweep, "phase", "sweep", 0.0, kind=float)
    if variable == "beta":
        if dist.mean <= 0:
            raise ValidationError("sweep.variable: 'beta' needs nbar > 0; sweep 'beta0' instead")
        scale = 1.0 / math.sqrt(dist.mean)
    elif variable == "beta0":
        scale = 1.0
    else:
        raise ValidationError(f"sweep.variable: expected 'beta' or 'beta0', got {variable!r}")
    if any(v < 0 for v in values):
        raise ValidationError("sweep.values: couplings must be non-negative")
    l_max = cfg.get("l_max")
    if l_max is not None:
        l_max = _field(cfg, "l_max", "", kind=int)

    def point(v):
        return exact_spectrum(dist, v * scale * complex(math.cos(phase), math.sin(phase)), l_max)

    specs = _pmap(point, values)
    L, block = _spectrum_row_block(specs)
    rows = []
    for v, s, probs in zip(values, specs, block):
        try:
            ratio = gains_losses_ratio(s)
        except UndefinedError:
            ratio = float("nan")
        rows.append([v, s.deficit, ratio, *probs])
    w.table("sweep", [variable, "deficit", "gain_loss_ratio", *_ell_columns(L)], rows)


def run_fig1(cfg: dict, w: Writer, tol: float) -> None:
    kinds = _field(cfg, "kinds", "", ["fock", "coherent", "thermal"])
    if not isinstance(kinds, list) or not kinds:
        raise ValidationError("kinds: expected a non-empty list")
    nbars = _axis(_field(cfg, "nbar", ""), "nbar")
    betas = _axis(_field(cfg, "beta0", ""), "beta0")
    if any(n < 0 or n > 50 for n in nbars):
        raise ValidationError("nbar: grid must lie in [0, 50]")
    if any(b < 0 for b in betas):
        raise ValidationError("beta0: grid values must be non-negative")
    for kind in kinds:
        if kind not in ("fock", "coherent", "thermal"):
            raise ValidationError(f"kinds: unknown statistics {kind!r}")
        if kind == "fock" and any(n != int(n) for n in nbars):
            raise ValidationError("nbar: Fock grid must hold integers")

    def cell(args):
        kind, n, b = args
        dist = _statistics({"kind": kind, "nbar": n})
        if n == 0 or b == 0:
            return 0.0
        return gains_losses_ratio(exact_spectrum(dist, b))

    for kind in kinds:
        grid = [(kind, n, b) for n in nbars for b in betas]
        vals = _pmap(cell, grid)
        rows = [[n, *vals[i * len(betas) : (i + 1) * len(betas)]] for i, n in enumerate(nbars)]
        w.table(f"fig1_{kind}", ["nbar", *[f"beta0={_num(b)}" for b in betas]], rows, {"statistics": kind})


def run_cavity_qe(cfg: dict, w: Writer, tol: float) -> None:
    N = _field(cfg, "N", "", kind=int)
    if N < 1:
        raise ValidationError("N: must be a positive integer")
    if N > 256:
        raise ValidationError("N: at most 256 emitters are supported")
    if "kappa_over_g" in cfg:
        k = _field(cfg, "kappa_over_g", "", kind=float)
    else:
        k = _field(cfg, "kappa_over_Ng", "", 0.0, kind=float) * N
    if k < 0:
        raise ValidationError("kappa: must be >= 0")
    beta0 = _complex(cfg.get("beta0", 0.7), "beta0")
    times = _axis(cfg["times"], "times") if "times" in cfg else default_time_grid(N, k).tolist()
    if times[0] != 0.0:
        times = [0.0, *times]
    traj = evolve(N, k, times, tol)
    n_cols = [f"p[{n}]" for n in range(N + 1)]
    w.table("trajectory", ["gt", "nbar", "g2", *n_cols], traj.rows(), {"N": N, "kappa_over_g": k})
    l_max = cfg.get("l_max")
    if l_max is not None:
        l_max = _field(cfg, "l_max", "", kind=int)
    specs = spectra_over_time(traj, beta0, l_max)
    L, block = _spectrum_row_block(specs)
    rows = [[t, s.deficit, *probs] for t, s, probs in zip(traj.times, specs, block)]
    w.table("spectra", ["gt", "deficit", *_ell_columns(L)], rows, {"beta0": beta0})


def run_coupling(cfg: dict, w: Writer, tol: float) -> None:
    model = _field(cfg, "model", "", kind=str)
    out: list[tuple[str, float]] = []
    if model in ("dipole", "ellipsoid", "shell"):
        kin = ElectronKinematics.from_kinetic_energy(_field(cfg, "electron_kev", "", kind=float))
        out += [("gamma", kin.gamma), ("velocity_over_c", kin.velocity)]
        if model != "dipole":
            omega0, p, radius = _particle(cfg, "")
            out += [("omega0_rad_per_fs", omega0), ("hbar_omega0_eV", omega0 * HBAR_EV_FS), ("dipole_e_nm", p)]
            if model == "ellipsoid":
                out.append(("depolarization_L", depolarization_factor(cfg["aspect_ratio"])))
            out.append(("max_abs_beta0", max_abs_beta0(omega0, p, radius, kin)))
        beta0 = _cavity_beta0(cfg, "")
        out += [("beta0_re", beta0.real), ("beta0_im", beta0.imag), ("abs_beta0", abs(beta0))]
    elif model == "eels":
        kin = ElectronKinematics.from_kinetic_energy(_field(cfg, "electron_kev", "", kind=float))
        prob = isotropic_eels_probability(
            _field(cfg, "dipole", "", kind=float),
            _field(cfg, "omega0", "", kind=float),
            _field(cfg, "b", "", kind=float),
            kin,
        )
        out.append(("loss_probability", prob))
    elif model == "purcell":
        ef = purcell_enhancement(
            _field(cfg, "Q", "", kind=float), _field(cfg, "eps", "", kind=float), _field(cfg, "rho0", "", kind=float)
        )
        out.append(("enhancement", ef))
        if "g0" in cfg:
            out.append(("kappa_over_g", kappa_over_g(_field(cfg, "omega0", "", kind=float), cfg["Q"], ef, _field(cfg, "g0", "", kind=float))))
    elif model == "steady_state":
        ratios = _axis(_field(cfg, "intensity_ratio", ""), "intensity_ratio")
        rows = [(r, fermion_steady_state(r), driven_boson_population(r)) for r in ratios]
        w.table("coupling", ["intensity_ratio", "nbar_fermion", "nbar_boson"], rows)
        return
    else:
        raise ValidationError(f"model: unknown coupling model {model!r}")
    w.table("coupling", ["quantity", "value"], [(k, v) for k, v in out])


def run_retrieve(cfg: dict, w: Writer, tol: float) -> None:
    orders = _field(cfg, "orders", "", [2, 3])
    if not isinstance(orders, list) or not orders or any(not isinstance(o, int) or o < 2 for o in orders):
        raise ValidationError("orders: expected a non-empty list of integers >= 2")
    if "spectrum_path" in cfg:
        path = _field(cfg, "spectrum_path", "", kind=str)
        if not Path(path).is_file():
            raise ValidationError(f"spectrum_path: no such file {path!r}")
        spec = read_spectrum(path)
    else:
        dist = _statistics(_field(cfg, "statistics", "", kind=dict))
        beta0 = _beta0(cfg)
        spec = exact_spectrum(dist, beta0)
        if spec.l_max < max(orders):
            # weak-coupling peaks can fall below the default trimming threshold
            spec = exact_spectrum(dist, beta0, max(orders))
    rows = [(ell, retrieve_g(spec, ell)) for ell in orders]
    try:
        ratio = gains_losses_ratio(spec)
    except UndefinedError:
        ratio = float("nan")
    w.table("retrieve", ["ell", "g_estimate"], rows, {"gain_loss_ratio": ratio})


RUNNERS = {
    "spectrum": run_spectrum,
    "sweep": run_sweep,
    "fig1": run_fig1,
    "cavity-qe": run_cavity_qe,
    "coupling": run_coupling,
    "retrieve": run_retrieve,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qpinem", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"qpinem {__version__}")
    sub = ap.add_subparsers(dest="mode", required=True)
    for mode in MODES:
        p = sub.add_parser(mode)
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--out", default="qpinem_out", help="output directory")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--tol", type=float, default=1e-10, help="integration tolerance")
    return ap


def load_config(path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"config: cannot read {path}: {exc.strerror}") from None
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    if not isinstance(cfg, dict):
        raise ValidationError("config: top level must be an object")
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        declared = cfg.get("mode")
        if declared is not None and declared != args.mode:
            raise ValidationError(f"mode: config declares {declared!r} but {args.mode!r} was requested")
        if not (1e-13 <= args.tol <= 1e-6):
            raise ValidationError("--tol: must lie in [1e-13, 1e-6]")
        w = Writer(Path(args.out), args.format, cfg, args.mode)
        RUNNERS[args.mode](cfg, w, args.tol)
    except (ValidationError, DomainError, CapacityError, UndefinedError) as exc:
        print(f"qpinem: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"qpinem: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    for path in w.written:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
