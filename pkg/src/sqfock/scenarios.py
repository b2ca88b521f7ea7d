"""Named scenarios: each turns a :class:`~sqfock.config.ScenarioConfig` into result tables.

Dimensionless scenarios (everything except ``feasibility``) read all rates in
one arbitrary angular-frequency unit, written ``rad/s`` in table headers, with
times in the reciprocal unit. The operating point of the squeezed mode is set
either directly by ``protocol.r`` / ``protocol.omega_b`` or, when the config
gives ``model.omega_p`` or ``model.drive_amp``, derived from the pump.
"""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from . import fock, lindblad, model, sensing
from .config import Axis
from .errors import ConfigError, TruncationTooSmall
from .table import ResultTable, field_table

TWO_PI = 2.0 * math.pi
WORKERS_ENV = "SQFOCK_WORKERS"
DRIVE_KEYS = ("omega_p", "drive_amp")


@dataclass
class ScenarioResult:
    tables: list
    checks: dict = field(default_factory=dict)
    rwa: list = field(default_factory=list)

    def table(self, name):
        for tab in self.tables:
            if tab.name == name:
                return tab
        raise KeyError(name)


# ---------------------------------------------------------------------------
# plumbing


def worker_count():
    raw = os.environ.get(WORKERS_ENV)
    if raw is None or raw == "":
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"{WORKERS_ENV} must be a positive integer, got {raw!r}")
    return n


def parallel_map(fn, items, workers=None):
    """Order-preserving map over independent work items."""
    items = list(items)
    workers = min(worker_count() if workers is None else workers, len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _require(cond, message):
    if not cond:
        raise ConfigError(message)


def _coerce(key, value, default):
    if isinstance(default, bool):
        _require(isinstance(value, bool), f"protocol.{key} must be true or false")
        return value
    if isinstance(default, str):
        _require(isinstance(value, str), f"protocol.{key} must be a string")
        return value
    if isinstance(default, list):
        ok = isinstance(value, list) and value and all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
        )
        _require(ok, f"protocol.{key} must be a non-empty list of numbers")
        return [float(v) for v in value]
    numeric = isinstance(value, (int, float)) and not isinstance(value, bool)
    if isinstance(default, int):
        _require(numeric and int(value) == value, f"protocol.{key} must be an integer")
        return int(value)
    _require(numeric, f"protocol.{key} must be numeric")
    _require(math.isfinite(value), f"protocol.{key} must be finite")
    return float(value)


def protocol_values(cfg, schema):
    unknown = set(cfg.protocol) - set(schema)
    _require(not unknown, f"unknown protocol keys {sorted(unknown)}; allowed: {sorted(schema)}")
    out = dict(schema)
    for key, value in cfg.protocol.items():
        out[key] = _coerce(key, value, schema[key])
    return out


def model_values(cfg, defaults):
    m = {"omega_a": 1.0, "kerr": 1.0, "dim": 64, **defaults, **cfg.model}
    try:
        model.ModelParams(**m)
    except ValueError as exc:
        raise ConfigError(f"model: {exc}") from exc
    m["dim"] = int(m["dim"])
    return m


def _x_zpf(m):
    return None if m.get("mass") is None else model.zero_point_amplitude(m["mass"], m["omega_a"])


def _driven(cfg, axes=()):
    return any(k in cfg.model for k in DRIVE_KEYS) or any(a.variable in DRIVE_KEYS for a in axes)


def operating_point(m, r, omega_b, driven):
    """Effective parameters from protocol ``r``/``omega_b`` or from the pump in ``m``."""
    if driven:
        return model.effective_params(model.ModelParams(**m))
    _require(r >= 0, "protocol.r must be non-negative")
    return model.effective_at(r, omega_b, m["kerr"], m["gamma0"], theta=m["theta"], x_zpf=_x_zpf(m))


def _no_direct_point(cfg, keys=("r", "omega_b")):
    clash = [k for k in keys if k in cfg.protocol]
    _require(not clash, f"protocol {clash} conflict with a pump given in [model]; set one or the other")


def _omega_b_for(r, kerr, rwa_ratio, omega_b):
    """``omega_b`` as given, else the value putting the worst RWA ratio at ``rwa_ratio``."""
    if omega_b is not None:
        _require(omega_b > 0, "protocol.omega_b must be positive")
        return omega_b
    _require(rwa_ratio > 0, "protocol.rwa_ratio must be positive")
    worst = max(model.rwa_ratios(r, kerr, 1.0))
    _require(worst > 0, "protocol.omega_b is required when r = 0 or kerr = 0")
    return worst / rwa_ratio


def _rho_ground(dim):
    rho = np.zeros((dim, dim), dtype=complex)
    rho[0, 0] = 1.0
    return rho


def _populations(states):
    return np.real(np.einsum("...ii->...i", states))


def _guard_top(pops, tol, what, dim):
    top = float(np.max(pops[..., -2:]))
    if top > tol:
        raise TruncationTooSmall(
            f"{what}: population {top:.2e} in the top two levels exceeds {tol:g}; raise dim",
            required_dim=2 * dim,
        )
    return top


def _traj_diagnostics(label, traj):
    lines = [
        f"{label}: dt={traj.dt:.3e} refinements={traj.refinements} last_change={traj.step_change:.2e}",
        f"{label}: max|tr-1|={np.max(traj.trace_error):.2e} max herm={np.max(traj.herm_error):.2e}"
        f" min eig={np.min(traj.min_eig):.2e}",
    ]
    lines += [f"{label}: FLAG {f}" for f in traj.flags]
    return lines


def _report_table(name, rows, notes=()):
    tab = ResultTable(name, ["quantity", "value", "threshold", "passed"], ["-", "mixed", "mixed", "bool"],
                      notes=list(notes))
    for q, v, thr in rows:
        if thr is None:
            tab.add(q, v, "n/a", "n/a")
        else:
            tab.add(q, v, thr, 1.0 if v < thr else 0.0)
    return tab


# ---------------------------------------------------------------------------
# Enhancement law


FIG1C_MODEL = {"kerr": 1.0, "gamma0": 20.0}
FIG1C = {"r_min": 0.0, "r_max": 3.0, "r_points": 121}


def run_fig1c(cfg):
    m = model_values(cfg, FIG1C_MODEL)
    p = protocol_values(cfg, FIG1C)
    k, g0 = m["kerr"], m["gamma0"]
    _require(k > 0 and g0 > 0, "fig1c needs positive kerr and gamma0")
    _require(p["r_points"] >= 2 and p["r_max"] > p["r_min"] >= 0, "fig1c needs 0 <= r_min < r_max, r_points >= 2")

    ratio = lambda r: 2.0 * model.enhanced_kerr(r, k) / (math.cosh(2.0 * r) * g0)
    tab = ResultTable(
        "fig1c",
        ["r", "alpha_over_alpha0", "alpha", "big_gamma", "alpha_over_gamma"],
        ["1", "1", "rad/s", "rad/s", "1"],
        notes=[f"kerr={k!r} gamma0={g0!r}; alpha0 = 2 kerr"],
    )
    for r in np.linspace(p["r_min"], p["r_max"], p["r_points"]):
        alpha = 2.0 * model.enhanced_kerr(r, k)
        gam = math.cosh(2.0 * r) * g0
        tab.add(r, alpha / (2.0 * k), alpha, gam, alpha / gam)

    lo, hi = p["r_min"], p["r_max"]
    cross = ResultTable("fig1c_crossing", ["r_star", "alpha_over_gamma"], ["1", "1"],
                        notes=["first r with alpha = big_gamma (root of the closed form)"])
    r_star = None
    if (ratio(lo) - 1.0) * (ratio(hi) - 1.0) <= 0:
        r_star = brentq(lambda r: ratio(r) - 1.0, lo, hi, xtol=1e-14)
        cross.add(r_star, ratio(r_star))
    else:
        cross.add("none", "none")
    return ScenarioResult([tab, cross], {"r_star": r_star})


# ---------------------------------------------------------------------------
# Rabi flopping and leakage


FIG2_MODEL = {"kerr": 1.0, "gamma0": 0.0, "theta": math.pi}
FIG2 = {
    "r": 1.5,
    "omega_b": None,
    "rwa_ratio": 0.02,
    "drive_fraction": 0.05,
    "omega_d": None,
    "gamma0_over_kerr": 1.0,
    "periods": 1.0,
    "points": 201,
    "dim_squeezed": 28,
    "dim_fock": 40,
    "wigner_half_width": 5.0,
    "wigner_points": 81,
    "guard_tol": 1e-5,
    "tol": 1e-7,
}


def _fig2_point(cfg, m, p):
    driven = _driven(cfg)
    if driven:
        _no_direct_point(cfg)
        return operating_point(m, 0, 0, True)
    omega_b = _omega_b_for(p["r"], m["kerr"], p["rwa_ratio"], p["omega_b"])
    return operating_point(m, p["r"], omega_b, False)


def _fig2_rwa(cfg):
    m, p = model_values(cfg, FIG2_MODEL), protocol_values(cfg, FIG2)
    eff = _fig2_point(cfg, m, p)
    return [("squeezed", model.RwaReport(model.rwa_ratios(eff.r, m["kerr"], eff.omega_b)))]


def run_fig2(cfg):
    m = model_values(cfg, FIG2_MODEL)
    p = protocol_values(cfg, FIG2)
    k = m["kerr"]
    _require(k > 0, "fig2 needs kerr > 0")
    _require(p["periods"] >= 1.0, "fig2 needs periods >= 1 (snapshots at Omega_d t = 2 pi)")
    _require(p["points"] >= 3, "fig2 needs at least 3 time points")
    eff = _fig2_point(cfg, m, p)
    omega_d = p["omega_d"] if p["omega_d"] is not None else p["drive_fraction"] * eff.alpha
    _require(omega_d > 0, "fig2 needs a positive drive")
    g_decay = p["gamma0_over_kerr"] * k
    t_grid = np.linspace(0.0, p["periods"] * TWO_PI / omega_d, p["points"])
    sc = lindblad.StepControl(tol=p["tol"])
    snaps = {"0": 0.0, "pi": math.pi, "2pi": TWO_PI}
    snap_idx = {lab: int(np.argmin(np.abs(omega_d * t_grid - x))) for lab, x in snaps.items()}
    grid = fock.PhaseSpaceGrid.square(p["wigner_half_width"], p["wigner_points"])

    dim_f, dim_s = p["dim_fock"], p["dim_squeezed"]
    a = fock.annihilation(dim_f)
    h_fock = model.kerr_oscillator(dim_f, 0.0, k) + 0.5 * omega_d * (a + a.conj().T)
    cases = []
    for decay in (False, True):
        g = g_decay if decay else 0.0
        terms = [lindblad.DissipatorTerm(g, a, a.conj().T)] if g > 0 else []
        cases.append(("fock", decay, lindblad.Generator(h_fock, terms), dim_f))
        eff_g = replace(eff, gamma0=g, big_gamma=math.cosh(2.0 * eff.r) * g)
        cases.append(("squeezed", decay, lindblad.effective_generator(eff_g, dim=dim_s, drive=omega_d), dim_s))

    tables, fields, diags, checks = [], [], [], {}
    summary = ResultTable(
        "fig2_summary",
        ["case", "max_p2_p3", "max_outside", "p1_at_pi", "top_population"],
        ["-", "1", "1", "1", "1"],
        notes=[f"omega_d={omega_d!r} r={eff.r!r} omega_b={eff.omega_b!r} alpha={eff.alpha!r}",
               "fock: bare Kerr oscillator in its rotating frame driven by (omega_d/2)(a + a^dag)",
               "squeezed: effective model in the squeezed basis driven by (omega_d/2)(b + b^dag)"],
    )
    for kind, decay, gen, dim in cases:
        name = f"fig2_{kind}" + ("_decay" if decay else "")
        traj = lindblad.evolve(gen, _rho_ground(dim), t_grid, sc)
        pops = _populations(traj.states)
        top = _guard_top(pops, p["guard_tol"], name, dim)
        tab = ResultTable(
            name,
            ["t", "omega_d_t", "p0", "p1", "p2", "p3", "outside"],
            ["s", "rad", "1", "1", "1", "1", "1"],
            notes=[f"populations of |n>{'_S' if kind == 'squeezed' else ''}; gamma0={gen_rate(gen)!r}"],
            diagnostics=_traj_diagnostics(name, traj),
        )
        for i, t in enumerate(t_grid):
            tab.add(t, omega_d * t, *pops[i, :4], 1.0 - pops[i, 0] - pops[i, 1])
        tables.append(tab)
        p23 = float(np.max(pops[:, 2] + pops[:, 3]))
        outside = float(np.max(1.0 - pops[:, 0] - pops[:, 1]))
        p1_pi = float(pops[snap_idx["pi"], 1])
        summary.add(name, p23, outside, p1_pi, top)
        checks[name] = {"max_p2_p3": p23, "max_outside": outside, "p1_at_pi": p1_pi,
                        "flags": list(traj.flags)}
        diags += [f for f in tab.diagnostics if "FLAG" in f]
        if not decay:
            for lab, i in snap_idx.items():
                state = fock.QuantumState.density(traj.states[i])
                if kind == "fock":
                    w = fock.wigner(state, grid)
                else:
                    w = fock.wigner_squeezed(state, grid, eff.r, eff.theta)
                fields.append(field_table(
                    f"fig2_wigner_{kind}_{lab}", grid, w, "1",
                    notes=[f"Wigner function (integral 1) at omega_d t = {omega_d * t_grid[i]!r}"],
                ))
    summary.diagnostics = diags
    checks["omega_d"] = omega_d
    return ScenarioResult(tables + [summary] + fields, checks, _fig2_rwa(cfg))


def gen_rate(gen):
    return max((abs(t.rate) for t in gen.terms), default=0.0)


# ---------------------------------------------------------------------------
# Ramsey traces with finite pulses


FIG3B_MODEL = {"gamma0": None, "theta": math.pi, "kerr": 1.0}
FIG3B = {
    "kerr_values": [0.2, 2.0],
    "r_values": [0.0, 1.5],
    "pulse_amp": 1.0,
    "omega_b": 10.0,
    "omega_v": 0.0,
    "window": 5.0,
    "points": 41,
    "dim": 20,
    "guard_tol": 1e-2,
    "tol": 1e-7,
}


def _fig3b_case(args):
    kerr, r, m, p = args
    g0 = m["gamma0"]
    eff = model.effective_at(r, p["omega_b"], kerr, g0, theta=m["theta"])
    t_max = p["window"] / eff.big_gamma if eff.big_gamma > 0 else p["window"]
    t_grid = np.linspace(0.0, t_max, p["points"])
    trace = sensing.ramsey_numeric_full(
        eff, p["omega_v"], t_grid, p["pulse_amp"], dim=p["dim"],
        step_control=lindblad.StepControl(tol=p["tol"]), guard_tol=p["guard_tol"],
    )
    _, p1_ideal = sensing.ramsey_analytic(sensing.QubitParams.from_effective(eff), p["omega_v"], t_grid)
    return kerr, r, eff, t_grid, trace, p1_ideal


def _fig3b_setup(cfg):
    raw = {"gamma0": None, **cfg.model}
    p = protocol_values(cfg, FIG3B)
    _require(not _driven(cfg), "fig3b sets the operating point through protocol r_values / omega_b")
    _require(p["pulse_amp"] > 0 and p["omega_b"] > 0 and p["window"] > 0, "fig3b needs positive pulse_amp, omega_b, window")
    _require(p["points"] >= 2, "fig3b needs at least 2 time points")
    _require(min(p["r_values"]) >= 0 and min(p["kerr_values"]) > 0, "fig3b needs r >= 0 and kerr > 0")
    defaults = dict(FIG3B_MODEL)
    defaults["gamma0"] = p["pulse_amp"] if raw["gamma0"] is None else raw["gamma0"]
    m = model_values(cfg, defaults)
    return m, p


def _fig3b_rwa(cfg):
    m, p = _fig3b_setup(cfg)
    return [(f"kerr={k!r} r={r!r}", model.RwaReport(model.rwa_ratios(r, k, p["omega_b"])))
            for k in p["kerr_values"] for r in p["r_values"]]


def run_fig3b(cfg):
    m, p = _fig3b_setup(cfg)
    items = [(k, r, m, p) for k in p["kerr_values"] for r in p["r_values"]]
    tab = ResultTable(
        "fig3b",
        ["kerr", "r", "t", "p1", "p1_ideal", "leakage"],
        ["rad/s", "1", "s", "1", "1", "1"],
        notes=[f"gamma0={m['gamma0']!r} pulse_amp={p['pulse_amp']!r} omega_b={p['omega_b']!r} dim={p['dim']}",
               "p1: full-space Ramsey with finite pulses; p1_ideal: instantaneous pulses, qubit-only"],
    )
    checks = {}
    for kerr, r, eff, t_grid, trace, p1_ideal in parallel_map(_fig3b_case, items):
        for i, t in enumerate(t_grid):
            tab.add(kerr, r, t, trace.p1[i], p1_ideal[i], trace.leakage[i])
        label = f"kerr={kerr!r} r={r!r}"
        d = trace.diagnostics
        tab.diagnostics.append(
            f"{label}: max|p1-p1_ideal|={np.max(np.abs(trace.p1 - p1_ideal)):.3e}"
            f" max leakage={np.max(trace.leakage):.3e} top={d['top_population']:.2e}"
            f" max|tr-1|={d['trace_error']:.2e} min eig={d['min_eig']:.2e}"
        )
        tab.diagnostics += [f"{label}: FLAG {f}" for f in d["flags"]]
        checks[(kerr, r)] = {"p1": trace.p1, "p1_ideal": p1_ideal, "leakage": trace.leakage,
                             "times": t_grid, "flags": d["flags"]}
    return ScenarioResult([tab], checks, _fig3b_rwa(cfg))


# ---------------------------------------------------------------------------
# Relative sensitivity map


FIG3C_MODEL = {"gamma0": 1.0, "theta": math.pi}
FIG3C = {"k_min": 0.1, "k_max": 10.0, "k_points": 41, "r_min": 0.0, "r_max": 2.0, "r_points": 41}


def relative_sensitivity(r, theta=math.pi):
    """``delta k_min / delta k_0`` with amplified bath noise, and its noise-free form."""
    gain = abs(math.cosh(r) - np.exp(-1j * theta) * math.sinh(r))
    return math.sqrt(math.cosh(2.0 * r)) / gain ** 2, 1.0 / gain


def run_fig3c(cfg):
    m = model_values(cfg, FIG3C_MODEL)
    p = protocol_values(cfg, FIG3C)
    g0 = m["gamma0"]
    _require(g0 > 0, "fig3c needs gamma0 > 0")
    _require(0 < p["k_min"] < p["k_max"] and p["k_points"] >= 2, "fig3c needs 0 < k_min < k_max")
    _require(0 <= p["r_min"] < p["r_max"] and p["r_points"] >= 2, "fig3c needs 0 <= r_min < r_max")
    ks = np.geomspace(p["k_min"], p["k_max"], p["k_points"])
    rs = np.linspace(p["r_min"], p["r_max"], p["r_points"])
    tab = ResultTable(
        "fig3c",
        ["kerr_over_gamma0", "r", "dk_ratio", "dk_ratio_approx", "alpha_over_gamma"],
        ["1", "1", "1", "1", "1"],
        notes=["dk_ratio = delta k_min / delta k_0 (independent of kerr);"
               " alpha_over_gamma shows where the qubit picture holds"],
    )
    for kr in ks:
        for r in rs:
            exact, approx = relative_sensitivity(r, m["theta"])
            tab.add(kr, r, exact, approx, 2.0 * model.enhanced_kerr(r, kr) / math.cosh(2.0 * r))
    contour = ResultTable(
        "fig3c_contour", ["kerr_over_gamma0", "r_unit_ratio"], ["1", "1"],
        notes=["smallest r on the grid interval where dk_ratio = 1"],
    )
    for kr in ks:
        vals = np.array([relative_sensitivity(r, m["theta"])[0] for r in rs]) - 1.0
        contour.add(kr, _first_root(rs, vals))
    return ScenarioResult([tab, contour])


def _first_root(x, y, atol=1e-12):
    for i in range(len(x)):
        if abs(y[i]) <= atol:
            return float(x[i])
        if i + 1 < len(x) and y[i] * y[i + 1] < 0:
            return float(x[i] - y[i] * (x[i + 1] - x[i]) / (y[i + 1] - y[i]))
    return "none"


# ---------------------------------------------------------------------------
# Effective-model validation


SM_S1_MODEL = {"kerr": 1.0, "gamma0": 0.02, "theta": math.pi, "dim": 16}
SM_S1 = {
    "r": 1.0,
    "omega_b": None,
    "rwa_ratio": 0.01,
    "drive_fraction": 0.05,
    "periods": 1.0,
    "points": 81,
    "frame": "rotating",
    "pump_ratio": 50.0,
    "q_half_width": 3.0,
    "q_points": 41,
    "q_snapshots": [0.5, 1.0],
    "q_dim": 0,
    "pop_threshold": 0.05,
    "q_threshold": 0.02 / math.pi,
    "tol": 1e-6,
}


def _sm_s1_params(cfg):
    m = model_values(cfg, SM_S1_MODEL)
    p = protocol_values(cfg, SM_S1)
    _require(p["frame"] in ("rotating", "pump"), "protocol.frame must be 'rotating' or 'pump'")
    _require(p["points"] >= 2 and p["periods"] > 0, "sm-s1 needs points >= 2 and periods > 0")
    _require(all(0 <= s <= 1 for s in p["q_snapshots"]), "protocol.q_snapshots are fractions of the window")
    if _driven(cfg):
        _no_direct_point(cfg, ("r", "omega_b", "rwa_ratio"))
        params = model.ModelParams(**m)
    else:
        omega_b = _omega_b_for(p["r"], m["kerr"], p["rwa_ratio"], p["omega_b"])
        try:
            delta = model.detuning_for_omega_b(p["r"], omega_b, m["kerr"])
        except ValueError as exc:
            raise ConfigError(f"sm-s1: {exc}") from exc
        params = model.ModelParams.from_squeezing(
            p["r"], omega_b, m["kerr"], m["gamma0"], omega_a=p["pump_ratio"] * delta,
            theta=m["theta"], dim=m["dim"],
        )
    return m, p, params


def _sm_s1_rwa(cfg):
    _, _, params = _sm_s1_params(cfg)
    return [("validation point", model.rwa_report(params))]


def _level_frequency(h):
    """``E1 - E0`` of the eigenvectors closest to the first two basis states."""
    w, v = np.linalg.eigh(h)
    i0 = int(np.argmax(np.abs(v[0]) ** 2))
    i1 = int(np.argmax(np.abs(v[1]) ** 2))
    return float(w[i1] - w[i0])


def run_sm_s1(cfg):
    m, p, params = _sm_s1_params(cfg)
    eff = model.effective_params(params)
    dim = params.dim
    rwa = model.rwa_report(params)
    omega_d = p["drive_fraction"] * eff.alpha
    _require(omega_d > 0, "sm-s1 needs a positive drive (kerr > 0)")
    t_grid = np.linspace(0.0, p["periods"] * TWO_PI / omega_d, p["points"])
    sc = lindblad.StepControl(tol=p["tol"])
    rho0 = _rho_ground(dim)

    # full model in the squeezed basis, driven at its own 0-1 splitting
    h3 = model.hamiltonian_rot(params, basis="squeezed", dim=dim)
    omega_q = _level_frequency(h3)
    b = fock.annihilation(dim)
    bd = b.conj().T

    def drive(t):
        ph = np.exp(1j * omega_q * t)
        return 0.5 * omega_d * (ph * b + np.conj(ph) * bd)

    if p["frame"] == "rotating":
        diag = np.real(np.diag(h3)).copy()
        off = h3 - np.diag(diag)
        a = model.mode_operator("squeezed", dim, eff.r, eff.theta)
        terms = [lindblad.DissipatorTerm(params.gamma0, a, a.conj().T)] if params.gamma0 > 0 else []
        gen = lindblad.Generator(lambda t: off + drive(t), terms, diagonal=diag)
        full = lindblad.evolve(gen, rho0, t_grid, sc)
    else:
        full = lindblad.evolve_lab_frame(params, rho0, t_grid, basis="squeezed", frame="rotating",
                                         dim=dim, step_control=sc, extra=drive)
    reduced = lindblad.evolve(lindblad.effective_generator(eff, dim=dim, drive=omega_d), rho0, t_grid, sc)

    pf, pe = _populations(full.states), _populations(reduced.states)
    pop_dev = float(np.max(np.abs(pf[:, :2] - pe[:, :2])))
    top = float(np.max(pf[:, -2:]))

    pops = ResultTable(
        "sm_s1_populations",
        ["t", "p0_full", "p1_full", "p0_eff", "p1_eff", "outside_full", "outside_eff"],
        ["s", "1", "1", "1", "1", "1", "1"],
        notes=[f"r={eff.r!r} omega_b={eff.omega_b!r} omega_q={omega_q!r} omega_d={omega_d!r}"
               f" gamma0={params.gamma0!r} frame={p['frame']}",
               "full: pump-frame Hamiltonian with bare decay, squeezed basis; eff: effective model"],
        diagnostics=_traj_diagnostics("full", full) + _traj_diagnostics("eff", reduced),
    )
    for i, t in enumerate(t_grid):
        pops.add(t, pf[i, 0], pf[i, 1], pe[i, 0], pe[i, 1], 1 - pf[i, 0] - pf[i, 1], 1 - pe[i, 0] - pe[i, 1])

    grid = fock.PhaseSpaceGrid.square(p["q_half_width"], p["q_points"])
    q_dim = p["q_dim"] or None
    n = np.arange(dim)
    dn = np.subtract.outer(n, n)
    q_dev, fields = 0.0, []
    for frac in p["q_snapshots"]:
        i = int(np.argmin(np.abs(t_grid - frac * t_grid[-1])))
        t = t_grid[i]
        # same qubit frame for both: undo the free rotation at omega_q
        rho_full = full.states[i] * np.exp(1j * omega_q * dn * t)
        qs = []
        for label, rho in (("full", rho_full), ("eff", reduced.states[i])):
            state = fock.to_fock_basis(fock.QuantumState.density(rho), eff.r, eff.theta, q_dim)
            q = fock.qfunc(state, grid)
            qs.append(q)
            fields.append(field_table(f"sm_s1_q_{label}_{frac:g}", grid, q, "1",
                                      notes=[f"Husimi Q at t={t!r} in the frame rotating at the qubit frequency"]))
        q_dev = max(q_dev, float(np.max(np.abs(qs[0] - qs[1]))))

    passed = pop_dev < p["pop_threshold"] and q_dev < p["q_threshold"]
    rows = [
        ("max_population_deviation", pop_dev, p["pop_threshold"]),
        ("max_q_deviation", q_dev, p["q_threshold"]),
    ]
    rows += [(f"rwa_ratio_{j + 1}", x, rwa.threshold) for j, x in enumerate(rwa.ratios)]
    rows += [("omega_q_minus_omega_b", omega_q - eff.omega_b, None), ("top_population_full", top, None)]
    report = _report_table("sm_s1_report", rows)
    if not passed:
        report.diagnostics.append("FLAG effective model deviates beyond thresholds")
    if not rwa.ok:
        report.diagnostics.append(f"FLAG rotating-wave ratios exceed {rwa.threshold:g}: {rwa.ratios}")
    checks = {"pop_dev": pop_dev, "q_dev": q_dev, "passed": passed, "rwa_ok": rwa.ok,
              "flags": full.flags + reduced.flags, "omega_q": omega_q, "top": top}
    return ScenarioResult([pops, report] + fields, checks, [("validation point", rwa)])


# ---------------------------------------------------------------------------
# Feasibility report


FEAS_MODEL = {
    "omega_a": TWO_PI * 600e6,
    "kerr": TWO_PI * 3e3,
    "gamma0": TWO_PI * 3e3,
    "theta": math.pi,
    "mass": 1e-21,
}
FEAS = {"r": 1.5, "omega_b": TWO_PI * 4.2e6, "temperature": 0.01, "gamma0_alt": 3e3, "factor": 3.0}

# published reference values for this operating point; frequencies in Hz
REFERENCE = {
    "alpha_over_2pi": 1.8e6,
    "big_gamma_over_2pi": 13.5e3,
    "omega_b_over_2pi": 4.2e6,
    "x0": 4e-12,
    "dk_min": 4.71e-10,
    "dk0": 2.11e-9,
    "dk_ratio_approx": 4.71e-10 / 2.11e-9,
    "dk_ratio": 4.71e-10 / 2.11e-9,
    "nbar": 0.00595,
}


def _feas_point(cfg):
    m = model_values(cfg, FEAS_MODEL)
    p = protocol_values(cfg, FEAS)
    _require(m.get("mass") is not None, "feasibility needs model.mass")
    _require(p["temperature"] > 0 and p["factor"] > 1, "feasibility needs temperature > 0 and factor > 1")
    if _driven(cfg):
        _no_direct_point(cfg)
        params = model.ModelParams(**m)
    else:
        params = model.ModelParams.from_squeezing(
            p["r"], p["omega_b"], m["kerr"], m["gamma0"], omega_a=m["omega_a"],
            theta=m["theta"], mass=m["mass"],
        )
    return m, p, params


def _feas_rwa(cfg):
    _, _, params = _feas_point(cfg)
    return [("feasibility point", model.rwa_report(params))]


def run_feasibility(cfg):
    m, p, params = _feas_point(cfg)
    eff = model.effective_params(params)
    sens = sensing.sensitivity_spring(eff)
    g_alt = p["gamma0_alt"]
    eff_alt = replace(eff, gamma0=g_alt, big_gamma=math.cosh(2.0 * eff.r) * g_alt)
    sens_alt = sensing.sensitivity_spring(eff_alt)
    nbar = model.thermal_occupation(params.omega_a, p["temperature"])
    rwa = model.rwa_report(params)

    computed = [
        ("alpha_over_2pi", eff.alpha / TWO_PI, "Hz", ""),
        ("big_gamma_over_2pi", eff.big_gamma / TWO_PI, "Hz", ""),
        ("omega_b_over_2pi", eff.omega_b / TWO_PI, "Hz", "from the back-solved pump"),
        ("delta_a_over_2pi", params.delta_a / TWO_PI, "Hz", "back-solved pump detuning"),
        ("drive_amp_over_2pi", params.drive_amp / TWO_PI, "Hz", "pump amplitude delta_a tanh 2r"),
        ("x0", eff.x_zpf, "m", ""),
        ("dk_min", sens.sensitivity, "N/m/sqrt(Hz)", "gamma0 read as an angular rate"),
        ("dk0", sens.baseline, "N/m/sqrt(Hz)", "gamma0 read as an angular rate"),
        ("dk_min_alt", sens_alt.sensitivity, "N/m/sqrt(Hz)", f"gamma0 = {g_alt:g} 1/s"),
        ("dk0_alt", sens_alt.baseline, "N/m/sqrt(Hz)", f"gamma0 = {g_alt:g} 1/s"),
        ("dk_ratio", sens.relative, "1", "amplified bath noise"),
        ("dk_ratio_approx", sens.approx / sens.baseline, "1", "noise-free form e^-r"),
        ("nbar", nbar, "1", f"thermal occupation at {p['temperature']:g} K"),
    ]
    computed += [(f"rwa_ratio_{j + 1}", x, "1", f"threshold {rwa.threshold:g}") for j, x in enumerate(rwa.ratios)]

    f = p["factor"]
    tab = ResultTable(
        "feasibility",
        ["quantity", "computed", "reference", "ratio", "unit", "within_factor", "note"],
        ["-", "mixed", "mixed", "1", "-", "bool", "-"],
        notes=[f"r={eff.r!r} theta={eff.theta!r}; within_factor uses factor {f:g}"],
    )
    disc = ResultTable(
        "feasibility_discrepancies",
        ["quantity", "computed", "reference", "ratio", "note"],
        ["-", "mixed", "mixed", "1", "-"],
        notes=["quantities whose computed value differs from the reference by more than 10%"],
    )
    checks = {}
    for q, value, unit, note in computed:
        ref = REFERENCE.get(q)
        if ref is None:
            tab.add(q, value, "n/a", "n/a", unit, "n/a", note)
            checks[q] = {"computed": value}
            continue
        ratio = float(value / ref)
        ok = bool(1.0 / f <= ratio <= f)
        tab.add(q, value, ref, ratio, unit, 1.0 if ok else 0.0, note)
        checks[q] = {"computed": value, "reference": ref, "ratio": ratio, "within": ok}
        if abs(math.log(ratio)) > math.log(1.1):
            msg = f"computed/reference = {ratio:.4g}" + ("" if ok else f"; outside factor {f:g}")
            disc.add(q, value, ref, ratio, msg)
            tab.diagnostics.append(f"DISCREPANCY {q}: {msg}")
    return ScenarioResult([tab, disc], checks, [("feasibility point", rwa)])


# ---------------------------------------------------------------------------
# Sweeps


SWEEP_MODEL = {"kerr": 1.0, "gamma0": 1.0, "theta": math.pi, "dim": 10}
SWEEP = {"r": 1.0, "omega_b": 10.0, "pulse_amp": 1.0, "omega_v": 0.0, "tol": 1e-7}
SWEEP_PROTOCOL_AXES = ("r", "omega_b", "pulse_amp", "omega_v")


@dataclass
class Point:
    m: dict
    p: dict
    eff: model.EffectiveParams
    cache: dict = field(default_factory=dict)


def _bias_ramsey(pt):
    if "ramsey" not in pt.cache:
        omega = pt.eff.omega_b + pt.p["omega_v"]
        t_bias, _ = sensing.bias_time(omega)
        pt.cache["ramsey"] = sensing.ramsey_numeric_full(
            pt.eff, pt.p["omega_v"], [t_bias], pt.p["pulse_amp"], dim=pt.m["dim"],
            step_control=lindblad.StepControl(tol=pt.p["tol"]),
        )
    return pt.cache["ramsey"]


def _ratio_alpha_gamma(pt):
    _require(pt.eff.big_gamma > 0, "alpha_over_gamma needs gamma0 > 0")
    return pt.eff.alpha / pt.eff.big_gamma


@dataclass(frozen=True)
class Observable:
    unit: str
    fn: Callable
    needs_mass: bool = False


OBSERVABLES = {
    "r": Observable("1", lambda pt: pt.eff.r),
    "omega_b": Observable("rad/s", lambda pt: pt.eff.omega_b),
    "u_b": Observable("rad/s", lambda pt: pt.eff.u_b),
    "alpha": Observable("rad/s", lambda pt: pt.eff.alpha),
    "big_gamma": Observable("rad/s", lambda pt: pt.eff.big_gamma),
    "alpha_over_gamma": Observable("1", _ratio_alpha_gamma),
    "n_sq": Observable("1", lambda pt: pt.eff.n_sq),
    "kappa": Observable("1", lambda pt: pt.eff.kappa),
    "rwa_worst": Observable("1", lambda pt: max(model.rwa_ratios(pt.eff.r, pt.m["kerr"], pt.eff.omega_b))),
    "dk_ratio": Observable("1", lambda pt: relative_sensitivity(pt.eff.r, pt.eff.theta)[0]),
    "dk_ratio_approx": Observable("1", lambda pt: relative_sensitivity(pt.eff.r, pt.eff.theta)[1]),
    "dk_min": Observable("N/m/sqrt(Hz)", lambda pt: sensing.sensitivity_spring(pt.eff).sensitivity, True),
    "dk0": Observable("N/m/sqrt(Hz)", lambda pt: sensing.sensitivity_spring(pt.eff).baseline, True),
    "df_min": Observable("N/sqrt(Hz)", lambda pt: sensing.sensitivity_force(pt.eff).sensitivity, True),
    "p1_bias": Observable("1", lambda pt: float(_bias_ramsey(pt).p1[0])),
    "leakage_bias": Observable("1", lambda pt: float(_bias_ramsey(pt).leakage[0])),
    "top_population_bias": Observable("1", lambda pt: _bias_ramsey(pt).diagnostics["top_population"]),
}
DEFAULT_OBSERVABLES = ["alpha", "big_gamma", "alpha_over_gamma", "dk_ratio", "rwa_worst"]


def _sweep_plan(cfg, axes, observables, model_defaults, protocol_defaults):
    axes = list(cfg.axes) or list(axes)
    observables = list(observables if cfg.observables is None else cfg.observables)
    allowed = set(model.ModelParams.field_names()) | set(SWEEP_PROTOCOL_AXES)
    names = [a.variable for a in axes]
    for name in names:
        _require(name in allowed, f"sweep axis {name!r} is not a model field or one of {SWEEP_PROTOCOL_AXES}")
    _require(len(set(names)) == len(names), "sweep axes must be distinct")
    _require(observables, "sweep needs at least one observable")
    for o in observables:
        _require(o in OBSERVABLES, f"unknown observable {o!r}; known: {sorted(OBSERVABLES)}")
    m = model_values(cfg, model_defaults)
    p = protocol_values(cfg, protocol_defaults)
    driven = _driven(cfg, axes)
    if driven:
        _no_direct_point(cfg)
        _require(not {"r", "omega_b"} & set(names), "sweep over r/omega_b conflicts with a pump in [model]")
    has_mass = m.get("mass") is not None or "mass" in names
    for o in observables:
        _require(has_mass or not OBSERVABLES[o].needs_mass, f"observable {o!r} needs model.mass")
    points = []
    for combo in itertools.product(*(a.values() for a in axes)):
        mm, pp = dict(m), dict(p)
        for name, value in zip(names, combo):
            target = pp if name in SWEEP_PROTOCOL_AXES else mm
            target[name] = int(round(value)) if name == "dim" else float(value)
        points.append((names, combo, mm, pp, driven, observables))
    return axes, observables, points


def _sweep_point(args):
    names, combo, m, p, driven, observables = args
    try:
        model.ModelParams(**m)
    except ValueError as exc:
        raise ConfigError(f"sweep point {dict(zip(names, combo))}: {exc}") from exc
    pt = Point(m, p, operating_point(m, p["r"], p["omega_b"], driven))
    return [OBSERVABLES[o].fn(pt) for o in observables]


def run_sweep(cfg, *, name="sweep", axes=(), observables=DEFAULT_OBSERVABLES,
              model_defaults=SWEEP_MODEL, protocol_defaults=SWEEP):
    axes, observables, points = _sweep_plan(cfg, axes, observables, model_defaults, protocol_defaults)
    rows = parallel_map(_sweep_point, points)
    units = {a.variable: _axis_unit(a.variable) for a in axes}
    tab = ResultTable(
        name,
        [a.variable for a in axes] + observables,
        [units[a.variable] for a in axes] + [OBSERVABLES[o].unit for o in observables],
        notes=[f"axes in declared order, first axis slowest: {', '.join(a.variable for a in axes) or 'none'}"],
    )
    for (_, combo, *_), row in zip(points, rows):
        tab.add(*combo, *row)
    return ScenarioResult([tab], {"rows": rows})


def _axis_unit(name):
    return {"mass": "kg", "dim": "1", "theta": "rad", "r": "1"}.get(name, "rad/s")


def _sweep_rwa(cfg, **kw):
    _, _, points = _sweep_plan(cfg, kw.get("axes", ()), kw.get("observables", DEFAULT_OBSERVABLES),
                               kw.get("model_defaults", SWEEP_MODEL), kw.get("protocol_defaults", SWEEP))
    out = []
    for names, combo, m, p, driven, _ in points:
        eff = operating_point(m, p["r"], p["omega_b"], driven)
        label = " ".join(f"{n}={v:.6g}" for n, v in zip(names, combo)) or "single point"
        out.append((label, model.RwaReport(model.rwa_ratios(eff.r, m["kerr"], eff.omega_b))))
    return out


# bias-point population over kerr and r with weak bare decay
SM_S2_MODEL = {"kerr": 1.0, "gamma0": 1e-4, "theta": math.pi, "dim": 10}


def _sm_s2_kwargs():
    return dict(
        name="sm_s2",
        axes=(Axis("kerr", 0.1, 10.0, 9, "log"), Axis("r", 0.0, 2.0, 9)),
        observables=["p1_bias", "leakage_bias", "top_population_bias", "dk_ratio", "rwa_worst"],
        model_defaults=SM_S2_MODEL,
        protocol_defaults=SWEEP,
    )


def run_sm_s2(cfg):
    return run_sweep(cfg, **_sm_s2_kwargs())


# ---------------------------------------------------------------------------
# registry


@dataclass(frozen=True)
class Scenario:
    name: str
    summary: str
    run: Callable
    rwa: Callable | None = None


SCENARIOS = {
    s.name: s
    for s in (
        Scenario("fig1c", "anharmonicity, decoherence and their ratio versus r", run_fig1c),
        Scenario("fig2", "Rabi flopping with and without squeezing, populations and Wigner snapshots",
                 run_fig2, _fig2_rwa),
        Scenario("fig3b", "full-space Ramsey traces with finite pulses over (kerr, r)", run_fig3b, _fig3b_rwa),
        Scenario("fig3c", "relative spring sensitivity map over (kerr/gamma0, r)", run_fig3c),
        Scenario("sm-s1", "full pump-frame dynamics against the effective model", run_sm_s1, _sm_s1_rwa),
        Scenario("sm-s2", "bias-point Ramsey population and sensitivity over (kerr, r)", run_sm_s2,
                 lambda cfg: _sweep_rwa(cfg, **_sm_s2_kwargs())),
        Scenario("feasibility", "SI operating point against reference values", run_feasibility, _feas_rwa),
        Scenario("sweep", "cartesian sweep of registered observables", run_sweep, _sweep_rwa),
    )
}


def get(name):
    try:
        return SCENARIOS[name]
    except KeyError:
        raise ConfigError(f"unknown scenario {name!r}; known: {sorted(SCENARIOS)}") from None


def resolve_name(cfg, name=None):
    if name and cfg.scenario and name != cfg.scenario:
        raise ConfigError(f"--scenario {name!r} disagrees with config scenario {cfg.scenario!r}")
    name = name or cfg.scenario
    _require(name is not None, "no scenario given (use --scenario or a top-level scenario key)")
    get(name)
    return name


def _check_sweep_section(cfg, name):
    if name not in ("sweep", "sm-s2"):
        _require(not cfg.axes and cfg.observables is None, f"[sweep] is only valid for sweep scenarios, not {name}")


def run(name, cfg):
    _check_sweep_section(cfg, name)
    return get(name).run(cfg)


def validate(name, cfg):
    """Schema checks plus the rotating-wave report, without running any dynamics."""
    scen = get(name)
    _check_sweep_section(cfg, name)
    if scen.rwa is None:
        # schema-only check for closed-form scenarios
        {"fig1c": lambda: (model_values(cfg, FIG1C_MODEL), protocol_values(cfg, FIG1C)),
         "fig3c": lambda: (model_values(cfg, FIG3C_MODEL), protocol_values(cfg, FIG3C))}[name]()
        return []
    return scen.rwa(cfg)
