"""Qubit-level sensing protocols on the squeezed-Fock qubit.

Two-level conventions: index 0 is ``|0>_S`` (ground), index 1 is ``|1>_S``.
The free qubit Hamiltonian is ``diag(0, omega)``, equal to ``omega sigma_z/2`` up
to a constant. The first Ramsey pulse is generated by ``-Omega sigma_y / 2`` and
takes ``|0>`` to ``(|0> + |1>)/sqrt 2``; the second pulse is its inverse, so an
empty interferometer returns the qubit to ``|0>``.

Physical inputs (spring constant in N/m, force in N, time in s) are converted
to angular frequencies with an explicit ``hbar``; everything else runs in the
same units as :class:`~sqfock.model.EffectiveParams`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from . import fock, lindblad, model
from .model import HBAR

E = math.e

# first pulse, exp(i pi/4 sigma_y) written in the (|0>, |1>) ordering
PULSE_PI2 = np.array([[1.0, -1.0], [1.0, 1.0]], dtype=complex) / math.sqrt(2.0)


@dataclass(frozen=True)
class QubitParams:
    omega_q: float
    gamma0: float
    n_sq: float = 0.0
    m_sq: complex = 0.0

    def __post_init__(self):
        if self.gamma0 < 0 or self.n_sq < 0:
            raise ValueError("decay rate and bath occupation must be non-negative")

    @property
    def big_gamma(self):
        return self.gamma0 * (2.0 * self.n_sq + 1.0)

    @property
    def kappa(self):
        return 1.0 / (2.0 * self.n_sq + 1.0)

    @classmethod
    def from_effective(cls, eff):
        return cls(eff.omega_b, eff.gamma0, eff.n_sq, eff.m_sq)

    @classmethod
    def fock_baseline(cls, omega_a, gamma0):
        return cls(omega_a, gamma0)


def position_gain(eff):
    """``|cosh r - e^{-i theta} sinh r|``; equals ``e^r`` at ``theta = pi``."""
    return abs(math.cosh(eff.r) - np.exp(-1j * eff.theta) * math.sinh(eff.r))


def _x0(eff):
    if eff.x_zpf is None:
        raise ValueError("SI sensing quantities need a mass (x_zpf is undefined)")
    return eff.x_zpf


def omega_v(eff, k):
    """Spring-signal qubit shift ``k x0^2 e^{2r} / hbar``."""
    return k * _x0(eff) ** 2 * position_gain(eff) ** 2 / HBAR


def omega_f(eff, force):
    """Static-force Rabi coupling ``2 x0 e^r F / hbar``."""
    return 2.0 * _x0(eff) * position_gain(eff) * force / HBAR


@dataclass(frozen=True)
class SignalSpec:
    kind: str
    value: float
    eff: model.EffectiveParams = field(repr=False)

    def __post_init__(self):
        if self.kind not in ("spring-constant", "static-force"):
            raise ValueError(f"unknown signal kind {self.kind!r}")

    @property
    def omega_v(self):
        return omega_v(self.eff, self.value) if self.kind == "spring-constant" else 0.0

    @property
    def omega_f(self):
        return omega_f(self.eff, self.value) if self.kind == "static-force" else 0.0

    @property
    def omega_r(self):
        return math.hypot(self.eff.omega_b, self.omega_f)


def project_signal(kind, eff=None):
    """Qubit-subspace projection of the unit-strength signal operator.

    Returns ``(matrix, traceless)``: the raw 2x2 block on ``{|0>_S, |1>_S}`` of
    ``(b + b^dag)^2`` (spring) or ``b + b^dag`` (force), and the part kept after
    discarding the identity component, in units where the prefactor is 1.
    """
    b = fock.annihilation(4)
    x = b + b.conj().T
    if kind == "spring-constant":
        block = (x @ x)[:2, :2]
    elif kind == "static-force":
        block = x[:2, :2]
    else:
        raise ValueError(f"unknown signal kind {kind!r}")
    traceless = block - 0.5 * np.trace(block) * np.eye(2)
    return block, traceless


# ---------------------------------------------------------------------------
# Ramsey


@dataclass
class RamseyTrace:
    times: np.ndarray
    p1: np.ndarray
    rho: np.ndarray
    leakage: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)


def ramsey_coherence(qubit, omega_v, t):
    """``c(t) = exp[-(Gamma/2 + i (omega_q + omega_v)) t]``."""
    t = np.asarray(t, dtype=float)
    return np.exp((-0.5 * qubit.big_gamma - 1j * (qubit.omega_q + omega_v)) * t)


def free_qubit_state(qubit, omega_v, t):
    """Element-wise solution of the projected master equation from ``(|0>+|1>)/sqrt 2``
    without the two-quantum cross terms."""
    t = np.asarray(t, dtype=float)
    c = ramsey_coherence(qubit, omega_v, t)
    kap = qubit.kappa
    decay = np.exp(-qubit.big_gamma * t)
    rho = np.empty(t.shape + (2, 2), dtype=complex)
    rho[..., 0, 0] = 0.5 * (1.0 + kap) - 0.5 * kap * decay
    rho[..., 1, 1] = 0.5 * (1.0 - kap) + 0.5 * kap * decay
    rho[..., 0, 1] = 0.5 * np.conj(c)
    rho[..., 1, 0] = 0.5 * c
    return rho


def ramsey_analytic(qubit, omega_v, t):
    """Post-sequence density matrix and ``P1 = 1/2 - e^{-Gamma t/2} cos[(omega_q+omega_v) t]/2``."""
    rho = PULSE_PI2.conj().T @ free_qubit_state(qubit, omega_v, t) @ PULSE_PI2
    p1 = 0.5 - 0.5 * np.real(ramsey_coherence(qubit, omega_v, t))
    return rho, p1


def _qubit_generator(qubit, omega_v, cross_terms):
    h = np.diag([0.0, qubit.omega_q + omega_v]).astype(complex)
    terms = lindblad.squeezed_bath_terms(qubit, fock.annihilation(2))
    if not cross_terms:
        terms = terms[:2]
    return lindblad.Generator(h, terms)


def ramsey_numeric_qubit(qubit, omega_v, t_grid, *, cross_terms=True, step_control=None):
    """Integrate the projected master equation between two ideal pulses."""
    gen = _qubit_generator(qubit, omega_v, cross_terms)
    rho0 = PULSE_PI2 @ np.diag([1.0, 0.0]).astype(complex) @ PULSE_PI2.conj().T
    after = lambda states: PULSE_PI2.conj().T @ states @ PULSE_PI2
    sc = step_control or lindblad.StepControl(
        tol=1e-8, observable=lambda s: np.concatenate([np.real(after(s)[:, 1, 1]), np.real(s[:, 1, 1])])
    )
    traj = lindblad.evolve(gen, rho0, t_grid, sc)
    rho = after(traj.states)
    return RamseyTrace(
        traj.times, np.real(rho[:, 1, 1]), rho,
        diagnostics={"free": traj.states, "flags": traj.flags, "dt": traj.dt},
    )


def pulse_duration(pulse_amp):
    return math.pi / (2.0 * pulse_amp)


def _full_space_ops(eff, dim, omega_v):
    b = fock.annihilation(dim)
    bd = b.conj().T
    u = math.cosh(eff.r) - np.exp(-1j * eff.theta) * math.sinh(eff.r)
    ph = u / abs(u) if abs(u) > 0 else 1.0
    x = ph * b + np.conj(ph) * bd
    # (omega_v/2) x^2 split into number-conserving and two-quantum parts
    hv_0 = 0.5 * omega_v * (2.0 * bd @ b + np.eye(dim))
    hv_2 = 0.5 * omega_v * ph * ph * (b @ b)
    return b, bd, x, hv_0, hv_2


def _pulse_generator(eff, dim, omega_v, pulse_amp, sign):
    b, bd, _, hv_0, hv_2 = _full_space_ops(eff, dim, omega_v)
    w = eff.omega_b
    diag = np.real(np.diag(model.kerr_oscillator(dim, 0.0, eff.u_b) + hv_0))
    static = sign * 0.5j * pulse_amp * (bd - b)
    hv_2d = hv_2.conj().T

    def ham(s):
        ph = np.exp(-2j * w * s)
        return static + ph * hv_2 + np.conj(ph) * hv_2d

    terms = lindblad.squeezed_bath_terms(eff, b, w) if eff.gamma0 > 0 else []
    return lindblad.Generator(ham if omega_v else static, terms, diagonal=diag)


def ramsey_numeric_full(eff, omega_v, t_grid, pulse_amp, *, dim=8, step_control=None,
                        guard_tol=1e-6):
    """Full Fock-space Ramsey sequence with finite pulses.

    Pulses last ``pi/(2 pulse_amp)`` and are integrated in the frame rotating
    at ``omega_b``; each pulse's carrier phase is referenced to its own start,
    so the fringe phase is ``(omega_b + omega_v) t`` as for ideal pulses.
    Free evolution uses ``omega_b n + U_b n(n-1) + (omega_v/2) x^2`` with the
    static squeezed bath. Readout is the population of ``|1>_S`` and leakage
    is the population outside ``{|0>_S, |1>_S}``.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    tau = pulse_duration(pulse_amp)
    sc = step_control or lindblad.StepControl(tol=1e-7)
    rho0 = np.zeros((dim, dim), dtype=complex)
    rho0[0, 0] = 1.0

    first = lindblad.evolve(_pulse_generator(eff, dim, omega_v, pulse_amp, +1.0), rho0, [0.0, tau], sc)
    b, bd, x, hv_0, hv_2 = _full_space_ops(eff, dim, omega_v)
    h_free = model.kerr_oscillator(dim, eff.omega_b, eff.u_b) + 0.5 * omega_v * (x @ x)
    terms = lindblad.squeezed_bath_terms(eff, b) if eff.gamma0 > 0 else []
    free_grid = t_grid if t_grid[0] == 0 else np.concatenate([[0.0], t_grid])
    free = lindblad.evolve(lindblad.Generator(h_free, terms), first.states[-1], free_grid, sc)
    free_states = free.states if t_grid[0] == 0 else free.states[1:]
    second = lindblad.evolve(
        _pulse_generator(eff, dim, omega_v, pulse_amp, -1.0), free_states, [0.0, tau], sc
    )
    final = second.states[-1]
    pops = np.real(np.einsum("...ii->...i", final))
    top = float(np.max(pops[:, -2:])) if dim > 4 else float(np.max(pops[:, -1]))
    tail = float(np.max(np.real(np.einsum("...ii->...i", free.states))[..., -2:]))
    if max(top, tail) > guard_tol:
        diag_flag = f"top-level population {max(top, tail):.2e} exceeds {guard_tol:g}; raise dim"
    else:
        diag_flag = None
    return RamseyTrace(
        t_grid,
        pops[:, 1],
        final,
        leakage=1.0 - pops[:, 0] - pops[:, 1],
        diagnostics={
            "flags": first.flags + free.flags + second.flags + ([diag_flag] if diag_flag else []),
            "top_population": max(top, tail),
            "trace_error": float(max(first.trace_error.max(), free.trace_error.max(), second.trace_error.max())),
            "min_eig": float(min(first.min_eig.min(), free.min_eig.min(), second.min_eig.min())),
        },
    )


# ---------------------------------------------------------------------------
# Spring-constant sensitivity


@dataclass(frozen=True)
class ReadoutSpec:
    c_readout: float = 1.0
    t_m: float = 0.0
    total_time: float = 1.0

    def __post_init__(self):
        if not 0 < self.c_readout <= 1:
            raise ValueError("readout efficiency must lie in (0, 1]")
        if self.t_m < 0 or self.total_time <= 0:
            raise ValueError("readout times must be positive")

    def n_shots(self, t):
        n = self.total_time / (t + self.t_m)
        if n < 1:
            raise ValueError(f"total time {self.total_time} holds fewer than one shot of length {t + self.t_m}")
        return n

    def sigma_p(self, t):
        return 1.0 / (2.0 * self.c_readout * math.sqrt(self.n_shots(t)))


@dataclass(frozen=True)
class SensingResult:
    sensitivity: float
    t_opt: float
    approx: float | None = None
    baseline: float | None = None
    p1: np.ndarray | None = None
    delta_p: float | None = None
    snr: float | None = None

    @property
    def relative(self):
        return None if self.baseline is None else self.sensitivity / self.baseline


def delta_p(eff, delta_k, t):
    """Probability shift at a maximum-slope bias point (positive branch)."""
    big_gamma = eff.big_gamma
    return 0.5 * math.exp(-0.5 * big_gamma * t) * omega_v(eff, delta_k) * t


def snr(eff, delta_k, t, readout=None):
    readout = readout or ReadoutSpec()
    return abs(delta_p(eff, delta_k, t)) / readout.sigma_p(t)


def sensitivity_spring(eff):
    """Optimal ``delta k_min`` (N/m per sqrt(Hz)) from slope detection."""
    x0, g = _x0(eff), position_gain(eff)
    big_gamma = eff.big_gamma
    exact = HBAR * math.sqrt(big_gamma * E) / (x0 ** 2 * g ** 2)
    approx = HBAR * math.sqrt(eff.gamma0 * E) / (x0 ** 2 * g)
    base = baseline_spring(eff.gamma0, x0)
    return SensingResult(exact, 1.0 / big_gamma, approx=approx, baseline=base)


def baseline_spring(gamma0, x0):
    """Fock-qubit reference ``hbar sqrt(gamma0 e) / x0^2``."""
    return HBAR * math.sqrt(gamma0 * E) / x0 ** 2


def cramer_rao_delta_k(eff, t, total_time=1.0, phase=0.5 * math.pi):
    """Error-propagation uncertainty from two-outcome readout statistics.

    ``phase`` is the accumulated fringe phase ``(omega_b + omega_v) t``; the
    default sits on a maximum-slope bias point.
    """
    decay = math.exp(-0.5 * eff.big_gamma * t)
    re_c = decay * math.cos(phase)
    p1 = 0.5 * (1.0 - re_c)
    spread = math.sqrt(p1 - p1 * p1)
    shots = total_time / t
    err_o = spread / math.sqrt(shots)
    # d<O>/dk = (1/2) e^{-Gamma t/2} sin(phase) t dw_V/dk
    slope = 0.5 * decay * math.sin(phase) * t * omega_v(eff, 1.0)
    return err_o / abs(slope)


def sensitivity_spring_cramer_rao(eff, total_time=1.0):
    """Minimum over encoding time of :func:`cramer_rao_delta_k` at the bias point."""
    t_scale = 1.0 / eff.big_gamma
    res = minimize_scalar(
        lambda s: math.log(cramer_rao_delta_k(eff, s * t_scale, total_time)),
        bounds=(1e-3, 1e2),
        method="bounded",
        options={"xatol": 1e-10},
    )
    t_opt = res.x * t_scale
    return SensingResult(cramer_rao_delta_k(eff, t_opt, total_time), t_opt)


def bias_time(omega, t_max=None):
    """Smallest odd ``m`` with ``omega t = m pi/2``; returns ``(t, m)``.

    Raises when even ``m = 1`` lands beyond ``t_max``.
    """
    t = 0.5 * math.pi / abs(omega)
    if t_max is not None and t > t_max:
        raise ValueError(f"first bias point t={t:.3e} lies beyond {t_max:.3e}")
    return t, 1


# ---------------------------------------------------------------------------
# Static-force (Rabi) sensing


def rabi_force_probability(eff, force, t):
    wf = omega_f(eff, force)
    wr = math.hypot(eff.omega_b, wf)
    t = np.asarray(t, dtype=float)
    if wr == 0:
        return np.zeros_like(t)
    return (wf / wr) ** 2 * np.sin(0.5 * wr * t) ** 2


def rabi_unitary_probability(omega_b, wf, t):
    """Oracle: ``|<1| exp(-i (omega_b sz + wf sx) t/2) |0>|^2`` by eigendecomposition."""
    h = 0.5 * np.array([[-omega_b, wf], [wf, omega_b]], dtype=complex)
    w, v = np.linalg.eigh(h)
    out = []
    for tt in np.atleast_1d(t):
        u = (v * np.exp(-1j * w * tt)) @ v.conj().T
        out.append(abs(u[1, 0]) ** 2)
    return np.array(out)


def sensitivity_force(eff, force=None, decoherence_mode="driven-bath"):
    """Optimal ``delta F_min`` (N per sqrt(Hz)).

    ``force=None`` assumes ``omega_F >> omega_b`` so the ``omega_R^3/omega_F^3``
    prefactor is 1. ``decoherence_mode`` selects the amplified-noise envelope
    (``driven-bath``) or the bare-rate envelope of a dissipatively squeezed
    mode (``dissipative-squeezing``).
    """
    x0, g = _x0(eff), position_gain(eff)
    pref = 1.0
    if force is not None:
        wf = omega_f(eff, force)
        if wf == 0:
            raise ValueError("zero force has no Rabi contrast")
        pref = (math.hypot(eff.omega_b, wf) / wf) ** 3
    g0 = eff.gamma0
    if decoherence_mode == "driven-bath":
        rate = eff.big_gamma
        approx = pref * HBAR * math.sqrt(E * g0) / (2.0 * x0)
    elif decoherence_mode == "dissipative-squeezing":
        rate = g0
        approx = None
    else:
        raise ValueError(f"unknown decoherence mode {decoherence_mode!r}")
    value = pref * HBAR * math.sqrt(E * rate) / (2.0 * x0 * g)
    return SensingResult(value, 1.0 / rate, approx=approx)
