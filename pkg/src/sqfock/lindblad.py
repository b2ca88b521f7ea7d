"""Lindblad generators and a deterministic RK4 integrator with step halving.

A generator is ``d rho/dt = -i[H, rho] + sum_k D_k rho`` where every
:class:`DissipatorTerm` contributes ``rate/2 (2 A rho B - B A rho - rho B A)``.
Rates may be complex and may rotate in time (``rate e^{i f t}``), which is how
the two-quantum bath correlations look from a rotating frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import fock, model
from .errors import DimensionMismatch, NonconvergentIntegration


@dataclass(frozen=True)
class DissipatorTerm:
    rate: complex
    op_left: np.ndarray
    op_right: np.ndarray
    frequency: float = 0.0

    def __post_init__(self):
        if self.op_left.shape != self.op_right.shape or self.op_left.ndim != 2:
            raise DimensionMismatch(
                f"dissipator operators have shapes {self.op_left.shape} and {self.op_right.shape}"
            )

    @property
    def dim(self):
        return self.op_left.shape[0]

    def rate_at(self, t):
        if self.frequency == 0.0:
            return self.rate
        return self.rate * np.exp(1j * self.frequency * t)


def dissipator_apply(term, rho, t=0.0):
    """``rate/2 (2 A rho B - B A rho - rho B A)``."""
    if rho.shape != term.op_left.shape:
        raise DimensionMismatch(f"rho has shape {rho.shape}, operators {term.op_left.shape}")
    a, b = term.op_left, term.op_right
    ba = b @ a
    return 0.5 * term.rate_at(t) * (2.0 * a @ rho @ b - ba @ rho - rho @ ba)


def squeezed_bath_terms(eff, b, frame_frequency=0.0):
    """Squeezed-reservoir dissipators for mode ``b``.

    Rates ``gamma0 (N+1)``, ``gamma0 N``, ``-gamma0 M``, ``-gamma0 M^*`` act through
    ``(b, b^dag)``, ``(b^dag, b)``, ``(b, b)`` and ``(b^dag, b^dag)``. In a frame
    rotating at ``frame_frequency`` the two cross terms pick up ``e^{-+2 i w t}``.
    Zero-rate terms are still emitted so the list always has four entries.
    """
    g, n, m = eff.gamma0, eff.n_sq, eff.m_sq
    bd = b.conj().T
    w = 2.0 * frame_frequency
    return [
        DissipatorTerm(g * (n + 1.0), b, bd),
        DissipatorTerm(g * n, bd, b),
        DissipatorTerm(-g * m, b, b, -w),
        DissipatorTerm(-g * np.conj(m), bd, bd, w),
    ]


@dataclass
class Generator:
    """Hamiltonian part plus dissipators.

    ``diagonal`` is an optional real vector ``D`` added to the Hamiltonian as
    ``diag(D)``; its commutator is integrated exactly by the integrator
    (integrating factor), which removes the stiffness of large level shifts
    such as high-lying Kerr energies. For a constant matrix Hamiltonian with
    ``split_diagonal`` set, its real diagonal is moved into ``D``
    automatically.
    """

    hamiltonian: np.ndarray | Callable[[float], np.ndarray]
    terms: list = field(default_factory=list)
    diagonal: np.ndarray | None = None
    split_diagonal: bool = True

    def __post_init__(self):
        self.terms = list(self.terms)
        if not callable(self.hamiltonian):
            h = np.asarray(self.hamiltonian, dtype=complex)
            if self.split_diagonal:
                d = np.real(np.diag(h)).copy()
                h = h - np.diag(d)
                self.diagonal = d if self.diagonal is None else self.diagonal + d
            self.hamiltonian = h
        h0 = self.h(0.0)
        self.dim = h0.shape[0]
        if self.diagonal is not None:
            self.diagonal = np.asarray(self.diagonal, dtype=float)
            if self.diagonal.shape != (self.dim,):
                raise DimensionMismatch("diagonal part does not match the Hamiltonian dim")
            self._gaps = self.diagonal[:, None] - self.diagonal[None, :]
        for term in self.terms:
            if term.dim != self.dim:
                raise DimensionMismatch(f"term dim {term.dim} != Hamiltonian dim {self.dim}")
        self._static = [t for t in self.terms if t.frequency == 0.0]
        self._moving = [t for t in self.terms if t.frequency != 0.0]
        q = np.zeros((self.dim, self.dim), dtype=complex)
        for t in self._static:
            q += t.rate * (t.op_right @ t.op_left)
        self._q = q
        # sum rate * A rho B over terms sharing A as A rho (sum rate B)
        groups = []
        for t in self._static:
            if t.rate == 0:
                continue
            for g in groups:
                if g[0] is t.op_left or np.array_equal(g[0], t.op_left):
                    g[1] = g[1] + t.rate * t.op_right
                    break
            else:
                groups.append([t.op_left, t.rate * t.op_right])
        self._jumps = [(a, bsum) for a, bsum in groups]
        self._k_static = None if callable(self.hamiltonian) else self._effective(h0, q)

    def h(self, t):
        """Hamiltonian without the split-off diagonal part."""
        if callable(self.hamiltonian):
            return np.asarray(self.hamiltonian(t), dtype=complex)
        return self.hamiltonian

    def full_hamiltonian(self, t):
        h = self.h(t)
        return h if self.diagonal is None else h + np.diag(self.diagonal)

    @staticmethod
    def _effective(h, q):
        return -1j * h - 0.5 * q, 1j * h - 0.5 * q

    def phases(self, s):
        """Elementwise propagator of the diagonal commutator over a time ``s``."""
        return np.exp(-1j * self._gaps * s)

    def rhs_split(self, t, rho):
        """Right-hand side without the diagonal commutator."""
        if self._k_static is not None and not self._moving:
            kl, kr = self._k_static
        else:
            q = self._q
            for term in self._moving:
                q = q + term.rate_at(t) * (term.op_right @ term.op_left)
            kl, kr = self._effective(self.h(t), q)
        out = kl @ rho + rho @ kr
        for a, bsum in self._jumps:
            out += a @ rho @ bsum
        for term in self._moving:
            out += term.rate_at(t) * (term.op_left @ rho @ term.op_right)
        return out

    def rhs(self, t, rho):
        out = self.rhs_split(t, rho)
        if self.diagonal is not None:
            out = out - 1j * self._gaps * rho
        return out

    def norm_bound(self, times=(0.0,)):
        """Bound on the norm of the non-diagonal part of the generator."""
        h = max(np.linalg.norm(self.h(t), 2) for t in times)
        d = sum(
            2.0 * abs(term.rate) * np.linalg.norm(term.op_left, 2) * np.linalg.norm(term.op_right, 2)
            for term in self.terms
        )
        return 2.0 * h + d


@dataclass(frozen=True)
class StepControl:
    dt: float | None = None
    tol: float = 1e-6
    max_refinements: int = 14
    observable: Callable | None = None
    trace_tol: float = 1e-8
    herm_tol: float = 1e-10
    eig_tol: float = -1e-8
    stability: float = 2.0


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    trace_error: np.ndarray
    herm_error: np.ndarray
    min_eig: np.ndarray
    dt: float
    refinements: int
    step_change: float
    flags: list = field(default_factory=list)

    @property
    def flagged(self):
        return bool(self.flags)

    def populations(self):
        return np.real(np.einsum("...ii->...i", self.states))

    def expect(self, op):
        return np.einsum("ij,...ji->...", op, self.states)

    def state(self, i):
        return fock.QuantumState.density(self.states[i])

    def overlap(self, ket):
        ket = np.asarray(ket)
        return np.real(np.einsum("i,...ij,j->...", ket.conj(), self.states, ket))


def _check_rho0(rho0, dim):
    if isinstance(rho0, fock.QuantumState):
        rho0 = rho0.dm()
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape[-2:] != (dim, dim) or rho0.ndim not in (2, 3):
        raise DimensionMismatch(f"initial state shape {rho0.shape} vs generator dim {dim}")
    for rho in rho0.reshape(-1, dim, dim):
        fock.QuantumState.density(rho)
    return rho0


def _dag(x):
    return np.swapaxes(x, -1, -2).conj()


def _check_grid(t_grid):
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size < 1:
        raise ValueError("time grid must be a non-empty 1-D array")
    if np.any(np.diff(t_grid) <= 0):
        raise ValueError("time grid must be strictly increasing")
    return t_grid


def _rk4_step(gen, t, rho, h):
    rhs = gen.rhs
    k1 = rhs(t, rho)
    k2 = rhs(t + 0.5 * h, rho + 0.5 * h * k1)
    k3 = rhs(t + 0.5 * h, rho + 0.5 * h * k2)
    k4 = rhs(t + h, rho + h * k3)
    return rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _lawson_step(gen, t, rho, h, e_half, e_full):
    # RK4 in the interaction picture of the diagonal part (Lawson scheme)
    rhs = gen.rhs_split
    k1 = rhs(t, rho)
    k2 = rhs(t + 0.5 * h, e_half * (rho + 0.5 * h * k1))
    u_half = e_half * rho
    k3 = rhs(t + 0.5 * h, u_half + 0.5 * h * k2)
    k4 = rhs(t + h, e_full * rho + h * e_half * k3)
    return e_full * rho + (h / 6.0) * (e_full * k1 + 2.0 * e_half * (k2 + k3) + k4)


def _rk4_run(gen, rho0, t_grid, substeps):
    states = np.empty((t_grid.size,) + rho0.shape, dtype=complex)
    herm = np.zeros(t_grid.size)
    states[0] = rho0
    rho = rho0.copy()
    split = gen.diagonal is not None
    cache = {}
    for i in range(1, t_grid.size):
        t0, t1 = t_grid[i - 1], t_grid[i]
        n = int(substeps[i - 1])
        h = (t1 - t0) / n
        if split:
            key = round(h, 15)
            if key not in cache:
                cache[key] = (gen.phases(0.5 * h), gen.phases(h))
            e_half, e_full = cache[key]
        for j in range(n):
            t = t0 + j * h
            if split:
                rho = _lawson_step(gen, t, rho, h, e_half, e_full)
            else:
                rho = _rk4_step(gen, t, rho, h)
            if j == n - 1:
                herm[i] = np.max(np.abs(rho - _dag(rho)))
            rho = 0.5 * (rho + _dag(rho))
        states[i] = rho
    return states, herm


def _default_observable(states):
    return np.real(np.einsum("...ii->...i", states))


def evolve(generator, rho0, t_grid, step_control=None):
    """Integrate ``generator`` from ``rho0`` and sample on ``t_grid``.

    ``rho0`` may be a stack ``(batch, dim, dim)`` of density matrices that
    share the generator; states then have shape ``(times, batch, dim, dim)``.

    The step starts at ``step_control.dt`` (or a stability estimate) and is
    halved globally until the observable of record, populations by default,
    moves by less than ``tol`` between two successive refinements.
    """
    sc = step_control or StepControl()
    t_grid = _check_grid(t_grid)
    rho0 = _check_rho0(rho0, generator.dim)
    obs = sc.observable or _default_observable
    if sc.dt is not None:
        dt = sc.dt
    else:
        probe = np.linspace(t_grid[0], t_grid[-1], 7) if callable(generator.hamiltonian) else (0.0,)
        bound = generator.norm_bound(probe)
        dt = sc.stability / bound if bound > 0 else np.inf
    base = np.maximum(1, np.ceil(np.diff(t_grid) / dt - 1e-9)).astype(np.int64)

    prev_states, _ = _rk4_run(generator, rho0, t_grid, base)
    prev = obs(prev_states)
    change = math.inf
    for k in range(1, sc.max_refinements + 1):
        substeps = base * 2 ** k
        states, herm = _rk4_run(generator, rho0, t_grid, substeps)
        cur = obs(states)
        change = float(np.max(np.abs(cur - prev))) if cur.size else 0.0
        if change < sc.tol:
            h = float(np.max(np.diff(t_grid) / substeps)) if t_grid.size > 1 else 0.0
            return _finish(t_grid, states, herm, h, k, change, sc)
        prev = cur
    raise NonconvergentIntegration(
        f"observable still changes by {change:.3e} after {sc.max_refinements} step halvings"
    )


def _finish(t_grid, states, herm, dt, k, change, sc):
    trace_err = np.abs(np.einsum("...ii->...", states) - 1.0)
    min_eig = np.linalg.eigvalsh(states)[..., 0]
    if states.ndim == 4:
        trace_err, min_eig = trace_err.max(axis=1), min_eig.min(axis=1)
    flags = []
    if np.max(trace_err) >= sc.trace_tol:
        flags.append(f"trace drift {np.max(trace_err):.3e}")
    if np.max(herm) >= sc.herm_tol:
        flags.append(f"hermiticity error {np.max(herm):.3e}")
    if np.min(min_eig) < sc.eig_tol:
        flags.append(f"min eigenvalue {np.min(min_eig):.3e}")
    return Trajectory(t_grid, states, trace_err, herm, min_eig, dt, k, change, flags)


def effective_generator(params, *, dim=None, drive=0.0, rotating=True, frame_frequency=None):
    """Effective squeezed-mode generator in the ``{|n>_S}`` basis.

    With ``rotating=True`` the frame co-rotates with the mode at ``omega_b``
    (or ``frame_frequency``), leaving ``U_b b^dag^2 b^2`` plus an optional
    resonant drive ``(drive/2)(b + b^dag)``; the bath cross terms then rotate.
    ``params`` is a :class:`~sqfock.model.ModelParams` or an already derived
    :class:`~sqfock.model.EffectiveParams` (then ``dim`` is required).
    """
    if isinstance(params, model.EffectiveParams):
        if dim is None:
            raise ValueError("dim is required with EffectiveParams")
        eff = params
    else:
        eff = model.effective_params(params)
        dim = params.dim if dim is None else dim
    w = (eff.omega_b if frame_frequency is None else frame_frequency) if rotating else 0.0
    h = model.kerr_oscillator(dim, eff.omega_b - w, eff.u_b)
    b = fock.annihilation(dim)
    if drive:
        h = h + 0.5 * drive * (b + b.conj().T)
    terms = squeezed_bath_terms(eff, b, w) if eff.gamma0 > 0 else []
    return Generator(h, terms)


def evolve_lab_frame(params, rho0, t_grid, *, basis="squeezed", frame="rotating",
                     dim=None, step_control=None, decay=True, extra=None):
    """Evolution under the pumped lab Hamiltonian plus bare decay ``gamma0 D[a]``.

    ``frame="rotating"`` integrates the exact Hamiltonian seen from the frame
    rotating at ``omega_p`` (every counter-rotating pump term kept), in either
    number basis; states are returned in that frame. ``frame="lab"`` integrates
    :func:`model.hamiltonian_lab` directly in the Fock basis. ``extra(t)``,
    when given, is added to the Hamiltonian in the integration frame.
    """
    dim = params.dim if dim is None else dim
    if frame == "lab":
        if basis != "fock":
            raise ValueError("lab-frame integration is only offered in the Fock basis")
        ham0 = lambda t: model.hamiltonian_lab(params, t, dim=dim)
        a = fock.annihilation(dim)
        diagonal = None
    elif frame == "rotating":
        h_rot, h_cos, h_fast = model.lab_frame_terms(params, basis=basis, dim=dim)
        h_fast_d = h_fast.conj().T
        wp = params.omega_p
        diagonal = np.real(np.diag(h_rot)).copy()
        h_rot = h_rot - np.diag(diagonal)

        def ham0(t):
            ph = np.exp(-4j * wp * t)
            return h_rot + math.cos(2.0 * wp * t) * h_cos + ph * h_fast + np.conj(ph) * h_fast_d

        r, theta = 0.0, 0.0
        if basis == "squeezed":
            eff = model.effective_params(params)
            r, theta = eff.r, eff.theta
        a = model.mode_operator(basis, dim, r, theta)
    else:
        raise ValueError(f"unknown frame {frame!r}")
    ham = ham0 if extra is None else (lambda t: ham0(t) + extra(t))
    terms = []
    if decay and params.gamma0 > 0:
        terms.append(DissipatorTerm(params.gamma0, a, a.conj().T))
    return evolve(Generator(ham, terms, diagonal=diagonal), rho0, t_grid, step_control)


def rotating_to_lab(traj, omega):
    """Undo a frame rotating at ``omega`` for Fock-basis states (``rho_mn e^{-i omega (m-n) t}``)."""
    n = np.arange(traj.states.shape[1])
    phase = np.exp(-1j * omega * np.subtract.outer(n, n)[None] * traj.times[:, None, None])
    return traj.states * phase


def random_density(dim, rng):
    """Full-rank random density matrix (Ginibre construction)."""
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = g @ g.conj().T
    return rho / np.trace(rho)

