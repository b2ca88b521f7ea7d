"""Model parameters, derived effective quantities and Hamiltonian builders
for the two-phonon driven Kerr oscillator.

Frequencies are angular (rad/s, or any consistent unit in dimensionless
runs) with hbar = 1. SI values only appear through ``mass`` and the
zero-point amplitude, which the sensing layer combines with
:data:`HBAR`.

Hamiltonians can be written in two number bases:

``"fock"``
    eigenstates of ``a^dag a``;
``"squeezed"``
    eigenstates of ``b^dag b`` with ``b = S a S^dag``, i.e. the squeezed Fock
    states ``|n>_S``. The original mode is ``a = cosh r b - e^{i theta} sinh r b^dag``
    there. Polynomials in ``a`` are evaluated on a few padding levels and then
    sliced, so every retained matrix element is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

import numpy as np
from scipy import constants

from . import fock
from .errors import UnstableDrive

HBAR = constants.hbar
K_B = constants.k
_PAD = 4


@dataclass(frozen=True)
class ModelParams:
    omega_a: float
    kerr: float
    gamma0: float = 0.0
    omega_p: float = 0.0
    drive_amp: float = 0.0
    theta: float = math.pi
    mass: float | None = None
    dim: int = 64

    def __post_init__(self):
        if not self.omega_a > 0:
            raise ValueError("omega_a must be positive")
        if self.gamma0 < 0:
            raise ValueError("gamma0 must be non-negative")
        if int(self.dim) != self.dim or self.dim < 2:
            raise ValueError("dim must be an integer >= 2")
        if self.mass is not None and not self.mass > 0:
            raise ValueError("mass must be positive")

    @property
    def delta_a(self):
        return self.omega_a - self.omega_p

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]

    @classmethod
    def from_squeezing(cls, r, omega_b, kerr, gamma0=0.0, *, omega_a=None,
                       theta=math.pi, mass=None, dim=64):
        """Back-solve detuning and drive amplitude for a target ``r`` and ``omega_b``.

        ``omega_a`` defaults to ``50 * delta_a`` (a far-detuned pump frame);
        it only matters for lab-frame runs and the zero-point amplitude.
        """
        delta_a = detuning_for_omega_b(r, omega_b, kerr)
        if omega_a is None:
            omega_a = 50.0 * delta_a
        return cls(
            omega_a=omega_a,
            kerr=kerr,
            gamma0=gamma0,
            omega_p=omega_a - delta_a,
            drive_amp=delta_a * math.tanh(2.0 * r),
            theta=theta,
            mass=mass,
            dim=dim,
        )

    def with_(self, **changes):
        return replace(self, **changes)


@dataclass(frozen=True)
class EffectiveParams:
    r: float
    theta: float
    delta_a: float
    omega_b: float
    u_b: float
    alpha: float
    gamma0: float
    big_gamma: float
    n_sq: float
    m_sq: complex
    x_zpf: float | None

    @property
    def kappa(self):
        return 1.0 / math.cosh(2.0 * self.r)


def squeezing_from_drive(delta_a, drive_amp):
    """Squeezing parameter from ``tanh(2r) = Omega_p / delta_a``."""
    if delta_a == 0:
        raise UnstableDrive("zero detuning leaves no bounded squeezed frame")
    ratio = drive_amp / delta_a
    if abs(ratio) >= 1.0:
        raise UnstableDrive(
            f"|Omega_p/delta_a| = {abs(ratio):.6g} >= 1: the parametric drive is unstable"
        )
    return 0.5 * math.atanh(ratio)


def kerr_frequency_shift(r, kerr):
    c, s = math.cosh(r), math.sinh(r)
    return kerr * (8.0 * c * c * s * s + 4.0 * s ** 4)


def enhanced_kerr(r, kerr):
    return (3.0 * math.cosh(4.0 * r) + 1.0) * kerr / 4.0


def detuning_for_omega_b(r, omega_b, kerr):
    """``delta_a`` giving ``omega_b`` at squeezing ``r`` (``sqrt(delta^2 - Omega^2) = delta / cosh 2r``)."""
    bare = omega_b - kerr_frequency_shift(r, kerr)
    if bare <= 0:
        raise UnstableDrive("Kerr shift exceeds the requested omega_b")
    return bare * math.cosh(2.0 * r)


def zero_point_amplitude(mass, omega_a):
    return math.sqrt(HBAR / (2.0 * mass * omega_a))


def thermal_occupation(omega, temperature):
    return 1.0 / math.expm1(HBAR * omega / (K_B * temperature))


def effective_params(params):
    delta_a = params.delta_a
    if delta_a <= 0:
        raise UnstableDrive("the squeezed frame needs omega_a > omega_p")
    r = squeezing_from_drive(delta_a, params.drive_amp)
    theta = params.theta
    if r < 0:
        # a negative drive amplitude is the same drive with its phase advanced by pi
        r, theta = -r, theta + math.pi
    c, s = math.cosh(r), math.sinh(r)
    omega_b = math.sqrt(delta_a ** 2 - params.drive_amp ** 2) + kerr_frequency_shift(r, params.kerr)
    u_b = enhanced_kerr(r, params.kerr)
    x0 = None if params.mass is None else zero_point_amplitude(params.mass, params.omega_a)
    return EffectiveParams(
        r=r,
        theta=theta,
        delta_a=delta_a,
        omega_b=omega_b,
        u_b=u_b,
        alpha=2.0 * u_b,
        gamma0=params.gamma0,
        big_gamma=math.cosh(2.0 * r) * params.gamma0,
        n_sq=s * s,
        m_sq=np.exp(-1j * theta) * c * s,
        x_zpf=x0,
    )


def effective_at(r, omega_b, kerr, gamma0=0.0, *, theta=math.pi, x_zpf=None):
    """Effective parameters specified directly by ``r`` and ``omega_b``.

    Useful in dimensionless runs where the pump detuning is irrelevant;
    ``delta_a`` is back-solved when possible and NaN otherwise.
    """
    if r < 0:
        raise ValueError("squeezing parameter must be non-negative")
    try:
        delta_a = detuning_for_omega_b(r, omega_b, kerr)
    except UnstableDrive:
        delta_a = math.nan
    c, s = math.cosh(r), math.sinh(r)
    u_b = enhanced_kerr(r, kerr)
    return EffectiveParams(
        r=r,
        theta=theta,
        delta_a=delta_a,
        omega_b=omega_b,
        u_b=u_b,
        alpha=2.0 * u_b,
        gamma0=gamma0,
        big_gamma=math.cosh(2.0 * r) * gamma0,
        n_sq=s * s,
        m_sq=np.exp(-1j * theta) * c * s,
        x_zpf=x_zpf,
    )


@dataclass(frozen=True)
class RwaReport:
    ratios: tuple
    threshold: float = 0.05

    @property
    def passed(self):
        return tuple(x < self.threshold for x in self.ratios)

    @property
    def ok(self):
        return all(self.passed)

    @property
    def worst(self):
        return max(self.ratios)


def rwa_ratios(r, kerr, omega_b):
    """Neglected-term magnitude over rotation rate for the three dropped terms."""
    k = abs(kerr)
    s2, c2, s4 = math.sinh(2 * r), math.cosh(2 * r), math.sinh(4 * r)
    return (
        k * s2 ** 2 / 4.0 / (4.0 * omega_b),
        k * s4 / 2.0 / (2.0 * omega_b),
        k * s2 * (3.0 * c2 - 2.0) / 2.0 / (2.0 * omega_b),
    )


def rwa_report(params, threshold=0.05):
    eff = effective_params(params)
    return RwaReport(rwa_ratios(eff.r, params.kerr, eff.omega_b), threshold)


# ---------------------------------------------------------------------------
# Hamiltonians


def mode_operator(basis, dim, r=0.0, theta=0.0):
    """Matrix of the original annihilation operator ``a`` in the given basis."""
    if basis == "fock":
        return fock.annihilation(dim)
    if basis == "squeezed":
        return fock.bogoliubov_mode(fock.annihilation(dim), -r, theta)
    raise ValueError(f"unknown basis {basis!r}")


def _poly(build, basis, dim, r, theta):
    big = mode_operator(basis, dim + _PAD, r, theta)
    return build(big, big.conj().T)[:dim, :dim]


def _resolve(params, basis, dim):
    dim = params.dim if dim is None else dim
    if basis == "squeezed":
        eff = effective_params(params)
        return dim, eff.r, eff.theta
    return dim, 0.0, params.theta


def kerr_oscillator(dim, freq, kerr):
    """Diagonal ``freq n + kerr n(n-1)`` on ``dim`` levels."""
    n = np.arange(dim, dtype=float)
    return np.diag(freq * n + kerr * n * (n - 1)).astype(complex)


def drive_phase_ops(a, adag, theta):
    """Two-phonon drive quadrature ``e^{-i theta/2} a + e^{i theta/2} a^dag``."""
    return np.exp(-0.5j * theta) * a + np.exp(0.5j * theta) * adag


def hamiltonian_lab(params, t, *, basis="fock", dim=None):
    """Lab-frame Hamiltonian with the two-phonon pump at ``2 omega_p``.

    The pump quadrature carries half-angle phases so that its rotating-wave
    part is exactly :func:`hamiltonian_rot`.
    """
    dim, r, theta = _resolve(params, basis, dim)
    om, k, amp = params.omega_a, params.kerr, params.drive_amp
    pump = amp * math.cos(2.0 * params.omega_p * t)

    def build(a, ad):
        x = drive_phase_ops(a, ad, params.theta)
        return om * ad @ a + k * ad @ ad @ a @ a + pump * x @ x

    return _poly(build, basis, dim, r, theta)


def hamiltonian_rot(params, *, basis="fock", dim=None):
    """Pump-frame Hamiltonian ``delta_a n + K a^dag^2 a^2 + Omega_p/2 (e^{-i theta} a^2 + h.c.)``."""
    dim, r, theta = _resolve(params, basis, dim)
    d, k, amp, th = params.delta_a, params.kerr, params.drive_amp, params.theta

    def build(a, ad):
        sq = np.exp(-1j * th) * a @ a
        return d * ad @ a + k * ad @ ad @ a @ a + 0.5 * amp * (sq + sq.conj().T)

    return _poly(build, basis, dim, r, theta)


def lab_frame_terms(params, *, basis="fock", dim=None):
    """Pieces of the lab Hamiltonian seen from the frame rotating at ``omega_p``.

    Returns ``(h_rot, h_cos, h_fast)`` with the exact frame Hamiltonian
    ``h_rot + cos(2 omega_p t) h_cos + e^{-4 i omega_p t} h_fast + h.c.(h_fast term)``.
    """
    dim, r, theta = _resolve(params, basis, dim)
    amp, th = params.drive_amp, params.theta
    h_rot = hamiltonian_rot(params, basis=basis, dim=dim)
    h_cos = _poly(lambda a, ad: amp * (2.0 * ad @ a + np.eye(a.shape[0])), basis, dim, r, theta)
    h_fast = _poly(lambda a, ad: 0.5 * amp * np.exp(-1j * th) * a @ a, basis, dim, r, theta)
    return h_rot, h_cos, h_fast


def hamiltonian_eff(params, frame="mode-b", *, dim=None):
    """``omega_b b^dag b + U_b b^dag^2 b^2``.

    ``frame="mode-b"`` gives the diagonal matrix in the squeezed number basis;
    ``frame="mode-a"`` conjugates it by ``S`` into the original Fock basis,
    where its eigenvectors are the squeezed Fock states.
    """
    eff = effective_params(params)
    dim = params.dim if dim is None else dim
    h = kerr_oscillator(dim, eff.omega_b, eff.u_b)
    if frame == "mode-b":
        return h
    if frame == "mode-a":
        s = fock.squeeze_operator(dim, eff.r, eff.theta, guard_n=min(3, dim // 4))
        out = s @ h @ s.conj().T
        return 0.5 * (out + out.conj().T)
    raise ValueError(f"unknown frame {frame!r}")


def gap_anharmonicity(h):
    """``(E2 - E1) - (E1 - E0)`` of the three lowest eigenvalues."""
    e = np.linalg.eigvalsh(h)[:3]
    return (e[2] - e[1]) - (e[1] - e[0])
