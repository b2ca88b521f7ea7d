"""Truncated single-mode Fock space: ladder operators, squeezing, states and
phase-space quasi-probabilities.

Operators are plain ``(dim, dim)`` complex ndarrays. States are wrapped in
:class:`QuantumState`, which validates normalization on construction.

Phase-space convention: grid points are coherent amplitudes
``alpha = x + iy`` and both quasi-probabilities are normalized so that
``integral W d^2 alpha = integral Q d^2 alpha = 1``. With this choice the
vacuum has ``W(0) = 2/pi`` and ``Q(0) = 1/pi``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg
from scipy.integrate import trapezoid

from .errors import InvalidDimension, InvalidState, TruncationTooSmall

GUARD_LEVELS = 5
GUARD_TOL = 1e-8


def _check_dim(dim):
    if int(dim) != dim or dim < 2:
        raise InvalidDimension(f"Fock truncation must be an integer >= 2, got {dim!r}")
    return int(dim)


def annihilation(dim):
    """Truncated annihilation operator with ``a[n-1, n] = sqrt(n)``."""
    dim = _check_dim(dim)
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex)


def creation(dim):
    return annihilation(dim).conj().T


def number(dim):
    dim = _check_dim(dim)
    return np.diag(np.arange(dim, dtype=float)).astype(complex)


def fock_ket(dim, n):
    dim = _check_dim(dim)
    if not 0 <= n < dim:
        raise InvalidDimension(f"Fock index {n} outside truncation {dim}")
    v = np.zeros(dim, dtype=complex)
    v[n] = 1.0
    return v


def bogoliubov_mode(a, r, theta=0.0):
    """``b = cosh(r) a + e^{i theta} sinh(r) a^dag`` built from a given ``a``.

    Passing the annihilation matrix of the squeezed number basis together with
    ``-r`` gives the original mode expressed in that basis.
    """
    return math.cosh(r) * a + np.exp(1j * theta) * math.sinh(r) * a.conj().T


def squeeze_generator(dim, r, theta=0.0):
    """Anti-Hermitian ``(xi^* a^2 - xi a^dag^2)/2`` with ``xi = r e^{i theta}``."""
    a = annihilation(dim)
    xi = r * np.exp(1j * theta)
    return 0.5 * (np.conj(xi) * (a @ a) - xi * (a.conj().T @ a.conj().T))


def heuristic_dim(r):
    return max(64, math.ceil(20.0 * math.exp(2.0 * abs(r))))


def tail_population(vec, levels=GUARD_LEVELS):
    vec = np.asarray(vec)
    return float(np.sum(np.abs(vec[-levels:]) ** 2))


@lru_cache(maxsize=32)
def _squeeze_cached(dim, r, theta, method):
    gen = squeeze_generator(dim, r, theta)
    if method == "eigh":
        # gen = -i H with H Hermitian, so exp(gen) = V exp(-i w) V^dag exactly unitary
        w, v = np.linalg.eigh(1j * gen)
        out = (v * np.exp(-1j * w)) @ v.conj().T
    elif method == "pade":
        out = scipy.linalg.expm(gen)
    else:
        raise ValueError(f"unknown matrix exponential method {method!r}")
    out.setflags(write=False)
    return out


def squeeze_operator(dim, r, theta=0.0, *, guard_n=0, method="eigh", guard_tol=GUARD_TOL):
    """Squeezing operator ``S = exp[(xi^* a^2 - xi a^dag^2)/2]`` on ``dim`` levels.

    ``S a S^dag = cosh(r) a + e^{i theta} sinh(r) a^dag`` holds on the low-lying
    states. The tail guard checks that ``S|guard_n>`` keeps less than
    ``guard_tol`` population in the top levels and raises
    :class:`TruncationTooSmall` with a sufficient dimension otherwise.
    """
    dim = _check_dim(dim)
    if r < 0:
        raise ValueError("squeezing parameter must be non-negative")
    if r == 0:
        return np.eye(dim, dtype=complex)
    s = _squeeze_cached(dim, float(r), float(theta), method)
    if guard_n is not None:
        tail = tail_population(s[:, guard_n])
        if tail >= guard_tol:
            need = required_dim(r, guard_n, theta, guard_tol=guard_tol, start=dim + 1)
            raise TruncationTooSmall(
                f"dim={dim} leaves {tail:.2e} of S|{guard_n}> in the top "
                f"{GUARD_LEVELS} levels; use dim >= {need}",
                required_dim=need,
            )
    return np.array(s)


def required_dim(r, n_max=0, theta=0.0, *, guard_tol=GUARD_TOL, start=None, limit=4096):
    """Smallest dimension on a growing ladder that passes the tail guard for ``S|n_max>``."""
    dim = max(start or heuristic_dim(r), 4 * (n_max + 1))
    while dim <= limit:
        if r == 0:
            return dim
        s = _squeeze_cached(dim, float(r), float(theta), "eigh")
        if tail_population(s[:, n_max]) < guard_tol:
            return dim
        dim = int(math.ceil(dim * 1.25))
    raise TruncationTooSmall(f"no truncation up to {limit} holds S|{n_max}> at r={r}")


# ---------------------------------------------------------------------------
# States


@dataclass(frozen=True)
class QuantumState:
    """A normalized ket or a Hermitian, unit-trace density matrix."""

    kind: str
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=complex)
        object.__setattr__(self, "data", data)
        if self.kind == "ket":
            if data.ndim != 1 or data.size < 2:
                raise InvalidState("ket must be a 1-D array with at least 2 amplitudes")
            norm = np.linalg.norm(data)
            if abs(norm - 1.0) > 1e-10:
                raise InvalidState(f"ket norm {norm!r} differs from 1")
        elif self.kind == "density":
            if data.ndim != 2 or data.shape[0] != data.shape[1] or data.shape[0] < 2:
                raise InvalidState("density matrix must be square with dim >= 2")
            if np.max(np.abs(data - data.conj().T)) > 1e-10:
                raise InvalidState("density matrix is not Hermitian")
            tr = np.trace(data)
            if abs(tr - 1.0) > 1e-10:
                raise InvalidState(f"density matrix trace {tr!r} differs from 1")
            lam = np.linalg.eigvalsh(0.5 * (data + data.conj().T))[0]
            if lam < -1e-8:
                raise InvalidState(f"density matrix has eigenvalue {lam:.3e}")
        else:
            raise InvalidState(f"unknown state kind {self.kind!r}")

    @classmethod
    def ket(cls, vec, normalize=False):
        vec = np.asarray(vec, dtype=complex)
        if normalize:
            vec = vec / np.linalg.norm(vec)
        return cls("ket", vec)

    @classmethod
    def density(cls, rho):
        return cls("density", rho)

    @classmethod
    def fock(cls, dim, n):
        return cls("ket", fock_ket(dim, n))

    @property
    def dim(self):
        return self.data.shape[0]

    def dm(self):
        if self.kind == "ket":
            return np.outer(self.data, self.data.conj())
        return self.data

    def expect(self, op):
        if self.kind == "ket":
            return complex(self.data.conj() @ op @ self.data)
        return complex(np.trace(op @ self.data))

    def populations(self):
        if self.kind == "ket":
            return np.abs(self.data) ** 2
        return np.real(np.diag(self.data)).copy()

    def overlap(self, ket):
        """``<psi|rho|psi>`` against a pure reference state."""
        ket = ket.data if isinstance(ket, QuantumState) else np.asarray(ket)
        if self.kind == "ket":
            return float(abs(np.vdot(ket, self.data)) ** 2)
        return float(np.real(ket.conj() @ self.data @ ket))

    def embed(self, dim):
        """Zero-pad into a larger truncation."""
        if dim < self.dim:
            raise InvalidDimension("embed target smaller than current dimension")
        if self.kind == "ket":
            out = np.zeros(dim, dtype=complex)
            out[: self.dim] = self.data
        else:
            out = np.zeros((dim, dim), dtype=complex)
            out[: self.dim, : self.dim] = self.data
        return QuantumState(self.kind, out)

    def trimmed(self, tol=1e-14):
        """Drop trailing levels whose total population is below ``tol``.

        The kept block is renormalized, so the state stays valid.
        """
        pops = self.populations()
        tail = np.cumsum(pops[::-1])[::-1]
        keep = max(2, int(np.searchsorted(-tail, -tol, side="right")))
        keep = min(keep, self.dim)
        if keep == self.dim:
            return self
        if self.kind == "ket":
            return QuantumState.ket(self.data[:keep], normalize=True)
        block = self.data[:keep, :keep]
        return QuantumState.density(block / np.trace(block))


def squeezed_fock(dim, n, r, theta=0.0):
    """``|n>_S = S|n>``, normalized, in the original Fock basis."""
    dim = _check_dim(dim)
    if not 0 <= n < dim / 4:
        raise InvalidDimension(f"squeezed Fock index {n} needs n < dim/4 (dim={dim})")
    s = squeeze_operator(dim, r, theta, guard_n=n)
    return QuantumState.ket(s[:, n], normalize=True)


def to_fock_basis(state, r, theta=0.0, dim=None):
    """Map a state written in the squeezed number basis ``{|n>_S}`` to the
    original Fock basis, ``rho -> S rho S^dag``."""
    n_top = state.dim - 1
    if dim is None:
        dim = required_dim(r, min(n_top, 3), theta)
    big = state.embed(max(dim, state.dim))
    s = squeeze_operator(big.dim, r, theta, guard_n=None)
    if big.kind == "ket":
        return QuantumState.ket(s @ big.data, normalize=True)
    rho = s @ big.data @ s.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return QuantumState.density(rho / np.trace(rho))


# ---------------------------------------------------------------------------
# Phase space


@dataclass(frozen=True)
class PhaseSpaceGrid:
    re_min: float
    re_max: float
    im_min: float
    im_max: float
    n_re: int
    n_im: int

    def __post_init__(self):
        if not (self.re_min < self.re_max and self.im_min < self.im_max):
            raise ValueError("phase-space bounds must be ordered")
        if self.n_re < 2 or self.n_im < 2:
            raise ValueError("phase-space grid needs at least 2 points per axis")

    @classmethod
    def square(cls, half_width, n):
        return cls(-half_width, half_width, -half_width, half_width, n, n)

    @property
    def re(self):
        return np.linspace(self.re_min, self.re_max, self.n_re)

    @property
    def im(self):
        return np.linspace(self.im_min, self.im_max, self.n_im)

    @property
    def points(self):
        """Complex amplitudes, shape ``(n_im, n_re)``."""
        x, y = np.meshgrid(self.re, self.im)
        return x + 1j * y

    @property
    def cell_area(self):
        return (
            (self.re_max - self.re_min) / (self.n_re - 1)
            * (self.im_max - self.im_min) / (self.n_im - 1)
        )

    def integrate(self, field):
        """Trapezoidal integral of a field sampled on this grid."""
        return float(trapezoid(trapezoid(field, self.re, axis=1), self.im))


def wigner(state, grid):
    """Wigner function from Fock matrix elements.

    Evaluates ``sum_mn rho_mn W_mn(alpha)`` with the generalized-Laguerre
    closed form for ``W_mn``; see :func:`wigner_at` for the summation scheme.
    """
    return wigner_at(state, grid.points)


def _laguerre_clenshaw(coef, k, x):
    """``sum_m coef[m] l_m^k(x)`` for normalized Laguerre functions.

    ``l_m^k = sqrt(m! k!/(m+k)!) L_m^k`` has ``l_0 = 1`` and the recurrence
    ``l_{m+1} = a_m l_m + b_m l_{m-1}``; Clenshaw's backward sum over it stays
    accurate where forward recurrences in ``m`` lose all digits.
    """
    size = len(coef)

    def a(m):
        return (2 * m + k + 1 - x) / math.sqrt((m + 1) * (m + k + 1))

    def b(m):
        return -math.sqrt(m * (m + k) / ((m + 1) * (m + k + 1)))

    y1 = np.zeros_like(x, dtype=complex)
    y2 = np.zeros_like(x, dtype=complex)
    for m in range(size - 1, 0, -1):
        y1, y2 = coef[m] + a(m) * y1 + b(m + 1) * y2, y1
    return coef[0] + a(0) * y1 + b(1) * y2


def wigner_at(state, alpha):
    """:func:`wigner` at arbitrary complex amplitudes (any array shape).

    For each diagonal ``n = m + k`` the sum over ``m`` is a Clenshaw sum of
    normalized Laguerre functions of ``4|alpha|^2``; the diagonals are then
    combined by Horner's rule in ``2 alpha / sqrt(k)`` so that neither
    ``(2 alpha)^k`` nor ``k!`` is formed on its own.
    """
    rho = state.dm()
    dim = rho.shape[0]
    alpha = np.asarray(alpha, dtype=complex)
    x = 4.0 * np.abs(alpha) ** 2
    two_a = 2.0 * alpha
    signs = (-1.0) ** np.arange(dim)
    total = np.zeros_like(alpha)
    for k in range(dim - 1, -1, -1):
        coef = signs[: dim - k] * np.diagonal(rho, k)
        weight = 1.0 if k == 0 else 2.0
        total = weight * _laguerre_clenshaw(coef, k, x) + (total * two_a / math.sqrt(k + 1))
    return (2.0 / np.pi) * np.exp(-0.5 * x) * np.real(total)


def wigner_squeezed(state, grid, r, theta=0.0):
    """Wigner function of ``S rho S^dag`` for ``rho`` given in the squeezed basis.

    Squeezing acts on phase space as a linear symplectic map, so the field is
    the squeezed-basis Wigner function evaluated at
    ``alpha cosh r + e^{i theta} alpha^* sinh r``; no large truncation is needed.
    """
    alpha = grid.points
    mapped = math.cosh(r) * alpha + np.exp(1j * theta) * math.sinh(r) * alpha.conj()
    return wigner_at(state, mapped)


def coherent_amplitudes(alpha, dim):
    """Rows of coherent-state amplitudes ``<n|alpha>`` for ``n < dim``.

    Built from the ratio recurrence ``c_n = c_{n-1} alpha / sqrt(n)`` starting
    at ``exp(-|alpha|^2/2)``, so no factorial or power is formed explicitly.
    The rows are exact projections, not renormalized: a truncated state has
    no support beyond ``dim`` and ``<alpha|rho|alpha>`` needs only these terms.
    """
    alpha = np.ravel(np.asarray(alpha, dtype=complex))
    amps = np.empty((alpha.size, dim), dtype=complex)
    amps[:, 0] = np.exp(-0.5 * np.abs(alpha) ** 2)
    for n in range(1, dim):
        amps[:, n] = amps[:, n - 1] * alpha / math.sqrt(n)
    return amps


def qfunc(state, grid):
    """Husimi function ``Q(alpha) = <alpha|rho|alpha>/pi``."""
    rho = state.dm()
    alpha = grid.points
    amps = coherent_amplitudes(alpha, rho.shape[0])
    vals = np.real(np.einsum("pi,ij,pj->p", amps.conj(), rho, amps)) / np.pi
    return vals.reshape(alpha.shape)
