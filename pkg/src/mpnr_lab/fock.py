"""Single- and two-mode bosonic states in a truncated number basis.

All series are assembled in the log domain (log-factorials plus a tracked
phase) so that coefficients stay finite for cutoffs well beyond 170.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy.linalg import expm
from scipy.optimize import minimize_scalar
from scipy.special import gammaln

from .errors import (
    DegenerateInputError,
    DimensionMismatchError,
    PadInsufficientError,
    TruncationError,
)

TAIL_TOL = 1e-10
MAX_DIM = 4096


def _log_factorial(j):
    return gammaln(np.asarray(j, dtype=float) + 1.0)


@dataclass(frozen=True)
class SqueezeParam:
    """Squeezing amplitude ``r``; the sign selects the squeezed quadrature."""

    r: float

    @classmethod
    def from_db(cls, db: float, sign: int = 1) -> "SqueezeParam":
        if db < 0:
            raise ValueError("squeezing level in dB must be non-negative")
        return cls(math.copysign(db_to_r(db), sign))

    @property
    def db(self) -> float:
        return r_to_db(abs(self.r))

    def __neg__(self) -> "SqueezeParam":
        return SqueezeParam(-self.r)


def db_to_r(db: float) -> float:
    """Squeezed variance ``exp(-2r) = 10**(-db/10)``."""
    return db * math.log(10.0) / 20.0


def r_to_db(r: float) -> float:
    return 20.0 * r / math.log(10.0)


SqueezeLike = Union[SqueezeParam, float]


def _as_r(r: SqueezeLike) -> float:
    return r.r if isinstance(r, SqueezeParam) else float(r)


@dataclass(frozen=True)
class FockVector:
    """Amplitudes of a single mode on ``|0>, ..., |dim-1>``."""

    amplitudes: np.ndarray
    renormalized: bool = False

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.ndim != 1 or amps.size < 1:
            raise ValueError("amplitudes must be a non-empty 1-D array")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    @property
    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amplitudes) ** 2)))

    def padded(self, dim: int) -> "FockVector":
        if dim < self.dim:
            raise ValueError("cannot pad to a smaller dimension")
        out = np.zeros(dim, dtype=complex)
        out[: self.dim] = self.amplitudes
        return FockVector(out, self.renormalized)

    def dm(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())

    @classmethod
    def fock(cls, j: int, dim: int) -> "FockVector":
        if not 0 <= j < dim:
            raise ValueError(f"|{j}> does not fit in dimension {dim}")
        out = np.zeros(dim, dtype=complex)
        out[j] = 1.0
        return cls(out)


@dataclass(frozen=True)
class TwoModeState:
    """Joint amplitudes ``psi[m, j]``: m photons in the measured mode, j kept."""

    amplitudes: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.ndim != 2:
            raise ValueError("two-mode amplitudes must be a 2-D array")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dims(self) -> tuple[int, int]:
        return self.amplitudes.shape

    @property
    def norm_squared(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))

    def measured_distribution(self) -> np.ndarray:
        return np.sum(np.abs(self.amplitudes) ** 2, axis=1)

    def kept_distribution(self) -> np.ndarray:
        return np.sum(np.abs(self.amplitudes) ** 2, axis=0)


def _finish(log_mag, phase, tail_tol, what, normalize=True):
    """Exponentiate a log-domain series, check the tail and renormalize."""
    amps = np.exp(log_mag) * np.exp(1j * phase)
    amps[~np.isfinite(log_mag)] = 0.0
    norm2 = float(np.sum(np.abs(amps) ** 2))
    if norm2 < 1.0 - tail_tol:
        raise TruncationError(
            f"{what}: truncated norm^2 {norm2:.10g} < 1 - {tail_tol:g}; "
            f"raise the dimension above {amps.size}"
        )
    renorm = False
    if normalize and abs(norm2 - 1.0) > 1e-15:
        amps = amps / math.sqrt(norm2)
        renorm = True
    return FockVector(amps, renormalized=renorm)


def _auto_dim(tail_fn, tail_tol, start=2):
    """Smallest dim whose analytic tail mass is below ``tail_tol``."""
    dim = start
    while dim <= MAX_DIM:
        if tail_fn(dim) < tail_tol:
            return dim
        dim += 1
    raise TruncationError(f"no dimension <= {MAX_DIM} meets tail_tol={tail_tol:g}")


def _coherent_log_terms(alpha: complex, dim: int):
    j = np.arange(dim)
    a = abs(alpha)
    if a == 0:
        log_mag = np.full(dim, -np.inf)
        log_mag[0] = 0.0
        return log_mag, np.zeros(dim)
    log_mag = -0.5 * a * a + j * math.log(a) - 0.5 * _log_factorial(j)
    return log_mag, j * np.angle(alpha)


def coherent_state(
    alpha: complex, dim: Optional[int] = None, tail_tol: float = TAIL_TOL
) -> FockVector:
    """|alpha> = sum_j exp(-|alpha|^2/2) alpha^j / sqrt(j!) |j>."""
    if dim is None:
        mean = abs(alpha) ** 2

        def tail(d):
            lm, _ = _coherent_log_terms(alpha, d)
            return 1.0 - float(np.sum(np.exp(2 * lm)))

        dim = _auto_dim(tail, tail_tol, start=max(2, int(mean) + 1))
    return _finish(*_coherent_log_terms(alpha, dim), tail_tol, "coherent_state")


def _squeezed_log_terms(r: float, dim: int):
    log_mag = np.full(dim, -np.inf)
    phase = np.zeros(dim)
    if r == 0:
        log_mag[0] = 0.0
        return log_mag, phase
    t = math.tanh(abs(r))
    nn = np.arange((dim + 1) // 2)
    idx = 2 * nn
    log_mag[idx] = (
        -0.5 * math.log(math.cosh(r))
        + nn * math.log(t)
        + 0.5 * _log_factorial(idx)
        - nn * math.log(2.0)
        - _log_factorial(nn)
    )
    # (-tanh r)^n: sign flips every step for r > 0, never for r < 0
    if r > 0:
        phase[idx] = np.pi * (nn % 2)
    return log_mag, phase


def squeezed_vacuum(
    r: SqueezeLike, dim: Optional[int] = None, tail_tol: float = TAIL_TOL
) -> FockVector:
    """S(r)|0> with coefficients (cosh r)^(-1/2) (-tanh r)^n sqrt((2n)!)/(2^n n!)."""
    r = _as_r(r)
    if dim is None:
        def tail(d):
            lm, _ = _squeezed_log_terms(r, d)
            return 1.0 - float(np.sum(np.exp(2 * lm)))

        dim = _auto_dim(tail, tail_tol)
    return _finish(*_squeezed_log_terms(r, dim), tail_tol, "squeezed_vacuum")


def _cat_log_terms(alpha: complex, parity: int, dim: int):
    a = abs(alpha)
    j = np.arange(dim)
    keep = (j % 2 == 0) if parity > 0 else (j % 2 == 1)
    if parity > 0:
        log_norm = 0.5 * math.log(2.0 + 2.0 * math.exp(-2 * a * a))
    else:
        log_norm = 0.5 * math.log(-2.0 * math.expm1(-2 * a * a))
    log_mag = np.full(dim, -np.inf)
    if a == 0:
        log_mag[0] = 0.0
        return log_mag, np.zeros(dim)
    log_mag[keep] = (
        math.log(2.0) - 0.5 * a * a + j[keep] * math.log(a)
        - 0.5 * _log_factorial(j[keep]) - log_norm
    )
    return log_mag, j * np.angle(alpha)


def _parity_sign(parity) -> int:
    if parity in ("+", 1, +1, "even"):
        return 1
    if parity in ("-", -1, "odd"):
        return -1
    raise ValueError(f"parity must be '+' or '-', got {parity!r}")


def cat_state(
    alpha: complex, parity="+", dim: Optional[int] = None, tail_tol: float = TAIL_TOL
) -> FockVector:
    """Normalized (|alpha> + s|-alpha>) with s = +1 (even) or -1 (odd)."""
    s = _parity_sign(parity)
    if alpha == 0 and s < 0:
        raise DegenerateInputError("odd cat with alpha=0 is the zero vector")
    if dim is None:
        def tail(d):
            lm, _ = _cat_log_terms(alpha, s, d)
            return 1.0 - float(np.sum(np.exp(2 * lm)))

        dim = _auto_dim(tail, tail_tol)
    return _finish(*_cat_log_terms(alpha, s, dim), tail_tol, "cat_state")


# -- two-mode states --------------------------------------------------------

SUBTRACTION = "subtraction"
GENERALIZED = "generalized"


def beamsplitter_substitution(eta: float, convention: str):
    """Images of (a^dag, b^dag) as (A^dag, B^dag) coefficient pairs.

    ``A`` is the measured mode and ``B`` the kept mode.  The subtraction
    splitter maps a -> sqrt(1-eta) a - i sqrt(eta) b, the generalized one
    a -> sqrt(1-eta) a + sqrt(eta) b.
    """
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must lie in [0, 1], got {eta}")
    t, s = math.sqrt(1.0 - eta), math.sqrt(eta)
    if convention == SUBTRACTION:
        return (t, 1j * s), (1j * s, t)
    if convention == GENERALIZED:
        return (t, s), (-s, t)
    raise ValueError(f"unknown beamsplitter convention {convention!r}")


def _monomial_coeffs(r: float, u: complex, v: complex, size: int) -> np.ndarray:
    """Coefficients F[p, q] of A^dag^p B^dag^q for S(r)|0> pushed through a^dag -> uA + vB."""
    out = np.zeros((size, size), dtype=complex)
    if r == 0:
        out[0, 0] = 1.0
        return out
    t = math.tanh(abs(r))
    sign = -1.0 if r > 0 else 1.0
    p = np.arange(size)
    for half in range(size):
        total = 2 * half
        if total > 2 * size - 2:
            break
        # c_N / sqrt(N!) = (cosh r)^(-1/2) (-tanh r)^n / (2^n n!)
        log_c = (
            -0.5 * math.log(math.cosh(r)) + half * math.log(t)
            - half * math.log(2.0) - gammaln(half + 1)
        )
        c = (sign ** half) * math.exp(log_c)
        ps = p[(p <= total) & (total - p < size)]
        qs = total - ps
        log_binom = gammaln(total + 1) - gammaln(ps + 1) - gammaln(qs + 1)
        out[ps, qs] = c * np.exp(log_binom) * (u ** ps) * (v ** qs)
    return out


def _conv2_truncated(f: np.ndarray, g: np.ndarray) -> np.ndarray:
    size = f.shape[0]
    out = np.zeros_like(f)
    nz = np.argwhere(g != 0)
    for p2, q2 in nz:
        out[p2:, q2:] += g[p2, q2] * f[: size - p2, : size - q2]
    return out


def split_squeezed_pair(
    r1: SqueezeLike,
    r2: Optional[SqueezeLike],
    eta: float,
    convention: str = SUBTRACTION,
    dim: int = 32,
    tail_tol: float = TAIL_TOL,
) -> TwoModeState:
    """Beamsplitter output of S(r1)|0> (x) S(r2)|0>, as amplitudes psi[m, j].

    Each input is written as a polynomial in its creation operator, the
    operators are substituted by their beamsplitter images and the two
    polynomials are multiplied; no matrix exponentials are involved.
    ``r2=None`` means a vacuum second input.
    """
    r1 = _as_r(r1)
    r2 = 0.0 if r2 is None else _as_r(r2)
    (ua, va), (ub, vb) = beamsplitter_substitution(eta, convention)
    f = _monomial_coeffs(r1, ua, va, dim)
    g = _monomial_coeffs(r2, ub, vb, dim)
    mono = _conv2_truncated(f, g) if r2 != 0 else f
    lf = _log_factorial(np.arange(dim))
    psi = mono * np.exp(0.5 * (lf[:, None] + lf[None, :]))
    norm2 = float(np.sum(np.abs(psi) ** 2))
    if norm2 < 1.0 - tail_tol:
        raise TruncationError(
            f"split_squeezed_pair: joint norm^2 {norm2:.10g} < 1 - {tail_tol:g} at dim={dim}"
        )
    return TwoModeState(psi, meta={"r1": r1, "r2": r2, "eta": eta, "convention": convention})


# -- operators ---------------------------------------------------------------

def annihilation(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1)


def squeeze_operator_apply(
    state: FockVector,
    r: float,
    dim_pad: Optional[int] = None,
    tail_tol: float = TAIL_TOL,
) -> FockVector:
    """Apply S(r) = exp[(r/2)(a^2 - a^dag^2)] on a padded space, then crop.

    With this sign S(r)|0> reproduces :func:`squeezed_vacuum`.
    """
    r = _as_r(r)
    dim = state.dim
    if dim_pad is None:
        dim_pad = dim + max(16, dim)
    if dim_pad < dim:
        raise ValueError("dim_pad must be at least the state dimension")
    if r == 0:
        return state
    a = annihilation(dim_pad)
    gen = 0.5 * r * (a @ a - a.T @ a.T)
    out = expm(gen) @ state.padded(dim_pad).amplitudes
    kept = out[:dim]
    lost = float(np.sum(np.abs(out[dim:]) ** 2))
    in_norm2 = state.norm ** 2
    if lost > tail_tol * max(in_norm2, 1e-300):
        raise PadInsufficientError(
            f"squeeze_operator_apply: {lost:.3g} of the norm left the first {dim} levels "
            f"(tail_tol={tail_tol:g})"
        )
    return FockVector(kept, state.renormalized)


# -- observables -------------------------------------------------------------

def photon_distribution(state) -> np.ndarray:
    """Number distribution of a FockVector or a density matrix."""
    if isinstance(state, FockVector):
        return np.abs(state.amplitudes) ** 2
    rho = np.asarray(state)
    if rho.ndim == 2:
        return np.real(np.diag(rho)).copy()
    return np.asarray(rho, dtype=float)


def moment_true(state, h: int) -> float:
    """sum_m m^h p_m for a state, density matrix or number distribution."""
    if h < 1:
        raise ValueError("moment order h must be >= 1")
    p = photon_distribution(state)
    m = np.arange(p.size, dtype=float)
    return float(np.sum(m ** h * p))


def _as_dm(state) -> np.ndarray:
    if isinstance(state, FockVector):
        return state.dm()
    rho = np.asarray(state, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise DimensionMismatchError("density matrix must be square")
    return rho


def fidelity(target: FockVector, state) -> float:
    """<target|rho|target> / tr(rho)."""
    rho = _as_dm(state)
    t = target.amplitudes
    if rho.shape[0] != t.size:
        raise DimensionMismatchError(
            f"target has dimension {t.size}, state has {rho.shape[0]}"
        )
    tr = float(np.real(np.trace(rho)))
    return float(np.real(np.vdot(t, rho @ t)) / tr)


def rotated(state: FockVector, theta: float) -> FockVector:
    """Phase-space rotation exp(i theta a^dag a)."""
    j = np.arange(state.dim)
    return FockVector(state.amplitudes * np.exp(1j * theta * j), state.renormalized)


def fidelity_phase_optimized(target: FockVector, state) -> tuple[float, float]:
    """Fidelity maximized over phase-space rotations of the target.

    Returns ``(fidelity, theta)``.  A global phase on a pure target cannot
    change <t|rho|t>; the i^j factors a beamsplitter imprints are a rotation
    exp(i theta N), so that is the freedom optimized here.
    """
    rho = _as_dm(state)
    t = target.amplitudes
    if rho.shape[0] != t.size:
        raise DimensionMismatchError(
            f"target has dimension {t.size}, state has {rho.shape[0]}"
        )
    rho = rho / np.real(np.trace(rho))
    w = np.conj(t)[:, None] * rho * t[None, :]
    dim = t.size
    j = np.arange(dim)
    diff = j[None, :] - j[:, None]
    # f(theta) = Re sum_d s_d exp(i theta d)
    s = np.array([w[diff == d].sum() for d in range(-(dim - 1), dim)])
    ds = np.arange(-(dim - 1), dim)

    def f(theta):
        return float(np.real(np.sum(s * np.exp(1j * theta * ds))))

    grid = np.linspace(0.0, 2 * np.pi, 721)
    vals = np.array([f(th) for th in grid])
    i = int(np.argmax(vals))
    step = grid[1] - grid[0]
    res = minimize_scalar(
        lambda th: -f(th),
        bounds=(grid[i] - step, grid[i] + step),
        method="bounded",
        options={"xatol": 1e-10},
    )
    best, theta = (-res.fun, res.x) if -res.fun >= vals[i] else (vals[i], grid[i])
    return float(best), float(theta % (2 * np.pi))
