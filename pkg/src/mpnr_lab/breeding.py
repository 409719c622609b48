"""Cat-state breeding by (generalized) photon subtraction with click heralding."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import gammaln

from .detector import AnyDetector, ClickMatrix, DetectorSpec, IdealPNR, click_matrix
from .errors import DegenerateConditionError, InvalidSpecError, OracleDomainError
from .fock import (
    GENERALIZED,
    SUBTRACTION,
    FockVector,
    SqueezeLike,
    SqueezeParam,
    TwoModeState,
    _as_r,
    cat_state,
    fidelity,
    fidelity_phase_optimized,
    split_squeezed_pair,
    squeeze_operator_apply,
)

BREEDING_DIM = 32
# a 7 dB squeezed vacuum keeps ~1e-6 of its weight above 31 photons
BREEDING_TAIL_TOL = 1e-4
P_SUCC_FLOOR = 1e-300


@dataclass(frozen=True)
class BreedingConfig:
    r: SqueezeLike
    eta: float
    k: int
    spec: AnyDetector = IdealPNR()
    scheme: str = SUBTRACTION
    dim: int = BREEDING_DIM
    count_rate_hz: Optional[float] = None
    tail_tol: float = BREEDING_TAIL_TOL

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise InvalidSpecError(f"eta must lie in [0, 1], got {self.eta}")
        if self.k < 0:
            raise InvalidSpecError("click condition k must be non-negative")
        if isinstance(self.spec, DetectorSpec) and self.k > self.spec.n:
            raise InvalidSpecError(f"k={self.k} exceeds the {self.spec.n} detectors")
        if self.scheme not in (SUBTRACTION, GENERALIZED):
            raise InvalidSpecError(f"unknown scheme {self.scheme!r}")

    @property
    def r_value(self) -> float:
        return abs(_as_r(self.r))


@dataclass(frozen=True)
class BreedingResult:
    rho: np.ndarray
    p_succ: float
    fidelity: float
    fidelity_phase_opt: float
    config: BreedingConfig
    rate_hz: Optional[float] = None
    theta_opt: float = field(default=0.0, compare=False)


def condition_on_clicks(psi: TwoModeState, cm: ClickMatrix, k: int):
    """Herald on k clicks in the measured mode.

    Returns the normalized kept-mode density matrix
    rho ~ sum_m c[k, m] |phi_m><phi_m| with |phi_m> = (<m| x I)|psi>, and
    the success probability sum_m c[k, m] ||phi_m||^2 / ||psi||^2.
    """
    amps = psi.amplitudes
    d_meas = amps.shape[0]
    if k >= cm.n_outcomes:
        raise InvalidSpecError(f"k={k} is not an outcome of this click matrix")
    if cm.dim < d_meas:
        raise InvalidSpecError("click matrix covers fewer photon numbers than the state")
    weights = cm.c[k, :d_meas]
    rho = (amps.T * weights) @ amps.conj()
    # probabilities relative to the weight the truncated state actually holds
    p_succ = float(np.real(np.trace(rho))) / psi.norm_squared
    if p_succ < P_SUCC_FLOOR:
        raise DegenerateConditionError(f"heralding on k={k} has probability {p_succ:.3g}")
    rho = rho / np.real(np.trace(rho))
    return 0.5 * (rho + rho.conj().T), p_succ


def _split_amplitudes(r: float, eta: float, m: np.ndarray, j: np.ndarray) -> np.ndarray:
    """Closed-form two-mode amplitudes of S(r)|0> after the subtraction splitter.

    On |m>|j> (m measured, m + j even):
    (cosh r)^(-1/2) (-tanh(r)/2)^((m+j)/2) (m+j)! / ((m+j)/2)!
        * (1-eta)^(m/2) eta^(j/2) i^j / sqrt(m! j!).
    """
    m, j = np.broadcast_arrays(np.asarray(m), np.asarray(j))
    tot = m + j
    ok = tot % 2 == 0
    if r == 0:
        ok &= tot == 0
    if eta == 1.0:
        ok &= m == 0
    if eta == 0.0:
        ok &= j == 0
    amps = np.zeros(m.shape, dtype=complex)
    mm, jj, tt = m[ok], j[ok], tot[ok]
    half = tt // 2
    t = math.tanh(abs(r)) if r else 1.0
    log_mag = (
        -0.5 * math.log(math.cosh(r))
        + half * (math.log(t / 2.0) if r else 0.0)
        + gammaln(tt + 1) - gammaln(half + 1)
        + 0.5 * mm * (math.log1p(-eta) if eta < 1 else 0.0)
        + 0.5 * jj * (math.log(eta) if eta > 0 else 0.0)
        - 0.5 * (gammaln(mm + 1) + gammaln(jj + 1))
    )
    sign = (-1.0 if r > 0 else 1.0) ** half
    amps[ok] = sign * np.exp(log_mag) * (1j ** jj)
    return amps


def ideal_pnr_conditional(r: SqueezeLike, eta: float, k: int, dim: int = BREEDING_DIM):
    """Closed-form heralded state for an ideal number-resolving detector.

    Projects the measured arm of the subtraction splitter onto |k>. The
    success probability is taken relative to the weight the dim x dim
    two-mode space retains, the same convention as condition_on_clicks.
    Returns the normalized state and that probability.
    """
    r = _as_r(r)
    if not 0.0 <= eta <= 1.0:
        raise InvalidSpecError("eta must lie in [0, 1]")
    if not 0 <= k < dim:
        raise DegenerateConditionError(f"k={k} lies outside the {dim}-level space")
    grid = _split_amplitudes(r, eta, np.arange(dim)[:, None], np.arange(dim)[None, :])
    amps = grid[k]
    weight = float(np.sum(np.abs(amps) ** 2))
    p_succ = weight / float(np.sum(np.abs(grid) ** 2))
    if p_succ < P_SUCC_FLOOR:
        raise DegenerateConditionError(f"heralding on k={k} has probability {p_succ:.3g}")
    return FockVector(amps / math.sqrt(weight)), p_succ


def target_cat(k: int, dim: int, tail_tol: float = BREEDING_TAIL_TOL) -> FockVector:
    """|cat>_{sqrt k} with parity (-1)^k."""
    if k == 0:
        return FockVector.fock(0, dim)
    return cat_state(math.sqrt(k), "+" if k % 2 == 0 else "-", dim, tail_tol)


def breeding_target(config: BreedingConfig) -> FockVector:
    """Target in the frame of the heralded state (before any anti-squeezing)."""
    cat = target_cat(config.k, config.dim, config.tail_tol)
    if config.scheme == GENERALIZED:
        # <cat|S(-r) rho S(r)|cat> = <S(r)cat|rho|S(r)cat>
        return squeeze_operator_apply(cat, config.r_value, tail_tol=config.tail_tol)
    return cat


def two_mode_state(config: BreedingConfig) -> TwoModeState:
    r = config.r_value
    if config.scheme == GENERALIZED:
        return split_squeezed_pair(r, -r, config.eta, GENERALIZED, config.dim, config.tail_tol)
    return split_squeezed_pair(r, None, config.eta, SUBTRACTION, config.dim, config.tail_tol)


def breed(config: BreedingConfig, target: Optional[FockVector] = None) -> BreedingResult:
    """Herald a cat state and score it.

    For the generalized scheme the kept mode would be anti-squeezed with
    S(-r); the fidelity is evaluated against S(r)|cat> instead.
    """
    psi = two_mode_state(config)
    cm = click_matrix(config.spec, config.dim)
    rho, p_succ = condition_on_clicks(psi, cm, config.k)
    if target is None:
        target = breeding_target(config)
    f_raw = fidelity(target, rho)
    f_opt, theta = fidelity_phase_optimized(target, rho)
    rate = None if config.count_rate_hz is None else config.count_rate_hz * p_succ
    return BreedingResult(rho, p_succ, f_raw, max(f_opt, f_raw), config, rate, theta)


def gps_ideal_k2_oracle(r: SqueezeLike, eta: float, dim: int = 16) -> FockVector:
    """Closed form of S(r) applied to the ideal two-click generalized-subtraction output.

    Coefficients on |2j>:
    [4 eta (1-eta) j / (1-2eta) - (1-2eta)/2] (tanh(r)(1-2eta))^j sqrt((2j)!)/(2^j j!),
    normalized. Undefined at eta = 1/2.
    """
    r = abs(_as_r(r))
    if abs(1.0 - 2.0 * eta) < 1e-12:
        raise OracleDomainError("the closed form is singular at eta = 1/2")
    if not 0.0 <= eta <= 1.0:
        raise OracleDomainError("eta must lie in [0, 1]")
    x = math.tanh(r) * (1.0 - 2.0 * eta)
    j = np.arange((dim + 1) // 2)
    bracket = 4.0 * eta * (1.0 - eta) * j / (1.0 - 2.0 * eta) - 0.5 * (1.0 - 2.0 * eta)
    with np.errstate(divide="ignore"):
        log_mag = j * math.log(abs(x)) if x != 0 else np.where(j == 0, 0.0, -np.inf)
    log_mag = log_mag + 0.5 * gammaln(2 * j + 1) - j * math.log(2.0) - gammaln(j + 1)
    sign = np.sign(x) ** j if x != 0 else np.ones_like(j, dtype=float)
    amps = np.zeros(dim, dtype=complex)
    amps[2 * j] = bracket * sign * np.exp(log_mag)
    norm = np.linalg.norm(amps)
    if norm == 0:
        raise OracleDomainError("closed form vanishes identically")
    return FockVector(amps / norm)


# -- eta scans ----------------------------------------------------------------

@dataclass(frozen=True)
class ScanPoint:
    eta: float
    fidelity: float
    fidelity_phase_opt: float
    p_succ: float
    rate_hz: Optional[float] = None


@dataclass(frozen=True)
class EtaScan:
    points: tuple
    frontier: tuple


def default_eta_grid(lo: float = 0.0, hi: float = 1.0, step: float = 0.005) -> np.ndarray:
    count = int(round((hi - lo) / step))
    return np.round(lo + step * np.arange(count + 1), 12)


def _scan_point(template: BreedingConfig, eta: float, target: FockVector) -> Optional[ScanPoint]:
    try:
        res = breed(replace(template, eta=float(eta)), target)
    except DegenerateConditionError:
        return None
    return ScanPoint(float(eta), res.fidelity, res.fidelity_phase_opt, res.p_succ, res.rate_hz)


def pareto_frontier(points: Sequence[ScanPoint], use_phase_opt: bool = True) -> tuple:
    """Upper envelope: points not beaten in both fidelity and success probability.

    Sorted by decreasing fidelity; among equal fidelities the larger eta wins.
    """
    key_f = (lambda p: p.fidelity_phase_opt) if use_phase_opt else (lambda p: p.fidelity)
    ordered = sorted(points, key=lambda p: (-key_f(p), -p.p_succ, -p.eta))
    frontier = []
    best_p = -1.0
    for p in ordered:
        if p.p_succ > best_p:
            frontier.append(p)
            best_p = p.p_succ
    return tuple(frontier)


def eta_scan(
    template: BreedingConfig,
    eta_grid: Optional[Sequence[float]] = None,
    fidelity_floor: Optional[float] = None,
    map_fn=map,
) -> EtaScan:
    """Breed at every eta of the grid and extract the fidelity/probability frontier.

    ``map_fn`` may be an order-preserving parallel map.
    """
    grid = default_eta_grid() if eta_grid is None else np.asarray(eta_grid, dtype=float)
    if np.any((grid < 0) | (grid > 1)):
        raise InvalidSpecError("eta grid must lie within [0, 1]")
    target = breeding_target(template)
    results = list(map_fn(_scan_point, [template] * len(grid), list(grid), [target] * len(grid)))
    points = tuple(p for p in results if p is not None)
    candidates = points
    if fidelity_floor is not None:
        candidates = tuple(p for p in points if p.fidelity_phase_opt >= fidelity_floor)
    return EtaScan(points, pareto_frontier(candidates))


def max_probability_at(frontier: Sequence[ScanPoint], fidelity_level: float) -> float:
    """Largest success probability on the frontier reaching ``fidelity_level``."""
    ok = [p.p_succ for p in frontier if p.fidelity_phase_opt >= fidelity_level]
    return max(ok) if ok else 0.0


def optimize_eta(
    template: BreedingConfig,
    eta_grid: Optional[Sequence[float]] = None,
    xtol: float = 1e-4,
) -> BreedingResult:
    """Maximize the (phase-optimized) fidelity over eta: grid, then bounded refinement."""
    grid = default_eta_grid(step=0.01) if eta_grid is None else np.asarray(eta_grid, dtype=float)
    target = breeding_target(template)
    scored = [p for p in (_scan_point(template, e, target) for e in grid) if p is not None]
    if not scored:
        raise DegenerateConditionError("no eta on the grid heralds the requested outcome")
    best = max(scored, key=lambda p: (p.fidelity_phase_opt, p.eta))
    step = float(np.max(np.diff(grid))) if len(grid) > 1 else 0.01
    lo, hi = max(0.0, best.eta - step), min(1.0, best.eta + step)

    def neg_f(eta):
        p = _scan_point(template, eta, target)
        return 1.0 if p is None else -p.fidelity_phase_opt

    res = minimize_scalar(neg_f, bounds=(lo, hi), method="bounded", options={"xatol": xtol})
    eta = float(res.x) if -res.fun >= best.fidelity_phase_opt else best.eta
    return breed(replace(template, eta=eta), target)
