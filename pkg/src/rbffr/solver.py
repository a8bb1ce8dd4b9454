"""Periodic 1D flux reconstruction for advection-diffusion and viscous Burgers.

The state is an (N, n) array of nodal values, one row per element. Every
right-hand side follows the same pipeline:

1. project the solution to the flux points, ``uF = u P^T``;
2. common interface value = arithmetic mean of the two sides;
3. corrected gradient ``D u + C (u^c - uF)``, scaled by 2/h;
4. nodal flux ``f(u) - mu du/dx``;
5. common flux: upwinded advective part, averaged diffusive part (BR2-style);
6. divergence ``D f + C (F^c - fF)``; ``du/dt = -(2/h) div``.

``C`` already carries the normal signs (``C = M^-1 P^T B`` for DG), so the
jumps in steps 3 and 6 are plain right-minus-own differences of values.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .element import BasisSpec, ElementOperators, build_operators

log = logging.getLogger(__name__)


class BlowUpError(RuntimeError):
    def __init__(self, step: int, t: float):
        self.step = step
        self.t = t
        super().__init__(f"solution blew up (non-finite values) at step {step}, t = {t:.6g}")


@dataclass(frozen=True)
class Mesh1D:
    x_min: float
    x_max: float
    N: int

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("mesh needs at least one element")
        if not self.x_max > self.x_min:
            raise ValueError("x_max must exceed x_min")

    @property
    def h(self) -> float:
        return (self.x_max - self.x_min) / self.N

    @property
    def jacobian(self) -> float:
        return 0.5 * self.h

    @property
    def length(self) -> float:
        return self.x_max - self.x_min

    def left_edges(self) -> np.ndarray:
        return self.x_min + self.h * np.arange(self.N)

    def physical(self, xref) -> np.ndarray:
        """Physical coordinates (N, len(xref)) of reference points in every element."""
        xref = np.asarray(xref, dtype=float)
        return self.left_edges()[:, None] + 0.5 * self.h * (xref[None, :] + 1.0)


@dataclass(frozen=True)
class PdeParams:
    """``alpha`` weights the upwind state in the advective common flux:
    1 is full upwinding, 0.5 is central.

    ``project_flux`` replaces the nodal Burgers flux ``u_i^2/2`` by the L2
    projection of ``u_h^2/2`` onto the element space (over-integration).
    It has no effect on linear problems.
    """

    kind: str = "advection_diffusion"
    a: float = 1.0
    mu: float = 0.0
    alpha: float = 1.0
    project_flux: bool = False

    def __post_init__(self):
        if self.kind not in ("advection_diffusion", "burgers"):
            raise ValueError(f"unknown PDE kind {self.kind!r}")
        if self.mu < 0:
            raise ValueError("diffusion coefficient must be non-negative")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("upwinding parameter must lie in [0, 1]")


@dataclass(frozen=True)
class SolutionState:
    mesh: Mesh1D
    ops: ElementOperators
    u: np.ndarray
    t: float = 0.0

    @property
    def x(self) -> np.ndarray:
        return self.mesh.physical(self.ops.x)

    def with_u(self, u: np.ndarray, t: float | None = None) -> "SolutionState":
        return replace(self, u=u, t=self.t if t is None else t)

    def dump_csv(self) -> str:
        from .io import csv_text

        x = self.x
        rows = [(j, i, x[j, i], self.u[j, i]) for j in range(self.mesh.N) for i in range(self.ops.n)]
        return csv_text(("element", "node", "x", "u"), rows)


# -- right-hand sides -----------------------------------------------------


def _neighbours(F: np.ndarray):
    """Left-neighbour right value and right-neighbour left value for each element."""
    return np.roll(F[:, 1], 1), np.roll(F[:, 0], -1)


def _corrected_gradient(u: np.ndarray, ops: ElementOperators, h: float) -> np.ndarray:
    uF = u @ ops.P.T
    left_nb, right_nb = _neighbours(uF)
    jumps = np.column_stack([0.5 * (left_nb + uF[:, 0]), 0.5 * (uF[:, 1] + right_nb)]) - uF
    return (2.0 / h) * (u @ ops.D.T + jumps @ ops.C.T)


def _divergence(f: np.ndarray, Fc: np.ndarray, ops: ElementOperators, h: float) -> np.ndarray:
    """``(2/h)(D f + C (F^c - f_F))`` with ``Fc`` of shape (N, 2) per element."""
    fF = f @ ops.P.T
    return (2.0 / h) * (f @ ops.D.T + (Fc - fF) @ ops.C.T)


def _interface_to_elements(F_iface: np.ndarray) -> np.ndarray:
    """Interface array (interface i sits at the left edge of element i) -> (N, 2)."""
    return np.column_stack([F_iface, np.roll(F_iface, -1)])


def _interface_states(F: np.ndarray):
    """Left/right states at every interface: interface i is between elements i-1 and i."""
    return np.roll(F[:, 1], 1), F[:, 0]


def _diffusive_common(grad: np.ndarray, ops: ElementOperators, mu: float) -> np.ndarray:
    if mu == 0.0:
        return np.zeros(grad.shape[0])
    gF = grad @ ops.P.T
    gl, gr = _interface_states(gF)
    return -mu * 0.5 * (gl + gr)


def rhs_advection_diffusion(state: SolutionState, params: PdeParams, u: np.ndarray | None = None) -> np.ndarray:
    ops, h = state.ops, state.mesh.h
    u = state.u if u is None else u
    a, mu, alpha = params.a, params.mu, params.alpha

    f = a * u
    grad = None
    if mu != 0.0:
        grad = _corrected_gradient(u, ops, h)
        f = f - mu * grad

    uF = u @ ops.P.T
    ul, ur = _interface_states(uF)
    upwind, downwind = (ul, ur) if a >= 0 else (ur, ul)
    Fc = a * (alpha * upwind + (1.0 - alpha) * downwind)
    if mu != 0.0:
        Fc = Fc + _diffusive_common(grad, ops, mu)
    return -_divergence(f, _interface_to_elements(Fc), ops, h)


def roe_flux(ul: np.ndarray, ur: np.ndarray, alpha: float = 1.0) -> np.ndarray:
    """Roe flux for f = u^2/2.

    ``alpha`` is the weight on the upwind state, as for linear advection:
    1 gives the full Roe flux, 0.5 the central flux.
    """
    abar = 0.5 * (ul + ur)
    return 0.25 * (ul * ul + ur * ur) - (2.0 * alpha - 1.0) * 0.5 * np.abs(abar) * (ur - ul)


def rhs_burgers(state: SolutionState, params: PdeParams, u: np.ndarray | None = None) -> np.ndarray:
    ops, h = state.ops, state.mesh.h
    u = state.u if u is None else u
    mu = params.mu

    if params.project_flux:
        Vq, Pi = ops.projector
        uq = u @ Vq.T
        f = (0.5 * uq * uq) @ Pi.T
    else:
        f = 0.5 * u * u
    grad = None
    if mu != 0.0:
        grad = _corrected_gradient(u, ops, h)
        f = f - mu * grad

    uF = u @ ops.P.T
    ul, ur = _interface_states(uF)
    Fc = roe_flux(ul, ur, params.alpha)
    if mu != 0.0:
        Fc = Fc + _diffusive_common(grad, ops, mu)
    return -_divergence(f, _interface_to_elements(Fc), ops, h)


def rhs_for(params: PdeParams) -> Callable:
    return rhs_burgers if params.kind == "burgers" else rhs_advection_diffusion


# -- time integration -----------------------------------------------------


def rk4_step(state: SolutionState, rhs_fn: Callable[[SolutionState, np.ndarray], np.ndarray], dt: float) -> SolutionState:
    """One classical RK4 step; ``rhs_fn(state, u)`` returns du/dt."""
    if not dt > 0:
        raise ValueError("time step must be positive")
    u = state.u
    k1 = rhs_fn(state, u)
    k2 = rhs_fn(state, u + 0.5 * dt * k1)
    k3 = rhs_fn(state, u + 0.5 * dt * k2)
    k4 = rhs_fn(state, u + dt * k3)
    return state.with_u(u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4), state.t + dt)


@dataclass(frozen=True)
class TimeStepRule:
    """dt = cfl h / (lambda (2n+1)), capped by cfl_d h^2 / (mu (2n+1)^2) when mu > 0."""

    cfl: float = 0.4
    cfl_diffusive: float = 0.4
    scale: float = 1.0

    def dt(self, mesh: Mesh1D, n: int, params: PdeParams, u: np.ndarray) -> float:
        p = 2 * n + 1
        lam = abs(params.a) if params.kind == "advection_diffusion" else 0.0
        lam = max(lam, float(np.abs(u).max()) if params.kind == "burgers" else lam, 1e-12)
        dt = self.cfl * mesh.h / (lam * p)
        if params.mu > 0:
            dt = min(dt, self.cfl_diffusive * mesh.h**2 / (params.mu * p * p))
        return dt * self.scale

    def halved(self) -> "TimeStepRule":
        return replace(self, scale=0.5 * self.scale)


def integrate(
    state: SolutionState, params: PdeParams, t_end: float, rule: TimeStepRule = TimeStepRule()
) -> tuple[SolutionState, float, int]:
    """Advance to ``t_end`` with a fixed step and a final partial step.

    The step is chosen once from the initial state. Returns the final state,
    the nominal step and the number of steps taken.
    """
    rhs = rhs_for(params)
    fn = lambda s, u: rhs(s, params, u)  # noqa: E731
    if t_end <= state.t:
        return state, 0.0, 0
    dt = rule.dt(state.mesh, state.ops.n, params, state.u)
    nsteps = math.ceil((t_end - state.t) / dt - 1e-9)
    t0 = state.t
    with np.errstate(over="ignore", invalid="ignore"):
        for step in range(nsteps):
            this_dt = min(dt, t_end - state.t) if step == nsteps - 1 else dt
            state = rk4_step(state, fn, this_dt)
            if not np.all(np.isfinite(state.u)):
                raise BlowUpError(step, state.t)
    return state.with_u(state.u, t0 + (t_end - t0)), dt, nsteps


# -- linear test cases ----------------------------------------------------


@dataclass(frozen=True)
class LinearCase:
    name: str
    x_min: float
    x_max: float
    a: float
    mu: float
    t_end: float


SINE = LinearCase("sine_adv", -math.pi, math.pi, 1.0, 0.0, 2.0 * math.pi)
BUMP = LinearCase("gaussian_adv_diff", -10.0, 10.0, 1.0, 0.1, 10.0)
CASES = {c.name: c for c in (SINE, BUMP)}


def exact_solution(case: str, x, t: float, a: float | None = None, mu: float | None = None):
    """Exact periodic solution of the two linear benchmark cases."""
    if case not in CASES:
        raise ValueError(f"unknown case {case!r}")
    c = CASES[case]
    a = c.a if a is None else a
    mu = c.mu if mu is None else mu
    L = c.x_max - c.x_min
    x = np.asarray(x, dtype=float)
    xi = np.mod(x - a * t - c.x_min, L) + c.x_min  # wrap into [x_min, x_max)
    if case == "sine_adv":
        return np.sin(xi)
    s = 1.0 + 4.0 * mu * t
    images = np.arange(-3, 4)
    return np.exp(-((xi[..., None] - images * L) ** 2) / s).sum(axis=-1) / np.sqrt(s)


def initial_state(case: str, mesh: Mesh1D, ops: ElementOperators) -> SolutionState:
    x = mesh.physical(ops.x)
    return SolutionState(mesh, ops, exact_solution(case, x, 0.0))


@dataclass(frozen=True)
class ErrorNorms:
    L1: float
    L2: float
    Linf: float


def error_norms(state: SolutionState, exact_fn: Callable, t: float | None = None) -> ErrorNorms:
    """Point-mean norms of the nodal error at the solution points."""
    t = state.t if t is None else t
    e = state.u - exact_fn(state.x, t)
    return ErrorNorms(float(np.mean(np.abs(e))), float(np.sqrt(np.mean(e * e))), float(np.abs(e).max()))


@dataclass(frozen=True)
class CaseResult:
    state: SolutionState
    norms: ErrorNorms
    dt: float
    steps: int


def run_case(
    case: str,
    spec: BasisSpec,
    N: int,
    t_end: float | None = None,
    rule: TimeStepRule = TimeStepRule(),
    alpha: float = 1.0,
    ops: ElementOperators | None = None,
) -> CaseResult:
    c = CASES[case]
    t_end = c.t_end if t_end is None else t_end
    mesh = Mesh1D(c.x_min, c.x_max, N)
    ops = build_operators(spec) if ops is None else ops
    params = PdeParams("advection_diffusion", c.a, c.mu, alpha)
    state = initial_state(case, mesh, ops)
    state, dt, steps = integrate(state, params, t_end, rule)
    norms = error_norms(state, lambda x, t: exact_solution(case, x, t), t_end)
    return CaseResult(state, norms, dt, steps)


# -- equispaced sampling --------------------------------------------------


def equispaced_reference(n: int) -> np.ndarray:
    hh = 2.0 / (2 * n)
    return -1.0 + hh * (2 * np.arange(1, n + 1) - 1)


def sample_equispaced(state: SolutionState) -> np.ndarray:
    """Interpolate through the element basis onto N*n globally uniform points."""
    V = state.ops.basis_at(equispaced_reference(state.ops.n))
    return (state.u @ V.T).ravel()


# -- Burgers turbulence ---------------------------------------------------


@dataclass(frozen=True)
class BurgersEnsembleConfig:
    rho: float = 0.1
    k_max: int = 2048
    seeds: tuple = tuple(range(20))
    t_end: float = 0.1
    mu: float = 2e-3
    alpha: float = 1.0
    project_flux: bool = True

    def __post_init__(self):
        if self.rho <= 0:
            raise ValueError("rho must be positive")
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))

    @property
    def runs(self) -> int:
        return len(self.seeds)


def initial_spectrum(k, rho: float = 0.1):
    k = np.asarray(k, dtype=float)
    return 2.0 / (3.0 * math.sqrt(math.pi) * rho) * (k * rho) ** 4 * np.exp(-((k * rho) ** 2))


def random_phases(seed: int, k_max: int) -> np.ndarray:
    """One MT19937 uniform draw per wavenumber k = 0..k_max, in order."""
    return np.random.RandomState(seed).random_sample(k_max + 1)


def burgers_initial_field(cfg: BurgersEnsembleConfig, seed: int, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    k = np.arange(cfg.k_max + 1)
    amp = np.sqrt(2.0 * initial_spectrum(k, cfg.rho))
    phase = 2.0 * np.pi * random_phases(seed, cfg.k_max)
    keep = amp > 0  # E0 underflows to exactly zero well before k_max
    flat = x.ravel()
    u = np.zeros_like(flat)
    for kk, a, p in zip(k[keep], amp[keep], phase[keep]):
        u += a * np.cos(kk * flat + p)
    return u.reshape(x.shape)


def burgers_initial_state(cfg: BurgersEnsembleConfig, seed: int, mesh: Mesh1D, ops: ElementOperators) -> SolutionState:
    if not (mesh.x_min == 0.0 and abs(mesh.x_max - 2.0 * math.pi) < 1e-14):
        raise ValueError("Burgers turbulence is defined on [0, 2 pi)")
    return SolutionState(mesh, ops, burgers_initial_field(cfg, seed, mesh.physical(ops.x)))


def burgers_run(cfg: BurgersEnsembleConfig, seed: int, mesh: Mesh1D, ops: ElementOperators, rule: TimeStepRule = TimeStepRule()):
    params = PdeParams("burgers", 0.0, cfg.mu, cfg.alpha, cfg.project_flux)
    state = burgers_initial_state(cfg, seed, mesh, ops)
    state, dt, _ = integrate(state, params, cfg.t_end, rule)
    return state, dt


def energy_spectrum(samples: Sequence[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    """Ensemble-averaged one-sided spectrum of equispaced samples on [0, 2 pi).

    ``E(f) = A_f^2 / 2`` where ``A_f`` is the cosine amplitude of mode ``f``,
    so a field ``sum_k sqrt(2 E0(k)) cos(k x + phi_k)`` has ``E(k) = E0(k)``
    and ``sum_f E(f)`` equals the mean of ``u^2``.
    """
    samples = [np.asarray(s, dtype=float) for s in samples]
    if not samples:
        raise ValueError("no samples")
    L = len(samples[0])
    if any(len(s) != L for s in samples):
        raise ValueError("all runs must have the same number of samples")
    acc = np.zeros(L // 2 + 1)
    for s in samples:  # ordered reduction keeps results independent of scheduling
        F = np.fft.rfft(s) / L
        p = np.abs(F) ** 2
        p[1 : (L + 1) // 2] *= 2.0
        acc += p
    return np.arange(L // 2 + 1), acc / len(samples)
