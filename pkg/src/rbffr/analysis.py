"""Bloch-wave analysis of the semi-discrete scheme and SBP diagnostics.

For linear advection (a = 1) on a uniform mesh, a Bloch wave
``u_{j+m} = u_j exp(i k m h)`` turns the scheme into ``du_j/dt = Q(k) u_j`` with

    Q = -(2/h) (C K_L P e^{-ikh} + D + C K_0 P + C K_R P e^{ikh})

where the K blocks pick out which neighbouring flux point feeds each
interface (rows: own flux point, columns: neighbour flux point, 0 = left,
1 = right). ``alpha`` is the weight on the upwind side of each interface.

Frequencies are reported as ``omega * h / n_s`` against ``k_hat = k h / n_s``
(h = 2 by default), so an exact scheme has ``Re = k_hat`` and ``Im = 0``.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .element import MASS_QUADRATURE, BasisSpec, ElementOperators, build_operators, node_set, quadrature
from .io import csv_text
from .linalg import eig_complex

log = logging.getLogger(__name__)

DEFECTIVE_COND = 1e12
KHAT_POINTS = 256

DISPERSION_HEADER = ("k_hat", "mode", "re_c", "im_c", "is_physical")
COMBINED_HEADER = ("k_hat", "t", "G", "dphi")
SBP_HEADER = ("eps", "n_s", "layout", "cons_err", "stab_err")
MAXDISS_HEADER = ("eps", "n_s", "diss_max")


class DefectiveModeError(np.linalg.LinAlgError):
    """The eigenvector matrix of Q is too ill conditioned to invert."""


def khat_grid(npts: int = KHAT_POINTS) -> np.ndarray:
    """``npts`` points uniform on (0, pi]."""
    if npts < 1:
        raise ValueError("k_hat grid needs at least one point")
    return np.pi * np.arange(1, npts + 1) / npts


@dataclass(frozen=True)
class FourierConfig:
    ops: ElementOperators
    alpha: float = 1.0
    h: float = 2.0
    k_hat: np.ndarray = field(default_factory=khat_grid)

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("upwinding parameter must lie in [0, 1]")
        if not self.h > 0:
            raise ValueError("element width must be positive")
        kh = np.atleast_1d(np.asarray(self.k_hat, dtype=float))
        if kh.size == 0 or np.any(kh <= 0) or not np.all(np.isfinite(kh)):
            raise ValueError("k_hat grid must be non-empty and strictly positive")
        object.__setattr__(self, "k_hat", kh)

    @property
    def n(self) -> int:
        return self.ops.n

    def k_from_khat(self, k_hat):
        return np.asarray(k_hat) * self.n / self.h

    def khat_from_k(self, k):
        return np.asarray(k) * self.h / self.n


def upwind_blocks(alpha: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Interface coupling blocks (K_L, K_0, K_R) for a right-running wave.

    At the left flux point the common value is ``alpha`` times the left
    neighbour's right value plus ``1 - alpha`` times the own left value; the
    right flux point mirrors this with the right neighbour.
    """
    K_L = np.array([[0.0, alpha], [0.0, 0.0]])
    K_0 = -np.diag([alpha, 1.0 - alpha])
    K_R = np.array([[0.0, 0.0], [1.0 - alpha, 0.0]])
    return K_L, K_0, K_R


def assemble_Q(cfg: FourierConfig, k: float) -> np.ndarray:
    """Semi-discrete Bloch operator ``Q(k)`` for unit-speed advection."""
    ops, h = cfg.ops, cfg.h
    K_L, K_0, K_R = upwind_blocks(cfg.alpha)
    C, P = ops.C, ops.P
    shift = np.exp(1j * k * h)
    Q = C @ K_L @ P / shift + (ops.D + C @ K_0 @ P) + C @ K_R @ P * shift
    return -(2.0 / h) * Q


def bloch_vector(cfg: FourierConfig, k: float) -> np.ndarray:
    return np.exp(1j * k * 0.5 * cfg.h * (cfg.ops.x + 1.0))


@dataclass(frozen=True)
class ModalResult:
    """Eigen-analysis over a k_hat grid.

    ``omega`` holds raw eigenvalues of iQ, shape (len(k_hat), n). ``c_hat``
    is the normalised frequency ``omega h / n_s`` and ``wavespeed`` the ratio
    ``omega / k``.
    """

    k_hat: np.ndarray
    omega: np.ndarray
    c_hat: np.ndarray
    wavespeed: np.ndarray
    physical: np.ndarray
    overlap: np.ndarray

    @property
    def physical_c_hat(self) -> np.ndarray:
        return self.c_hat[np.arange(len(self.k_hat)), self.physical]

    @property
    def physical_omega(self) -> np.ndarray:
        return self.omega[np.arange(len(self.k_hat)), self.physical]

    def rows(self):
        for i, kh in enumerate(self.k_hat):
            for m in range(self.c_hat.shape[1]):
                c = self.c_hat[i, m]
                yield (float(kh), m, float(c.real), float(c.imag), m == self.physical[i])

    def to_csv(self) -> str:
        return csv_text(DISPERSION_HEADER, self.rows())


def select_physical(W: np.ndarray, omega: np.ndarray, v: np.ndarray, tie_tol: float = 1e-10) -> tuple[int, float]:
    """Index of the eigenvector with the largest normalised overlap with ``v``."""
    ov = np.abs(W.conj().T @ v) / (np.linalg.norm(W, axis=0) * np.linalg.norm(v))
    best = ov.max()
    cands = np.flatnonzero(ov >= best - tie_tol)
    pick = cands[np.argmin(np.abs(omega[cands].imag))]
    return int(pick), float(ov[pick])


def _modes_at(cfg: FourierConfig, k_hat: float):
    k = float(cfg.k_from_khat(k_hat))
    eig = eig_complex(1j * assemble_Q(cfg, k))
    idx, ov = select_physical(eig.vectors, eig.values, bloch_vector(cfg, k))
    return eig.values, idx, ov


def _pmap(fn: Callable, items: Sequence, threads: int = 1) -> list:
    if threads <= 1 or len(items) < 2:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def dispersion_dissipation(cfg: FourierConfig, threads: int = 1) -> ModalResult:
    out = _pmap(lambda kh: _modes_at(cfg, kh), list(cfg.k_hat), threads)
    omega = np.array([o[0] for o in out])
    phys = np.array([o[1] for o in out], dtype=int)
    overlap = np.array([o[2] for o in out])
    c_hat = omega * cfg.h / cfg.n
    wavespeed = omega / cfg.k_from_khat(cfg.k_hat)[:, None]
    return ModalResult(cfg.k_hat, omega, c_hat, wavespeed, phys, overlap)


def eigenvalue_tracks(result: ModalResult) -> np.ndarray:
    """Reorder eigenvalues along the grid by nearest-neighbour matching.

    Returns an array shaped like ``result.c_hat`` whose column m follows one
    branch continuously, so jumps in a column reveal crossings or
    misassignments.
    """
    from scipy.optimize import linear_sum_assignment

    c = result.c_hat
    tracks = np.empty_like(c)
    tracks[0] = c[0]
    for i in range(1, len(c)):
        cost = np.abs(tracks[i - 1][:, None] - c[i][None, :])
        _, cols = linear_sum_assignment(cost)
        tracks[i] = c[i][cols]
    return tracks


@dataclass(frozen=True)
class MaxDissipationRow:
    eps: float
    n_s: int
    diss_max: float


def max_dissipation(cfg: FourierConfig, threads: int = 1) -> float:
    return float(dispersion_dissipation(cfg, threads).physical_c_hat.imag.max())


def max_dissipation_sweep(
    eps_grid: Iterable[float],
    n_list: Iterable[int],
    layout: str = "legendre",
    centres: str | None = None,
    alpha: float = 1.0,
    npts: int = KHAT_POINTS,
    mass_order: int = MASS_QUADRATURE,
    threads: int = 1,
) -> list[MaxDissipationRow]:
    """Largest physical-mode Im(c_hat) over k_hat for each (eps, n_s), Gaussian basis."""
    rows = []
    grid = khat_grid(npts)
    for n in n_list:
        pts = node_set(layout, n)
        ctr = node_set(centres, n) if centres else pts
        for eps in eps_grid:
            ops = build_operators(BasisSpec.rbf_ga(pts, eps, ctr), mass_order=mass_order)
            cfg = FourierConfig(ops, alpha=alpha, k_hat=grid)
            rows.append(MaxDissipationRow(float(eps), n, max_dissipation(cfg, threads)))
    return rows


def max_dissipation_csv(rows: Iterable[MaxDissipationRow]) -> str:
    return csv_text(MAXDISS_HEADER, [(r.eps, r.n_s, r.diss_max) for r in rows])


# -- combined amplification / phase ---------------------------------------


@dataclass(frozen=True)
class CombinedResult:
    k_hat: float
    t: float
    G: float
    dphi: float


def propagate(Q: np.ndarray, u0: np.ndarray, t: float) -> np.ndarray:
    """``exp(tQ) u0`` through the eigendecomposition of ``iQ``."""
    eig = eig_complex(1j * np.asarray(Q))
    if eig.vector_condition > DEFECTIVE_COND:
        raise DefectiveModeError(
            f"defective mode: eigenvector matrix condition {eig.vector_condition:.3e} > {DEFECTIVE_COND:g}"
        )
    W, omega = eig.vectors, eig.values
    beta = np.linalg.solve(W, u0)
    return W @ (np.exp(-1j * t * omega) * beta)


def amplification_phase(
    u_num: np.ndarray, u_exact: np.ndarray, Vq: np.ndarray, wq: np.ndarray
) -> tuple[float, float]:
    """G = ||u_num|| / ||u_exact|| and the phase of the exact wave relative to the numerical one.

    Both nodal vectors are reconstructed at quadrature points through ``Vq``.
    The phase is ``arg(int u_exact conj(u_num))``: negative when the
    numerical wave lags.
    """
    fn, fe = Vq @ u_num, Vq @ u_exact
    nn = np.sqrt(np.sum(wq * np.abs(fn) ** 2))
    ne = np.sqrt(np.sum(wq * np.abs(fe) ** 2))
    dphi = float(np.angle(np.sum(wq * fe * np.conj(fn))))
    return float(nn / ne), dphi


def combined_analysis(cfg: FourierConfig, k: float, t: float) -> CombinedResult:
    """Amplification and phase error of a full Bloch wave advected for time ``t``."""
    if t < 0:
        raise ValueError("time must be non-negative")
    u0 = bloch_vector(cfg, k)
    u_num = propagate(assemble_Q(cfg, k), u0, t)
    u_ex = u0 * np.exp(-1j * k * t)
    xq, wq = quadrature(cfg.ops.mass_order)
    G, dphi = amplification_phase(u_num, u_ex, cfg.ops.basis_at(xq), wq)
    return CombinedResult(float(cfg.khat_from_k(k)), float(t), G, dphi)


def combined_sweep(cfg: FourierConfig, times: Sequence[float], threads: int = 1) -> list[CombinedResult]:
    items = [(kh, t) for kh in cfg.k_hat for t in times]
    return _pmap(lambda it: combined_analysis(cfg, float(cfg.k_from_khat(it[0])), it[1]), items, threads)


def combined_csv(results: Iterable[CombinedResult]) -> str:
    return csv_text(COMBINED_HEADER, [(r.k_hat, r.t, r.G, r.dphi) for r in results])


# -- SBP diagnostics ------------------------------------------------------


@dataclass(frozen=True)
class SbpReport:
    conservation_error: float
    stability_error: float


def sbp_report(ops: ElementOperators) -> SbpReport:
    """Distance from the discrete conservation and linear-stability identities."""
    ones = np.ones(ops.n)
    PtB = ops.P.T @ ops.B
    cons = np.linalg.norm(ones @ ops.M @ ops.C - ones @ PtB)
    stab = np.linalg.norm(np.linalg.solve(ops.M, PtB) - ops.C, 2)
    return SbpReport(float(cons), float(stab))


@dataclass(frozen=True)
class SbpRow:
    eps: Optional[float]
    n_s: int
    layout: str
    report: SbpReport


def sbp_sweep(
    eps_grid: Iterable[float],
    n_list: Iterable[int],
    layouts: Iterable[str] = ("legendre",),
    mass_order: int = MASS_QUADRATURE,
) -> list[SbpRow]:
    rows = []
    for layout in layouts:
        for n in n_list:
            pts = node_set(layout, n)
            for eps in eps_grid:
                ops = build_operators(BasisSpec.rbf_ga(pts, eps), mass_order=mass_order)
                rows.append(SbpRow(float(eps), n, layout, sbp_report(ops)))
    return rows


def sbp_csv(rows: Iterable[SbpRow]) -> str:
    return csv_text(
        SBP_HEADER,
        [("" if r.eps is None else r.eps, r.n_s, r.layout, r.report.conservation_error, r.report.stability_error) for r in rows],
    )


def loglog_slope(x: Sequence[float], y: Sequence[float]) -> float:
    """Least-squares slope of log y against log x."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    return float(np.polyfit(lx, ly, 1)[0])
