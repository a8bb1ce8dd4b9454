"""Radial basis functions on the reference interval.

Two ways of representing the span of Gaussians centred at ``c_j``:

* direct: solve the alternant system ``A psi = u`` with ``A_ij = phi(|x_i - c_j|)``.
  Cheap and exact in theory, but ``A`` tends to the matrix of ones as
  ``eps -> 0`` and the solve loses roughly one digit per decade of ``cond(A)``.
* stable: a new basis ``psi_m`` built from Taylor-cancelling combinations of
  the same Gaussians. It spans the same space and stays well conditioned as
  the Gaussians flatten.

The stable construction factors each Gaussian as

    exp(-eps^2 (x - c)^2) = exp(-eps^2 x^2) exp(-eps^2 c^2) exp(2 eps^2 c x)

and takes divided differences of ``exp(2 eps^2 c x)`` over the centres
``c_0..c_m``. Divided-difference weights annihilate ``c^k`` for ``k < m``, so
the first ``m`` Taylor orders cancel analytically and

    psi_m(x) = exp(-eps^2 x^2) * sum_{k>=m} h_{k-m}(c_0..c_m) (2 eps^2 x)^k / k!

where ``h_r`` is the complete homogeneous symmetric polynomial, i.e. the
divided difference of ``c^k``. The series is summed directly, never formed as
``exp`` minus a truncated Taylor polynomial.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .linalg import condition_number_2, solve_dense

#: Alternant condition number above which the direct solve is refused.
ILL_CONDITIONED = 1e15

SERIES_RTOL = 1e-18
SERIES_MAX_TERMS = 600


class Kernel(str, enum.Enum):
    GA = "GA"
    MQ = "MQ"
    IQ = "IQ"
    IMQ = "IMQ"
    W13 = "W13"


class IllConditionedAlternantError(np.linalg.LinAlgError):
    def __init__(self, cond: float):
        self.cond = cond
        super().__init__(
            f"ill-conditioned alternant (cond = {cond:.3e} > {ILL_CONDITIONED:.0e}); "
            "use the stable Gaussian basis (rbf_ga) for this shape parameter"
        )


def kernel_eval(kernel: Kernel | str, eps: float, r):
    """Evaluate ``phi(r)``; ``eps`` is ignored for W13."""
    kernel = Kernel(kernel)
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("radius must be non-negative")
    s = (eps * r) ** 2
    if kernel is Kernel.GA:
        out = np.exp(-s)
    elif kernel is Kernel.MQ:
        out = np.sqrt(1.0 + s)
    elif kernel is Kernel.IQ:
        out = 1.0 / (1.0 + s)
    elif kernel is Kernel.IMQ:
        out = 1.0 / np.sqrt(1.0 + s)
    else:
        out = np.clip(1.0 - r, 0.0, None) ** 4 * (4.0 * r + 1.0)
    return out[()] if out.ndim == 0 else out


def kernel_deriv_x(kernel: Kernel | str, eps: float, x, c):
    """d/dx of ``phi(|x - c|)`` in closed form."""
    kernel = Kernel(kernel)
    d = np.asarray(x, dtype=float) - np.asarray(c, dtype=float)
    e2 = eps * eps
    s = e2 * d * d
    if kernel is Kernel.GA:
        out = -2.0 * e2 * d * np.exp(-s)
    elif kernel is Kernel.MQ:
        out = e2 * d / np.sqrt(1.0 + s)
    elif kernel is Kernel.IQ:
        out = -2.0 * e2 * d / (1.0 + s) ** 2
    elif kernel is Kernel.IMQ:
        out = -e2 * d / (1.0 + s) ** 1.5
    else:
        # d/dr[(1-r)^4 (4r+1)] = -20 r (1-r)^3, times dr/dx = sign(d)
        r = np.abs(d)
        out = -20.0 * d * np.clip(1.0 - r, 0.0, None) ** 3
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class RbfConfig:
    kernel: Kernel
    eps: float
    centres: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "kernel", Kernel(self.kernel))
        c = np.asarray(self.centres, dtype=float)
        object.__setattr__(self, "centres", c)
        if not np.isfinite(self.eps):
            raise ValueError("shape parameter must be finite")
        if self.kernel is not Kernel.W13 and self.eps <= 0:
            raise ValueError("shape parameter must be positive")
        if len(np.unique(c)) != len(c):
            raise ValueError("RBF centres must be pairwise distinct")


def _coords(points) -> np.ndarray:
    return np.asarray(getattr(points, "coords", points), dtype=float)


def kernel_matrix(x, cfg: RbfConfig) -> np.ndarray:
    """``phi(|x_i - c_j|)`` for arbitrary evaluation points."""
    x = _coords(x)
    return kernel_eval(cfg.kernel, cfg.eps, np.abs(x[:, None] - cfg.centres[None, :]))


def kernel_deriv_matrix(x, cfg: RbfConfig) -> np.ndarray:
    x = _coords(x)
    return kernel_deriv_x(cfg.kernel, cfg.eps, x[:, None], cfg.centres[None, :])


def alternant_matrix(points, cfg: RbfConfig) -> np.ndarray:
    x = _coords(points)
    if len(x) != len(cfg.centres):
        raise ValueError(f"{len(x)} points but {len(cfg.centres)} centres")
    return kernel_matrix(x, cfg)


def checked_alternant(points, cfg: RbfConfig) -> np.ndarray:
    """Alternant matrix, refusing it if too ill-conditioned to solve."""
    A = alternant_matrix(points, cfg)
    cond = condition_number_2(A)
    if not cond <= ILL_CONDITIONED:
        raise IllConditionedAlternantError(cond)
    return A


def interpolate_direct(values, points, cfg: RbfConfig) -> np.ndarray:
    """Coefficients ``psi`` with ``sum_j psi_j phi(|x_i - c_j|) = values_i``."""
    A = checked_alternant(points, cfg)
    return solve_dense(A, np.asarray(values, dtype=float))


# -- stable flat-Gaussian basis ---------------------------------------------


def divided_difference_weights(c: np.ndarray) -> np.ndarray:
    """Row m holds the weights of the m-th divided difference over ``c_0..c_m``."""
    n = len(c)
    w = np.zeros((n, n))
    for m in range(n):
        for j in range(m + 1):
            w[m, j] = 1.0 / np.prod([c[j] - c[i] for i in range(m + 1) if i != j])
    return w


def complete_homogeneous(c: np.ndarray, rmax: int) -> np.ndarray:
    """``H[m, r] = h_r(c_0, ..., c_m)``, built by the stable recurrence
    ``h_r(c_0..c_m) = h_r(c_0..c_{m-1}) + c_m h_{r-1}(c_0..c_m)``."""
    n = len(c)
    H = np.zeros((n, rmax + 1))
    prev = np.zeros(rmax + 1)
    prev[0] = 1.0  # h_r of the empty set is delta_{r0}
    for m in range(n):
        row = prev.copy()
        for r in range(1, rmax + 1):
            row[r] = prev[r] + c[m] * row[r - 1]
        H[m] = row
        prev = row
    return H


@dataclass(frozen=True)
class StableBasis:
    """Well-conditioned basis spanning the Gaussians at ``centres``.

    ``weights`` are the divided-difference rows (``psi_m`` is the Gaussian
    combination ``sum_j weights[m, j] exp(eps^2 c_j^2) phi_j / scale[m]``);
    ``scale`` is the per-function max-abs normaliser on [-1, 1].
    """

    centres: np.ndarray
    eps: float
    weights: np.ndarray
    scale: np.ndarray
    _moments: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return len(self.centres)

    def gaussian_coefficients(self) -> np.ndarray:
        """Matrix ``G`` with ``psi = G @ [phi_0, ..., phi_{n-1}]`` (direct Gaussians)."""
        return self.weights * np.exp(self.eps**2 * self.centres**2)[None, :] / self.scale[:, None]

    def _series(self, x: np.ndarray, deriv: bool) -> np.ndarray:
        e2 = self.eps**2
        z = 2.0 * e2 * x
        n = self.n
        S = np.zeros((len(x), n))
        dS = np.zeros((len(x), n))
        absS = np.zeros((len(x), n))
        # zk[k] = z^k / k!, updated incrementally
        zk = np.ones_like(x)
        zk_prev = np.zeros_like(x)  # z^(k-1)/(k-1)!
        kmax = self._moments.shape[1] - 1
        for k in range(kmax + 1):
            if k > 0:
                zk_prev = zk
                zk = zk * z / k
            m_hi = min(k, n - 1)
            ms = np.arange(m_hi + 1)
            coef = self._moments[ms, k - ms]
            term = zk[:, None] * coef[None, :]
            S[:, : m_hi + 1] += term
            absS[:, : m_hi + 1] += np.abs(term)
            if deriv and k > 0:
                # d/dx (2 e2 x)^k / k! = 2 e2 (2 e2 x)^(k-1)/(k-1)!
                dS[:, : m_hi + 1] += 2.0 * e2 * zk_prev[:, None] * coef[None, :]
            if k >= n - 1:
                # per function: psi_m is O(eps^(2m)), so compare column-wise
                tail = np.abs(term).max(axis=0)
                ref = absS.max(axis=0)
                if np.all(tail <= SERIES_RTOL * ref):
                    break
        else:  # pragma: no cover - only for absurd eps
            raise RuntimeError("stable-basis series did not converge")
        g = np.exp(-e2 * x * x)[:, None]
        vals = g * S
        if not deriv:
            return vals
        return g * (dS - 2.0 * e2 * x[:, None] * S)

    def eval(self, x) -> np.ndarray:
        """``psi_m(x_k)`` as a (len(x), n) matrix."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return self._series(x, deriv=False) / self.scale[None, :]

    def deriv(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return self._series(x, deriv=True) / self.scale[None, :]


def stable_basis_build(centres, eps: float) -> StableBasis:
    c = _coords(centres)
    if eps <= 0 or not np.isfinite(eps):
        raise ValueError("shape parameter must be positive and finite")
    if len(np.unique(c)) != len(c):
        raise ValueError("centres must be pairwise distinct")
    n = len(c)
    # enough moments for |z| = 2 eps^2 * 1.1 * max|c| at the requested tolerance
    zmax = 2.0 * eps**2 * 1.1 * max(1.0, np.abs(c).max())
    rmax = int(min(SERIES_MAX_TERMS, n + 40 + 4 * zmax))
    H = complete_homogeneous(c, rmax + n)
    # moments[m, r] = h_r(c_0..c_m) is the coefficient of (2 eps^2 x)^(m+r)/(m+r)!
    basis = StableBasis(c, float(eps), divided_difference_weights(c), np.ones(n), H)
    xs = np.linspace(-1.0, 1.0, 801)
    scale = np.abs(basis.eval(xs)).max(axis=0)
    return StableBasis(c, float(eps), basis.weights, scale, H)


def stable_basis_eval(basis: StableBasis, x) -> np.ndarray:
    return basis.eval(x)


def stable_basis_deriv(basis: StableBasis, x) -> np.ndarray:
    return basis.deriv(x)


# -- condition sweeps -----------------------------------------------------

CONDITION_HEADER = ("eps", "layout", "n", "mode", "cond")


@dataclass(frozen=True)
class ConditionRow:
    eps: float
    layout: str
    n: int
    mode: str
    cond: float


def evaluation_condition(points, eps: float, mode: str, centres=None) -> float:
    """Condition number of the basis evaluation matrix at ``points``."""
    x = _coords(points)
    c = x if centres is None else _coords(centres)
    if mode == "direct":
        return condition_number_2(alternant_matrix(x, RbfConfig(Kernel.GA, eps, c)))
    if mode == "stable":
        return condition_number_2(stable_basis_build(c, eps).eval(x))
    raise ValueError(f"unknown mode {mode!r}")


def condition_sweep(
    layouts: Sequence[str], n: int, eps_grid: Iterable[float], mode: str
) -> list[ConditionRow]:
    from .element import node_set

    rows = []
    for layout in layouts:
        pts = node_set(layout, n)
        for eps in eps_grid:
            if eps <= 0:
                raise ValueError("eps grid must be positive")
            rows.append(ConditionRow(float(eps), layout, n, mode, evaluation_condition(pts, eps, mode)))
    return rows


def condition_rows_to_csv(rows: Iterable[ConditionRow]) -> str:
    from .io import csv_text

    return csv_text(CONDITION_HEADER, [(r.eps, r.layout, r.n, r.mode, r.cond) for r in rows])
