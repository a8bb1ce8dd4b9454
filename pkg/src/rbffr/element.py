"""Reference element [-1, 1]: node sets, nodal bases and FR operators.

All operators act on nodal values at the solution points:

    D  (n, n)  x-derivative at the solution points
    P  (2, n)  values at the flux points, row 0 = x=-1, row 1 = x=+1
    M  (n, n)  mass matrix <theta_i, theta_j> on [-1, 1]
    B  (2, 2)  diag(-1, 1), outward normals at the flux points
    C  (n, 2)  correction-function derivatives dg_L/dx, dg_R/dx

``C`` is built from an orthonormalised copy of the nodal basis ``xi_i``:
``dg_f/dx = sum_i sigma_{f,i} xi_i`` with ``sigma_{f,i} = n_f xi_i(x_f)``.
Orthonormalisation uses a Gauss-Legendre rule with ``gs_order`` points
(default ``n``), which is exact for the polynomial space; for Gaussian bases
it differs from the ``mass_order`` rule used for ``M`` and that difference is
what the SBP diagnostics measure.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Optional

import numpy as np
from numpy.polynomial import legendre as npleg

from .io import csv_text
from .linalg import solve_dense
from .rbf import Kernel, RbfConfig, checked_alternant, kernel_deriv_matrix, kernel_matrix, stable_basis_build

MASS_QUADRATURE = 50

LAYOUTS = ("legendre", "lobatto", "chebyshev", "uniform_full", "uniform_internal")


class NodeKind(str, enum.Enum):
    LEGENDRE = "legendre"
    LOBATTO = "lobatto"
    CHEBYSHEV = "chebyshev"
    UNIFORM_FULL = "uniform_full"
    UNIFORM_INTERNAL = "uniform_internal"


@dataclass(frozen=True)
class NodeSet:
    kind: NodeKind
    coords: np.ndarray

    @property
    def n(self) -> int:
        return len(self.coords)

    def __len__(self) -> int:
        return len(self.coords)


def node_set(kind: NodeKind | str, n: int) -> NodeSet:
    kind = NodeKind(kind)
    if not 2 <= n <= 10:
        raise ValueError(f"node count must be in [2, 10], got {n}")
    if kind is NodeKind.LEGENDRE:
        x = npleg.leggauss(n)[0]
    elif kind is NodeKind.LOBATTO:
        interior = npleg.legroots(npleg.legder([0] * (n - 1) + [1])) if n > 2 else []
        x = np.concatenate(([-1.0], np.sort(np.real(interior)), [1.0]))
    elif kind is NodeKind.CHEBYSHEV:
        x = -np.cos((2 * np.arange(1, n + 1) - 1) * np.pi / (2 * n))
    elif kind is NodeKind.UNIFORM_FULL:
        x = np.linspace(-1.0, 1.0, n)
    else:
        x = -1.0 + (2 * np.arange(1, n + 1) - 1) / n
    x = np.asarray(x, dtype=float)
    # enforce exact symmetry about 0
    x = 0.5 * (x - x[::-1])
    x.setflags(write=False)
    return NodeSet(kind, x)


@lru_cache(maxsize=64)
def _gauss(order: int):
    x, w = npleg.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def quadrature(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [-1, 1], exact to degree 2*order - 1."""
    if not 1 <= order <= 200:
        raise ValueError(f"quadrature order must be in [1, 200], got {order}")
    return _gauss(order)


# -- bases ----------------------------------------------------------------


class BasisVariant(str, enum.Enum):
    POLYNOMIAL = "polynomial"
    RBF_DIRECT = "rbf_direct"
    RBF_GA = "rbf_ga"


@dataclass(frozen=True)
class BasisSpec:
    """Approximation space inside an element.

    For RBF variants ``centres`` defaults to the solution points; ``kernel``
    only matters for ``rbf_direct`` (the stable path is Gaussian-only).
    """

    variant: BasisVariant
    points: NodeSet
    eps: Optional[float] = None
    centres: Optional[NodeSet] = None
    kernel: Kernel = Kernel.GA

    def __post_init__(self):
        object.__setattr__(self, "variant", BasisVariant(self.variant))
        object.__setattr__(self, "kernel", Kernel(self.kernel))
        if self.variant is BasisVariant.POLYNOMIAL:
            return
        if self.eps is None:
            raise ValueError(f"{self.variant.value} basis requires a shape parameter")
        if self.centres is None:
            object.__setattr__(self, "centres", self.points)
        if len(self.centres) != len(self.points):
            raise ValueError("number of RBF centres must equal number of solution points")
        if self.variant is BasisVariant.RBF_GA and self.kernel is not Kernel.GA:
            raise ValueError("the stable basis is only defined for the Gaussian kernel")

    @classmethod
    def polynomial(cls, points: NodeSet) -> "BasisSpec":
        return cls(BasisVariant.POLYNOMIAL, points)

    @classmethod
    def rbf_direct(cls, points: NodeSet, eps: float, centres: NodeSet | None = None, kernel=Kernel.GA):
        return cls(BasisVariant.RBF_DIRECT, points, eps, centres, kernel)

    @classmethod
    def rbf_ga(cls, points: NodeSet, eps: float, centres: NodeSet | None = None) -> "BasisSpec":
        return cls(BasisVariant.RBF_GA, points, eps, centres)

    @property
    def n(self) -> int:
        return self.points.n

    def label(self) -> str:
        if self.variant is BasisVariant.POLYNOMIAL:
            return f"polynomial/{self.points.kind.value}/n{self.n}"
        return f"{self.variant.value}/{self.kernel.value}/eps{self.eps:g}/{self.points.kind.value}/c-{self.centres.kind.value}/n{self.n}"


def nodal_basis_matrices(spec: BasisSpec, eval_points) -> tuple[np.ndarray, np.ndarray]:
    """Values and x-derivatives of the cardinal functions ``theta_i``.

    Returns ``V[k, i] = theta_i(e_k)`` and ``dV[k, i] = theta_i'(e_k)``, with
    ``theta_i(x_j) = delta_ij`` at the solution points.
    """
    e = np.atleast_1d(np.asarray(eval_points, dtype=float))
    xs = spec.points.coords
    if spec.variant is BasisVariant.POLYNOMIAL:
        # Legendre-Vandermonde change of basis: well conditioned for n <= 10
        eye = np.eye(spec.n)
        Vs = npleg.legvander(xs, spec.n - 1)
        Ve = npleg.legvander(e, spec.n - 1)
        dVe = np.column_stack([npleg.legval(e, npleg.legder(row)) for row in eye])
        to_nodal = lambda F: solve_dense(Vs.T, F.T).T  # noqa: E731
    elif spec.variant is BasisVariant.RBF_DIRECT:
        cfg = RbfConfig(spec.kernel, spec.eps, spec.centres.coords)
        Vs = checked_alternant(xs, cfg)
        Ve = kernel_matrix(e, cfg)
        dVe = kernel_deriv_matrix(e, cfg)
        to_nodal = lambda F: solve_dense(Vs.T, F.T).T  # noqa: E731
    else:
        basis = stable_basis_build(spec.centres.coords, spec.eps)
        Vs = basis.eval(xs)
        Ve = basis.eval(e)
        dVe = basis.deriv(e)
        to_nodal = lambda F: solve_dense(Vs.T, F.T).T  # noqa: E731
    return to_nodal(Ve), to_nodal(dVe)


# -- operators ------------------------------------------------------------


class GramSchmidtBreakdown(np.linalg.LinAlgError):
    pass


def gram_schmidt(G: np.ndarray, rtol: float = 1e-10) -> np.ndarray:
    """Orthonormalise the unit coordinate vectors under the inner product ``G``.

    Modified Gram-Schmidt with one reorthogonalisation pass. Returns ``T``
    whose rows are coefficient vectors of the orthonormal functions, so
    ``T @ G @ T.T = I``.
    """
    n = G.shape[0]
    T = np.zeros((n, n))
    for i in range(n):
        v = np.zeros(n)
        v[i] = 1.0
        norm0 = np.sqrt(v @ G @ v)
        for _ in range(2):
            for j in range(i):
                v = v - (T[j] @ G @ v) * T[j]
        norm = np.sqrt(max(v @ G @ v, 0.0))
        if norm <= rtol * norm0:
            raise GramSchmidtBreakdown(f"basis function {i} is numerically dependent on the previous ones")
        T[i] = v / norm
    return T


@dataclass(frozen=True)
class ElementOperators:
    spec: BasisSpec
    D: np.ndarray
    P: np.ndarray
    M: np.ndarray
    C: np.ndarray
    B: np.ndarray
    mass_order: int
    gs_order: int
    orthonormal: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.spec.n

    @property
    def x(self) -> np.ndarray:
        return self.spec.points.coords

    def basis_at(self, points) -> np.ndarray:
        return nodal_basis_matrices(self.spec, points)[0]

    @cached_property
    def projector(self) -> tuple[np.ndarray, np.ndarray]:
        """``(Vq, Pi)``: values at the mass quadrature nodes and the L2 projection back.

        ``Pi @ g(Vq @ u)`` is the nodal form of the projection of ``g(u_h)``
        onto the element space, integrated with the ``mass_order`` rule.
        """
        xq, wq = quadrature(self.mass_order)
        Vq = self.basis_at(xq)
        return Vq, solve_dense(self.M, Vq.T * wq)

    def dump_csv(self) -> str:
        """Debug dump, one ``matrix,row,col,value`` line per entry."""
        rows = []
        for name in ("D", "P", "M", "C", "B"):
            A = getattr(self, name)
            for (i, j), v in np.ndenumerate(A):
                rows.append((name, i, j, float(v)))
        return csv_text(("matrix", "row", "col", "value"), rows)


def build_operators(spec: BasisSpec, mass_order: int = MASS_QUADRATURE, gs_order: int | None = None) -> ElementOperators:
    n = spec.n
    gs_order = n if gs_order is None else gs_order
    if mass_order < 2 * n:
        raise ValueError(f"mass quadrature order {mass_order} < 2n = {2 * n}")
    if gs_order < n:
        raise ValueError(f"Gram-Schmidt quadrature order {gs_order} < n = {n}")

    xq, wq = quadrature(mass_order)
    xg, wg = quadrature(gs_order)
    xs = spec.points.coords
    flux = np.array([-1.0, 1.0])
    V, dV = nodal_basis_matrices(spec, np.concatenate([xs, flux, xq, xg]))
    D = dV[:n]
    P = V[n : n + 2]
    Vq = V[n + 2 : n + 2 + mass_order]
    Vg = V[n + 2 + mass_order :]

    M = Vq.T @ (wq[:, None] * Vq)
    M = 0.5 * (M + M.T)
    G = Vg.T @ (wg[:, None] * Vg)
    G = 0.5 * (G + G.T)

    B = np.diag([-1.0, 1.0])
    T = gram_schmidt(G)  # xi_i = sum_j T[i, j] theta_j, so xi_i(x_s) = T[i, s]
    sigma = (T @ P.T) @ B  # sigma[i, f] = n_f xi_i(x_f)
    C = T.T @ sigma

    for A in (D, P, M, C):
        A.setflags(write=False)
    return ElementOperators(spec, D, P, M, C, B, mass_order, gs_order, T)
