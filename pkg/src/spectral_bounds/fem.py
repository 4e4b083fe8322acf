"""P1 finite elements for the Laplacian: ``K u = lambda M u``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .mesh import TriMesh

BCS = ("dirichlet", "neumann")


class AssemblyError(ValueError):
    pass


@dataclass(frozen=True)
class AssembledProblem:
    K: sp.csr_matrix
    M: sp.csr_matrix
    bc: str
    dof_map: np.ndarray   # matrix row -> mesh vertex
    mesh: TriMesh

    @property
    def n_dofs(self) -> int:
        return self.K.shape[0]

    def restrict(self, u_vertices):
        """Nodal values on the mesh -> coefficient vector on the dofs."""
        return np.asarray(u_vertices)[self.dof_map]

    def extend(self, u):
        """Coefficient vector (or matrix of columns) -> nodal values, zero on eliminated nodes."""
        u = np.asarray(u)
        out = np.zeros((self.mesh.n_vertices,) + u.shape[1:], dtype=u.dtype)
        out[self.dof_map] = u
        return out


def element_matrices(p):
    """Stiffness and consistent mass matrices for P1 triangles ``p`` of shape (T, 3, 2)."""
    e1, e2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
    area = 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    # gradient of barycentric coordinate i is rot(opposite edge) / (2 area)
    opp = np.stack([p[:, 2] - p[:, 1], p[:, 0] - p[:, 2], p[:, 1] - p[:, 0]], axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):   # degenerate triangles are rejected by the caller
        grad = np.stack([-opp[..., 1], opp[..., 0]], axis=-1) / (2 * area)[:, None, None]
    Ke = area[:, None, None] * np.einsum("tik,tjk->tij", grad, grad)
    Me = area[:, None, None] / 12.0 * (np.ones((3, 3)) + np.eye(3))
    return Ke, Me, area


def assemble(mesh: TriMesh, bc: str) -> AssembledProblem:
    """Assemble stiffness and mass matrices with exact P1 quadrature.

    Dirichlet conditions are imposed by eliminating boundary vertices.
    """
    if bc not in BCS:
        raise AssemblyError(f"boundary condition must be one of {BCS}")
    tri = mesh.triangles
    Ke, Me, area = element_matrices(mesh.vertices[tri])
    if np.any(area < 1e-14 * max(1.0, mesh.h ** 2)):
        raise AssemblyError("degenerate triangle (area < 1e-14)")
    rows = np.repeat(tri, 3, axis=1).ravel()
    cols = np.tile(tri, (1, 3)).ravel()
    n = mesh.n_vertices
    K = sp.coo_matrix((Ke.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    M = sp.coo_matrix((Me.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    K = 0.5 * (K + K.T)
    M = 0.5 * (M + M.T)
    if bc == "dirichlet":
        dofs = mesh.interior_vertices()
        K = K[dofs][:, dofs].tocsr()
        M = M[dofs][:, dofs].tocsr()
    else:
        dofs = np.arange(n)
    return AssembledProblem(K, M, bc, dofs, mesh)


def rayleigh_quotient(problem: AssembledProblem, u) -> float:
    u = np.asarray(u, dtype=float)
    den = float(u @ (problem.M @ u))
    if not den > 0:
        raise AssemblyError("test vector has zero M-norm")
    return max(float(u @ (problem.K @ u)) / den, 0.0)


def write_matrix(A, path, symmetric: bool = True) -> None:
    """Coordinate text dump: header ``n nnz sym`` then ``row col value`` lines."""
    A = sp.coo_matrix(A)
    if symmetric:
        keep = A.row <= A.col
        rows, cols, vals = A.row[keep], A.col[keep], A.data[keep]
    else:
        rows, cols, vals = A.row, A.col, A.data
    with open(path, "w") as fh:
        fh.write(f"{A.shape[0]} {len(vals)} {1 if symmetric else 0}\n")
        for r, c, v in zip(rows, cols, vals):
            fh.write(f"{int(r)} {int(c)} {float(v)!r}\n")


def read_matrix(path) -> sp.csr_matrix:
    with open(path) as fh:
        n, nnz, sym = (int(u) for u in fh.readline().split())
        data = np.loadtxt(fh, ndmin=2) if nnz else np.zeros((0, 3))
    r, c, v = data[:, 0].astype(int), data[:, 1].astype(int), data[:, 2]
    A = sp.coo_matrix((v, (r, c)), shape=(n, n)).tocsr()
    if sym:
        A = A + sp.triu(A, 1).T
    return A.tocsr()
