"""Bilinear/trilinear finite element assembly of -div(sigma grad u) = f.

Meshes are structured (rectangles, boxes, annuli) and carry an element-wise
constant conductivity tensor. Dirichlet conditions are imposed by symmetric
elimination, leaving identity rows that are isolated in the matrix graph.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .sparse import SparseMatrix

__all__ = [
    "Mesh",
    "AssembledProblem",
    "rectangle_mesh",
    "box_mesh",
    "annulus_mesh",
    "element_stiffness",
    "assemble",
    "nodal_material_average",
    "two_domain_problem",
    "annulus_problem",
    "annulus_rotation",
    "layered_stack_problem",
    "check_spd",
]


@dataclass(frozen=True, eq=False)
class Mesh:
    """Node coordinates plus quad/hex connectivity.

    Element nodes are ordered counter-clockwise starting at the reference
    corner (-1, -1[, -1]); hexahedra list the bottom face before the top one.
    """

    coords: np.ndarray  # (n_nodes, dim)
    elements: np.ndarray  # (n_elements, 2**dim)

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    @property
    def n_nodes(self) -> int:
        return self.coords.shape[0]

    @property
    def n_elements(self) -> int:
        return self.elements.shape[0]

    def centroids(self) -> np.ndarray:
        return self.coords[self.elements].mean(axis=1)


@dataclass(frozen=True, eq=False)
class AssembledProblem:
    A: SparseMatrix
    b: np.ndarray
    coords: np.ndarray
    node_materials: np.ndarray  # (n, dim, dim)
    dirichlet: np.ndarray  # bool (n,)
    dim: int
    mesh: Mesh | None = field(default=None, repr=False)
    element_materials: np.ndarray | None = field(default=None, repr=False)
    name: str = ""

    @property
    def n(self) -> int:
        return self.A.n_rows


# -- meshes ------------------------------------------------------------------

def rectangle_mesh(nx, ny, x_range=(0.0, 1.0), y_range=(0.0, 1.0)) -> Mesh:
    """Uniform nx-by-ny quad mesh; node id = i + (nx + 1) * j."""
    if nx < 1 or ny < 1:
        raise ValueError("need at least one element per direction")
    xs = np.linspace(*x_range, nx + 1)
    ys = np.linspace(*y_range, ny + 1)
    X, Y = np.meshgrid(xs, ys)
    coords = np.column_stack([X.ravel(), Y.ravel()])
    i, j = np.meshgrid(np.arange(nx), np.arange(ny))
    n0 = (i + (nx + 1) * j).ravel()
    elements = np.column_stack([n0, n0 + 1, n0 + nx + 2, n0 + nx + 1])
    return Mesh(coords, elements)


def box_mesh(nx, ny, nz, x_range=(0.0, 1.0), y_range=(0.0, 1.0), z_range=(0.0, 1.0)) -> Mesh:
    if min(nx, ny, nz) < 1:
        raise ValueError("need at least one element per direction")
    xs, ys, zs = (np.linspace(*r, m + 1) for r, m in ((x_range, nx), (y_range, ny), (z_range, nz)))
    Z, Y, X = np.meshgrid(zs, ys, xs, indexing="ij")
    coords = np.column_stack([X.ravel(), Y.ravel(), Z.ravel()])
    sx, sy = 1, nx + 1
    sz = (nx + 1) * (ny + 1)
    k, j, i = np.meshgrid(np.arange(nz), np.arange(ny), np.arange(nx), indexing="ij")
    n0 = (i * sx + j * sy + k * sz).ravel()
    quad = [0, sx, sx + sy, sy]
    elements = np.column_stack([n0 + q for q in quad] + [n0 + q + sz for q in quad])
    return Mesh(coords, elements)


def annulus_mesh(n_r, n_t, n_z, r_inner=0.5, r_outer=1.0, thickness=0.1) -> Mesh:
    """Full ring of hexahedra, periodic in angle.

    Node id = ir + (n_r + 1) * (it + n_t * iz).
    """
    if n_r < 1 or n_t < 3 or n_z < 1:
        raise ValueError("annulus needs n_r >= 1, n_t >= 3, n_z >= 1")
    rs = np.linspace(r_inner, r_outer, n_r + 1)
    ts = 2.0 * np.pi * np.arange(n_t) / n_t
    zs = np.linspace(0.0, thickness, n_z + 1)
    Z, T, R = np.meshgrid(zs, ts, rs, indexing="ij")
    coords = np.column_stack([(R * np.cos(T)).ravel(), (R * np.sin(T)).ravel(), Z.ravel()])

    def nid(ir, it, iz):
        return ir + (n_r + 1) * ((it % n_t) + n_t * iz)

    iz, it, ir = (a.ravel() for a in np.meshgrid(np.arange(n_z), np.arange(n_t), np.arange(n_r), indexing="ij"))
    face = [(0, 0), (1, 0), (1, 1), (0, 1)]
    cols = [nid(ir + a, it + b, iz + c) for c in (0, 1) for a, b in face]
    return Mesh(coords, np.column_stack(cols))


# -- element kernels -----------------------------------------------------------

def _reference_element(dim):
    """Corner signs, 2**dim Gauss points and weights on [-1, 1]^dim."""
    if dim == 2:
        corners = np.array([[-1, -1], [1, -1], [1, 1], [-1, 1]], dtype=float)
    elif dim == 3:
        quad = [[-1, -1], [1, -1], [1, 1], [-1, 1]]
        corners = np.array([q + [z] for z in (-1, 1) for q in quad], dtype=float)
    else:
        raise ValueError("only 2D and 3D elements are supported")
    g = 1.0 / np.sqrt(3.0)
    points = np.array(list(product((-g, g), repeat=dim)))
    weights = np.ones(len(points))
    return corners, points, weights


def _shape(corners, points):
    """N (ng, nen) and dN/dxi (ng, nen, dim) for the multilinear element."""
    # factor (1 + c_k xi_k) / 2 per direction
    fac = 0.5 * (1.0 + points[:, None, :] * corners[None, :, :])
    N = fac.prod(axis=2)
    dim = corners.shape[1]
    dN = np.empty(fac.shape)
    for k in range(dim):
        others = np.delete(fac, k, axis=2).prod(axis=2)
        dN[:, :, k] = 0.5 * corners[None, :, k] * others
    return N, dN


def _element_matrices(X, sigma, source=1.0):
    """Stiffness (ne, nen, nen) and load (ne, nen) for elements with node coords X."""
    ne, nen, dim = X.shape
    corners, points, weights = _reference_element(dim)
    N, dN = _shape(corners, points)
    J = np.einsum("ena,gnb->egab", X, dN)
    detJ = np.linalg.det(J)
    if np.any(detJ <= 0.0):
        bad = int(np.flatnonzero((detJ <= 0.0).any(axis=1))[0])
        raise ValueError(f"degenerate or inverted element {bad}")
    G = np.einsum("gnb,egba->egna", dN, np.linalg.inv(J))
    wdet = weights[None, :] * detJ
    k = np.einsum("eg,egma,eab,egnb->emn", wdet, G, sigma, G)
    f = source * np.einsum("eg,gn->en", wdet, N)
    return k, f


def element_stiffness(X, sigma) -> np.ndarray:
    """Stiffness matrix of a single quad/hex with node coordinates X."""
    X = np.asarray(X, dtype=float)
    k, _ = _element_matrices(X[None], np.asarray(sigma, dtype=float)[None])
    return k[0]


def check_spd(tensors) -> None:
    t = np.asarray(tensors, dtype=float)
    if not np.array_equal(t, np.swapaxes(t, -1, -2)):
        raise ValueError("material tensors must be symmetric")
    lam = np.linalg.eigvalsh(t)
    if np.any(lam <= 0.0):
        bad = int(np.flatnonzero((lam <= 0.0).any(axis=-1))[0])
        raise ValueError(f"material tensor {bad} is not positive definite")


def nodal_material_average(mesh: Mesh, element_material) -> np.ndarray:
    """Per-node mean of the tensors of all elements touching the node."""
    em = np.asarray(element_material, dtype=float)
    dim = mesh.dim
    acc = np.zeros((mesh.n_nodes, dim, dim))
    counts = np.bincount(mesh.elements.ravel(), minlength=mesh.n_nodes)
    if np.any(counts == 0):
        raise ValueError(f"node {int(np.flatnonzero(counts == 0)[0])} belongs to no element")
    np.add.at(acc, mesh.elements.ravel(), np.repeat(em, mesh.elements.shape[1], axis=0))
    return acc / counts[:, None, None]


def assemble(mesh: Mesh, element_material, dirichlet=None, dirichlet_values=None, source=1.0,
             name="") -> AssembledProblem:
    """Assemble A u = b with element-constant tensors.

    ``dirichlet`` is a boolean node mask; ``dirichlet_values`` the prescribed
    values on those nodes (default 0). Free rows receive -A[:, D] g_D.
    """
    em = np.asarray(element_material, dtype=float)
    if em.shape != (mesh.n_elements, mesh.dim, mesh.dim):
        raise ValueError("need one dim x dim tensor per element")
    check_spd(em)
    n = mesh.n_nodes
    ke, fe = _element_matrices(mesh.coords[mesh.elements], em, source)
    nen = mesh.elements.shape[1]
    rows = np.repeat(mesh.elements, nen, axis=1).ravel()
    cols = np.tile(mesh.elements, (1, nen)).ravel()
    vals = ke.ravel()
    b = np.zeros(n)
    np.add.at(b, mesh.elements.ravel(), fe.ravel())

    is_d = np.zeros(n, dtype=bool) if dirichlet is None else np.asarray(dirichlet, dtype=bool)
    g = np.zeros(n)
    if dirichlet_values is not None:
        g[is_d] = np.broadcast_to(np.asarray(dirichlet_values, dtype=float), (n,))[is_d]
    if is_d.any():
        lift = ~is_d[rows] & is_d[cols]
        np.add.at(b, rows[lift], -vals[lift] * g[cols[lift]])
        keep = ~is_d[rows] & ~is_d[cols]
        d_nodes = np.flatnonzero(is_d)
        rows = np.concatenate([rows[keep], d_nodes])
        cols = np.concatenate([cols[keep], d_nodes])
        vals = np.concatenate([vals[keep], np.ones(d_nodes.size)])
        b[is_d] = g[is_d]
    A = SparseMatrix.from_coo(rows, cols, vals, (n, n))
    return AssembledProblem(
        A=A,
        b=b,
        coords=mesh.coords,
        node_materials=nodal_material_average(mesh, em),
        dirichlet=is_d,
        dim=mesh.dim,
        mesh=mesh,
        element_materials=em,
        name=name,
    )


# -- benchmark problems ----------------------------------------------------------

def _boundary_mask(coords, ranges, axes):
    tol = 1e-12
    mask = np.zeros(coords.shape[0], dtype=bool)
    for ax in axes:
        lo, hi = ranges[ax]
        mask |= np.abs(coords[:, ax] - lo) < tol
        mask |= np.abs(coords[:, ax] - hi) < tol
    return mask


def two_domain_problem(n_per_dir: int, kappa: float) -> AssembledProblem:
    """(-1,1)^2 with sigma = I for x < 0 and diag(kappa, 1) for x >= 0.

    Homogeneous Dirichlet on the whole boundary, unit source.
    """
    if n_per_dir < 2:
        raise ValueError("n_per_dir must be >= 2")
    mesh = rectangle_mesh(n_per_dir, n_per_dir, (-1.0, 1.0), (-1.0, 1.0))
    right = mesh.centroids()[:, 0] >= 0.0
    em = np.tile(np.eye(2), (mesh.n_elements, 1, 1))
    em[right, 0, 0] = kappa
    bnd = _boundary_mask(mesh.coords, [(-1.0, 1.0)] * 2, (0, 1))
    return assemble(mesh, em, dirichlet=bnd, name=f"two-domain(n={n_per_dir},kappa={kappa:g})")


def annulus_rotation(x, y, frame="circumferential") -> np.ndarray:
    """Orthogonal frame Q(x, y) used as sigma = Q^T diag(kappa, 1, 1) Q.

    ``"circumferential"`` puts the tangent (y, -x)/r in the first row, so the
    high conductivity follows the ring everywhere. ``"printed"`` uses rows
    (y/r, x/r, 0), (-x/r, y/r, 0), which is tangential only on the axes.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r = np.hypot(x, y)
    Q = np.zeros(x.shape + (3, 3))
    if frame == "circumferential":
        Q[..., 0, 0] = y / r
        Q[..., 0, 1] = -x / r
        Q[..., 1, 0] = x / r
        Q[..., 1, 1] = y / r
    elif frame == "printed":
        Q[..., 0, 0] = y / r
        Q[..., 0, 1] = x / r
        Q[..., 1, 0] = -x / r
        Q[..., 1, 1] = y / r
    else:
        raise ValueError(f"unknown frame {frame!r}")
    Q[..., 2, 2] = 1.0
    return Q


def annulus_problem(n_r=20, n_t=150, n_z=1, kappa=1.0, r_inner=0.5, r_outer=1.0, thickness=0.1,
                    u_inner=1.0, u_outer=0.0, frame="circumferential") -> AssembledProblem:
    """Ring with conductivity kappa along the circumference.

    u = u_inner on the inner radius, u = u_outer on the outer radius, natural
    conditions on the flat faces.
    """
    if min(n_r, n_t, n_z) < 1:
        raise ValueError("element counts must be >= 1")
    mesh = annulus_mesh(n_r, n_t, n_z, r_inner, r_outer, thickness)
    c = mesh.centroids()
    Q = annulus_rotation(c[:, 0], c[:, 1], frame)
    local = np.diag([kappa, 1.0, 1.0])
    em = np.einsum("eji,jk,ekl->eil", Q, local, Q)
    em = 0.5 * (em + np.swapaxes(em, 1, 2))
    ir = np.arange(mesh.n_nodes) % (n_r + 1)
    inner, outer = ir == 0, ir == n_r
    g = np.where(inner, u_inner, u_outer)
    return assemble(mesh, em, dirichlet=inner | outer, dirichlet_values=g,
                    name=f"annulus(nr={n_r},nt={n_t},nz={n_z},kappa={kappa:g})")


def layered_stack_problem(n_layers, n_x, n_y_per_layer, conductivities, width=1.0,
                          layer_height=0.05) -> AssembledProblem:
    """2D strip of horizontal bands cycling through scalar conductivities.

    Homogeneous Dirichlet on top and bottom, natural conditions on the sides.
    """
    cond = np.asarray(conductivities, dtype=float).ravel()
    if cond.size == 0 or np.any(cond <= 0.0):
        raise ValueError("conductivities must be positive")
    ny = n_layers * n_y_per_layer
    height = n_layers * layer_height
    mesh = rectangle_mesh(n_x, ny, (0.0, width), (0.0, height))
    elem_row = np.arange(mesh.n_elements) // n_x
    layer = elem_row // n_y_per_layer
    em = cond[layer % cond.size][:, None, None] * np.eye(2)
    bnd = _boundary_mask(mesh.coords, [(0.0, width), (0.0, height)], (1,))
    return assemble(mesh, em, dirichlet=bnd, name=f"stack(layers={n_layers})")
