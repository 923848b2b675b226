"""Model domains, cell-centered grids, and Neumann eigenbases.

Supported domains are intervals [0, L], axis-aligned rectangles
[0, Lx] x [0, Ly], and axis-aligned polygons (e.g. the L-shape
[0, 2]^2 minus (1, 2)^2).  Grids are cell-centered with uniform spacing h
per axis: nodes x_i = (i - 1/2) h and weights w_i = h^n.  On such grids the
midpoint sums of cosine products are exact, so the analytic interval and
rectangle eigenbases are quadrature-orthonormal to roundoff.

Eigenbases come in two kinds:

* analytic -- closed-form cosine modes.  Interval: lambda_k =
  ((k-1) pi / L)^2 with e_k proportional to cos((k-1) pi x / L); rectangles
  tensor two interval families and sort by eigenvalue (lexicographic
  tie-break on the mode pair).
* numeric -- the 5-point finite-difference Neumann Laplacian (ghost-point
  reflection) on a polygon mesh, smallest-K eigenpairs via shift-invert
  Lanczos, deterministically postprocessed (cluster re-orthonormalization
  and a sign convention) so repeated builds are byte-identical.

A per-axis resolution cutoff Lambda = (pi / 2h)^2 caps the modes a grid may
carry; requests beyond it are rejected rather than silently aliased.
"""

from __future__ import annotations

import base64
import io
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.typing import NDArray
import scipy.sparse as sp
import scipy.sparse.csgraph as csgraph
import scipy.sparse.linalg as spla

__all__ = [
    "Domain",
    "Grid",
    "EigenBasis",
    "interval_domain",
    "rectangle_domain",
    "lshape_domain",
    "build_interval_basis",
    "build_rectangle_basis",
    "build_fd_basis",
    "lp_norm",
    "save_basis",
    "load_basis",
    "weyl_count_estimate",
    "weyl_eigenvalue_estimate",
]


# ---------------------------------------------------------------------------
# Domains


@dataclass(frozen=True)
class Domain:
    """Bounded model domain in dimension n in {1, 2}.

    kind is one of "interval", "rectangle", "polygon".  For polygons,
    ``cells`` holds the axis-aligned unit of description: a list of
    rectangles (x0, x1, y0, y1) whose union is the domain.
    """

    kind: str
    n: int
    lengths: tuple[float, ...]
    volume: float
    diameter: float
    cells: tuple[tuple[float, float, float, float], ...] = ()

    @property
    def bbox(self) -> tuple[float, ...]:
        return self.lengths


def interval_domain(L: float) -> Domain:
    if L <= 0:
        raise ValueError("interval length must be positive")
    return Domain(kind="interval", n=1, lengths=(float(L),), volume=float(L), diameter=float(L))


def rectangle_domain(Lx: float, Ly: float) -> Domain:
    if Lx <= 0 or Ly <= 0:
        raise ValueError("rectangle side lengths must be positive")
    return Domain(
        kind="rectangle",
        n=2,
        lengths=(float(Lx), float(Ly)),
        volume=float(Lx * Ly),
        diameter=float(np.hypot(Lx, Ly)),
    )


def lshape_domain() -> Domain:
    """The L-shape [0, 2]^2 with the open quadrant (1, 2)^2 removed."""
    cells = ((0.0, 1.0, 0.0, 2.0), (1.0, 2.0, 0.0, 1.0))
    return Domain(
        kind="polygon",
        n=2,
        lengths=(2.0, 2.0),
        volume=3.0,
        diameter=float(np.hypot(2.0, 2.0)),
        cells=cells,
    )


# ---------------------------------------------------------------------------
# Grids


@dataclass(frozen=True)
class Grid:
    """Cell-centered quadrature grid.

    points : (N, n) node coordinates; weights : (N,) quadrature weights
    (uniform h^n); spacing : per-axis h.  For structured grids ``index``
    holds the integer cell coordinates of each node, used by the
    finite-difference stencils.
    """

    domain: Domain
    points: NDArray
    weights: NDArray
    spacing: tuple[float, ...]
    index: NDArray | None = None
    shape: tuple[int, ...] | None = None

    def __post_init__(self):
        total = float(self.weights.sum())
        if not np.isclose(total, self.domain.volume, rtol=1e-12, atol=0.0):
            raise ValueError(
                f"quadrature weights sum to {total!r}, expected domain volume "
                f"{self.domain.volume!r}"
            )

    @property
    def n_nodes(self) -> int:
        return self.points.shape[0]

    @property
    def h(self) -> float:
        """Largest per-axis spacing (the resolution scale)."""
        return max(self.spacing)

    @property
    def resolution_cutoff(self) -> float:
        """Sum over axes of the per-axis mode cap (pi / 2h)^2."""
        return float(sum((np.pi / (2.0 * h)) ** 2 for h in self.spacing))

    def grid_id(self) -> str:
        dom = self.domain
        dims = "x".join(f"{L:g}" for L in dom.lengths)
        return f"{dom.kind}[{dims}]/h={'x'.join(f'{h:g}' for h in self.spacing)}/N={self.n_nodes}"


def _interval_nodes(L: float, N: int) -> NDArray:
    h = L / N
    return (np.arange(N) + 0.5) * h


def interval_grid(L: float, N: int) -> Grid:
    dom = interval_domain(L)
    x = _interval_nodes(L, N)
    h = L / N
    return Grid(
        domain=dom,
        points=x[:, None],
        weights=np.full(N, h),
        spacing=(h,),
        index=np.arange(N)[:, None],
        shape=(N,),
    )


def rectangle_grid(Lx: float, Ly: float, Nx: int, Ny: int) -> Grid:
    dom = rectangle_domain(Lx, Ly)
    xs = _interval_nodes(Lx, Nx)
    ys = _interval_nodes(Ly, Ny)
    hx, hy = Lx / Nx, Ly / Ny
    # Node ordering: x-major, i.e. node p = ix * Ny + iy.
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    IX, IY = np.meshgrid(np.arange(Nx), np.arange(Ny), indexing="ij")
    idx = np.column_stack([IX.ravel(), IY.ravel()])
    return Grid(
        domain=dom,
        points=pts,
        weights=np.full(Nx * Ny, hx * hy),
        spacing=(hx, hy),
        index=idx,
        shape=(Nx, Ny),
    )


def polygon_grid(domain: Domain, h: float) -> Grid:
    """Cell-centered mesh of an axis-aligned polygon with spacing h.

    Every rectangle in the domain description must be an integer number of
    cells in each direction, so the mesh tiles the domain exactly.
    """
    if domain.kind != "polygon":
        raise ValueError("polygon_grid requires a polygon domain")
    pts = []
    idx = []
    seen = set()
    for (x0, x1, y0, y1) in domain.cells:
        for span, name in (((x1 - x0), "x"), ((y1 - y0), "y")):
            m = span / h
            if abs(m - round(m)) > 1e-9:
                raise ValueError(
                    f"spacing h={h} does not tile the {name}-span {span} of a domain cell"
                )
    for (x0, x1, y0, y1) in domain.cells:
        mx = int(round((x1 - x0) / h))
        my = int(round((y1 - y0) / h))
        ox = int(round(x0 / h))
        oy = int(round(y0 / h))
        for ix in range(mx):
            for iy in range(my):
                key = (ox + ix, oy + iy)
                if key in seen:
                    raise ValueError("domain cells overlap")
                seen.add(key)
                idx.append(key)
                pts.append(((ox + ix + 0.5) * h, (oy + iy + 0.5) * h))
    # Deterministic node order: sort by (ix, iy).
    idx_arr = np.array(idx, dtype=int)
    pts_arr = np.array(pts, dtype=float)
    order = np.lexsort((idx_arr[:, 1], idx_arr[:, 0]))
    idx_arr = idx_arr[order]
    pts_arr = pts_arr[order]
    N = len(pts_arr)
    return Grid(
        domain=domain,
        points=pts_arr,
        weights=np.full(N, h * h),
        spacing=(h, h),
        index=idx_arr,
        shape=None,
    )


# ---------------------------------------------------------------------------
# Eigenbases


@dataclass
class EigenBasis:
    """Finite Neumann eigenbasis sampled on a grid.

    eigenvalues : (K,) sorted ascending, eigenvalues[0] = 0.
    functions : (K, N) node samples, quadrature-orthonormal:
        functions @ diag(w) @ functions.T = I.
    kind : "analytic" or "numeric".
    mode_index : per-mode metadata (interval: wavenumber k-1; rectangle:
        the pair (a, b); numeric: solver position).
    """

    grid: Grid
    eigenvalues: NDArray
    functions: NDArray
    kind: str
    mode_index: list = field(default_factory=list)
    _gradients: NDArray | None = field(default=None, repr=False)

    @property
    def K(self) -> int:
        return len(self.eigenvalues)

    @property
    def domain(self) -> Domain:
        return self.grid.domain

    @property
    def lambda_cutoff(self) -> float:
        return self.grid.resolution_cutoff

    def gram(self) -> NDArray:
        W = self.grid.weights
        return (self.functions * W) @ self.functions.T

    def validate(self, gram_tol: float | None = None) -> None:
        """Check the basis invariants; raise ValueError on violation."""
        lam = self.eigenvalues
        if np.any(np.diff(lam) < -1e-12):
            raise ValueError("eigenvalues are not sorted")
        if abs(lam[0]) > 1e-10:
            raise ValueError(f"lowest eigenvalue {lam[0]!r} is not 0 within 1e-10")
        if np.any(lam > self.lambda_cutoff * (1 + 1e-12)):
            raise ValueError("basis carries modes beyond the grid resolution cutoff")
        const = self.domain.volume ** -0.5
        if not np.allclose(self.functions[0], const, rtol=0, atol=1e-8 * const):
            raise ValueError("lowest mode is not the constant |Omega|^{-1/2}")
        tol = gram_tol if gram_tol is not None else (1e-8 if self.kind == "analytic" else 1e-6)
        G = self.gram()
        dev = np.max(np.abs(G - np.eye(self.K)))
        if dev > tol:
            raise ValueError(f"Gram matrix deviates from identity by {dev:.3e} > {tol:g}")

    def gradients(self) -> NDArray:
        """(n, K, N) per-axis derivatives of every mode at the nodes.

        Analytic bases differentiate the cosine factors termwise; numeric
        bases fall back to finite differences of the sampled modes.
        """
        if self._gradients is None:
            self._gradients = _mode_gradients(self)
        return self._gradients


def _interval_modes(L: float, N: int, ks: Sequence[int]) -> NDArray:
    """Samples of sqrt-normalized cosine modes cos(k pi x / L), k in ks, on N nodes."""
    x = _interval_nodes(L, N)
    rows = np.empty((len(ks), N))
    for r, k in enumerate(ks):
        if k == 0:
            rows[r] = L ** -0.5
        else:
            rows[r] = np.sqrt(2.0 / L) * np.cos(k * np.pi * x / L)
    return rows


def build_interval_basis(L: float, K: int, N: int = 512) -> EigenBasis:
    """Closed-form Neumann basis on [0, L] with K modes on an N-node grid.

    lambda_k = ((k-1) pi / L)^2; e_1 is constant.  Requires K <= N and the
    top mode to sit below the per-axis resolution cutoff (k-1 <= N/2).
    """
    if K < 1:
        raise ValueError("K must be at least 1")
    if K > N:
        raise ValueError(f"K={K} exceeds the number of grid nodes N={N}")
    if K - 1 > N / 2:
        raise ValueError(
            f"K={K} asks for modes beyond the resolution cutoff (k-1 <= N/2 = {N / 2:g})"
        )
    grid = interval_grid(L, N)
    ks = list(range(K))
    lam = (np.array(ks, dtype=float) * np.pi / L) ** 2
    E = _interval_modes(L, N, ks)
    return EigenBasis(grid=grid, eigenvalues=lam, functions=E, kind="analytic", mode_index=ks)


def rectangle_mode_table(Lx: float, Ly: float, Nx: int, Ny: int) -> list[tuple[float, int, int]]:
    """All tensor modes below the per-axis cutoffs, sorted by (lambda, a, b)."""
    amax = Nx // 2
    bmax = Ny // 2
    table = []
    for a in range(amax + 1):
        la = (a * np.pi / Lx) ** 2
        for b in range(bmax + 1):
            lb = (b * np.pi / Ly) ** 2
            table.append((la + lb, a, b))
    table.sort(key=lambda t: (t[0], t[1], t[2]))
    return table


def build_rectangle_basis(Lx: float, Ly: float, K: int, Nx: int = 64, Ny: int = 64) -> EigenBasis:
    """Tensor-cosine Neumann basis on [0, Lx] x [0, Ly].

    Modes e_(a,b)(x, y) = e_a(x) e_b(y) with lambda = (a pi/Lx)^2 +
    (b pi/Ly)^2, sorted by eigenvalue with lexicographic tie-break on
    (a, b) so degenerate levels come out in a deterministic order.
    """
    if K < 1:
        raise ValueError("K must be at least 1")
    table = rectangle_mode_table(Lx, Ly, Nx, Ny)
    if K > len(table):
        raise ValueError(
            f"K={K} exceeds the {len(table)} modes resolvable on a {Nx}x{Ny} grid"
        )
    grid = rectangle_grid(Lx, Ly, Nx, Ny)
    chosen = table[:K]
    lam = np.array([t[0] for t in chosen])
    a_needed = sorted({t[1] for t in chosen})
    b_needed = sorted({t[2] for t in chosen})
    ex = {a: row for a, row in zip(a_needed, _interval_modes(Lx, Nx, a_needed))}
    ey = {b: row for b, row in zip(b_needed, _interval_modes(Ly, Ny, b_needed))}
    E = np.empty((K, Nx * Ny))
    for r, (_, a, b) in enumerate(chosen):
        E[r] = np.outer(ex[a], ey[b]).ravel()
    return EigenBasis(
        grid=grid,
        eigenvalues=lam,
        functions=E,
        kind="analytic",
        mode_index=[(a, b) for (_, a, b) in chosen],
    )


def _fd_laplacian(grid: Grid) -> sp.csr_matrix:
    """5-point Neumann Laplacian on a polygon mesh via ghost-point reflection.

    Missing neighbors reflect (zero flux), which zeroes their stencil
    contribution; the result is symmetric positive semidefinite with the
    constants in its kernel when the mesh is connected.
    """
    idx = grid.index
    h = grid.spacing[0]
    N = grid.n_nodes
    lookup = {tuple(k): i for i, k in enumerate(map(tuple, idx))}
    rows, cols, vals = [], [], []
    diag = np.zeros(N)
    for i, (ix, iy) in enumerate(map(tuple, idx)):
        for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            jn = lookup.get((ix + dx, iy + dy))
            if jn is not None:
                rows.append(i)
                cols.append(jn)
                vals.append(-1.0 / h**2)
                diag[i] += 1.0 / h**2
    rows.extend(range(N))
    cols.extend(range(N))
    vals.extend(diag)
    return sp.csr_matrix((vals, (rows, cols)), shape=(N, N))


def _deterministic_sign(v: NDArray) -> NDArray:
    """Flip v so its largest-magnitude entry (first on ties) is positive."""
    i = int(np.argmax(np.abs(v)))
    return -v if v[i] < 0 else v


def build_fd_basis(domain: Domain, h: float, K: int) -> EigenBasis:
    """Finite-difference Neumann eigenbasis on an axis-aligned polygon.

    Assembles the 5-point reflection Laplacian, verifies the mesh is
    connected (simple zero eigenvalue), and extracts the K smallest
    eigenpairs by shift-invert Lanczos with a deterministic start vector.
    Eigenvalue clusters (relative gap < 1e-8) are re-orthonormalized by QR
    and every mode gets a fixed sign convention, so rebuilding with the
    same arguments reproduces the basis bit for bit.
    """
    grid = polygon_grid(domain, h)
    N = grid.n_nodes
    if K < 1:
        raise ValueError("K must be at least 1")
    if K > N:
        raise ValueError(f"K={K} exceeds the number of mesh cells N={N}")
    A = _fd_laplacian(grid)
    ncomp, _ = csgraph.connected_components(A != 0, directed=False)
    if ncomp != 1:
        raise ValueError(
            f"mesh splits into {ncomp} components; zero eigenvalue would not be simple"
        )
    # Shift by a positive multiple of the identity so the shift-invert
    # factorization is well conditioned near the bottom of the spectrum.
    scale = (np.pi / max(domain.lengths)) ** 2
    if N <= 600 or K > N - 2:
        vals_all, vecs_all = np.linalg.eigh(A.toarray())
        vals, vecs = vals_all[:K] + scale, vecs_all[:, :K]
    else:
        A_shift = (A + scale * sp.identity(N, format="csr")).tocsc()
        v0 = np.ones(N) / np.sqrt(N)
        vals, vecs = spla.eigsh(A_shift, k=K, sigma=0.5 * scale, which="LM", v0=v0)
    lam = vals - scale
    order = np.argsort(lam, kind="stable")
    lam = lam[order]
    vecs = vecs[:, order]
    lam = np.maximum(lam, 0.0)
    if lam[0] > 1e-8 * max(1.0, lam[-1]):
        raise ValueError("no zero eigenvalue found; mesh is not a Neumann discretization")
    lam[0] = 0.0
    if K <= lam.size and lam[-1] > grid.resolution_cutoff:
        raise ValueError(
            f"K={K} reaches eigenvalue {lam[-1]:.4g} beyond the resolution cutoff "
            f"{grid.resolution_cutoff:.4g}"
        )
    W = grid.weights
    E = vecs.T.copy()
    # Cluster-wise QR re-orthonormalization in the quadrature inner product.
    scale_top = max(1.0, float(lam[-1]))
    start = 0
    for stop in range(1, K + 1):
        if stop == K or (lam[stop] - lam[stop - 1]) > 1e-8 * scale_top:
            block = E[start:stop]
            M = (block * W) @ block.T
            # Cholesky of the small Gram factor; M is near identity already.
            Lc = np.linalg.cholesky(M)
            E[start:stop] = np.linalg.solve(Lc, block)
            start = stop
    # Exact constant ground mode, then the sign convention everywhere.
    E[0] = domain.volume ** -0.5
    for r in range(1, K):
        E[r] = _deterministic_sign(E[r])
    coh = np.std(vecs[:, 0]) / abs(np.mean(vecs[:, 0]))
    if coh > 1e-6:
        raise ValueError(f"ground mode is not constant (coefficient of variation {coh:.2e})")
    return EigenBasis(
        grid=grid,
        eigenvalues=lam,
        functions=E,
        kind="numeric",
        mode_index=list(range(K)),
    )


def _mode_gradients(basis: EigenBasis) -> NDArray:
    """Per-axis derivatives of every mode: exact for analytic, FD for numeric."""
    grid = basis.grid
    n = grid.domain.n
    K, N = basis.functions.shape
    out = np.zeros((n, K, N))
    if basis.kind == "analytic":
        if grid.domain.kind == "interval":
            L = grid.domain.lengths[0]
            x = grid.points[:, 0]
            for r, k in enumerate(basis.mode_index):
                if k == 0:
                    continue
                kappa = k * np.pi / L
                out[0, r] = -np.sqrt(2.0 / L) * kappa * np.sin(kappa * x)
        elif grid.domain.kind == "rectangle":
            Lx, Ly = grid.domain.lengths
            Nx, Ny = grid.shape
            xs = _interval_nodes(Lx, Nx)
            ys = _interval_nodes(Ly, Ny)
            for r, (a, b) in enumerate(basis.mode_index):
                fx = (Lx ** -0.5) if a == 0 else np.sqrt(2.0 / Lx) * np.cos(a * np.pi * xs / Lx)
                fy = (Ly ** -0.5) if b == 0 else np.sqrt(2.0 / Ly) * np.cos(b * np.pi * ys / Ly)
                if a > 0:
                    ka = a * np.pi / Lx
                    dfx = -np.sqrt(2.0 / Lx) * ka * np.sin(ka * xs)
                    out[0, r] = np.outer(dfx, fy).ravel()
                if b > 0:
                    kb = b * np.pi / Ly
                    dfy = -np.sqrt(2.0 / Ly) * kb * np.sin(kb * ys)
                    out[1, r] = np.outer(fx, dfy).ravel()
        else:
            raise ValueError("analytic gradients are only defined on intervals/rectangles")
    else:
        for r in range(K):
            g = fd_gradient(basis.functions[r], grid)
            out[:, r, :] = g
    return out


def fd_gradient(values: NDArray, grid: Grid) -> NDArray:
    """(n, N) finite-difference gradient on a structured or polygon mesh.

    Centered second-order differences in the interior; one-sided
    second-order stencils where a neighbor is missing (falling back to
    first-order, then zero, on very thin features).
    """
    idx = grid.index
    if idx is None:
        raise ValueError("finite-difference gradient needs a structured grid index")
    n = grid.domain.n
    N = grid.n_nodes
    out = np.zeros((n, N))
    lookup = {tuple(k): i for i, k in enumerate(map(tuple, idx))}
    steps = [(1, 0), (0, 1)][:n] if n == 2 else [(1,)]
    for axis in range(n):
        h = grid.spacing[axis]
        for i, key in enumerate(map(tuple, idx)):
            def nb(offset: int):
                k = list(key)
                k[axis] += offset
                return lookup.get(tuple(k))
            ip, im = nb(+1), nb(-1)
            if ip is not None and im is not None:
                out[axis, i] = (values[ip] - values[im]) / (2 * h)
            elif ip is not None:
                ipp = nb(+2)
                if ipp is not None:
                    out[axis, i] = (-3 * values[i] + 4 * values[ip] - values[ipp]) / (2 * h)
                else:
                    out[axis, i] = (values[ip] - values[i]) / h
            elif im is not None:
                imm = nb(-2)
                if imm is not None:
                    out[axis, i] = (3 * values[i] - 4 * values[im] + values[imm]) / (2 * h)
                else:
                    out[axis, i] = (values[i] - values[im]) / h
    return out


# ---------------------------------------------------------------------------
# Norms and Weyl estimates


def lp_norm(f, p: float, grid: Grid | None = None) -> float:
    """Quadrature L^p norm: (sum w |f|^p)^(1/p); p = inf gives the max.

    Accepts a GridFunction-like object (attributes .values/.grid) or a bare
    array with an explicit grid.  Rejects p < 1.
    """
    values = getattr(f, "values", None)
    if values is None:
        values = np.asarray(f)
        if grid is None:
            raise ValueError("bare arrays need an explicit grid")
    else:
        grid = f.grid
    if np.isinf(p):
        return float(np.max(np.abs(values)))
    if p < 1:
        raise ValueError(f"p={p} is not a norm exponent (need p >= 1)")
    w = grid.weights
    return float(np.sum(w * np.abs(values) ** p) ** (1.0 / p))


def weyl_count_estimate(domain: Domain, lam: float) -> float:
    """Leading-order Weyl count of eigenvalues <= lam."""
    if domain.n == 1:
        return domain.lengths[0] / np.pi * np.sqrt(max(lam, 0.0))
    return domain.volume / (4 * np.pi) * max(lam, 0.0)


def weyl_eigenvalue_estimate(domain: Domain, k: NDArray) -> NDArray:
    """Inverse of the leading-order Weyl count: estimated lambda_k.

    Used to bound symbol tails over unresolved modes.  The estimate
    undershoots true Neumann eigenvalues (the boundary term is positive),
    which makes the resulting tail bounds conservative for decaying
    symbols.
    """
    k = np.asarray(k, dtype=float)
    if domain.n == 1:
        L = domain.lengths[0]
        return ((k - 1) * np.pi / L) ** 2
    return 4 * np.pi * (k - 1) / domain.volume


# ---------------------------------------------------------------------------
# Serialization (bit-exact round trip)


def _encode_array(a: NDArray) -> dict:
    a = np.ascontiguousarray(a)
    return {
        "dtype": str(a.dtype),
        "shape": list(a.shape),
        "data": base64.b64encode(a.tobytes()).decode("ascii"),
    }


def _decode_array(d: dict) -> NDArray:
    raw = base64.b64decode(d["data"])
    return np.frombuffer(raw, dtype=np.dtype(d["dtype"])).reshape(d["shape"]).copy()


def save_basis(basis: EigenBasis, path: str) -> None:
    """Write a self-describing JSON file; float arrays are raw little-endian
    bytes in base64, so load_basis(save_basis(b)) reproduces b bit for bit
    and rebuilding with the same inputs rewrites the same bytes."""
    dom = basis.domain
    payload = {
        "format": "nbesov-eigenbasis/1",
        "domain": {
            "kind": dom.kind,
            "lengths": list(dom.lengths),
            "volume": dom.volume,
            "cells": [list(c) for c in dom.cells],
        },
        "grid": {
            "spacing": list(basis.grid.spacing),
            "shape": list(basis.grid.shape) if basis.grid.shape else None,
            "points": _encode_array(basis.grid.points),
            "weights": _encode_array(basis.grid.weights),
            "index": _encode_array(basis.grid.index) if basis.grid.index is not None else None,
        },
        "kind": basis.kind,
        "K": basis.K,
        "eigenvalues": _encode_array(basis.eigenvalues),
        "functions": _encode_array(basis.functions),
        "mode_index": [list(m) if isinstance(m, tuple) else m for m in basis.mode_index],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, separators=(",", ":"))


def load_basis(path: str) -> EigenBasis:
    with open(path) as fh:
        payload = json.load(fh)
    if payload.get("format") != "nbesov-eigenbasis/1":
        raise ValueError(f"{path} is not an eigenbasis file")
    d = payload["domain"]
    dom = Domain(
        kind=d["kind"],
        n=len(d["lengths"]),
        lengths=tuple(d["lengths"]),
        volume=d["volume"],
        diameter=float(np.linalg.norm(d["lengths"])) if len(d["lengths"]) > 1 else d["lengths"][0],
        cells=tuple(tuple(c) for c in d["cells"]),
    )
    g = payload["grid"]
    grid = Grid(
        domain=dom,
        points=_decode_array(g["points"]),
        weights=_decode_array(g["weights"]),
        spacing=tuple(g["spacing"]),
        index=_decode_array(g["index"]) if g["index"] is not None else None,
        shape=tuple(g["shape"]) if g["shape"] else None,
    )
    mode_index = [tuple(m) if isinstance(m, list) else m for m in payload["mode_index"]]
    return EigenBasis(
        grid=grid,
        eigenvalues=_decode_array(payload["eigenvalues"]),
        functions=_decode_array(payload["functions"]),
        kind=payload["kind"],
        mode_index=mode_index,
    )
