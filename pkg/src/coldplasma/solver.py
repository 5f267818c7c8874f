"""Weighted spaces and the closed Dirichlet problem for (K u_x)_x + u_yy = f.

Discretization: Q1 elements on the grid cells whose four corners lie in the
closed domain, with zero extension outside. The weak equation
-int (K u_x xi_x + u_y xi_y) = (f, xi) is solved in the minimum-residual
sense: u_h minimizes the discrete H^-1(K) norm of the weak residual,

    |B u + F|^2_{G_t^-1},

where B and G_t are the signed stiffness and Gram matrices on the test
space. The test space is Q1 on the same cells refined ``test_refinement``
times (nested, so it contains the trial space); refinement 1 gives the
square system with B = A.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spl
from scipy import ndimage

from .errors import ConvergenceError, GeometryError, UniquenessFailure
from .grids import Field, Grid, make_grid

_G2 = np.array([-1.0, 1.0]) / math.sqrt(3.0)
_W2 = np.array([1.0, 1.0])
_G3 = np.array([-math.sqrt(0.6), 0.0, math.sqrt(0.6)])
_W3 = np.array([5.0, 8.0, 5.0]) / 9.0
_LOC = ((0, 0), (1, 0), (0, 1), (1, 1))


def _shape(xi, eta, h):
    N = np.array([(1 - xi) * (1 - eta), xi * (1 - eta), (1 - xi) * eta, xi * eta])
    dNx = np.array([-(1 - eta), (1 - eta), -eta, eta]) / h
    dNy = np.array([-(1 - xi), -xi, (1 - xi), xi]) / h
    return N, dNx, dNy


@dataclass
class Mesh:
    """Active cells and DOF numbering on a node grid (x0 + i h, y0 + j h)."""
    x0: float
    y0: float
    h: float
    nx: int
    ny: int
    cells: np.ndarray          # (nx-1, ny-1) bool
    dof_index: np.ndarray      # (nx, ny) int, -1 for non-DOF nodes

    @property
    def dof_mask(self):
        return self.dof_index >= 0

    @property
    def n(self):
        return int(self.dof_mask.sum())

    @classmethod
    def from_cells(cls, x0, y0, h, cells):
        nx, ny = cells.shape[0] + 1, cells.shape[1] + 1
        c = np.zeros((nx + 1, ny + 1), dtype=bool)
        c[1:-1, 1:-1] = cells
        dof = c[:-1, :-1] & c[1:, :-1] & c[:-1, 1:] & c[1:, 1:]
        idx = -np.ones((nx, ny), dtype=np.int64)
        idx[dof] = np.arange(int(dof.sum()))
        return cls(x0, y0, h, nx, ny, cells, idx)

    def cell_corners(self):
        ci, cj = np.nonzero(self.cells)
        g = np.stack([self.dof_index[ci + a, cj + b] for a, b in _LOC], axis=1)
        return ci, cj, g

    def assemble(self, tc):
        """Signed stiffness A, Gram G, weighted mass M_w and plain mass M_I."""
        ci, cj, g = self.cell_corners()
        h = self.h
        nc = len(ci)
        Ae = np.zeros((nc, 4, 4))
        Ge = np.zeros_like(Ae)
        Me = np.zeros_like(Ae)
        Ie = np.zeros_like(Ae)
        w = h * h / 4
        for gx in _G2:
            for gy in _G2:
                xi, eta = (gx + 1) / 2, (gy + 1) / 2
                N, dNx, dNy = _shape(xi, eta, h)
                K = tc.K(self.x0 + (ci + xi) * h, self.y0 + (cj + eta) * h)
                xx = np.outer(dNx, dNx)[None]
                yy = np.outer(dNy, dNy)[None]
                nn = np.outer(N, N)[None]
                Ae += w * (K[:, None, None] * xx + yy)
                Ge += w * (np.abs(K)[:, None, None] * xx + yy)
                Me += w * np.abs(K)[:, None, None] * nn
                Ie += w * nn
        R = np.repeat(g, 4, axis=1).ravel()
        C = np.tile(g, (1, 4)).ravel()
        keep = (R >= 0) & (C >= 0)
        n = self.n

        def mk(E):
            m = sp.csr_matrix((E.reshape(-1)[keep], (R[keep], C[keep])), shape=(n, n))
            return 0.5 * (m + m.T)

        return mk(Ae), mk(Ge), mk(Me), mk(Ie)

    def quadrature(self, order=3):
        """Points and weights of a tensor Gauss rule on every active cell,
        with the (cell, node-shape) values needed for load vectors."""
        gq, wq = (_G3, _W3) if order == 3 else (_G2, _W2)
        ci, cj, g = self.cell_corners()
        h = self.h
        X, Y, W, Nv = [], [], [], []
        for a, gx in enumerate(gq):
            for b, gy in enumerate(gq):
                xi, eta = (gx + 1) / 2, (gy + 1) / 2
                N, _, _ = _shape(xi, eta, h)
                X.append(self.x0 + (ci + xi) * h)
                Y.append(self.y0 + (cj + eta) * h)
                W.append(np.full(len(ci), wq[a] * wq[b] * h * h / 4))
                Nv.append(np.tile(N, (len(ci), 1)))
        return (np.stack(X, 1), np.stack(Y, 1), np.stack(W, 1), np.stack(Nv, 1), g)

    def load(self, f, order=3):
        """(f, phi_i) for a callable f(x, y)."""
        X, Y, W, Nv, g = self.quadrature(order)
        fv = np.asarray(f(X, Y), dtype=float) * W      # (nc, nq)
        contrib = np.einsum("cq,cqk->ck", fv, Nv)
        out = np.zeros(self.n)
        k = g >= 0
        np.add.at(out, g[k], contrib[k])
        return out

    def evaluate(self, u, X, Y, ci=None, cj=None):
        """Q1 interpolant of the DOF vector u at points given in cell coordinates."""
        U = np.zeros((self.nx, self.ny))
        U[self.dof_mask] = u
        fx = (X - self.x0) / self.h
        fy = (Y - self.y0) / self.h
        i = np.clip(np.floor(fx).astype(np.int64), 0, self.nx - 2) if ci is None else ci
        j = np.clip(np.floor(fy).astype(np.int64), 0, self.ny - 2) if cj is None else cj
        tx, ty = fx - i, fy - j
        return ((1 - tx) * (1 - ty) * U[i, j] + tx * (1 - ty) * U[i + 1, j]
                + (1 - tx) * ty * U[i, j + 1] + tx * ty * U[i + 1, j + 1])

    def refine(self, r):
        cells = np.kron(self.cells, np.ones((r, r), dtype=bool))
        return Mesh.from_cells(self.x0, self.y0, self.h / r, cells)

    def prolongation(self, fine, r):
        """Matrix taking coarse DOF values to fine DOF values (bilinear)."""
        I, J = np.nonzero(fine.dof_mask)
        fi = fine.dof_index[I, J]
        i0, j0 = I // r, J // r
        ti, tj = (I % r) / r, (J % r) / r
        rows, cols, vals = [], [], []
        for a, b, w in ((0, 0, (1 - ti) * (1 - tj)), (1, 0, ti * (1 - tj)),
                        (0, 1, (1 - ti) * tj), (1, 1, ti * tj)):
            ii = np.minimum(i0 + a, self.nx - 1)
            jj = np.minimum(j0 + b, self.ny - 1)
            c = self.dof_index[ii, jj]
            k = (c >= 0) & (w > 0)
            rows.append(fi[k])
            cols.append(c[k])
            vals.append(w[k])
        return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                             shape=(fine.n, self.n))


@dataclass
class DiscreteProblem:
    dom: object
    tc: object
    h: float
    grid: Grid
    mesh: Mesh
    A: sp.csr_matrix
    G: sp.csr_matrix
    M_w: sp.csr_matrix
    M_I: sp.csr_matrix
    test_mesh: Mesh
    B: sp.csr_matrix
    G_t: sp.csr_matrix
    P: sp.csr_matrix
    test_refinement: int
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def n(self):
        return self.mesh.n

    @property
    def m(self):
        return self.test_mesh.n

    def kkt(self):
        """Sparse LU of [[G_t, -B], [B^T, 0]] (cached)."""
        if "kkt" not in self._cache:
            K = sp.bmat([[self.G_t, -self.B], [self.B.T, None]]).tocsc()
            try:
                self._cache["kkt"] = spl.splu(K)
            except RuntimeError as exc:
                raise UniquenessFailure(f"saddle-point system is singular: {exc}",
                                        _kernel_witness(self)) from exc
        return self._cache["kkt"]

    def G_lu(self):
        if "G" not in self._cache:
            self._cache["G"] = spl.splu(self.G.tocsc())
        return self._cache["G"]

    def Gt_lu(self):
        if "Gt" not in self._cache:
            self._cache["Gt"] = spl.splu(self.G_t.tocsc())
        return self._cache["Gt"]

    def normal_inverse(self, v):
        """Solve (B^T G_t^-1 B) x = v."""
        z = self.kkt().solve(np.concatenate([np.zeros(self.m), v]))
        return z[self.m:]

    def field(self, u):
        vals = np.zeros((self.mesh.nx, self.mesh.ny))
        vals[self.mesh.dof_mask] = u
        return Field(self.grid, vals, self.mesh.dof_mask.copy())

    def nodes(self):
        X, Y = self.grid.mesh()
        m = self.mesh.dof_mask
        return X[m], Y[m]


def _kernel_witness(dp):
    if dp.n > 3000:
        return None
    Bd = dp.B.toarray()
    _, s, vt = np.linalg.svd(Bd)
    return vt[-1]


def assemble(dom, tc, h, test_refinement=2):
    grid = make_grid(dom, h)
    ins = grid.inside
    cells = ins[:-1, :-1] & ins[1:, :-1] & ins[:-1, 1:] & ins[1:, 1:]
    mesh = Mesh.from_cells(grid.x0, grid.y0, h, cells)
    if mesh.n == 0:
        raise GeometryError("mesh has no interior nodes; decrease h")
    _, ncomp = ndimage.label(mesh.dof_mask)
    if ncomp != 1:
        raise GeometryError(f"interior node mask has {ncomp} components; decrease h")
    A, G, M_w, M_I = mesh.assemble(tc)
    r = int(test_refinement)
    if r < 1:
        raise ValueError("test_refinement must be >= 1")
    if r == 1:
        tmesh, B, G_t, P = mesh, A, G, sp.identity(mesh.n, format="csr")
    else:
        tmesh = mesh.refine(r)
        A_f, G_f, _, _ = tmesh.assemble(tc)
        P = mesh.prolongation(tmesh, r)
        B = (A_f @ P).tocsr()
        G_t = G_f
    return DiscreteProblem(dom, tc, h, grid, mesh, A, G, M_w, M_I, tmesh, B, G_t, P, r)


# ---------------------------------------------------------------------------
# forcing data

@dataclass(frozen=True)
class FactoredForcing:
    """f = |K| g with bounded g, the admissible form of data in L2(|K|^-1)."""
    g: object
    tc: object

    def __call__(self, x, y):
        return np.abs(self.tc.K(x, y)) * self.g(x, y)


@dataclass(frozen=True)
class NodalForcing:
    """f given by values on the trial grid nodes, used through its bilinear interpolant."""
    grid: Grid
    values: np.ndarray

    def __call__(self, x, y):
        return self.grid.interpolate(self.values, x, y)


def load_vector(dp, f, space="test"):
    if isinstance(f, np.ndarray) and f.ndim == 1:
        expect = dp.m if space == "test" else dp.n
        if f.shape[0] != expect:
            raise ValueError(f"load vector has length {f.shape[0]}, expected {expect}")
        return f
    mesh = dp.test_mesh if space == "test" else dp.mesh
    return mesh.load(f)


def norms(dp, u=None, w=None, f=None):
    """Weighted norms: L2_wK and H10_K of a DOF vector u; Hneg1_K of a trial
    load vector w; L2_wKinv of factored data f = |K| g."""
    out = {}
    if u is not None:
        out["L2_wK"] = float(math.sqrt(max(u @ (dp.M_w @ u), 0.0)))
        out["H10_K"] = float(math.sqrt(max(u @ (dp.G @ u), 0.0)))
    if w is not None:
        out["Hneg1_K"] = float(math.sqrt(max(w @ dp.G_lu().solve(w), 0.0)))
    if f is not None:
        if not isinstance(f, FactoredForcing):
            raise ValueError("L2_wKinv needs data in factored form f = |K| g")
        X, Y, W, _, _ = dp.mesh.quadrature(3)
        out["L2_wKinv"] = float(math.sqrt(np.sum(W * np.abs(dp.tc.K(X, Y)) * f.g(X, Y) ** 2)))
    return out


# ---------------------------------------------------------------------------
# closed Dirichlet solve

@dataclass
class SolveResult:
    u: np.ndarray
    residual_hneg1: float
    relative_residual: float
    optimality: float
    method: str
    field: Field | None = None

    def to_dict(self):
        return {"residual_Hneg1": self.residual_hneg1,
                "relative_residual": self.relative_residual,
                "normal_equation_residual": self.optimality, "method": self.method}


def _residual_parts(dp, u, F):
    r = dp.B @ u + F
    w = dp.Gt_lu().solve(r)
    res = float(math.sqrt(max(r @ w, 0.0)))
    w0 = dp.Gt_lu().solve(F)
    f_norm = float(math.sqrt(max(F @ w0, 0.0)))
    g0 = np.linalg.norm(dp.B.T @ w0)
    opt = float(np.linalg.norm(dp.B.T @ w) / g0) if g0 > 0 else float(np.linalg.norm(dp.B.T @ w))
    return res, (res / f_norm if f_norm > 0 else 0.0), opt


def solve_closed_dirichlet(dp, f, method="kkt", rtol=1e-13, maxiter=20000):
    """Minimize the discrete H^-1(K) norm of the weak residual.

    ``f`` may be a callable, a FactoredForcing or NodalForcing, or a test-space
    load vector. method "kkt" solves the saddle-point system by sparse LU;
    "cg" runs conjugate gradients on B^T G_t^-1 B u = -B^T G_t^-1 F.
    """
    F = load_vector(dp, f, "test")
    if not np.any(F):
        u = np.zeros(dp.n)
        return SolveResult(u, 0.0, 0.0, 0.0, method, dp.field(u))
    if method == "kkt":
        z = dp.kkt().solve(np.concatenate([F, np.zeros(dp.n)]))
        u = z[dp.m:]
    elif method == "cg":
        lu = dp.Gt_lu()
        N = spl.LinearOperator((dp.n, dp.n), matvec=lambda v: dp.B.T @ lu.solve(dp.B @ v))
        rhs = -(dp.B.T @ lu.solve(F))
        u, info = spl.cg(N, rhs, rtol=rtol, maxiter=maxiter)
        if info != 0:
            raise ConvergenceError(f"CG did not converge (info={info})")
    else:
        raise ValueError(f"unknown method {method!r}")
    res, rel, opt = _residual_parts(dp, u, F)
    return SolveResult(u, res, rel, opt, method, dp.field(u))


def weighted_error(dp, u, u_star):
    """||u_h - u*||_{L2(|K|)} by 3x3 Gauss on the active cells."""
    X, Y, W, _, _ = dp.mesh.quadrature(3)
    uh = dp.mesh.evaluate(u, X, Y)
    e = uh - u_star(X, Y)
    return float(math.sqrt(np.sum(W * np.abs(dp.tc.K(X, Y)) * e * e)))


# ---------------------------------------------------------------------------
# a priori constant and Poincare constant

def _smoothed_trials(dp, n_trials, seed, passes=4, margin=2):
    rng = np.random.default_rng(seed)
    mask = dp.mesh.dof_mask
    cut = ndimage.binary_erosion(mask, iterations=margin)
    k = np.array([[0, 1, 0], [1, 4, 1], [0, 1, 0]], dtype=float) / 8.0
    out = []
    for _ in range(n_trials):
        U = np.where(mask, rng.standard_normal(mask.shape), 0.0)
        for _ in range(passes):
            U = np.where(mask, ndimage.convolve(U, k, mode="constant"), 0.0)
        U = np.where(cut, U, 0.0)
        if not np.any(U):
            raise GeometryError("mesh too coarse for compactly supported trials")
        out.append(U[mask])
    return out


def estimate_lemma1_constant(dp, n_trials=20, seed=0, mode="random", kernel_tol=1e12):
    """sup of ||u||_{L2(|K|)} / ||L u||_{H^-1(K)} over trials or exactly.

    mode "random": smoothed-noise trials vanishing near the mask boundary.
    mode "eig": sqrt of the largest eigenvalue of M_w x = lam (B^T G_t^-1 B) x.
    """
    if mode == "random":
        lu = dp.Gt_lu()
        ratios, trials = [], _smoothed_trials(dp, n_trials, seed)
        for u in trials:
            r = dp.B @ u
            den = math.sqrt(max(r @ lu.solve(r), 0.0))
            num = math.sqrt(max(u @ (dp.M_w @ u), 0.0))
            if den <= num / kernel_tol:
                raise UniquenessFailure("weak operator annihilates a nonzero trial field", u)
            ratios.append(num / den)
        k = int(np.argmax(ratios))
        return {"mode": "random", "max": float(ratios[k]), "mean": float(np.mean(ratios)),
                "ratios": [float(r) for r in ratios], "argmax": trials[k], "n": dp.n}
    if mode == "eig":
        Mw = dp.M_w.tocsc()
        S = spl.LinearOperator((dp.n, dp.n), matvec=lambda v: Mw @ dp.normal_inverse(Mw @ v))
        lam, vec = spl.eigsh(S, k=1, M=Mw, which="LA", tol=1e-8)
        lam = float(lam[0])
        if not np.isfinite(lam) or lam > kernel_tol ** 2:
            raise UniquenessFailure("discrete kernel of the weak operator detected", vec[:, 0])
        return {"mode": "eig", "max": math.sqrt(lam), "lambda_max": lam,
                "argmax": vec[:, 0], "n": dp.n}
    raise ValueError(f"unknown mode {mode!r}")


def estimate_poincare_constant(dp, tol=1e-12, maxiter=1000, shift=0.0):
    """Smallest lambda of G u = lambda M_I u by shifted inverse iteration."""
    Gs = (dp.G - shift * dp.M_I).tocsc()
    lu = spl.splu(Gs)
    rng = np.random.default_rng(0)
    x = np.abs(rng.standard_normal(dp.n)) + 1.0
    lam_old = None
    for it in range(1, maxiter + 1):
        x = lu.solve(dp.M_I @ x)
        x /= math.sqrt(x @ (dp.M_I @ x))
        lam = float(x @ (dp.G @ x))
        if lam_old is not None and abs(lam - lam_old) <= tol * abs(lam):
            return {"lambda": lam, "inverse": 1.0 / lam, "iterations": it}
        lam_old = lam
    raise ConvergenceError(f"inverse iteration did not converge in {maxiter} steps")


def convergence_study(dom, tc, u_star, hs, test_refinement=2):
    """Errors ||u_h - u*||_{L2(|K|)} and residuals per mesh with observed rates.

    ``u_star`` needs ``forcing(tc)`` (e.g. a Bump) or is zero.
    """
    rows = []
    f = u_star.forcing(tc) if hasattr(u_star, "forcing") else (lambda x, y: 0.0 * x)
    for h in hs:
        dp = assemble(dom, tc, h, test_refinement)
        res = solve_closed_dirichlet(dp, f)
        err = weighted_error(dp, res.u, u_star)
        rows.append({"h": float(h), "n_dofs": dp.n, "error_L2K": err,
                     "residual_Hneg1": res.residual_hneg1,
                     "relative_residual": res.relative_residual,
                     "normal_equation_residual": res.optimality})
    for a, b in zip(rows[:-1], rows[1:]):
        if a["error_L2K"] > 0 and b["error_L2K"] > 0:
            b["rate"] = math.log(a["error_L2K"] / b["error_L2K"]) / math.log(a["h"] / b["h"])
        else:
            b["rate"] = None
    return rows
