"""
interior_point.py

Primal-dual interior-point solver for block-diagonal SDPs with linear rows, equalities and bounds.

The problem is put in conic form (minimize c^T x subject to G x + s = h, A x = b, s in K) and solved through
a homogeneous self-dual embedding with Nesterov-Todd scaling and Mehrotra predictor-corrector steps. The
embedding yields certificates when the problem is infeasible or unbounded. Linear algebra is dense and
blocks are small, so the reduced KKT system is formed explicitly, equilibrated and factored by LU, with a
least-squares fallback when the factorization breaks down.
"""

# Standard Library Imports
import time
from typing import Callable, List, Optional, Tuple

# Third-Party Library Imports
import numpy as np
import scipy.linalg

# Local Application Imports
from src.common import SolverSettings, SolveStatus, logger

from .presolve import PresolveResult, presolve
from .problem import DualVariables, SDPProblem, SDPSolution, solution_from_point

KKTSolver = Callable[[np.ndarray, np.ndarray, "_ConeVector"], Tuple[np.ndarray, np.ndarray, "_ConeVector"]]

KKT_REGULARIZATION = 1e-13
KKT_REFINEMENT_STEPS = 5


class _ConeVector:
    """Element of R^p x S^d1 x ... x S^dk with the trace inner product."""

    __slots__ = ("lp", "mats")

    def __init__(self, lp: np.ndarray, mats: List[np.ndarray]):
        self.lp = lp
        self.mats = mats

    def __add__(self, other: "_ConeVector") -> "_ConeVector":
        return _ConeVector(self.lp + other.lp, [a + b for a, b in zip(self.mats, other.mats)])

    def __sub__(self, other: "_ConeVector") -> "_ConeVector":
        return _ConeVector(self.lp - other.lp, [a - b for a, b in zip(self.mats, other.mats)])

    def __mul__(self, alpha: float) -> "_ConeVector":
        return _ConeVector(alpha * self.lp, [alpha * a for a in self.mats])

    __rmul__ = __mul__

    def dot(self, other: "_ConeVector") -> float:
        total = float(self.lp @ other.lp)
        for a, b in zip(self.mats, other.mats):
            total += float(np.sum(a * b))
        return total

    def max_abs(self) -> float:
        values = [float(np.max(np.abs(self.lp), initial=0.0))]
        values.extend(float(np.max(np.abs(a), initial=0.0)) for a in self.mats)
        return max(values)


class _ConicData:
    """Conic form of an SDPProblem: G x = [-lp rows; bound rows; -sum_i x_i F_i per block]."""

    def __init__(self, problem: SDPProblem):
        m = problem.num_vars
        self.m = m
        self.c = problem.c
        self.a = problem.eq_matrix.toarray()
        self.b = problem.eq_rhs
        self.num_lp_rows = problem.lp_matrix.shape[0]
        self.finite_lower = np.flatnonzero(np.isfinite(problem.lower))
        self.finite_upper = np.flatnonzero(np.isfinite(problem.upper))

        lower_rows = np.zeros((len(self.finite_lower), m))
        lower_rows[np.arange(len(self.finite_lower)), self.finite_lower] = -1.0
        upper_rows = np.zeros((len(self.finite_upper), m))
        upper_rows[np.arange(len(self.finite_upper)), self.finite_upper] = 1.0
        self.g_lp = np.vstack([-problem.lp_matrix.toarray(), lower_rows, upper_rows])
        self.h_lp = np.concatenate(
            [problem.lp_offset, -problem.lower[self.finite_lower], problem.upper[self.finite_upper]]
        )

        self.dims = [block.dim for block in problem.blocks]
        self.used = [block.used_variables() for block in problem.blocks]
        self.f = [
            block.coefficients[:, used].toarray().T.reshape(len(used), block.dim, block.dim)
            for block, used in zip(problem.blocks, self.used)
        ]
        self.h = _ConeVector(self.h_lp.copy(), [block.f0.copy() for block in problem.blocks])

    @property
    def degree(self) -> int:
        return self.g_lp.shape[0] + sum(self.dims)

    def identity(self) -> _ConeVector:
        return _ConeVector(np.ones(self.g_lp.shape[0]), [np.eye(d) for d in self.dims])

    def apply_g(self, x: np.ndarray) -> _ConeVector:
        mats = [-np.tensordot(x[used], f, axes=1) for used, f in zip(self.used, self.f)]
        return _ConeVector(self.g_lp @ x, mats)

    def apply_gt(self, z: _ConeVector) -> np.ndarray:
        out = self.g_lp.T @ z.lp
        for used, f, mat in zip(self.used, self.f, z.mats):
            out[used] -= np.tensordot(f, mat, axes=([1, 2], [0, 1]))
        return out


class _Scaling:
    """
    Nesterov-Todd scaling W with W z = W^{-T} s = lambda.

    The scaling is carried from one iterate to the next through the factors of the scaled step, so s and z are
    never refactored once they approach the boundary of the cone.
    """

    def __init__(
        self,
        w: np.ndarray,
        lam_lp: np.ndarray,
        r: List[np.ndarray],
        rinv: List[np.ndarray],
        lam_mats: List[np.ndarray],
    ):
        self.w = w
        self.lam_lp = lam_lp
        self.r = r
        self.rinv = rinv
        self.lam_mats = lam_mats

    @classmethod
    def identity(cls, data: "_ConicData") -> "_Scaling":
        """Scaling at s = z = e."""
        p = data.g_lp.shape[0]
        return cls(
            np.ones(p),
            np.ones(p),
            [np.eye(d) for d in data.dims],
            [np.eye(d) for d in data.dims],
            [np.ones(d) for d in data.dims],
        )

    def updated(
        self, ds_scaled: _ConeVector, dz_scaled: _ConeVector, alpha: float
    ) -> Tuple["_Scaling", _ConeVector, _ConeVector]:
        """
        Scaling at the next iterate s + alpha * ds, z + alpha * dz, together with that iterate.

        Raises:
            np.linalg.LinAlgError: If the step leaves the interior of the cone.
        """
        s_lp = self.lam_lp + alpha * ds_scaled.lp
        z_lp = self.lam_lp + alpha * dz_scaled.lp
        if np.any(s_lp <= 0) or np.any(z_lp <= 0):
            raise np.linalg.LinAlgError("Step leaves the linear cone.")
        s = _ConeVector(self.w * s_lp, [])
        z = _ConeVector(z_lp / self.w, [])
        r_next: List[np.ndarray] = []
        rinv_next: List[np.ndarray] = []
        lam_next: List[np.ndarray] = []
        for r, rinv, lam, ds, dz in zip(self.r, self.rinv, self.lam_mats, ds_scaled.mats, dz_scaled.mats):
            l1 = _shifted_factor(lam, ds, alpha)
            l2 = _shifted_factor(lam, dz, alpha)
            u, lam_new, vt = np.linalg.svd(l2.T @ l1)
            if not lam_new[-1] > 0:
                raise np.linalg.LinAlgError("Scaling point is singular.")
            root = np.sqrt(lam_new)
            r_l1 = r @ l1
            rinv_l2 = rinv.T @ l2
            r_next.append((r_l1 @ vt.T) / root)
            rinv_next.append((u.T @ rinv_l2.T) / root[:, None])
            lam_next.append(lam_new)
            s.mats.append(r_l1 @ r_l1.T)
            z.mats.append(rinv_l2 @ rinv_l2.T)
        scaling = _Scaling(self.w * np.sqrt(s_lp / z_lp), np.sqrt(s_lp * z_lp), r_next, rinv_next, lam_next)
        return scaling, s, z

    def apply_w(self, u: _ConeVector) -> _ConeVector:
        return _ConeVector(self.w * u.lp, [r.T @ m @ r for r, m in zip(self.r, u.mats)])

    def apply_wt(self, u: _ConeVector) -> _ConeVector:
        return _ConeVector(self.w * u.lp, [r @ m @ r.T for r, m in zip(self.r, u.mats)])

    def apply_wtw_inv(self, u: _ConeVector) -> _ConeVector:
        mats = []
        for ri, m in zip(self.rinv, u.mats):
            winv = ri.T @ ri
            mats.append(winv @ m @ winv)
        return _ConeVector(u.lp / self.w**2, mats)

    def lam_square(self) -> _ConeVector:
        return _ConeVector(self.lam_lp**2, [np.diag(lam**2) for lam in self.lam_mats])

    def lam_divide(self, d: _ConeVector) -> _ConeVector:
        """Solve lambda o u = d for u (o the Jordan product)."""
        mats = [2.0 * m / (lam[:, None] + lam[None, :]) for lam, m in zip(self.lam_mats, d.mats)]
        return _ConeVector(d.lp / self.lam_lp, mats)

    def max_step(self, direction: _ConeVector) -> float:
        """Largest alpha with lambda + alpha * direction in the cone."""
        alpha = np.inf
        negative = direction.lp < 0
        if np.any(negative):
            alpha = min(alpha, float(np.min(-self.lam_lp[negative] / direction.lp[negative])))
        for lam, m in zip(self.lam_mats, direction.mats):
            root = np.sqrt(lam)
            smallest = float(np.linalg.eigvalsh(m / np.outer(root, root))[0])
            if smallest < 0:
                alpha = min(alpha, -1.0 / smallest)
        return alpha


def _shifted_factor(lam: np.ndarray, step: np.ndarray, alpha: float) -> np.ndarray:
    """Factor L with L L^T = diag(lam) + alpha * step, taken on the lambda-normalized matrix."""
    root = np.sqrt(lam)
    normalized = (step + step.T) / (2.0 * np.outer(root, root))
    return root[:, None] * np.linalg.cholesky(np.eye(len(lam)) + alpha * normalized)


def _jordan(a: _ConeVector, b: _ConeVector) -> _ConeVector:
    return _ConeVector(a.lp * b.lp, [(x @ y + y @ x) / 2.0 for x, y in zip(a.mats, b.mats)])


def _equilibration(h_matrix: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Diagonal scaling giving H a unit diagonal and the rows of A D unit norm."""
    diag = np.diag(h_matrix)
    d = np.ones(len(diag))
    positive = diag > 0
    d[positive] = 1.0 / np.sqrt(diag[positive])
    norms = np.linalg.norm(a * d[None, :], axis=1)
    e = np.ones(len(norms))
    e[norms > 0] = 1.0 / norms[norms > 0]
    return np.concatenate([d, e])


def _kkt_solver(data: _ConicData, scaling: _Scaling) -> KKTSolver:
    """
    Factor [[H, A^T], [A, 0]] with H = G^T (W^T W)^{-1} G and return a solver for

        A^T uy + G^T uz = bx,  A ux = by,  G ux - W^T W uz = bz.

    The system is equilibrated and lightly regularized before the LU factorization, and iterative
    refinement runs against the exact system. A least-squares solve takes over when the factorization
    is singular or yields non-finite values.
    """
    m = data.m
    h_matrix = data.g_lp.T @ (data.g_lp / scaling.w[:, None] ** 2)
    for used, f, rinv in zip(data.used, data.f, scaling.rinv):
        if len(used) == 0:
            continue
        t = (rinv @ f @ rinv.T).reshape(len(used), -1)
        h_matrix[np.ix_(used, used)] += t @ t.T

    q = data.a.shape[0]
    kkt = np.zeros((m + q, m + q))
    kkt[:m, :m] = h_matrix
    kkt[:m, m:] = data.a.T
    kkt[m:, :m] = data.a
    sv = _equilibration(h_matrix, data.a)
    scaled = kkt * np.outer(sv, sv)
    if not np.all(np.isfinite(scaled)):
        raise np.linalg.LinAlgError("KKT system has non-finite entries.")
    regularized = scaled.copy()
    regularized[:m, :m] += KKT_REGULARIZATION * np.eye(m)
    regularized[m:, m:] -= KKT_REGULARIZATION * np.eye(q)
    lu, piv = scipy.linalg.lu_factor(regularized, check_finite=False)
    pivots = np.abs(np.diag(lu))
    factored = bool(np.all(np.isfinite(pivots)) and np.min(pivots, initial=1.0) > 0)
    if not factored:
        logger.debug("KKT factorization is singular; using least squares.")

    def base_solve(rhs: np.ndarray) -> np.ndarray:
        if factored:
            sol = sv * scipy.linalg.lu_solve((lu, piv), sv * rhs, check_finite=False)
            if np.all(np.isfinite(sol)):
                return sol
        return sv * scipy.linalg.lstsq(scaled, sv * rhs)[0]

    def solve(bx: np.ndarray, by: np.ndarray, bz: _ConeVector) -> Tuple[np.ndarray, np.ndarray, _ConeVector]:
        rhs = np.concatenate([bx + data.apply_gt(scaling.apply_wtw_inv(bz)), by])
        sol = base_solve(rhs)
        target = 1e-14 * (1.0 + float(np.max(np.abs(rhs), initial=0.0)))
        for _ in range(KKT_REFINEMENT_STEPS):
            residual = rhs - kkt @ sol
            if float(np.max(np.abs(residual), initial=0.0)) <= target:
                break
            sol = sol + base_solve(residual)
        ux, uy = sol[:m], sol[m:]
        uz = scaling.apply_wtw_inv(data.apply_g(ux) - bz)
        return ux, uy, uz

    return solve


def _reduced_duals(data: _ConicData, z: _ConeVector, y: np.ndarray, tau: float) -> DualVariables:
    lp = z.lp / tau
    p = data.num_lp_rows
    lower = np.zeros(data.m)
    upper = np.zeros(data.m)
    lower[data.finite_lower] = lp[p : p + len(data.finite_lower)]
    upper[data.finite_upper] = lp[p + len(data.finite_lower) :]
    return DualVariables(
        blocks=tuple(mat / tau for mat in z.mats),
        lp=lp[:p],
        eq=y / tau,
        lower=lower,
        upper=upper,
    )


def _within(solution: SDPSolution, tol: float) -> bool:
    primal, dual, gap = solution.residuals
    return primal <= tol and dual <= tol and gap <= tol


def solve(problem: SDPProblem, settings: Optional[SolverSettings] = None) -> SDPSolution:
    """
    Solve an SDP with the embedded interior-point method.

    Args:
        problem (SDPProblem): Problem to solve.
        settings (Optional[SolverSettings]): Tolerances and limits; defaults if omitted.

    Returns:
        SDPSolution: Status, point, duals and residuals recomputed on `problem`. For `infeasible` and
            `unbounded` the point is NaN and `certificate` holds the normalized ray.
    """
    settings = settings or SolverSettings()
    started = time.perf_counter()
    pre = presolve(problem)
    if pre.infeasible:
        return solution_from_point(problem, np.full(problem.num_vars, np.nan), "infeasible")

    data = _ConicData(pre.reduced)
    tol = settings.tol
    m, q = data.m, data.a.shape[0]
    x = np.zeros(m)
    y = np.zeros(q)
    s = data.identity()
    z = data.identity()
    tau, kappa = 1.0, 1.0
    e = data.identity()
    scaling = _Scaling.identity(data)
    h = data.h
    c, b = data.c, data.b
    scale_p = 1.0 + max(float(np.max(np.abs(b), initial=0.0)), h.max_abs())
    scale_d = 1.0 + float(np.max(np.abs(c), initial=0.0))

    status: Optional[SolveStatus] = None
    certificate: Optional[np.ndarray] = None
    iteration = 0
    for iteration in range(1, settings.max_iter + 1):
        gx = data.apply_g(x)
        aty_gtz = data.a.T @ y + data.apply_gt(z)
        rx = aty_gtz + c * tau
        ry = b * tau - data.a @ x
        rz = s + gx - h * tau
        rt = kappa + c @ x + b @ y + h.dot(z)

        pcost = float(c @ x) / tau
        dcost = -(h.dot(z) + float(b @ y)) / tau
        pres = max(float(np.max(np.abs(ry), initial=0.0)), rz.max_abs()) / tau / scale_p
        dres = float(np.max(np.abs(rx), initial=0.0)) / tau / scale_d
        gap = max(s.dot(z) / tau**2, abs(pcost - dcost)) / (1.0 + abs(pcost))
        logger.debug(
            f"IPM {iteration:3d}: pcost {pcost: .10e} dcost {dcost: .10e} "
            f"pres {pres:.2e} dres {dres:.2e} gap {gap:.2e} tau {tau:.2e} kappa {kappa:.2e}"
        )

        if pres <= tol and dres <= tol and gap <= tol:
            candidate = _candidate(pre, data, x, y, z, tau, iteration, started)
            if _within(candidate, tol):
                status = "optimal"
                break

        if settings.detect_infeasibility and kappa > tau:
            hz_by = h.dot(z) + float(b @ y)
            if hz_by < 0 and float(np.max(np.abs(aty_gtz), initial=0.0)) / -hz_by <= tol:
                status = "infeasible"
                certificate = np.concatenate([y, z.lp, *(mat.ravel() for mat in z.mats)]) / -hz_by
                break
            cx = float(c @ x)
            if cx < 0 and max(float(np.max(np.abs(data.a @ x), initial=0.0)), (s + gx).max_abs()) / -cx <= tol:
                status = "unbounded"
                certificate = x / -cx
                break

        try:
            kkt = _kkt_solver(data, scaling)
            mu = (s.dot(z) + tau * kappa) / (data.degree + 1)
            qx, qy, qz = kkt(-c, b, h)
            q_denominator_base = -(c @ qx) - (b @ qy) - h.dot(qz)

            def direction(eta: float, ds_rhs: _ConeVector, dk_rhs: float) -> Tuple:
                u = scaling.lam_divide(ds_rhs)
                bz = rz * -eta - scaling.apply_wt(u)
                px, py, pz = kkt(-eta * rx, eta * ry, bz)
                dtau = (eta * rt + dk_rhs / tau + c @ px + b @ py + h.dot(pz)) / (kappa / tau + q_denominator_base)
                dx = px + dtau * qx
                dy = py + dtau * qy
                dz_scaled = scaling.apply_w(pz + qz * dtau)
                ds_scaled = u - dz_scaled
                dkappa = (dk_rhs - kappa * dtau) / tau
                return dx, dy, dtau, dkappa, ds_scaled, dz_scaled

            def step_limit(ds_scaled: _ConeVector, dz_scaled: _ConeVector, dtau: float, dkappa: float) -> float:
                alpha = min(scaling.max_step(ds_scaled), scaling.max_step(dz_scaled))
                if dtau < 0:
                    alpha = min(alpha, -tau / dtau)
                if dkappa < 0:
                    alpha = min(alpha, -kappa / dkappa)
                return alpha

            affine = direction(1.0, scaling.lam_square() * -1.0, -tau * kappa)
            alpha_aff = min(1.0, step_limit(affine[4], affine[5], affine[2], affine[3]))
            sigma = (1.0 - alpha_aff) ** 3
            ds_rhs = scaling.lam_square() * -1.0 - _jordan(affine[4], affine[5]) + e * (sigma * mu)
            dk_rhs = -tau * kappa - affine[2] * affine[3] + sigma * mu
            dx, dy, dtau, dkappa, ds_scaled, dz_scaled = direction(1.0 - sigma, ds_rhs, dk_rhs)
            alpha = min(1.0, settings.step_fraction * step_limit(ds_scaled, dz_scaled, dtau, dkappa))
            if not np.isfinite(alpha) or alpha < 1e-12:
                logger.debug(f"IPM stalled at iteration {iteration} (step {alpha:.1e}).")
                break
            scaling, s, z = scaling.updated(ds_scaled, dz_scaled, alpha)
        except (np.linalg.LinAlgError, ValueError) as e_lin:
            logger.debug(f"IPM stopped at iteration {iteration}: {e_lin}")
            break

        x = x + alpha * dx
        y = y + alpha * dy
        tau = tau + alpha * dtau
        kappa = kappa + alpha * dkappa

    elapsed = time.perf_counter() - started
    if status in ("infeasible", "unbounded"):
        logger.info(f"SDP {status} after {iteration} iterations ({elapsed:.2f}s).")
        return solution_from_point(
            problem, np.full(problem.num_vars, np.nan), status, None, iteration, elapsed, certificate
        )

    candidate = _candidate(pre, data, x, y, z, tau, iteration, started)
    if status == "optimal":
        return candidate
    if _within(candidate, settings.near_optimal_factor * tol):
        final_status: SolveStatus = "near_optimal"
        logger.warning(f"SDP solve stopped at iteration {iteration} with residuals {candidate.residuals}; near optimal.")
    elif iteration >= settings.max_iter:
        final_status = "max_iter"
    else:
        final_status = "numerical_failure"
    return solution_from_point(
        problem, candidate.y, final_status, candidate.duals, iteration, time.perf_counter() - started
    )


def _candidate(
    pre: PresolveResult,
    data: _ConicData,
    x: np.ndarray,
    y: np.ndarray,
    z: _ConeVector,
    tau: float,
    iteration: int,
    started: float,
) -> SDPSolution:
    duals = pre.restore_duals(_reduced_duals(data, z, y, tau))
    return solution_from_point(pre.original, x / tau, "optimal", duals, iteration, time.perf_counter() - started)
