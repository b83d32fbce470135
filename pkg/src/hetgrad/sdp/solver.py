"""Dense primal-dual interior-point solver for the StandardSdp form.

The method is infeasible-start path following with the symmetrized HKM
search direction and a Mehrotra predictor-corrector step. Inequalities are
carried as a nonnegative slack block next to the single PSD block; free
variables are eliminated through the Schur complement rather than split
into sign-constrained pairs.

A small presolve runs first:

* constraints with no coefficients are checked for consistency and dropped;
* equality constraints of the form <A, G> = 0 with A PSD force G to vanish
  on range(A), so the PSD block is restricted to the complement (these
  constraints are the reason the raw problems have no interior);
* the free vector is re-expressed in an orthonormal basis of the row space
  of its constraint coefficients, which makes the free-variable Schur block
  positive definite (an objective component outside that row space means an
  unbounded problem).

Everything is plain dense NumPy/SciPy; identical inputs give identical
iterates on one platform.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .model import SdpSolution, StandardSdp

__all__ = ["solve"]

_EQ_ZERO_TOL = 1e-12


@dataclass
class _Reduced:
    As: np.ndarray          # (m, n, n) PSD-block coefficients
    Af: np.ndarray          # (m, r) free-block coefficients
    d: np.ndarray           # (m,)
    ineq: np.ndarray        # (m,) bool
    C: np.ndarray           # (n, n)
    c: np.ndarray           # (r,)
    Q: np.ndarray           # (n0, n) PSD-block embedding
    B: np.ndarray           # (nF0, r) free-block embedding
    kept: list              # original indices of surviving constraints
    row_scale: np.ndarray   # norms the kept rows were divided by
    n_orig_constraints: int
    infeasible_row: str | None = None
    unbounded: bool = False


def _is_psd(A, tol):
    if A.size == 0:
        return True
    w = np.linalg.eigvalsh(A)
    return w[0] >= -tol * max(1.0, w[-1], -w[0])


def _implicit_equality_pairs(cons, skip):
    """Inequality pairs whose sum is a PSD quadratic form with cancelling
    free parts and right sides: both are forced tight, and the summed form
    pins more of the Gram kernel."""
    by_key = {}
    for j, con in enumerate(cons):
        if j in skip or con.sense != "<=":
            continue
        by_key.setdefault((con.a + 0.0).tobytes(), []).append(j)
    extra_forcing = []
    tightened = set()
    for j, con in enumerate(cons):
        if j in skip or con.sense != "<=" or j in tightened:
            continue
        for k in by_key.get((-con.a + 0.0).tobytes(), []):
            if k <= j or k in tightened:
                continue
            other = cons[k]
            if abs(con.d + other.d) > _EQ_ZERO_TOL:
                continue
            S = con.A + other.A
            if np.abs(S).max(initial=0.0) == 0.0 or not _is_psd(S, 1e-12):
                continue
            extra_forcing.append(S)
            tightened.update((j, k))
            break
    return extra_forcing, tightened


def _presolve(sdp: StandardSdp) -> _Reduced:
    n0, nF0 = sdp.psd_dim, sdp.free_dim
    cons = sdp.constraints
    scale = max([1.0] + [float(np.abs(c.A).max(initial=0.0)) for c in cons])

    # PSD-zero rows pin part of the Gram kernel ("=" rows are consumed
    # outright; "<=" rows with zero right side are equivalent to them)
    forcing = np.zeros((n0, n0))
    consumed = set()
    for j, con in enumerate(cons):
        if (abs(con.d) <= _EQ_ZERO_TOL
                and (con.a.size == 0 or np.abs(con.a).max(initial=0.0) == 0.0)
                and np.abs(con.A).max(initial=0.0) > 0.0
                and _is_psd(con.A, 1e-12)):
            forcing += con.A
            consumed.add(j)

    pair_forcing, tightened = _implicit_equality_pairs(cons, consumed)
    for S in pair_forcing:
        forcing += S

    if consumed or pair_forcing:
        w, V = np.linalg.eigh(forcing)
        keep = w <= 1e-12 * max(w[-1], 1.0)
        Q = V[:, keep]
    else:
        Q = np.eye(n0)

    # common null space of the objective and every constraint: the PSD
    # variable is unconstrained there (translation-invariant formulations),
    # so restricting to the complement bounds the feasible set without
    # changing the optimal value
    if Q.shape[1]:
        T = (Q.T @ sdp.C @ Q) @ (Q.T @ sdp.C @ Q)
        for j, con in enumerate(cons):
            if j in consumed:
                continue
            Ar = Q.T @ con.A @ Q
            T += Ar @ Ar
        w, V = np.linalg.eigh(T)
        keep = w > 1e-12 * max(float(w[-1]), 1e-300)
        if not np.all(keep):
            Q = Q @ V[:, keep]
    n = Q.shape[1]
    C = Q.T @ sdp.C @ Q

    kept, As_list, d_list, ineq_list, a_rows = [], [], [], [], []
    row_scale = []
    infeasible_row = None
    seen_rows = {}
    for j, con in enumerate(cons):
        if j in consumed:
            continue
        A = Q.T @ con.A @ Q
        a = con.a
        sense = "=" if j in tightened else con.sense
        mag = max(np.abs(A).max(initial=0.0), np.abs(a).max(initial=0.0))
        if mag <= 1e-14 * max(1.0, scale):
            # vacuous row: keep feasibility honest, then drop it
            ok = (abs(con.d) <= 1e-9 if sense == "="
                  else con.d >= -1e-9)
            if not ok:
                infeasible_row = con.label or f"constraint #{j}"
            continue
        # unit row norms balance the Schur system
        rho = np.sqrt(np.tensordot(A, A) + a @ a)
        An, an, dn = 0.5 * (A + A.T) / rho, a / rho, con.d / rho
        # tightened pairs reduce to exact +/- duplicates; keep one copy
        key = (sense, np.round(dn, 12))
        dup = False
        for sgn in (1.0, -1.0) if sense == "=" else (1.0,):
            kk = (sense, np.round(sgn * dn, 12))
            for jj in seen_rows.get(kk, []):
                if (np.abs(sgn * An - As_list[jj]).max(initial=0.0) < 1e-12
                        and np.abs(sgn * an - a_rows[jj]).max(initial=0.0)
                        < 1e-12):
                    dup = True
                    break
            if dup:
                break
        if dup:
            continue
        seen_rows.setdefault(key, []).append(len(kept))
        kept.append(j)
        As_list.append(An)
        a_rows.append(an)
        d_list.append(dn)
        ineq_list.append(sense == "<=")
        row_scale.append(rho)

    m = len(kept)
    if n == 0:
        Q = np.zeros((n0, 1))
        n, C = 1, np.zeros((1, 1))
        As_list = [np.zeros((1, 1)) for _ in range(m)]
    As = (np.stack(As_list) if m else np.zeros((0, n, n)))
    Araw = (np.stack(a_rows) if m else np.zeros((0, nF0)))

    # orthonormal basis of the row space spanned by the free coefficients
    if nF0 and m:
        _, sv, Vt = np.linalg.svd(Araw, full_matrices=False)
        r = int((sv > 1e-12 * max(sv[0] if sv.size else 0.0, 1.0)).sum())
        B = Vt[:r].T
    else:
        B = np.zeros((nF0, 0))
    c_red = B.T @ sdp.c
    unbounded = False
    if nF0:
        resid = sdp.c - B @ c_red
        if np.linalg.norm(resid) > 1e-12 * max(1.0, np.linalg.norm(sdp.c)):
            unbounded = True

    return _Reduced(As, Araw @ B, np.asarray(d_list), np.asarray(ineq_list,
                    dtype=bool), C, c_red, Q, B, kept,
                    np.asarray(row_scale), len(cons), infeasible_row,
                    unbounded)


class _SchurSolver:
    """Cholesky solve of the (possibly rank-deficient) Schur system with an
    escalating diagonal shift and one guarded refinement pass.

    Degenerate active sets make these systems singular at the optimum; a
    tiny relative shift keeps the factorization alive while the refinement
    pass recovers most of the accuracy the shift costs.
    """

    def __init__(self, M):
        self.M = M
        scale = max(float(np.diag(M).max(initial=0.0)), 1e-300)
        shift = 1e-14 * scale
        for _ in range(12):
            try:
                self.factor = sla.cho_factor(
                    M + shift * np.eye(M.shape[0]), lower=True)
                return
            except np.linalg.LinAlgError:
                shift *= 100.0
        raise np.linalg.LinAlgError("Schur system defies factorization")

    def _apply(self, B):
        return sla.cho_solve(self.factor, B)

    def solve(self, B):
        squeeze = B.ndim == 1
        if squeeze:
            B = B[:, None]
        X = self._apply(B)
        R = B - self.M @ X
        X2 = X + self._apply(R)
        if np.linalg.norm(B - self.M @ X2) < np.linalg.norm(R):
            X = X2
        return X[:, 0] if squeeze else X


def _is_pd(X):
    try:
        np.linalg.cholesky(X)
        return True
    except np.linalg.LinAlgError:
        return False


def _max_step_psd(X, dX):
    """Largest t with X + t dX still positive definite (capped at 1)."""
    L = np.linalg.cholesky(X)
    W = sla.solve_triangular(L, dX, lower=True)
    W = sla.solve_triangular(L, W.T, lower=True)
    lam = np.linalg.eigvalsh(0.5 * (W + W.T))[0]
    if lam >= -1e-14:
        return 1.0
    return min(1.0, -1.0 / lam)


def _max_step_vec(v, dv):
    neg = dv < 0
    if not np.any(neg):
        return 1.0
    return min(1.0, float(np.min(-v[neg] / dv[neg])))


def _svec_indices(rho):
    ii, jj = np.triu_indices(rho)
    weights = np.where(ii == jj, 1.0, np.sqrt(2.0))
    return ii, jj, weights


def _svec(S, idx):
    ii, jj, wts = idx
    return S[ii, jj] * wts


def _polish(As, Af, d, ineq, C, c, G, s, F, y, tol_gap, tol_feas):
    """Active-face refinement of a stalled interior-point iterate.

    Guesses the optimal face (range of G, constraints with y >= s), solves
    the face-restricted primal and dual stationarity systems by least
    squares, and returns the refined point only when every optimality check
    passes at the requested tolerances. Several rank thresholds are tried
    because degenerate problems blur the eigenvalue split.
    """
    m, n = As.shape[0], C.shape[0]
    r = c.shape[0]
    wG, VG = np.linalg.eigh(G)
    lam_max = max(float(wG[-1]), 1e-300)
    active = (~ineq) | (y >= s)
    if not np.any(active):
        return None
    act = np.nonzero(active)[0]
    d_scale = 1.0 + np.linalg.norm(d)
    obj_scale = 1.0 + np.linalg.norm(C) + np.linalg.norm(c)

    for thr in (1e-3, 1e-5, 1e-7):
        rho = int((wG > thr * lam_max).sum())
        if rho == 0 or rho == n:
            continue
        U = VG[:, n - rho:]
        idx = _svec_indices(rho)
        nh = len(idx[0])

        # the iterate's eigenbasis is only as accurate as the stall point;
        # alternate with the dual slack's null space to sharpen the face
        def face_solve(U):
            small = np.matmul(U.T[None], np.matmul(As[act], U[None]))
            Ahat = np.column_stack([
                np.stack([_svec(S, idx) for S in small]), Af[act]])
            chat = np.concatenate([_svec(U.T @ C @ U, idx), c])
            x, *_ = np.linalg.lstsq(Ahat, d[act], rcond=None)
            yact, *_ = np.linalg.lstsq(Ahat.T, chat, rcond=None)
            return Ahat, chat, x, yact

        for _ in range(3):
            _, _, _, yact = face_solve(U)
            y_try = np.zeros(m)
            y_try[act] = yact
            Z_try = np.einsum("j,jab->ab", y_try, As) - C
            U = np.linalg.eigh(Z_try)[1][:, :rho]
        Ahat, chat, x, yact = face_solve(U)

        if np.linalg.norm(Ahat @ x - d[act]) > 0.1 * tol_feas * d_scale:
            continue
        if np.linalg.norm(Ahat.T @ yact - chat) > 0.1 * tol_feas * obj_scale:
            continue
        if np.any(yact[ineq[act]] < -1e-9 * (1 + np.abs(yact).max())):
            continue
        yact = np.where(ineq[act], np.maximum(yact, 0.0), yact)

        H = np.zeros((rho, rho))
        ii, jj, wts = idx
        H[ii, jj] = x[:nh] / wts
        H[jj, ii] = x[:nh] / wts
        if nh and np.linalg.eigvalsh(H)[0] < -tol_feas:
            continue
        G_pol = U @ H @ U.T
        F_pol = x[nh:]
        y_pol = np.zeros(m)
        y_pol[act] = yact

        resid = As.reshape(m, -1) @ G_pol.ravel() + Af @ F_pol - d
        viol = max(np.abs(resid[~ineq]).max(initial=0.0),
                   resid[ineq].max(initial=0.0))
        if viol > tol_feas * d_scale:
            continue
        Z_pol = np.einsum("j,jab->ab", y_pol, As) - C
        if np.linalg.eigvalsh(Z_pol)[0] < -tol_feas * obj_scale:
            continue
        if np.linalg.norm(Af.T @ y_pol - c) > tol_feas * obj_scale:
            continue
        P = float(np.tensordot(C, G_pol) + c @ F_pol)
        D = float(d @ y_pol)
        if abs(D - P) / (1.0 + abs(P) + abs(D)) > tol_gap:
            continue
        s_pol = np.where(ineq, d - As.reshape(m, -1) @ G_pol.ravel()
                         - Af @ F_pol, 0.0)
        return G_pol, s_pol, F_pol, y_pol, P, D
    return None


def _result(status, P, D, G, F, y, sdp, iters, msg, history):
    viol, _ = sdp.max_violation(G, F)
    mineig = float(np.linalg.eigvalsh(G)[0]) if G.size else 0.0
    gap = abs(D - P) / (1.0 + abs(P) + abs(D))
    return SdpSolution(status, P, D, G, F, y, viol, mineig, gap, iters, msg,
                       history)


def solve(sdp: StandardSdp, tol_gap=1e-8, tol_feas=1e-8, max_iters=100,
          start=None) -> SdpSolution:
    """Maximize the SDP to the requested tolerances.

    Returns status "optimal" once the relative duality gap is at most
    tol_gap and scaled primal/dual residuals are at most tol_feas;
    "infeasible" when a dual improving ray certifies primal infeasibility;
    "numerical_limit" when the iteration budget or numerical precision is
    exhausted. ``start`` optionally seeds (G, F, y, Z) in original
    coordinates.
    """
    red = _presolve(sdp)
    n0, nF0 = sdp.psd_dim, sdp.free_dim
    if red.infeasible_row is not None:
        return _result("infeasible", -np.inf, np.inf, np.zeros((n0, n0)),
                       np.zeros(nF0), np.zeros(red.n_orig_constraints), sdp, 0,
                       f"inconsistent constraint {red.infeasible_row}", [])
    if red.unbounded:
        return _result("numerical_limit", np.inf, np.inf, np.zeros((n0, n0)),
                       np.zeros(nF0), np.zeros(red.n_orig_constraints), sdp, 0,
                       "objective is unbounded along a free direction", [])

    As, Af, d, ineq = red.As, red.Af, red.d, red.ineq
    C, c, Q, B = red.C, red.c, red.Q, red.B
    m, n = As.shape[0], C.shape[0]
    r = c.shape[0]
    eye = np.eye(n)

    if m == 0:
        # feasible set is just the cone; the max sits at the origin
        bounded = (np.linalg.eigvalsh(C)[-1] <= 1e-12 if C.size else True)
        status = "optimal" if bounded and r == 0 else "numerical_limit"
        msg = "" if status == "optimal" else "no constraints bound the objective"
        return _result(status, 0.0, 0.0, np.zeros((n0, n0)), np.zeros(nF0),
                       np.zeros(red.n_orig_constraints), sdp, 0, msg, [])

    As_flat = As.reshape(m, -1)
    m_ineq = int(ineq.sum())
    d_scale = 1.0 + np.linalg.norm(d)
    obj_scale = 1.0 + np.linalg.norm(C) + np.linalg.norm(c)

    if start is not None:
        G0, F0, y0, Z0 = start
        G = Q.T @ G0 @ Q
        F = B.T @ np.asarray(F0, dtype=float)
        y = np.asarray(y0, dtype=float)[red.kept] * red.row_scale
        Z = Q.T @ Z0 @ Q
        s = d - As_flat @ G.ravel() - Af @ F
        s[~ineq] = 0.0
        if np.any(s[ineq] <= 0) or np.any(y[ineq] <= 0):
            raise ValueError("start point is not strictly feasible in the cone")
    else:
        eta_p = 10.0 * max(1.0, float(np.abs(d).max(initial=0.0)))
        eta_d = 10.0 * max(1.0, np.linalg.norm(C),
                           float(np.sqrt(As_flat.shape[1])))
        G = eta_p * eye
        s = np.where(ineq, eta_p, 0.0)
        F = np.zeros(r)
        y = np.where(ineq, eta_d, 0.0)
        Z = eta_d * eye

    history = []
    status, msg = "numerical_limit", "iteration budget exhausted"
    iters = 0
    best = None          # (score, G, s, F, y, Z)
    since_best = 0
    for iters in range(1, max_iters + 1):
        r_p = d - As_flat @ G.ravel() - Af @ F - s
        R_D = C + Z - np.einsum("j,jab->ab", y, As)
        r_f = c - Af.T @ y
        P = float(np.tensordot(C, G) + c @ F)
        D = float(d @ y)
        mu = (float(np.tensordot(G, Z)) + float(s[ineq] @ y[ineq])) \
            / (n + m_ineq)
        pinf = np.linalg.norm(r_p) / d_scale
        dinf = max(np.linalg.norm(R_D), np.linalg.norm(r_f)) / obj_scale
        relgap = abs(D - P) / (1.0 + abs(P) + abs(D))
        history.append((P, D, pinf, dinf, mu))

        score = max(relgap, pinf, dinf)
        if best is None or score < 0.98 * best[0]:
            best = (score, G.copy(), s.copy(), F.copy(), y.copy(), Z.copy())
            since_best = 0
        else:
            since_best += 1

        if relgap <= tol_gap and pinf <= tol_feas and dinf <= tol_feas:
            status, msg = "optimal", ""
            break
        if since_best >= 12:
            # the Schur system has gone too degenerate to keep improving
            status = "numerical_limit"
            msg = (f"stalled at score {best[0]:.3e} "
                   f"(tolerances {tol_gap:.1e}/{tol_feas:.1e})")
            break

        # dual improving ray => primal infeasibility certificate
        ynorm = np.linalg.norm(y)
        if ynorm > 1e9 * d_scale:
            yhat = y / ynorm
            ray_obj = d @ yhat
            Zr = np.einsum("j,jab->ab", yhat, As)
            if (ray_obj < -1e-9
                    and np.linalg.eigvalsh(Zr)[0] >= -1e-9
                    and np.linalg.norm(Af.T @ yhat) <= 1e-9
                    and (not m_ineq or yhat[ineq].min() >= -1e-9)):
                status, msg = "infeasible", "dual improving ray found"
                break

        try:
            Lz = np.linalg.cholesky(Z)
        except np.linalg.LinAlgError:
            status, msg = "numerical_limit", "dual iterate lost definiteness"
            break
        Zi = sla.cho_solve((Lz, True), eye)
        Zi = 0.5 * (Zi + Zi.T)

        U = np.matmul(As, G)           # (m, n, n): A_j G
        V = np.matmul(As, Zi)          # (m, n, n): A_j Zi
        M = U.reshape(m, -1) @ V.transpose(0, 2, 1).reshape(m, -1).T
        M = 0.5 * (M + M.T)
        slack_diag = np.zeros(m)
        slack_diag[ineq] = s[ineq] / y[ineq]
        M[np.diag_indices_from(M)] += slack_diag

        tZ = As_flat @ Zi.ravel()
        q = As_flat @ G.ravel()
        GRZ = G @ R_D @ Zi
        w = As_flat @ GRZ.T.ravel()

        schur = _SchurSolver(M)
        if r:
            MAf = schur.solve(Af)
            S_F = Af.T @ MAf
            SF_solver = _SchurSolver(0.5 * (S_F + S_F.T))

        def directions(T_rhs, t_rhs, tT):
            # tT[j] = <A_j, T_rhs>; t_rhs is the slack complementarity rhs
            h = r_p - tT - w - np.where(ineq, t_rhs, 0.0)
            Mh = schur.solve(h)
            if r:
                dF = SF_solver.solve(r_f + Af.T @ Mh)
                dy = MAf @ dF - Mh
            else:
                dF = np.zeros(0)
                dy = -Mh
            dZ = np.einsum("j,jab->ab", dy, As) - R_D
            dZ = 0.5 * (dZ + dZ.T)
            dG = T_rhs - G @ dZ @ Zi
            dG = 0.5 * (dG + dG.T)
            ds = np.where(ineq, t_rhs - slack_diag * dy, 0.0)
            return dG, ds, dF, dy, dZ

        # predictor (affine scaling)
        tT_aff = -q
        dG_a, ds_a, dF_a, dy_a, dZ_a = directions(-G, -s, tT_aff)
        ap = min(_max_step_psd(G, dG_a), _max_step_vec(s[ineq], ds_a[ineq])
                 if m_ineq else 1.0)
        ad = min(_max_step_psd(Z, dZ_a), _max_step_vec(y[ineq], dy_a[ineq])
                 if m_ineq else 1.0)
        mu_aff = (float(np.tensordot(G + ap * dG_a, Z + ad * dZ_a))
                  + float((s + ap * ds_a)[ineq] @ (y + ad * dy_a)[ineq])) \
            / (n + max(m_ineq, 0) or 1)
        sigma = min(1.0, max(0.0, mu_aff / max(mu, 1e-300))) ** 3

        # corrector
        cross = dG_a @ dZ_a @ Zi
        T_rhs = sigma * mu * Zi - G - cross
        tT = sigma * mu * tZ - q - As_flat @ cross.T.ravel()
        t_rhs = np.zeros(m)
        if m_ineq:
            t_rhs[ineq] = (sigma * mu - ds_a[ineq] * dy_a[ineq]) / y[ineq] \
                - s[ineq]
        dG, ds, dF, dy, dZ = directions(T_rhs, t_rhs, tT)

        tau = 0.95 if mu > 1e-3 else (0.98 if mu > 1e-7 else 0.995)
        try:
            ap = tau * min(_max_step_psd(G, dG),
                           _max_step_vec(s[ineq], ds[ineq]) if m_ineq else 1.0)
            ad = tau * min(_max_step_psd(Z, dZ),
                           _max_step_vec(y[ineq], dy[ineq]) if m_ineq else 1.0)
        except np.linalg.LinAlgError:
            status, msg = "numerical_limit", "iterate lost definiteness"
            break
        ap, ad = min(1.0, ap), min(1.0, ad)
        if ap < 1e-10 and ad < 1e-10:
            status, msg = "numerical_limit", "step sizes collapsed"
            break

        # eigenvalue roundoff can overshoot the cone boundary; back off until
        # a Cholesky factorization vouches for definiteness
        for _ in range(40):
            if _is_pd(G + ap * dG):
                break
            ap *= 0.8
        for _ in range(40):
            if _is_pd(Z + ad * dZ):
                break
            ad *= 0.8
        G = G + ap * dG
        s = s + ap * ds
        F = F + ap * dF
        y = y + ad * dy
        Z = Z + ad * dZ

    if best is not None and status != "optimal":
        G, s, F, y, Z = best[1:]
        polished = _polish(As, Af, d, ineq, C, c, G, s, F, y,
                           tol_gap, tol_feas)
        if polished is not None:
            G, s, F, y, P, D = polished
            status, msg = "optimal", "recovered by active-face polish"

    G_full = Q @ G @ Q.T
    F_full = B @ F if nF0 else np.zeros(0)
    y_full = np.zeros(red.n_orig_constraints)
    y_full[red.kept] = y / red.row_scale
    P = sdp.objective_value(G_full, F_full)
    D = float(d @ y)
    return _result(status, P, D, G_full, F_full, y_full, sdp, iters, msg,
                   history)
