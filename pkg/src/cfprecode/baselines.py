"""MRT and association-restricted WMMSE baselines.

WMMSE is the normalization oracle: model metrics are reported relative to the
sum rate it reaches. The iteration is the standard three-step block-coordinate
scheme (receiver scalar, MSE weight, precoder solve), restricted to each UE's
serving set, with the per-AP power constraints enforced through multipliers
found by cyclic per-AP bisection.

The precoder solve exploits the rank structure of the quadratic form. Each
UE's Gram matrix is a sum of K rank-one terms, so with per-AP multipliers
mu_m > 0 the solve reduces through the Woodbury identity to a K x K system
I + F Lambda^-1 F^H that is well conditioned by construction; the stacked
N*|serving set| coordinates never need a direct (rank-deficient) inversion.
Multipliers are floored at a tiny positive value so Lambda stays invertible;
the floor plays the role of the documented singular-system ridge and is
recorded in the trace when an AP's constraint is slack.
"""

import dataclasses

import numpy as np

from . import objective
from . import scenario

# interior points of a 17-node geometric grid, as exponent fractions
_GRID_FRACS = np.arange(1, 16, dtype=float) / 16.0


def mrt(h, assoc, p_budget):
    """Conjugate beamforming toward each served UE, equal power split per AP.

    v_km = d_km * sqrt(P / K_m) * h_km / ||h_km||, K_m the AP's served count.
    A zero-norm served channel contributes a zero vector; its power share is
    not redistributed.
    """
    d = np.asarray(assoc, dtype=float)
    counts = d.sum(axis=0)         # (M,)
    norms = np.linalg.norm(h, axis=2)
    amp = np.zeros_like(norms)
    ok = (d > 0) & (norms > 0)
    shares = np.zeros_like(counts)
    served = counts > 0
    shares[served] = np.sqrt(p_budget / counts[served])
    amp[ok] = (shares[None, :].repeat(len(d), 0)[ok]) / norms[ok]
    return amp[:, :, None] * h


@dataclasses.dataclass
class WmmseOptions:
    max_outer_iters: int = 200
    objective_tol: float = 1e-6        # relative change stop rule
    power_tol_factor: float = 1e-8     # feasibility slack, times P
    bisect_iters: int = 60
    sweep_limit: int = 50
    mu_floor_rel: float = 1e-9         # multiplier floor, times Gram scale


@dataclasses.dataclass
class WmmseTrace:
    objective: list                    # sum rate after each outer iteration
    per_ap_power: np.ndarray
    converged: bool
    iters: int
    ridge_used: bool = False


class _UserSystem:
    """One UE's precoder subproblem in Woodbury form.

    The quadratic piece for UE i is v^H (F^H F) v - 2 Re(b^H v) on the
    serving-set stacked space, F a K x dim factor. With blockwise multiplier
    diagonal Lambda, the minimizer is

        v = Lambda^-1 (b - F^H alpha),
        alpha = (I + F Lambda^-1 F^H)^-1 F Lambda^-1 b,

    needing only K x K solves. Per-block Grams of F and F b products are
    cached so both alpha and single-block powers are cheap per multiplier
    candidate.
    """

    def __init__(self, i, h, assoc):
        self.i = i
        self.aps = np.flatnonzero(assoc[i] > 0)
        self.n = h.shape[2]
        # g[k] = UE k's channel stacked over this UE's serving APs
        self.g = h[:, self.aps, :].reshape(h.shape[0], len(self.aps) * self.n)

    def block_slice(self, m):
        j = int(np.flatnonzero(self.aps == m)[0])
        return slice(j * self.n, (j + 1) * self.n)

    def set_weights(self, u, w, rhs):
        k, dim = self.g.shape
        n_blocks = dim // self.n
        self.rhs = rhs
        self.rhs_blocks = rhs.reshape(n_blocks, self.n)
        self.factor = (np.sqrt(w) * np.abs(u))[:, None] * self.g.conj()
        # per-serving-AP stacks: fstack[j] = F restricted to block j
        self.fstack = self.factor.reshape(k, n_blocks, self.n) \
                                 .transpose(1, 0, 2).copy()
        self.gram_stack = np.einsum("jkn,jln->jkl", self.fstack,
                                    self.fstack.conj())
        self.fb_stack = np.einsum("jkn,jn->jk", self.fstack,
                                  self.rhs_blocks)

    def pos(self, m):
        return int(np.flatnonzero(self.aps == m)[0])

    def rest_terms(self, mu, j):
        """S_rest and c_rest: identity plus the non-target block terms."""
        inv = 1.0 / mu[self.aps]
        inv[j] = 0.0
        s_rest = np.einsum("jkl,j->kl", self.gram_stack, inv)
        s_rest[np.diag_indices_from(s_rest)] += 1.0
        c_rest = inv @ self.fb_stack
        return s_rest, c_rest

    def scatter_v(self, alpha, mu, out):
        """Fill this UE's stacked precoder for the given alpha and mu."""
        proj = np.einsum("jkn,k->jn", self.fstack.conj(), alpha)
        out[:] = ((self.rhs_blocks - proj)
                  / mu[self.aps][:, None]).reshape(-1)


def _bisect_ap(systems, mu, m, v_stacked, p_budget, floor, opts):
    """Set mu[m] by complementary slackness, other multipliers fixed.

    Reduces each affected UE's solve to an explicit rational in mu_m: with
    S(mu_m) = S_rest + W_m / mu_m, a Cholesky of S_rest and an
    eigendecomposition of the whitened W_m give
    inner_j = (mu q1_j + q2_j) / (mu + theta_j), from which both alpha and
    the m-block power follow with a few vector operations. The bisection
    runs on vectorized 16-interval bracket splits (one split equals four
    classic halvings). The floor stands in for an exact zero on slack APs.
    Updates v_stacked in place for the affected UEs.
    """
    affected = [s for s in systems if m in s.aps]
    if not affected:
        mu[m] = floor
        return
    pairs = [s.rest_terms(mu, s.pos(m)) for s in affected]
    s_rest = np.stack([p[0] for p in pairs])
    c_rest = np.stack([p[1] for p in pairs])
    gram_m = np.stack([s.gram_stack[s.pos(m)] for s in affected])
    fb_m = np.stack([s.fb_stack[s.pos(m)] for s in affected])
    fm = np.stack([s.fstack[s.pos(m)] for s in affected])
    bm = np.stack([s.rhs_blocks[s.pos(m)] for s in affected])

    low = np.linalg.cholesky(s_rest)                 # PD: s_rest >= I
    white = np.linalg.solve(low, np.linalg.solve(
        low, gram_m).conj().transpose(0, 2, 1)).conj().transpose(0, 2, 1)
    theta, q = np.linalg.eigh((white + white.conj().transpose(0, 2, 1)) / 2)
    theta = np.maximum(theta, 0.0)                   # (n_aff, K)
    lt_q = np.linalg.solve(low.conj().transpose(0, 2, 1), q)
    qh = q.conj().transpose(0, 2, 1)
    q1 = np.einsum("akl,al->ak", qh,
                   np.linalg.solve(low, c_rest[..., None])[..., 0])
    q2 = np.einsum("akl,al->ak", qh,
                   np.linalg.solve(low, fb_m[..., None])[..., 0])
    gtil = np.einsum("akn,akl->anl", fm.conj(), lt_q)  # (n_aff, N, K)

    def powers_at(cands):
        """AP power at each candidate multiplier (vectorized)."""
        c = cands[:, None, None]
        inner = (c * q1[None] + q2[None]) / (c + theta[None])
        resid = bm[None] - np.einsum("anl,gal->gan", gtil, inner)
        return (np.abs(resid) ** 2).sum(axis=(1, 2)) / cands ** 2

    def solve_v(mu_m):
        inner = (mu_m * q1 + q2) / (mu_m + theta)
        for a, s in enumerate(affected):
            s.scatter_v(lt_q[a] @ inner[a], mu, v_stacked[s.i])

    tol = opts.power_tol_factor * p_budget
    cur = mu[m]
    p_cur, p_floor = powers_at(np.array([cur, floor]))
    if p_floor <= p_budget + tol:
        mu[m] = floor
        solve_v(floor)
        return
    if p_budget * (1 - 1e-9) <= p_cur <= p_budget + tol:
        solve_v(cur)           # already tight; other multipliers moved
        return
    if p_cur > p_budget:
        lo, hi = cur, None
    else:
        lo, hi = floor, cur
    if hi is None:
        cands = lo * 2.0 ** np.arange(1, 81)
        below = powers_at(cands) <= p_budget
        if not below.any():
            mu[m] = cands[-1]  # pathological; sweep check will flag it
            solve_v(cands[-1])
            return
        first = int(np.argmax(below))
        hi = cands[first]
        lo = cands[first - 1] if first else lo
    rounds = max(1, -(-opts.bisect_iters // 4))
    for _ in range(rounds):
        if hi - lo <= 1e-12 * hi:
            break
        grid = lo * (hi / lo) ** _GRID_FRACS
        below = powers_at(grid) <= p_budget
        if below.any():
            first = int(np.argmax(below))
            hi = grid[first]
            lo = grid[first - 1] if first else lo
        else:
            lo = grid[-1]
    mu[m] = hi                 # upper end: power <= budget
    solve_v(hi)


def wmmse(h, assoc, p_budget, noise_power, options=None):
    """Association-restricted WMMSE from the MRT start.

    Returns (precoder (K, M, N), WmmseTrace). Objective trace is the sum rate
    after each outer iteration; it is non-decreasing up to solver tolerance.
    """
    opts = options or WmmseOptions()
    d = np.asarray(assoc, dtype=float)
    k_ues, m_aps, n_ant = h.shape
    if not (d.sum(axis=1) >= 1).all():
        raise ValueError("every UE needs at least one serving AP")

    systems = [_UserSystem(i, h, d) for i in range(k_ues)]
    v = mrt(h, d, p_budget)
    trace = []
    ridge_used = False
    tol_p = opts.power_tol_factor * p_budget
    mu = None      # multipliers warm-started across outer iterations

    for it in range(opts.max_outer_iters):
        # (i) receiver scalars and (ii) MSE weights
        cross = np.einsum("kmn,imn->ki", h.conj(), v)  # v is serving-masked
        sig = np.diagonal(cross)
        total = (np.abs(cross) ** 2).sum(axis=1) + noise_power
        u = sig / total
        w = 1.0 / (1.0 - u.conj() * sig)
        w = w.real  # imaginary part is rounding; the true weight is real

        # (iii) per-UE quadratic pieces. Linear term w_i u_i g_ii keeps the
        # solved signal in phase with the receiver scalar.
        scale = 0.0
        for s in systems:
            s.set_weights(u, w, w[s.i] * u[s.i] * s.g[s.i])
            traces = np.einsum("jkk->j", s.gram_stack).real
            scale = max(scale, float(traces.max(initial=0.0)))
        floor = opts.mu_floor_rel * max(scale, 1e-300)

        # Warm-started multipliers: the binding pattern drifts slowly across
        # outer iterations, and each sweep re-tests the slack side anyway.
        mu = np.full(m_aps, floor) if mu is None else np.maximum(mu, floor)
        v_stacked = {s.i: np.zeros(s.g.shape[1], dtype=complex)
                     for s in systems}
        mu_prev = None
        for _ in range(opts.sweep_limit):
            for m in range(m_aps):
                _bisect_ap(systems, mu, m, v_stacked, p_budget, floor, opts)
            powers = np.zeros(m_aps)
            for s in systems:
                for m in s.aps:
                    sl = s.block_slice(m)
                    powers[m] += (np.abs(v_stacked[s.i][sl]) ** 2).sum()
            # Exit needs feasibility AND complementarity: every bisected
            # (non-floor) multiplier must sit at its budget, else the inner
            # solve is not yet the subproblem optimum and the outer
            # iteration would lose monotonicity.
            feasible = (powers <= p_budget + tol_p).all()
            binding = mu > floor
            tight = (powers[binding] >= p_budget * (1 - 1e-7)).all()
            if feasible and tight:
                break
            # Geometric extrapolation of the multiplier crawl: when coupled
            # budgets all bind, cyclic updates approach the joint point by a
            # slowly shrinking factor, so jump ahead along the observed
            # ratio. The next sweep's bisections correct any overshoot.
            if mu_prev is not None:
                ratio = mu / np.maximum(mu_prev, 1e-300)
                grow = ratio > 1.000001
                mu[grow] *= np.minimum(ratio[grow] ** 8, 1e6)
            mu_prev = mu.copy()
        if (mu <= floor).any():
            ridge_used = True     # some AP sat at the slack-side floor

        v = np.zeros_like(v)
        for s in systems:
            v[s.i, s.aps, :] = v_stacked[s.i].reshape(len(s.aps), n_ant)
        trace.append(objective.sum_rate(
            objective.sinr_direct(h, d, v, noise_power)))
        if it > 0:
            prev, cur = trace[-2], trace[-1]
            if abs(cur - prev) <= opts.objective_tol * max(1.0, abs(cur)):
                return v, WmmseTrace(trace, objective.per_ap_power(v), True,
                                     it + 1, ridge_used)
    return v, WmmseTrace(trace, objective.per_ap_power(v), False,
                         opts.max_outer_iters, ridge_used)


def normalized_sum_rate(candidate, reference, h, assoc, noise_power):
    """sum_rate(candidate) / sum_rate(reference), both via the direct SINR."""
    ref = objective.sum_rate(objective.sinr_direct(h, assoc, reference,
                                                   noise_power))
    if ref <= 0:
        raise ValueError("reference precoder achieves no positive rate")
    cand = objective.sum_rate(objective.sinr_direct(h, assoc, candidate,
                                                    noise_power))
    return cand / ref
