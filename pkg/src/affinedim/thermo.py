"""Thermodynamic formalism for the singular value cocycle.

Finite-level pressure sums, the affinity dimension as the pressure root
with an honest bracket, the weighted transfer operator discretized on
cylinders, and the resulting equilibrium cylinder weights with their
Gibbs-ratio diagnostics.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy import sparse
from scipy.optimize import brentq

from .config import word_cap
from .errors import BudgetExceeded, DegenerateRange, NotConverged, NotDominated
from .ifs import Word, batch_singular_values, svf_from_singular_values
from .projective import ProjPoint, act, find_invariant_multicone, \
    furstenberg_directions, norm_perp


@dataclass(frozen=True)
class PressureSample:
    s: float
    depth: int
    value: float


def pressure(ifs, s, n, cap=None):
    """Exact finite-level pressure (1/n) log sum of phi^s over level n."""
    if s < 0:
        raise ValueError("s must be nonnegative")
    a1, a2 = ifs.level_singular_values(n, cap)
    vals = svf_from_singular_values(a1, a2, s)
    # sum in log space against underflow at large n
    m = vals.max()
    total = math.log(m) + math.log(np.sum(vals / m))
    return PressureSample(s, n, total / n)


def _pressure_fn(ifs, n, cap):
    a1, a2 = ifs.level_singular_values(n, cap)
    la1 = np.log(a1)
    la2 = np.log(a2)
    ldet = la1 + la2

    def p(s):
        if s <= 1.0:
            logs = s * la1
        elif s <= 2.0:
            logs = la1 + (s - 1.0) * la2
        else:
            logs = 0.5 * s * ldet
        m = logs.max()
        return (m + math.log(np.exp(logs - m).sum())) / n
    return p


def affinity_dimension(ifs, tol=1e-10, max_depth=None, budget=200_000,
                       cap=None):
    """Root of the finite-level pressure at the largest affordable level.

    The level-n pressure dominates the limit, so its root is an upper
    bound; the lower bracket edge comes from two-point Richardson
    extrapolation against the half-depth level.  Returns (s_star, (lo, hi)).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    budget = min(budget, word_cap(cap))
    n_hi = int(math.floor(math.log(budget) / math.log(max(ifs.n_maps, 2))))
    if max_depth is not None:
        n_hi = min(n_hi, max_depth)
    n_hi = max(n_hi, 2)
    n_lo = max(n_hi // 2, 1)
    p_hi = _pressure_fn(ifs, n_hi, cap)
    p_lo = _pressure_fn(ifs, n_lo, cap)

    def solve(p):
        a, b = 0.0, 4.0
        if p(a) <= 0:
            return 0.0
        if p(b) >= 0:
            raise DegenerateRange("pressure does not change sign on [0, 4]")
        return brentq(p, a, b, xtol=tol)

    root_hi = solve(p_hi)           # upper bound for the true root
    w = n_hi - n_lo

    def p_extrap(s):
        return (n_hi * p_hi(s) - n_lo * p_lo(s)) / w

    try:
        root_lo = solve(p_extrap)
    except DegenerateRange:
        root_lo = root_hi
    lo, hi = sorted((root_lo, root_hi))
    return root_hi, (lo, hi)


def g_s_eval(ifs, s, word, tail_direction):
    """Log-weight of the first letter of a word against the tail direction.

    Uses the norm of A^T restricted to the perpendicular of the tail's
    limit direction; three branches matching the singular value function.
    """
    if len(word) < 1:
        raise ValueError("word must be nonempty")
    if s < 0:
        raise ValueError("s must be nonnegative")
    a = ifs.map_for(word.indices[0]).linear
    c = norm_perp(a.array, tail_direction)
    det = abs(a.det)
    if s <= 1.0:
        return s * math.log(c)
    if s <= 2.0:
        return (2.0 - s) * math.log(c) + (s - 1.0) * math.log(det)
    return 0.5 * s * math.log(det)


@dataclass(frozen=True)
class EqState:
    """Discretized transfer-operator eigendata on depth-m cylinders.

    h and nu are indexed by the flat lexicographic cylinder order of
    Ifs.level_products; h is positive with sup norm 1 scaling adjusted so
    the pairing <h, nu> is 1, nu is a probability vector."""

    s: float
    depth: int
    h: np.ndarray
    nu: np.ndarray
    eigenvalue: float
    iterations: int

    def word(self, flat, ifs):
        return ifs.word_from_flat(flat, self.depth)

    def to_json(self, ifs):
        words = [str(ifs.word_from_flat(k, self.depth))
                 for k in range(len(self.h))]
        return {
            "s": self.s,
            "depth": self.depth,
            "eigenvalue": self.eigenvalue,
            "h": dict(zip(words, self.h.tolist())),
            "nu": dict(zip(words, self.nu.tolist())),
        }


def _cylinder_directions(ifs, m, cap=None):
    """Limit direction estimate for each depth-m cylinder w: the inverse
    product A_{w1}^{-1} ... A_{wm}^{-1} applied to a direction in the
    complement of the invariant cone.  For similarity tuples every
    direction carries the same norm, so the zero angle is returned."""
    a1s, a2s = zip(*(s.linear.singular_values() for s in ifs.maps))
    if max((a1 - a2) / a1 for a1, a2 in zip(a1s, a2s)) < 1e-12:
        return np.zeros(ifs.n_maps ** m)
    cone = find_invariant_multicone(ifs)
    if cone is None:
        raise NotDominated("transfer operator needs a certified multicone")
    v0 = cone.complement().intervals[0].midpoint.vector
    invs = np.stack([np.linalg.inv(s.linear.array) for s in ifs.maps])
    prods = np.eye(2)[None]
    for _ in range(m):
        prods = np.einsum("ipq,wqr->iwpr", invs, prods).reshape(-1, 2, 2)
    vecs = prods @ v0
    vecs /= np.linalg.norm(vecs, axis=1, keepdims=True)
    return np.mod(np.arctan2(vecs[:, 1], vecs[:, 0]), math.pi)


def transfer_matrix(ifs, s, m, cap=None):
    """Sparse depth-m cylinder discretization of the weighted transfer
    operator: (Lf)(w) = sum_i exp(g_s(i w)) f((i w)|_m)."""
    n = ifs.n_maps
    size = n ** m
    if size > word_cap(cap):
        raise BudgetExceeded(word_cap(cap), size)
    thetas = _cylinder_directions(ifs, m, cap)
    # g_s(i w) pairs letter i with the direction of cylinder w
    perp = thetas + math.pi / 2.0
    u = np.stack([np.cos(perp), np.sin(perp)], axis=1)
    rows, cols, vals = [], [], []
    w_idx = np.arange(size)
    parent = w_idx // n          # w with last letter dropped
    for i in range(n):
        a = ifs.maps[i].linear
        c = np.linalg.norm(u @ a.array, axis=1)
        det = abs(a.det)
        if s <= 1.0:
            g = s * np.log(c)
        elif s <= 2.0:
            g = (2.0 - s) * np.log(c) + (s - 1.0) * math.log(det)
        else:
            g = np.full(size, 0.5 * s * math.log(det))
        rows.append(w_idx)
        cols.append(i * n ** (m - 1) + parent)
        vals.append(np.exp(g))
    return sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(size, size))


def equilibrium_state(ifs, s, m=6, iters=2000, tol=1e-12, cap=None):
    """Power iteration for the discretized transfer operator's leading
    eigendata: eigenfunction h (forward), eigenmeasure nu (adjoint),
    eigenvalue lambda.  Period-2 oscillations are averaged out."""
    L = transfer_matrix(ifs, s, m, cap)
    size = L.shape[0]
    h = np.ones(size)
    nu = np.full(size, 1.0 / size)
    lam_prev = lam_prev2 = None
    lam = None
    it = 0
    for it in range(1, iters + 1):
        h2 = L @ h
        lam_h = h2.max()
        h_new = h2 / lam_h
        nu2 = L.T @ nu
        lam_nu = nu2.sum()
        nu_new = nu2 / lam_nu
        lam = 0.5 * (lam_h + lam_nu)
        if lam_prev is not None and abs(lam - lam_prev) < tol:
            h, nu = h_new, nu_new
            break
        if lam_prev2 is not None and abs(lam - lam_prev2) < tol \
                and abs(lam - lam_prev) > tol:
            # period-2 oscillation: average consecutive iterates
            h_new = 0.5 * (h + h_new)
            nu_new = 0.5 * (nu + nu_new)
            nu_new /= nu_new.sum()
        h, nu = h_new, nu_new
        lam_prev2, lam_prev = lam_prev, lam
    else:
        raise NotConverged(f"eigenvalue not stable after {iters} iterations")
    if h.min() <= 0:
        raise NotConverged("eigenfunction lost positivity")
    h = h / float(h @ nu)
    return EqState(s, m, h, nu, float(lam), it)


@dataclass(frozen=True)
class GibbsWeights:
    depth: int
    weights: np.ndarray
    s: float
    gibbs_spread: float

    def weight(self, word, ifs):
        return float(self.weights[ifs.flat_from_word(word)])

    def to_json(self, ifs):
        words = [str(ifs.word_from_flat(k, self.depth))
                 for k in range(len(self.weights))]
        return {"depth": self.depth, "s": self.s,
                "gibbs_spread": self.gibbs_spread,
                "weights": dict(zip(words, self.weights.tolist()))}


def kaenmaki_weights(ifs, depth, s=None, state=None, cap=None):
    """Cylinder weights of the equilibrium state at the pressure root:
    proportional to h * nu on depth-`depth` cylinders.  The Gibbs ratio
    weight / phi^s is tracked and its max/min spread reported."""
    if s is None:
        s, _ = affinity_dimension(ifs)
    if state is None or state.depth != depth:
        state = equilibrium_state(ifs, s, m=depth, cap=cap)
    w = state.h * state.nu
    w = w / w.sum()
    a1, a2 = ifs.level_singular_values(depth, cap)
    phis = svf_from_singular_values(a1, a2, s)
    ratio = w / phis
    spread = float(ratio.max() / ratio.min())
    return GibbsWeights(depth, w, s, spread)


def gibbs_spread_by_depth(ifs, s, depths, cap=None):
    """Gibbs ratio spread per depth, reusing one equilibrium state per
    depth; feeds the bounded-spread stability check."""
    out = {}
    for d in depths:
        gw = kaenmaki_weights(ifs, d, s=s, cap=cap)
        out[d] = gw.gibbs_spread
    return out


def letter_marginal(gw, ifs, position):
    """Distribution of the letter at a given position (1-based) under the
    cylinder weights; shift-invariance makes it position-independent up
    to the Gibbs spread."""
    n = ifs.n_maps
    d = gw.depth
    if not 1 <= position <= d:
        raise ValueError("position out of range")
    idx = np.arange(n ** d)
    letters = (idx // n ** (d - position)) % n
    out = np.zeros(n)
    np.add.at(out, letters, gw.weights)
    return out
