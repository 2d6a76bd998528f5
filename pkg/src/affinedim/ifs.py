"""Planar affine iterated function systems and their symbolic dynamics.

The central objects are 2x2 invertible matrices, contractive affine maps,
finite tuples of such maps, finite words over the map alphabet, and
scale-indexed stopping sets (prefix-free partitions of the cylinder tree).
"""

from dataclasses import dataclass, field
import json
import math

import numpy as np

from .config import word_cap
from .errors import BudgetExceeded, IndexOutOfRange, SingularMatrix

_DET_EPS = 1e-14


@dataclass(frozen=True)
class Matrix2:
    """Invertible 2x2 real matrix, row-major entries (a b / c d)."""

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        scale = max(self.a * self.a + self.b * self.b,
                    self.c * self.c + self.d * self.d, 1e-300)
        if abs(self.det) <= _DET_EPS * scale:
            raise SingularMatrix(f"determinant {self.det} too close to zero")

    @classmethod
    def from_array(cls, arr):
        arr = np.asarray(arr, dtype=float)
        return cls(arr[0, 0], arr[0, 1], arr[1, 0], arr[1, 1])

    @property
    def array(self):
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=float)

    @property
    def det(self):
        return self.a * self.d - self.b * self.c

    @property
    def transpose(self):
        return Matrix2(self.a, self.c, self.b, self.d)

    @property
    def inverse(self):
        det = self.det
        return Matrix2(self.d / det, -self.b / det, -self.c / det, self.a / det)

    def __matmul__(self, other):
        if isinstance(other, Matrix2):
            return Matrix2.from_array(self.array @ other.array)
        return self.array @ np.asarray(other, dtype=float)

    def singular_values(self):
        return singular_values(self)


def singular_values(m):
    """Singular values (alpha1, alpha2) of a Matrix2, alpha1 >= alpha2 > 0.

    Closed form from the eigenvalues of A^T A; alpha1*alpha2 = |det A|.
    """
    a, b, c, d = m.a, m.b, m.c, m.d
    # trace and determinant of A^T A
    t = a * a + b * b + c * c + d * d
    det = m.det
    disc = max(t * t - 4.0 * det * det, 0.0)
    root = math.sqrt(disc)
    a1 = math.sqrt(0.5 * (t + root))
    # alpha2 via |det|/alpha1 keeps the product identity exact
    a2 = abs(det) / a1
    return a1, a2


def svf(m, s):
    """Singular value function of a matrix at dimension parameter s >= 0.

    alpha1^s for s in [0,1], alpha1*alpha2^(s-1) for s in (1,2],
    |det|^(s/2) for s > 2; continuous at s=1 and s=2.
    """
    if s < 0:
        raise ValueError("s must be nonnegative")
    a1, a2 = singular_values(m)
    if s <= 1.0:
        return a1 ** s
    if s <= 2.0:
        return a1 * a2 ** (s - 1.0)
    return (a1 * a2) ** (0.5 * s)


def svf_from_singular_values(a1, a2, s):
    """Vectorized singular value function given alpha arrays."""
    a1 = np.asarray(a1, dtype=float)
    a2 = np.asarray(a2, dtype=float)
    if s <= 1.0:
        return a1 ** s
    if s <= 2.0:
        return a1 * a2 ** (s - 1.0)
    return (a1 * a2) ** (0.5 * s)


def batch_singular_values(mats):
    """(alpha1, alpha2) arrays for a (k,2,2) stack of matrices."""
    a = mats[:, 0, 0]
    b = mats[:, 0, 1]
    c = mats[:, 1, 0]
    d = mats[:, 1, 1]
    t = a * a + b * b + c * c + d * d
    det = a * d - b * c
    disc = np.maximum(t * t - 4.0 * det * det, 0.0)
    a1 = np.sqrt(0.5 * (t + np.sqrt(disc)))
    a2 = np.abs(det) / a1
    return a1, a2


@dataclass(frozen=True)
class AffineMap:
    """Affine map x -> A x + v on the plane."""

    linear: Matrix2
    translation: tuple

    def __post_init__(self):
        object.__setattr__(self, "translation",
                           (float(self.translation[0]), float(self.translation[1])))

    @property
    def v(self):
        return np.array(self.translation, dtype=float)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return x @ self.linear.array.T + self.v

    def compose(self, other):
        """self after other: (self.compose(other))(x) = self(other(x))."""
        lin = self.linear @ other.linear
        v = self.linear @ other.v + self.v
        return AffineMap(lin, tuple(v))

    def fixed_point(self):
        eye = np.eye(2) - self.linear.array
        return np.linalg.solve(eye, self.v)

    @property
    def is_contractive(self):
        return singular_values(self.linear)[0] < 1.0


def identity_map():
    return AffineMap(Matrix2(1.0, 0.0, 0.0, 1.0), (0.0, 0.0))


@dataclass(frozen=True)
class Word:
    """Finite word over the alphabet {1, ..., N}; empty word allowed."""

    indices: tuple = ()

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if any(i < 1 for i in idx):
            raise IndexOutOfRange(f"letters must be >= 1, got {idx}")
        object.__setattr__(self, "indices", idx)

    def __len__(self):
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def __str__(self):
        return "".join(str(i) for i in self.indices) or "-"

    def concat(self, other):
        return Word(self.indices + tuple(other))

    def prefix(self, n):
        return Word(self.indices[:n])

    @property
    def parent(self):
        return Word(self.indices[:-1])

    @property
    def reversed(self):
        return Word(self.indices[::-1])

    def common_prefix(self, other):
        n = 0
        for x, y in zip(self.indices, other.indices):
            if x != y:
                break
            n += 1
        return Word(self.indices[:n])

    def is_prefix_of(self, other):
        return other.indices[: len(self.indices)] == self.indices


class Ifs:
    """A finite tuple of contractive invertible affine maps with an
    invariant bounding ball B: phi_i(B) inside B for every map."""

    def __init__(self, maps, ball_center=None, ball_radius=None):
        maps = tuple(maps)
        if len(maps) < 1:
            raise ValueError("need at least one map")
        for k, m in enumerate(maps):
            if not m.is_contractive:
                raise ValueError(f"map {k + 1} is not contractive")
        self.maps = maps
        if ball_center is None or ball_radius is None:
            ball_center, ball_radius = self._fit_ball()
        self.ball_center = np.asarray(ball_center, dtype=float)
        self.ball_radius = float(ball_radius)
        self._check_ball()
        self._cache = {}

    @property
    def n_maps(self):
        return len(self.maps)

    def _fit_ball(self):
        fixed = np.array([m.fixed_point() for m in self.maps])
        center = fixed.mean(axis=0)
        r = 0.0
        for m in self.maps:
            a1 = singular_values(m.linear)[0]
            drift = np.linalg.norm(m(center) - center)
            r = max(r, drift / (1.0 - a1))
        return center, max(r, 1e-12) * 1.0000001

    def _check_ball(self):
        c, r = self.ball_center, self.ball_radius
        for k, m in enumerate(self.maps):
            a1 = singular_values(m.linear)[0]
            if np.linalg.norm(m(c) - c) + a1 * r > r * (1.0 + 1e-9):
                raise ValueError(f"bounding ball is not invariant under map {k + 1}")

    # -- symbolic operations ------------------------------------------------

    def map_for(self, letter):
        if not 1 <= letter <= self.n_maps:
            raise IndexOutOfRange(f"letter {letter} out of range 1..{self.n_maps}")
        return self.maps[letter - 1]

    def compose_word(self, word):
        """phi_w = phi_{w1} o ... o phi_{wn}; the empty word gives the identity."""
        out = identity_map()
        for letter in word:
            out = out.compose(self.map_for(letter))
        return out

    def word_matrix(self, word):
        arr = np.eye(2)
        for letter in word:
            arr = arr @ self.map_for(letter).linear.array
        return arr

    def canonical_point(self, word):
        """Image of the ball center under phi_w with a certified error radius.

        Every infinite extension of the word projects within err_radius of
        the returned point.
        """
        if len(word) < 1:
            raise ValueError("word must be nonempty")
        p = self.ball_center.copy()
        for letter in reversed(word.indices):
            p = self.map_for(letter)(p)
        a1 = batch_singular_values(self.word_matrix(word)[None])[0][0]
        return p, a1 * self.ball_radius

    # -- cached level products ---------------------------------------------

    def level_products(self, n, cap=None):
        """All products A_w for |w| = n as a (N^n, 2, 2) array in
        lexicographic word order (first letter most significant)."""
        cap = word_cap(cap)
        if self.n_maps ** n > cap:
            raise BudgetExceeded(cap, self.n_maps ** n)
        cached = self._cache.get("levels", [])
        if not cached:
            cached = [np.eye(2)[None]]
            self._cache["levels"] = cached
        lins = np.stack([m.linear.array for m in self.maps])
        while len(cached) <= n:
            prev = cached[-1]
            nxt = np.einsum("ipq,wqr->iwpr", lins, prev)
            cached.append(nxt.reshape(-1, 2, 2))
        return cached[n]

    def level_singular_values(self, n, cap=None):
        key = ("svals", n)
        if key not in self._cache:
            self._cache[key] = batch_singular_values(self.level_products(n, cap))
        return self._cache[key]

    def word_from_flat(self, flat, n):
        """Word of length n from its lexicographic index in level_products."""
        letters = []
        for _ in range(n):
            flat, rem = divmod(flat, self.n_maps)
            letters.append(rem + 1)
        return Word(tuple(reversed(letters)))

    def flat_from_word(self, word):
        flat = 0
        for letter in word:
            flat = flat * self.n_maps + (letter - 1)
        return flat

    # -- certified diameter -------------------------------------------------

    def diam_bounds(self, depth=8, cap=None):
        """Certified (lower, upper) bounds for diam(X) from a cylinder-center
        cloud: cloud diameter -/+ twice the largest error radius."""
        key = ("diam", depth)
        if key in self._cache:
            return self._cache[key]
        cap = word_cap(cap)
        while self.n_maps ** depth > min(cap, 500_000) and depth > 2:
            depth -= 1
        pts, errs = self._cylinder_centers(depth)
        d = _cloud_diameter(pts)
        e = 2.0 * errs.max()
        bounds = (max(d - e, 0.0), d + e)
        self._cache[key] = bounds
        return bounds

    @property
    def diam_upper(self):
        return self.diam_bounds()[1]

    @property
    def diam_lower(self):
        return self.diam_bounds()[0]

    def _pruned_cylinders(self, stop_mask, cap=None, max_depth=60):
        """Vectorized tree walk: expand cylinders breadth-first, emitting
        those whose alpha1 array passes stop_mask.  Returns the emitted
        canonical points and their alpha1 values."""
        cap = word_cap(cap)
        lins = np.stack([m.linear.array for m in self.maps])
        vs = np.stack([m.v for m in self.maps])
        # child of word w by letter i: p_{wi} = p_w + A_w*(phi_i(c) - c)
        drifts = np.einsum("ipq,q->ip", lins, self.ball_center) + vs \
            - self.ball_center
        pts = self.ball_center + drifts
        mats = lins.copy()
        out_pts, out_a1 = [], []
        total = 0
        for _ in range(max_depth):
            if len(mats) == 0:
                break
            a1 = batch_singular_values(mats)[0]
            done = stop_mask(a1)
            if done.any():
                out_pts.append(pts[done])
                out_a1.append(a1[done])
                total += int(done.sum())
                if total > cap:
                    raise BudgetExceeded(cap, total)
            keep = ~done
            pts, mats = pts[keep], mats[keep]
            if len(mats) == 0:
                break
            if total + len(mats) * self.n_maps > cap:
                raise BudgetExceeded(cap, total + len(mats) * self.n_maps)
            pts = (np.einsum("wpq,iq->iwp", mats, drifts)
                   + pts[None, :, :]).reshape(-1, 2)
            mats = np.einsum("wpq,iqr->iwpr", mats, lins).reshape(-1, 2, 2)
        if len(mats):
            raise BudgetExceeded(cap, None)
        return np.concatenate(out_pts), np.concatenate(out_a1)

    def _cylinder_centers(self, depth):
        """Centers and error radii of all depth-n cylinders, vectorized."""
        lins = np.stack([m.linear.array for m in self.maps])
        vs = np.stack([m.v for m in self.maps])
        pts = self.ball_center[None]
        mats = np.eye(2)[None]
        for _ in range(depth):
            # prepend a letter: phi_i applied after phi_w requires building
            # from the left; p_{iw} = A_i p_w + v_i keeps lexicographic order
            pts = (np.einsum("ipq,wq->iwp", lins, pts)
                   + vs[:, None, :]).reshape(-1, 2)
            mats = np.einsum("ipq,wqr->iwpr", lins, mats).reshape(-1, 2, 2)
        a1 = batch_singular_values(mats)[0]
        return pts, a1 * self.ball_radius

    # -- stopping sets ------------------------------------------------------

    def stopping_set(self, r, criterion="by-alpha1", rho=0.1, direction=None,
                     cap=None, proj_diam=None):
        """Prefix-free partition of the cylinder tree at scale r.

        criterion:
          "by-alpha1"    stop when alpha1(A_w)*diam_ub < r
          "by-alpha2-aspect" stop when additionally
                         alpha2(A_w)*diam_ub < rho*alpha1(A_w)
          "by-projected-diameter" stop when the certified projected diameter
                         bound in the given direction drops below r
                         (proj_diam: callable matrix -> bound)
        Convention: r at or above the diameter bound returns the N one-letter
        words so downstream partition logic stays uniform.
        """
        cap = word_cap(cap)
        diam = self.diam_upper
        if criterion == "by-projected-diameter":
            if proj_diam is None:
                from .geometry import projected_diameter_bound
                proj_diam = lambda mat: projected_diameter_bound(self, mat, direction)
            stop = lambda mat: proj_diam(mat) <= r
        elif criterion == "by-alpha1":
            stop = lambda mat: batch_singular_values(mat[None])[0][0] * diam <= r
        elif criterion == "by-alpha2-aspect":
            def stop(mat):
                a1, a2 = batch_singular_values(mat[None])
                return a2[0] * diam < rho * a1[0] and a1[0] * diam <= r
        else:
            raise ValueError(f"unknown criterion {criterion!r}")

        words = []
        first_level = [((i,), self.maps[i - 1].linear.array)
                       for i in range(1, self.n_maps + 1)]
        if criterion == "by-alpha1" and r >= diam:
            return StoppingSet(tuple(Word(w) for w, _ in first_level), criterion)
        stack = list(reversed(first_level))
        count = 0
        while stack:
            w, mat = stack.pop()
            if stop(mat):
                words.append(Word(w))
                count += 1
                if count > cap:
                    raise BudgetExceeded(cap)
                continue
            for i in range(self.n_maps, 0, -1):
                child = mat @ self.maps[i - 1].linear.array
                stack.append((w + (i,), child))
            if len(stack) + count > cap:
                raise BudgetExceeded(cap)
        return StoppingSet(tuple(words), criterion)

    def attractor_sample(self, resolution, mode="cylinder-centers", seed=0,
                         count=10000, cap=None):
        """Point cloud approximating the attractor.

        cylinder-centers: one point per by-alpha1 stopping word at scale
        resolution*diam, so every attractor point is within
        resolution*ball_radius of the cloud.  chaos-game: deterministic
        counter-based sampling for a fixed seed.
        """
        from .estimators import PointCloud

        if resolution <= 0:
            raise ValueError("resolution must be positive")
        if mode == "cylinder-centers":
            r = resolution * self.diam_upper
            pts, a1 = self._pruned_cylinders(
                lambda a1: a1 * self.diam_upper <= r, cap=cap)
            return PointCloud(pts, max(a1.max() * self.ball_radius, 1e-300))
        if mode == "chaos-game":
            rng = np.random.Generator(np.random.Philox(key=seed))
            burn = 64
            idx = rng.integers(0, self.n_maps, size=count + burn)
            lins = np.stack([m.linear.array for m in self.maps])
            vs = np.stack([m.v for m in self.maps])
            x = self.ball_center.copy()
            pts = np.empty((count, 2))
            for k, i in enumerate(idx):
                x = lins[i] @ x + vs[i]
                if k >= burn:
                    pts[k - burn] = x
            return PointCloud(pts, resolution * self.ball_radius)
        raise ValueError(f"unknown mode {mode!r}")

    # -- serialization ------------------------------------------------------

    def to_json(self):
        return {
            "maps": [
                {"a": m.linear.a, "b": m.linear.b, "c": m.linear.c,
                 "d": m.linear.d, "tx": m.translation[0], "ty": m.translation[1]}
                for m in self.maps
            ],
            "ball": {"cx": self.ball_center[0], "cy": self.ball_center[1],
                     "r": self.ball_radius},
        }

    @classmethod
    def from_json(cls, data):
        if isinstance(data, str):
            data = json.loads(data)
        maps = [
            AffineMap(Matrix2(m["a"], m["b"], m["c"], m["d"]),
                      (m["tx"], m["ty"]))
            for m in data["maps"]
        ]
        ball = data.get("ball")
        if ball:
            return cls(maps, (ball["cx"], ball["cy"]), ball["r"])
        return cls(maps)


@dataclass(frozen=True)
class StoppingSet:
    """Prefix-free exhaustive set of stopping words at some scale."""

    words: tuple
    criterion: str = "by-alpha1"

    def __len__(self):
        return len(self.words)

    def is_prefix_free(self):
        seen = set(w.indices for w in self.words)
        for w in self.words:
            for k in range(len(w)):
                if w.indices[:k] in seen:
                    return False
        return True


def _cloud_diameter(pts):
    """Diameter of a finite planar point set via its convex hull."""
    if len(pts) < 2:
        return 0.0
    if len(pts) > 16:
        try:
            from scipy.spatial import ConvexHull
            pts = pts[ConvexHull(pts).vertices]
        except Exception:
            pass
    diff = pts[:, None, :] - pts[None, :, :]
    return float(np.sqrt((diff ** 2).sum(-1)).max())
