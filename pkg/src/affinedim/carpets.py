"""Grid-aligned self-affine carpets: closed-form dimensions and the
augmented five-map example with its extra positive matrix.
"""

from dataclasses import dataclass
import json
import math

from scipy.optimize import brentq

from .errors import PlacementFailed
from .ifs import AffineMap, Ifs, Matrix2, svf
from .geometry import ssc_check


@dataclass(frozen=True)
class CarpetSpec:
    """Subdivision p x q (q > p >= 2) with a chosen digit set of cells
    (j, k), j indexing columns and k rows."""

    p: int
    q: int
    digits: tuple

    def __post_init__(self):
        if not (isinstance(self.p, int) and isinstance(self.q, int)):
            raise TypeError("p and q must be integers")
        if not self.q > self.p >= 2:
            raise ValueError("need q > p >= 2")
        digs = tuple(sorted((int(j), int(k)) for j, k in self.digits))
        if len(set(digs)) != len(digs):
            raise ValueError("digits must be distinct")
        for j, k in digs:
            if not (0 <= j < self.p and 0 <= k < self.q):
                raise ValueError(f"digit {(j, k)} out of range")
        if len(digs) < 1:
            raise ValueError("need at least one digit")
        object.__setattr__(self, "digits", digs)

    @property
    def n_maps(self):
        return len(self.digits)

    def column_counts(self):
        out = [0] * self.p
        for j, _ in self.digits:
            out[j] += 1
        return out

    def to_json(self):
        return {"p": self.p, "q": self.q,
                "digits": [list(d) for d in self.digits]}

    @classmethod
    def from_json(cls, data):
        if isinstance(data, str):
            data = json.loads(data)
        return cls(int(data["p"]), int(data["q"]),
                   tuple(tuple(d) for d in data["digits"]))


def to_ifs(spec):
    lin = Matrix2(1.0 / spec.p, 0.0, 0.0, 1.0 / spec.q)
    maps = [AffineMap(lin, (j / spec.p, k / spec.q)) for j, k in spec.digits]
    return Ifs(maps)


def mackay_assouad(spec):
    """Column count term plus the heaviest fiber term."""
    n = spec.column_counts()
    cols = sum(1 for c in n if c)
    return math.log(cols) / math.log(spec.p) \
        + math.log(max(n)) / math.log(spec.q)


def mcmullen_hausdorff(spec):
    n = spec.column_counts()
    e = math.log(spec.p) / math.log(spec.q)
    return math.log(sum(c ** e for c in n if c)) / math.log(spec.p)


def fraser_lower(spec):
    """Column count term plus the lightest nonempty fiber term."""
    n = [c for c in spec.column_counts() if c]
    return math.log(len(n)) / math.log(spec.p) \
        + math.log(min(n)) / math.log(spec.q)


def uniform_fibers(spec):
    n = [c for c in spec.column_counts() if c]
    return len(set(n)) == 1


def carpet_affinity(spec):
    """Piecewise closed form for the affinity dimension of the carpet
    tuple: log N / log p while the first singular value dominates, then
    1 + log(N/p)/log q once every column direction is exhausted."""
    n = spec.n_maps
    if n <= spec.p:
        return math.log(n) / math.log(spec.p)
    return 1.0 + math.log(n / spec.p) / math.log(spec.q)


EXAMPLE_SPEC = CarpetSpec(4, 5, ((0, 0), (0, 2), (0, 4), (2, 0), (3, 3)))

B_EPS_BASE = Matrix2(0.6, 0.3, 0.2, 0.5)


def s_eps_root(spec, b, tol=1e-12):
    """Root of log(N phi^s(diag(1/p,1/q)) + phi^s(B)) = 0 on [0, 2]."""
    a = Matrix2(1.0 / spec.p, 0.0, 0.0, 1.0 / spec.q)
    n = spec.n_maps

    def f(s):
        return math.log(n * svf(a, s) + svf(b, s))

    return brentq(f, 1e-9, 2.0, xtol=tol)


def example_fixture(eps, check_separation=True):
    """The five-map carpet plus a small positive matrix, translated into
    an empty grid cell so the first-level pieces stay disjoint.

    Returns the augmented system together with the root s_eps of the
    associated pressure equation and the carpet's closed-form dimensions.
    """
    if not 0.0 < eps < 0.5:
        raise ValueError("eps must be in (0, 0.5)")
    spec = EXAMPLE_SPEC
    b = Matrix2(eps * 0.6, eps * 0.3, eps * 0.2, eps * 0.5)
    base = to_ifs(spec)
    # empty cells in column 1; center the extra piece in cell (1, 2)
    placed = None
    for cell in ((1, 2), (1, 0), (1, 4), (2, 3), (3, 0)):
        j, k = cell
        cx, cy = (j + 0.5) / spec.p, (k + 0.5) / spec.q
        fix = (cx, cy)
        # translation so the fixed point sits at the cell center
        arr = b.array
        tx = fix[0] - arr[0, 0] * fix[0] - arr[0, 1] * fix[1]
        ty = fix[1] - arr[1, 0] * fix[0] - arr[1, 1] * fix[1]
        cand = Ifs(list(base.maps) + [AffineMap(b, (tx, ty))])
        if not check_separation:
            placed = cand
            break
        rep = ssc_check(cand, 5)
        if rep.separated == "Certified":
            placed = cand
            break
    if placed is None:
        raise PlacementFailed("no disjoint cell found for the extra map")
    s_eps = s_eps_root(spec, b)
    return {
        "ifs": placed,
        "s_eps": s_eps,
        "dims": {
            "affinity": carpet_affinity(spec),
            "mackay": mackay_assouad(spec),
            "mcmullen": mcmullen_hausdorff(spec),
            "fraser": fraser_lower(spec),
        },
    }
