"""Command-line front end: ingest planar IFS or carpet specs, run the
condition checks and dimension estimators, and emit deterministic JSON
reports and SVG renders.

Exit codes: 0 success, 1 input error, 2 condition failure, 3 budget or
convergence failure.
"""

import argparse
import hashlib
import json
import math
import os
import sys

import numpy as np

from . import carpets
from .errors import AffinedimError, BudgetExceeded, HypothesisViolated, \
    Inconclusive, NotConverged, NotDominated, NotSeparated
from .estimators import assouad_two_scale, box_dim, lower_two_scale
from .geometry import bochi_morris_scan, content_consistency, \
    hausdorff_content_projection, posc_check, projected_gap, slice_points, \
    slice_upper_bound, ssc_check, tangent_dimension_scan, \
    transversality_derivative, transversality_tail_bound
from .ifs import Ifs, Word, batch_singular_values
from .projective import PI, ProjPoint, classify_irreducibility, \
    furstenberg_directions, is_dominated, strictly_affine
from .thermo import affinity_dimension, gibbs_spread_by_depth

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_CONDITION = 2
EXIT_BUDGET = 3

FIXTURE_DIR = os.path.join(os.path.dirname(__file__), "fixtures")


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse maps usage errors to exit 2; remap them to the input
    error code so 2 stays reserved for condition failures."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INPUT)


def fixture_path(name):
    """Resolve a shipped fixture by file name, verifying its checksum."""
    path = os.path.join(FIXTURE_DIR, name)
    if not os.path.exists(path):
        raise InputError(f"unknown fixture {name!r}")
    with open(os.path.join(FIXTURE_DIR, "checksums.json")) as fh:
        sums = json.load(fh)
    digest = hashlib.sha256(open(path, "rb").read()).hexdigest()
    if sums.get(name) != digest:
        raise InputError(f"fixture {name!r} failed its checksum")
    return path


def load_input(path):
    """Parse an input file into (ifs, carpet_spec-or-None).

    Accepts either a map list {"maps": [{a,b,c,d,tx,ty}, ...], "ball":
    {cx,cy,r}?} or a carpet {"p", "q", "digits"}; bare fixture names
    resolve against the shipped fixtures directory.
    """
    if path is None:
        raise InputError("--input is required")
    if not os.path.exists(path) and os.path.sep not in path:
        path = fixture_path(path)
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as e:
        raise InputError(f"cannot read {path}: {e}")
    except json.JSONDecodeError as e:
        raise InputError(f"malformed JSON in {path}: {e}")
    try:
        if "maps" in data:
            return Ifs.from_json(data), None
        if "p" in data and "q" in data and "digits" in data:
            spec = carpets.CarpetSpec.from_json(data)
            return carpets.to_ifs(spec), spec
    except (KeyError, TypeError, ValueError) as e:
        raise InputError(f"invalid spec in {path}: {e}")
    raise InputError(f"{path}: expected a 'maps' list or a p/q/digits carpet")


def write_report(report, out, default_name):
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    if out is None:
        sys.stdout.write(text)
        return None
    path = os.path.join(out, default_name) if os.path.isdir(out) else out
    with open(path, "w") as fh:
        fh.write(text)
    return path


# ---------------------------------------------------------------------------
# check


def cmd_check(args):
    ifs, spec = load_input(args.input)
    depth = args.depth or 6
    report = {"command": "check", "input": os.path.basename(args.input)}
    failures = 0

    dom = is_dominated(ifs, depth=max(depth, 3))
    report["domination"] = {
        "certified": dom["certified"],
        "fitted_tau": dom["fitted_tau"],
        "fitted_C": dom["fitted_C"],
        "multicone": dom["multicone"].to_json() if dom["multicone"] else None,
    }

    try:
        cls = classify_irreducibility(ifs)
        report["irreducibility"] = {"class": cls.tag, "certified": True}
    except Inconclusive as e:
        report["irreducibility"] = {"class": "Inconclusive", "certified": False,
                                    "diagnostic": str(e)}

    found, witness = strictly_affine(ifs)
    report["strictly_affine"] = {"found": found,
                                 "witness": str(witness) if witness else None}

    ssc = ssc_check(ifs, depth)
    report["ssc"] = ssc.to_json()
    if ssc.separated == "Overlap":
        failures += 1

    try:
        posc = posc_check(ifs, depth)
        report["posc"] = posc.to_json()
    except (NotDominated, AffinedimError) as e:
        report["posc"] = {"status": "skipped", "diagnostic": str(e)}

    if dom["certified"]:
        da = furstenberg_directions(ifs, depth=30,
                                    multicone=dom["multicone"])
        report["limit_directions"] = {
            "depth": da.depth,
            "n_intervals": len(da.intervals),
            "width_bound": da.width_bound,
            "singleton_plausible": len(da.intervals) == 1
            and da.width_bound < 0.1,
        }
    else:
        report["limit_directions"] = {"status": "skipped",
                                      "diagnostic": "no multicone certificate"}

    write_report(report, args.out, "check.json")
    return EXIT_CONDITION if failures else EXIT_OK


# ---------------------------------------------------------------------------
# dims


def cmd_dims(args):
    ifs, spec = load_input(args.input)
    report = {"command": "dims", "input": os.path.basename(args.input)}
    warnings = []

    budget = args.budget or 200_000
    s_star, bracket = affinity_dimension(ifs, tol=args.tol or 1e-10,
                                         budget=budget)
    report["affinity"] = {"value": s_star, "bracket": list(bracket)}

    cloud = ifs.attractor_sample(0.002)
    base = float(spec.q) if spec is not None else 2.0
    cover = box_dim(cloud, base=base)
    report["box"] = cover.to_json()
    if cover.residual > 0.05:
        warnings.append(f"box-count fit residual {cover.residual:.3f} > 0.05")

    try:
        report["assouad_lower_estimate"] = assouad_two_scale(cloud,
                                                             seed=args.seed)
        report["lower_upper_estimate"] = lower_two_scale(cloud, seed=args.seed)
    except AffinedimError as e:
        warnings.append(f"two-scale estimates skipped: {e}")

    try:
        report["slice_upper_bound"] = slice_upper_bound(ifs,
                                                        depth=args.depth or 6)
    except NotSeparated as e:
        report["slice_upper_bound"] = None
        warnings.append(f"slice bound skipped: {e}")

    try:
        scan = tangent_dimension_scan(ifs, seed=args.seed)
        report["tangents"] = {"max_dim": scan["max_dim"],
                              "min_dim": scan["min_dim"],
                              "dims": scan["dims"]}
    except (AffinedimError, ValueError) as e:
        warnings.append(f"tangent scan skipped: {e}")

    if spec is not None:
        report["carpet_formulas"] = {
            "affinity": carpets.carpet_affinity(spec),
            "mackay_assouad": carpets.mackay_assouad(spec),
            "mcmullen_hausdorff": carpets.mcmullen_hausdorff(spec),
            "fraser_lower": carpets.fraser_lower(spec),
        }

    report["warnings"] = warnings
    write_report(report, args.out, "dims.json")
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify suites


def _skip(suite, reason):
    return {"suite": suite, "status": "Skipped", "reason": reason}, EXIT_OK


def _verdict(suite, passed, measured):
    return ({"suite": suite, "status": "Pass" if passed else "Fail",
             "measured": measured},
            EXIT_OK if passed else EXIT_CONDITION)


def _suite_diml(ifs, spec, args):
    try:
        cls = classify_irreducibility(ifs)
    except Inconclusive as e:
        return _skip("diml", str(e))
    if cls.tag != "StronglyIrreducible":
        return _skip("diml", f"needs strong irreducibility, got {cls.tag}")
    depth = args.depth or 6
    ssc = ssc_check(ifs, depth)
    while ssc.separated == "Unknown" and depth < 14:
        # inconclusive just means the cylinder balls are still too fat
        depth += 4
        ssc = ssc_check(ifs, depth)
    if ssc.separated != "Certified":
        return _skip("diml", f"needs certified separation, got {ssc.separated}")
    s_star, _ = affinity_dimension(ifs)
    if s_star <= 1.0:
        return _skip("diml", f"needs affinity dimension > 1, got {s_star}")
    cloud = ifs.attractor_sample(0.0008)
    est = lower_two_scale(cloud, seed=args.seed)
    return _verdict("diml", 0.85 <= est <= 1.15,
                    {"lower_two_scale": est, "affinity": s_star})


def _suite_dima(ifs, spec, args):
    if spec is None:
        return _skip("dima", "needs a carpet spec input")
    cloud = ifs.attractor_sample(0.002)
    assouad = assouad_two_scale(cloud, seed=args.seed)
    v = ProjPoint(PI / 2.0)     # vertical slices through column points
    best = 0.0
    xs = sorted({(j + 0.0) / spec.p for j, _ in spec.digits})
    for x0 in xs:
        pc = slice_points(ifs, v, np.array([x0, 0.0]), 0.002, 1e-4)
        if len(pc) < 32:
            continue
        try:
            d = box_dim(pc, base=float(spec.q)).dimension
        except AffinedimError:
            continue
        best = max(best, d)
    gap = abs(assouad - 1.0 - best)
    return _verdict("dima", gap <= 0.2,
                    {"assouad_two_scale": assouad, "max_slice_dim": best,
                     "gap": gap})


def _suite_ahl(ifs, spec, args):
    s_star, _ = affinity_dimension(ifs)
    if s_star > 1.0:
        return _skip("ahl", f"content comparison needs s <= 1, got {s_star}")
    try:
        out = content_consistency(ifs, n_cylinders=20, depth=args.depth or 8,
                                  seed=args.seed)
    except (NotDominated, NotConverged) as e:
        return _skip("ahl", str(e))
    return _verdict("ahl", out["cv"] <= 0.2, {"cv": out["cv"], "s": out["s"]})


def _suite_gibbs(ifs, spec, args):
    s_star, _ = affinity_dimension(ifs)
    depths = [d for d in range(4, 9) if ifs.n_maps ** d <= 200_000]
    if len(depths) < 2:
        return _skip("gibbs", "alphabet too large for the depth ladder")
    try:
        spreads = gibbs_spread_by_depth(ifs, s_star, depths)
    except (NotDominated, NotConverged) as e:
        return _skip("gibbs", str(e))
    vals = [spreads[d] for d in depths]
    growth = max(b / a for a, b in zip(vals, vals[1:]))
    ok = growth < 1.05 or all(abs(v - 1.0) < 1e-9 for v in vals)
    return _verdict("gibbs", ok,
                    {"s": s_star, "spreads": {str(d): spreads[d]
                                              for d in depths},
                     "max_growth_per_depth": growth})


def _suite_content(ifs, spec, args):
    s_star, _ = affinity_dimension(ifs)
    if s_star > 1.0:
        return _skip("content", f"needs s <= 1, got {s_star}")
    from .thermo import _cylinder_directions
    try:
        thetas = _cylinder_directions(ifs, 4)
    except NotDominated as e:
        return _skip("content", str(e))
    rng = np.random.Generator(np.random.Philox(key=args.seed))
    idx = rng.choice(len(thetas), size=min(12, len(thetas)), replace=False)
    drops = {}
    for k in idx:
        v = ProjPoint(float(thetas[k]))
        v6 = hausdorff_content_projection(ifs, v, s_star, 6).value
        v10 = hausdorff_content_projection(ifs, v, s_star, 10).value
        drops[str(ifs.word_from_flat(int(k), 4))] = 1.0 - v10 / v6
    worst = max(drops.values())
    return _verdict("content", worst >= 0.30,
                    {"s": s_star, "max_drop": worst, "drops": drops})


def _suite_trans(ifs, spec, args):
    mats = [m.linear for m in ifs.maps]
    arrs = np.stack([m.array for m in mats])
    a_max = float(batch_singular_values(arrs)[0].max())
    if a_max >= 0.5:
        return _skip("trans", "needs max matrix norm < 1/2")
    ts = [m.v for m in ifs.maps]
    rng = np.random.Generator(np.random.Philox(key=args.seed))
    n = ifs.n_maps
    depth = 30
    tail = transversality_tail_bound(mats, depth)
    h = 1e-6
    worst_err = 0.0
    worst_val = math.inf
    for _ in range(10):
        theta = float(rng.uniform(0.0, 2.0 * math.pi))
        w = np.array([math.cos(theta), math.sin(theta)])
        i0, j0 = rng.choice(n, size=2, replace=False) + 1
        wi = (int(i0),) + tuple(int(t) + 1 for t in rng.integers(0, n, 2))
        wj = (int(j0),) + tuple(int(t) + 1 for t in rng.integers(0, n, 2))
        val = transversality_derivative(mats, w, wi, wj, depth)
        # central difference in the first-letter translation along w
        def gap(shift):
            ts2 = list(ts)
            ts2[wi[0] - 1] = np.asarray(ts[wi[0] - 1]) + shift * w
            return projected_gap(mats, ts2, w, wi, wj, depth)
        fd = abs(gap(h) - gap(-h)) / (2.0 * h)
        worst_err = max(worst_err, abs(val - fd))
        worst_val = min(worst_val, val)
    # both series tails are geometric, so the leading identity term can
    # lose at most 2 a/(1-a) of its unit size
    lower = max(0.0, 1.0 - 2.0 * a_max / (1.0 - a_max))
    ok = worst_err <= 1e-6 and worst_val >= lower - tail
    return _verdict("trans", ok,
                    {"max_fd_error": worst_err, "min_value": worst_val,
                     "guaranteed_lower": lower, "tail_bound": tail})


SUITES = {
    "diml": _suite_diml,
    "dima": _suite_dima,
    "ahl": _suite_ahl,
    "gibbs": _suite_gibbs,
    "content": _suite_content,
    "trans": _suite_trans,
}


def cmd_verify(args):
    ifs, spec = load_input(args.input)
    report, code = SUITES[args.suite](ifs, spec, args)
    report["command"] = "verify"
    report["input"] = os.path.basename(args.input)
    write_report(report, args.out, f"verify_{args.suite}.json")
    return code


# ---------------------------------------------------------------------------
# render


def _fmt(x):
    return f"{x:.6f}"


def cmd_render(args):
    ifs, spec = load_input(args.input)
    depth = args.depth or 3
    c, r = ifs.ball_center, ifs.ball_radius
    corners = np.array([[c[0] - r, c[1] - r], [c[0] + r, c[1] - r],
                        [c[0] + r, c[1] + r], [c[0] - r, c[1] + r]])
    prods = ifs.level_products(depth)
    pts, _ = ifs._cylinder_centers(depth)
    # polygon vertices: affine image of the bounding square, word order
    offs = np.einsum("wpq,kq->wkp", prods, corners - c)
    polys = pts[:, None, :] + offs

    allp = polys.reshape(-1, 2)
    x0, y0 = allp.min(axis=0)
    x1, y1 = allp.max(axis=0)
    pad = 0.05 * max(x1 - x0, y1 - y0, 1e-9)
    x0, y0, x1, y1 = x0 - pad, y0 - pad, x1 + pad, y1 + pad

    def svg_xy(p):
        # flip y so the mathematical orientation survives the SVG axis
        return _fmt(p[0]), _fmt(y0 + y1 - p[1])

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" '
        f'viewBox="{_fmt(x0)} {_fmt(y0)} {_fmt(x1 - x0)} {_fmt(y1 - y0)}" '
        f'width="640" height="640">',
    ]
    for poly in polys:
        coords = " ".join(",".join(svg_xy(p)) for p in poly)
        lines.append(f'<polygon class="cylinder" points="{coords}" '
                     'fill="#1f3a5f" fill-opacity="0.35" stroke="none"/>')
    if args.directions:
        da = furstenberg_directions(ifs, depth=20)
        span = 0.6 * max(x1 - x0, y1 - y0)
        cx, cy = ifs.ball_center
        for p in da.sample_directions(per_interval=3):
            dx, dy = math.cos(p.angle), math.sin(p.angle)
            a = svg_xy((cx - span * dx, cy - span * dy))
            b = svg_xy((cx + span * dx, cy + span * dy))
            lines.append(f'<line class="direction" x1="{a[0]}" y1="{a[1]}" '
                         f'x2="{b[0]}" y2="{b[1]}" stroke="#b22222" '
                         'stroke-width="0.002"/>')
    lines.append("</svg>")
    text = "\n".join(lines) + "\n"

    out = args.out
    if out is None:
        sys.stdout.write(text)
    else:
        path = os.path.join(out, "render.svg") if os.path.isdir(out) else out
        with open(path, "w") as fh:
            fh.write(text)
    return EXIT_OK


# ---------------------------------------------------------------------------
# carpet


def cmd_carpet(args):
    ifs, spec = load_input(args.input)
    if spec is None:
        raise InputError("carpet command needs a p/q/digits input")
    report = {
        "command": "carpet",
        "input": os.path.basename(args.input),
        "p": spec.p, "q": spec.q, "n_maps": spec.n_maps,
        "column_counts": spec.column_counts(),
        "uniform_fibers": carpets.uniform_fibers(spec),
        "affinity": carpets.carpet_affinity(spec),
        "mackay_assouad": carpets.mackay_assouad(spec),
        "mcmullen_hausdorff": carpets.mcmullen_hausdorff(spec),
        "fraser_lower": carpets.fraser_lower(spec),
    }
    if args.eps is not None:
        fix = carpets.example_fixture(args.eps)
        report["s_eps"] = fix["s_eps"]
        report["chain_holds"] = bool(
            report["fraser_lower"] < report["affinity"] <= fix["s_eps"]
            < report["mackay_assouad"])
    write_report(report, args.out, "carpet.json")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point


def build_parser():
    parser = _Parser(prog="affinedim",
                     description="planar self-affine set analysis toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--input", required=True,
                       help="IFS or carpet JSON file, or a fixture name")
        p.add_argument("--depth", type=int, default=None)
        p.add_argument("--budget", type=int, default=None)
        p.add_argument("--tol", type=float, default=None)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=1,
                       help="parallelism hint; results are identical for "
                            "any value")
        p.add_argument("--out", default=None,
                       help="output file or directory (default stdout)")

    common(sub.add_parser("check", help="condition certificates"))
    common(sub.add_parser("dims", help="dimension table"))
    p = sub.add_parser("verify", help="named acceptance suite on a fixture")
    p.add_argument("suite", choices=sorted(SUITES))
    common(p)
    p = sub.add_parser("render", help="SVG of depth-n cylinders")
    p.add_argument("--directions", action="store_true",
                   help="overlay the limit-direction fan")
    common(p)
    p = sub.add_parser("carpet", help="carpet closed forms")
    p.add_argument("--eps", type=float, default=None,
                   help="also build the augmented example at this epsilon")
    common(p)
    return parser


COMMANDS = {
    "check": cmd_check,
    "dims": cmd_dims,
    "verify": cmd_verify,
    "render": cmd_render,
    "carpet": cmd_carpet,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except (BudgetExceeded, NotConverged) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except HypothesisViolated as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_CONDITION


if __name__ == "__main__":
    sys.exit(main())
