"""Numerical trap certificates for interior points of the locus.

Pipeline: pick a translation ``w`` that pushes a hull-edge endpoint into the
gap next to that edge, move the parameters slightly so that ``w`` becomes the
normalized translation between the length-``M`` words induced by a series
vanishing at both coordinates, then check the trap conditions on a raster of
the filled attractor.  Every check is floating point; certificates carry
``rigorous = False``.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.spatial import cKDTree
from skimage import measure

from . import cover
from .bseries import BSeries, evaluate
from .errors import (
    DomainError,
    IncreaseDepthError,
    InconclusiveGapError,
    MagnitudeError,
    PreconditionError,
    SolveFailure,
    TrapCheckFailure,
)
from .hull import gap_segment, trap_like_vector
from .ifs import (
    Params,
    PlanePoint,
    SignedWord,
    attractor_sample,
    cylinder_offset,
    eval_address,
    normalized_translation,
    words_from_series,
)

M_VALUES = tuple(range(20, 121, 10))
SHRINK = (1.0, 0.5, 0.25)


# ---------------------------------------------------------------------------
# perturbation solve
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PerturbationSolve:
    params_start: Params
    params_solved: Params
    M: int
    residuals: tuple[float, float]
    brackets: tuple[tuple[float, float], tuple[float, float]]


def _translation_equation(f: BSeries, M: int, target: float):
    # u_i - v_i = 2 f_i over the first M letters
    def g(x):
        return 2.0 * float(evaluate(f, x, M - 1)) - x**M * target

    return g


def _solve_scalar(f: BSeries, x0: float, target: float, M: int, radius: float, tol: float):
    g = _translation_equation(f, M, target)
    lo, hi = x0 - radius, x0 + radius
    if max(abs(lo), abs(hi)) >= 1:
        lo, hi = max(lo, -1 + 1e-12), min(hi, 1 - 1e-12)
    reach = min(abs(2.0 * float(evaluate(f, lo))), abs(2.0 * float(evaluate(f, hi))))
    if abs(x0) ** M * abs(target) >= reach:
        raise MagnitudeError(
            f"|x0|^M |w| = {abs(x0) ** M * abs(target):.3g} exceeds the local range {reach:.3g} of 2 f on the radius; increase M"
        )
    # nearest sign change to x0 on a fine grid
    xs = x0 + np.linspace(-radius, radius, 2001)
    xs = xs[np.abs(xs) < 1]
    vals = np.array([g(x) for x in xs])
    flips = np.nonzero(vals[:-1] * vals[1:] <= 0)[0]
    if len(flips) == 0:
        raise SolveFailure(f"no sign change of the translation equation within {radius} of {x0}")
    k = flips[np.argmin(np.abs(xs[flips] - x0))]
    a, b = float(xs[k]), float(xs[k + 1])
    ga = g(a)
    for _ in range(200):
        mid = 0.5 * (a + b)
        if b - a <= tol * 1e-3 or mid in (a, b):
            break
        gm = g(mid)
        if gm == 0:
            a = b = mid
            break
        if (gm > 0) == (ga > 0):
            a, ga = mid, gm
        else:
            b = mid
    x = 0.5 * (a + b)
    return x, g(x), (float(xs[k]), float(xs[k + 1]))


def solve_perturbation(
    params0: Params,
    f: BSeries,
    w,
    M: int,
    radius: float = 0.05,
    tol: float = 1e-10,
) -> PerturbationSolve:
    """Parameters near ``params0`` where ``w`` is the normalized translation of the length-``M`` words of ``f``.

    Solves ``2 f_{M-1}(x) = x^M w_k`` separately in each coordinate by
    bisection on a sign-change bracket.  ``w = 0`` gives the zeros of the
    truncation.
    """
    if M < 1:
        raise ValueError("M must be positive")
    for x0 in (params0.gamma, params0.lam):
        if abs(float(evaluate(f, x0))) > max(tol, 1e-9) * 1e2:
            raise PreconditionError(f"{x0} is not a zero of {f}")
    w = np.asarray(w, dtype=float)
    xg, rg, bg = _solve_scalar(f, params0.gamma, float(w[0]), M, radius, tol)
    xl, rl, bl = _solve_scalar(f, params0.lam, float(w[1]), M, radius, tol)
    res = (float(rg), float(rl))
    if max(abs(rg), abs(rl)) > tol:
        raise SolveFailure(f"residuals {res} above tolerance {tol}")
    return PerturbationSolve(params0, Params(xg, xl), M, res, (bg, bl))


# ---------------------------------------------------------------------------
# trap verification
# ---------------------------------------------------------------------------


@dataclass
class Witness:
    label: str
    point: tuple[float, float]  # trap point, in u(A) or v(A)
    base: tuple[float, float]  # preimage under v in the normalized frame
    address: str
    margin: float


@dataclass
class TrapCertificate:
    params_solved: Params
    u: SignedWord
    v: SignedWord
    order_m: int
    w: PlanePoint
    disk_eps: float
    witnesses: list[Witness]
    margins: dict
    tolerances: dict
    rigorous: bool = False
    trace: list = field(default_factory=list)

    @property
    def min_margin(self) -> float:
        return min(self.margins.values())

    def to_dict(self) -> dict:
        return {
            "params_solved": [self.params_solved.gamma, self.params_solved.lam],
            "u": str(self.u),
            "v": str(self.v),
            "order_m": self.order_m,
            "w": [self.w.x, self.w.y],
            "disk_eps": self.disk_eps,
            "witnesses": [asdict(wi) for wi in self.witnesses],
            "margins": self.margins,
            "tolerances": self.tolerances,
            "rigorous": self.rigorous,
            "trace": self.trace,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _runs(labels: np.ndarray) -> list[tuple[int, np.ndarray]]:
    """Cyclic runs of equal nonzero labels: ``(label, indices)``."""
    idx = np.nonzero(labels)[0]
    if len(idx) == 0:
        return []
    lab = labels[idx]
    cuts = np.nonzero(lab[1:] != lab[:-1])[0] + 1
    groups = np.split(np.arange(len(idx)), cuts)
    runs = [(int(lab[g[0]]), idx[g]) for g in groups]
    if len(runs) > 1 and runs[0][0] == runs[-1][0]:
        runs[0] = (runs[0][0], np.concatenate([runs[-1][1], runs[0][1]]))
        runs.pop()
    return runs


def default_grid(params: Params) -> float:
    """1/512 of the attractor's diameter, capped at 0.005."""
    diam = 2 * math.hypot(*(1 / (1 - np.abs(params.diag))))
    return min(diam / 512, 0.005)


def verify_trap(
    params: Params,
    u: SignedWord,
    v: SignedWord,
    eps: float,
    grid: float | None = None,
    margin_tol: float = 1e-9,
    depth: int = 44,
) -> TrapCertificate:
    """Check that ``u, v`` form a trap at ``params`` with disk ``N_eps(X)``.

    Raises ``TrapCheckFailure`` naming the first failed condition.
    """
    if not (u.is_finite and v.is_finite) or len(u) != len(v):
        raise PreconditionError("u and v must be finite words of equal length")
    if u.letter(0) == v.letter(0):
        raise PreconditionError(f"{u} and {v} share a common prefix")
    if u.letter(0) != "p":
        raise PreconditionError("u must start with p and v with m")
    if not eps > 0:
        raise PreconditionError("eps must be positive")
    h = grid or default_grid(params)
    m = len(u)
    w = np.array(normalized_translation(u, v, params))
    trace = []

    def fail(cond, deficit, msg):
        raise TrapCheckFailure(cond, float(deficit), msg)

    # item 3: gap below eps
    delta_up, _, _ = cover.gap_upper_bound(params)
    if not eps - delta_up > margin_tol:
        fail("gap", delta_up - eps, f"gap upper bound {delta_up:.3g} is not below eps {eps:.3g}")

    L = params.contraction
    slack = h / (1 - L) + h  # raster rounding plus pixel size
    extent = 2 / (1 - np.abs(params.diag))
    if np.any(np.abs(w) >= extent):
        fail("overlap", float(np.max(np.abs(w) - extent)), "X and X + w are disjoint (w exceeds the attractor's extent)")
    K = cover.raster_attractor(params, h, margin=float(np.abs(w).max()) + eps + 4 * h)
    X = cover.fill(K)
    dX = cover.distance_to(X)
    D = X.with_mask(dX <= eps)
    if cover.components(D.mask) != 1:
        fail("connected", 1.0, "the disk N_eps(X) is not connected on the raster")
    dK = cover.distance_to(K)
    if not np.all(D.mask[dK <= eps / 2]):
        fail("containment", eps / 2, "N_eps/2(A) escapes the disk on the raster")

    Xw = cover.shift(X, w)
    union = X.mask | Xw.mask
    if not np.any(X.mask & Xw.mask):
        fail("overlap", 1.0, "X and X + w are disjoint")
    dXw = cover.distance_to(Xw)
    outer = cover.fill(X.with_mask(union)).mask
    contours = measure.find_contours(np.pad(outer, 1).astype(float), 0.5)
    ring = max(contours, key=len) - 1.0
    ij = np.rint(ring).astype(np.int64)
    ij[:, 0] = np.clip(ij[:, 0], 0, union.shape[0] - 1)
    ij[:, 1] = np.clip(ij[:, 1], 0, union.shape[1] - 1)
    sep_from_w = dXw[ij[:, 0], ij[:, 1]]
    sep_from_x = dX[ij[:, 0], ij[:, 1]]
    labels = np.zeros(len(ring), dtype=np.int8)
    labels[(sep_from_w > eps + slack) & (sep_from_x <= h)] = 1  # X \ (X + w)
    labels[(sep_from_x > eps + slack) & (Xw.mask[ij[:, 0], ij[:, 1]] | (sep_from_w <= h))] = 2  # (X + w) \ X
    runs = _runs(labels)
    trace.append({"runs": len(runs)})
    if len(runs) < 4:
        fail("alternation", 4 - len(runs), f"only {len(runs)} alternating boundary runs")

    plane = X.to_plane(ring)
    tree = cKDTree(plane)

    def pick(run):
        lab, ids = run
        score = sep_from_w[ids] if lab == 1 else sep_from_x[ids]
        return ids[int(np.argmax(score))]

    best = None
    for s in range(len(runs)):
        chosen = [runs[(s + t) % len(runs)] for t in range(4)]
        ids = [pick(r) for r in chosen]
        score = min(
            (sep_from_w[i] if r[0] == 1 else sep_from_x[i]) for i, r in zip(ids, chosen)
        )
        if best is None or score > best[0]:
            best = (score, chosen, ids)
    _, chosen, ids = best

    base_pts, addrs, margins, kinds = [], [], [], []
    for r, i in zip(chosen, ids):
        z = plane[i]
        if r[0] == 1:
            snap = cover.attractor_distance(params, z, depth)
            p = snap.nearest
            sep = cover.attractor_distance(params, p - w, depth)
            rast = float(X.lookup(dX, p - w)[0])
            margin = min(sep.lower, rast - slack) - eps
        else:
            snap = cover.attractor_distance(params, z - w, depth)
            p = snap.nearest + w
            sep = cover.attractor_distance(params, p, depth)
            rast = float(X.lookup(dX, p)[0])
            margin = min(sep.lower, rast - slack) - eps
        base_pts.append(p)
        addrs.append(snap.address)
        margins.append(float(margin))
        kinds.append(r[0])

    # order of the snapped points along the boundary must still alternate
    _, pos = tree.query(np.array(base_pts))
    cyc = [kinds[k] for k in np.argsort(pos)]
    if any(cyc[k] == cyc[(k + 1) % 4] for k in range(4)):
        fail("alternation", 1.0, "snapped witnesses no longer alternate")

    Tm = params.diag**m
    sv = np.array(cylinder_offset(v, params))
    witnesses = []
    names = {1: ["q+", "q-"], 2: ["p+", "p-"]}
    for p, addr, margin, kind in zip(base_pts, addrs, margins, kinds):
        name = names[kind].pop(0)
        if not margin > margin_tol:
            cond = "q_outside_u_disk" if kind == 1 else "p_outside_v_disk"
            fail(cond, margin_tol - margin, f"witness {name} misses by {margin_tol - margin:.3g}")
        point = Tm * p + sv
        # kind 1: p in A, v(p) in v(A); kind 2: p - w in A, v(p) = u(p - w) in u(A)
        address = str(addr.prepend(v.preperiod if kind == 1 else u.preperiod))
        witnesses.append(Witness(name, (float(point[0]), float(point[1])), (float(p[0]), float(p[1])), address, margin))
    witnesses.sort(key=lambda x: x.label)

    margin_map = {wi.label: wi.margin for wi in witnesses}
    margin_map["gap"] = float(eps - delta_up)
    margin_map["containment"] = float(eps / 2)
    tolerances = {
        "grid": h,
        "raster_slack": slack,
        "margin_tol": margin_tol,
        "distance_depth": depth,
        "gap_upper_bound": float(delta_up),
    }
    return TrapCertificate(
        params, u, v, m, PlanePoint(float(w[0]), float(w[1])), float(eps), witnesses, margin_map, tolerances, False, trace
    )


def recheck(cert: TrapCertificate, params: Params | None = None) -> TrapCertificate:
    """Run ``verify_trap`` again with the certificate's words and tolerances."""
    t = cert.tolerances
    return verify_trap(
        params or cert.params_solved,
        cert.u,
        cert.v,
        cert.disk_eps,
        grid=t["grid"],
        margin_tol=t["margin_tol"],
        depth=t["distance_depth"],
    )


# ---------------------------------------------------------------------------
# full pipeline
# ---------------------------------------------------------------------------


def _unstable_neighbours(cert: TrapCertificate, step: float) -> list[str]:
    p = cert.params_solved
    out = []
    for dg, dl in ((step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)):
        try:
            recheck(cert, Params(p.gamma + dg, p.lam + dl))
        except TrapCheckFailure as exc:
            out.append(f"({dg:+g}, {dl:+g}) {exc.condition}")
    return out


def certify_interior(
    params0: Params,
    f: BSeries,
    search_radius: float = 0.05,
    M_values=M_VALUES,
    shrink=SHRINK,
    eps: float | None = None,
    grid: float | None = None,
    max_certificates: int = 1,
    stability: float = 0.0,
) -> tuple[list[TrapCertificate], list[dict]]:
    """Search for trap certificates near ``params0``; returns ``(certificates, trace)``.

    With ``stability > 0`` a certificate is kept only if it also verifies at
    the four parameters ``stability`` away along the axes.
    """
    if params0.on_diagonal:
        raise PreconditionError("diagonal parameters are excluded")
    params0.require_invertible()
    trace: list[dict] = []
    try:
        seg = gap_segment(params0)
    except InconclusiveGapError as exc:
        trace.append({"stage": "gap_segment", "error": str(exc)})
        return [], trace
    sample = attractor_sample(params0, 12).anchored()
    u_full, v_full = words_from_series(f)
    h = grid or default_grid(params0)
    certs = []
    for s in shrink:
        w = trap_like_vector(params0, seg, sample, shrink=s)
        for M in M_values:
            entry = {"shrink": s, "M": M, "w": [w.x, w.y]}
            trace.append(entry)
            try:
                sol = solve_perturbation(params0, f, w, M, radius=search_radius)
            except (SolveFailure, DomainError) as exc:
                entry["error"] = f"{type(exc).__name__}: {exc}"
                continue
            p1 = sol.params_solved
            entry["params_solved"] = [p1.gamma, p1.lam]
            if math.hypot(p1.gamma - params0.gamma, p1.lam - params0.lam) > search_radius:
                entry["error"] = "solved parameters outside the search radius"
                continue
            drift = float(np.hypot(*(np.array(normalized_translation(u_full.prefix(M), v_full.prefix(M), p1)) - np.array(w))))
            if drift > h:
                # T^-M amplifies rounding in the solved parameters
                entry["error"] = f"ill-conditioned: translation at the solved parameters is off by {drift:.3g}"
                continue
            e = eps if eps is not None else 2 * h
            try:
                cert = verify_trap(p1, u_full.prefix(M), v_full.prefix(M), e, grid=h)
            except TrapCheckFailure as exc:
                entry["error"] = f"{exc.condition}: {exc}"
                continue
            if stability > 0:
                shaky = _unstable_neighbours(cert, stability)
                if shaky:
                    entry["error"] = f"unstable at {stability:g}: {shaky[0]}"
                    continue
            cert.trace = [dict(t) for t in trace]
            entry["certified"] = True
            certs.append(cert)
            if len(certs) >= max_certificates:
                return certs, trace
    return certs, trace


# ---------------------------------------------------------------------------
# short-hop paths
# ---------------------------------------------------------------------------


def short_hop_path(params: Params, a: SignedWord, b: SignedWord, depth: int) -> list[PlanePoint]:
    """Chain of genuine attractor points from ``pi(a)`` to ``pi(b)`` with short hops.

    Nodes are the depth-``depth`` points ``pi(u p^inf)``; two nodes are linked
    when closer than ``2 L^depth`` times the attractor's half-diagonal.  The shortest chain (by hop count) is returned.
    """
    if depth < 1:
        raise ValueError("depth must be positive")
    pa, pb = np.array(eval_address(a, params)), np.array(eval_address(b, params))
    if np.allclose(pa, pb, rtol=0, atol=0):
        return [PlanePoint(*pa)]
    sample = attractor_sample(params, depth)
    pts = np.vstack([pa, sample.anchored(), pb])
    bound = 2 * params.contraction**depth * math.hypot(*(1 / (1 - np.abs(params.diag))))
    tree = cKDTree(pts)
    pairs = tree.query_pairs(bound, output_type="ndarray")
    from scipy.sparse import coo_matrix
    from scipy.sparse.csgraph import breadth_first_order

    n = len(pts)
    graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    order, pred = breadth_first_order(graph, 0, directed=False, return_predecessors=True)
    if pred[n - 1] < 0:
        raise IncreaseDepthError(f"no chain with hops below {bound:.3g} at depth {depth}")
    path = [n - 1]
    while path[-1] != 0:
        path.append(int(pred[path[-1]]))
    return [PlanePoint(*pts[i]) for i in reversed(path)]


def max_hop(path) -> float:
    p = np.asarray(path)
    if len(p) < 2:
        return 0.0
    return float(np.hypot(*np.diff(p, axis=0).T).max())
