"""Explicit R^3 placements of Antoine stages, numerical certification and
OBJ export.

Every torus is a closed core polyline with a tube radius.  The root is the
standard torus around the unit circle in the xy-plane.  Inside a parent,
the k children of a chain are thin loops that follow the parent core along
consecutive, overlapping arcs: each loop runs along the core at offset
``+w`` in a normal direction, turns through a half circle in front of the
arc, returns at offset ``-w`` and closes with a second half circle.  The
normal direction turns by roughly a right angle from one child to the next,
so the half circle of each child passes once through the loop of the next
one: consecutive children form Hopf links.

Scale: a torus of scale ``σ`` has tube radius ``tube_ratio * σ``; its
children have scale ``shrink * σ`` and half-width ``w`` equal to their
scale.  The root has scale 1.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .core import PatternSystem, expand

CORE_SEGMENTS = 128
TUBE_SAMPLES = (100, 10)  # along the core x around the tube: 10^3 points
DISTANCE_TOL = 1e-6
LINK_TOL = 1e-3
OBJ_RESOLUTION = (32, 16)
ROOT_SPACING = 4.0


class EmbeddingError(ValueError):
    """The requested parameters produce overlapping or escaping tori."""

    def __init__(self, pair: tuple[str, str], message: str):
        self.pair = pair
        super().__init__(f"{pair[0]} / {pair[1]}: {message}")


@dataclass(frozen=True, eq=False)
class TorusPlacement:
    id: str
    core: np.ndarray
    radius: float

    def __post_init__(self):
        core = np.asarray(self.core, dtype=float)
        if core.ndim != 2 or core.shape[1] != 3:
            raise ValueError(f"{self.id}: core must be an (n, 3) array")
        if core.shape[0] < 65:
            raise ValueError(f"{self.id}: core needs at least 64 vertices")
        if not np.array_equal(core[0], core[-1]):
            raise ValueError(f"{self.id}: core polyline is not closed (first != last vertex)")
        if not self.radius > 0:
            raise ValueError(f"{self.id}: tube radius must be positive")
        core.setflags(write=False)
        object.__setattr__(self, "core", core)
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def stage(self) -> int:
        return self.id.count(".")

    @property
    def parent(self) -> str | None:
        return self.id.rsplit(".", 1)[0] if "." in self.id else None

    @property
    def index(self) -> int | None:
        return int(self.id.rsplit(".", 1)[1]) if "." in self.id else None


# ---------------------------------------------------------------------------
# Curves and frames


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def _rotate_about(v: np.ndarray, axis: np.ndarray, angle) -> np.ndarray:
    # v is perpendicular to axis
    angle = np.asarray(angle)[..., None]
    return v * np.cos(angle) + np.cross(axis, v) * np.sin(angle)


class ClosedCurve:
    """Arc-length access to a closed polyline with a periodic
    rotation-minimising frame (double reflection transport, holonomy spread
    evenly along the curve)."""

    def __init__(self, points: np.ndarray):
        pts = np.asarray(points, dtype=float)
        if np.array_equal(pts[0], pts[-1]):
            pts = pts[:-1]
        self.points = pts
        n = len(pts)
        seg = np.roll(pts, -1, axis=0) - pts
        seglen = np.linalg.norm(seg, axis=1)
        self.cum = np.concatenate([[0.0], np.cumsum(seglen)])
        self.length = self.cum[-1]
        t = _unit(np.roll(pts, -1, axis=0) - np.roll(pts, 1, axis=0))

        ref = np.array([0.0, 0.0, 1.0]) if abs(t[0][2]) < 0.9 else np.array([1.0, 0.0, 0.0])
        r = _unit(ref - np.dot(ref, t[0]) * t[0])
        normals = np.empty_like(pts)
        normals[0] = r
        for i in range(n):
            j = (i + 1) % n
            v1 = pts[j] - pts[i]
            c1 = v1 @ v1
            r_l = r - (2.0 / c1) * (v1 @ r) * v1
            t_l = t[i] - (2.0 / c1) * (v1 @ t[i]) * v1
            v2 = t[j] - t_l
            c2 = v2 @ v2
            r = r_l - (2.0 / c2) * (v2 @ r_l) * v2 if c2 > 1e-24 else r_l
            if j:
                normals[j] = r
        # r is the transported normal back at vertex 0
        hol = np.arctan2(np.cross(normals[0], r) @ t[0], normals[0] @ r)
        normals = _rotate_about(normals, t, -hol * np.arange(n) / n)
        normals = _unit(normals - np.sum(normals * t, axis=1, keepdims=True) * t)
        self.tangents = t
        self.normals = normals

    def at(self, s) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Point, tangent, normal, binormal at arc length ``s`` (mod length)."""
        s = np.mod(np.asarray(s, dtype=float), self.length)
        n = len(self.points)
        i = np.clip(np.searchsorted(self.cum, s, side="right") - 1, 0, n - 1)
        j = (i + 1) % n
        seg = self.cum[i + 1] - self.cum[i]
        u = ((s - self.cum[i]) / seg)[..., None]
        p = (1 - u) * self.points[i] + u * self.points[j]
        t = _unit((1 - u) * self.tangents[i] + u * self.tangents[j])
        nn = (1 - u) * self.normals[i] + u * self.normals[j]
        nn = _unit(nn - np.sum(nn * t, axis=-1, keepdims=True) * t)
        return p, t, nn, np.cross(t, nn)

    def resample(self, count: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        return self.at(np.arange(count) * self.length / count)


def circle(radius: float = 1.0, center=(0.0, 0.0, 0.0), segments: int = CORE_SEGMENTS) -> np.ndarray:
    """Closed polyline of a circle in the plane z = center[2]."""
    th = np.linspace(0.0, 2 * np.pi, segments + 1)
    th[-1] = 0.0
    pts = np.stack([radius * np.cos(th), radius * np.sin(th), np.zeros_like(th)], axis=1)
    return pts + np.asarray(center, dtype=float)


def chain_loop(parent: ClosedCurve, center: float, half_arc: float, width: float,
               angle: float, segments: int = CORE_SEGMENTS) -> np.ndarray:
    """Closed loop hugging ``parent`` around arc length ``center``.

    The straight parts span ``center ± half_arc`` at offset ``±width`` along
    the normal direction rotated by ``angle``; half circles of radius
    ``width`` close them.
    """
    side = 2 * half_arc
    cap = np.pi * width
    total = 2 * side + 2 * cap
    n_side = max(4, int(round(segments * side / total)))
    n_cap = max(4, (segments - 2 * n_side) // 2)
    n_side = (segments - 2 * n_cap) // 2
    n_cap = (segments - 2 * n_side) // 2
    rest = segments - 2 * n_side - 2 * n_cap
    n_side_b = n_side + rest

    def offset_dir(nrm, bnm):
        return np.cos(angle) * nrm + np.sin(angle) * bnm

    s_a = center - half_arc + side * np.arange(n_side) / n_side
    p, _, nrm, bnm = parent.at(s_a)
    part_a = p + width * offset_dir(nrm, bnm)

    psi = np.pi * np.arange(n_cap) / n_cap
    c, tc, nc, bc = parent.at(center + half_arc)
    e = offset_dir(nc, bc)
    cap_front = c + width * (np.cos(psi)[:, None] * e + np.sin(psi)[:, None] * tc)

    s_b = center + half_arc - side * np.arange(n_side_b) / n_side_b
    p, _, nrm, bnm = parent.at(s_b)
    part_b = p - width * offset_dir(nrm, bnm)

    c, tc, nc, bc = parent.at(center - half_arc)
    e = offset_dir(nc, bc)
    cap_back = c - width * (np.cos(psi)[:, None] * e + np.sin(psi)[:, None] * tc)

    pts = np.concatenate([part_a, cap_front, part_b, cap_back])
    return np.concatenate([pts, pts[:1]])


def plane_step(k: int) -> float:
    """Turn of the offset direction between consecutive children of a k-chain.

    ``k * step`` is a multiple of pi, so the last child also meets the
    first at the same angle.
    """
    return np.pi * round(k / 2) / k if k != 3 else 2 * np.pi / 3


# ---------------------------------------------------------------------------
# Embedding


@dataclass(frozen=True)
class Embedding:
    placements: list[TorusPlacement] = field(hash=False)
    links: dict[tuple[str, str], int] = field(hash=False)


def _embeddable(ps: PatternSystem, depth: int) -> None:
    if any(r.knot_label != "unknot" for r in ps.roots):
        raise ValueError("only unknotted roots can be embedded")
    if any(e.linked or not e.split for e in ps.root_edges):
        raise ValueError("roots must be pairwise split to be embedded side by side")


def embed_antoine(ps: PatternSystem, depth: int, shrink: float = 0.22, tube_ratio: float = 0.35,
                  check: bool = True) -> Embedding:
    """Place stages ``0..depth`` of a system of unknotted chains.

    With ``check`` the same-stage disjointness and parent containment
    checks of :func:`certify_geometry` run on the result and the first
    failing pair raises :class:`EmbeddingError`.
    """
    if not 0 < shrink < 1:
        raise ValueError("shrink must lie in (0, 1)")
    if not tube_ratio > 0:
        raise ValueError("tube_ratio must be positive")
    _embeddable(ps, depth)
    stages = expand(ps, depth)
    placements: list[TorusPlacement] = []
    links: dict[tuple[str, str], int] = {}
    curves: dict[str, tuple[ClosedCurve, float]] = {}
    for j, root in enumerate(ps.roots):
        pts = circle(1.0, (ROOT_SPACING * j, 0.0, 0.0))
        placements.append(TorusPlacement(root.id, pts, tube_ratio))
        curves[root.id] = (ClosedCurve(pts), 1.0)

    for prev, st in zip(stages, stages[1:]):
        for parent in prev.nodes:
            pat = ps.pattern_for(parent, st.stage)
            if not pat.is_unknot_chain():
                raise ValueError(f"pattern {pat.name!r} is not a chain of unknots")
            curve, scale = curves[parent.id]
            order = pat.cycle_order()
            k = len(order)
            width = shrink * scale
            gap = curve.length / k
            half_arc = 0.75 * gap - width
            step = plane_step(k)
            for e in pat.edges:
                links[(f"{parent.id}.{e.a}", f"{parent.id}.{e.b}")] = e.lk
            for pos, child in enumerate(order):
                cid = f"{parent.id}.{child}"
                if half_arc <= 0:
                    nxt = f"{parent.id}.{order[(pos + 1) % k]}"
                    raise EmbeddingError((cid, nxt), f"half-width {width:.4g} too large for arc spacing {gap:.4g}")
                pts = chain_loop(curve, pos * gap, half_arc, width, pos * step)
                placements.append(TorusPlacement(cid, pts, tube_ratio * width))
                curves[cid] = (ClosedCurve(pts), width)

    if check:
        report = certify_geometry(placements, links, linking=False)
        for name in ("disjointness", "containment"):
            fails = report[name]["failures"]
            if fails:
                f = fails[0]
                raise EmbeddingError(tuple(f["pair"]), f"{name} fails: {f['detail']}")
    return Embedding(placements, links)


def chain_links(placements: list[TorusPlacement]) -> dict[tuple[str, str], int]:
    """Expected linking for placements without pattern data: siblings with
    cyclically consecutive indices are neighbours."""
    groups: dict[str | None, list[TorusPlacement]] = {}
    for p in placements:
        groups.setdefault(p.parent, []).append(p)
    links = {}
    for parent, kids in groups.items():
        if parent is None or len(kids) < 3:
            continue
        idx = sorted(p.index for p in kids)
        for a, b in zip(idx, idx[1:] + idx[:1]):
            links[(f"{parent}.{a}", f"{parent}.{b}")] = 1
    return links


# ---------------------------------------------------------------------------
# Numerics


def segment_distances(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Pairwise minimum distances between the segments of two closed
    polylines given as ``(n+1, 3)`` and ``(m+1, 3)`` vertex arrays."""
    p1, d1 = p[:-1, None, :], (p[1:] - p[:-1])[:, None, :]
    q1, d2 = q[None, :-1, :], (q[1:] - q[:-1])[None, :, :]
    r = p1 - q1
    a = np.sum(d1 * d1, axis=-1)
    e = np.sum(d2 * d2, axis=-1)
    f = np.sum(d2 * r, axis=-1)
    c = np.sum(d1 * r, axis=-1)
    b = np.sum(d1 * d2, axis=-1)
    denom = a * e - b * b
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(denom > 1e-14 * a * e, np.clip((b * f - c * e) / denom, 0.0, 1.0), 0.0)
        t = (b * s + f) / e
        s = np.where(t < 0, np.clip(-c / a, 0.0, 1.0), np.where(t > 1, np.clip((b - c) / a, 0.0, 1.0), s))
    t = np.clip(t, 0.0, 1.0)
    diff = r + s[..., None] * d1 - t[..., None] * d2
    return np.linalg.norm(diff, axis=-1)


def point_polyline_distance(points: np.ndarray, poly: np.ndarray) -> np.ndarray:
    a = poly[:-1][None, :, :]
    d = (poly[1:] - poly[:-1])[None, :, :]
    v = points[:, None, :] - a
    u = np.clip(np.sum(v * d, axis=-1) / np.sum(d * d, axis=-1), 0.0, 1.0)
    return np.linalg.norm(v - u[..., None] * d, axis=-1).min(axis=1)


def linking_number(p: np.ndarray, q: np.ndarray) -> float:
    """Gauss linking number of two disjoint closed polylines.

    Each pair of segments contributes the solid angle of the quadrilateral
    they span, divided by 4π; the sum is exact for polygons.
    """
    k0, k1 = p[:-1, None, :], p[1:, None, :]
    l0, l1 = q[None, :-1, :], q[None, 1:, :]
    a = l0 - k0
    b = l0 - k1
    c = l1 - k1
    d = l1 - k0
    na, nb, nc, nd = (np.linalg.norm(x, axis=-1) for x in (a, b, c, d))

    def dot(x, y):
        return np.sum(x * y, axis=-1)

    trip = dot(a, np.cross(b, c))
    den1 = na * nb * nc + dot(a, b) * nc + dot(b, c) * na + dot(c, a) * nb
    den2 = na * nd * nc + dot(a, d) * nc + dot(d, c) * na + dot(c, a) * nd
    total = np.sum(np.arctan2(trip, den1) + np.arctan2(trip, den2))
    return float(total / (2 * np.pi))


def tube_samples(pl: TorusPlacement, counts: tuple[int, int] = TUBE_SAMPLES) -> np.ndarray:
    along, around = counts
    curve = ClosedCurve(pl.core)
    p, _, nrm, bnm = curve.resample(along)
    phi = 2 * np.pi * (np.arange(around) + 0.5) / around
    ring = np.cos(phi)[None, :, None] * nrm[:, None, :] + np.sin(phi)[None, :, None] * bnm[:, None, :]
    return (p[:, None, :] + pl.radius * ring).reshape(-1, 3)


def _bbox(pl: TorusPlacement) -> tuple[np.ndarray, np.ndarray]:
    return pl.core.min(axis=0), pl.core.max(axis=0)


# ---------------------------------------------------------------------------
# Certification


def certify_geometry(placements: list[TorusPlacement], links: dict[tuple[str, str], int] | None = None,
                     linking: bool = True) -> dict:
    """Check disjointness, containment and linking of placed tori.

    * disjointness: same-stage cores are farther apart than the sum of
      their tube radii plus 1e-6;
    * containment: 10^3 points on each child tube lie closer than the
      parent radius minus 1e-6 to the parent core;
    * linking: neighbouring siblings have Gauss linking within 1e-3 of ±1,
      other siblings within 1e-3 of 0.

    ``links`` lists neighbouring pairs (any nonzero value); by default
    siblings with cyclically consecutive indices are neighbours.  Entries
    are ordered by node-id pair.
    """
    by_id = {p.id: p for p in placements}
    if len(by_id) != len(placements):
        raise ValueError("duplicate placement ids")
    if links is None:
        links = chain_links(placements)
    neighbours = {tuple(sorted(k)) for k, v in links.items() if v != 0}

    stages: dict[int, list[TorusPlacement]] = {}
    for p in placements:
        stages.setdefault(p.stage, []).append(p)
    boxes = {p.id: _bbox(p) for p in placements}

    disjoint = {"checked": 0, "failures": [], "min_margin": None}
    margins = []
    for st in sorted(stages):
        for a, b in combinations(sorted(stages[st], key=lambda p: p.id), 2):
            disjoint["checked"] += 1
            need = a.radius + b.radius + DISTANCE_TOL
            (alo, ahi), (blo, bhi) = boxes[a.id], boxes[b.id]
            gap = np.linalg.norm(np.maximum(0.0, np.maximum(alo - bhi, blo - ahi)))
            if gap > need:
                margins.append(gap - need)
                continue
            dist = float(segment_distances(a.core, b.core).min())
            margins.append(dist - need)
            if dist <= need:
                disjoint["failures"].append(
                    {"pair": [a.id, b.id], "distance": dist, "required": need,
                     "detail": f"core distance {dist:.6g} <= radii sum + tol {need:.6g}"}
                )
    disjoint["min_margin"] = float(min(margins)) if margins else None

    contain = {"checked": 0, "failures": [], "min_margin": None}
    margins = []
    for p in sorted(placements, key=lambda p: p.id):
        parent = by_id.get(p.parent) if p.parent else None
        if parent is None:
            continue
        contain["checked"] += 1
        dist = point_polyline_distance(tube_samples(p), parent.core)
        worst = float(dist.max())
        limit = parent.radius - DISTANCE_TOL
        margins.append(limit - worst)
        if worst >= limit:
            contain["failures"].append(
                {"pair": [parent.id, p.id], "distance": worst, "required": limit,
                 "detail": f"tube point at {worst:.6g} from parent core, limit {limit:.6g}"}
            )
    contain["min_margin"] = float(min(margins)) if margins else None

    report = {"tori": len(placements), "disjointness": disjoint, "containment": contain}
    if linking:
        link = {"checked": 0, "failures": [], "entries": []}
        groups: dict[str | None, list[TorusPlacement]] = {}
        for p in placements:
            groups.setdefault(p.parent, []).append(p)
        for parent in sorted(groups, key=lambda x: "" if x is None else x):
            for a, b in combinations(sorted(groups[parent], key=lambda p: p.id), 2):
                lk = linking_number(a.core, b.core)
                expect_linked = (a.id, b.id) in neighbours
                ok = abs(abs(lk) - 1.0) < LINK_TOL if expect_linked else abs(lk) < LINK_TOL
                entry = {"pair": [a.id, b.id], "lk": lk, "expected": "±1" if expect_linked else "0", "ok": ok}
                link["checked"] += 1
                link["entries"].append(entry)
                if not ok:
                    link["failures"].append({**entry, "detail": f"lk = {lk:.6g}, expected {entry['expected']}"})
        report["linking"] = link
    report["passed"] = all(not report[k]["failures"] for k in ("disjointness", "containment", "linking") if k in report)
    return report


# ---------------------------------------------------------------------------
# Serialisation


def placements_to_json(placements: list[TorusPlacement]) -> dict:
    return {
        "tori": [
            {"id": p.id, "core": [[float(x) for x in v] for v in p.core], "radius": p.radius}
            for p in placements
        ]
    }


def placements_from_json(doc: dict) -> list[TorusPlacement]:
    if not isinstance(doc, dict) or set(doc) != {"tori"}:
        raise ValueError('expected {"tori": [...]}')
    out = []
    for i, t in enumerate(doc["tori"]):
        if not isinstance(t, dict) or set(t) != {"id", "core", "radius"}:
            raise ValueError(f"tori[{i}] must have exactly id, core, radius")
        out.append(TorusPlacement(t["id"], np.asarray(t["core"], dtype=float), t["radius"]))
    return out


def save_placements(placements: list[TorusPlacement], path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(placements_to_json(placements), fh)
        fh.write("\n")


def load_placements(path: str | os.PathLike) -> list[TorusPlacement]:
    with open(path, encoding="utf-8") as fh:
        return placements_from_json(json.load(fh))


def obj_text(placements: list[TorusPlacement], resolution: tuple[int, int] = OBJ_RESOLUTION) -> str:
    along, around = resolution
    lines = [f"# defseq torus export: {len(placements)} tori, {along}x{around} tube mesh"]
    base = 1
    phi = 2 * np.pi * np.arange(around) / around
    for pl in placements:
        curve = ClosedCurve(pl.core)
        p, _, nrm, bnm = curve.resample(along)
        ring = np.cos(phi)[None, :, None] * nrm[:, None, :] + np.sin(phi)[None, :, None] * bnm[:, None, :]
        verts = (p[:, None, :] + pl.radius * ring).reshape(-1, 3)
        lines.append(f"o {pl.id}")
        lines.extend(f"v {x:.6f} {y:.6f} {z:.6f}" for x, y, z in verts + 0.0)
        for i in range(along):
            for j in range(around):
                a = base + i * around + j
                b = base + ((i + 1) % along) * around + j
                c = base + ((i + 1) % along) * around + (j + 1) % around
                d = base + i * around + (j + 1) % around
                lines.append(f"f {a} {b} {c} {d}")
        base += along * around
    return "\n".join(lines) + "\n"


def export_obj(placements: list[TorusPlacement], path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(obj_text(placements))
