"""Procedural household objects: cups, bottles and bowls.

Every object is a watertight surface of revolution about +Z. Cups also get a
handle: a square-section tube bent along a half-ellipse and welded into one
widened segment of the outer wall, so the cup is a single closed manifold
of genus 1.

The returned mesh is in metres, with the revolved body's volume centroid at
the origin and +Z up. The handle, when present, points along +X.
"""
from __future__ import annotations

from dataclasses import dataclass, fields, asdict
from enum import Enum

import numpy as np

from .errors import InvalidParams
from .mesh import MW, NG, T, TriMesh, vertex_normals


class Category(str, Enum):
    CUP = "cup"
    BOTTLE = "bottle"
    BOWL = "bowl"


@dataclass(frozen=True)
class CupParams:
    radius: float = 0.045          # outer rim radius
    height: float = 0.100
    wall: float = 0.0035
    base: float = 0.006            # floor thickness
    taper: float = 0.88            # bottom radius / rim radius
    handle: bool = True
    handle_reach: float = 0.026    # protrusion of the handle centreline
    handle_width: float = 0.012    # tube section, tangential
    handle_thickness: float = 0.010  # tube section, vertical at the wall
    handle_span: float = 0.55      # attachment distance / height
    handle_center: float = 0.52    # handle mid-height / height
    edge_length: float = 0.004

    ranges = {
        "radius": (0.030, 0.060), "height": (0.080, 0.130), "wall": (0.002, 0.006),
        "base": (0.003, 0.012), "taper": (0.70, 1.0), "handle_reach": (0.012, 0.045),
        "handle_width": (0.005, 0.018), "handle_thickness": (0.005, 0.016),
        "handle_span": (0.30, 0.70), "handle_center": (0.35, 0.65),
        "edge_length": (0.001, 0.010),
    }


@dataclass(frozen=True)
class BottleParams:
    radius: float = 0.034
    height: float = 0.200
    neck_radius: float = 0.013
    shoulder: float = 0.58        # shoulder start / height
    neck: float = 0.78            # neck start / height
    cap_height: float = 0.022
    cap_radius: float = 0.0155
    fillet: float = 0.004
    edge_length: float = 0.005

    ranges = {
        "radius": (0.025, 0.045), "height": (0.150, 0.260), "neck_radius": (0.008, 0.020),
        "shoulder": (0.4, 0.75), "neck": (0.6, 0.9), "cap_height": (0.010, 0.035),
        "cap_radius": (0.009, 0.025), "fillet": (0.0, 0.010), "edge_length": (0.001, 0.010),
    }


@dataclass(frozen=True)
class BowlParams:
    radius: float = 0.075
    height: float = 0.060
    wall: float = 0.004
    foot_radius: float = 0.038
    foot_height: float = 0.006
    edge_length: float = 0.005

    ranges = {
        "radius": (0.050, 0.100), "height": (0.035, 0.090), "wall": (0.002, 0.008),
        "foot_radius": (0.020, 0.060), "foot_height": (0.002, 0.012),
        "edge_length": (0.001, 0.010),
    }


PARAMS = {Category.CUP: CupParams, Category.BOTTLE: BottleParams, Category.BOWL: BowlParams}

# per-vertex part tags, used to hand-label the reference meshes
BOTTOM, OUTER, RIM, INNER, INNER_BOTTOM, HANDLE, SHOULDER, NECK, CAP, FOOT = range(10)


def validate_params(params) -> None:
    for f in fields(params):
        lo_hi = type(params).ranges.get(f.name)
        if lo_hi is None:
            continue
        v = getattr(params, f.name)
        if not (lo_hi[0] <= v <= lo_hi[1]):
            raise InvalidParams(f"{f.name}={v} outside [{lo_hi[0]}, {lo_hi[1]}]")
    if isinstance(params, CupParams):
        if params.wall >= params.radius * params.taper * 0.5:
            raise InvalidParams("cup wall too thick for its radius")
        if params.base >= params.height * 0.5:
            raise InvalidParams("cup base too thick for its height")
        lo = params.handle_center - params.handle_span / 2
        hi = params.handle_center + params.handle_span / 2
        margin = params.handle_thickness / params.height
        if lo - margin < 0.05 or hi + margin > 0.95:
            raise InvalidParams("handle attachments too close to the cup's bottom or rim")
    if isinstance(params, BottleParams):
        if not (params.neck_radius < params.radius and params.shoulder < params.neck):
            raise InvalidParams("inconsistent bottle neck/shoulder")
        if params.cap_radius <= params.neck_radius or params.cap_radius >= params.radius:
            raise InvalidParams("cap radius must lie between neck and body radius")
        if params.neck * params.height >= params.height - params.cap_height:
            raise InvalidParams("cap overlaps the shoulder")
    if isinstance(params, BowlParams):
        if params.foot_radius >= params.radius - params.wall:
            raise InvalidParams("bowl foot wider than the bowl")


def sample_params(category, seed: int):
    """Draw a plausible parameter set for ``category`` from ``seed``."""
    category = Category(category)
    rng = np.random.default_rng([int(seed), 7919])
    if category is Category.CUP:
        return CupParams(radius=rng.uniform(0.038, 0.052), height=rng.uniform(0.085, 0.120),
                         wall=rng.uniform(0.0028, 0.0045), taper=rng.uniform(0.80, 0.95),
                         handle_reach=rng.uniform(0.020, 0.030),
                         handle_center=rng.uniform(0.48, 0.56))
    if category is Category.BOTTLE:
        return BottleParams(radius=rng.uniform(0.030, 0.040), height=rng.uniform(0.180, 0.230),
                            neck_radius=rng.uniform(0.012, 0.015))
    return BowlParams(radius=rng.uniform(0.065, 0.085), height=rng.uniform(0.050, 0.070),
                      foot_radius=rng.uniform(0.032, 0.042))


class _Profile:
    """Polyline in the (r, z) half-plane with a part tag per point."""

    def __init__(self, r, z, part):
        self.r, self.z, self.part = [r], [z], [part]

    def line_to(self, r, z, part, step):
        r0, z0 = self.r[-1], self.z[-1]
        n = max(1, int(np.ceil(np.hypot(r - r0, z - z0) / step)))
        for k in range(1, n + 1):
            t = k / n
            self.r.append(r0 + (r - r0) * t)
            self.z.append(z0 + (z - z0) * t)
            self.part.append(part)

    def curve_to(self, fn, part, step, n_min=4):
        """Append ``fn(t)`` for t in (0, 1]; ``fn(0)`` must be the current point."""
        ts = np.linspace(0.0, 1.0, 257)
        pts = np.array([fn(t) for t in ts])
        length = np.sum(np.hypot(*np.diff(pts, axis=0).T))
        n = max(n_min, int(np.ceil(length / step)))
        for t in np.linspace(0.0, 1.0, n + 1)[1:]:
            r, z = fn(t)
            self.r.append(r)
            self.z.append(z)
            self.part.append(part)

    def array(self):
        return np.array(self.r), np.array(self.z), np.array(self.part)


def _revolve(r, z, part, thetas):
    """Revolve a profile whose first/last points may lie on the axis."""
    n = len(thetas)
    verts, vpart, rings = [], [], []
    for ri, zi, pi in zip(r, z, part):
        start = len(verts)
        if ri == 0.0:
            verts.append((0.0, 0.0, zi))
            vpart.append(pi)
            rings.append(np.full(n, start))
        else:
            verts.extend(zip(ri * np.cos(thetas), ri * np.sin(thetas), np.full(n, zi)))
            vpart.extend([pi] * n)
            rings.append(np.arange(start, start + n))
    tris, quad_of = [], {}
    for i in range(len(r) - 1):
        a_ring, b_ring = rings[i], rings[i + 1]
        for j in range(n):
            j2 = (j + 1) % n
            a, b, c, d = a_ring[j], a_ring[j2], b_ring[j2], b_ring[j]
            ids = []
            if a != b:
                ids.append(len(tris))
                tris.append((a, b, c))
            if c != d:
                ids.append(len(tris))
                tris.append((a, c, d))
            quad_of[(i, j)] = ids
    return np.array(verts), np.array(tris, dtype=np.int64), np.array(vpart), rings, quad_of


def _cup_profile(p: CupParams):
    step = p.edge_length
    r_top, r_bot = p.radius, p.radius * p.taper
    outer = lambda zz: r_bot + (r_top - r_bot) * zz / p.height  # noqa: E731
    H = p.height
    z_lo = (p.handle_center - p.handle_span / 2) * H
    z_hi = (p.handle_center + p.handle_span / 2) * H
    half = p.handle_thickness / 2
    holes = [(z_lo - half, z_lo + half), (z_hi - half, z_hi + half)]

    prof = _Profile(0.0, 0.0, BOTTOM)
    prof.line_to(r_bot, 0.0, BOTTOM, step)
    # outer wall: uniform rings, but each handle hole must be exactly one band
    zs = list(np.linspace(0.0, H, max(2, int(np.ceil(H / step))) + 1)[1:])
    for a, b in holes:
        zs = [zz for zz in zs if not (a - 0.3 * step < zz < b + 0.3 * step)]
        zs += [a, b]
    zs = sorted(zs)
    hole_rows = []
    for zz in zs:
        prof.r.append(outer(zz))
        prof.z.append(zz)
        prof.part.append(OUTER)
        if any(abs(zz - a) < 1e-12 for a, _ in holes):
            hole_rows.append(len(prof.r) - 1)
    prof.line_to(r_top - p.wall, H, RIM, step)
    prof.line_to(outer(p.base) - p.wall, p.base, INNER, step)
    prof.line_to(0.0, p.base, INNER_BOTTOM, step)
    return prof.array(), hole_rows, outer


def _cup_thetas(p: CupParams):
    beta = np.arcsin(min(0.95, p.handle_width / (2 * p.radius * p.taper)))
    n_rest = max(23, int(np.ceil((2 * np.pi - 2 * beta) * p.radius / p.edge_length)))
    rest = np.linspace(beta, 2 * np.pi - beta, n_rest + 1)
    # segment 0 spans [-beta, beta] on +X and hosts the handle holes
    return np.concatenate([[-beta], rest[:-1]]), beta


def _handle_tube(verts, hole_lo, hole_hi, p: CupParams, beta):
    """Tube vertices/triangles joining two 4-vertex wall holes.

    ``hole_*`` list vertex ids in cyclic order: (upper-left, upper-right,
    lower-right, lower-left) as seen in the local section frame.
    """
    lo = verts[hole_lo]
    hi = verts[hole_hi]
    x_lo, z_lo = lo[:, 0].mean(), lo[:, 2].mean()
    x_hi, z_hi = hi[:, 0].mean(), hi[:, 2].mean()
    zc, rz = 0.5 * (z_lo + z_hi), 0.5 * (z_hi - z_lo)
    reach = p.handle_reach
    half_h = p.handle_thickness / 2
    half_w = np.sin(beta) * p.radius * p.taper
    n_sec = 14
    new_pts = []
    for phi in np.linspace(-np.pi / 2, np.pi / 2, n_sec + 1)[1:-1]:
        blend = 0.5 * (np.sin(phi) + 1.0)
        cx = x_lo + (x_hi - x_lo) * blend + reach * np.cos(phi)
        cz = zc + rz * np.sin(phi)
        tx = 0.5 * (x_hi - x_lo) * np.cos(phi) - reach * np.sin(phi)
        tz = rz * np.cos(phi)
        nrm = np.array([tz, 0.0, -tx]) / np.hypot(tx, tz)
        c = np.array([cx, 0.0, cz])
        y = np.array([0.0, 1.0, 0.0])
        for s_n, s_y in ((-1, -1), (-1, 1), (1, 1), (1, -1)):
            new_pts.append(c + s_n * half_h * nrm + s_y * half_w * y)
    base = len(verts)
    sections = [np.asarray(hole_lo)]
    for k in range(n_sec - 1):
        sections.append(np.arange(base + 4 * k, base + 4 * k + 4))
    sections.append(np.asarray(hole_hi))
    tris = []
    for k in range(n_sec):
        s0, s1 = sections[k], sections[k + 1]
        for m in range(4):
            m2 = (m + 1) % 4
            tris.append((s0[m], s1[m], s1[m2]))
            tris.append((s0[m], s1[m2], s0[m2]))
    return np.array(new_pts), np.array(tris, dtype=np.int64)


def _build_cup(p: CupParams):
    (r, z, part), hole_rows, _ = _cup_profile(p)
    if p.handle:
        thetas, beta = _cup_thetas(p)
    else:
        n = max(24, int(np.ceil(2 * np.pi * p.radius / p.edge_length)))
        n += n % 2
        thetas, beta = np.linspace(0, 2 * np.pi, n + 1)[:-1], None
    verts, tris, vpart, rings, quad_of = _revolve(r, z, part, thetas)
    if not p.handle:
        return verts, tris, vpart, None
    body_centroid = TriMesh(verts, tris).volume_centroid()
    drop = []
    holes = []
    for row in hole_rows:
        drop += quad_of[(row, 0)]
        lower, upper = rings[row], rings[row + 1]
        # section order (s_n, s_y): (-1,-1), (-1,1), (1,1), (1,-1)
        holes.append((lower, upper))
    keep = np.ones(len(tris), dtype=bool)
    keep[drop] = False
    tris = tris[keep]
    (lo_a, lo_b), (hi_a, hi_b) = holes
    # lower hole: s_n=-1 is its upper edge (z_b); upper hole: s_n=-1 is its lower edge
    hole_lo = [lo_b[0], lo_b[1], lo_a[1], lo_a[0]]
    hole_hi = [hi_a[0], hi_a[1], hi_b[1], hi_b[0]]
    tube_v, tube_t = _handle_tube(verts, hole_lo, hole_hi, p, beta)
    vall = np.concatenate([verts, tube_v])
    # the tube must traverse each hole edge opposite to the body
    body_edges = {(int(a), int(b)) for t in tris for a, b in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0]))}
    t0 = tube_t[1]
    if (int(t0[2]), int(t0[0])) in body_edges:
        tube_t = tube_t[:, ::-1]
    tris = np.concatenate([tris, tube_t])
    vpart = np.concatenate([vpart, np.full(len(tube_v), HANDLE)])
    return vall, tris, vpart, body_centroid


def _build_bottle(p: BottleParams):
    step = p.edge_length
    H, R, f = p.height, p.radius, p.fillet
    z_sh, z_nk, z_cap = p.shoulder * H, p.neck * H, H - p.cap_height
    prof = _Profile(0.0, 0.0, BOTTOM)
    prof.line_to(R - f, 0.0, BOTTOM, step)
    if f > 0:
        prof.curve_to(lambda t: (R - f + f * np.sin(t * np.pi / 2), f - f * np.cos(t * np.pi / 2)),
                      OUTER, step)
    prof.line_to(R, z_sh, OUTER, step)
    rn = p.neck_radius
    prof.curve_to(lambda t: (rn + (R - rn) * 0.5 * (1 + np.cos(np.pi * t)), z_sh + (z_nk - z_sh) * t),
                  SHOULDER, step, n_min=8)
    prof.line_to(rn, z_cap, NECK, step)
    rc, f2 = p.cap_radius, min(0.002, p.cap_height / 4)
    prof.line_to(rc, z_cap, CAP, step)
    prof.line_to(rc, H - f2, CAP, step)
    prof.line_to(rc - f2, H, CAP, step)
    prof.line_to(0.0, H, CAP, step)
    r, z, part = prof.array()
    n = max(24, int(np.ceil(2 * np.pi * R / p.edge_length)))
    n += n % 2
    verts, tris, vpart, _, _ = _revolve(r, z, part, np.linspace(0, 2 * np.pi, n + 1)[:-1])
    return verts, tris, vpart, None


def _build_bowl(p: BowlParams):
    step = p.edge_length
    H, R, w = p.height, p.radius, p.wall
    rf, hf = p.foot_radius, p.foot_height
    z_ib = hf + w
    prof = _Profile(0.0, 0.0, FOOT)
    prof.line_to(rf, 0.0, FOOT, step)
    prof.line_to(rf, hf, FOOT, step)
    prof.curve_to(lambda t: (rf + (R - rf) * np.sin(t * np.pi / 2),
                             hf + (H - hf) * (1 - np.cos(t * np.pi / 2))), OUTER, step, n_min=12)
    prof.line_to(R - w, H, RIM, step)
    prof.curve_to(lambda t: ((R - w) * np.cos(t * np.pi / 2),
                             z_ib + (H - z_ib) * (1 - np.sin(t * np.pi / 2))), INNER, step, n_min=12)
    r, z, part = prof.array()
    r[-1] = 0.0
    n = max(24, int(np.ceil(2 * np.pi * R / p.edge_length)))
    n += (-n) % 4
    verts, tris, vpart, _, _ = _revolve(r, z, part, np.linspace(0, 2 * np.pi, n + 1)[:-1])
    return verts, tris, vpart, None


_BUILDERS = {Category.CUP: _build_cup, Category.BOTTLE: _build_bottle, Category.BOWL: _build_bowl}


def _resolve(category, params, seed):
    category = Category(category)
    if params is None:
        params = sample_params(category, seed)
    elif isinstance(params, dict):
        params = PARAMS[category](**params)
    if not isinstance(params, PARAMS[category]):
        raise InvalidParams(f"{type(params).__name__} does not match category {category.value}")
    validate_params(params)
    return category, params


def build_object(category, params=None, seed: int = 0):
    """Like :func:`generate_object` but also returns per-vertex part tags
    and the resolved parameters."""
    category, params = _resolve(category, params, seed)
    verts, tris, vpart, centroid = _BUILDERS[category](params)
    if centroid is None:
        centroid = TriMesh(verts, tris).volume_centroid()
    shift = np.array([0.0, 0.0, centroid[2]])
    mesh = vertex_normals(TriMesh(verts - shift, tris))
    return mesh, vpart, params


def generate_object(category, params=None, seed: int = 0) -> TriMesh:
    """Watertight object mesh.

    ``params`` may be a parameter dataclass, a dict of overrides, or None,
    in which case parameters are drawn deterministically from ``seed``.
    """
    return build_object(category, params, seed)[0]


CANONICAL_EXTENT = 0.7


def canonical_scale(mesh: TriMesh) -> float:
    """Scale that maps the mesh's largest bounding-box side to
    ``CANONICAL_EXTENT`` canonical units."""
    lo, hi = mesh.bounds()
    ext = float(np.max(hi - lo))
    if ext <= 0:
        raise InvalidParams("mesh has zero extent")
    return CANONICAL_EXTENT / ext


def declared_bounds(category, params=None, seed: int = 0):
    """Analytic bounding box ``(lo, hi)`` of :func:`generate_object`'s output."""
    category, params = _resolve(category, params, seed)
    mesh = generate_object(category, params)
    # z offset comes from the body centroid, which is not closed-form
    z0 = -mesh.vertices[:, 2].min()
    if category is Category.CUP:
        R = params.radius
        x_hi = R
        if params.handle:
            x_hi = R + params.handle_reach + params.handle_thickness / 2
        return np.array([-R, -R, -z0]), np.array([x_hi, R, params.height - z0])
    R = params.radius
    return np.array([-R, -R, -z0]), np.array([R, R, params.height - z0])


def reference_labels(category, vpart, vertices, params) -> np.ndarray:
    """Hand-authored posture labels keyed on part tags and height.

    Cup: middle band of the outer body MW (where a whole hand fits), rim and
    the top band of the outer wall T.
    Bottle: body and shoulder MW, neck and cap T.
    Bowl: rim and the top band of the outer wall T.
    Interior surfaces, bases and handles stay NG.
    """
    category = Category(category)
    z = vertices[:, 2] - vertices[:, 2].min()
    labels = np.full(len(vpart), NG, dtype=np.uint8)
    if category is Category.CUP:
        band = z >= params.height * 0.85
        body = (z >= params.height * 0.2) & (z <= params.height * 0.75)
        labels[(vpart == OUTER) & body] = MW
        labels[(vpart == RIM) | ((vpart == OUTER) & band)] = T
    elif category is Category.BOTTLE:
        labels[(vpart == OUTER) | (vpart == SHOULDER)] = MW
        labels[(vpart == NECK) | (vpart == CAP)] = T
    else:
        band = z >= params.height * 0.8
        labels[(vpart == RIM) | ((vpart == OUTER) & band)] = T
    return labels


def params_to_dict(params) -> dict:
    return asdict(params)
