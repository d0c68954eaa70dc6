"""Semantic/instance mask geometry.

One-hot encoding, nearest resizing, per-class connected components, instance
edge maps, and the intra-class positional encoding map: per-pixel offsets from
the reference object's centroid, normalized per axis by the object's maximum
absolute offset so every value lands in [-1, 1].
"""

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from . import io
from .tensor import ShapeError, resize_nearest_grid


@dataclass
class SemanticMask:
    """H×W class-label grid; every label must lie in [0, nc)."""

    labels: np.ndarray
    nc: int

    def __post_init__(self):
        lab = np.asarray(self.labels)
        if lab.ndim != 2 or min(lab.shape) < 1:
            raise ShapeError(f"mask labels must be 2-D non-empty, got shape {lab.shape}")
        if not np.issubdtype(lab.dtype, np.integer):
            raise ShapeError(f"mask labels must be integers, got {lab.dtype}")
        lab = lab.astype(np.int32)
        if self.nc < 1:
            raise ValueError(f"class count must be >= 1, got {self.nc}")
        lo, hi = int(lab.min()), int(lab.max())
        if lo < 0 or hi >= self.nc:
            raise ValueError(f"labels must lie in [0, {self.nc}), got range [{lo}, {hi}]")
        self.labels = lab

    @property
    def shape(self):
        return self.labels.shape


@dataclass
class InstanceMap:
    """H×W non-negative instance ids."""

    ids: np.ndarray

    def __post_init__(self):
        ids = np.asarray(self.ids)
        if ids.ndim != 2 or min(ids.shape) < 1:
            raise ShapeError(f"instance ids must be 2-D non-empty, got shape {ids.shape}")
        if not np.issubdtype(ids.dtype, np.integer):
            raise ShapeError(f"instance ids must be integers, got {ids.dtype}")
        if int(ids.min()) < 0:
            raise ValueError("instance ids must be non-negative")
        self.ids = ids.astype(np.int32)

    @property
    def shape(self):
        return self.ids.shape


@dataclass
class PositionalEncodingMap:
    """(2,H,W) normalized offsets; channel 0 is the x (column) axis, channel 1 the y (row) axis."""

    d: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.d, dtype=np.float64)
        if d.ndim != 3 or d.shape[0] != 2:
            raise ShapeError(f"positional map must be (2,H,W), got {d.shape}")
        if d.size and (d.min() < -1.0 or d.max() > 1.0):
            raise ValueError("positional map values must lie in [-1, 1]")
        self.d = d

    @property
    def shape(self):
        return self.d.shape[1:]

    def resized(self, h2, w2):
        return PositionalEncodingMap(resize_nearest_grid(self.d, h2, w2))

    def write_cltn(self, path):
        io.write_cltn(path, self.d)

    def write_pgm_pair(self, prefix):
        # visualization: gray = round(127.5 * (d + 1))
        for ch, suffix in ((0, "_x.pgm"), (1, "_y.pgm")):
            vis = np.rint(127.5 * (self.d[ch] + 1.0)).astype(np.int32)
            io.write_pgm(f"{prefix}{suffix}", np.clip(vis, 0, 255))


def one_hot(m, dtype=np.float64):
    """Indicator tensor (1, nc, H, W); channel l marks the pixels of class l."""
    h, w = m.shape
    out = np.zeros((1, m.nc, h, w), dtype=dtype)
    ii, jj = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    out[0, m.labels, ii, jj] = 1
    return out


def resize_nearest(m, h2, w2):
    return SemanticMask(resize_nearest_grid(m.labels, h2, w2), m.nc)


def resize_instance(inst, h2, w2):
    return InstanceMap(resize_nearest_grid(inst.ids, h2, w2))


@dataclass
class Component:
    comp_id: int
    label: int
    pixel_count: int
    cx: float  # centroid column
    cy: float  # centroid row


@dataclass
class ComponentLabeling:
    comp_ids: np.ndarray  # H×W, values 0..K-1, partition of the pixel grid
    components: list  # Component, indexed by comp_id

    def per_class(self):
        by = {}
        for c in self.components:
            by.setdefault(c.label, []).append(c)
        return by


_STRUCT4 = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)
_STRUCT8 = np.ones((3, 3), dtype=bool)


def connected_components(m, connectivity=8):
    """Label same-class connected regions (components never span classes)."""
    if connectivity not in (4, 8):
        raise ValueError(f"connectivity must be 4 or 8, got {connectivity}")
    struct = _STRUCT4 if connectivity == 4 else _STRUCT8
    h, w = m.shape
    comp_ids = np.full((h, w), -1, dtype=np.int32)
    components = []
    for label in np.unique(m.labels):
        region = m.labels == label
        lab, n = ndimage.label(region, structure=struct)
        for i in range(1, n + 1):
            member = lab == i
            rows, cols = np.nonzero(member)
            cid = len(components)
            comp_ids[member] = cid
            components.append(
                Component(
                    comp_id=cid,
                    label=int(label),
                    pixel_count=int(rows.size),
                    cx=float(cols.mean()),
                    cy=float(rows.mean()),
                )
            )
    return ComponentLabeling(comp_ids=comp_ids, components=components)


def edge_from_instance(inst, dtype=np.float64):
    """(1,1,H,W) binary map: 1 where any 4-neighbor carries a different instance id."""
    ids = inst.ids
    edge = np.zeros(ids.shape, dtype=bool)
    edge[:-1, :] |= ids[:-1, :] != ids[1:, :]
    edge[1:, :] |= ids[1:, :] != ids[:-1, :]
    edge[:, :-1] |= ids[:, :-1] != ids[:, 1:]
    edge[:, 1:] |= ids[:, 1:] != ids[:, :-1]
    return edge[None, None].astype(dtype)


LARGEST_PER_CLASS = "largest_component_per_class"
PER_COMPONENT = "per_component"


def icpe_map(m, mode=LARGEST_PER_CLASS, connectivity=8):
    """Intra-class positional encoding map.

    Raw offsets are (column - cx, row - cy) against the reference object's
    centroid; each axis is normalized by the reference object's maximum
    absolute offset (0 when that offset is 0, i.e. the object is one pixel
    wide/tall on the axis). In largest_component_per_class mode every pixel
    of a class references the class's largest component, and values from
    satellite components are clamped into [-1, 1]; in per_component mode each
    pixel references its own component.
    """
    if mode not in (LARGEST_PER_CLASS, PER_COMPONENT):
        raise ValueError(f"unknown icpe mode {mode!r}")
    cc = connected_components(m, connectivity)
    k = len(cc.components)
    cx = np.array([c.cx for c in cc.components])
    cy = np.array([c.cy for c in cc.components])

    if mode == PER_COMPONENT:
        ref_of_comp = np.arange(k)
    else:
        largest = {}
        for c in cc.components:
            best = largest.get(c.label)
            # deterministic tie-break: first (lowest id) among equal sizes
            if best is None or c.pixel_count > best.pixel_count:
                largest[c.label] = c
        ref_of_comp = np.array([largest[c.label].comp_id for c in cc.components])

    h, w = m.shape
    ref = ref_of_comp[cc.comp_ids]
    cols = np.arange(w)[None, :].repeat(h, axis=0)
    rows = np.arange(h)[:, None].repeat(w, axis=1)
    dx_raw = cols - cx[ref]
    dy_raw = rows - cy[ref]

    # per-reference maximum absolute offset, measured over the reference's own pixels
    own_dx = np.abs(cols - cx[cc.comp_ids])
    own_dy = np.abs(rows - cy[cc.comp_ids])
    mox = np.zeros(k)
    moy = np.zeros(k)
    flat = cc.comp_ids.ravel()
    np.maximum.at(mox, flat, own_dx.ravel())
    np.maximum.at(moy, flat, own_dy.ravel())

    with np.errstate(divide="ignore", invalid="ignore"):
        d0 = np.where(mox[ref] > 0, dx_raw / mox[ref], 0.0)
        d1 = np.where(moy[ref] > 0, dy_raw / moy[ref], 0.0)
    d = np.stack([d0, d1])
    if mode == LARGEST_PER_CLASS:
        d = np.clip(d, -1.0, 1.0)
    return PositionalEncodingMap(d)


def read_mask_pgm(path, nc=None):
    labels = io.read_pgm(path)
    if nc is None:
        nc = int(labels.max()) + 1
    return SemanticMask(labels, nc)


def write_mask_pgm(path, m):
    io.write_pgm(path, m.labels)
