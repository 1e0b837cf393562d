"""Cartesian multidomain meshes and interface bookkeeping.

The domain [0, Lx] x [0, Ly] is split into mx-by-my equal rectangular
elements, each carrying an n-by-n GLL grid. Element (ix, iy) has id
ix*my + iy; within an element the nodes are numbered x-fastest, so local
node (i_y, i_x) sits at flat index i_y*n + i_x and global index
element_id*n^2 + i_y*n + i_x. Duplicated nodes along shared element
sides are kept as distinct degrees of freedom.

Interfaces between neighbouring elements are enumerated vertical pairs
first (sorted by x, then y), then horizontal pairs (sorted by y, then
x). Each interfacial node is assigned to exactly one interface slot;
where a vertical and a horizontal interface meet, the vertical one owns
the shared corner nodes. The resulting slot set is the trace space the
Schur complement acts on.
"""

from dataclasses import dataclass

import numpy as np

from .gll import gll_nodes

__all__ = [
    "Mesh",
    "InterfacePair",
    "InterfaceSet",
    "build_mesh",
    "face_local_nodes",
    "owned_face_nodes",
    "enumerate_interfaces",
    "include_gamma",
    "restrict_gamma",
    "domain_boundary_nodes",
]

SIDES = ("left", "right", "bottom", "top")


@dataclass(frozen=True)
class Mesh:
    """Tensor-product multidomain grid over a rectangle."""

    n: int
    mx: int
    my: int
    Lx: float
    Ly: float
    coords: np.ndarray  # (r, 2) node coordinates, duplicated on shared sides

    @property
    def hx(self) -> float:
        return self.Lx / self.mx

    @property
    def hy(self) -> float:
        return self.Ly / self.my

    @property
    def n_elements(self) -> int:
        return self.mx * self.my

    @property
    def r(self) -> int:
        return self.n_elements * self.n * self.n

    def element_id(self, ix: int, iy: int) -> int:
        return ix * self.my + iy

    def element_index(self, eid: int) -> tuple[int, int]:
        return eid // self.my, eid % self.my


def build_mesh(n: int, mx: int, my: int, Lx: float = 1.0, Ly: float = 1.0) -> Mesh:
    """Build the mesh with its duplicated per-element node coordinates."""
    if n < 3:
        raise ValueError(f"need at least cubic-capable elements, got n={n}")
    if mx < 1 or my < 1:
        raise ValueError(f"element counts must be positive, got mx={mx}, my={my}")
    if Lx <= 0 or Ly <= 0:
        raise ValueError(f"domain sides must be positive, got Lx={Lx}, Ly={Ly}")
    ref = gll_nodes(n)
    hx, hy = Lx / mx, Ly / my
    coords = np.empty((mx * my * n * n, 2))
    for ix in range(mx):
        for iy in range(my):
            eid = ix * my + iy
            xs = ix * hx + 0.5 * (ref + 1.0) * hx
            ys = iy * hy + 0.5 * (ref + 1.0) * hy
            base = eid * n * n
            coords[base : base + n * n, 0] = np.tile(xs, n)
            coords[base : base + n * n, 1] = np.repeat(ys, n)
    coords.flags.writeable = False
    return Mesh(n=n, mx=mx, my=my, Lx=float(Lx), Ly=float(Ly), coords=coords)


def face_local_nodes(n: int, side: str) -> np.ndarray:
    """Local flat indices of the nodes on one element side.

    Ordered by ascending coordinate along the side (y for left/right,
    x for bottom/top).
    """
    i = np.arange(n)
    if side == "left":
        return i * n
    if side == "right":
        return i * n + (n - 1)
    if side == "bottom":
        return i.copy()
    if side == "top":
        return (n - 1) * n + i
    raise ValueError(f"unknown side {side!r}")


def owned_face_nodes(n: int, mx: int, my: int, ix: int, iy: int, side: str) -> np.ndarray:
    """Local nodes of an interior side whose penalty acts through that side.

    Every interfacial node is penalized through exactly one side. Nodes
    on a vertical (left/right) interior side always belong to it; a
    horizontal (bottom/top) interior side loses its end nodes to any
    interior vertical side they also lie on.
    """
    nodes = face_local_nodes(n, side)
    if side in ("left", "right"):
        return nodes
    keep = np.ones(n, dtype=bool)
    if ix > 0:
        keep[0] = False
    if ix < mx - 1:
        keep[-1] = False
    return nodes[keep]


@dataclass(frozen=True)
class InterfacePair:
    """One shared side between two neighbouring elements.

    ``slots`` lists the interface slot indices of this pair: first the
    owned nodes on the low element's side, then those on the high
    element's side, each run ascending along the interface.
    """

    index: int
    orientation: str  # "vertical" or "horizontal"
    elem_lo: int
    elem_hi: int
    slots: np.ndarray


@dataclass(frozen=True)
class InterfaceSet:
    """All interface pairs of a mesh plus the slot-to-node maps."""

    pairs: tuple
    gamma_to_global: np.ndarray  # (k,) global node index of each slot
    global_to_gamma: np.ndarray  # (r,) slot index per node, -1 off the trace
    k: int
    d: int
    r: int


def enumerate_interfaces(mesh: Mesh) -> InterfaceSet:
    """Enumerate interface pairs and assign every interfacial node a slot."""
    n, mx, my = mesh.n, mesh.mx, mesh.my
    n2 = n * n
    pairs = []
    gamma_to_global = []

    def owned_globals(ix, iy, side):
        eid = mesh.element_id(ix, iy)
        return eid * n2 + owned_face_nodes(n, mx, my, ix, iy, side)

    # vertical interfaces, sorted by x then y
    for ix in range(mx - 1):
        for iy in range(my):
            lo = mesh.element_id(ix, iy)
            hi = mesh.element_id(ix + 1, iy)
            members = np.concatenate(
                [owned_globals(ix, iy, "right"), owned_globals(ix + 1, iy, "left")]
            )
            slots = np.arange(len(gamma_to_global), len(gamma_to_global) + members.size)
            gamma_to_global.extend(members.tolist())
            pairs.append(
                InterfacePair(len(pairs), "vertical", lo, hi, slots)
            )
    # horizontal interfaces, sorted by y then x
    for iy in range(my - 1):
        for ix in range(mx):
            lo = mesh.element_id(ix, iy)
            hi = mesh.element_id(ix, iy + 1)
            members = np.concatenate(
                [owned_globals(ix, iy, "top"), owned_globals(ix, iy + 1, "bottom")]
            )
            slots = np.arange(len(gamma_to_global), len(gamma_to_global) + members.size)
            gamma_to_global.extend(members.tolist())
            pairs.append(
                InterfacePair(len(pairs), "horizontal", lo, hi, slots)
            )

    g2g = np.asarray(gamma_to_global, dtype=np.int64)
    reverse = np.full(mesh.r, -1, dtype=np.int64)
    reverse[g2g] = np.arange(g2g.size)
    for arr in (g2g, reverse):
        arr.flags.writeable = False
    return InterfaceSet(
        pairs=tuple(pairs),
        gamma_to_global=g2g,
        global_to_gamma=reverse,
        k=int(g2g.size),
        d=len(pairs),
        r=mesh.r,
    )


def include_gamma(interfaces: InterfaceSet, v: np.ndarray) -> np.ndarray:
    """Scatter a trace vector into the full node space (the E operator)."""
    v = np.asarray(v)
    if v.shape != (interfaces.k,):
        raise ValueError(f"expected shape ({interfaces.k},), got {v.shape}")
    out = np.zeros(interfaces.r, dtype=float)
    out[interfaces.gamma_to_global] = v
    return out


def restrict_gamma(interfaces: InterfaceSet, w: np.ndarray) -> np.ndarray:
    """Gather the trace slots out of a full node vector (the E^T operator)."""
    w = np.asarray(w)
    if w.shape != (interfaces.r,):
        raise ValueError(f"expected shape ({interfaces.r},), got {w.shape}")
    return w[interfaces.gamma_to_global]


def domain_boundary_nodes(mesh: Mesh) -> np.ndarray:
    """Global indices of the nodes on the physical boundary, ascending."""
    n, mx, my = mesh.n, mesh.mx, mesh.my
    n2 = n * n
    found = []
    for ix in range(mx):
        for iy in range(my):
            base = mesh.element_id(ix, iy) * n2
            if ix == 0:
                found.append(base + face_local_nodes(n, "left"))
            if ix == mx - 1:
                found.append(base + face_local_nodes(n, "right"))
            if iy == 0:
                found.append(base + face_local_nodes(n, "bottom"))
            if iy == my - 1:
                found.append(base + face_local_nodes(n, "top"))
    return np.unique(np.concatenate(found))
