"""Union-find and periodic component labeling on cell lattices."""

from collections import deque

import numpy as np
from scipy import ndimage


class UnionFind:
    """Union-find over ``0..size-1`` with path compression."""

    def __init__(self, size: int):
        self.parents = np.arange(size)
        self.num_components = size

    def find(self, elem: int) -> int:
        root = elem
        while root != self.parents[root]:
            root = self.parents[root]
        # compress the path so every visited element points at the root
        while elem != root:
            nxt = self.parents[elem]
            self.parents[elem] = root
            elem = nxt
        return int(root)

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        self.parents[max(ra, rb)] = min(ra, rb)
        self.num_components -= 1


def label_components(mask: np.ndarray, periodic: bool) -> tuple[np.ndarray, int]:
    """Face-connected components of ``mask``; labels are 1..count, 0 off the mask.

    Components touching across opposite faces are merged when ``periodic``.
    """
    mask = np.asarray(mask, dtype=bool)
    labels, count = ndimage.label(mask)
    if not periodic or count == 0:
        return labels, count
    uf = UnionFind(count + 1)
    for axis in range(mask.ndim):
        first = np.take(labels, 0, axis=axis)
        last = np.take(labels, -1, axis=axis)
        both = (first > 0) & (last > 0)
        for a, b in zip(first[both], last[both]):
            uf.union(int(a), int(b))
    roots = np.array([uf.find(i) for i in range(count + 1)])
    unique_roots = np.unique(roots[1:])
    relabel = np.zeros(count + 1, dtype=int)
    relabel[1:] = np.searchsorted(unique_roots, roots[1:]) + 1
    return relabel[labels], int(unique_roots.size)


def unwrap_component(mask: np.ndarray, start: tuple[int, ...]) -> tuple[dict[tuple, tuple], list[bool]]:
    """Breadth-first unwrapping of the periodic component of ``mask`` containing ``start``.

    Returns the unwrapped coordinate of every cell and, per axis, whether the
    component winds around the torus.
    """
    shape = mask.shape
    coords = {tuple(start): tuple(start)}
    winds = [False] * mask.ndim
    queue = deque([tuple(start)])
    while queue:
        cell = queue.popleft()
        here = coords[cell]
        for axis in range(mask.ndim):
            for step in (-1, 1):
                nb = list(cell)
                nb[axis] = (nb[axis] + step) % shape[axis]
                nb = tuple(nb)
                if not mask[nb]:
                    continue
                unwrapped = list(here)
                unwrapped[axis] += step
                unwrapped = tuple(unwrapped)
                known = coords.get(nb)
                if known is None:
                    coords[nb] = unwrapped
                    queue.append(nb)
                elif known != unwrapped:
                    for k in range(mask.ndim):
                        if known[k] != unwrapped[k]:
                            winds[k] = True
    return coords, winds
