"""Normalised spectral distance and agglomerative clustering of unequal-length series."""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass

import numpy as np

from .core import SeriesError, TimeSeries, prepare_comparison
from .inference import DegenerateInputError, d_statistics

LINKAGES = ("average", "complete", "single")


def distance_from_stats(d1: float, d2: float, d12: float) -> float:
    """sqrt(max(1 - 4 D12 / (D1 + D2), 0)).

    D1 and D2 estimate int f^2 / 2pi while D12 estimates int f g / 4pi, so
    4 D12 / (D1 + D2) estimates 2 int f g / (int f^2 + int g^2). The squared
    distance therefore equals the normalised R^2 statistic.
    """
    if not d1 + d2 > 0:
        raise DegenerateInputError("D1 + D2 = 0: distance undefined")
    return math.sqrt(max(1.0 - 4.0 * d12 / (d1 + d2), 0.0))


def spectral_distance(a: TimeSeries, b: TimeSeries, center: bool = True) -> float:
    """Estimated normalised L2 distance between the spectra of ``a`` and ``b``.

    The shorter series defines the frequency grid. Values near 0 indicate
    similar second-order structure, values near 1 dissimilar structure. The
    estimate for two identical series is small but not exactly 0 because
    the cross term pairs neighbouring frequencies.
    """
    s = d_statistics(prepare_comparison(a, b, center))
    return distance_from_stats(s.d1, s.d2, s.d12)


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    labels: tuple
    d: np.ndarray

    def __post_init__(self):
        d = np.array(self.d, dtype=float)
        if d.shape != (len(self.labels), len(self.labels)):
            raise ValueError("matrix shape does not match label count")
        if not np.array_equal(d, d.T) or np.any(np.diag(d) != 0):
            raise ValueError("distance matrix must be symmetric with zero diagonal")
        d.setflags(write=False)
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "d", d)

    def to_csv(self) -> str:
        lines = ["," + ",".join(_csv_cell(l) for l in self.labels)]
        for lab, row in zip(self.labels, self.d):
            lines.append(_csv_cell(lab) + "," + ",".join(repr(float(x)) for x in row))
        return "\n".join(lines) + "\n"


def _csv_cell(text: str) -> str:
    if any(c in text for c in ',"\n\r'):
        return '"' + text.replace('"', '""') + '"'
    return text


def unique_labels(labels) -> list[str]:
    """Suffix repeated labels deterministically: name, name_2, name_3, ..."""
    seen: dict[str, int] = {}
    taken = set(labels)
    out = []
    for lab in labels:
        if lab not in seen:
            seen[lab] = 1
            out.append(lab)
            continue
        k = seen[lab]
        while True:
            k += 1
            cand = f"{lab}_{k}"
            if cand not in taken:
                break
        seen[lab] = k
        taken.add(cand)
        out.append(cand)
    return out


def distance_matrix(series, center: bool = True) -> DistanceMatrix:
    """Pairwise spectral distances; each unordered pair is computed once."""
    series = list(series)
    if len(series) < 2:
        raise ValueError("need at least two series")
    labels = unique_labels([s.label for s in series])
    prepped = []
    for s, lab in zip(series, labels):
        v = s.values - s.values.mean() if center else s.values
        if not np.any(v):
            raise DegenerateInputError(f"series '{lab}' has zero variance")
        prepped.append(TimeSeries(v, lab))
    m = len(prepped)
    d = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            try:
                d[i, j] = d[j, i] = spectral_distance(prepped[i], prepped[j], center=False)
            except SeriesError as exc:
                raise DegenerateInputError(f"pair ({labels[i]}, {labels[j]}): {exc}") from None
    return DistanceMatrix(tuple(labels), d)


# ---------------------------------------------------------------------------
# dendrogram


@dataclass(frozen=True)
class Node:
    """Leaf (``label`` set, height 0) or merge of ``left`` and ``right`` at ``height``."""

    height: float = 0.0
    label: str | None = None
    left: "Node | None" = None
    right: "Node | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    def leaves(self) -> list[str]:
        if self.is_leaf:
            return [self.label]
        return self.left.leaves() + self.right.leaves()

    def merge_heights(self) -> list[float]:
        if self.is_leaf:
            return []
        return self.left.merge_heights() + self.right.merge_heights() + [self.height]


Dendrogram = Node


def _linkage_update(method, d_ik, d_jk, size_i, size_j):
    if method == "single":
        return min(d_ik, d_jk)
    if method == "complete":
        return max(d_ik, d_jk)
    return (size_i * d_ik + size_j * d_jk) / (size_i + size_j)


def agglomerate(m: DistanceMatrix, linkage: str = "average") -> Node:
    """Sequential agglomerative clustering.

    At each step the closest pair of clusters merges; ties go to the
    lexicographically smallest pair of cluster keys, where a cluster's key
    is its smallest leaf label. The merged node's left child is the cluster
    with the smaller key.
    """
    if linkage not in LINKAGES:
        raise ValueError(f"linkage must be one of {LINKAGES}, got {linkage!r}")
    clusters = {i: (Node(label=lab), lab) for i, lab in enumerate(m.labels)}
    sizes = {i: 1 for i in clusters}
    dist = {(i, j): float(m.d[i, j]) for i in clusters for j in clusters if i < j}
    next_id = len(clusters)

    while len(clusters) > 1:
        def order(pair):
            i, j = pair
            a, b = sorted((clusters[i][1], clusters[j][1]))
            return (dist[pair], a, b)

        i, j = min(dist, key=order)
        (ni, ki), (nj, kj) = clusters.pop(i), clusters.pop(j)
        if kj < ki:
            ni, nj, ki, kj = nj, ni, kj, ki
        node = Node(height=dist[(i, j)], left=ni, right=nj)
        new = next_id
        next_id += 1
        for k in clusters:
            d_ik = dist.pop((min(i, k), max(i, k)))
            d_jk = dist.pop((min(j, k), max(j, k)))
            dist[(k, new)] = _linkage_update(linkage, d_ik, d_jk, sizes[i], sizes[j])
        del dist[(i, j)]
        sizes[new] = sizes.pop(i) + sizes.pop(j)
        clusters[new] = (node, ki)
    (root, _), = clusters.values()
    return root


def cut(tree: Node, k: int) -> list[list[str]]:
    """Split the tree into ``k`` clusters by undoing the last ``k - 1`` merges."""
    n_leaves = len(tree.leaves())
    if not 1 <= k <= n_leaves:
        raise ValueError(f"k must lie in 1..{n_leaves}")
    groups = [tree]
    while len(groups) < k:
        # undo the highest merge; ties resolved by leaf order for determinism
        idx = max((i for i, g in enumerate(groups) if not g.is_leaf),
                  key=lambda i: groups[i].height)
        g = groups.pop(idx)
        groups[idx:idx] = [g.left, g.right]
    return [sorted(g.leaves()) for g in groups]


# ---------------------------------------------------------------------------
# export

_SAFE = re.compile(r"[A-Za-z0-9_.\-]")


def _escape(label: str) -> str:
    return "".join(c if _SAFE.fullmatch(c) else "".join(f"%{b:02X}" for b in c.encode("utf-8"))
                   for c in label)


def _num(x: float) -> str:
    return format(x, ".12g")


def to_newick(tree: Node) -> str:
    def rec(node, parent_height):
        length = _num(parent_height - node.height)
        if node.is_leaf:
            return f"{_escape(node.label)}:{length}"
        return f"({rec(node.left, node.height)},{rec(node.right, node.height)}):{length}"

    if tree.is_leaf:
        return f"{_escape(tree.label)};"
    return f"({rec(tree.left, tree.height)},{rec(tree.right, tree.height)});"


def to_json_obj(tree: Node) -> dict:
    if tree.is_leaf:
        return {"label": tree.label, "height": tree.height}
    return {"children": [to_json_obj(tree.left), to_json_obj(tree.right)], "height": tree.height}


def from_json_obj(obj: dict) -> Node:
    if "children" in obj:
        left, right = obj["children"]
        return Node(height=float(obj["height"]), left=from_json_obj(left), right=from_json_obj(right))
    return Node(height=float(obj.get("height", 0.0)), label=obj["label"])


def export_dendrogram(tree: Node, format: str = "newick") -> str:
    if format == "newick":
        return to_newick(tree)
    if format == "json":
        return json.dumps(to_json_obj(tree))
    raise ValueError(f"unknown format {format!r}; use 'newick' or 'json'")


def parse_dendrogram_json(text: str) -> Node:
    return from_json_obj(json.loads(text))
