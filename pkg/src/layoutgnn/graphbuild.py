"""Per-page graph construction and normalized adjacency operators.

Two structures are supported: the k-closest graph, linking every node to
its k nearest layout objects by centroid Euclidean distance, and the
complete graph. Edges are stored undirected as (i, j) pairs with i < j;
the k-closest rule is applied per node and the stored set is the
symmetrized union of the per-node selections.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import BBox, Page
from .errors import ShapeError

K_CLOSEST = "k_closest"
COMPLETE = "complete"

GCN_SYM = "gcn_sym"
PLAIN_SYM = "plain_sym"
NEIGHBOR_LISTS = "neighbor_lists"


@dataclass(frozen=True)
class PageGraph:
    n: int
    edges: tuple[tuple[int, int], ...]  # i < j, lexicographically sorted
    kind: str  # K_CLOSEST | COMPLETE
    k: int | None = None


@dataclass(frozen=True)
class NormalizedAdjacency:
    n: int
    variant: str  # GCN_SYM | PLAIN_SYM | NEIGHBOR_LISTS
    matrix: np.ndarray | None = None
    neighbors: tuple[np.ndarray, ...] | None = None


def centroid(bbox: BBox) -> tuple[float, float]:
    return ((bbox.x0 + bbox.x1) / 2.0, (bbox.y0 + bbox.y1) / 2.0)


def _centroids(page: Page) -> np.ndarray:
    return np.array([centroid(o.bbox) for o in page.objects], dtype=np.float64).reshape(-1, 2)


def build_k_closest(page: Page, k: int) -> PageGraph:
    """Symmetrized union of each node's min(k, n-1) nearest neighbors.

    Distances are compared on squared values; ties break toward the
    smaller node index (stable argsort over index-ordered rows).
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    n = len(page.objects)
    if n <= 1:
        return PageGraph(n=n, edges=(), kind=K_CLOSEST, k=k)
    pts = _centroids(page)
    diff = pts[:, None, :] - pts[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    np.fill_diagonal(d2, np.inf)
    kk = min(k, n - 1)
    edges: set[tuple[int, int]] = set()
    for i in range(n):
        for j in np.argsort(d2[i], kind="stable")[:kk]:
            j = int(j)
            edges.add((i, j) if i < j else (j, i))
    return PageGraph(n=n, edges=tuple(sorted(edges)), kind=K_CLOSEST, k=k)


def build_complete(page: Page) -> PageGraph:
    n = len(page.objects)
    edges = tuple((i, j) for i in range(n) for j in range(i + 1, n))
    return PageGraph(n=n, edges=edges, kind=COMPLETE, k=None)


def adjacency_matrix(graph: PageGraph) -> np.ndarray:
    a = np.zeros((graph.n, graph.n))
    for i, j in graph.edges:
        a[i, j] = 1.0
        a[j, i] = 1.0
    return a


def normalize(graph: PageGraph, variant: str) -> NormalizedAdjacency:
    """Build the operator a backbone consumes.

    ``gcn_sym``: D^-1/2 (A + I) D^-1/2 with degrees of A + I.
    ``plain_sym``: D^-1/2 A D^-1/2, zero rows/cols for isolated nodes.
    ``neighbor_lists``: ascending neighbor index array per node.
    """
    if variant == GCN_SYM:
        a = adjacency_matrix(graph) + np.eye(graph.n)
        d = a.sum(axis=1)
        inv_sqrt = 1.0 / np.sqrt(d)
        return NormalizedAdjacency(graph.n, variant, matrix=a * inv_sqrt[:, None] * inv_sqrt[None, :])
    if variant == PLAIN_SYM:
        a = adjacency_matrix(graph)
        d = a.sum(axis=1)
        inv_sqrt = np.where(d > 0, 1.0 / np.sqrt(np.where(d > 0, d, 1.0)), 0.0)
        return NormalizedAdjacency(graph.n, variant, matrix=a * inv_sqrt[:, None] * inv_sqrt[None, :])
    if variant == NEIGHBOR_LISTS:
        lists: list[list[int]] = [[] for _ in range(graph.n)]
        for i, j in graph.edges:
            lists[i].append(j)
            lists[j].append(i)
        neighbors = tuple(np.array(sorted(nb), dtype=np.intp) for nb in lists)
        return NormalizedAdjacency(graph.n, variant, neighbors=neighbors)
    raise ShapeError(f"unknown adjacency variant {variant!r}")


def graph_dump(graph: PageGraph, doc_id: str, page_index: int) -> dict:
    """JSON-ready debug dump; edges are [i, j] with i < j, sorted."""
    return {
        "doc_id": doc_id,
        "page_index": page_index,
        "kind": graph.kind,
        "k": graph.k,
        "edges": [[i, j] for i, j in graph.edges],
    }
