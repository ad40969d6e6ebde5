"""Per-language link graphs and the Wikipedia-side features."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .ingest import EntityCatalog, LinkEdgeList, format_real

DEFAULT_DAMPING = 0.85
DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITERS = 200


class EmptyGraphError(ValueError):
    pass


@dataclass(frozen=True)
class LinkGraph:
    """Directed graph in compressed sparse row form, forward and reverse.

    Node ``i`` is the page ``page_ids[i]``; page ids are sorted ascending.
    ``fwd_indices[fwd_indptr[i]:fwd_indptr[i + 1]]`` are the out-neighbours
    of ``i``, and the ``rev_*`` arrays hold the transpose.
    """

    language: str
    page_ids: np.ndarray
    fwd_indptr: np.ndarray
    fwd_indices: np.ndarray
    rev_indptr: np.ndarray
    rev_indices: np.ndarray

    @property
    def n(self) -> int:
        return len(self.page_ids)

    @property
    def edge_count(self) -> int:
        return len(self.fwd_indices)

    def node_of(self, page_id: int) -> int:
        i = int(np.searchsorted(self.page_ids, page_id))
        if i == self.n or self.page_ids[i] != page_id:
            raise KeyError(page_id)
        return i

    def out_neighbors(self, node: int) -> np.ndarray:
        return self.fwd_indices[self.fwd_indptr[node]:self.fwd_indptr[node + 1]]

    def in_neighbors(self, node: int) -> np.ndarray:
        return self.rev_indices[self.rev_indptr[node]:self.rev_indptr[node + 1]]

    def out_degrees(self) -> np.ndarray:
        return np.diff(self.fwd_indptr)

    def in_degrees(self) -> np.ndarray:
        return np.diff(self.rev_indptr)

    def edges(self) -> np.ndarray:
        """``(m, 2)`` array of ``(src_node, dst_node)``, sorted."""
        src = np.repeat(np.arange(self.n), self.out_degrees())
        return np.column_stack([src, self.fwd_indices])


def _csr(src: np.ndarray, dst: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    order = np.lexsort((dst, src))
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
    return indptr, dst[order].astype(np.int64)


def graph_from_node_edges(language: str, page_ids, node_edges) -> LinkGraph:
    """Build a graph from edges given as node indices into ``page_ids``.

    Duplicate edges collapse to one; self-loops are dropped.
    """
    page_ids = np.asarray(page_ids, dtype=np.int64)
    n = len(page_ids)
    e = np.asarray(node_edges, dtype=np.int64).reshape(-1, 2)
    e = e[e[:, 0] != e[:, 1]]
    if len(e):
        e = np.unique(e, axis=0)
    src, dst = e[:, 0], e[:, 1]
    fwd_indptr, fwd_indices = _csr(src, dst, n)
    rev_indptr, rev_indices = _csr(dst, src, n)
    return LinkGraph(language, page_ids, fwd_indptr, fwd_indices, rev_indptr, rev_indices)


def build_graph(edge_list: LinkEdgeList, catalog: EntityCatalog, language: str) -> LinkGraph:
    """Graph over every catalog page of ``language``, isolated pages included."""
    page_ids = np.array([r.page_id for r in catalog.records_for(language)], dtype=np.int64)
    raw = np.asarray(edge_list.for_language(language), dtype=np.int64).reshape(-1, 2)
    nodes = np.searchsorted(page_ids, raw) if len(page_ids) else raw
    return graph_from_node_edges(language, page_ids, nodes)


@dataclass(frozen=True)
class PageRankVector:
    scores: np.ndarray
    damping: float
    iterations: int
    residual: float
    converged: bool


def pagerank(
    graph: LinkGraph,
    damping: float = DEFAULT_DAMPING,
    max_iters: int = DEFAULT_MAX_ITERS,
    tol: float = DEFAULT_TOL,
) -> PageRankVector:
    """Power iteration with uniform teleport.

    Mass sitting on dangling nodes is spread uniformly over all nodes each
    step. Stops once the L1 change between iterates drops below ``tol`` or
    after ``max_iters`` steps; ``converged`` says which happened.
    """
    n = graph.n
    if n == 0:
        raise EmptyGraphError("pagerank of an empty graph")
    if not 0.0 < damping < 1.0:
        raise ValueError(f"damping must lie in (0, 1), got {damping}")
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")

    out_deg = graph.out_degrees()
    dangling = out_deg == 0
    src = np.repeat(np.arange(n), out_deg)
    dst = graph.fwd_indices
    inv_deg = np.zeros(n)
    inv_deg[~dangling] = 1.0 / out_deg[~dangling]

    x = np.full(n, 1.0 / n)
    residual = np.inf
    iterations = 0
    for iterations in range(1, max_iters + 1):
        flow = np.bincount(dst, weights=(x * inv_deg)[src], minlength=n)
        leak = damping * x[dangling].sum() + (1.0 - damping)
        new = damping * flow + leak / n
        new /= new.sum()
        residual = float(np.abs(new - x).sum())
        x = new
        if residual < tol:
            break
    return PageRankVector(x, damping, iterations, residual, residual < tol)


def degree_features(graph: LinkGraph) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(inlink_count, outlink_count)`` per node."""
    return graph.in_degrees(), graph.out_degrees()


def in_out_ratio(inlink_count, outlink_count):
    """``inlinks / max(outlinks, 1)``; works elementwise on arrays too."""
    return np.divide(inlink_count, np.maximum(outlink_count, 1), dtype=float)


def category_counts(category_map: Mapping, language: str, page_ids) -> np.ndarray:
    return np.array([len(category_map.get((language, int(p)), ())) for p in page_ids], dtype=np.int64)


@dataclass(frozen=True)
class WikiFeatures:
    """Wikipedia features for every page of one language, aligned with ``page_ids``."""

    language: str
    page_ids: np.ndarray
    pagerank: np.ndarray
    inlinks: np.ndarray
    outlinks: np.ndarray
    in_out_ratio: np.ndarray
    category_count: np.ndarray

    @property
    def node_count(self) -> int:
        return len(self.page_ids)


def wiki_features(graph: LinkGraph, category_map: Mapping, damping=DEFAULT_DAMPING,
                  max_iters=DEFAULT_MAX_ITERS, tol=DEFAULT_TOL) -> WikiFeatures:
    inl, outl = degree_features(graph)
    pr = pagerank(graph, damping, max_iters, tol).scores
    return WikiFeatures(
        graph.language,
        graph.page_ids,
        pr,
        inl,
        outl,
        in_out_ratio(inl, outl),
        category_counts(category_map, graph.language, graph.page_ids),
    )


WIKI_DUMP_COLUMNS = ("language", "page_id", "pagerank", "inlinks", "outlinks", "in_out_ratio", "category_count")


def dump_lines(feats: WikiFeatures):
    for i, pid in enumerate(feats.page_ids):
        yield "\t".join([
            feats.language,
            str(int(pid)),
            format_real(float(feats.pagerank[i])),
            str(int(feats.inlinks[i])),
            str(int(feats.outlinks[i])),
            format_real(float(feats.in_out_ratio[i])),
            str(int(feats.category_count[i])),
        ])
