"""
HDBSCAN on the 2D embedding; points left unclustered are the anomalies.

Pipeline: core distances -> mutual reachability graph -> minimum spanning tree
(Prim, dense) -> single-linkage hierarchy -> condensed tree -> excess-of-mass
selection. MST edges of equal weight are merged as one level, so points that
separate at the same distance are treated alike regardless of their order.
"""

import logging
from dataclasses import dataclass, field
from itertools import groupby

import numpy as np
import pandas as pd
from scipy.cluster.hierarchy import DisjointSet
from scipy.spatial.distance import pdist, squareform

import config
from src.errors import ConfigError, InputError

logger = logging.getLogger(__name__)

NOISE = -1


@dataclass(eq=False)
class ClusterResult:
    labels: np.ndarray
    num_clusters: int
    min_cluster_size: int
    min_samples: int
    condensed_tree: pd.DataFrame = field(repr=False, default=None)
    stabilities: dict = field(repr=False, default_factory=dict)


def _as_points(points):
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    if points.ndim != 2:
        raise InputError("points must be a (K, d) array")
    if not np.all(np.isfinite(points)):
        raise InputError("points must be finite")
    return points


def core_distances(points, k_core):
    """Distance from each point to its k_core-th nearest other point."""
    points = _as_points(points)
    if k_core < 1:
        raise ConfigError("k_core must be at least 1")
    if points.shape[0] <= k_core:
        raise InputError(f"need more than {k_core} points for core distances")
    dist = squareform(pdist(points))
    np.fill_diagonal(dist, np.inf)
    return np.partition(dist, k_core - 1, axis=1)[:, k_core - 1]


def mutual_reachability(points, k_core):
    """max(core(a), core(b), d(a, b)) for every pair; zero diagonal."""
    points = _as_points(points)
    core = core_distances(points, k_core)
    dist = squareform(pdist(points))
    mr = np.maximum(dist, np.maximum.outer(core, core))
    np.fill_diagonal(mr, 0.0)
    return mr


def minimum_spanning_tree(weights):
    """Prim's algorithm on a dense symmetric weight matrix; returns (K-1, 3) rows of (a, b, w)."""
    weights = np.asarray(weights, dtype=float)
    count = weights.shape[0]
    in_tree = np.zeros(count, dtype=bool)
    in_tree[0] = True
    best = weights[0].copy()
    parent = np.zeros(count, dtype=np.int64)
    edges = np.zeros((max(count - 1, 0), 3))
    for e in range(count - 1):
        candidates = np.where(in_tree, np.inf, best)
        j = int(np.argmin(candidates))
        edges[e] = (parent[j], j, best[j])
        in_tree[j] = True
        closer = (weights[j] < best) & ~in_tree
        best = np.where(closer, weights[j], best)
        parent = np.where(closer, j, parent)
    return edges


def _merge_levels(count, edges):
    """
    Bottom-up single-linkage hierarchy with multiway merges.

    Leaves are nodes 0..count-1; each internal node joins every component
    connected by MST edges of one weight. Returns (children, distance, size)
    lists indexed by node id; the last node is the root.
    """
    children = [[] for _ in range(count)]
    distance = [0.0] * count
    size = [1] * count
    sets = DisjointSet(range(count))
    node_of = {i: i for i in range(count)}

    order = np.argsort(edges[:, 2], kind="stable")
    for weight, group in groupby(edges[order], key=lambda row: row[2]):
        group = [(int(a), int(b)) for a, b, _ in group]
        touched = {sets[a] for a, b in group} | {sets[b] for a, b in group}
        old_nodes = {rep: node_of.pop(rep) for rep in touched}
        for a, b in group:
            sets.merge(a, b)
        merged = {}
        for rep, node in old_nodes.items():
            merged.setdefault(sets[rep], []).append(node)
        for new_rep, nodes in merged.items():
            nodes.sort()
            children.append(nodes)
            distance.append(float(weight))
            size.append(sum(size[n] for n in nodes))
            node_of[new_rep] = len(children) - 1
    return children, distance, size


def _leaves(node, children, count):
    stack, out = [node], []
    while stack:
        n = stack.pop()
        if n < count:
            out.append(n)
        else:
            stack.extend(children[n])
    return out


def _lambda(distance):
    return 1.0 / max(distance, config.DISTANCE_FLOOR)


def condense_tree(count, edges, min_cluster_size):
    """
    Condensed cluster tree as a table (parent, child, lambda_val, child_size).

    Cluster ids start at `count` (the root); ids below `count` are points.
    A split yields new clusters only when at least two parts keep
    min_cluster_size points; smaller parts fall out of the parent as points.
    """
    children, distance, size = _merge_levels(count, edges)
    root_node = len(children) - 1
    root = count
    next_id = root + 1
    rows = []
    stack = [(root_node, root)]
    while stack:
        node, cluster = stack.pop()
        lam = _lambda(distance[node])
        parts = children[node]
        big = [p for p in parts if size[p] >= min_cluster_size]
        split = len(big) >= 2
        for part in parts:
            if split and size[part] >= min_cluster_size:
                rows.append((cluster, next_id, lam, size[part]))
                stack.append((part, next_id))
                next_id += 1
            elif not split and big and part == big[0]:
                stack.append((part, cluster))
            else:
                rows.extend((cluster, p, lam, 1) for p in _leaves(part, children, count))

    tree = pd.DataFrame(rows, columns=["parent", "child", "lambda_val", "child_size"])
    return tree.astype({"parent": np.int64, "child": np.int64, "child_size": np.int64})


def compute_stability(tree, count):
    """Excess of mass: sum over a cluster's children of (lambda - lambda_birth) * size."""
    birth = {count: 0.0}
    clusters = tree[tree["child"] >= count]
    birth.update(zip(clusters["child"], clusters["lambda_val"]))
    stability = {c: 0.0 for c in birth}
    for parent, lam, child_size in zip(tree["parent"], tree["lambda_val"], tree["child_size"]):
        stability[parent] += (lam - birth[parent]) * child_size
    return stability


def _select_eom(tree, stability, count):
    cluster_children = {c: [] for c in stability}
    for parent, child in zip(tree["parent"], tree["child"]):
        if child >= count:
            cluster_children[parent].append(child)

    selected = {c: True for c in stability if c != count}
    subtree = dict(stability)
    for cluster in sorted(selected, reverse=True):
        child_total = sum(subtree[c] for c in cluster_children[cluster])
        if cluster_children[cluster] and child_total > stability[cluster]:
            selected[cluster] = False
            subtree[cluster] = child_total
        else:
            stack = list(cluster_children[cluster])
            while stack:
                c = stack.pop()
                selected[c] = False
                stack.extend(cluster_children[c])
    return {c for c, keep in selected.items() if keep}


def _label_single_cluster(tree, count, epsilon):
    """
    Labels when the root is the only cluster (allow_single_cluster).

    A point stays in the root if it leaves no earlier than the root's last
    children, i.e. its lambda reaches the largest lambda among the root's
    rows. A nonzero epsilon replaces that bar with lambda >= 1 / epsilon, so
    every point still attached at distance epsilon is kept.
    """
    points = tree[tree["child"] < count]
    if epsilon > 0:
        threshold = 1.0 / epsilon
    else:
        threshold = tree.loc[tree["parent"] == count, "lambda_val"].max()
    lam = np.zeros(count)
    lam[points["child"].to_numpy()] = points["lambda_val"].to_numpy()
    labels = np.where(lam >= threshold, 0, NOISE).astype(np.int64)
    return labels, int(np.any(labels == 0))


def _label_points(tree, selected, count):
    parent_of = dict(zip(tree["child"], tree["parent"]))
    assignment = np.full(count, NOISE, dtype=np.int64)
    for point in range(count):
        cluster = parent_of.get(point)
        while cluster is not None:
            if cluster in selected:
                assignment[point] = cluster
                break
            cluster = parent_of.get(cluster)

    # Dense ids ordered by each cluster's smallest member index
    first_member = {}
    for point, cluster in enumerate(assignment):
        if cluster != NOISE:
            first_member.setdefault(int(cluster), point)
    relabel = {c: i for i, c in enumerate(sorted(first_member, key=first_member.get))}
    labels = np.array([relabel.get(int(c), NOISE) for c in assignment], dtype=np.int64)
    return labels, len(relabel)


def hdbscan(points, min_cluster_size=config.MIN_CLUSTER_SIZE, min_samples=None,
            allow_single_cluster=config.ALLOW_SINGLE_CLUSTER,
            cluster_selection_epsilon=config.CLUSTER_SELECTION_EPSILON):
    """
    Cluster points; label NOISE for points no selected cluster claims.

    min_samples (the core-distance neighbor count) defaults to
    min_cluster_size and is capped at K-1. With fewer than min_cluster_size
    points no cluster can form and every point is noise.

    The root is never selected next to other clusters. When the condensed
    tree has no cluster besides the root, allow_single_cluster makes the root
    the one cluster and labels it with `_label_single_cluster`; without it
    every point is noise. cluster_selection_epsilon only affects that case.
    """
    points = _as_points(points)
    count = points.shape[0]
    if count < 2:
        raise InputError("HDBSCAN needs at least 2 points")
    if min_cluster_size < 2:
        raise ConfigError("min_cluster_size must be at least 2")
    k_core = min_samples if min_samples is not None else min_cluster_size
    if k_core < 1:
        raise ConfigError("min_samples must be at least 1")
    if cluster_selection_epsilon < 0:
        raise ConfigError("cluster_selection_epsilon must be non-negative")

    if count < min_cluster_size:
        logger.warning(f"{count} points < min_cluster_size {min_cluster_size}: all noise")
        return ClusterResult(
            labels=np.full(count, NOISE, dtype=np.int64), num_clusters=0,
            min_cluster_size=min_cluster_size, min_samples=k_core,
        )
    if k_core >= count:
        logger.debug(f"min_samples {k_core} capped at {count - 1}")
        k_core = count - 1

    mr = mutual_reachability(points, k_core)
    edges = minimum_spanning_tree(mr)
    tree = condense_tree(count, edges, min_cluster_size)
    stability = compute_stability(tree, count)

    if (tree["child"] >= count).any():
        selected = _select_eom(tree, stability, count)
        labels, num_clusters = _label_points(tree, selected, count)
    elif allow_single_cluster:
        labels, num_clusters = _label_single_cluster(tree, count, cluster_selection_epsilon)
    else:
        labels, num_clusters = np.full(count, NOISE, dtype=np.int64), 0

    logger.info(
        f"HDBSCAN: {num_clusters} clusters, {int(np.sum(labels == NOISE))} noise points "
        f"(min_cluster_size={min_cluster_size}, min_samples={k_core})"
    )
    return ClusterResult(
        labels=labels, num_clusters=num_clusters, min_cluster_size=min_cluster_size,
        min_samples=k_core, condensed_tree=tree, stabilities=stability,
    )


def outliers(result):
    """Ids (positions) of NOISE points, ascending."""
    return np.flatnonzero(np.asarray(result.labels) == NOISE).tolist()
