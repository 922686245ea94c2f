"""Similarity-diversity curation over a precomputed distance matrix.

Two clustering rounds drive the character selection: a dedup round
(eps = 0.4) keeps one medoid per cluster of repeated persons, then a
similarity round (eps = 0.5) groups the survivors and up to seven images
per cluster are sampled, five for training and two for testing.  The
epsilon values bind to whatever distance definition produced the ingested
matrix.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .datamodel import DistanceMatrix
from .errors import IndexMismatch, NTooLarge

DEDUP_EPS = 0.4
SIMILARITY_EPS = 0.5
DEFAULT_MIN_PTS = 2
PER_CLUSTER = 7
TRAIN_K = 5
TEST_K = 2


@dataclass(frozen=True)
class ClusterAssignment:
    labels: np.ndarray   # per-item int, -1 = noise
    eps: float
    min_pts: int

    @property
    def n_clusters(self) -> int:
        return int(self.labels.max()) + 1 if np.any(self.labels >= 0) else 0

    @property
    def n_noise(self) -> int:
        return int(np.sum(self.labels == -1))


def dbscan(d: DistanceMatrix | np.ndarray, eps: float, min_pts: int) -> ClusterAssignment:
    """Deterministic DBSCAN on a precomputed distance matrix.

    A point is core when it has at least ``min_pts`` neighbors within
    ``eps`` (inclusive, self included).  Clusters are connected components
    of core points; cluster ids follow first-core order.  A border point
    joins the cluster of its lowest-index core neighbor; everything else is
    noise (-1).
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if min_pts < 1:
        raise ValueError("min_pts must be >= 1")
    m = d.values if isinstance(d, DistanceMatrix) else np.asarray(d)
    n = m.shape[0]
    within = m <= eps
    core = within.sum(axis=1) >= min_pts

    labels = np.full(n, -1, dtype=int)
    cluster_id = 0
    for i in range(n):
        if not core[i] or labels[i] != -1:
            continue
        # flood over the core graph
        stack = [i]
        labels[i] = cluster_id
        while stack:
            j = stack.pop()
            for k in np.nonzero(within[j])[0]:
                if core[k] and labels[k] == -1:
                    labels[k] = cluster_id
                    stack.append(k)
        cluster_id += 1

    for i in range(n):
        if core[i] or labels[i] != -1:
            continue
        reachable = np.nonzero(within[i] & core)[0]
        if reachable.size:
            labels[i] = labels[reachable[0]]
    return ClusterAssignment(labels, eps, min_pts)


def _medoid(member_idx: np.ndarray, m: np.ndarray, ids: list[str]) -> int:
    """Cluster member with minimal summed distance; ties by smallest id."""
    sub = m[np.ix_(member_idx, member_idx)]
    sums = sub.sum(axis=1)
    best = min(range(len(member_idx)), key=lambda i: (sums[i], ids[member_idx[i]]))
    return int(member_idx[best])


def deduplicate(image_ids: list[str], d: DistanceMatrix,
                eps: float = DEDUP_EPS, min_pts: int = DEFAULT_MIN_PTS) -> list[str]:
    """Drop repeated persons: per dedup cluster only the medoid survives.

    Noise items all survive.  Survivors are returned in corpus order, so
    the op is idempotent on its own output.
    """
    m = np.asarray(d.values, dtype=np.float64)
    if len(image_ids) != d.n:
        raise IndexMismatch(f"{len(image_ids)} ids vs {d.n}x{d.n} matrix")
    assign = dbscan(d, eps, min_pts)
    keep = np.zeros(len(image_ids), dtype=bool)
    keep[assign.labels == -1] = True
    for cid in range(assign.n_clusters):
        members = np.nonzero(assign.labels == cid)[0]
        keep[_medoid(members, m, image_ids)] = True
    return [image_ids[i] for i in np.nonzero(keep)[0]]


@dataclass(frozen=True)
class ClusterPlan:
    cluster_id: int
    members: list[str]      # ordered by distance to medoid, ascending
    selected: list[str]
    train: list[str]
    test: list[str]


@dataclass(frozen=True)
class CurationPlan:
    clusters: list[ClusterPlan] = field(default_factory=list)

    @property
    def selected_ids(self) -> list[str]:
        out = []
        for c in self.clusters:
            out.extend(c.selected)
        return out

    @property
    def train_ids(self) -> list[str]:
        return [i for c in self.clusters for i in c.train]

    @property
    def test_ids(self) -> list[str]:
        return [i for c in self.clusters for i in c.test]


def build_plan(survivors: list[str], all_ids: list[str], d: DistanceMatrix,
               eps: float = SIMILARITY_EPS, min_pts: int = DEFAULT_MIN_PTS,
               per_cluster: int = PER_CLUSTER, train_k: int = TRAIN_K,
               test_k: int = TEST_K, keep_noise_singletons: bool = False) -> CurationPlan:
    """Similarity round over the dedup survivors.

    The full matrix is restricted to the survivors and reclustered; round-2
    noise is excluded unless ``keep_noise_singletons``.  Per cluster the
    members are ordered by distance to the medoid (ties by image id), the
    first min(per_cluster, n) are selected, and of those the first
    min(train_k, count) go to training with up to ``test_k`` more to test.
    """
    if not survivors:
        raise ValueError("no survivors to curate")
    index_of = {img: i for i, img in enumerate(all_ids)}
    try:
        rows = np.array([index_of[s] for s in survivors], dtype=int)
    except KeyError as e:
        raise IndexMismatch(f"survivor {e} not in corpus index") from e
    m = np.asarray(d.values, dtype=np.float64)[np.ix_(rows, rows)]
    assign = dbscan(m, eps, min_pts)

    clusters: list[ClusterPlan] = []
    next_cluster = 0
    for cid in range(int(assign.labels.max()) + 1 if np.any(assign.labels >= 0) else 0):
        members = np.nonzero(assign.labels == cid)[0]
        medoid_local = _medoid(members, m, survivors)
        order = sorted(members, key=lambda i: (m[i, medoid_local], survivors[i]))
        ordered_ids = [survivors[i] for i in order]
        selected = ordered_ids[:per_cluster]
        train = selected[:train_k]
        test = selected[train_k:train_k + test_k]
        clusters.append(ClusterPlan(next_cluster, ordered_ids, selected, train, test))
        next_cluster += 1

    if keep_noise_singletons:
        for i in np.nonzero(assign.labels == -1)[0]:
            sid = survivors[i]
            clusters.append(ClusterPlan(next_cluster, [sid], [sid], [sid], []))
            next_cluster += 1
    return CurationPlan(clusters)


def random_plan(image_ids: list[str], n: int, rng: np.random.Generator) -> CurationPlan:
    """Baseline: uniform sample without replacement, one singleton cluster
    per pick, all assigned to training."""
    if n > len(image_ids):
        raise NTooLarge(f"requested {n} of {len(image_ids)} images")
    picks = rng.choice(len(image_ids), size=n, replace=False)
    clusters = []
    for cid, idx in enumerate(picks):
        sid = image_ids[int(idx)]
        clusters.append(ClusterPlan(cid, [sid], [sid], [sid], []))
    return CurationPlan(clusters)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def save_plan(plan: CurationPlan, path) -> None:
    with open(path, "w") as f:
        for c in plan.clusters:
            f.write(json.dumps({
                "cluster_id": c.cluster_id,
                "members": c.members,
                "selected": c.selected,
                "train": c.train,
                "test": c.test,
            }, separators=(",", ":")) + "\n")


def load_plan(path) -> CurationPlan:
    clusters = []
    with open(path) as f:
        for line in f:
            if not line.strip():
                continue
            obj = json.loads(line)
            clusters.append(ClusterPlan(obj["cluster_id"], obj["members"],
                                        obj["selected"], obj["train"], obj["test"]))
    return CurationPlan(clusters)
