"""Sensor clustering and collection-point placement.

Cluster count starts at the load bound ceil(N / N_th) and grows until every
cluster fits inside the serving UAV's coverage disk and under the FDMA member
cap. Collection points are cluster centroids at the flight altitude.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import CoverageRadii, min_hover_time
from .model import Scenario

_LLOYD_TOL_M = 1e-6
_LLOYD_MAX_ITER = 300
_SEED_ATTEMPTS = 3


def _kmeanspp_seed(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(points)
    centroids = np.empty((k, 2))
    centroids[0] = points[rng.integers(n)]
    d2 = np.sum((points - centroids[0]) ** 2, axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0:
            # all remaining mass collapsed onto chosen centroids
            centroids[j] = points[rng.integers(n)]
            continue
        centroids[j] = points[rng.choice(n, p=d2 / total)]
        d2 = np.minimum(d2, np.sum((points - centroids[j]) ** 2, axis=1))
    return centroids


def kmeans_cluster(points, k: int, seed=0) -> tuple[np.ndarray, np.ndarray]:
    """k-means++ seeding plus Lloyd iterations.

    Stops when no centroid moves more than 1e-6 m or after 300 rounds. Ties in
    the assignment go to the lowest centroid index; a centroid that loses all
    members is reseeded at the point farthest from its assigned centroid.
    Returns (labels, centroids).
    """
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    n = len(points)
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    rng = np.random.default_rng(seed)
    centroids = _kmeanspp_seed(points, k, rng)
    labels = np.zeros(n, dtype=int)
    for _ in range(_LLOYD_MAX_ITER):
        d2 = np.sum((points[:, None, :] - centroids[None, :, :]) ** 2, axis=2)
        labels = np.argmin(d2, axis=1)          # argmin takes the lowest index on ties
        assigned_d2 = d2[np.arange(n), labels].copy()
        moved = 0.0
        for j in range(k):
            members = points[labels == j]
            if len(members) == 0:
                far = int(np.argmax(assigned_d2))
                labels[far] = j
                assigned_d2[far] = -1.0
                new_c = points[far]
            else:
                new_c = members.mean(axis=0)
            moved = max(moved, float(np.hypot(*(new_c - centroids[j]))))
            centroids[j] = new_c
        if moved < _LLOYD_TOL_M:
            break
    d2 = np.sum((points[:, None, :] - centroids[None, :, :]) ** 2, axis=2)
    labels = np.argmin(d2, axis=1)
    return labels, centroids


@dataclass(frozen=True)
class Cluster:
    member_ids: tuple[int, ...]
    cp_m: tuple[float, float]       # collection point (ground projection)
    min_hover_s: float


@dataclass(frozen=True)
class ClusterSet:
    clusters: tuple[Cluster, ...]

    @property
    def k(self) -> int:
        return len(self.clusters)

    def cp_array(self) -> np.ndarray:
        return np.array([c.cp_m for c in self.clusters], dtype=float)

    def hover_array(self) -> np.ndarray:
        return np.array([c.min_hover_s for c in self.clusters], dtype=float)


def cluster_sensors(scenario: Scenario, radii: CoverageRadii) -> ClusterSet:
    """Partition the sensor field into coverage- and capacity-feasible clusters."""
    points = scenario.sensor_positions
    n = len(points)
    k = math.ceil(n / scenario.n_th)
    while True:
        # a few fresh seedings per k before growing k; keeps the final count low
        for attempt in range(_SEED_ATTEMPTS):
            labels, centroids = kmeans_cluster(points, k,
                                               seed=[scenario.rng_seed, k, attempt])
            sizes = np.bincount(labels, minlength=k)
            dists = np.hypot(*(points - centroids[labels]).T)
            worst = np.zeros(k)
            np.maximum.at(worst, labels, dists)
            if sizes.max() <= scenario.n_th and worst.max() <= radii.r_g2u_m:
                break
        else:
            if k >= n:
                raise RuntimeError("clustering failed to converge at k == n")
            k += 1
            continue
        break
    clusters = []
    for j in range(k):
        ids = np.flatnonzero(labels == j)
        hover = min_hover_time(points[ids], scenario.sensor_data_bits[ids],
                               centroids[j], scenario.params)
        clusters.append(Cluster(
            member_ids=tuple(int(i) for i in ids),
            cp_m=(float(centroids[j][0]), float(centroids[j][1])),
            min_hover_s=hover,
        ))
    return ClusterSet(clusters=tuple(clusters))


def check_cluster_set(scenario: Scenario, cluster_set: ClusterSet,
                      radii: CoverageRadii) -> list[str]:
    """Independent feasibility audit; returns a list of violation messages."""
    problems = []
    seen = {}
    for k, c in enumerate(cluster_set.clusters):
        if not c.member_ids:
            problems.append(f"cluster {k} is empty")
            continue
        if len(c.member_ids) > scenario.n_th:
            problems.append(f"cluster {k} holds {len(c.member_ids)} > n_th members")
        pts = scenario.sensor_positions[list(c.member_ids)]
        d = np.hypot(*(pts - np.asarray(c.cp_m)).T)
        if d.max() > radii.r_g2u_m + 1e-6:
            problems.append(f"cluster {k} member beyond coverage radius")
        centroid = pts.mean(axis=0)
        if np.hypot(*(centroid - np.asarray(c.cp_m))) > 1e-6:
            problems.append(f"cluster {k} CP is not the member centroid")
        for i in c.member_ids:
            if i in seen:
                problems.append(f"sensor {i} assigned to clusters {seen[i]} and {k}")
            seen[i] = k
    missing = set(range(scenario.n_sensors)) - set(seen)
    if missing:
        problems.append(f"sensors never assigned: {sorted(missing)[:5]}...")
    return problems


def write_clusters_csv(scenario: Scenario, cluster_set: ClusterSet,
                       assignments_path, cps_path):
    """Dump (sensor_id, cluster_id) rows and the collection-point table."""
    with open(assignments_path, "w") as f:
        f.write("sensor_id,cluster_id\n")
        owner = {}
        for k, c in enumerate(cluster_set.clusters):
            for i in c.member_ids:
                owner[i] = k
        for i in range(scenario.n_sensors):
            f.write(f"{i},{owner[i]}\n")
    with open(cps_path, "w") as f:
        f.write("cluster_id,cp_x_m,cp_y_m,n_members,min_hover_s\n")
        for k, c in enumerate(cluster_set.clusters):
            f.write(f"{k},{c.cp_m[0]!r},{c.cp_m[1]!r},"
                    f"{len(c.member_ids)},{c.min_hover_s!r}\n")
