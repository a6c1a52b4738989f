"""Geospatial detection of regions where the rate predictor is unreliable.

Pipeline: k-means clustering of transmission locations, per-cluster RMSE
thresholding, and fitting of rotated ellipses for the online containment
test.  Online, a transmission is postponed while the vehicle is inside any
detected ellipse.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .metrics import evaluate


@dataclass(frozen=True)
class ErrorSample:
    position: tuple         # (x, y) meters
    predicted: float        # MBit/s
    measured: float         # MBit/s


@dataclass(frozen=True)
class BlackSpotEllipse:
    centroid: tuple         # (x, y) meters
    a: float                # semi-major, meters
    b: float                # semi-minor, meters
    alpha: float            # rotation, radians, in [-pi/2, pi/2)
    cluster_rmse: float = 0.0


@dataclass(frozen=True)
class BlackSpotConfig:
    n_clusters: int = 100
    rmse_max: float = 3.0                   # per-operator threshold
    max_track_elimination: float = 0.20
    b_min: float = 10.0                     # minor-axis floor, meters
    seed: int = 0
    kmeans_max_iter: int = 100


@dataclass(frozen=True)
class ClusterStat:
    centroid: tuple
    member_count: int
    rmse: float
    is_black_spot: bool


@dataclass(frozen=True)
class BlackSpotMap:
    ellipses: tuple = ()
    clusters: tuple = ()
    eliminated_fraction: float = 0.0


def kmeans(points, k, seed=0, max_iter=100):
    """Seeded k-means with k-means++ initialization.

    Returns (labels, centroids).  Deterministic for a fixed seed.
    """
    points = np.asarray(points, dtype=float)
    if points.size == 0:
        raise ValueError("no points to cluster")
    distinct = np.unique(points, axis=0)
    if k > len(distinct):
        raise ValueError(f"k={k} exceeds {len(distinct)} distinct points")
    rng = np.random.default_rng(seed)

    # k-means++ seeding
    centroids = np.empty((k, points.shape[1]))
    centroids[0] = points[rng.integers(len(points))]
    d2 = np.sum((points - centroids[0]) ** 2, axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0:
            probs = np.full(len(points), 1.0 / len(points))
        else:
            probs = d2 / total
        centroids[j] = points[rng.choice(len(points), p=probs)]
        d2 = np.minimum(d2, np.sum((points - centroids[j]) ** 2, axis=1))

    labels = np.zeros(len(points), dtype=int)
    for _ in range(max_iter):
        dists = np.sum((points[:, None, :] - centroids[None, :, :]) ** 2,
                       axis=2)
        new_labels = np.argmin(dists, axis=1)
        new_centroids = centroids.copy()
        for j in range(k):
            members = points[new_labels == j]
            if len(members):
                new_centroids[j] = members.mean(axis=0)
        if np.array_equal(new_labels, labels) and np.allclose(
                new_centroids, centroids):
            break
        labels, centroids = new_labels, new_centroids
    return labels, centroids


def fit_ellipse(cluster_points, b_min=10.0):
    """Rotated ellipse around a point cluster.

    Orientation is the first principal axis of the points; the semi-axes are
    the maximum absolute deviations of the points from the centroid along
    the principal and orthogonal axes, the minor axis floored at b_min so
    near-collinear road clusters keep a usable width.
    """
    pts = np.asarray(cluster_points, dtype=float)
    if len(pts) < 2:
        raise ValueError("need at least 2 points to fit an ellipse")
    centroid = pts.mean(axis=0)
    centered = pts - centroid
    cov = centered.T @ centered / len(pts)
    eigvals, eigvecs = np.linalg.eigh(cov)
    major = eigvecs[:, np.argmax(eigvals)]
    alpha = math.atan2(major[1], major[0])
    # normalize orientation to [-pi/2, pi/2)
    while alpha >= math.pi / 2:
        alpha -= math.pi
    while alpha < -math.pi / 2:
        alpha += math.pi
    c, s = math.cos(alpha), math.sin(alpha)
    proj = centered[:, 0] * c + centered[:, 1] * s
    orth = -centered[:, 0] * s + centered[:, 1] * c
    a = float(np.max(np.abs(proj)))
    b = float(np.max(np.abs(orth)))
    if b > a:
        # variance ordering can disagree with max extents; keep a >= b
        a, b = b, a
        alpha = alpha + math.pi / 2 if alpha < 0 else alpha - math.pi / 2
    b = max(b, b_min)
    a = max(a, b)
    return BlackSpotEllipse(centroid=(float(centroid[0]), float(centroid[1])),
                            a=a, b=b, alpha=alpha)


def contains(ellipse, point):
    """Rotated-ellipse containment test."""
    vx = point[0] - ellipse.centroid[0]
    vy = point[1] - ellipse.centroid[1]
    c = math.cos(ellipse.alpha)
    s = math.sin(ellipse.alpha)
    return ((c * vx + s * vy) ** 2 / ellipse.a ** 2
            + (s * vx - c * vy) ** 2 / ellipse.b ** 2) <= 1.0


def in_any_black_spot(bs_map, point):
    return any(contains(e, point) for e in bs_map.ellipses)


def _track_fraction_covered(positions, ellipses):
    """Fraction of track length inside any ellipse.

    Measured over consecutive-sample segments; a segment counts as covered
    when its midpoint lies inside an ellipse.
    """
    positions = np.asarray(positions, dtype=float)
    if len(positions) < 2:
        return 0.0
    seg = positions[1:] - positions[:-1]
    lengths = np.hypot(seg[:, 0], seg[:, 1])
    total = lengths.sum()
    if total <= 0:
        return 0.0
    mids = (positions[1:] + positions[:-1]) / 2.0
    covered = 0.0
    probe = BlackSpotMap(ellipses=tuple(ellipses))
    for mid, length in zip(mids, lengths):
        if in_any_black_spot(probe, mid):
            covered += length
    return float(covered / total)


def detect_black_spots(samples, config):
    """Full offline pipeline: cluster, threshold, fit ellipses, cap coverage.

    Clusters whose prediction RMSE exceeds config.rmse_max become ellipses,
    admitted in descending RMSE order until the covered track fraction would
    exceed config.max_track_elimination.
    """
    positions = np.array([s.position for s in samples], dtype=float)
    if len(np.unique(positions, axis=0)) < config.n_clusters:
        raise ValueError("too few distinct sample positions for clustering")
    labels, centroids = kmeans(positions, config.n_clusters,
                               seed=config.seed,
                               max_iter=config.kmeans_max_iter)
    predicted = np.array([s.predicted for s in samples])
    measured = np.array([s.measured for s in samples])

    stats = []
    candidates = []
    for j in range(config.n_clusters):
        mask = labels == j
        count = int(mask.sum())
        if count == 0:
            continue
        err = predicted[mask] - measured[mask]
        rmse = float(np.sqrt(np.mean(err ** 2)))
        is_bs = rmse > config.rmse_max
        stats.append(ClusterStat(
            centroid=(float(centroids[j][0]), float(centroids[j][1])),
            member_count=count, rmse=rmse, is_black_spot=is_bs))
        if is_bs:
            candidates.append((rmse, j, mask))

    candidates.sort(key=lambda c: -c[0])
    ellipses = []
    for rmse, j, mask in candidates:
        pts = positions[mask]
        if len(np.unique(pts, axis=0)) < 2:
            ell = BlackSpotEllipse(
                centroid=(float(pts[0][0]), float(pts[0][1])),
                a=config.b_min, b=config.b_min, alpha=0.0, cluster_rmse=rmse)
        else:
            fitted = fit_ellipse(pts, b_min=config.b_min)
            ell = BlackSpotEllipse(centroid=fitted.centroid, a=fitted.a,
                                   b=fitted.b, alpha=fitted.alpha,
                                   cluster_rmse=rmse)
        trial = ellipses + [ell]
        if _track_fraction_covered(positions, trial) > \
                config.max_track_elimination:
            break
        ellipses.append(ell)

    fraction = _track_fraction_covered(positions, ellipses)
    return BlackSpotMap(ellipses=tuple(ellipses), clusters=tuple(stats),
                        eliminated_fraction=fraction)


class BlackSpotDetector:
    """sklearn-style wrapper: fit(error samples) then predict(positions)."""

    def __init__(self, n_clusters=100, rmse_max=3.0,
                 max_track_elimination=0.20, b_min=10.0, seed=0):
        self.n_clusters = n_clusters
        self.rmse_max = rmse_max
        self.max_track_elimination = max_track_elimination
        self.b_min = b_min
        self.seed = seed
        self.map_ = None

    def get_params(self, deep=True):
        return {"n_clusters": self.n_clusters, "rmse_max": self.rmse_max,
                "max_track_elimination": self.max_track_elimination,
                "b_min": self.b_min, "seed": self.seed}

    def set_params(self, **params):
        for k, v in params.items():
            if k not in self.get_params():
                raise ValueError(f"unknown parameter {k!r}")
            setattr(self, k, v)
        return self

    def fit(self, samples):
        self.map_ = detect_black_spots(samples, BlackSpotConfig(
            n_clusters=self.n_clusters, rmse_max=self.rmse_max,
            max_track_elimination=self.max_track_elimination,
            b_min=self.b_min, seed=self.seed))
        return self

    def predict(self, positions):
        if self.map_ is None:
            raise RuntimeError("detector is not fitted")
        return np.array([in_any_black_spot(self.map_, p) for p in positions])


def tradeoff_curve(samples, config, thresholds):
    """Prediction quality outside black spots vs. eliminated track fraction.

    Returns one row per threshold:
    (rmse_max, eliminated_fraction, r2, rmse, degenerate_flag).
    """
    if len(thresholds) == 0:
        raise ValueError("thresholds must be non-empty")
    rows = []
    for th in thresholds:
        cfg = BlackSpotConfig(
            n_clusters=config.n_clusters, rmse_max=th,
            max_track_elimination=config.max_track_elimination,
            b_min=config.b_min, seed=config.seed,
            kmeans_max_iter=config.kmeans_max_iter)
        bs_map = detect_black_spots(samples, cfg)
        outside = [s for s in samples
                   if not in_any_black_spot(bs_map, s.position)]
        if len(outside) < 2:
            rows.append((th, bs_map.eliminated_fraction, None, None, True))
            continue
        m = evaluate([s.predicted for s in outside],
                     [s.measured for s in outside])
        rows.append((th, bs_map.eliminated_fraction, m.r2, m.rmse, False))
    return rows


@dataclass(frozen=True)
class DwellStats:
    per_operator: dict = field(default_factory=dict)  # label -> (times, dists)
    best: tuple = ((), ())


def ecdf(values):
    """(sorted values, cumulative probabilities)."""
    v = np.sort(np.asarray(values, dtype=float))
    if v.size == 0:
        return v, v
    return v, np.arange(1, v.size + 1) / v.size


def dwell_statistics(trace, maps):
    """Times and distances spent inside black spots along a trace.

    ``maps`` is {operator label: BlackSpotMap}.  For the best-of-operators
    statistic, a position counts as covered only when it is inside a black
    spot for every operator simultaneously.
    """
    def intervals(flags):
        times, dists = [], []
        run_t = run_d = 0.0
        for s, inside in zip(trace.samples, flags):
            if inside:
                run_t += trace.sample_interval
                run_d += s.velocity / 3.6 * trace.sample_interval
            elif run_t > 0:
                times.append(run_t)
                dists.append(run_d)
                run_t = run_d = 0.0
        if run_t > 0:
            times.append(run_t)
            dists.append(run_d)
        return tuple(times), tuple(dists)

    per_op = {}
    all_flags = []
    for label, bs_map in maps.items():
        flags = [in_any_black_spot(bs_map, s.position)
                 for s in trace.samples]
        all_flags.append(flags)
        per_op[label] = intervals(flags)
    if all_flags:
        best_flags = [all(col) for col in zip(*all_flags)]
    else:
        best_flags = [False] * len(trace.samples)
    return DwellStats(per_operator=per_op, best=intervals(best_flags))


def save_map(bs_map, path):
    """One ellipse per row: cx cy a b alpha_rad cluster_rmse."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("opptrans-blackspots v1\n")
        fh.write(f"eliminated_fraction {float(bs_map.eliminated_fraction)!r}\n")
        for e in bs_map.ellipses:
            fh.write(f"{float(e.centroid[0])!r} {float(e.centroid[1])!r} "
                     f"{float(e.a)!r} {float(e.b)!r} "
                     f"{float(e.alpha)!r} {float(e.cluster_rmse)!r}\n")


def load_map(path):
    with open(path, encoding="utf-8") as fh:
        if fh.readline().strip() != "opptrans-blackspots v1":
            raise ValueError("unknown black-spot file header")
        fraction = float(fh.readline().split()[1])
        ellipses = []
        for line in fh:
            cx, cy, a, b, alpha, rmse = (float(v) for v in line.split())
            ellipses.append(BlackSpotEllipse(
                centroid=(cx, cy), a=a, b=b, alpha=alpha, cluster_rmse=rmse))
    return BlackSpotMap(ellipses=tuple(ellipses),
                        eliminated_fraction=fraction)
