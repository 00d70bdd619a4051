"""Constellation and cluster analysis of evolved signaling systems.

Signals are treated as vectors: an orthonormal basis is grown signal by
signal (residuals under 1e-4 collapse to zero-vectors), giving each
system coordinates in a space whose dimension the basis reveals. Whole
systems are compared as concept-ordered concatenations of their signals,
clustered by density (unbounded-radius OPTICS ordering plus xi-steep
extraction) under the Chebyshev metric, and summarized by per-cluster
medoids.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, DegenerateSignalError, DimensionError

ZERO_RESIDUAL = 1e-4


@dataclass
class SignalingSystem:
    vocab_size: int
    signals: list
    provenance: str = ""

    def __post_init__(self):
        if len(self.signals) != self.vocab_size:
            raise ContractError(f"{len(self.signals)} signals for vocabulary of {self.vocab_size}")
        lengths = {len(s) for s in self.signals}
        if len(lengths) > 1:
            raise ContractError("signals must share one window length")


@dataclass
class ConstellationReport:
    bases: list
    coordinates: list
    dimension: int


@dataclass
class ClusteringReport:
    """OPTICS ordering with xi labels.

    ``ordering[k]`` is the point visited k-th; ``reachability[k]`` is
    that visit's reachability (the first is infinite). Core distances
    and labels are indexed by point; noise is labeled -1. ``medoids``
    maps each cluster label to its central point's index.
    """

    ordering: np.ndarray
    reachability: np.ndarray
    core_distances: np.ndarray
    labels: np.ndarray
    medoids: dict = field(default_factory=dict)


def gram_schmidt(signals):
    """Grow an orthonormal basis from the signals in concept order.

    The first base is the normalized first signal; each later signal
    contributes the normalized residual of its projection onto the
    previous bases, or a zero-vector when that residual's norm falls
    under 1e-4. Coordinates are the scalar products with the nonzero
    bases, in base order.
    """
    signals = [np.asarray(s, dtype=float) for s in signals]
    if not signals:
        raise ContractError("at least one signal required")
    first_norm = np.linalg.norm(signals[0])
    if first_norm < ZERO_RESIDUAL:
        raise DegenerateSignalError(f"first signal norm {first_norm:.2e} below {ZERO_RESIDUAL}")

    bases = [signals[0] / first_norm]
    for s in signals[1:]:
        residual = s.copy()
        for phi in bases:
            residual -= (s @ phi) * phi  # zero bases contribute nothing
        norm = np.linalg.norm(residual)
        bases.append(np.zeros_like(s) if norm < ZERO_RESIDUAL else residual / norm)

    nonzero = [phi for phi in bases if phi.any()]
    coordinates = [np.array([s @ phi for phi in nonzero]) for s in signals]
    return ConstellationReport(bases=bases, coordinates=coordinates, dimension=len(nonzero))


def constellation_2d(system, report=None):
    """Per-signal (x, y) projections on the first two bases.

    Systems spanning one dimension get y = 0; more than two dimensions
    raise :class:`DimensionError` carrying the observed dimension.
    """
    report = report or gram_schmidt(system.signals)
    if report.dimension > 2:
        raise DimensionError(report.dimension)
    nonzero = [phi for phi in report.bases if phi.any()]
    phi1 = nonzero[0]
    phi2 = nonzero[1] if len(nonzero) > 1 else np.zeros_like(phi1)
    return [(float(np.dot(s, phi1)), float(np.dot(s, phi2))) for s in system.signals]


def chebyshev(a, b):
    """Max absolute coordinate difference."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ContractError(f"length mismatch: {a.shape} vs {b.shape}")
    return float(np.max(np.abs(a - b)))


def _pairwise(points, metric):
    points = np.asarray(points, dtype=float)
    if metric is chebyshev:
        return np.abs(points[:, None, :] - points[None, :, :]).max(axis=2)
    n = len(points)
    d = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d[i, j] = d[j, i] = metric(points[i], points[j])
    return d


def optics(points, min_samples=4, metric=chebyshev):
    """OPTICS ordering with unbounded neighborhood radius.

    The core distance of a point is the distance to its min_samples-th
    nearest neighbor counting the point itself; expansion always picks
    the unprocessed point of smallest reachability (ties to the lowest
    index), so the first reachability of every connected sweep is
    infinite.
    """
    points = np.asarray(points, dtype=float)
    n = len(points)
    if n == 0:
        raise ContractError("at least one point required")
    dist = _pairwise(points, metric)
    if n >= min_samples:
        core = np.sort(dist, axis=1)[:, min_samples - 1]
    else:
        core = np.full(n, np.inf)

    reachability = np.full(n, np.inf)
    processed = np.zeros(n, dtype=bool)
    ordering = np.empty(n, dtype=int)
    for position in range(n):
        candidates = np.flatnonzero(~processed)
        point = candidates[int(np.argmin(reachability[candidates]))]
        ordering[position] = point
        processed[point] = True
        if math.isfinite(core[point]):
            unproc = np.flatnonzero(~processed)
            rdist = np.maximum(dist[point, unproc], core[point])
            better = rdist < reachability[unproc]
            reachability[unproc[better]] = rdist[better]
    return ordering, reachability[ordering], core


def _steep_down(r, p, xic):
    if np.isinf(r[p]) and np.isinf(r[p + 1]):
        return False
    return r[p] * xic >= r[p + 1]


def _steep_up(r, p, xic):
    if np.isinf(r[p]) and np.isinf(r[p + 1]):
        return False
    return r[p] <= r[p + 1] * xic


def _extend_area(r, start, xic, min_samples, n, steep, gentle):
    """Last steep point of the maximal area from ``start``.

    Steep points reset the slack; at most min_samples consecutive
    merely-monotone points are tolerated inside the area.
    """
    index, end, slack = start, start, 0
    while index < n:
        if steep(r, index, xic):
            slack, end = 0, index
        elif gentle(r, index):
            slack += 1
            if slack > min_samples:
                break
        else:
            break
        index += 1
    return end


def extract_clusters_xi(ordering, reachability, xi=0.1, min_samples=4, min_cluster_size=None):
    """Label points by xi-steep cluster extraction.

    ``reachability`` is the reachability plot (aligned with
    ``ordering``). Steepness compares neighbors through the factor
    1 - xi; clusters pair a steep-down with a later steep-up area under
    the usual significance conditions. Points outside every extracted
    cluster are noise (-1).
    """
    ordering = np.asarray(ordering, dtype=int)
    n = len(ordering)
    labels = np.full(n, -1, dtype=int)
    if n == 0:
        return labels
    if min_cluster_size is None:
        min_cluster_size = min_samples
    r = np.concatenate([np.asarray(reachability, dtype=float), [np.inf]])
    xic = 1.0 - xi

    def filter_sdas(sdas, mib):
        if np.isinf(mib):
            return []
        kept = [d for d in sdas if mib <= r[d["start"]] * xic]
        for d in kept:
            d["mib"] = max(d["mib"], mib)
        return kept

    sdas = []
    clusters = []
    index = 0
    mib = 0.0
    # the padded infinity makes the last point a steep-up boundary, so
    # clusters reaching the end of the plot still close
    while index < n:
        mib = max(mib, r[index])
        if _steep_down(r, index, xic):
            sdas = filter_sdas(sdas, mib)
            start = index
            end = _extend_area(r, start, xic, min_samples, n, _steep_down, lambda rr, p: rr[p] >= rr[p + 1])
            index = end + 1
            sdas.append({"start": start, "end": end, "mib": 0.0})
            mib = r[index]
        elif _steep_up(r, index, xic):
            sdas = filter_sdas(sdas, mib)
            u_start = index
            u_end = _extend_area(r, u_start, xic, min_samples, n, _steep_up, lambda rr, p: rr[p] <= rr[p + 1])
            index = u_end + 1
            mib = r[index]

            found = []
            for d in sdas:
                c_start, c_end = d["start"], u_end
                if r[c_end + 1] * xic < d["mib"]:
                    continue
                d_max = r[d["start"]]
                if d_max * xic >= r[c_end + 1]:
                    # trim the left flank down to the end level
                    while r[c_start + 1] > r[c_end + 1] and c_start < d["end"]:
                        c_start += 1
                elif r[c_end + 1] * xic >= d_max:
                    # trim the right flank down to the start level
                    while r[c_end - 1] > d_max and c_end > u_start:
                        c_end -= 1
                if c_end - c_start + 1 < min_cluster_size:
                    continue
                if c_start > d["end"]:
                    continue
                if c_end < u_start:
                    continue
                found.append((c_start, c_end))
            found.reverse()  # inner clusters first
            clusters.extend(found)
        else:
            index += 1

    positions = np.full(n, -1, dtype=int)
    label = 0
    for start, end in clusters:
        if np.all(positions[start : end + 1] == -1):
            positions[start : end + 1] = label
            label += 1
    labels[ordering] = positions
    return labels


def medoid(cluster_points, metric=chebyshev):
    """Index of the member minimizing mean distance to the other members."""
    if len(cluster_points) == 0:
        raise ContractError("empty cluster")
    if len(cluster_points) == 1:
        return 0
    dist = _pairwise(cluster_points, metric)
    means = dist.sum(axis=1) / (len(cluster_points) - 1)
    return int(np.argmin(means))


def nn_classify(point, references, labels, metric=chebyshev):
    """Label of the nearest reference (ties to the lowest reference index)."""
    if len(references) == 0:
        raise ContractError("no references")
    distances = [metric(point, ref) for ref in references]
    return labels[int(np.argmin(distances))]


def system_vector(system):
    """Concept-ordered concatenation of a system's signals."""
    return np.concatenate([np.asarray(s, dtype=float) for s in system.signals])


def cluster_signaling_systems(systems, min_samples=4, xi=0.1, metric=chebyshev):
    """Cluster whole systems and assign every system to its nearest medoid.

    Returns the clustering report plus the share of systems falling to
    each cluster under nearest-medoid classification (empty when no
    cluster was extracted).
    """
    sizes = {s.vocab_size for s in systems}
    if len(sizes) > 1:
        raise ContractError(f"mixed vocabulary sizes in one clustering job: {sorted(sizes)}")
    vectors = np.array([system_vector(s) for s in systems])
    ordering, reachability, core = optics(vectors, min_samples=min_samples, metric=metric)
    labels = extract_clusters_xi(ordering, reachability, xi=xi, min_samples=min_samples)
    medoids = {}
    for label in sorted(set(labels) - {-1}):
        member_idx = np.flatnonzero(labels == label)
        medoids[int(label)] = int(member_idx[medoid(vectors[member_idx], metric)])
    report = ClusteringReport(ordering, reachability, core, labels, medoids)
    shares = {}
    if medoids:
        ref_labels = sorted(medoids)
        refs = [vectors[medoids[l]] for l in ref_labels]
        assigned = [nn_classify(v, refs, ref_labels, metric) for v in vectors]
        shares = {l: assigned.count(l) / len(systems) for l in ref_labels}
    return report, shares
