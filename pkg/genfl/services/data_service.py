"""
Synthetic dataset construction, Dirichlet non-IID partitioning and label
distribution metrics.
"""
import itertools
import logging
from pathlib import Path
from typing import List, Sequence, Tuple, Union

import numpy as np

from genfl.errors import EmptyDatasetError, PartitionError, ShapeMismatchError
from genfl.schemas.dataset import (
    ClassGeometry,
    LabeledDataset,
    LabelHistogram,
    PartitionPlan,
    Provenance,
)
from genfl.utils.files import atomic_write_text
from genfl.utils.rng import derive_seed

logger = logging.getLogger(__name__)

MAX_PARTITION_ATTEMPTS = 100


def _helmert(n: int) -> np.ndarray:
    """(n - 1, n) orthonormal rows spanning the vectors that sum to zero"""
    rows = np.zeros((n - 1, n))
    for k in range(1, n):
        rows[k - 1, :k] = 1.0
        rows[k - 1, k] = -k
        rows[k - 1] /= np.sqrt(k * (k + 1))
    return rows


def _largest_remainder(proportions: np.ndarray, total: int) -> np.ndarray:
    """Integer counts summing exactly to total; ties go to the lower index"""
    raw = proportions * total
    counts = np.floor(raw).astype(np.int64)
    short = total - int(counts.sum())
    if short > 0:
        order = np.argsort(-(raw - counts), kind="stable")
        counts[order[:short]] += 1
    return counts


def _draw_partition(labels: np.ndarray, num_classes: int, num_clients: int, alpha: float, seed: int) -> List[List[int]]:
    rng = np.random.default_rng(derive_seed(seed, "partition"))
    assignments: List[List[int]] = [[] for _ in range(num_clients)]
    for c in range(num_classes):
        idx = np.flatnonzero(labels == c)
        if idx.size == 0:
            continue
        idx = idx[rng.permutation(idx.size)]
        proportions = rng.dirichlet(np.full(num_clients, alpha))
        if not np.all(np.isfinite(proportions)) or proportions.sum() <= 0:
            # every gamma draw underflowed; the limit of tiny alpha is one owner
            proportions = np.zeros(num_clients)
            proportions[rng.integers(num_clients)] = 1.0
        counts = _largest_remainder(proportions, idx.size)
        bounds = np.concatenate([[0], np.cumsum(counts)])
        for client in range(num_clients):
            assignments[client].extend(int(i) for i in idx[bounds[client]:bounds[client + 1]])
    return assignments


class DataService:
    def class_geometry(self, num_classes: int, dim: int, cluster_spread: float,
                       center_separation: float = 6.0, seed: int = 0) -> ClassGeometry:
        """
        Per-class Gaussian centers.

        With dim >= num_classes - 1 the centers form a regular simplex, so every
        pair is exactly center_separation apart (scaled basis vectors when
        dim >= num_classes, Helmert coordinates of the same simplex one
        dimension lower). Smaller dims cannot hold equidistant centers; the
        centers then sit on the first num_classes points of a cubic lattice
        with spacing center_separation, which is also the minimum pairwise
        distance.
        """
        if num_classes < 1 or dim < 1:
            raise ValueError("num_classes and dim must be positive")
        if dim >= num_classes:
            centers = np.zeros((num_classes, dim))
            centers[np.arange(num_classes), np.arange(num_classes)] = center_separation / np.sqrt(2.0)
        elif dim == num_classes - 1:
            centers = center_separation / np.sqrt(2.0) * _helmert(num_classes).T
        else:
            side = 1
            while side ** dim < num_classes:
                side += 1
            points = np.array(list(itertools.islice(itertools.product(range(side), repeat=dim), num_classes)), dtype=float)
            centers = center_separation * (points - points.mean(axis=0))
            logger.debug(f"{num_classes} classes in {dim} dims: lattice centers, side {side}")
        return ClassGeometry(centers=centers, spread=float(cluster_spread), seed=int(seed))

    def make_synthetic_dataset(self, num_classes: int, dim: int, samples_per_class: int, cluster_spread: float,
                               seed: int, center_separation: float = 6.0) -> LabeledDataset:
        """
        Balanced Gaussian blobs, one per class, all provenance real.

        Samples are stored class by class (all of class 0 first).
        """
        if samples_per_class < 1:
            raise ValueError("samples_per_class must be positive")
        if not cluster_spread > 0:
            raise ValueError("cluster_spread must be > 0")
        geometry = self.class_geometry(num_classes, dim, cluster_spread, center_separation, seed)
        rng = np.random.default_rng(derive_seed(seed, "dataset"))

        labels = np.repeat(np.arange(num_classes), samples_per_class)
        noise = rng.normal(0.0, cluster_spread, size=(labels.size, dim))
        features = geometry.centers[labels] + noise
        provenance = np.full(labels.size, Provenance.REAL, dtype=np.uint8)
        logger.debug(f"Synthetic dataset: {num_classes} classes x {samples_per_class} samples, dim={dim}")
        return LabeledDataset(features, labels, provenance, num_classes)

    def split_holdout(self, dataset: LabeledDataset, fraction: float, seed: int) -> Tuple[LabeledDataset, LabeledDataset]:
        """
        Stratified split: round(fraction * class_size) samples of every class go
        to the held-out set.

        Returns:
            (train, test)
        """
        rng = np.random.default_rng(derive_seed(seed, "holdout"))
        train_idx, test_idx = [], []
        for c in range(dataset.num_classes):
            idx = np.flatnonzero(dataset.labels == c)
            idx = idx[rng.permutation(idx.size)]
            n_test = int(round(fraction * idx.size))
            test_idx.append(np.sort(idx[:n_test]))
            train_idx.append(np.sort(idx[n_test:]))
        return dataset.subset(np.concatenate(train_idx)), dataset.subset(np.concatenate(test_idx))

    def dirichlet_partition(self, dataset: LabeledDataset, num_clients: int, alpha: float, seed: int) -> PartitionPlan:
        """
        Split every class across clients with proportions ~ Dirichlet(alpha).

        Smaller alpha gives more skewed clients. If some client ends up with no
        samples the whole partition is re-drawn with the next seed, up to 100 times.

        Raises:
            PartitionError: more clients than samples, or re-draws exhausted
        """
        if not alpha > 0:
            raise ValueError("alpha must be > 0")
        if num_clients < 1:
            raise ValueError("num_clients must be >= 1")
        if num_clients > len(dataset):
            raise PartitionError(f"num_clients ({num_clients}) exceeds dataset size ({len(dataset)})")

        for attempt in range(MAX_PARTITION_ATTEMPTS):
            assignments = _draw_partition(dataset.labels, dataset.num_classes, num_clients, alpha, seed + attempt)
            empty = sum(1 for a in assignments if not a)
            if empty == 0:
                if attempt:
                    logger.debug(f"Partition accepted after {attempt + 1} draws (alpha={alpha})")
                return PartitionPlan(tuple(tuple(sorted(a)) for a in assignments), attempts=attempt + 1)
            logger.debug(f"Partition draw {attempt + 1}: {empty} empty client(s), re-drawing")
            if attempt == MAX_PARTITION_ATTEMPTS // 2:
                logger.warning(f"Partition still has empty clients after {attempt + 1} draws (alpha={alpha})")

        raise PartitionError(
            f"could not give every one of {num_clients} clients a sample in {MAX_PARTITION_ATTEMPTS} draws (alpha={alpha})"
        )

    def label_histogram(self, dataset: LabeledDataset) -> LabelHistogram:
        """counts[c] = number of samples labelled c"""
        return LabelHistogram(tuple(np.bincount(dataset.labels, minlength=dataset.num_classes)))

    def emd_heterogeneity(self, client_hist: LabelHistogram, population_hist: LabelHistogram) -> float:
        """
        L1 distance between the normalized label distributions, in [0, 2].

        Raises:
            EmptyDatasetError: either histogram sums to zero
            ShapeMismatchError: class counts differ
        """
        if client_hist.num_classes != population_hist.num_classes:
            raise ShapeMismatchError("histograms have different class counts")
        if client_hist.total == 0 or population_hist.total == 0:
            raise EmptyDatasetError("EMD needs histograms with a positive total")
        p = client_hist.as_array() / client_hist.total
        q = population_hist.as_array() / population_hist.total
        return float(np.abs(p - q).sum())

    def mean_emd(self, histograms: Sequence[LabelHistogram], population_hist: LabelHistogram) -> float:
        if not histograms:
            return 0.0
        return float(np.mean([self.emd_heterogeneity(h, population_hist) for h in histograms]))

    def export_dataset(self, dataset: LabeledDataset, path: Union[str, Path]) -> Path:
        """
        Write one sample per line: label,flag,f1,...,fd where flag is r (real)
        or g (generated).
        """
        lines = []
        for features, label, prov in zip(dataset.features, dataset.labels, dataset.provenance):
            cells = [str(int(label)), Provenance(int(prov)).flag] + [repr(float(v)) for v in features]
            lines.append(",".join(cells))
        return atomic_write_text(path, "".join(line + "\n" for line in lines))

    def import_dataset(self, path: Union[str, Path], num_classes: int) -> LabeledDataset:
        """Read a file written by export_dataset"""
        features, labels, provenance = [], [], []
        dim = None
        with open(path, "r", encoding="utf-8") as handle:
            for line_no, line in enumerate(handle, start=1):
                line = line.strip()
                if not line:
                    continue
                cells = line.split(",")
                if len(cells) < 3:
                    raise ValueError(f"line {line_no}: expected label,flag,features...")
                row = [float(v) for v in cells[2:]]
                if dim is None:
                    dim = len(row)
                elif len(row) != dim:
                    raise ShapeMismatchError(f"line {line_no}: expected {dim} features, got {len(row)}")
                labels.append(int(cells[0]))
                provenance.append(Provenance.from_flag(cells[1]))
                features.append(row)
        if dim is None:
            return LabeledDataset.empty(num_classes, 0)
        return LabeledDataset(np.asarray(features), np.asarray(labels), np.asarray(provenance, dtype=np.uint8), num_classes)


data_service = DataService()
