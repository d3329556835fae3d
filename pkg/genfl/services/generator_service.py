"""
Server-side generation stand-in.

Chooses which labels to generate from the clients' shared histograms,
emits samples around (possibly displaced) class centers with optional
label noise, and accrues them into a per-class capped pool.
"""
import logging
from typing import List, Sequence

import numpy as np

from genfl.errors import EmptyDatasetError, ShapeMismatchError
from genfl.schemas.dataset import ClassGeometry, LabeledDataset, LabelHistogram, Provenance
from genfl.schemas.generator import GenPool, GeneratorConfig
from genfl.utils.rng import make_stream

logger = logging.getLogger(__name__)


class GeneratorService:
    def select_labels(self, client_histograms: Sequence[LabelHistogram], pool: GenPool, rate_per_round: int) -> List[int]:
        """
        Pick rate_per_round labels, most under-represented first.

        A class's representation is its aggregate client count plus its pool
        count. Each pick goes to the lowest such total among classes that are
        not yet at the pool cap (ties to the lower class index) and then counts
        towards that total. Fewer labels come back only when every class is
        capped.

        Returns:
            Sorted list of class indices (a multiset)
        """
        if not client_histograms:
            raise ValueError("select_labels needs at least one client histogram")
        num_classes = pool.num_classes
        totals = np.zeros(num_classes, dtype=np.int64)
        for hist in client_histograms:
            if hist.num_classes != num_classes:
                raise ShapeMismatchError("client histogram and pool have different class counts")
            totals += hist.as_array()
        pool_counts = pool.per_class_counts.as_array().copy()
        totals += pool_counts

        chosen: List[int] = []
        for _ in range(rate_per_round):
            open_classes = np.flatnonzero(pool_counts < pool.cap_per_class)
            if open_classes.size == 0:
                break
            c = int(open_classes[np.argmin(totals[open_classes])])
            chosen.append(c)
            totals[c] += 1
            pool_counts[c] += 1
        return sorted(chosen)

    def shift_directions(self, geometry: ClassGeometry) -> np.ndarray:
        """Fixed unit vector per class along which the generator's center is displaced"""
        rng = make_stream(geometry.seed, "generator-shift")
        directions = rng.normal(size=(geometry.num_classes, geometry.dim))
        norms = np.linalg.norm(directions, axis=1, keepdims=True)
        norms[norms == 0] = 1.0
        return directions / norms

    def generate(self, labels: Sequence[int], config: GeneratorConfig, geometry: ClassGeometry,
                 rng_stream: np.random.Generator) -> LabeledDataset:
        """
        Emit one sample per requested label.

        The sample is drawn around center[c] + center_shift * direction[c] with
        spread geometry.spread * spread_factor. With probability label_noise it
        is labelled as a uniformly chosen other class.
        """
        requested = np.asarray(labels, dtype=np.int64)
        if requested.size == 0:
            raise EmptyDatasetError("generate needs at least one label")
        num_classes = geometry.num_classes

        centers = geometry.centers + config.center_shift * self.shift_directions(geometry)
        spread = geometry.spread * config.spread_factor
        features = centers[requested] + rng_stream.normal(0.0, spread, size=(requested.size, geometry.dim))

        emitted = requested.copy()
        if num_classes > 1:
            flip = rng_stream.random(requested.size) < config.label_noise
            offsets = rng_stream.integers(1, num_classes, size=requested.size)
            emitted[flip] = (requested[flip] + offsets[flip]) % num_classes

        provenance = np.full(requested.size, Provenance.GENERATED, dtype=np.uint8)
        return LabeledDataset(features, emitted, provenance, num_classes)

    def accrue(self, pool: GenPool, fresh: LabeledDataset, cap_per_class: int = None) -> GenPool:
        """
        Append fresh samples class by class until each class reaches the cap.
        Excess samples are dropped; the earliest generated ones are kept.
        """
        cap = pool.cap_per_class if cap_per_class is None else int(cap_per_class)
        if len(fresh) == 0:
            return pool
        if not fresh.all_generated():
            raise ValueError("only generated samples can enter the pool")

        counts = pool.per_class_counts.as_array().copy()
        keep = []
        for i, label in enumerate(fresh.labels):
            if counts[label] < cap:
                counts[label] += 1
                keep.append(i)

        dropped = len(fresh) - len(keep)
        if dropped:
            logger.debug(f"Pool cap {cap} reached, dropped {dropped} generated sample(s)")
        if not keep:
            return GenPool(pool.dataset, pool.per_class_counts, cap)
        return GenPool(
            dataset=pool.dataset.concat(fresh.subset(keep)),
            per_class_counts=LabelHistogram(tuple(counts)),
            cap_per_class=cap,
        )


generator_service = GeneratorService()
