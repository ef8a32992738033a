"""Epoch batch schedules with disjoint labeled/unlabeled batch kinds.

Labeled samples are grouped into batches whose class composition tracks the
class proportions of the whole labeled pool to within one sample per class,
using a bounded apportionment that also keeps batch sizes exact. Unlabeled
samples form their own batches. The two kinds are interleaved in shuffled
order. Schedules are pure functions of (seed, epoch).
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

LABELED = "labeled"
UNLABELED = "unlabeled"


@dataclass(frozen=True)
class Batch:
    indices: np.ndarray  # column indices into the dataset
    kind: str  # LABELED or UNLABELED


@dataclass(frozen=True)
class BatchSchedule:
    batches: tuple
    epoch: int
    seed: int

    def __iter__(self):
        return iter(self.batches)

    def __len__(self):
        return len(self.batches)


def _batch_sizes(n, batch_size, min_size):
    """Sizes (batch_size, ..., batch_size, remainder); an undersized remainder
    is merged into the previous batch."""
    if n == 0:
        return []
    k = n // batch_size
    rem = n - k * batch_size
    sizes = [batch_size] * k
    if rem:
        if rem >= min_size or not sizes:
            sizes.append(rem)
        else:
            sizes[-1] += rem
    return sizes


def _apportion(class_counts, sizes):
    """Integer allocation table: rows are batches, columns classes.

    Every entry is the floor or ceil of its exact proportional share
    sizes[b] * class_counts[i] / L, rows sum to the batch sizes and columns
    to the class counts. Greedy with look-ahead capacity bounds; feasibility
    follows from the exact fractional solution.
    """
    class_counts = np.asarray(class_counts, dtype=np.int64)
    total = int(class_counts.sum())
    sizes = np.asarray(sizes, dtype=np.int64)
    exact = sizes[:, None] * (class_counts[None, :] / total)
    floors = np.floor(exact).astype(np.int64)
    ceils = np.ceil(exact).astype(np.int64)

    table = np.zeros_like(floors)
    remaining = class_counts.copy()
    for b in range(len(sizes)):
        # look-ahead capacity of the later batches keeps column sums reachable
        ceil_rest = ceils[b + 1 :].sum(axis=0)
        floor_rest = floors[b + 1 :].sum(axis=0)
        lo = np.maximum(floors[b], remaining - ceil_rest)
        hi = np.minimum(ceils[b], remaining - floor_rest)
        row = lo.copy()
        spare = int(sizes[b] - row.sum())
        if spare < 0:
            raise AssertionError("infeasible apportionment: lower bounds exceed batch size")
        order = np.argsort(-(exact[b] - floors[b]), kind="stable")
        for i in order:
            if spare == 0:
                break
            bump = min(int(hi[i] - row[i]), spare)
            row[i] += bump
            spare -= bump
        if spare != 0:
            raise AssertionError("apportionment failed to meet the batch size")
        table[b] = row
        remaining -= row
    return table


def make_schedule(data, batch_size, epoch, seed, min_batch=1):
    """Build the deterministic batch schedule for one epoch.

    Parameters
    ----------
    data : object with ``labels`` (int array, -1 where unknown), ``labeled_mask``
        (bool array) and ``n`` (sample count); a PairedDataset qualifies.
    batch_size : int
        Nominal batch size for both kinds.
    epoch, seed : int
        The schedule is a pure function of this pair.
    min_batch : int
        A trailing partial batch smaller than max(n_classes, min_batch) is
        merged into the previous batch of its kind.

    Every index appears in exactly one batch; labeled batches contain only
    labeled indices, with per-class counts within one sample of exact
    proportionality.
    """
    if batch_size < 1:
        raise ConfigError(f"batch_size must be positive, got {batch_size}")
    mask = np.asarray(data.labeled_mask, dtype=bool)
    labeled_idx = np.flatnonzero(mask)
    unlabeled_idx = np.flatnonzero(~mask)
    rng = np.random.default_rng((int(seed) & 0xFFFFFFFF, int(epoch), 0x5C4ED))

    batches = []
    if labeled_idx.size:
        y = np.asarray(data.labels)[labeled_idx]
        classes, class_of = np.unique(y, return_inverse=True)
        if batch_size < classes.size:
            raise ConfigError(
                f"batch_size {batch_size} is smaller than the {classes.size} classes "
                "present; proportional labeled batches are unachievable"
            )
        min_size = max(classes.size, min_batch)
        sizes = _batch_sizes(labeled_idx.size, batch_size, min_size)
        counts = np.bincount(class_of, minlength=classes.size)
        table = _apportion(counts, sizes)
        pools = [rng.permutation(labeled_idx[class_of == c]) for c in range(classes.size)]
        cursors = np.zeros(classes.size, dtype=np.int64)
        for row in table:
            parts = []
            for c, take in enumerate(row):
                parts.append(pools[c][cursors[c] : cursors[c] + take])
                cursors[c] += take
            members = rng.permutation(np.concatenate(parts))
            batches.append(Batch(members, LABELED))

    if unlabeled_idx.size:
        min_size = max(1, min_batch)
        sizes = _batch_sizes(unlabeled_idx.size, batch_size, min_size)
        shuffled = rng.permutation(unlabeled_idx)
        start = 0
        for s in sizes:
            batches.append(Batch(shuffled[start : start + s], UNLABELED))
            start += s

    order = rng.permutation(len(batches))
    return BatchSchedule(tuple(batches[i] for i in order), epoch=epoch, seed=seed)
