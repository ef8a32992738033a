"""Two-view dataset construction, labeled-subset selection, and persistence.

A PairedDataset is one split (train or test) of aligned two-view data laid
out one sample per column, with per-sample integer labels (-1 where unknown)
and a boolean mask marking the labeled subset visible to training. A
DatasetBundle groups the train split, an optional test split, and a manifest.

The on-disk container is versioned and checksummed:

    magic "MVDS" | u32 version | u32 manifest length | manifest JSON (UTF-8)
    per split, in manifest order:
        view1 as little-endian float32 (C order, d1 x n)
        view2 as little-endian float32 (d2 x n)
        labels as little-endian int32 (n)
        labeled mask as uint8 (n)
    sha256 digest of all preceding bytes

Matrices are stored as 32-bit floats; generators therefore produce float32
views so that save -> load round-trips are bit exact.
"""

import hashlib
import json
import os
import struct
import tempfile
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy import ndimage

from .errors import ConfigError, DatasetFormatError, ShapeError

MAGIC = b"MVDS"
FORMAT_VERSION = 1

IDX_IMAGES_MAGIC = 2051  # 0x00000803: unsigned-byte rank-3 image tensor
IDX_LABELS_MAGIC = 2049  # 0x00000801: unsigned-byte rank-1 label vector


@dataclass
class PairedDataset:
    """One split of aligned two-view samples (one sample per column)."""

    view1: np.ndarray
    view2: np.ndarray
    labels: np.ndarray  # int32, -1 where the label is unknown
    labeled_mask: np.ndarray  # bool; True marks labels visible to training
    split: str = "train"
    class_count: int = 0
    name: str = ""

    @property
    def n(self):
        return self.view1.shape[1]

    @property
    def labeled_count(self):
        return int(np.count_nonzero(self.labeled_mask))

    def validate(self):
        if self.view1.ndim != 2 or self.view2.ndim != 2:
            raise ShapeError("views must be 2-D matrices (features x samples)")
        if self.view1.shape[1] != self.view2.shape[1]:
            raise ShapeError(
                f"views disagree on sample count: {self.view1.shape[1]} vs "
                f"{self.view2.shape[1]}"
            )
        n = self.view1.shape[1]
        if self.labels.shape != (n,) or self.labeled_mask.shape != (n,):
            raise ShapeError("labels and labeled_mask must align with samples")
        if np.any(self.labels[self.labeled_mask] < 0):
            raise DatasetFormatError("labeled_mask marks samples with unknown labels")
        known = self.labels[self.labels >= 0]
        if known.size and self.class_count <= int(known.max()):
            raise DatasetFormatError(
                f"class_count {self.class_count} too small for label {int(known.max())}"
            )
        return self

    def subset(self, indices):
        indices = np.asarray(indices)
        return replace(
            self,
            view1=self.view1[:, indices],
            view2=self.view2[:, indices],
            labels=self.labels[indices],
            labeled_mask=self.labeled_mask[indices],
        )

    def histogram(self):
        """Counts of known labels per class; unknown labels are excluded."""
        known = self.labels[self.labels >= 0]
        return np.bincount(known, minlength=self.class_count).astype(int)


@dataclass
class DatasetManifest:
    name: str
    class_count: int
    seed: int
    params: dict
    splits: list  # one dict per split: split, n, d1, d2, histogram, unlabeled
    format_version: int = FORMAT_VERSION

    def to_dict(self):
        return {
            "format_version": self.format_version,
            "name": self.name,
            "class_count": self.class_count,
            "seed": self.seed,
            "params": self.params,
            "splits": self.splits,
        }

    @classmethod
    def from_dict(cls, d):
        try:
            return cls(
                name=d["name"],
                class_count=int(d["class_count"]),
                seed=int(d["seed"]),
                params=dict(d["params"]),
                splits=list(d["splits"]),
                format_version=int(d["format_version"]),
            )
        except KeyError as missing:
            raise DatasetFormatError(f"manifest is missing field {missing}") from None

    def summary(self):
        lines = [f"dataset {self.name!r}: {self.class_count} classes, seed {self.seed}"]
        for s in self.splits:
            lines.append(
                f"  {s['split']}: n={s['n']} dims={s['d1']}+{s['d2']} "
                f"labeled={sum(s['histogram'])} unlabeled={s['unlabeled']}"
            )
        return "\n".join(lines)


@dataclass
class DatasetBundle:
    train: PairedDataset
    test: PairedDataset | None
    manifest: DatasetManifest

    def splits(self):
        out = [self.train]
        if self.test is not None:
            out.append(self.test)
        return out


def build_manifest(name, seed, params, splits):
    class_count = max(s.class_count for s in splits)
    entries = []
    for s in splits:
        entries.append(
            {
                "split": s.split,
                "n": int(s.n),
                "d1": int(s.view1.shape[0]),
                "d2": int(s.view2.shape[0]),
                "histogram": s.histogram().tolist(),
                "unlabeled": int(np.count_nonzero(s.labels < 0)),
            }
        )
    return DatasetManifest(
        name=name, class_count=class_count, seed=seed, params=params, splits=entries
    )


def bundle(name, seed, params, train, test=None):
    splits = [train] + ([test] if test is not None else [])
    for s in splits:
        s.validate()
    return DatasetBundle(train, test, build_manifest(name, seed, params, splits))


# ---------------------------------------------------------------------------
# IDX ingestion


def load_idx(path):
    """Parse an IDX file into an array.

    Image files (magic 2051) become (n, rows, cols) float64 arrays scaled to
    [0, 1]; label files (magic 2049) become (n,) int32 arrays. Both gzipped
    and raw files are accepted.
    """
    with open(path, "rb") as f:
        head = f.read(2)
        f.seek(0)
        if head == b"\x1f\x8b":
            import gzip

            with gzip.open(f) as g:
                buf = g.read()
        else:
            buf = f.read()

    def need(count, offset, what):
        if len(buf) < offset + count:
            raise DatasetFormatError(
                f"{path}: truncated while reading {what}: expected {count} bytes at "
                f"offset {offset}, only {len(buf) - offset} available"
            )

    need(4, 0, "magic number")
    (magic,) = struct.unpack(">I", buf[0:4])
    if magic == IDX_IMAGES_MAGIC:
        need(12, 4, "image dimensions")
        n, rows, cols = struct.unpack(">III", buf[4:16])
        need(n * rows * cols, 16, f"{n}x{rows}x{cols} image payload")
        data = np.frombuffer(buf, dtype=np.uint8, count=n * rows * cols, offset=16)
        return data.reshape(n, rows, cols).astype(np.float64) / 255.0
    if magic == IDX_LABELS_MAGIC:
        need(4, 4, "label count")
        (n,) = struct.unpack(">I", buf[4:8])
        need(n, 8, f"{n}-byte label payload")
        data = np.frombuffer(buf, dtype=np.uint8, count=n, offset=8)
        return data.astype(np.int32)
    raise DatasetFormatError(
        f"{path}: bad magic {magic} at byte 0 (expected {IDX_IMAGES_MAGIC} for "
        f"images or {IDX_LABELS_MAGIC} for labels)"
    )


# ---------------------------------------------------------------------------
# Generators


def gen_noisy_mnist(images, labels, seed, split="train", name="noisy-mnist",
                    max_angle_deg=90.0):
    """Build the two-view noisy-digits split from one set of images.

    View 1 rotates every image about its center by an angle drawn uniformly
    from [-max_angle_deg, +max_angle_deg] (bilinear interpolation, zero
    fill). View 2 picks a random different image of the same class and adds
    per-pixel uniform [0, 1] noise, clamping the result back into [0, 1].
    Pairing never crosses the split boundary because only this split's
    images are offered.
    """
    images = np.asarray(images)
    labels = np.asarray(labels).astype(np.int32)
    if images.ndim != 3 or images.shape[0] != labels.shape[0]:
        raise ShapeError(
            f"images of shape {images.shape} do not align with {labels.shape[0]} labels"
        )
    n, h, w = images.shape
    d = h * w
    rng = np.random.default_rng((int(seed) & 0xFFFFFFFF, 0xD161))

    angles = rng.uniform(-max_angle_deg, max_angle_deg, size=n)
    view1 = np.empty((n, d), dtype=np.float32)
    for i in range(n):
        rotated = ndimage.rotate(
            images[i].astype(np.float32),
            angles[i],
            reshape=False,
            order=1,
            mode="constant",
            cval=0.0,
        )
        view1[i] = rotated.reshape(-1)

    partner = np.empty(n, dtype=np.int64)
    for label in np.unique(labels):
        idx = np.flatnonzero(labels == label)
        if idx.size == 1:
            warnings.warn(
                f"class {label} has a single image; pairing it with itself",
                RuntimeWarning,
                stacklevel=2,
            )
            partner[idx] = idx
            continue
        draws = rng.integers(0, idx.size - 1, size=idx.size)
        draws += draws >= np.arange(idx.size)  # never pick the sample itself
        partner[idx] = idx[draws]

    view2 = np.empty((n, d), dtype=np.float32)
    chunk = 8192
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        noise = rng.random(size=(stop - start, d), dtype=np.float32)
        base = images[partner[start:stop]].reshape(stop - start, d).astype(np.float32)
        view2[start:stop] = np.clip(base + noise, 0.0, 1.0)

    return PairedDataset(
        view1=np.ascontiguousarray(view1.T),
        view2=np.ascontiguousarray(view2.T),
        labels=labels,
        labeled_mask=np.ones(n, dtype=bool),
        split=split,
        class_count=int(labels.max()) + 1,
        name=name,
    ).validate()


def gen_synth_gaussian(
    class_count,
    d1,
    d2,
    n,
    separation=3.0,
    shared_dim=6,
    noise=1.0,
    seed=0,
    n_test=0,
    latent_scale=2.0,
    class_jitter=0.5,
    name="synth-gaussian",
):
    """Synthetic correlated two-view classification task.

    Each sample owns a shared source vector: ``shared_dim`` strong latent
    coordinates (scale ``latent_scale``) that carry no class information plus
    ``class_count`` coordinates displaced by ``separation`` according to the
    class. Both views are independent orthonormal linear maps of the same
    source plus isotropic view noise, so the class-relevant structure is
    cross-view correlated but not the strongest correlated direction.
    """
    m = shared_dim + class_count
    if m > min(d1, d2):
        raise ConfigError(
            f"shared_dim + class_count = {m} exceeds min view dimension {min(d1, d2)}"
        )
    if class_count < 2:
        raise ConfigError("class_count must be at least 2")
    total = n + n_test
    rng = np.random.default_rng((int(seed) & 0xFFFFFFFF, 0x5EED))

    labels = np.arange(total, dtype=np.int32) % class_count
    labels = rng.permutation(labels)
    source = np.empty((m, total))
    source[:shared_dim] = latent_scale * rng.standard_normal((shared_dim, total))
    class_block = class_jitter * rng.standard_normal((class_count, total))
    class_block[labels, np.arange(total)] += separation
    source[shared_dim:] = class_block

    def make_view(d):
        basis, _ = np.linalg.qr(rng.standard_normal((d, m)))
        return (basis @ source + noise * rng.standard_normal((d, total))).astype(
            np.float32
        )

    x1 = make_view(d1)
    x2 = make_view(d2)

    def split_of(sl, tag):
        return PairedDataset(
            view1=np.ascontiguousarray(x1[:, sl]),
            view2=np.ascontiguousarray(x2[:, sl]),
            labels=labels[sl].copy(),
            labeled_mask=np.ones(len(range(*sl.indices(total))), dtype=bool),
            split=tag,
            class_count=class_count,
            name=name,
        ).validate()

    train = split_of(slice(0, n), "train")
    test = split_of(slice(n, total), "test") if n_test else None
    params = {
        "class_count": class_count,
        "d1": d1,
        "d2": d2,
        "n": n,
        "n_test": n_test,
        "separation": separation,
        "shared_dim": shared_dim,
        "noise": noise,
        "latent_scale": latent_scale,
        "class_jitter": class_jitter,
    }
    return bundle(name, seed, params, train, test)


def select_labeled(data, L, seed):
    """Keep exactly L labels visible, class-proportionally (largest remainder).

    Returns a copy of the split whose labeled_mask has exactly L True entries;
    ground-truth labels are retained for evaluation but hidden from training.
    """
    data.validate()
    if np.any(data.labels < 0):
        raise ConfigError("select_labeled requires ground-truth labels for all samples")
    counts = data.histogram()
    k = np.count_nonzero(counts)
    if L < k:
        raise ConfigError(f"L={L} is smaller than the {k} classes present")
    if L > data.n:
        raise ConfigError(f"L={L} exceeds the {data.n} samples of the split")

    exact = L * counts / counts.sum()
    quota = np.floor(exact).astype(int)
    spare = L - quota.sum()
    order = np.argsort(-(exact - quota), kind="stable")
    for c in order[:spare]:
        quota[c] += 1

    rng = np.random.default_rng((int(seed) & 0xFFFFFFFF, 0x1AB31))
    mask = np.zeros(data.n, dtype=bool)
    for c in range(counts.shape[0]):
        if quota[c] == 0:
            continue
        idx = np.flatnonzero(data.labels == c)
        mask[rng.permutation(idx)[: quota[c]]] = True
    return replace(data, labeled_mask=mask)


# ---------------------------------------------------------------------------
# Persistence


def _atomic_write(path, write_body):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            write_body(f)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_dataset(path, data_bundle):
    """Write a DatasetBundle to the versioned container (atomic)."""
    splits = data_bundle.splits()
    for s in splits:
        s.validate()
    manifest_bytes = json.dumps(data_bundle.manifest.to_dict()).encode("utf-8")

    digest = hashlib.sha256()

    def emit(f, chunk):
        digest.update(chunk)
        f.write(chunk)

    def write_body(f):
        emit(f, MAGIC)
        emit(f, struct.pack("<I", FORMAT_VERSION))
        emit(f, struct.pack("<I", len(manifest_bytes)))
        emit(f, manifest_bytes)
        for s in splits:
            emit(f, np.ascontiguousarray(s.view1, dtype="<f4").tobytes())
            emit(f, np.ascontiguousarray(s.view2, dtype="<f4").tobytes())
            emit(f, np.ascontiguousarray(s.labels, dtype="<i4").tobytes())
            emit(f, np.ascontiguousarray(s.labeled_mask, dtype=np.uint8).tobytes())
        f.write(digest.digest())

    _atomic_write(path, write_body)


def load_dataset(path):
    """Read and validate a DatasetBundle from the container format."""
    with open(path, "rb") as f:
        buf = f.read()
    if len(buf) < len(MAGIC) + 8 + 32:
        raise DatasetFormatError(f"{path}: file too short to be a dataset container")
    if buf[:4] != MAGIC:
        raise DatasetFormatError(f"{path}: bad magic {buf[:4]!r}, expected {MAGIC!r}")
    (version,) = struct.unpack("<I", buf[4:8])
    if version != FORMAT_VERSION:
        raise DatasetFormatError(
            f"{path}: unsupported container version {version} (this build reads "
            f"{FORMAT_VERSION})"
        )
    payload, stored_digest = buf[:-32], buf[-32:]
    if hashlib.sha256(payload).digest() != stored_digest:
        raise DatasetFormatError(f"{path}: checksum mismatch; file is corrupted")

    (manifest_len,) = struct.unpack("<I", buf[8:12])
    offset = 12
    try:
        manifest = DatasetManifest.from_dict(
            json.loads(buf[offset : offset + manifest_len].decode("utf-8"))
        )
    except (ValueError, UnicodeDecodeError) as exc:
        raise DatasetFormatError(f"{path}: unreadable manifest: {exc}") from exc
    offset += manifest_len

    splits = {}
    for entry in manifest.splits:
        n, dd1, dd2 = int(entry["n"]), int(entry["d1"]), int(entry["d2"])

        def take(count, dtype, shape, what):
            nonlocal offset
            nbytes = count * np.dtype(dtype).itemsize
            if offset + nbytes > len(payload):
                raise DatasetFormatError(
                    f"{path}: truncated {what} for split {entry['split']!r}"
                )
            arr = np.frombuffer(payload, dtype=dtype, count=count, offset=offset)
            offset += nbytes
            return arr.reshape(shape)

        view1 = take(dd1 * n, "<f4", (dd1, n), "view1")
        view2 = take(dd2 * n, "<f4", (dd2, n), "view2")
        labels = take(n, "<i4", (n,), "labels")
        mask = take(n, np.uint8, (n,), "labeled mask").astype(bool)
        split = PairedDataset(
            view1=np.ascontiguousarray(view1).astype(np.float32),
            view2=np.ascontiguousarray(view2).astype(np.float32),
            labels=np.ascontiguousarray(labels).astype(np.int32),
            labeled_mask=mask,
            split=entry["split"],
            class_count=manifest.class_count,
            name=manifest.name,
        ).validate()
        if split.histogram().tolist() != list(entry["histogram"]):
            raise DatasetFormatError(
                f"{path}: split {entry['split']!r} label histogram does not match "
                "the manifest"
            )
        splits[entry["split"]] = split

    if "train" not in splits:
        raise DatasetFormatError(f"{path}: container has no train split")
    return DatasetBundle(splits["train"], splits.get("test"), manifest)
