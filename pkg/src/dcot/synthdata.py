"""Seeded synthetic tri-view dataset with controllable correspondence noise.

Each item is a latent concept rendered into a visual, a source-language and a
target-language feature vector. Noise is injected by switching the target rows
of a random subset of items along a derangement, so every switched item ends up
with another item's target features.
"""
import io
import json
import struct
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import InvalidBatchSize, InvalidSpec
from .numerics import make_rng

DATASET_MAGIC = b"DCOTSYN\0"
DATASET_VERSION = 1


@dataclass(frozen=True)
class SyntheticDatasetSpec:
    n_items: int = 2000
    latent_dim: int = 16
    view_dims: tuple = (48, 48, 48)
    view_noise_std: tuple = (0.1, 0.1, 0.1)
    mt_noise_std: float = 0.2
    signal_std: float = 0.175
    target_shift: float = 0.3
    noise_ratio: float = 0.0
    seed: int = 42

    def __post_init__(self):
        object.__setattr__(self, "view_dims", tuple(int(d) for d in self.view_dims))
        noise = self.view_noise_std
        if np.isscalar(noise):
            noise = (noise,) * 3
        object.__setattr__(self, "view_noise_std", tuple(float(x) for x in noise))
        if self.n_items < 2:
            raise InvalidSpec(f"n_items must be >= 2, got {self.n_items}")
        if self.latent_dim < 1 or len(self.view_dims) != 3 or min(self.view_dims) < 1:
            raise InvalidSpec("latent_dim and the three view dims must be >= 1")
        if len(self.view_noise_std) != 3 or min(self.view_noise_std) < 0:
            raise InvalidSpec("view_noise_std needs three non-negative values")
        if self.mt_noise_std < 0 or self.target_shift < 0 or self.signal_std <= 0:
            raise InvalidSpec("noise scales must be non-negative")
        if not 0.0 <= self.noise_ratio <= 1.0:
            raise InvalidSpec(f"noise_ratio must lie in [0, 1], got {self.noise_ratio}")
        if self.n_noisy == 1:
            raise InvalidSpec("a single switched item cannot be deranged; "
                              "round(noise_ratio * n_items) must be 0 or >= 2")

    @property
    def n_noisy(self):
        return int(round(self.noise_ratio * self.n_items))

    def to_dict(self):
        d = asdict(self)
        d["view_dims"] = list(self.view_dims)
        d["view_noise_std"] = list(self.view_noise_std)
        return d


@dataclass(eq=False)
class SyntheticDataset:
    spec: SyntheticDatasetSpec
    v_feat: np.ndarray
    s_feat: np.ndarray
    t_feat: np.ndarray
    noisy_mask: np.ndarray
    permutation: np.ndarray  # t_feat[i] is the clean target row of item permutation[i]
    latent: np.ndarray = field(default=None, repr=False)

    def __len__(self):
        return self.v_feat.shape[0]

    def clean_target(self):
        """Target features with the switching undone."""
        t = np.empty_like(self.t_feat)
        t[self.permutation] = self.t_feat
        return t

    def equals(self, other):
        return (self.spec == other.spec
                and all(np.array_equal(getattr(self, k), getattr(other, k))
                        for k in ("v_feat", "s_feat", "t_feat", "noisy_mask", "permutation")))


def random_derangement(n, rng):
    """Rejection-sample permutations of range(n) until none has a fixed point."""
    if n == 1:
        raise InvalidSpec("no derangement of a single element")
    idx = np.arange(n)
    while True:
        perm = rng.permutation(n)
        if not np.any(perm == idx):
            return perm


def generate_dataset(spec):
    """Render every view from shared latents, then switch target rows of a seeded subset.

    The target-language map is the source-language map plus a ``target_shift``
    scaled random perturbation (a translation of the same caption), and target
    rows get extra ``mt_noise_std`` Gaussian noise.
    """
    rng = make_rng(spec.seed)
    N, L = spec.n_items, spec.latent_dim
    dv, ds, dt = spec.view_dims
    Z = rng.standard_normal((N, L))
    scale = spec.signal_std / np.sqrt(L)
    A_v = rng.standard_normal((L, dv)) * scale
    A_s = rng.standard_normal((L, ds)) * scale
    if dt == ds:
        A_t = A_s + spec.target_shift * rng.standard_normal((L, dt)) * scale
    else:
        A_t = rng.standard_normal((L, dt)) * scale
    nv, ns, nt = spec.view_noise_std
    V = Z @ A_v + nv * rng.standard_normal((N, dv))
    S = Z @ A_s + ns * rng.standard_normal((N, ds))
    T = Z @ A_t + nt * rng.standard_normal((N, dt)) + spec.mt_noise_std * rng.standard_normal((N, dt))

    perm = np.arange(N)
    mask = np.zeros(N, dtype=bool)
    k = spec.n_noisy
    if k:
        chosen = np.sort(rng.choice(N, size=k, replace=False))
        perm[chosen] = chosen[random_derangement(k, rng)]
        mask[chosen] = True
    return SyntheticDataset(spec, V, S, T[perm], mask, perm, Z)


def split_indices(n_items, test_fraction=0.2, seed=0):
    """Seeded disjoint (train, test) index arrays, both sorted."""
    order = make_rng((seed, 7919)).permutation(n_items)
    n_test = int(round(test_fraction * n_items))
    return np.sort(order[n_test:]), np.sort(order[:n_test])


def batches(indices, M, shuffle_seed, epoch):
    """Shuffle ``indices`` (or ``range(indices)``) for this epoch and chunk into batches of M.

    A final chunk shorter than 2 is dropped.
    """
    idx = np.arange(indices) if np.isscalar(indices) else np.asarray(indices)
    if not 2 <= M <= len(idx):
        raise InvalidBatchSize(f"batch size {M} must lie in [2, {len(idx)}]")
    order = idx[make_rng((shuffle_seed, epoch)).permutation(len(idx))]
    out = [order[i:i + M] for i in range(0, len(order), M)]
    if len(out[-1]) < 2:
        out.pop()
    return out


# -- serialization --------------------------------------------------------
#
# Layout: magic "DCOTSYN\0", u32 version, u32 header length, UTF-8 JSON header
# ({"spec": {...}, "shapes": {...}}), then little-endian arrays in order
# v_feat, s_feat, t_feat (f64, row-major), permutation (i64), noisy_mask (u8).

_ARRAYS = (("v_feat", "<f8"), ("s_feat", "<f8"), ("t_feat", "<f8"),
           ("permutation", "<i8"), ("noisy_mask", "u1"))


def save_dataset(ds, path):
    header = json.dumps({
        "spec": ds.spec.to_dict(),
        "shapes": {name: list(getattr(ds, name).shape) for name, _ in _ARRAYS},
    }, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(DATASET_MAGIC + struct.pack("<II", DATASET_VERSION, len(header)) + header)
        for name, dtype in _ARRAYS:
            fh.write(np.ascontiguousarray(getattr(ds, name), dtype=dtype).tobytes())


def load_dataset(path):
    with open(path, "rb") as fh:
        buf = io.BytesIO(fh.read())
    if buf.read(8) != DATASET_MAGIC:
        raise InvalidSpec(f"{path} is not a dataset file")
    version, hlen = struct.unpack("<II", buf.read(8))
    if version != DATASET_VERSION:
        raise InvalidSpec(f"unsupported dataset version {version}")
    header = json.loads(buf.read(hlen))
    arrays = {}
    for name, dtype in _ARRAYS:
        shape = tuple(header["shapes"][name])
        count = int(np.prod(shape))
        raw = buf.read(count * np.dtype(dtype).itemsize)
        arrays[name] = np.frombuffer(raw, dtype=dtype, count=count).reshape(shape)
    spec = SyntheticDatasetSpec(**header["spec"])
    return SyntheticDataset(
        spec,
        arrays["v_feat"].astype(np.float64),
        arrays["s_feat"].astype(np.float64),
        arrays["t_feat"].astype(np.float64),
        arrays["noisy_mask"].astype(bool),
        arrays["permutation"].astype(np.int64),
    )
