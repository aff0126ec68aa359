"""
On-disk cache of resolvent families.

File layout (little-endian):

    8 bytes   magic b"NIDCRES1"
    uint32    state dimension M
    uint32    K (node count minus one)
    uint8     layout flag (1 = per-mode diagonal, 0 = full matrices)
    uint8     memory-free flag
    32 bytes  sha256 content hash
    float64   nodes, K+1 values
    float64   R, row-major
    float64   dsR, row-major

The content hash covers the grid nodes and the sampled A and ζ, so two
specs with identical operators on the same grid share a cache entry.
"""

import hashlib
import logging
import struct
from pathlib import Path
from typing import Optional, Union

import numpy as np

from ..model.spec import ProblemSpec
from .family import OperatorSamples, ResolventGrid, build_from_samples, sample_operators
from .grid import TimeGrid

logger = logging.getLogger(__name__)

MAGIC = b"NIDCRES1"
HEADER = struct.Struct("<8sIIBB32s")


def content_hash(samples: OperatorSamples, grid: TimeGrid) -> str:
    digest = hashlib.sha256()
    digest.update(np.ascontiguousarray(grid.nodes, dtype='<f8').tobytes())
    digest.update(np.ascontiguousarray(samples.a_samples, dtype='<f8').tobytes())
    if samples.kernel_samples is not None:
        digest.update(np.ascontiguousarray(samples.kernel_samples, dtype='<f8').tobytes())
    else:
        digest.update(b"memory-free")
    return digest.hexdigest()


def cache_path(cache_dir: Union[str, Path], hash_hex: str) -> Path:
    return Path(cache_dir) / f"resolvent_{hash_hex[:16]}.bin"


def save_resolvent(res: ResolventGrid, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = HEADER.pack(
        MAGIC,
        res.state_dim,
        res.grid.size - 1,
        1 if res.diagonal else 0,
        1 if res.memory_free else 0,
        bytes.fromhex(res.content_hash) if res.content_hash else bytes(32),
    )
    with open(path, 'wb') as f:
        f.write(header)
        f.write(np.ascontiguousarray(res.grid.nodes, dtype='<f8').tobytes())
        f.write(np.ascontiguousarray(res.R, dtype='<f8').tobytes())
        f.write(np.ascontiguousarray(res.dsR, dtype='<f8').tobytes())
    logger.info(f"💾 Cached resolvent: {path}")
    return path


def load_resolvent(path: Union[str, Path], grid: TimeGrid, expected_hash: str) -> Optional[ResolventGrid]:
    """Read a cached family; None when missing, corrupt or for another hash/grid."""
    path = Path(path)
    if not path.exists():
        return None
    try:
        raw = path.read_bytes()
        magic, dim, K, diagonal, memory_free, digest = HEADER.unpack_from(raw, 0)
        if magic != MAGIC or digest.hex() != expected_hash or K != grid.size - 1:
            logger.warning(f"⚠️  Cache entry {path.name} does not match; rebuilding")
            return None

        offset = HEADER.size
        nodes = np.frombuffer(raw, dtype='<f8', count=K + 1, offset=offset)
        offset += nodes.nbytes
        if not np.array_equal(nodes, grid.nodes):
            logger.warning(f"⚠️  Cache entry {path.name} was built on another grid; rebuilding")
            return None

        shape = (K + 1, K + 1, dim) if diagonal else (K + 1, K + 1, dim, dim)
        count = int(np.prod(shape))
        R = np.frombuffer(raw, dtype='<f8', count=count, offset=offset).reshape(shape).astype(float)
        offset += count * 8
        D = np.frombuffer(raw, dtype='<f8', count=count, offset=offset).reshape(shape).astype(float)
    except (struct.error, ValueError) as e:
        logger.warning(f"⚠️  Unreadable cache entry {path.name}: {e}")
        return None

    R.setflags(write=False)
    D.setflags(write=False)
    logger.info(f"✅ Loaded cached resolvent: {path.name}")
    return ResolventGrid(
        grid=grid,
        R=R,
        dsR=D,
        diagonal=bool(diagonal),
        state_dim=int(dim),
        memory_free=bool(memory_free),
        content_hash=expected_hash,
    )


def load_or_build(
    spec: ProblemSpec,
    grid: TimeGrid,
    cache_dir: Optional[Union[str, Path]] = None,
    cap: float = 1e8,
) -> ResolventGrid:
    """Build the resolvent, reading from / writing to cache_dir when given."""
    samples = sample_operators(spec, grid)
    hash_hex = content_hash(samples, grid)

    if cache_dir is not None:
        cached = load_resolvent(cache_path(cache_dir, hash_hex), grid, hash_hex)
        if cached is not None:
            return cached

    res = build_from_samples(samples, grid, cap=cap, content_hash=hash_hex)
    if cache_dir is not None:
        save_resolvent(res, cache_path(cache_dir, hash_hex))
    return res
