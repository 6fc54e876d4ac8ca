"""Seeded supremum search shared by the constant estimators.

Samples are drawn in fixed-size chunks, each from its own Philox stream keyed by
``(seed, chunk_index)``.  The result therefore does not depend on how many worker
threads evaluate the chunks.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

CHUNK = 4096


def chunk_rng(seed, index):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(index)])))


def sampled_sup(draw, score, samples, seed, workers=1):
    """Maximize ``score`` over ``samples`` draws.

    ``draw(rng, count)`` returns a tuple of batched arrays and ``score(*batch)`` the
    ratios.  Returns ``(best, args)`` where ``args`` is the maximizing tuple.  Ties go
    to the lowest global sample index.
    """
    sizes = [CHUNK] * (samples // CHUNK)
    if samples % CHUNK:
        sizes.append(samples % CHUNK)

    def run(i):
        batch = draw(chunk_rng(seed, i), sizes[i])
        vals = np.asarray(score(*batch), dtype=float)
        k = int(np.argmax(vals))
        return float(vals[k]), tuple(b[k] for b in batch)

    idx = range(len(sizes))
    if workers and workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(run, idx))
    else:
        results = [run(i) for i in idx]
    best_val, best_args = results[0]
    for val, args in results[1:]:
        if val > best_val:
            best_val, best_args = val, args
    return best_val, best_args


def hill_climb(score, args, steps=100, step=0.1, shrink=0.7):
    """Coordinate-wise ascent from ``args`` with a shrinking step.

    Each step tries +/- the step size along every real coordinate of every argument,
    keeps the best improvement, and shrinks the step when nothing improves.
    """
    shapes = [np.shape(a) for a in args]
    sizes = [int(np.prod(s)) for s in shapes]
    z = np.concatenate([np.ravel(a) for a in args])
    dim = z.size

    def unpack(zz):
        out, pos = [], 0
        for shp, sz in zip(shapes, sizes):
            block = zz[..., pos:pos + sz].reshape(zz.shape[:-1] + shp)
            nrm = np.sqrt(np.sum(block.reshape(zz.shape[:-1] + (sz,)) ** 2, axis=-1))
            nrm = np.where(nrm > 0, nrm, 1.0)
            out.append(block / nrm.reshape(nrm.shape + (1,) * len(shp)))
            pos += sz
        return out

    best = float(np.asarray(score(*[u[None] for u in unpack(z)]))[0])
    h = step
    eye = np.eye(dim)
    for _ in range(steps):
        cand = np.concatenate([z + h * eye, z - h * eye])
        vals = np.asarray(score(*unpack(cand)), dtype=float)
        k = int(np.argmax(vals))
        if vals[k] > best:
            best = float(vals[k])
            z = np.concatenate([np.ravel(u) for u in unpack(cand[k])])
        else:
            h *= shrink
    return best, tuple(unpack(z))
