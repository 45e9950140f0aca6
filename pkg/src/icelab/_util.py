"""Small shared helpers: RNG coercion and Hermitian linear algebra."""

import numpy as np

#: Relative eigenvalue threshold below which a Hermitian sum is treated as
#: singular (bound reported as unidentifiable instead of inverted).
PD_RTOL = 1e-10


def as_generator(seed):
    """Coerce ``seed`` (int, SeedSequence, Generator or None) to a Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def crandn(rng, *shape):
    """i.i.d. circular complex normal CN(0, 1) draws."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def hermitize(a):
    return (a + a.conj().T) / 2.0


def is_hermitian_pd(a, rtol=PD_RTOL):
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        return False
    if not np.allclose(a, a.conj().T, rtol=0, atol=1e-12 * max(1.0, np.abs(a).max())):
        return False
    w = np.linalg.eigvalsh(hermitize(a))
    return w[0] > rtol * max(w[-1], 0.0) and w[-1] > 0.0


def pd_inverse(a, rtol=PD_RTOL):
    """Invert a Hermitian matrix through its eigendecomposition.

    Returns ``(inv, ok)``; ``ok`` is False when the smallest eigenvalue is
    below ``rtol`` times the largest (the inverse is then meaningless and the
    caller should flag unidentifiability).
    """
    a = hermitize(np.asarray(a, dtype=complex))
    w, v = np.linalg.eigh(a)
    if w[0] <= rtol * max(w[-1], 0.0) or w[-1] <= 0.0:
        return np.full_like(a, np.nan), False
    inv = (v / w) @ v.conj().T
    return hermitize(inv), True


def pd_sqrt(a):
    """Hermitian principal square root (and its inverse) of a PD matrix."""
    a = hermitize(np.asarray(a, dtype=complex))
    w, v = np.linalg.eigh(a)
    if w[0] <= 0.0:
        raise ValueError("matrix is not positive definite")
    root = (v * np.sqrt(w)) @ v.conj().T
    inv_root = (v / np.sqrt(w)) @ v.conj().T
    return hermitize(root), hermitize(inv_root)


def complex_to_pairs(a):
    """Serialize a complex array as nested [re, im] pairs."""
    a = np.asarray(a, dtype=complex)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def pairs_to_complex(pairs):
    arr = np.asarray(pairs, dtype=float)
    return arr[..., 0] + 1j * arr[..., 1]
