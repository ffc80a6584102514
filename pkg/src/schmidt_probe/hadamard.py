"""The family of p transformations H_s = H0 D^s on the controllable subsystem.

H0 is the finite Fourier transform, D the quadratic-phase diagonal; together
with the computational basis the columns of the H_s form p + 1 mutually
unbiased bases in prime dimension.  Entry convention: ``H_s[k, l] =
quadratic_phase(p, s, l) * omega^{-k*l} / sqrt(p)``, fixed by requiring that
projecting outcome k after applying I (x) H_s yields amplitudes
``omega^{-2^{-1} s l^2 - k l} sqrt(lambda_l)`` on the hidden states.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .phases import as_dim, omega_pow, quadratic_phase


@dataclass(frozen=True)
class HadamardFamily:
    """All p transforms, indexed by the quadratic-phase power s."""

    p: int
    matrices: np.ndarray  # shape (p, p, p): matrices[s][k, l]
    fourier: np.ndarray  # H0
    diagonal: np.ndarray  # D


def projection_phases(p: int, s: int, k: int) -> np.ndarray:
    """Unnormalized row k of H_s: the phase attached to hidden index l when
    outcome k is projected under setting s (equals sqrt(p) * H_s[k, :])."""
    q = as_dim(p)
    return np.array(
        [quadratic_phase(q, s, l) * omega_pow(q, -k * l) for l in range(q)], dtype=complex
    )


@lru_cache(maxsize=None)
def phase_tensor(p: int) -> np.ndarray:
    """All projection phases at once, shape (p, p, p) indexed [s, k, l].

    Cached and frozen; this is the workhorse array behind the forward model
    and the solvers."""
    q = as_dim(p)
    t = np.empty((q, q, q), dtype=complex)
    for s in range(q):
        for k in range(q):
            t[s, k] = projection_phases(q, s, k)
    t.setflags(write=False)
    return t


def build_family(p: int) -> HadamardFamily:
    """Construct H_0, ..., H_{p-1}; raises InvalidDimension for non-prime p."""
    q = as_dim(p)
    matrices = np.asarray(phase_tensor(q) / np.sqrt(q))
    diagonal = np.diag([quadratic_phase(q, 1, l) for l in range(q)])
    return HadamardFamily(p=q, matrices=matrices, fourier=matrices[0], diagonal=diagonal)


def unitarity_defect(family: HadamardFamily) -> float:
    """Largest entry of |H_s^dagger H_s - I| over all s."""
    eye = np.eye(family.p)
    return max(
        float(np.abs(h.conj().T @ h - eye).max()) for h in family.matrices
    )


def check_unbiasedness(family: HadamardFamily) -> float:
    """Maximum deviation of p * |<col_i(B), col_j(B')>|^2 from 1 over all pairs
    of distinct bases, the computational basis included."""
    p = family.p
    bases = list(family.matrices) + [np.eye(p, dtype=complex)]
    worst = 0.0
    for i, b in enumerate(bases):
        for b2 in bases[i + 1 :]:
            overlaps = b.conj().T @ b2
            worst = max(worst, float(np.abs(p * np.abs(overlaps) ** 2 - 1.0).max()))
    return worst


def family_to_json_dict(family: HadamardFamily) -> dict:
    """Debug dump of the matrices as nested re/im entry arrays."""
    return {
        "p": family.p,
        "matrices_re": family.matrices.real.tolist(),
        "matrices_im": family.matrices.imag.tolist(),
    }
