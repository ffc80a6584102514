"""Ground-truth bipartite ensembles: probabilities plus the Gram matrix of the
inaccessible subsystem's states.

Every measurable quantity of the protocol depends only on the probabilities
``lambdas`` and the pairwise inner products ``gram``; explicit state vectors
exist only inside the brute-force oracle (:func:`realize_vectors`).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import RealizationFailure
from .phases import as_dim

PSD_TOL = 1e-10
NORM_TOL = 1e-12
FILE_HERMITICITY_TOL = 1e-9


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class SchmidtEnsemble:
    """A rank-p decomposition: probabilities and the (Hermitian, PSD,
    unit-diagonal) Gram matrix of the unnormalizable subsystem states."""

    p: int
    lambdas: np.ndarray
    gram: np.ndarray
    real_flag: bool

    def __post_init__(self) -> None:
        object.__setattr__(self, "p", as_dim(self.p))
        object.__setattr__(self, "lambdas", _freeze(np.asarray(self.lambdas, dtype=float)))
        object.__setattr__(self, "gram", _freeze(np.asarray(self.gram, dtype=complex)))

    @classmethod
    def from_parts(cls, p: int, lambdas, gram) -> "SchmidtEnsemble":
        """Build an ensemble, deriving ``real_flag`` from the Gram entries."""
        gram = np.asarray(gram, dtype=complex)
        return cls(p=p, lambdas=lambdas, gram=gram, real_flag=bool(np.all(gram.imag == 0.0)))


@dataclass(frozen=True)
class VectorRealization:
    """Explicit unit vectors whose pairwise inner products reproduce a Gram
    matrix; rows are the vectors, padded to ``ambient_dim`` entries."""

    ambient_dim: int
    vectors: np.ndarray

    def gram(self) -> np.ndarray:
        """Inner-product matrix <v_i|v_j> of the realized vectors."""
        return self.vectors.conj() @ self.vectors.T


def validate(e: SchmidtEnsemble) -> list[str]:
    """Return a list of violated invariants (empty when the ensemble is valid).

    Each entry names the violation and its numeric magnitude; nothing raises.
    """
    problems: list[str] = []
    lam, g = e.lambdas, e.gram
    if lam.shape != (e.p,):
        problems.append(f"lambdas has shape {lam.shape}, expected ({e.p},)")
        return problems
    if g.shape != (e.p, e.p):
        problems.append(f"gram has shape {g.shape}, expected ({e.p}, {e.p})")
        return problems

    if lam.min() < 0.0:
        problems.append(f"negative probability: min lambda = {lam.min():.3e}")
    norm_defect = abs(lam.sum() - 1.0)
    if norm_defect > NORM_TOL:
        problems.append(f"normalization violation of {norm_defect:.3e}")
    herm_defect = np.abs(g - g.conj().T).max()
    if herm_defect > NORM_TOL:
        problems.append(f"gram not Hermitian, defect {herm_defect:.3e}")
    diag_defect = np.abs(np.diag(g) - 1.0).max()
    if diag_defect > NORM_TOL:
        problems.append(f"gram diagonal deviates from 1 by {diag_defect:.3e}")
    min_eig = float(np.linalg.eigvalsh((g + g.conj().T) / 2.0).min())
    if min_eig < -PSD_TOL:
        problems.append(f"gram not PSD: smallest eigenvalue {min_eig:.3e}")
    bound_defect = np.abs(g).max() - 1.0
    if bound_defect > NORM_TOL:
        problems.append(f"gram entry exceeds unit modulus by {bound_defect:.3e}")
    if e.real_flag and np.abs(g.imag).max() > 0.0:
        problems.append(
            f"real_flag set but gram has imaginary parts up to {np.abs(g.imag).max():.3e}"
        )
    return problems


def x_matrix(e: SchmidtEnsemble) -> np.ndarray:
    """Probability-weighted inner products ``x[l',l] = gram[l',l] *
    sqrt(lambda_l' * lambda_l)`` with a zero diagonal (the diagonal carries the
    probabilities themselves and is handled separately)."""
    w = np.sqrt(e.lambdas)
    x = e.gram * np.outer(w, w)
    np.fill_diagonal(x, 0.0)
    return x


def random_ensemble(p: int, real_flag: bool, seed: int) -> SchmidtEnsemble:
    """Sample a valid ensemble: flat-simplex probabilities and the Gram matrix
    of p random unit vectors (real vectors when ``real_flag``)."""
    q = as_dim(p)
    rng = np.random.default_rng(seed)
    lambdas = rng.dirichlet(np.ones(q))
    v = rng.standard_normal((q, q))
    if not real_flag:
        v = v + 1j * rng.standard_normal((q, q))
    v = v / np.linalg.norm(v, axis=1, keepdims=True)
    gram = np.asarray(v.conj() @ v.T, dtype=complex)
    gram = (gram + gram.conj().T) / 2.0
    np.fill_diagonal(gram, 1.0)
    if real_flag:
        gram = gram.real.astype(complex)
    return SchmidtEnsemble(p=q, lambdas=lambdas, gram=gram, real_flag=real_flag)


def realize_vectors(e: SchmidtEnsemble, ambient_dim: int) -> VectorRealization:
    """Factor the Gram matrix into explicit vectors (rows), eigenvalues below
    1e-12 clamped to zero.  Raises :class:`RealizationFailure` when the Gram
    matrix is not PSD beyond tolerance."""
    if ambient_dim < e.p:
        raise ValueError(f"ambient_dim must be >= p = {e.p}, got {ambient_dim}")
    g = (e.gram + e.gram.conj().T) / 2.0
    eigvals, eigvecs = np.linalg.eigh(g)
    if eigvals.min() < -PSD_TOL * max(1.0, eigvals.max()):
        raise RealizationFailure(
            f"gram has eigenvalue {eigvals.min():.3e}; not PSD beyond tolerance"
        )
    eigvals = np.where(eigvals < 1e-12, 0.0, eigvals)
    # Columns of W = sqrt(D) U^dagger satisfy <w_i|w_j> = gram[i, j].
    w = np.sqrt(eigvals)[:, None] * eigvecs.conj().T
    vectors = np.zeros((e.p, ambient_dim), dtype=complex)
    vectors[:, : e.p] = w.T
    return VectorRealization(ambient_dim=ambient_dim, vectors=vectors)


def save_ensemble(e: SchmidtEnsemble, path: str | Path) -> None:
    """Write the state file: probabilities plus full re/im Gram matrices."""
    payload = {
        "p": e.p,
        "real": e.real_flag,
        "lambdas": e.lambdas.tolist(),
        "gram_re": e.gram.real.tolist(),
        "gram_im": e.gram.imag.tolist(),
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def load_ensemble(path: str | Path) -> SchmidtEnsemble:
    """Read a state file, rejecting Gram Hermiticity defects above 1e-9."""
    payload = json.loads(Path(path).read_text())
    gram = np.asarray(payload["gram_re"], dtype=float) + 1j * np.asarray(
        payload["gram_im"], dtype=float
    )
    defect = np.abs(gram - gram.conj().T).max()
    if defect > FILE_HERMITICITY_TOL:
        raise ValueError(f"state file Gram matrix has Hermiticity defect {defect:.3e}")
    return SchmidtEnsemble(
        p=int(payload["p"]),
        lambdas=np.asarray(payload["lambdas"], dtype=float),
        gram=gram,
        real_flag=bool(payload["real"]),
    )
