"""Forward simulation of the interference protocol.

Measured quantities: after applying the transform with setting s and
projecting outcome k, the surviving (normalized) hidden-subsystem state is
compared against the s = 0, k = 0 reference, giving the complex overlap table
``a[s][k]``.  Two independent routes compute it: the closed bilinear formula
in (lambdas, x) and a literal tensor-product oracle on explicit vectors.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .ensemble import SchmidtEnsemble, realize_vectors, x_matrix
from .errors import DegenerateProjection
from .hadamard import build_family, phase_tensor
from .phases import as_dim

DEGENERATE_NORM_TOL = 1e-12

SOURCE_FORMULA = "gram-formula"
SOURCE_ORACLE = "vector-oracle"


@dataclass(frozen=True)
class MeasurementRecord:
    """Overlap table ``a[s][k]`` with noise metadata."""

    p: int
    a: np.ndarray  # shape (p, p), row = setting s, column = outcome k
    noise_sigma: float = 0.0
    seed: int | None = None
    source: str = SOURCE_FORMULA

    def __post_init__(self) -> None:
        a = np.array(self.a, dtype=complex)
        a.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "p", as_dim(self.p))


def bilinear_tables(p: int, lambdas: np.ndarray, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Unnormalized overlap numerators and squared projection norms for every
    (s, k), straight from the parameters.

    Returns ``(num, n)`` with ``num[s, k] = sum_l phase[s,k,l] * y_l`` where
    ``y_l = lambda_l + sum_{l' != l} x[l', l]``, and ``n[s, k]`` the real
    bilinear form of diag(lambdas) + x in the same phases.
    """
    c = phase_tensor(p)
    m = np.diag(np.asarray(lambdas, dtype=complex)) + np.asarray(x, dtype=complex)
    y = np.asarray(lambdas, dtype=complex) + np.asarray(x, dtype=complex).sum(axis=0)
    num = np.einsum("skl,l->sk", c, y)
    n = np.einsum("skl,lm,skm->sk", c.conj(), m, c).real
    return num, n


def normalization_table(e: SchmidtEnsemble) -> np.ndarray:
    """All squared projection norms N[s][k]; each row sums to p."""
    _, n = bilinear_tables(e.p, e.lambdas, x_matrix(e))
    return n


def normalization_factor(e: SchmidtEnsemble, k: int, s: int) -> float:
    """Squared norm of the unnormalized projected state for outcome k under
    setting s; real and nonnegative for any valid ensemble."""
    return float(normalization_table(e)[s, k])


def outcome_probability(e: SchmidtEnsemble, k: int, s: int) -> float:
    """Probability of outcome k under setting s, i.e. N_ks / p."""
    return normalization_factor(e, k, s) / e.p


def amplitude_table(p: int, lambdas: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Full overlap table from raw parameters; a[0][0] = 1 identically.

    Raises :class:`DegenerateProjection` when any projection norm (or the
    reference norm) vanishes, since the overlap is undefined there.
    """
    num, n = bilinear_tables(p, lambdas, x)
    n00 = n[0, 0]
    if n00 <= DEGENERATE_NORM_TOL:
        raise DegenerateProjection("reference projection (k=0, s=0) has zero norm")
    bad = np.argwhere(n <= DEGENERATE_NORM_TOL)
    if bad.size:
        s, k = bad[0]
        raise DegenerateProjection(f"projection norm vanishes at (k={k}, s={s})")
    a = num / np.sqrt(n00 * n)
    a[0, 0] = 1.0
    return a


def compute_a(e: SchmidtEnsemble, k: int, s: int) -> complex:
    """Overlap of the (s, k) projected state with the reference state."""
    return complex(amplitude_table(e.p, e.lambdas, x_matrix(e))[s, k])


def simulate_record(e: SchmidtEnsemble) -> MeasurementRecord:
    """Noiseless record via the bilinear Gram formula."""
    a = amplitude_table(e.p, e.lambdas, x_matrix(e))
    return MeasurementRecord(p=e.p, a=a, noise_sigma=0.0, seed=None, source=SOURCE_FORMULA)


def oracle_record(e: SchmidtEnsemble, ambient_dim: int) -> MeasurementRecord:
    """Noiseless record computed the long way: build the explicit bipartite
    state, apply I (x) H_s, project every outcome, normalize, and overlap
    against the normalized reference.  Independent of the Gram formula."""
    realization = realize_vectors(e, ambient_dim)
    family = build_family(e.p)
    # psi[:, l] = sqrt(lambda_l) |lambda_l>; the u-index lives in the columns.
    psi = realization.vectors.T * np.sqrt(e.lambdas)

    def projected_states(s: int) -> np.ndarray:
        # (I (x) H_s) acts on the u-index: column k picks up H_s[k, l] weights.
        return psi @ family.matrices[s].T

    ref_cols = projected_states(0)
    ref_norm = np.linalg.norm(ref_cols[:, 0])
    if ref_norm**2 <= DEGENERATE_NORM_TOL / e.p:
        raise DegenerateProjection("reference projection (k=0, s=0) has zero norm")
    ref = ref_cols[:, 0] / ref_norm

    a = np.empty((e.p, e.p), dtype=complex)
    for s in range(e.p):
        cols = projected_states(s)
        norms = np.linalg.norm(cols, axis=0)
        for k in range(e.p):
            if norms[k] ** 2 <= DEGENERATE_NORM_TOL / e.p:
                raise DegenerateProjection(f"projection norm vanishes at (k={k}, s={s})")
            a[s, k] = np.vdot(ref, cols[:, k] / norms[k])
    a[0, 0] = 1.0
    return MeasurementRecord(p=e.p, a=a, noise_sigma=0.0, seed=None, source=SOURCE_ORACLE)


def apply_noise(r: MeasurementRecord, sigma: float, seed: int) -> MeasurementRecord:
    """Add independent Gaussian perturbations of scale ``sigma`` to the real
    and imaginary parts of every entry except the a[0][0] reference (kept at 1)."""
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, sigma, size=(r.p, r.p)) + 1j * rng.normal(
        0.0, sigma, size=(r.p, r.p)
    )
    noise[0, 0] = 0.0
    return replace(r, a=r.a + noise, noise_sigma=sigma, seed=seed)


def save_record(r: MeasurementRecord, path: str | Path) -> None:
    """Write the measurement file (row index s, column index k)."""
    payload = {
        "p": r.p,
        "a_re": r.a.real.tolist(),
        "a_im": r.a.imag.tolist(),
        "noise_sigma": r.noise_sigma,
        "seed": r.seed,
        "source": r.source,
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def load_record(path: str | Path) -> MeasurementRecord:
    payload = json.loads(Path(path).read_text())
    a = np.asarray(payload["a_re"], dtype=float) + 1j * np.asarray(payload["a_im"], dtype=float)
    seed = payload["seed"]
    return MeasurementRecord(
        p=int(payload["p"]),
        a=a,
        noise_sigma=float(payload["noise_sigma"]),
        seed=None if seed is None else int(seed),
        source=str(payload["source"]),
    )
