"""Recover probabilities and inner products from a measurement record.

Four solvers share the result type:

* :func:`reconstruct_real` — the general quasilinearized procedure for real
  inner products, any odd prime p: null-space extraction of the projection
  norms per setting, the Gauss-sum identity for the reference norm, then an
  overdetermined linear inversion for the physical parameters.
* :func:`reconstruct_p2` — closed-form-driven damped iteration for p = 2,
  complex inner products allowed.
* :func:`reconstruct_p3` — fully closed-form path for p = 3, real inner
  products.
* :func:`reconstruct_complex_numeric` — damped least squares with multistart
  on the non-redundant equation set, any prime p, complex inner products.

Tolerance gates scale by max(1, noise_sigma / 1e-12) so noisy records degrade
gracefully instead of being rejected.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .ensemble import random_ensemble, x_matrix
from .errors import (
    DegenerateSystem,
    DomainViolation,
    InconsistentRecord,
    RankDeficient,
    SolverFailure,
)
from .hadamard import phase_tensor
from .phases import gauss_sum, mod_inverse, omega_pow
from .protocol import MeasurementRecord, amplitude_table, bilinear_tables

LAMBDA_DEFINED_THRESHOLD = 1e-10

METHOD_REAL = "real-general"
METHOD_P2 = "p2-closed"
METHOD_P3 = "p3-closed"
METHOD_COMPLEX = "complex-numeric"


@dataclass
class ReconstructionResult:
    """Recovered parameters plus solver bookkeeping.

    ``inner`` has a unit diagonal; entries whose probabilities fall below the
    definedness threshold carry no information and are marked in
    ``undefined_mask``.  ``residual`` is the largest deviation of the record
    re-simulated from the recovered parameters.
    """

    p: int
    lambdas: np.ndarray
    inner: np.ndarray
    undefined_mask: np.ndarray
    x_recovered: np.ndarray
    residual: float
    method: str
    measurements_used: int
    diagnostics: dict = field(default_factory=dict)


def _noise_scale(r: MeasurementRecord) -> float:
    return max(1.0, r.noise_sigma / 1e-12)


def x_to_inner_products(
    lambdas: np.ndarray, x: np.ndarray, threshold: float = LAMBDA_DEFINED_THRESHOLD
) -> tuple[np.ndarray, np.ndarray]:
    """Divide out the probability weights: ``inner[l',l] = x[l',l] /
    sqrt(lambda_l' lambda_l)``.

    Entries touching a probability below ``threshold`` are numerically
    meaningless and come back flagged in the boolean mask (values set to the
    unit diagonal / zero off-diagonal placeholders).
    """
    lam = np.asarray(lambdas, dtype=float)
    p = lam.size
    defined = lam > threshold
    inner = np.zeros((p, p), dtype=complex)
    mask = ~(np.outer(defined, defined))
    w = np.where(defined, lam, 1.0)
    scale = 1.0 / np.sqrt(np.outer(w, w))
    inner = np.where(mask, 0.0, np.asarray(x, dtype=complex) * scale)
    np.fill_diagonal(inner, 1.0)
    return inner, mask


def _rotation_matrix(r: MeasurementRecord, s: int) -> np.ndarray:
    """rot[l, k] = omega^{2^{-1} s l^2 + k l} a[s][k]; the real part carries the
    y-projection, the imaginary part the homogeneous constraints on z."""
    p = r.p
    inv2 = mod_inverse(2, p)
    rot = np.empty((p, p), dtype=complex)
    for l in range(p):
        for k in range(p):
            rot[l, k] = omega_pow(p, (inv2 * s * l * l + k * l) % p) * r.a[s, k]
    return rot


def solve_z_block(r: MeasurementRecord, s: int) -> np.ndarray:
    """Projection-norm square roots z_ks for one setting s in 1..(p-1)/2.

    The imaginary parts of the rotated overlap sums must vanish for real inner
    products, giving a homogeneous p x p system whose one-dimensional null
    space, scaled to sum(z^2) = p with the dominant entry positive, is z.
    """
    p = r.p
    if p <= 2:
        raise ValueError("z-block extraction requires p > 2")
    if not (1 <= s <= (p - 1) // 2):
        raise ValueError(f"setting s must lie in 1..{(p - 1) // 2}, got {s}")
    scale = _noise_scale(r)
    m = _rotation_matrix(r, s).imag
    svals = np.linalg.svd(m, compute_uv=False)
    if svals[-2] < 1e-8 * svals[0]:
        raise DegenerateSystem(
            f"z system for s={s} has null space of dimension > 1 "
            f"(singular values {svals[-2]:.3e}, {svals[-1]:.3e})"
        )
    if svals[-1] > 1e-6 * svals[0] * scale:
        raise InconsistentRecord(
            f"z system for s={s} has no null direction (smallest singular value "
            f"{svals[-1]:.3e} vs largest {svals[0]:.3e}); record is not real-Gram"
        )
    z = np.linalg.svd(m)[2][-1]
    z = z * np.sqrt(p / np.sum(z**2))
    if z[np.argmax(np.abs(z))] < 0:
        z = -z
    if z.min() < -1e-8 * scale:
        raise InconsistentRecord(
            f"z null vector for s={s} has mixed signs (min {z.min():.3e}); "
            "record is not real-Gram or too noisy"
        )
    return np.maximum(z, 0.0)


def compute_n00(r: MeasurementRecord, z: np.ndarray, s: int) -> float:
    """Reference norm from the Gauss-sum identity; the bracket is real for
    consistent records (its imaginary part is a consistency check)."""
    p = r.p
    inv2 = mod_inverse(2, p)
    bracket = sum(r.a[s, k] * z[k] * gauss_sum(p, (inv2 * s) % p, k) for k in range(p))
    scale = _noise_scale(r)
    if abs(bracket.imag) > 1e-6 * scale:
        raise InconsistentRecord(
            f"Gauss-sum bracket for s={s} has imaginary part {bracket.imag:.3e}"
        )
    n00 = (bracket.real / p) ** 2
    if n00 > p + 1e-6 * scale:
        raise InconsistentRecord(f"reference norm {n00:.6f} exceeds p={p}")
    return float(n00)


def compute_y(r: MeasurementRecord, z: np.ndarray, n00: float, s: int) -> np.ndarray:
    """Diagonal-plus-row-sum variables y_l from the real parts of the rotated
    overlap sums; sum(y) equals the reference norm on consistent records."""
    rot = _rotation_matrix(r, s)
    return (np.sqrt(n00) / r.p) * (rot @ z).real


def solve_z_zero(
    r: MeasurementRecord, n00: float | None = None, y: np.ndarray | None = None
) -> tuple[np.ndarray, float]:
    """Projection-norm roots z_k0 for the s = 0 setting, k = 1..(p-1)/2.

    With y and the reference norm already determined from an s > 0 block, the
    s = 0 overlap equations are linear in z_k0 (only the real parts carry
    information: the k and p-k contributions are conjugate by symmetry).
    Returns the empty array for p = 3, where no s = 0 measurement is needed.
    """
    p = r.p
    if p <= 2:
        raise ValueError("s=0 extraction requires p > 2")
    if n00 is None or y is None:
        z1 = solve_z_block(r, 1)
        n00 = compute_n00(r, z1, 1)
        y = compute_y(r, z1, n00, 1)
    if p == 3:
        return np.empty(0), n00

    scale = _noise_scale(r)
    half = (p - 1) // 2
    coeff = np.zeros((p, half))
    rhs = np.zeros(p)
    root = np.sqrt(n00)
    for l in range(p):
        for j, k in enumerate(range(1, half + 1)):
            coeff[l, j] = 2.0 * (omega_pow(p, k * l) * r.a[0, k]).real
        rhs[l] = p * y[l] / root - root
    svals = np.linalg.svd(coeff, compute_uv=False)
    if svals[-1] < 1e-8 * svals[0]:
        raise DegenerateSystem(
            f"s=0 system is rank deficient (singular values {svals})"
        )
    z0, *_ = np.linalg.lstsq(coeff, rhs, rcond=None)
    if z0.min() < -1e-8 * scale:
        raise InconsistentRecord(
            f"s=0 norms came out negative (min {z0.min():.3e}); "
            "record is not real-Gram or too noisy"
        )
    return np.maximum(z0, 0.0), n00


def invert_linear_system(
    y: np.ndarray, n: np.ndarray
) -> tuple[np.ndarray, np.ndarray, dict]:
    """Least-squares inversion of the full overdetermined linear system in
    (lambda_0..lambda_{p-1}, x_{ab} for a < b), p > 2, real inner products.

    Rows: the p definitions of y_l, all p^2 norm equations (cosine form), and
    the unit-sum constraint.  Raises :class:`RankDeficient` below full column
    rank; the returned diagnostics report the rank and singular values so the
    redundancy structure can be examined rather than assumed.
    """
    p = y.size
    inv2 = mod_inverse(2, p)
    pairs = [(a, b) for a in range(p) for b in range(a + 1, p)]
    cols = p + len(pairs)
    rows: list[np.ndarray] = []
    rhs: list[float] = []
    for l in range(p):
        row = np.zeros(cols)
        row[l] = 1.0
        for j, (a, b) in enumerate(pairs):
            if l in (a, b):
                row[p + j] = 1.0
        rows.append(row)
        rhs.append(float(y[l]))
    for s in range(p):
        for k in range(p):
            row = np.zeros(cols)
            for j, (a, b) in enumerate(pairs):
                e = (inv2 * s * (a * a - b * b) + k * (a - b)) % p
                row[p + j] = 2.0 * np.cos(2.0 * np.pi * e / p)
            rows.append(row)
            rhs.append(float(n[s, k] - 1.0))
    rows.append(np.concatenate([np.ones(p), np.zeros(len(pairs))]))
    rhs.append(1.0)

    a_mat = np.asarray(rows)
    b_vec = np.asarray(rhs)
    svals = np.linalg.svd(a_mat, compute_uv=False)
    rank = int(np.sum(svals > 1e-8 * svals[0]))
    if rank < cols:
        raise RankDeficient(
            f"inversion system has rank {rank} < {cols} unknowns "
            f"(singular values {svals[-3:]})"
        )
    sol, lstsq_res, _, _ = np.linalg.lstsq(a_mat, b_vec, rcond=None)
    lambdas = sol[:p]
    x = np.zeros((p, p))
    for j, (a, b) in enumerate(pairs):
        x[a, b] = x[b, a] = sol[p + j]
    fit_residual = float(np.linalg.norm(a_mat @ sol - b_vec))
    info = {
        "rank": rank,
        "unknowns": cols,
        "singular_values": svals.tolist(),
        "lstsq_residual": fit_residual,
    }
    return lambdas, x, info


def _finish(
    r: MeasurementRecord,
    lambdas: np.ndarray,
    x: np.ndarray,
    method: str,
    measurements_used: int,
    diagnostics: dict,
) -> ReconstructionResult:
    """Assemble the result: inner products, undefined flags, re-simulation residual."""
    inner, mask = x_to_inner_products(lambdas, x)
    try:
        resim = amplitude_table(r.p, np.maximum(lambdas, 0.0), x)
        residual = float(np.abs(resim - r.a).max())
    except Exception as exc:  # degenerate re-simulation: report, don't hide
        residual = float("inf")
        diagnostics = dict(diagnostics, resimulation_error=repr(exc))
    return ReconstructionResult(
        p=r.p,
        lambdas=np.asarray(lambdas, dtype=float),
        inner=inner,
        undefined_mask=mask,
        x_recovered=np.asarray(x, dtype=complex),
        residual=residual,
        method=method,
        measurements_used=measurements_used,
        diagnostics=diagnostics,
    )


def reconstruct_real(r: MeasurementRecord) -> ReconstructionResult:
    """General real-inner-product reconstruction for odd prime p.

    Pipeline: z null spaces for each setting s = 1..(p-1)/2, the reference
    norm and y from s = 1, the s = 0 norms from the linear real-part system,
    symmetry completion of the norm table, then least-squares inversion.
    """
    p = r.p
    if p <= 2:
        raise ValueError("reconstruct_real requires p > 2; use reconstruct_p2")
    half = (p - 1) // 2
    z_blocks = {s: solve_z_block(r, s) for s in range(1, half + 1)}
    n00_by_s = {s: compute_n00(r, z_blocks[s], s) for s in range(1, half + 1)}
    n00 = n00_by_s[1]
    y = compute_y(r, z_blocks[1], n00, 1)

    n = np.zeros((p, p))
    n[0, 0] = n00
    if p == 3:
        n[0, 1] = n[0, 2] = (3.0 - n00) / 2.0
        z0_norm_defect = 0.0
    else:
        z0, _ = solve_z_zero(r, n00, y)
        for j, k in enumerate(range(1, half + 1)):
            n[0, k] = z0[j] ** 2
            n[0, p - k] = z0[j] ** 2
        z0_norm_defect = float(n00 + 2.0 * np.sum(z0**2) - p)
    for s in range(1, half + 1):
        n[s] = z_blocks[s] ** 2
    for s in range(half + 1, p):
        for k in range(p):
            n[s, k] = n[p - s, (p - k) % p]

    lambdas, x, lin_info = invert_linear_system(y, n)

    printed_sym_dev = float(
        max(
            abs(n[s, k] - n[(s - k) % p, (p - k) % p])
            for s in range(p)
            for k in range(p)
        )
    )
    diagnostics = {
        "n00_by_setting": {str(s): v for s, v in n00_by_s.items()},
        "n00_spread": float(max(n00_by_s.values()) - min(n00_by_s.values())),
        "sum_y_minus_n00": float(y.sum() - n00),
        "z0_norm_defect": z0_norm_defect,
        "printed_norm_symmetry_deviation": printed_sym_dev,
        "linear_system": lin_info,
    }
    measurements = p * half + p + (half if p > 3 else 0)
    return _finish(r, lambdas, x.astype(complex), METHOD_REAL, measurements, diagnostics)


def reconstruct_p2(
    r: MeasurementRecord, tol: float = 1e-12, max_iter: int = 200
) -> ReconstructionResult:
    """Dimension-two solver; inner products may be complex.

    Reads the setting-1 outcome whose overlap equations take the form
    ``t*alpha = lambda_0 + x_R - x_I``, ``t*beta = lambda_1 + x_R - x_I`` with
    ``t = sqrt((1+2x_R)(1-2x_I))`` (that is a[1][1] under this family's phase
    convention), plus the imaginary part of the setting-0 overlap
    ``sqrt(1-4x_R^2)*beta_0 = -2x_I``, and alternates closed-form updates of
    x_I and (x_R, lambdas) from a zero start until the updates stall.
    """
    if r.p != 2:
        raise ValueError(f"reconstruct_p2 requires p = 2, got {r.p}")
    alpha1, beta1 = float(r.a[1, 1].real), float(r.a[1, 1].imag)
    beta0 = float(r.a[0, 1].imag)

    x_r, x_i = 0.0, 0.0
    lam0, lam1 = 0.5, 0.5
    v = 1.0  # sqrt(1 + 2 x_R)
    iterations = 0
    converged = False
    for iterations in range(1, max_iter + 1):
        if abs(x_r) >= 0.5:
            raise DomainViolation(f"|x_R| = {abs(x_r):.6f} >= 1/2; norms would be negative")
        x_i_target = -0.5 * beta0 * np.sqrt(1.0 - 4.0 * x_r * x_r)
        # Damp the x_I step until the setting-1 sum equation
        # v^2 - c v - 2 x_I = 0, c = sqrt(1 - 2 x_I) (alpha + beta),
        # admits a positive norm root; a full step can overshoot early on.
        gamma = 1.0
        v_new = None
        while gamma >= 1e-3:
            x_i_new = x_i + gamma * (x_i_target - x_i)
            if x_i_new < 0.5:
                c = np.sqrt(1.0 - 2.0 * x_i_new) * (alpha1 + beta1)
                disc = c * c + 8.0 * x_i_new
                if disc >= 0.0:
                    roots = [(c + np.sqrt(disc)) / 2.0, (c - np.sqrt(disc)) / 2.0]
                    positive = [root for root in roots if root > 0.0]
                    if positive:
                        v_new = min(positive, key=lambda root: abs(root - v))
                        break
            gamma /= 2.0
        if v_new is None:
            raise DomainViolation(
                "setting-1 sum equation has no positive norm root even under damping"
            )
        x_r_new = (v_new * v_new - 1.0) / 2.0
        diff = v_new * np.sqrt(1.0 - 2.0 * x_i_new) * (alpha1 - beta1)
        lam0_new = (1.0 + diff) / 2.0
        lam1_new = (1.0 - diff) / 2.0
        update = max(
            abs(x_r_new - x_r), abs(x_i_new - x_i), abs(lam0_new - lam0), abs(lam1_new - lam1)
        )
        x_r, x_i, lam0, lam1, v = x_r_new, x_i_new, lam0_new, lam1_new, v_new
        if update < tol:
            converged = True
            break
    if not converged:
        raise SolverFailure(
            f"p=2 iteration did not converge in {max_iter} steps (last update {update:.3e})"
        )

    lambdas = np.array([lam0, lam1])
    x = np.array([[0.0, x_r + 1j * x_i], [x_r - 1j * x_i, 0.0]], dtype=complex)
    diagnostics = {"iterations": iterations, "final_update": float(update)}
    return _finish(r, lambdas, x, METHOD_P2, 3, diagnostics)


def reconstruct_p3(r: MeasurementRecord) -> ReconstructionResult:
    """Fully closed-form reconstruction for p = 3, real inner products.

    The three setting-1 overlaps a[1][j] = alpha_j + i beta_j determine the
    norms in closed form; the common denominator vanishes on a measure-zero
    set (e.g. the exactly orthogonal uniform ensemble), where the general
    null-space extraction takes over.
    """
    if r.p != 3:
        raise ValueError(f"reconstruct_p3 requires p = 3, got {r.p}")
    scale = _noise_scale(r)
    alpha = r.a[1].real.astype(float)
    beta = r.a[1].imag.astype(float)
    s3 = np.sqrt(3.0)

    num = np.array(
        [
            alpha[1] * alpha[2] - 3.0 * beta[1] * beta[2],
            alpha[0] * (alpha[2] - s3 * beta[2]),
            alpha[0] * (alpha[1] - s3 * beta[1]),
        ]
    )
    denom = np.linalg.norm(num)
    if denom < 1e-12:
        z = solve_z_block(r, 1)
        z_source = "nullspace-fallback"
    else:
        z = s3 * num / denom
        if z[np.argmax(np.abs(z))] < 0:
            z = -z
        if z.min() < -1e-8 * scale:
            raise InconsistentRecord(
                f"closed-form norms have mixed signs (min {z.min():.3e}); "
                "record is not real-Gram or too noisy"
            )
        z = np.maximum(z, 0.0)
        z_source = "closed-form"

    bracket = (
        2.0 * beta[0] * z[0]
        + (s3 * alpha[1] - beta[1]) * z[1]
        + (s3 * alpha[2] - beta[2]) * z[2]
    )
    n00 = bracket * bracket / 12.0

    w = omega_pow(3, 1)
    w2 = omega_pow(3, 2)
    za = z * r.a[1]
    root = np.sqrt(n00)
    y0 = root * (za[0] + za[1] + za[2]).real / 3.0
    y1 = root * (w2 * za[0] + za[1] + w * za[2]).real / 3.0
    y2 = root * (w2 * za[0] + w * za[1] + za[2]).real / 3.0

    n01, n11, n21 = z[0] ** 2, z[1] ** 2, z[2] ** 2
    lambdas = np.array(
        [
            y0 + (n01 - n00) / 3.0,
            y1 + (n21 - n00) / 3.0,
            y2 + (n11 - n00) / 3.0,
        ]
    )
    x01 = (n00 + n11 - n01 - n21) / 6.0
    x02 = (n00 + n21 - n01 - n11) / 6.0
    x12 = (n00 + n01 - n11 - n21) / 6.0
    x = np.array([[0.0, x01, x02], [x01, 0.0, x12], [x02, x12, 0.0]], dtype=complex)

    diagnostics = {
        "z": z.tolist(),
        "z_source": z_source,
        "closed_form_denominator": float(denom),
        "n00": float(n00),
        "n10": float((3.0 - n00) / 2.0),
    }
    return _finish(r, lambdas, x, METHOD_P3, 6, diagnostics)


def _equation_set(p: int) -> list[tuple[int, int, bool]]:
    """Non-redundant equations as (s, k, complex?) triples; together with the
    unit-sum constraint they contribute exactly p^2 real residuals."""
    if p == 2:
        return [(1, 1, True), (0, 1, False)]
    half = (p - 1) // 2
    eqs = [(s, k, True) for s in range(1, half + 1) for k in range(p)]
    eqs += [(0, k, True) for k in range(1, half + 1)]
    return eqs


def _pack(lambdas: np.ndarray, x: np.ndarray) -> np.ndarray:
    p = lambdas.size
    pairs = [(a, b) for a in range(p) for b in range(a + 1, p)]
    xs = np.array([x[a, b] for a, b in pairs])
    return np.concatenate([lambdas, xs.real, xs.imag])


def _unpack(theta: np.ndarray, p: int) -> tuple[np.ndarray, np.ndarray]:
    pairs = [(a, b) for a in range(p) for b in range(a + 1, p)]
    m = len(pairs)
    lambdas = theta[:p]
    x = np.zeros((p, p), dtype=complex)
    for j, (a, b) in enumerate(pairs):
        val = theta[p + j] + 1j * theta[p + m + j]
        x[a, b] = val
        x[b, a] = np.conj(val)
    return lambdas, x


def _project_feasible(theta: np.ndarray, p: int) -> np.ndarray:
    """Clip probabilities to be nonnegative and cap each |x_ab| at
    sqrt(lambda_a lambda_b) (preserving its phase)."""
    lambdas, x = _unpack(theta, p)
    lambdas = np.maximum(lambdas, 0.0)
    cap = np.sqrt(np.outer(lambdas, lambdas))
    mag = np.abs(x)
    over = mag > cap
    if over.any():
        shrink = np.ones_like(mag)
        shrink[over] = cap[over] / mag[over]
        x = x * shrink
    return _pack(lambdas, x)


def reconstruct_complex_numeric(
    r: MeasurementRecord,
    max_iter: int = 200,
    tol: float = 1e-8,
    multistarts: int = 8,
    seed: int = 0,
) -> ReconstructionResult:
    """Direct numerical solution of the non-redundant overlap equations for
    complex inner products: damped least squares (Levenberg-Marquardt with a
    forward-difference Jacobian), restarted from ``multistarts`` random
    feasible points plus the orthogonal-uniform point.

    Never raises on non-convergence: the best-effort result comes back with
    ``diagnostics["converged"] = False`` (and ``failure = "SolverFailure"``).
    """
    p = r.p
    eqs = _equation_set(p)
    c = phase_tensor(p)
    pairs = [(a, b) for a in range(p) for b in range(a + 1, p)]
    n_params = p + 2 * len(pairs)

    def residuals(theta: np.ndarray) -> np.ndarray:
        lambdas, x = _unpack(theta, p)
        num, n = bilinear_tables(p, lambdas, x)
        n = np.maximum(n, 0.0)
        n00 = n[0, 0]
        out = np.empty(p * p)
        i = 0
        for s, k, is_complex in eqs:
            d = r.a[s, k] * np.sqrt(n00 * n[s, k]) - num[s, k]
            if is_complex:
                out[i] = d.real
                out[i + 1] = d.imag
                i += 2
            else:
                out[i] = d.imag
                i += 1
        out[i] = lambdas.sum() - 1.0
        return out

    def jacobian(theta: np.ndarray, base: np.ndarray) -> np.ndarray:
        jac = np.empty((base.size, theta.size))
        for j in range(theta.size):
            h = 1e-7 * max(1.0, abs(theta[j]))
            bumped = theta.copy()
            bumped[j] += h
            jac[:, j] = (residuals(bumped) - base) / h
        return jac

    def run_from(theta: np.ndarray) -> tuple[np.ndarray, float, int]:
        theta = _project_feasible(theta, p)
        res = residuals(theta)
        cost = float(np.abs(res).max())
        mu = 1e-3
        iters = 0
        for iters in range(1, max_iter + 1):
            jac = jacobian(theta, res)
            jtj = jac.T @ jac
            g = jac.T @ res
            stepped = False
            for _ in range(12):
                try:
                    delta = np.linalg.solve(jtj + mu * np.eye(n_params), -g)
                except np.linalg.LinAlgError:
                    mu *= 10.0
                    continue
                cand = _project_feasible(theta + delta, p)
                cand_res = residuals(cand)
                cand_cost = float(np.abs(cand_res).max())
                if cand_cost < cost:
                    theta, res, cost = cand, cand_res, cand_cost
                    mu = max(mu / 3.0, 1e-14)
                    stepped = True
                    break
                mu *= 10.0
            if not stepped or cost < tol * 1e-3:
                break
        return theta, cost, iters

    rng_seeds = [None] + [seed * 7919 + 101 * i for i in range(multistarts)]
    starts = [_pack(np.full(p, 1.0 / p), np.zeros((p, p), dtype=complex))]
    for s_val in rng_seeds[1:]:
        guess = random_ensemble(p, real_flag=False, seed=s_val)
        starts.append(_pack(guess.lambdas, x_matrix(guess)))

    best = None
    per_start = []
    for idx, theta0 in enumerate(starts):
        theta, cost, iters = run_from(theta0.copy())
        per_start.append({"start": idx, "residual": cost, "iterations": iters})
        if best is None or cost < best[1]:
            best = (theta, cost, idx, iters)

    theta, cost, best_idx, iters = best
    lambdas, x = _unpack(theta, p)
    converged = cost <= tol

    jac = jacobian(theta, residuals(theta))
    svals = np.linalg.svd(jac, compute_uv=False)
    diagnostics = {
        "converged": bool(converged),
        "equation_count": p * p,
        "equation_residual": float(cost),
        "best_start": int(best_idx),
        "iterations": int(iters),
        "starts": per_start,
        "jacobian_singular_values": svals.tolist(),
        "jacobian_rank": int(np.sum(svals > 1e-8 * svals[0])),
        "projection_count": (p * p - 1) // 2,
    }
    if not converged:
        diagnostics["failure"] = "SolverFailure"
    return _finish(r, lambdas, x, METHOD_COMPLEX, p * p - 1, diagnostics)


def save_result(res: ReconstructionResult, path: str | Path) -> None:
    """Write the reconstruction file with explicit re/im arrays."""
    payload = {
        "p": res.p,
        "method": res.method,
        "lambdas": res.lambdas.tolist(),
        "inner_re": res.inner.real.tolist(),
        "inner_im": res.inner.imag.tolist(),
        "undefined_mask": res.undefined_mask.tolist(),
        "x_re": res.x_recovered.real.tolist(),
        "x_im": res.x_recovered.imag.tolist(),
        "residual": res.residual,
        "measurements_used": res.measurements_used,
        "diagnostics": res.diagnostics,
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def load_result(path: str | Path) -> ReconstructionResult:
    payload = json.loads(Path(path).read_text())
    inner = np.asarray(payload["inner_re"], dtype=float) + 1j * np.asarray(
        payload["inner_im"], dtype=float
    )
    x = np.asarray(payload["x_re"], dtype=float) + 1j * np.asarray(payload["x_im"], dtype=float)
    return ReconstructionResult(
        p=int(payload["p"]),
        lambdas=np.asarray(payload["lambdas"], dtype=float),
        inner=inner,
        undefined_mask=np.asarray(payload["undefined_mask"], dtype=bool),
        x_recovered=x,
        residual=float(payload["residual"]),
        method=str(payload["method"]),
        measurements_used=int(payload["measurements_used"]),
        diagnostics=dict(payload["diagnostics"]),
    )
