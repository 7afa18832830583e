"""Dense complex-matrix kernel shared by every other module.

Density matrices are plain ``numpy`` complex arrays; pure states are 1-D
amplitude vectors.  All logarithms are base 2.
"""

from __future__ import annotations

import math

import numpy as np

TOL_HERM = 1e-9
TOL_PSD = 1e-9
TOL_TRACE = 1e-9
TOL_NORM = 1e-9
RANK_TOL = 1e-8
DIM_CAP = 64


class ValidationError(ValueError):
    """Input matrix or state violates a structural invariant."""


class DimensionCapError(ValidationError):
    pass


def _as_square(m, name="matrix") -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError(f"{name} has non-finite entries")
    return a


def is_hermitian(m, tol: float = TOL_HERM) -> bool:
    a = np.asarray(m)
    scale = max(1.0, float(np.abs(a).max(initial=0.0)))
    return bool(np.abs(a - a.conj().T).max(initial=0.0) <= tol * scale)


def hermitize(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    return 0.5 * (a + a.conj().T)


def check_hermitian(m, tol: float = TOL_HERM, name="matrix") -> np.ndarray:
    a = _as_square(m, name)
    if not is_hermitian(a, tol):
        raise ValidationError(f"{name} is not Hermitian within {tol:g}")
    return hermitize(a)


def hermitian_eig(h, tol: float = TOL_HERM):
    """Eigenvalues (ascending) and orthonormal eigenvectors of a Hermitian matrix."""
    a = check_hermitian(h, tol)
    w, v = np.linalg.eigh(a)
    return w, v


def jacobi_eigh(h, tol: float = 1e-15, max_sweeps: int = 60):
    """Cyclic Jacobi eigensolver for complex Hermitian matrices.

    Slow (pure Python rotations) but independent of LAPACK; used to
    cross-check :func:`hermitian_eig`.
    """
    a = check_hermitian(h).copy()
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    scale = max(np.linalg.norm(a), 1e-300)
    for _ in range(max_sweeps):
        off = math.sqrt(max(np.linalg.norm(a) ** 2 - np.sum(np.abs(np.diag(a)) ** 2), 0.0))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag <= 1e-300:
                    continue
                cph = np.conj(apq) / mag
                zeta = (a[q, q].real - a[p, p].real) / (2.0 * mag)
                t = (1.0 if zeta >= 0 else -1.0) / (abs(zeta) + math.sqrt(1.0 + zeta * zeta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                u2 = np.array([[c, s], [-s * cph, c * cph]], dtype=complex)
                idx = [p, q]
                a[:, idx] = a[:, idx] @ u2
                a[idx, :] = u2.conj().T @ a[idx, :]
                a[p, q] = a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                v[:, idx] = v[:, idx] @ u2
    w = np.real(np.diag(a))
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def psd_sqrt(a) -> np.ndarray:
    """Square root of a PSD matrix; tiny negative eigenvalues are clamped."""
    w, v = np.linalg.eigh(hermitize(a))
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


def min_eig(a) -> float:
    return float(np.linalg.eigvalsh(hermitize(a))[0])


def validate_state(rho, subnormalized: bool = False, tol_psd: float = TOL_PSD,
                   tol_trace: float = TOL_TRACE) -> np.ndarray:
    """Return ``rho`` as a Hermitian complex array or raise :class:`ValidationError`."""
    a = check_hermitian(rho, name="state")
    w = np.linalg.eigvalsh(a)
    if w[0] < -tol_psd * max(w[-1], 1.0):
        raise ValidationError(f"state is not PSD (min eigenvalue {w[0]:.3e})")
    tr = float(np.trace(a).real)
    if subnormalized:
        if tr > 1.0 + tol_trace:
            raise ValidationError(f"subnormalized state has trace {tr:.12g} > 1")
    elif abs(tr - 1.0) > tol_trace:
        raise ValidationError(f"state has trace {tr:.12g}, expected 1")
    return a


def validate_pure(psi, tol: float = TOL_NORM) -> np.ndarray:
    v = np.asarray(psi, dtype=complex).ravel()
    if v.size == 0 or not np.all(np.isfinite(v)):
        raise ValidationError("pure state must be a non-empty finite vector")
    nrm = float(np.vdot(v, v).real)
    if abs(nrm - 1.0) > tol:
        raise ValidationError(f"pure state has squared norm {nrm:.12g}, expected 1")
    return v


def proj(psi) -> np.ndarray:
    v = np.asarray(psi, dtype=complex).ravel()
    return np.outer(v, v.conj())


def dephase(m) -> np.ndarray:
    """Keep the diagonal of a square matrix, zero everything else."""
    a = _as_square(m)
    return np.diag(np.diag(a))


def offdiag_l1(m) -> float:
    a = np.asarray(m)
    return float(np.abs(a).sum() - np.abs(np.diag(a)).sum())


def fidelity(rho, sigma) -> float:
    """Root fidelity ``|| sqrt(rho) sqrt(sigma) ||_1``.

    The nuclear-norm form keeps rank-deficient inputs accurate; the
    eigenvalue form takes square roots of round-off noise.
    """
    a = np.asarray(rho, dtype=complex)
    b = np.asarray(sigma, dtype=complex)
    if a.shape != b.shape:
        raise ValidationError(f"dimension mismatch {a.shape} vs {b.shape}")
    s = np.linalg.svd(psd_sqrt(a) @ psd_sqrt(b), compute_uv=False)
    return float(s.sum())


def trace_norm(a) -> float:
    s = np.linalg.svd(np.asarray(a, dtype=complex), compute_uv=False)
    return float(s.sum())


def support_projector(rho, rank_tol: float = RANK_TOL) -> np.ndarray:
    """Projector onto eigenvectors with eigenvalue above ``rank_tol * lambda_max``."""
    w, v = np.linalg.eigh(hermitize(_as_square(rho)))
    top = w[-1]
    if top <= 0:
        return np.zeros_like(v)
    keep = v[:, w > rank_tol * top]
    return keep @ keep.conj().T


def shannon_entropy(p) -> float:
    p = np.asarray(p, dtype=float)
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def von_neumann_entropy(rho) -> float:
    w = np.linalg.eigvalsh(hermitize(_as_square(rho)))
    return shannon_entropy(np.clip(w, 0.0, None))


def binary_entropy(p: float) -> float:
    return shannon_entropy([p, 1.0 - p])


def tensor_power(rho, n: int, cap: int = DIM_CAP) -> np.ndarray:
    a = _as_square(rho)
    if n < 1:
        raise ValidationError("tensor power needs n >= 1")
    if a.shape[0] ** n > cap:
        raise DimensionCapError(f"dimension {a.shape[0]}^{n} exceeds cap {cap}")
    out = a
    for _ in range(n - 1):
        out = np.kron(out, a)
    return out


def random_density_matrix(dim: int, rank: int | None = None, seed=None) -> np.ndarray:
    """Ginibre-factor random state ``G G^dag / Tr``, deterministic per seed."""
    rank = dim if rank is None else rank
    if not 1 <= rank <= dim:
        raise ValidationError(f"rank must satisfy 1 <= rank <= {dim}, got {rank}")
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return hermitize(rho / np.trace(rho).real)


def random_pure_state(dim: int, seed=None) -> np.ndarray:
    rng = np.random.default_rng(seed)
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def random_hermitian(dim: int, seed=None) -> np.ndarray:
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return hermitize(g)


def random_unitary(dim: int, seed=None) -> np.ndarray:
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(g)
    d = np.diag(r)
    return q * (d / np.abs(d))


# -- JSON matrix schema: {"dim": n, "re": [[...]], "im": [[...]]} ----------

def matrix_to_json(m) -> dict:
    a = np.asarray(m, dtype=complex)
    out = {}
    if a.ndim == 2 and a.shape[0] == a.shape[1]:
        out["dim"] = int(a.shape[0])
    else:
        out["rows"], out["cols"] = (int(x) for x in a.shape)
    out["re"] = a.real.tolist()
    out["im"] = a.imag.tolist()
    return out


def matrix_from_json(obj) -> np.ndarray:
    try:
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", np.zeros_like(re)), dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed matrix object: {exc}") from exc
    if re.ndim != 2 or re.shape != im.shape:
        raise ValidationError("matrix 're'/'im' must be equal-shape 2-D arrays")
    a = re + 1j * im
    if "dim" in obj and a.shape != (obj["dim"], obj["dim"]):
        raise ValidationError(f"declared dim {obj['dim']} does not match shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError("matrix has non-finite entries")
    return a


def state_from_json(obj) -> np.ndarray:
    return validate_state(matrix_from_json(obj))
