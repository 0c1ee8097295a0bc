"""Recovering the full output matrix from partial, possibly noisy entries.

Phi is rank K with 2K rows, so a handful of observed entries per column
pins it down.  Three routes are implemented: singular-value projection
(iterative hard thresholding), ridge-regularized alternating least squares,
and — when the coefficient matrix C is known — an exact per-column
factorized solve.  ``sweep`` drives grids of seeded experiments and returns
one aggregate row per (method, swept value).
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .circuit import CircuitSpec
from .linalg import haar_random_unitary, random_state, rng, svd
from .outputs import coefficient_matrix, extract_target, invert_with_C, output_matrix

__all__ = [
    "FactorizedResult",
    "ObservationMask",
    "ObservedEntries",
    "als_complete",
    "factorized_complete",
    "make_mask",
    "observe",
    "recovery_errors",
    "svp_complete",
    "sweep",
]


@dataclass(frozen=True)
class ObservationMask:
    """Boolean pattern of observed entries plus how it was drawn."""

    mask: np.ndarray
    mode: str
    seed: int

    @property
    def density(self) -> float:
        return float(self.mask.mean())


@dataclass(frozen=True)
class ObservedEntries:
    """Observed (possibly noisy) entries; unobserved positions hold zero."""

    values: np.ndarray
    mask: np.ndarray
    sigma: float

    @property
    def count(self) -> int:
        return int(self.mask.sum())


def make_mask(
    rows: int,
    cols: int,
    seed: int,
    mode: str = "uniform",
    density: float | None = None,
    min_per_column: int | None = None,
) -> ObservationMask:
    """Draw an observation pattern.

    ``uniform`` keeps each entry independently with probability ``density``.
    ``column_guaranteed`` additionally tops up every column to at least
    ``min_per_column`` observations (with ``density=None`` each column gets
    exactly that many).
    """
    gen = rng(seed)
    if mode == "uniform":
        if density is None:
            raise ValueError("uniform mode needs a density")
        mask = gen.random((rows, cols)) < density
    elif mode == "column_guaranteed":
        if min_per_column is None:
            raise ValueError("column_guaranteed mode needs min_per_column")
        if not 0 < min_per_column <= rows:
            raise ValueError(f"min_per_column must lie in 1..{rows}")
        if density is None:
            mask = np.zeros((rows, cols), dtype=bool)
        else:
            mask = gen.random((rows, cols)) < density
        for j in range(cols):
            short = min_per_column - int(mask[:, j].sum())
            if short > 0:
                missing = np.flatnonzero(~mask[:, j])
                mask[gen.choice(missing, size=short, replace=False), j] = True
    else:
        raise ValueError(f"unknown mask mode {mode!r}")
    return ObservationMask(mask=mask, mode=mode, seed=seed)


def observe(
    phi: np.ndarray, mask: ObservationMask | np.ndarray, sigma: float = 0.0, seed: int = 0
) -> ObservedEntries:
    """Mask the matrix and add complex Gaussian noise of total std ``sigma``.

    Each observed entry gains ``sigma/sqrt(2) * (g1 + i g2)`` with standard
    normal g1, g2, so E|noise|^2 = sigma^2.
    """
    phi = np.asarray(phi, dtype=complex)
    m = mask.mask if isinstance(mask, ObservationMask) else np.asarray(mask, dtype=bool)
    if m.shape != phi.shape:
        raise ValueError(f"mask shape {m.shape} does not match matrix {phi.shape}")
    if sigma < 0:
        raise ValueError("noise level must be non-negative")
    values = np.where(m, phi, 0.0)
    if sigma > 0:
        gen = rng(seed)
        noise = (gen.standard_normal(phi.shape) + 1j * gen.standard_normal(phi.shape)) * (
            sigma / np.sqrt(2)
        )
        values = values + np.where(m, noise, 0.0)
    return ObservedEntries(values=values, mask=m, sigma=float(sigma))


def _check_entries(entries: ObservedEntries) -> None:
    if entries.count == 0:
        raise ValueError("no observed entries")


def svp_complete(
    entries: ObservedEntries,
    rank: int,
    mu: float | None = None,
    tol: float = 1e-12,
    max_iters: int = 500,
) -> tuple[np.ndarray, int]:
    """Singular-value projection: gradient step on observed entries, rank-K SVD truncation.

    The step size defaults to the reciprocal observation density and is
    halved within an iteration until the observed residual decreases, which
    keeps the sweep monotone even at sparse masks where the raw step would
    diverge.  Iteration stops when the residual stalls (relative change
    below ``tol``), when no step length helps, or after ``max_iters``
    rounds.  Returns the completed matrix and the number of iterations used.
    """
    _check_entries(entries)
    mask, b = entries.mask, entries.values
    if mu is None:
        mu = 1.0 / mask.mean()
    z = np.zeros_like(b)
    b_norm = np.linalg.norm(b)
    prev = b_norm
    iters = 0
    for iters in range(1, max_iters + 1):
        g = np.where(mask, b - z, 0.0)
        mu_try = mu
        for _ in range(16):
            u, s, vh = svd(z + mu_try * g)
            z_new = (u[:, :rank] * s[:rank]) @ vh[:rank]
            cur = np.linalg.norm(np.where(mask, b - z_new, 0.0))
            if cur <= prev:
                break
            mu_try *= 0.5
        else:
            break
        z = z_new
        if cur <= 1e-15 * b_norm or prev - cur <= tol * max(prev, 1e-300):
            break
        prev = cur
    return z, iters


def _batched_ridge_rows(
    mask: np.ndarray, values: np.ndarray, basis: np.ndarray, ridge: float
) -> np.ndarray:
    # Solve, for every row i: min over a of |basis[cols_i] a - values[i, cols_i]|^2 + lam |a|^2
    rank = basis.shape[1]
    gram = np.einsum("ij,ja,jb->iab", mask, basis.conj(), basis)
    rhs = np.einsum("ij,ja,ij->ia", mask, basis.conj(), values)
    lam = ridge * np.trace(gram, axis1=1, axis2=2).real / rank
    gram = gram + (lam[:, None, None] + 1e-300) * np.eye(rank)
    return np.linalg.solve(gram, rhs[..., None])[..., 0]


def als_complete(
    entries: ObservedEntries,
    rank: int,
    seed: int = 0,
    ridge: float = 1e-10,
    tol: float = 1e-10,
    max_iters: int = 200,
) -> tuple[np.ndarray, int]:
    """Alternating least squares on the observed entries with a small ridge.

    Factors start as seeded complex Gaussians scaled so the product matches
    the observed Frobenius mass.  Returns the completed matrix and the number
    of sweeps used.
    """
    _check_entries(entries)
    mask, b = entries.mask, entries.values
    rows, cols = b.shape
    gen = rng(seed)
    scale = np.linalg.norm(b) / np.sqrt(entries.count)
    left = scale * (gen.standard_normal((rows, rank)) + 1j * gen.standard_normal((rows, rank))) / np.sqrt(2)
    right = scale * (gen.standard_normal((cols, rank)) + 1j * gen.standard_normal((cols, rank))) / np.sqrt(2)
    prev = np.inf
    iters = 0
    for iters in range(1, max_iters + 1):
        left = _batched_ridge_rows(mask, b, right.conj(), ridge)
        right = _batched_ridge_rows(mask.T, b.T, left, ridge).conj()
        z = left @ right.conj().T
        cur = np.linalg.norm(np.where(mask, b - z, 0.0))
        if np.isfinite(prev) and abs(prev - cur) <= tol * max(prev, 1e-300):
            break
        prev = cur
    return left @ right.conj().T, iters


@dataclass(frozen=True)
class FactorizedResult:
    """Completion through the known coefficient matrix."""

    phi: np.ndarray
    x: np.ndarray
    underdetermined: tuple[int, ...]


def factorized_complete(
    entries: ObservedEntries, c: np.ndarray, ridge: float | None = None
) -> FactorizedResult:
    """Solve each column of Phi = C X from its observed rows.

    Column j with observed rows O solves the normal equations
    ``(C_O^dag C_O + lam I) x_j = C_O^dag phi_obs_j``.  Determined columns
    (at least K observations) are solved with ``lam = 0`` so the recovery
    stays unbiased; the default ridge ``lam = 1e-10 tr(C_O^dag C_O)/K``
    kicks in only where the normal matrix is singular — underdetermined
    columns, which are still solved but reported.  If every column is
    underdetermined the data cannot pin down X at all and the call fails.
    An explicit ``ridge`` applies to all columns.
    """
    _check_entries(entries)
    mask, b = entries.mask, entries.values
    k = c.shape[1]
    cols = b.shape[1]
    x = np.zeros((k, cols), dtype=complex)
    under: list[int] = []
    eye = np.eye(k)
    for j in range(cols):
        obs = mask[:, j]
        m = int(obs.sum())
        if m < k:
            under.append(j)
        if m == 0:
            continue
        co = c[obs]
        gram = co.conj().T @ co
        rhs = co.conj().T @ b[obs, j]
        lam = ridge if ridge is not None else (0.0 if m >= k else 1e-10 * np.trace(gram).real / k)
        try:
            x[:, j] = np.linalg.solve(gram + lam * eye, rhs)
        except np.linalg.LinAlgError:
            lam = max(lam, 1e-10 * np.trace(gram).real / k)
            x[:, j] = np.linalg.solve(gram + lam * eye, rhs)
    if len(under) == cols:
        raise ValueError("every column is underdetermined; too few observations")
    return FactorizedResult(phi=c @ x, x=x, underdetermined=tuple(under))


def recovery_errors(phi_hat: np.ndarray, phi_true: np.ndarray) -> tuple[float, float]:
    """Relative Frobenius error of the matrix and 2-norm error of the target row.

    The target row is row 0 (index outcome 0, rotation 0), which carries the
    combined state ``T psi`` up to the known factor K c.
    """
    phi_hat = np.asarray(phi_hat)
    phi_true = np.asarray(phi_true)
    rel_phi = np.linalg.norm(phi_hat - phi_true) / np.linalg.norm(phi_true)
    rel_target = np.linalg.norm(phi_hat[0] - phi_true[0]) / np.linalg.norm(phi_true[0])
    return float(rel_phi), float(rel_target)


def _random_instance(k: int, n: int, seed: int) -> tuple[CircuitSpec, np.ndarray]:
    gen = rng(seed)
    weights = gen.uniform(0.1, 1.0, k)
    unitaries = tuple(haar_random_unitary(2**n, gen) for _ in range(k))
    spec = CircuitSpec(k=k, n=n, weights=weights, unitaries=unitaries)
    psi = random_state(2**n, gen)
    return spec, psi


_METHODS = ("svp", "als", "factorized")


def sweep(config: dict) -> list[dict]:
    """Run a seeded grid of completion experiments and aggregate the errors.

    Config keys: ``k``, ``n``, ``instances``, ``masks_per_instance``,
    ``methods``, ``seed``, plus either ``fractions`` (with fixed ``sigma``)
    or ``sigmas`` (with fixed ``fraction``) as the swept parameter; optional
    ``mask_mode``/``min_per_column`` and per-solver overrides under ``svp``
    and ``als``.  Returns one aggregate dict per (method, parameter value).
    """
    k = int(config.get("k", 4))
    n = int(config["n"])
    instances = int(config.get("instances", 10))
    masks_per = int(config.get("masks_per_instance", 5))
    methods = list(config.get("methods", ["svp", "factorized"]))
    for m in methods:
        if m not in _METHODS:
            raise ValueError(f"unknown method {m!r}")
    seed = int(config.get("seed", 0))
    mode = config.get("mask_mode", "uniform")
    min_per_column = config.get("min_per_column")
    svp_opts = dict(config.get("svp", {}))
    als_opts = dict(config.get("als", {}))
    if ("fractions" in config) == ("sigmas" in config):
        raise ValueError("config must sweep exactly one of 'fractions' or 'sigmas'")
    if "fractions" in config:
        params = [float(p) for p in config["fractions"]]
        fixed_sigma = float(config.get("sigma", 0.0))
        grid = [(p, p, fixed_sigma) for p in params]
    else:
        params = [float(s) for s in config["sigmas"]]
        fraction = float(config["fraction"])
        grid = [(s, fraction, s) for s in params]

    cases = []
    for inst in range(instances):
        spec, psi = _random_instance(k, n, seed + 7919 * (inst + 1))
        phi = output_matrix(spec, psi)
        c = coefficient_matrix(spec)
        cases.append((phi, c))

    rows = []
    for method in methods:
        for param, fraction, sigma in grid:
            errs_phi, errs_target, iter_counts = [], [], []
            t0 = time.perf_counter()
            for inst, (phi, c) in enumerate(cases):
                for rep in range(masks_per):
                    mask_seed = seed + 104729 * (inst + 1) + 13 * (rep + 1)
                    mask = make_mask(
                        phi.shape[0], phi.shape[1], mask_seed, mode,
                        density=fraction, min_per_column=min_per_column,
                    )
                    entries = observe(phi, mask, sigma, seed=mask_seed + 1)
                    if method == "svp":
                        z, iters = svp_complete(entries, k, **svp_opts)
                    elif method == "als":
                        z, iters = als_complete(entries, k, seed=mask_seed + 2, **als_opts)
                    else:
                        z, iters = factorized_complete(entries, c).phi, 1
                    ep, et = recovery_errors(z, phi)
                    errs_phi.append(ep)
                    errs_target.append(et)
                    iter_counts.append(iters)
            rows.append(
                {
                    "method": method,
                    "param": param,
                    "mean_err_phi": float(np.mean(errs_phi)),
                    "std_err_phi": float(np.std(errs_phi)),
                    "mean_err_target": float(np.mean(errs_target)),
                    "std_err_target": float(np.std(errs_target)),
                    "mean_iters": float(np.mean(iter_counts)),
                    "seconds": time.perf_counter() - t0,
                }
            )
    return rows
