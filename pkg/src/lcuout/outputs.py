"""The rank-K output matrix Phi = C X and its exact linear inversion.

Stacking all 2K outcome states row-wise gives ``Phi = C @ X`` where C is the
2K x K coefficient matrix determined by the mixing layer and the rotation
weights, and row t of X is ``U_t psi``.  C has orthogonal columns of norm
``1/sqrt(K)``, so ``X = K C^dag Phi`` inverts the map and the combined state
``T psi = sum_t alpha_t U_t psi`` is one further row combination away.

Also provides plain-text round-trip serialization for the complex matrices:
CSV cells are ``re+imj`` at 17 significant digits (bit-exact), JSON carries
explicit shape metadata.
"""

from __future__ import annotations

import json

import numpy as np

from .circuit import CircuitSpec, OutcomeStates, ShotDataset, mixing_layers, output_states

__all__ = [
    "coefficient_matrix",
    "empirical_magnitudes",
    "extract_target",
    "invert_with_C",
    "matrix_from_csv",
    "matrix_from_json",
    "matrix_to_csv",
    "matrix_to_json",
    "output_matrix",
    "row_matrix",
]


def coefficient_matrix(spec: CircuitSpec) -> np.ndarray:
    """2K x K matrix so that stacking the outcome states factors as C @ X.

    Row ``r * K + i`` holds the coefficient multiplying ``U_t psi`` in
    phi[i, r].  For Hadamard mixing this is ``s[i, t] w_t / K`` on top and
    ``s[i, t] r_t / K`` below, with ``s[i, t] = +-1``; the columns are
    orthogonal with squared norm 1/K for every supported mixing.
    """
    g1, g2 = mixing_layers(spec)
    w = spec.weights
    r = np.sqrt(1.0 - w * w)
    if spec.variant == "cyclic":
        r = -r
    prep = g1[:, 0]
    c = np.vstack([g2 * (prep * w), g2 * (prep * r)])
    return c if np.iscomplexobj(c) else c.astype(float)


def row_matrix(spec: CircuitSpec, psi: np.ndarray) -> np.ndarray:
    """K x N matrix whose row t is ``U_t psi``."""
    psi = np.asarray(psi, dtype=complex)
    return np.stack([u @ psi for u in spec.unitaries])


def output_matrix(spec: CircuitSpec, psi: np.ndarray) -> np.ndarray:
    """2K x N matrix of all outcome states, assembled from the direct sums.

    Built via :func:`output_states` rather than ``C @ X`` so the factored
    form stays an independent cross-check.
    """
    return np.array(output_states(spec, psi).states)


def invert_with_C(c: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Recover X from Phi = C X by solving the normal equations.

    For the orthogonal-column C produced by :func:`coefficient_matrix` this
    reduces to ``X = K C^dag Phi``; a general full-column-rank C gets the
    least-squares pseudo-solution.  Rank-deficient C is rejected.
    """
    c = np.asarray(c)
    gram = c.conj().T @ c
    svals = np.linalg.svd(gram, compute_uv=False)
    if svals[-1] <= 1e-12 * svals[0]:
        raise ValueError("coefficient matrix is numerically rank deficient")
    return np.linalg.solve(gram, c.conj().T @ np.asarray(phi, dtype=complex))


def extract_target(x: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    """Combine the rows of X into ``T psi = sum_t alpha_t U_t psi``."""
    alpha = np.asarray(alpha, dtype=float)
    x = np.asarray(x)
    if x.shape[0] != alpha.shape[0]:
        raise ValueError(f"{alpha.shape[0]} coefficients for {x.shape[0]} rows")
    return alpha @ x


def empirical_magnitudes(dataset: ShotDataset) -> tuple[np.ndarray, np.ndarray]:
    """Per-outcome empirical probabilities and raw counts from sampled shots."""
    if dataset.shots < 1:
        raise ValueError("empty dataset")
    counts = np.array(dataset.counts)
    return counts / dataset.shots, counts


# -- plain-text serialization -------------------------------------------------

def _fmt(z: complex) -> str:
    return f"{z.real:.17g}{z.imag:+.17g}j"


def matrix_to_csv(m: np.ndarray) -> str:
    """Comma-separated complex matrix, one row per line, cells ``re+imj``."""
    m = np.asarray(m, dtype=complex)
    return "\n".join(",".join(_fmt(z) for z in row) for row in m) + "\n"


def matrix_from_csv(text: str) -> np.ndarray:
    """Parse :func:`matrix_to_csv` output; lines starting with '#' are skipped."""
    rows = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        rows.append([complex(cell) for cell in line.split(",")])
    if not rows:
        raise ValueError("no matrix rows found")
    return np.array(rows, dtype=complex)


def matrix_to_json(m: np.ndarray) -> str:
    """JSON document with shape metadata and [re, im] entry pairs."""
    m = np.asarray(m, dtype=complex)
    data = [[[float(z.real), float(z.imag)] for z in row] for row in m]
    return json.dumps({"shape": list(m.shape), "data": data})


def matrix_from_json(text: str) -> np.ndarray:
    doc = json.loads(text)
    if "data" not in doc or "shape" not in doc:
        raise ValueError("matrix document needs 'shape' and 'data' keys")
    arr = np.array(doc["data"], dtype=float)
    if arr.ndim != 3 or arr.shape[2] != 2 or list(arr.shape[:2]) != list(doc["shape"]):
        raise ValueError("shape metadata disagrees with payload")
    return arr[..., 0] + 1j * arr[..., 1]
