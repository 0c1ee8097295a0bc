"""LCU circuit with a mixed index register and a single rotation qubit.

The circuit acts on index (K outcomes) x rotation (2) x system (N = 2^n)
registers: a mixing layer on the index register, a block-diagonal select
operator applying ``R_t (x) U_t`` controlled on the index, and a second
mixing layer.  Instead of post-selecting one ancilla outcome, every outcome
``(i, r)`` is kept; the unnormalized system states are

    phi[i, r] = sum_t G2[i, t] * G1[t, 0] * <r|R_t|0> * U_t psi

which for Hadamard mixing reduces to ``(1/K) sum_t s[i,t] w_t U_t psi`` on
the rotation-0 branch and the matching ``r_t`` combination on rotation-1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .linalg import dft_matrix, haar_random_unitary, hadamard_matrix, kron, rng

__all__ = [
    "CircuitSpec",
    "OutcomeStates",
    "ShotDataset",
    "circuit_unitary",
    "mixing_layers",
    "output_states",
    "plusminus_states",
    "rotation_gate",
    "sample_shots",
    "scale_coefficients",
    "select_operator",
    "success_probabilities",
]

_MIXINGS = ("hadamard", "dft", "secret")
_VARIANTS = ("reflection", "cyclic")
_ATOL = 1e-10


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class CircuitSpec:
    """Full description of one circuit instance.

    Attributes:
        k: number of combined unitaries (power of two for Hadamard mixing).
        n: number of system qubits; the system dimension is ``N = 2**n``.
        weights: K real rotation weights, each in [-1, 1].
        unitaries: K unitary matrices of shape (N, N).
        mixing: "hadamard", "dft", or "secret" (requires ``mixing_matrix``).
        mixing_matrix: K x K unitary used when ``mixing == "secret"``.
        variant: "reflection" (symmetric rotation gate) or "cyclic".
    """

    k: int
    n: int
    weights: np.ndarray
    unitaries: tuple[np.ndarray, ...]
    mixing: str = "hadamard"
    mixing_matrix: np.ndarray | None = None
    variant: str = "reflection"
    unitary_source: dict | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"need at least one unitary, got k={self.k}")
        if self.n < 1:
            raise ValueError(f"need at least one system qubit, got n={self.n}")
        if self.mixing not in _MIXINGS:
            raise ValueError(f"unknown mixing {self.mixing!r}")
        if self.variant not in _VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.mixing == "hadamard" and self.k & (self.k - 1):
            raise ValueError(f"Hadamard mixing needs a power-of-two k, got {self.k}")
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (self.k,):
            raise ValueError(f"expected {self.k} weights, got shape {w.shape}")
        if np.any(np.abs(w) > 1 + 1e-12):
            raise ValueError("weights must lie in [-1, 1]")
        object.__setattr__(self, "weights", _readonly(np.clip(w, -1.0, 1.0)))
        if len(self.unitaries) != self.k:
            raise ValueError(f"expected {self.k} unitaries, got {len(self.unitaries)}")
        big_n = self.big_n
        us = []
        for t, u in enumerate(self.unitaries):
            u = np.asarray(u, dtype=complex)
            if u.shape != (big_n, big_n):
                raise ValueError(f"unitary {t} has shape {u.shape}, expected {(big_n, big_n)}")
            if not np.allclose(u.conj().T @ u, np.eye(big_n), atol=_ATOL):
                raise ValueError(f"matrix {t} is not unitary")
            us.append(_readonly(u))
        object.__setattr__(self, "unitaries", tuple(us))
        if self.mixing == "secret":
            if self.mixing_matrix is None:
                raise ValueError("secret mixing requires an explicit mixing matrix")
            m = np.asarray(self.mixing_matrix, dtype=complex)
            if m.shape != (self.k, self.k):
                raise ValueError(f"mixing matrix has shape {m.shape}, expected {(self.k, self.k)}")
            if not np.allclose(m.conj().T @ m, np.eye(self.k), atol=_ATOL):
                raise ValueError("mixing matrix is not unitary")
            object.__setattr__(self, "mixing_matrix", _readonly(m))
        elif self.mixing_matrix is not None:
            raise ValueError(f"mixing matrix only applies to secret mixing, not {self.mixing!r}")

    @property
    def big_n(self) -> int:
        """System dimension N = 2**n."""
        return 2**self.n

    @property
    def extended_dim(self) -> int:
        """Dimension of the full index x rotation x system space."""
        return 2 * self.k * self.big_n

    def to_json(self) -> str:
        """Serialize to the interchange JSON schema."""
        doc: dict = {"K": self.k, "n": self.n, "weights": list(map(float, self.weights))}
        if self.unitary_source is not None:
            doc["unitaries"] = self.unitary_source
        else:
            doc["unitaries"] = {"kind": "explicit", "data": [_mat_to_json(u) for u in self.unitaries]}
        doc["mixing"] = self.mixing
        if self.mixing == "secret":
            doc["mixing_matrix"] = _mat_to_json(self.mixing_matrix)
        doc["variant"] = self.variant
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "CircuitSpec":
        """Load a spec from the interchange JSON schema."""
        doc = json.loads(text)
        k, n = int(doc["K"]), int(doc["n"])
        source = doc["unitaries"]
        unitaries = _unitaries_from_json(source, k, 2**n)
        mixing = doc.get("mixing", "hadamard")
        mixing_matrix = None
        if mixing == "secret":
            if "mixing_matrix" not in doc:
                raise ValueError("secret mixing requires a mixing_matrix entry")
            mixing_matrix = _mat_from_json(doc["mixing_matrix"])
        return cls(
            k=k,
            n=n,
            weights=np.array(doc["weights"], dtype=float),
            unitaries=unitaries,
            mixing=mixing,
            mixing_matrix=mixing_matrix,
            variant=doc.get("variant", "reflection"),
            unitary_source=source if source.get("kind") != "explicit" else None,
        )


def _mat_to_json(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m)]


def _mat_from_json(data: list) -> np.ndarray:
    arr = np.array(data, dtype=float)
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise ValueError("matrix entries must be [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def pauli_string_matrix(label: str) -> np.ndarray:
    """Tensor product of single-qubit Paulis, e.g. ``"XZI"`` on 3 qubits."""
    m = np.array([[1.0 + 0j]])
    for ch in label:
        if ch not in _PAULI:
            raise ValueError(f"unknown Pauli letter {ch!r} in {label!r}")
        m = kron(m, _PAULI[ch])
    return m


def permutation_matrix(images: Sequence[int]) -> np.ndarray:
    """Unitary sending basis vector ``e_j`` to ``e_images[j]``."""
    images = list(images)
    size = len(images)
    if sorted(images) != list(range(size)):
        raise ValueError("not a permutation of 0..N-1")
    m = np.zeros((size, size), dtype=complex)
    m[images, np.arange(size)] = 1.0
    return m


def _unitaries_from_json(source: dict, k: int, big_n: int) -> tuple[np.ndarray, ...]:
    kind = source.get("kind")
    if kind == "haar":
        gen = rng(int(source["seed"]))
        return tuple(haar_random_unitary(big_n, gen) for _ in range(k))
    if kind == "pauli_strings":
        return tuple(pauli_string_matrix(s) for s in source["data"])
    if kind == "permutation":
        return tuple(permutation_matrix(p) for p in source["data"])
    if kind == "explicit":
        return tuple(_mat_from_json(m) for m in source["data"])
    raise ValueError(f"unknown unitary source kind {kind!r}")


def rotation_gate(w: float, variant: str = "reflection") -> np.ndarray:
    """Real orthogonal 2x2 gate with ``<0|R|0> = w`` and ``r = sqrt(1 - w^2)``.

    The reflection form is ``[[w, r], [r, -w]]`` (symmetric, determinant -1);
    the cyclic form ``[[w, r], [-r, w]]`` is the proper rotation, which only
    changes the sign of the rotation-1 branch amplitude.
    """
    w = float(w)
    if not -1.0 <= w <= 1.0:
        raise ValueError(f"weight must lie in [-1, 1], got {w}")
    r = np.sqrt(1.0 - w * w)
    if variant == "reflection":
        return np.array([[w, r], [r, -w]])
    if variant == "cyclic":
        return np.array([[w, r], [-r, w]])
    raise ValueError(f"unknown variant {variant!r}")


def scale_coefficients(alpha: np.ndarray) -> tuple[float, np.ndarray]:
    """Rescale real coefficients by ``c = max_t |alpha_t|`` so max |beta| = 1."""
    alpha = np.asarray(alpha, dtype=float)
    c = float(np.max(np.abs(alpha))) if alpha.size else 0.0
    if c == 0.0:
        raise ValueError("all coefficients vanish; nothing to combine")
    return c, alpha / c


def mixing_layers(spec: CircuitSpec) -> tuple[np.ndarray, np.ndarray]:
    """Index-register layers ``(G1, G2)`` so that ``V = (G2 . ) M (G1 . )``.

    Hadamard uses the same symmetric orthogonal matrix twice; DFT uses F
    then its inverse; secret mixing prepares the uniform superposition with
    a Hadamard layer and mixes the outcomes with the secret unitary W.
    """
    if spec.mixing == "hadamard":
        h = hadamard_matrix(spec.k)
        return h, h
    if spec.mixing == "dft":
        f = dft_matrix(spec.k)
        return f, f.conj().T
    return hadamard_matrix(spec.k), spec.mixing_matrix


def select_operator(spec: CircuitSpec) -> np.ndarray:
    """Block-diagonal select operator ``M = sum_t |t><t| (x) R_t (x) U_t``."""
    big_n = spec.big_n
    block = 2 * big_n
    m = np.zeros((spec.k * block, spec.k * block), dtype=complex)
    for t in range(spec.k):
        r = rotation_gate(spec.weights[t], spec.variant)
        m[t * block : (t + 1) * block, t * block : (t + 1) * block] = kron(r, spec.unitaries[t])
    return m


def circuit_unitary(spec: CircuitSpec) -> np.ndarray:
    """Dense circuit unitary ``V = (G2 x I_2N) M (G1 x I_2N)``.

    For ``k == 1`` the mixing layers are the scalar 1 and ``V`` is just the
    select operator on rotation x system.
    """
    g1, g2 = mixing_layers(spec)
    eye = np.eye(2 * spec.big_n)
    m = select_operator(spec)
    return kron(g2, eye) @ m @ kron(g1, eye)


@dataclass(frozen=True)
class OutcomeStates:
    """Unnormalized post-measurement system states for all 2K ancilla outcomes.

    Row ``r * k + i`` of ``states`` holds phi[i, r]; ``probabilities`` are the
    squared 2-norms of the rows and sum to 1 for a normalized input.
    """

    k: int
    states: np.ndarray
    probabilities: np.ndarray

    def state(self, i: int, r: int) -> np.ndarray:
        return self.states[r * self.k + i]

    def probability(self, i: int, r: int) -> float:
        return float(self.probabilities[r * self.k + i])


def _check_state(psi: np.ndarray, big_n: int) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (big_n,):
        raise ValueError(f"state has shape {psi.shape}, expected {(big_n,)}")
    if abs(np.linalg.norm(psi) - 1.0) > _ATOL:
        raise ValueError("input state must be normalized")
    return psi


def output_states(spec: CircuitSpec, psi: np.ndarray) -> OutcomeStates:
    """Evaluate all outcome states directly from the closed-form sums.

    This path never builds the full circuit unitary; it applies each U_t to
    psi once and combines the rows with the mixing/rotation coefficients.
    """
    psi = _check_state(psi, spec.big_n)
    g1, g2 = mixing_layers(spec)
    rows = np.stack([u @ psi for u in spec.unitaries])
    w = spec.weights
    r = np.sqrt(1.0 - w * w)
    if spec.variant == "cyclic":
        r = -r
    prep = g1[:, 0]
    states = np.vstack([(g2 * (prep * w)) @ rows, (g2 * (prep * r)) @ rows])
    probs = np.einsum("ij,ij->i", states, states.conj()).real
    return OutcomeStates(k=spec.k, states=_readonly(states), probabilities=_readonly(probs))


def success_probabilities(
    spec: CircuitSpec, psi: np.ndarray, alpha: np.ndarray
) -> tuple[float, float, float]:
    """Post-selection probabilities for realizing ``T = sum_t alpha_t U_t``.

    Returns ``(p00, p0_any, p_std)``: the all-zero outcome probability of
    this circuit, the probability that the index register alone returns 0,
    and the standard prepare-select-unprepare success probability
    ``|T psi|^2 / (sum_t |alpha_t|)^2`` for comparison.
    """
    if spec.mixing != "hadamard":
        raise ValueError("closed-form success probabilities assume Hadamard mixing")
    psi = _check_state(psi, spec.big_n)
    c, beta = scale_coefficients(alpha)
    if not np.allclose(beta, spec.weights, atol=1e-12):
        raise ValueError("spec weights must equal the rescaled coefficients")
    t_psi = sum(a * (u @ psi) for a, u in zip(np.asarray(alpha, dtype=float), spec.unitaries))
    target_sq = float(np.vdot(t_psi, t_psi).real)
    p00 = target_sq / (c * spec.k) ** 2
    p_std = target_sq / float(np.sum(np.abs(alpha))) ** 2
    out = output_states(spec, psi)
    if abs(p00 - out.probability(0, 0)) > 1e-12:
        raise AssertionError("closed-form p00 disagrees with simulation")
    p0_any = out.probability(0, 0) + out.probability(0, 1)
    return p00, p0_any, p_std


@dataclass(frozen=True)
class ShotDataset:
    """Measurement counts over the full (i, r, k) outcome grid.

    ``counts[r * k + i, m]`` is the number of shots that returned index i,
    rotation bit r, and system basis state m; rows follow the same layout as
    :class:`OutcomeStates`.
    """

    k: int
    shots: int
    counts: np.ndarray

    def count(self, i: int, r: int, m: int) -> int:
        return int(self.counts[r * self.k + i, m])


def sample_shots(spec: CircuitSpec, psi: np.ndarray, shots: int, seed: int) -> ShotDataset:
    """Draw measurement outcomes by inverse-CDF sampling of the exact distribution."""
    if shots < 1:
        raise ValueError(f"need at least one shot, got {shots}")
    out = output_states(spec, psi)
    p = (np.abs(out.states) ** 2).ravel()
    cdf = np.cumsum(p)
    cdf[-1] = 1.0  # guard the top bin against float round-off
    draws = np.searchsorted(cdf, rng(seed).random(shots), side="right")
    counts = np.bincount(draws, minlength=p.size).reshape(out.states.shape)
    return ShotDataset(k=spec.k, shots=shots, counts=_readonly(counts))


def plusminus_states(spec: CircuitSpec, psi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """States seen when the rotation qubit is read in the |+>/|-> basis.

    Returns ``(plus, minus)`` arrays of shape (K, N):
    ``(phi[i,0] +- phi[i,1]) / sqrt(2)`` for each index outcome i.
    """
    out = output_states(spec, psi)
    top, bottom = out.states[: spec.k], out.states[spec.k :]
    return (top + bottom) / np.sqrt(2), (top - bottom) / np.sqrt(2)
