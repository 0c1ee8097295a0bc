"""Weight-hiding trapdoor protocol built on the all-outcomes circuit.

The secret key is the weight vector of the rotation gates (plus, in the
secret-mixing scheme, the seed of a hidden mixing unitary whose first row
encodes the normalized weights).  Publishing only outcome magnitudes makes
recovering the weights a phase-retrieval problem, while the key holder can
rebuild the coefficient matrix C and invert the linear map exactly.

Also included: the linear attack that breaks the Hadamard scheme when full
complex amplitudes leak, a projected-gradient phase-retrieval probe for the
magnitudes-only setting, and the involution encrypt/decrypt demo (squaring
the circuit cancels the weights whenever every U_t is an involution).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .circuit import CircuitSpec, circuit_unitary, mixing_layers, output_states, sample_shots
from .linalg import haar_random_unitary, hadamard_matrix, rng
from .outputs import coefficient_matrix, extract_target, invert_with_C, output_matrix
from .recovery import ObservedEntries, factorized_complete

__all__ = [
    "AttackResult",
    "EvalOutput",
    "InversionResult",
    "PhaseRetrievalResult",
    "PublicParams",
    "SecretKey",
    "eval_trapdoor",
    "hadamard_attack",
    "invert_with_key",
    "involution_encrypt_decrypt",
    "key_from_json",
    "key_to_json",
    "keygen",
    "mixing_from_key",
    "phase_retrieval_attack",
]

_SCHEMES = ("hadamard", "secret_mixing")


@dataclass(frozen=True)
class PublicParams:
    """Everything the evaluating party publishes: sizes, unitaries, scheme."""

    k: int
    n: int
    unitaries: tuple[np.ndarray, ...]
    scheme: str = "hadamard"
    variant: str = "reflection"

    def __post_init__(self):
        if self.scheme not in _SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")


@dataclass(frozen=True)
class SecretKey:
    """Rotation weights plus, for secret mixing, the mixing-completion seed."""

    scheme: str
    weights: np.ndarray
    gamma: int | None = None


def keygen(k: int, scheme: str = "hadamard", seed: int = 0) -> SecretKey:
    """Draw a key: weights uniform on [0.1, 1.0], unit-normalized for secret mixing.

    The secret-mixing scheme also draws gamma, the seed of the Haar-random
    completion of the mixing unitary below its weight-encoding first row.
    """
    if scheme not in _SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    if k < 1 or k & (k - 1):
        raise ValueError(f"the mixing layer needs a power-of-two k, got {k}")
    gen = rng(seed)
    weights = gen.uniform(0.1, 1.0, k)
    gamma = None
    if scheme == "secret_mixing":
        weights = weights / np.linalg.norm(weights)
        gamma = int(gen.integers(0, 2**63))
    return SecretKey(scheme=scheme, weights=weights, gamma=gamma)


def key_to_json(key: SecretKey) -> str:
    """Serialize the key; the derived mixing matrix itself is never written."""
    return json.dumps(
        {"scheme": key.scheme, "weights": list(map(float, key.weights)), "gamma": key.gamma}
    )


def key_from_json(text: str) -> SecretKey:
    doc = json.loads(text)
    return SecretKey(
        scheme=doc["scheme"],
        weights=np.array(doc["weights"], dtype=float),
        gamma=doc.get("gamma"),
    )


def mixing_from_key(key: SecretKey) -> np.ndarray:
    """Secret mixing unitary: first row is the normalized weight vector.

    A real Householder reflection maps the first basis vector onto the
    weights; the remaining rows are mixed by a Haar-random unitary drawn
    from gamma, exercising the full freedom below the first row.
    """
    if key.scheme != "secret_mixing":
        raise ValueError("only secret-mixing keys carry a mixing matrix")
    k = key.weights.shape[0]
    u = key.weights / np.linalg.norm(key.weights)
    if k == 1:
        return np.array([[1.0 + 0j]])
    v = np.eye(k)[0] - u
    nv = np.linalg.norm(v)
    householder = np.eye(k) if nv < 1e-12 else np.eye(k) - 2.0 * np.outer(v, v) / nv**2
    w = np.zeros((k, k), dtype=complex)
    w[0, 0] = 1.0
    w[1:, 1:] = haar_random_unitary(k - 1, rng(key.gamma))
    return w @ householder


def _key_spec(key: SecretKey, pub: PublicParams) -> CircuitSpec:
    if key.scheme != pub.scheme:
        raise ValueError(f"key scheme {key.scheme!r} does not match public {pub.scheme!r}")
    if key.weights.shape != (pub.k,):
        raise ValueError("key length does not match the public parameters")
    if key.scheme == "secret_mixing":
        return CircuitSpec(
            k=pub.k, n=pub.n, weights=key.weights, unitaries=pub.unitaries,
            mixing="secret", mixing_matrix=mixing_from_key(key), variant=pub.variant,
        )
    return CircuitSpec(
        k=pub.k, n=pub.n, weights=key.weights, unitaries=pub.unitaries, variant=pub.variant
    )


@dataclass(frozen=True)
class EvalOutput:
    """Published magnitudes |Phi|^2 per outcome, exact or shot-estimated."""

    magnitudes: np.ndarray
    shots: int | None


def eval_trapdoor(
    key: SecretKey,
    pub: PublicParams,
    psi: np.ndarray,
    shots: int | None = None,
    seed: int = 0,
) -> EvalOutput:
    """Run the circuit and publish outcome magnitudes (never the phases)."""
    spec = _key_spec(key, pub)
    if shots is None:
        out = output_states(spec, psi)
        return EvalOutput(magnitudes=np.abs(out.states) ** 2, shots=None)
    data = sample_shots(spec, psi, shots, seed)
    return EvalOutput(magnitudes=data.counts / shots, shots=shots)


@dataclass(frozen=True)
class InversionResult:
    x: np.ndarray
    target: np.ndarray
    underdetermined: tuple[int, ...]


def invert_with_key(
    key: SecretKey, pub: PublicParams, obs: ObservedEntries | np.ndarray
) -> InversionResult:
    """Key-holder inversion: rebuild C, complete/solve Phi = C X, combine rows.

    ``obs`` is either the exact complex output matrix or partial observed
    entries; the partial case runs the per-column factorized completion.
    Returns the recovered X, the combined state sum_t w_t U_t psi, and any
    columns with too few observations to be pinned down.
    """
    spec = _key_spec(key, pub)
    c = coefficient_matrix(spec)
    if isinstance(obs, ObservedEntries):
        result = factorized_complete(obs, c)
        x, under = result.x, result.underdetermined
    else:
        x, under = invert_with_C(c, np.asarray(obs, dtype=complex)), ()
    return InversionResult(x=x, target=extract_target(x, key.weights), underdetermined=under)


@dataclass(frozen=True)
class AttackResult:
    weights: np.ndarray
    recoverable: np.ndarray
    residual: float


def hadamard_attack(pub: PublicParams, phi: np.ndarray) -> AttackResult:
    """Break the Hadamard scheme given full complex amplitudes.

    Multiplying the row blocks by the inverse Hadamard mixing gives
    ``diag(w) X`` and ``diag(r) X``; the entrywise ratio at the strongest
    column of each row yields r_t/w_t and hence w_t, up to the sign
    convention w_t = +1 when r_t = 0.  The returned residual is the relative
    misfit of the rank-K factorization rebuilt from the recovered weights —
    against magnitude-only data it stays large, which is the point.
    """
    if pub.scheme != "hadamard":
        raise ValueError("this linear attack applies to the Hadamard scheme")
    phi = np.asarray(phi, dtype=complex)
    k = pub.k
    if phi.shape[0] != 2 * k:
        raise ValueError(f"expected 2K = {2 * k} rows, got {phi.shape[0]}")
    s = hadamard_matrix(k) * np.sqrt(k)
    y0 = s.T @ phi[:k]  # equals diag(w) X: s^T s = K I and phi = (1/K) s diag(w) X
    y1 = s.T @ phi[k:]
    weights = np.zeros(k)
    recoverable = np.ones(k, dtype=bool)
    scale = np.sqrt(np.abs(y0) ** 2 + np.abs(y1) ** 2)
    tiny = 1e-14 * max(scale.max(), 1e-300)
    for t in range(k):
        m = int(np.argmax(scale[t]))
        if scale[t, m] <= tiny:
            recoverable[t] = False
            continue
        a, b = y0[t, m], y1[t, m]
        if abs(a) >= abs(b):
            ratio = (b / a).real  # r/w, sign tracks sign(w) since r >= 0
            sign = 1.0 if ratio >= 0 else -1.0
            weights[t] = sign / np.sqrt(1.0 + ratio * ratio)
        else:
            ratio = (a / b).real  # w/r
            weights[t] = ratio / np.sqrt(1.0 + ratio * ratio)
    spec_hat = CircuitSpec(k=k, n=pub.n, weights=weights, unitaries=pub.unitaries, variant=pub.variant)
    c_hat = coefficient_matrix(spec_hat)
    x_hat = invert_with_C(c_hat, phi)
    residual = float(np.linalg.norm(c_hat @ x_hat - phi) / np.linalg.norm(phi))
    return AttackResult(weights=weights, recoverable=recoverable, residual=residual)


@dataclass(frozen=True)
class PhaseRetrievalResult:
    weights: np.ndarray
    state: np.ndarray
    objective: float


def _attack_c_and_grad(pub: PublicParams, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    spec = CircuitSpec(k=pub.k, n=pub.n, weights=w, unitaries=pub.unitaries, variant=pub.variant)
    c = coefficient_matrix(spec)
    g1, g2 = mixing_layers(spec)
    prep = g1[:, 0]
    r = np.sqrt(np.maximum(1.0 - w * w, 1e-24))
    drdw = -w / r if pub.variant == "reflection" else w / r
    dc = np.vstack([g2 * prep, g2 * (prep * drdw)])
    return c, dc


def phase_retrieval_attack(
    pub: PublicParams,
    magnitudes: np.ndarray,
    psi: np.ndarray | None = None,
    restarts: int = 8,
    iters: int = 300,
    seed: int = 0,
    init: tuple[np.ndarray, np.ndarray] | None = None,
) -> PhaseRetrievalResult:
    """Projected gradient descent on the magnitude misfit (difficulty probe).

    Minimizes ``| |C(w) X(z)|^2 - p |_F^2`` over the weights and the single
    free system row z (rows of X are tied through the public unitaries:
    ``X_t = U_t U_1^dag z``).  When ``psi`` is granted to the attacker, z is
    fixed at ``U_1 psi`` and only the weights move.  Weights stay clamped to
    [-1, 1]; restarts are seeded.  Nothing here is expected to succeed for
    K > 1 — the returned objective documents how hard the landscape is.
    """
    if pub.scheme != "hadamard":
        raise ValueError("the phase-retrieval probe targets the Hadamard scheme")
    p = np.asarray(magnitudes, dtype=float)
    k, big_n = pub.k, 2**pub.n
    if p.shape != (2 * k, big_n):
        raise ValueError(f"expected magnitudes of shape {(2 * k, big_n)}, got {p.shape}")
    links = [u @ pub.unitaries[0].conj().T for u in pub.unitaries]
    clamp = 1.0 - 1e-12

    def objective_parts(w, z):
        c, dc = _attack_c_and_grad(pub, w)
        x = np.stack([a @ z for a in links])
        y = c @ x
        resid = np.abs(y) ** 2 - p
        f = float(np.sum(resid**2))
        return f, c, dc, x, y, resid

    def gradients(c, dc, x, y, resid):
        gc = resid * y.conj()
        grad_w = 4.0 * np.sum((dc * (gc @ x.T)).real, axis=0)
        rows = c.T.conj() @ (resid * y)
        grad_z = 2.0 * sum(a.conj().T @ rows[t] for t, a in enumerate(links))
        return grad_w, grad_z

    gen = rng(seed)
    col_energy = np.sqrt(np.maximum(p.sum(axis=0), 0.0))
    top_energy = np.sqrt(min(max(p[:k].sum(), 0.0), 1.0))
    starts = []
    if init is not None:
        starts.append((np.asarray(init[0], dtype=float).copy(), np.asarray(init[1], dtype=complex).copy()))
    energy_w = np.full(k, top_energy if k == 1 else 0.6)
    starts.append((energy_w, col_energy.astype(complex)))
    while len(starts) < restarts + 1:
        w0 = gen.uniform(0.15, 0.95, k)
        phase = np.exp(2j * np.pi * gen.random(big_n))
        starts.append((w0, col_energy * phase))

    best = None
    for w, z in starts:
        if psi is not None:
            z = pub.unitaries[0] @ np.asarray(psi, dtype=complex)
        w = np.clip(w, -clamp, clamp)
        f, c, dc, x, y, resid = objective_parts(w, z)
        step = 0.1
        for _ in range(iters):
            grad_w, grad_z = gradients(c, dc, x, y, resid)
            moved = False
            for _ in range(40):
                w_new = np.clip(w - step * grad_w, -clamp, clamp)
                z_new = z if psi is not None else z - step * grad_z
                f_new, c2, dc2, x2, y2, r2 = objective_parts(w_new, z_new)
                if f_new < f:
                    w, z, f, c, dc, x, y, resid = w_new, z_new, f_new, c2, dc2, x2, y2, r2
                    step *= 1.25
                    moved = True
                    break
                step *= 0.5
            if not moved or f < 1e-24:
                break
        if best is None or f < best[2]:
            best = (w, z, f)
    return PhaseRetrievalResult(weights=best[0], state=best[1], objective=best[2])


def involution_encrypt_decrypt(
    pub: PublicParams, psi: np.ndarray, key: SecretKey, key2: SecretKey
) -> float:
    """Round-trip fidelity of the involution cipher for two independent keys.

    When every public unitary is an involution the squared circuit is the
    identity regardless of the weights, so applying a circuit twice decrypts
    whatever it encrypted.  The demo encrypts/decrypts with ``key`` and then
    with ``key2`` and returns the overlap of the final state with the
    extended input — the weight cancellation makes it 1 for any key pair.
    """
    if pub.scheme != "hadamard" or pub.variant != "reflection":
        raise ValueError("the involution cipher needs the Hadamard reflection circuit")
    big_n = 2**pub.n
    for t, u in enumerate(pub.unitaries):
        if np.linalg.norm(u @ u - np.eye(big_n)) > 1e-10:
            raise ValueError(f"unitary {t} is not an involution")
    v1 = circuit_unitary(_key_spec(key, pub))
    v2 = circuit_unitary(_key_spec(key2, pub))
    psi = np.asarray(psi, dtype=complex)
    ext = np.zeros(2 * pub.k * big_n, dtype=complex)
    ext[:big_n] = psi  # index 0, rotation 0 block
    result = v2 @ (v2 @ (v1 @ (v1 @ ext)))
    return float(np.abs(np.vdot(ext, result)) ** 2)
