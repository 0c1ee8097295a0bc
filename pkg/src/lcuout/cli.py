"""Deterministic command-line front end.

Every command takes ``--config PATH`` (JSON), ``--seed INT``, and
``--out PREFIX``; outputs are CSV/JSON files whose bodies depend only on the
config and seeds.  CSV files carry '#'-prefixed header lines recording the
tool version, the config hash, and the seeds; wall-clock timings go into
trailing '#' comments so re-runs stay byte-identical outside comments.

Exit codes: 0 success, 1 for a failed verification check, 2 usage/config error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .circuit import CircuitSpec, circuit_unitary, output_states, success_probabilities
from .linalg import numerical_rank, random_state
from .outputs import (
    coefficient_matrix,
    extract_target,
    invert_with_C,
    matrix_from_csv,
    matrix_to_csv,
    output_matrix,
    row_matrix,
)
from .recovery import (
    als_complete,
    factorized_complete,
    make_mask,
    observe,
    recovery_errors,
    svp_complete,
    sweep,
)
from .structure import csd_assemble, involution_check, shuffle, similarity_check, singular_multiset_check
from .trapdoor import (
    PublicParams,
    eval_trapdoor,
    hadamard_attack,
    invert_with_key,
    involution_encrypt_decrypt,
    key_from_json,
    key_to_json,
    keygen,
    phase_retrieval_attack,
)

SWEEP_COLUMNS = (
    "method",
    "param",
    "mean_err_phi",
    "std_err_phi",
    "mean_err_target",
    "std_err_target",
    "mean_iters",
)


def _config_hash(config: dict) -> str:
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def _fmt_cell(value) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _target(path) -> Path:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    return out


def _write_csv(path, command, config, columns, rows, comments=()):
    lines = [
        f"# lcuout {__version__}",
        f"# command: {command}",
        f"# config-hash: {_config_hash(config)}",
        ",".join(columns),
    ]
    lines += [",".join(_fmt_cell(v) for v in row) for row in rows]
    lines += [f"# {c}" for c in comments]
    _target(path).write_text("\n".join(lines) + "\n")


def _write_matrix_csv(path, command, config, matrix):
    header = f"# lcuout {__version__}\n# command: {command}\n# config-hash: {_config_hash(config)}\n"
    _target(path).write_text(header + matrix_to_csv(matrix))


def _write_json(path, doc):
    _target(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _load_config(path, default):
    if path is None:
        return dict(default)
    return json.loads(Path(path).read_text())


def _spec_from_config(config: dict) -> CircuitSpec:
    return CircuitSpec.from_json(json.dumps(config))


def _pub_from_config(config: dict) -> tuple[PublicParams, CircuitSpec]:
    spec = _spec_from_config(
        {
            "K": config["K"],
            "n": config["n"],
            "weights": [0.0] * config["K"],
            "unitaries": config["unitaries"],
            "mixing": "hadamard",
            "variant": config.get("variant", "reflection"),
        }
    )
    pub = PublicParams(
        k=spec.k,
        n=spec.n,
        unitaries=spec.unitaries,
        scheme=config.get("scheme", "hadamard"),
        variant=spec.variant,
    )
    return pub, spec


# -- verify -------------------------------------------------------------------

DEFAULT_VERIFY = {
    "K": 4,
    "n": 3,
    "weights": [1.0, 0.8, 0.5, 0.3],
    "unitaries": {"kind": "haar", "seed": 7},
    "mixing": "hadamard",
    "variant": "reflection",
}


def cmd_verify(config: dict, seed: int, out: str) -> int:
    """Run the structural check battery on one circuit spec."""
    checks = []

    def add(name, residual, threshold=1e-10, skipped=False):
        checks.append(
            {
                "name": name,
                "residual": None if residual is None else float(residual),
                "threshold": threshold,
                "skipped": skipped,
                "pass": bool(skipped or (residual is not None and residual < threshold)),
            }
        )

    spec = None
    try:
        spec = _spec_from_config(config)
        add("spec-validation", 0.0)
    except (ValueError, KeyError) as exc:
        checks.append(
            {"name": "spec-validation", "error": str(exc), "threshold": None, "skipped": False, "pass": False}
        )
    if spec is not None:
        dim = spec.extended_dim
        v = circuit_unitary(spec)
        add("unitarity", np.linalg.norm(v.conj().T @ v - np.eye(dim)))
        sh = shuffle(spec)
        add("block-structure", sh.block_residual)
        if spec.mixing == "secret":
            add("similarity", None, skipped=True)
            add("singular-multiset", None, skipped=True)
            add("csd", None, skipped=True)
            add("involution", None, skipped=True)
        else:
            add("similarity", similarity_check(sh))
            add("singular-multiset", max(singular_multiset_check(sh)))
            if spec.variant == "reflection" and np.all(spec.weights >= 0):
                csd = csd_assemble(spec)
                res = max(
                    np.linalg.norm(csd.q1 @ np.diag(csd.sigma_w) @ csd.q2.conj().T - sh.a),
                    np.linalg.norm(csd.q1 @ np.diag(csd.sigma_r) @ csd.q2.conj().T - sh.b),
                    float(np.abs(csd.sigma_w**2 + csd.sigma_r**2 - 1.0).max()),
                )
                add("csd", res)
            else:
                add("csd", None, skipped=True)
            if spec.variant == "reflection":
                gen = np.random.Generator(np.random.Philox(key=seed + 1))
                alt_w = gen.uniform(0.1, 1.0, spec.k)
                spec_alt = CircuitSpec(
                    k=spec.k, n=spec.n, weights=alt_w, unitaries=spec.unitaries,
                    mixing=spec.mixing, variant=spec.variant,
                )
                add("involution", max(involution_check(spec, spec_alt)))
            else:
                add("involution", None, skipped=True)
        psi = random_state(spec.big_n, seed)
        phi = output_matrix(spec, psi)
        c = coefficient_matrix(spec)
        x = row_matrix(spec, psi)
        add("factorization", np.linalg.norm(phi - c @ x), 1e-12)
        add("column-orthogonality", np.abs(c.conj().T @ c - np.eye(spec.k) / spec.k).max(), 1e-12)
        add("rank", 0.0 if numerical_rank(phi) <= spec.k else 1.0, 0.5)
    passed = all(c["pass"] for c in checks)
    report = {"tool": f"lcuout {__version__}", "config_hash": _config_hash(config), "seed": seed, "checks": checks, "passed": passed}
    _write_json(f"{out}_verify.json", report)
    for c in checks:
        status = "SKIP" if c.get("skipped") else ("PASS" if c["pass"] else "FAIL")
        res = c.get("residual")
        print(f"{status:4s} {c['name']}" + (f" residual={res:.3e}" if res is not None else ""))
    return 0 if passed else 1


# -- figure commands ----------------------------------------------------------

DEFAULT_FIG2 = {
    "k": 4,
    "n": 4,
    "unitary_seed": 202,
    "psi_seed": 303,
    "a_grid": [round(0.1 + 0.05 * i, 2) for i in range(19)],
}


def cmd_fig2(config: dict, seed: int, out: str) -> int:
    """Success probability of the all-outcomes circuit vs the standard route.

    Coefficients are (1, .., 1, a, .., a) with the first half pinned at 1;
    the a-grid sweeps the second half.
    """
    k, n = int(config["k"]), int(config["n"])
    half = k // 2
    spec0 = _spec_from_config(
        {"K": k, "n": n, "weights": [1.0] * k, "unitaries": {"kind": "haar", "seed": config["unitary_seed"]}}
    )
    psi = random_state(2**n, int(config["psi_seed"]))
    rows = []
    for a in config["a_grid"]:
        alpha = np.array([1.0] * half + [float(a)] * (k - half))
        spec = CircuitSpec(k=k, n=n, weights=alpha / np.abs(alpha).max(), unitaries=spec0.unitaries)
        p00, p0_any, p_std = success_probabilities(spec, psi, alpha)
        p00_sim = output_states(spec, psi).probability(0, 0)
        rows.append((float(a), p00_sim, p00, p0_any, p_std))
    _write_csv(
        f"{out}_fig2.csv", "fig2", config,
        ("a", "p00_sim", "p00_analytic", "p0any_sim", "p_std_analytic"), rows,
    )
    return 0


DEFAULT_FIG3 = {
    "k": 4,
    "sizes": [256, 1024],
    "fractions": [0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95],
    "sigma": 0.0,
    "instances": 10,
    "masks_per_instance": 5,
    "methods": ["svp", "factorized"],
    "seed": 515,
}


def _sweep_to_csv(path, command, config, rows):
    body = [
        (r["method"], r["param"], r["mean_err_phi"], r["std_err_phi"],
         r["mean_err_target"], r["std_err_target"], r["mean_iters"])
        for r in rows
    ]
    comments = [f"seconds: method={r['method']} param={_fmt_cell(r['param'])} {r['seconds']:.3f}" for r in rows]
    _write_csv(path, command, config, SWEEP_COLUMNS, body, comments)


def cmd_fig3(config: dict, seed: int | None, out: str) -> int:
    """Recovery error vs observation fraction, one CSV per system size."""
    config = dict(config)
    if seed is not None:
        config["seed"] = seed
    for size in config["sizes"]:
        n = int(size).bit_length() - 1
        if 2**n != int(size):
            raise ValueError(f"sizes must be powers of two, got {size}")
        sub = {key: v for key, v in config.items() if key != "sizes"}
        sub["n"] = n
        rows = sweep(sub)
        _sweep_to_csv(f"{out}_fig3_N{size}.csv", "fig3", config, rows)
    return 0


DEFAULT_FIG4 = {
    "k": 4,
    "n": 8,
    "fraction": 0.7,
    "sigmas": [1e-4, 1e-3, 1e-2],
    "instances": 10,
    "masks_per_instance": 5,
    "methods": ["svp", "factorized"],
    "mask_mode": "column_guaranteed",
    "min_per_column": 6,
    "seed": 616,
}


def cmd_fig4(config: dict, seed: int | None, out: str) -> int:
    """Recovery error vs noise level at a fixed observation fraction."""
    config = dict(config)
    if seed is not None:
        config["seed"] = seed
    rows = sweep(config)
    _sweep_to_csv(f"{out}_fig4.csv", "fig4", config, rows)
    return 0


# -- trapdoor -----------------------------------------------------------------

DEFAULT_TRAPDOOR = {
    "K": 4,
    "n": 4,
    "scheme": "hadamard",
    "variant": "reflection",
    "unitaries": {"kind": "haar", "seed": 42},
    "psi_seed": 99,
}

DEFAULT_INVOLUTION = {
    "K": 4,
    "n": 2,
    "scheme": "hadamard",
    "variant": "reflection",
    "unitaries": {"kind": "pauli_strings", "data": ["XZ", "ZI", "IX", "YY"]},
    "psi_seed": 5,
}


def cmd_trapdoor(action: str, config: dict, seed: int, out: str, args) -> int:
    if action == "keygen":
        key = keygen(int(config["K"]), config.get("scheme", "hadamard"), seed)
        _target(f"{out}_key.json").write_text(key_to_json(key) + "\n")
        print(f"wrote {out}_key.json")
        return 0

    pub, _ = _pub_from_config(config)
    psi = random_state(2**pub.n, int(config.get("psi_seed", 0)))

    if action == "eval":
        key = key_from_json(Path(args.key).read_text())
        if args.dump == "amplitudes":
            spec = _key_spec_for(key, pub)
            _write_matrix_csv(f"{out}_amplitudes.csv", "trapdoor eval", config, output_matrix(spec, psi))
            print(f"wrote {out}_amplitudes.csv")
        else:
            evl = eval_trapdoor(key, pub, psi, shots=args.shots, seed=seed)
            _write_matrix_csv(f"{out}_magnitudes.csv", "trapdoor eval", config, evl.magnitudes)
            print(f"wrote {out}_magnitudes.csv")
        return 0

    if action == "invert":
        key = key_from_json(Path(args.key).read_text())
        spec = _key_spec_for(key, pub)
        phi_true = output_matrix(spec, psi)
        if args.phi is not None:
            obs = matrix_from_csv(Path(args.phi).read_text())
        elif args.density is not None:
            mask = make_mask(
                2 * pub.k, 2**pub.n, seed, mode="column_guaranteed",
                density=args.density, min_per_column=pub.k,
            )
            obs = observe(phi_true, mask, args.sigma, seed=seed + 1)
        else:
            obs = phi_true
        result = invert_with_key(key, pub, obs)
        truth = extract_target(row_matrix(spec, psi), key.weights)
        err = float(np.linalg.norm(result.target - truth) / np.linalg.norm(truth))
        _write_matrix_csv(f"{out}_target.csv", "trapdoor invert", config, result.target[None, :])
        _write_json(
            f"{out}_invert.json",
            {
                "target_error": err,
                "underdetermined_columns": list(result.underdetermined),
                "config_hash": _config_hash(config),
            },
        )
        print(f"target error {err:.3e}")
        return 0

    if action == "attack":
        dump = matrix_from_csv(Path(args.phi).read_text())
        result = hadamard_attack(pub, dump)
        doc = {
            "recovered_weights": [float(w) for w in result.weights],
            "recoverable": [bool(b) for b in result.recoverable],
            "residual": result.residual,
            "success": bool(result.residual < 1e-6),
            "config_hash": _config_hash(config),
        }
        if args.key is not None:
            key = key_from_json(Path(args.key).read_text())
            doc["weight_error"] = float(np.abs(result.weights - key.weights).max())
        _write_json(f"{out}_attack.json", doc)
        print(f"attack residual {result.residual:.3e} success={doc['success']}")
        return 0

    if action == "demo-involution":
        key = keygen(pub.k, "hadamard", seed)
        key2 = keygen(pub.k, "hadamard", seed + 1)
        fid = involution_encrypt_decrypt(pub, psi, key, key2)
        _write_json(f"{out}_involution.json", {"fidelity": fid, "config_hash": _config_hash(config)})
        print(f"round-trip fidelity {fid:.12f}")
        return 0
    raise SystemExit(2)


def _key_spec_for(key, pub):
    from .trapdoor import _key_spec

    return _key_spec(key, pub)


# -- completion ---------------------------------------------------------------

DEFAULT_COMPLETE = {
    "k": 4,
    "n": 8,
    "fraction": 0.7,
    "sigma": 0.0,
    "mask_mode": "column_guaranteed",
    "min_per_column": 4,
    "seed": 77,
}


def cmd_complete(method: str, config: dict, seed: int | None, out: str) -> int:
    """One seeded completion run; reports errors and iteration count."""
    from .recovery import _random_instance

    config = dict(config)
    if seed is not None:
        config["seed"] = seed
    base = int(config["seed"])
    k, n = int(config["k"]), int(config["n"])
    spec, psi = _random_instance(k, n, base)
    phi = output_matrix(spec, psi)
    mask = make_mask(
        2 * k, 2**n, base + 1, mode=config.get("mask_mode", "uniform"),
        density=config.get("fraction"), min_per_column=config.get("min_per_column"),
    )
    entries = observe(phi, mask, float(config.get("sigma", 0.0)), seed=base + 2)
    t0 = time.perf_counter()
    comments = []
    if method == "svp":
        z, iters = svp_complete(entries, k, **config.get("svp", {}))
    elif method == "als":
        z, iters = als_complete(entries, k, seed=base + 3, **config.get("als", {}))
    else:
        result = factorized_complete(entries, coefficient_matrix(spec))
        z, iters = result.phi, 1
        comments.append(f"underdetermined-columns: {len(result.underdetermined)}")
    err_phi, err_target = recovery_errors(z, phi)
    row = {
        "method": method,
        "param": float(config.get("fraction", 0.0)),
        "mean_err_phi": err_phi,
        "std_err_phi": 0.0,
        "mean_err_target": err_target,
        "std_err_target": 0.0,
        "mean_iters": float(iters),
        "seconds": time.perf_counter() - t0,
    }
    _sweep_to_csv(f"{out}_complete_{method}.csv", f"complete {method}", config, [row])
    for c in comments:
        print(c)
    print(f"{method}: err_phi={err_phi:.3e} err_target={err_target:.3e} iters={iters}")
    return 0


# -- entry point ----------------------------------------------------------------

def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="lcuout", description=__doc__)
    parser.add_argument("--version", action="version", version=f"lcuout {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", default=None, help="JSON config path")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default="lcuout", help="output file prefix")

    common(sub.add_parser("verify", help="structural checks on a circuit spec"))
    common(sub.add_parser("fig2", help="success-probability comparison sweep"))
    common(sub.add_parser("fig3", help="recovery error vs observation fraction"))
    common(sub.add_parser("fig4", help="recovery error vs noise level"))

    trap = sub.add_parser("trapdoor", help="weight-hiding protocol commands")
    trap_sub = trap.add_subparsers(dest="action", required=True)
    for action in ("keygen", "eval", "invert", "attack", "demo-involution"):
        p = trap_sub.add_parser(action)
        common(p)
        if action in ("eval", "invert", "attack"):
            p.add_argument("--key", default=None, help="key JSON path")
        if action == "eval":
            p.add_argument("--shots", type=int, default=None)
            p.add_argument("--dump", choices=("magnitudes", "amplitudes"), default="magnitudes")
        if action in ("invert", "attack"):
            p.add_argument("--phi", default=None, help="matrix CSV path")
        if action == "invert":
            p.add_argument("--density", type=float, default=None)
            p.add_argument("--sigma", type=float, default=0.0)

    comp = sub.add_parser("complete", help="single matrix-completion run")
    comp_sub = comp.add_subparsers(dest="method", required=True)
    for method in ("svp", "als", "factorized"):
        common(comp_sub.add_parser(method))

    args = parser.parse_args(argv)
    try:
        if args.command == "verify":
            return cmd_verify(_load_config(args.config, DEFAULT_VERIFY), args.seed or 0, args.out)
        if args.command == "fig2":
            return cmd_fig2(_load_config(args.config, DEFAULT_FIG2), args.seed, args.out)
        if args.command == "fig3":
            return cmd_fig3(_load_config(args.config, DEFAULT_FIG3), args.seed, args.out)
        if args.command == "fig4":
            return cmd_fig4(_load_config(args.config, DEFAULT_FIG4), args.seed, args.out)
        if args.command == "trapdoor":
            default = DEFAULT_INVOLUTION if args.action == "demo-involution" else DEFAULT_TRAPDOOR
            config = _load_config(args.config, default)
            if args.action in ("eval", "invert") and args.key is None:
                parser.error(f"trapdoor {args.action} requires --key")
            if args.action == "attack" and args.phi is None:
                parser.error("trapdoor attack requires --phi")
            return cmd_trapdoor(args.action, config, args.seed or 0, args.out, args)
        if args.command == "complete":
            return cmd_complete(args.method, _load_config(args.config, DEFAULT_COMPLETE), args.seed, args.out)
    except (OSError, json.JSONDecodeError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    raise SystemExit(2)


if __name__ == "__main__":
    sys.exit(main())
