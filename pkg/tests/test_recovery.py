import numpy as np
import pytest

from lcuout.outputs import coefficient_matrix, output_matrix
from lcuout.recovery import (
    als_complete,
    factorized_complete,
    make_mask,
    observe,
    recovery_errors,
    svp_complete,
    sweep,
    _random_instance,
)


def instance(seed=77, k=4, n=8):
    spec, psi = _random_instance(k, n, seed)
    return output_matrix(spec, psi), coefficient_matrix(spec)


# ---- masks and observations -----------------------------------------------

def test_make_mask_uniform():
    mask = make_mask(8, 512, 1, "uniform", density=0.6)
    assert mask.mask.shape == (8, 512)
    assert 0.55 < mask.density < 0.65
    np.testing.assert_array_equal(mask.mask, make_mask(8, 512, 1, "uniform", density=0.6).mask)
    with pytest.raises(ValueError):
        make_mask(8, 512, 1, "uniform")


def test_make_mask_column_guaranteed():
    mask = make_mask(8, 200, 2, "column_guaranteed", density=0.4, min_per_column=4)
    assert mask.mask.sum(axis=0).min() >= 4
    exact = make_mask(8, 200, 3, "column_guaranteed", min_per_column=5)
    np.testing.assert_array_equal(exact.mask.sum(axis=0), np.full(200, 5))
    with pytest.raises(ValueError):
        make_mask(8, 200, 2, "column_guaranteed")
    with pytest.raises(ValueError):
        make_mask(8, 200, 2, "column_guaranteed", min_per_column=9)
    with pytest.raises(ValueError):
        make_mask(8, 200, 2, "nope", density=0.5)


def test_observe_masks_and_noise():
    phi, _ = instance(5, n=6)
    mask = make_mask(8, 64, 6, "uniform", density=0.5)
    ent = observe(phi, mask, 0.0)
    assert ent.count == mask.mask.sum()
    np.testing.assert_array_equal(ent.values[~ent.mask], 0.0)
    np.testing.assert_array_equal(ent.values[ent.mask], phi[ent.mask])
    noisy = observe(phi, mask, 1e-2, seed=7)
    diff = noisy.values[ent.mask] - phi[ent.mask]
    # total complex variance sigma^2 per observed entry
    assert abs(np.mean(np.abs(diff) ** 2) - 1e-4) < 3e-5
    with pytest.raises(ValueError):
        observe(phi, mask, -1.0)
    with pytest.raises(ValueError):
        observe(phi[:4], mask, 0.0)


def test_observe_noise_is_seeded():
    phi, _ = instance(8, n=4)
    mask = make_mask(8, 16, 9, "uniform", density=0.8)
    a = observe(phi, mask, 1e-3, seed=10)
    b = observe(phi, mask, 1e-3, seed=10)
    np.testing.assert_array_equal(a.values, b.values)


# ---- SVP ----------------------------------------------------------------------

def test_svp_fully_observed_converges_immediately():
    phi, _ = instance(11, n=5)
    ent = observe(phi, np.ones_like(phi, dtype=bool), 0.0)
    z, iters = svp_complete(ent, 4)
    assert iters <= 2
    assert recovery_errors(z, phi)[0] < 1e-10


def test_svp_balanced_mask_recovers():
    phi, _ = instance(12)
    mask = make_mask(8, 256, 13, "column_guaranteed", density=0.7, min_per_column=6)
    z, _ = svp_complete(observe(phi, mask, 0.0), 4)
    err_phi, err_target = recovery_errors(z, phi)
    assert err_phi < 1e-8
    assert err_target < 1e-8


def test_svp_stays_bounded_at_sparse_masks():
    # the raw 1/density step would diverge here; the monotone safeguard keeps
    # the iterate in range even though exact completion is hopeless
    phi, _ = instance(14)
    mask = make_mask(8, 256, 15, "uniform", density=0.2)
    z, _ = svp_complete(observe(phi, mask, 0.0), 4)
    err = recovery_errors(z, phi)[0]
    assert np.isfinite(err) and err <= 1.0


def test_svp_uniform_mask_floor_comes_from_deficient_columns():
    # with a plain uniform mask at 0.7 some columns get < K observations and
    # no method can reconstruct them; the error concentrates there
    phi, _ = instance(16)
    mask = make_mask(8, 256, 17, "uniform", density=0.7)
    deficient = mask.mask.sum(axis=0) < 4
    assert deficient.any()
    z, _ = svp_complete(observe(phi, mask, 0.0), 4, max_iters=800)
    err_all = recovery_errors(z, phi)[0]
    err_good = np.linalg.norm((z - phi)[:, ~deficient]) / np.linalg.norm(phi[:, ~deficient])
    assert err_all > 1e-2
    assert err_good < err_all


def test_svp_noise_floor_tracks_sigma():
    phi, _ = instance(18)
    mask = make_mask(8, 256, 19, "column_guaranteed", density=0.7, min_per_column=6)
    errs = []
    for sigma in (1e-4, 1e-2):
        ent = observe(phi, mask, sigma, seed=20)
        z, _ = svp_complete(ent, 4)
        errs.append(recovery_errors(z, phi)[0])
    assert 30 < errs[1] / errs[0] < 300  # two decades of sigma


def test_svp_empty_observations_raise():
    with pytest.raises(ValueError):
        svp_complete(observe(np.zeros((4, 4)), np.zeros((4, 4), dtype=bool), 0.0), 2)


# ---- ALS ----------------------------------------------------------------------

def test_als_balanced_mask_recovers():
    phi, _ = instance(21)
    mask = make_mask(8, 256, 22, "column_guaranteed", density=0.8, min_per_column=6)
    z, iters = als_complete(observe(phi, mask, 0.0), 4, seed=23)
    assert recovery_errors(z, phi)[0] < 1e-6
    assert iters <= 200


def test_als_is_seeded():
    phi, _ = instance(24, n=5)
    mask = make_mask(8, 32, 25, "uniform", density=0.9)
    ent = observe(phi, mask, 0.0)
    z1, _ = als_complete(ent, 4, seed=26)
    z2, _ = als_complete(ent, 4, seed=26)
    np.testing.assert_array_equal(z1, z2)


# ---- factorized -----------------------------------------------------------------

def test_factorized_exact_at_k_observations_per_column():
    phi, c = instance(27)
    mask = make_mask(8, 256, 28, "column_guaranteed", min_per_column=4)
    res = factorized_complete(observe(phi, mask, 0.0), c)
    assert res.underdetermined == ()
    err_phi, err_target = recovery_errors(res.phi, phi)
    assert err_phi < 1e-10
    assert err_target < 1e-10


def test_factorized_flags_underdetermined_columns():
    phi, c = instance(29, n=4)
    mask = make_mask(8, 16, 30, "column_guaranteed", min_per_column=4).mask.copy()
    mask[:, 3] = False
    mask[:2, 3] = True  # two observations < K
    res = factorized_complete(observe(phi, mask, 0.0), c)
    assert res.underdetermined == (3,)
    # the well-determined columns are still exact
    good = np.ones(16, dtype=bool)
    good[3] = False
    assert np.linalg.norm((res.phi - phi)[:, good]) < 1e-10


def test_factorized_all_underdetermined_raises():
    phi, c = instance(31, n=4)
    mask = make_mask(8, 16, 32, "column_guaranteed", min_per_column=2)
    with pytest.raises(ValueError):
        factorized_complete(observe(phi, mask, 0.0), c)


def test_factorized_explicit_ridge_biases():
    phi, c = instance(33, n=6)
    mask = make_mask(8, 64, 34, "column_guaranteed", min_per_column=6)
    ent = observe(phi, mask, 0.0)
    clean = recovery_errors(factorized_complete(ent, c).phi, phi)[0]
    biased = recovery_errors(factorized_complete(ent, c, ridge=1e-2).phi, phi)[0]
    assert clean < 1e-10 < biased


def test_factorized_noise_grows_linearly():
    phi, c = instance(35)
    mask = make_mask(8, 256, 36, "column_guaranteed", density=0.7, min_per_column=6)
    errs = []
    for sigma in (1e-4, 1e-3):
        ent = observe(phi, mask, sigma, seed=37)
        errs.append(recovery_errors(factorized_complete(ent, c).phi, phi)[0])
    assert 5 < errs[1] / errs[0] < 20


def test_recovery_errors_oracle():
    true = np.array([[3.0, 4.0], [0.0, 1.0]], dtype=complex)
    hat = np.array([[3.0, 4.0], [1.0, 1.0]], dtype=complex)
    err_phi, err_target = recovery_errors(hat, true)
    assert abs(err_phi - 1.0 / np.sqrt(26)) < 1e-12
    assert err_target == 0.0  # row 0 untouched


# ---- sweep ----------------------------------------------------------------------

def test_sweep_fraction_grid_structure():
    rows = sweep({
        "k": 4, "n": 4, "instances": 2, "masks_per_instance": 2, "seed": 38,
        "methods": ["svp", "factorized"], "fractions": [0.6, 0.9], "sigma": 0.0,
    })
    assert len(rows) == 4
    assert {r["method"] for r in rows} == {"svp", "factorized"}
    assert all(set(r) >= {"method", "param", "mean_err_phi", "std_err_phi",
                          "mean_err_target", "std_err_target", "mean_iters", "seconds"}
               for r in rows)
    params = sorted(r["param"] for r in rows if r["method"] == "svp")
    assert params == [0.6, 0.9]


def test_sweep_is_deterministic_apart_from_timing():
    config = {
        "k": 2, "n": 3, "instances": 2, "masks_per_instance": 1, "seed": 39,
        "methods": ["factorized"], "sigmas": [1e-3], "fraction": 0.9,
        "mask_mode": "column_guaranteed", "min_per_column": 2,
    }
    a = sweep(config)
    b = sweep(config)
    for ra, rb in zip(a, b):
        assert ra["mean_err_phi"] == rb["mean_err_phi"]
        assert ra["std_err_target"] == rb["std_err_target"]


def test_sweep_rejects_bad_configs():
    base = {"k": 2, "n": 2, "instances": 1, "masks_per_instance": 1, "seed": 0}
    with pytest.raises(ValueError):
        sweep({**base, "methods": ["svp"]})  # neither fractions nor sigmas
    with pytest.raises(ValueError):
        sweep({**base, "methods": ["svp"], "fractions": [0.5], "sigmas": [0.1], "fraction": 0.5})
    with pytest.raises(ValueError):
        sweep({**base, "methods": ["magic"], "fractions": [0.5]})
