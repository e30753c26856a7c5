"""Network contracts: shapes, determinism, counts, stitching, CRF head."""

import numpy as np
import pytest

from crfgan.models import make_bundle
from crfgan.models.bundle import sample_latent
from crfgan.models.config import (DESK32, DESK64, G2_STACK, halo_width,
                                  pull_back, upsample_factor)
from crfgan.tensor import Tensor, no_grad, ops


@pytest.fixture(scope="module")
def bundle(tiny_cfg):
    return make_bundle(tiny_cfg, seed=0)


def test_network_shapes(tiny_cfg, bundle, rng):
    n = 2
    z = sample_latent(np.random.default_rng(1), n, tiny_cfg)
    with no_grad():
        emb = bundle.g1.forward(z)
        assert emb.shape == (n, tiny_cfg.emb_channels, tiny_cfg.emb_size,
                             tiny_cfg.emb_size, tiny_cfg.emb_size)
        s = tiny_cfg.slab_extent
        slab = ops.slice_axis(emb, 2, 0, s)
        vox = bundle.g2.forward(slab)
        u = tiny_cfg.upsample
        assert vox.shape == (n, 1, s * u, tiny_cfg.resolution,
                             tiny_cfg.resolution)
        logit = bundle.d.forward(vox)
        assert logit.shape == (n,)
        back = bundle.he.forward(vox)
        assert back.shape == slab.shape
        e = bundle.crf.logit(emb)
        assert e.shape == (n,)


def test_output_ranges(tiny_cfg, bundle):
    z = sample_latent(np.random.default_rng(3), 2, tiny_cfg)
    x = bundle.generate_full(z)
    assert x.min() >= -1.0 and x.max() <= 1.0   # tanh output


def test_seed_determinism(tiny_cfg):
    za = sample_latent(np.random.default_rng(5), 2, tiny_cfg)
    a = make_bundle(tiny_cfg, seed=11).generate_full(za)
    b = make_bundle(tiny_cfg, seed=11).generate_full(za)
    np.testing.assert_array_equal(a, b)
    c = make_bundle(tiny_cfg, seed=12).generate_full(za)
    assert not np.array_equal(a, c)


def test_generate_full_restores_training_mode(tiny_cfg, bundle):
    bundle.train()
    z = sample_latent(np.random.default_rng(2), 1, tiny_cfg)
    bundle.generate_full(z)
    assert bundle.training
    bundle.eval()
    bundle.generate_full(z)
    assert not bundle.training


@pytest.mark.parametrize("seed", [0, 1])
def test_stitched_equals_full(tiny_cfg, seed):
    b = make_bundle(tiny_cfg, seed=seed)
    z = sample_latent(np.random.default_rng(seed + 20), 2, tiny_cfg)
    full = b.generate_full(z)
    stitched = b.generate_stitched(z)
    np.testing.assert_allclose(stitched, full, atol=1e-6, rtol=1e-5)


def test_stitched_equals_full_float64(tiny_cfg):
    cfg = tiny_cfg.with_precision("float64")
    b = make_bundle(cfg, seed=3)
    z = sample_latent(np.random.default_rng(30), 2, cfg)
    np.testing.assert_allclose(b.generate_stitched(z), b.generate_full(z),
                               atol=1e-12, rtol=1e-12)


def test_halo_width_against_receptive_field_probe():
    """Perturb one embedding voxel; the voxel-space footprint must stay
    within the interval arithmetic's prediction."""
    u = upsample_factor(G2_STACK)
    assert u == 4
    h = halo_width(G2_STACK, extent=2)
    lo, hi = pull_back(G2_STACK, 0, u * 2 - 1)
    assert hi - lo + 1 <= 2 + 2 * h


def test_param_count_orderings(tiny_cfg):
    for cfg in (DESK32, DESK64):
        crf = make_bundle(cfg, 0).count_parameters()
        base = make_bundle(cfg, 0, baseline=True).count_parameters()
        assert crf["total"] < base["total"]
        # counts are pure functions of the config
        again = make_bundle(cfg, 99).count_parameters()
        assert again["total"] == crf["total"]


def test_count_parameters_totals(bundle):
    counts = bundle.count_parameters()
    nets_sum = sum(v for k, v in counts.items() if k != "total")
    assert counts["total"] == nets_sum
    manual = sum(int(np.prod(p.data.shape)) for p in bundle.parameters())
    assert counts["total"] == manual


def test_groups_partition_parameters(tiny_cfg):
    for baseline in (False, True):
        b = make_bundle(tiny_cfg, 0, baseline=baseline)
        grouped = [p for ps in b.groups().values() for p in ps]
        assert len(grouped) == len(set(id(p) for p in grouped))
        assert set(id(p) for p in grouped) == set(
            id(p) for p in b.parameters())


def test_crf_energy_symmetric_in_pairwise_terms(tiny_cfg, bundle, rng):
    """Mirroring the embedding along an axis flips neighbor order; the
    squared-difference and product pairwise forms are invariant to it."""
    cfg = tiny_cfg
    e = rng.standard_normal((1, cfg.emb_channels, cfg.emb_size,
                             cfg.emb_size, cfg.emb_size)).astype(np.float32)
    crf = bundle.crf
    with no_grad():
        g = crf.pool_patches(Tensor(e)).numpy()
        gm = crf.pool_patches(Tensor(e[:, :, ::-1].copy())).numpy()
    np.testing.assert_allclose(gm, g[:, :, ::-1], rtol=1e-6)

    def pairwise_only(emb_arr):
        with no_grad():
            total = crf.energy(Tensor(emb_arr)).numpy()
            gp = crf.pool_patches(Tensor(emb_arr))
            u = crf.unary2.forward(ops.relu(crf.unary1.forward(gp)))
            unary = ops.sum_(u, axis=(1, 2, 3, 4)).numpy()
        return total - unary

    p1 = pairwise_only(e)
    p2 = pairwise_only(e[:, :, ::-1].copy())
    np.testing.assert_allclose(p1, p2, rtol=1e-5, atol=1e-6)


def test_crf_score_is_sigmoid_of_negative_energy(tiny_cfg, bundle, rng):
    e = rng.standard_normal((2, tiny_cfg.emb_channels, tiny_cfg.emb_size,
                             tiny_cfg.emb_size, tiny_cfg.emb_size)
                            ).astype(np.float32)
    with no_grad():
        energy = bundle.crf.energy(Tensor(e)).numpy()
        score = bundle.crf.score(Tensor(e)).numpy()
    np.testing.assert_allclose(score, 1.0 / (1.0 + np.exp(energy)),
                               rtol=1e-5)


def test_spectral_norm_bounds_discriminator_weights(tiny_cfg):
    """After normalization the top singular value of each D weight is ~1."""
    b = make_bundle(tiny_cfg, 0)
    x = Tensor(np.random.default_rng(0).standard_normal(
        (2, 1, tiny_cfg.slab_voxels, tiny_cfg.resolution,
         tiny_cfg.resolution)).astype(np.float32))
    for _ in range(50):   # converge the power iterations
        with no_grad():
            b.d.forward(x)
    # effective check: doubling weights must not double the logit scale
    with no_grad():
        y1 = b.d.forward(x).numpy()
    for p in b.d.parameters():
        np.multiply(p.data, 2.0, out=p.data)
    with no_grad():
        for _ in range(50):
            b.d.forward(x)
        y2 = b.d.forward(x).numpy()
    assert np.max(np.abs(y2)) < 4.0 * max(np.max(np.abs(y1)), 1.0)


def test_baseline_bundle_has_low_res_branch(tiny_cfg):
    b = make_bundle(tiny_cfg, 0, baseline=True)
    assert hasattr(b, "g_low") and hasattr(b, "d_low")
    groups = b.groups()
    assert "Dlow" in groups and "CRF" not in groups
    c = make_bundle(tiny_cfg, 0)
    gc = c.groups()
    assert "CRF" in gc and "Dlow" not in gc
