"""Data pipeline: MetaImage IO, HU windowing, resizing, splits, phantoms."""

import numpy as np
import pytest

from crfgan.data.metaimage import Volume, read_metaimage, write_metaimage
from crfgan.data.phantom import (AIR_HU, BACKGROUND_HU, LUNG_HU, PhantomSpec,
                                 make_phantom, phantom_batch)
from crfgan.data.preprocess import (HU_MAX, HU_MIN, preprocess,
                                    resize_trilinear, window_normalize,
                                    zero_blank_slices)
from crfgan.data.split import split_dataset
from crfgan.errors import DataError, DomainError


# ---------------------------------------------------------------- metaimage

HAND_HEADER = """ObjectType = Image
NDims = 3
BinaryData = True
BinaryDataByteOrderMSB = False
CompressedData = False
DimSize = 3 2 4
ElementSpacing = 0.7 0.8 2.5
ElementType = MET_SHORT
ElementDataFile = hand.raw
"""


def _write_hand_fixture(tmp_path):
    """Header text and payload bytes written directly, no library help."""
    payload = np.arange(24, dtype="<i2") * 100 - 1000
    (tmp_path / "hand.mhd").write_text(HAND_HEADER, encoding="ascii")
    (tmp_path / "hand.raw").write_bytes(payload.tobytes())
    return payload


def test_read_hand_written_fixture(tmp_path):
    payload = _write_hand_fixture(tmp_path)
    vol = read_metaimage(str(tmp_path / "hand.mhd"))
    # DimSize is x y z; voxel array is (z, y, x)
    assert vol.shape == (4, 2, 3)
    assert vol.spacing == (2.5, 0.8, 0.7)
    assert vol.domain == "HU"
    np.testing.assert_array_equal(vol.voxels.ravel(), payload)
    # x varies fastest in the file
    assert vol.voxels[0, 0, 1] == payload[1]
    assert vol.voxels[0, 1, 0] == payload[3]
    assert vol.voxels[1, 0, 0] == payload[6]


def test_round_trip_is_byte_stable(tmp_path):
    _write_hand_fixture(tmp_path)
    a, b = tmp_path / "a", tmp_path / "b"
    a.mkdir(), b.mkdir()
    vol = read_metaimage(str(tmp_path / "hand.mhd"))
    write_metaimage(vol, str(a / "vol.mhd"))
    again = read_metaimage(str(a / "vol.mhd"))
    write_metaimage(again, str(b / "vol.mhd"))
    assert (a / "vol.mhd").read_bytes() == (b / "vol.mhd").read_bytes()
    assert (a / "vol.raw").read_bytes() == (b / "vol.raw").read_bytes()
    # payload bytes survive untouched from the hand fixture
    assert (a / "vol.raw").read_bytes() == (tmp_path / "hand.raw").read_bytes()
    np.testing.assert_array_equal(again.voxels, vol.voxels)
    assert again.spacing == vol.spacing


def test_big_endian_payload_is_decoded(tmp_path):
    payload = np.arange(24, dtype=">i2")
    header = HAND_HEADER.replace("BinaryDataByteOrderMSB = False",
                                 "BinaryDataByteOrderMSB = True")
    (tmp_path / "hand.mhd").write_text(header, encoding="ascii")
    (tmp_path / "hand.raw").write_bytes(payload.tobytes())
    vol = read_metaimage(str(tmp_path / "hand.mhd"))
    np.testing.assert_array_equal(vol.voxels.ravel(),
                                  payload.astype(np.int16))
    assert vol.voxels.dtype.byteorder in ("<", "=")


def test_float_volume_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    vol = Volume(voxels=rng.normal(size=(4, 5, 6)).astype(np.float32),
                 spacing=(1.0, 1.5, 2.0))
    write_metaimage(vol, str(tmp_path / "f.mhd"))
    back = read_metaimage(str(tmp_path / "f.mhd"))
    np.testing.assert_array_equal(back.voxels, vol.voxels)
    assert back.spacing == vol.spacing
    assert "MET_FLOAT" in (tmp_path / "f.mhd").read_text()


@pytest.mark.parametrize("mutate,needle", [
    (lambda h: h.replace("NDims = 3\n", ""), "NDims"),
    (lambda h: h.replace("NDims = 3", "NDims = 2"), "NDims"),
    (lambda h: h.replace("CompressedData = False", "CompressedData = True"),
     "compressed"),
    (lambda h: h.replace("MET_SHORT", "MET_DOUBLE"), "ElementType"),
    (lambda h: h.replace("DimSize = 3 2 4", "DimSize = 3 2 40"), "payload"),
    (lambda h: h.replace("hand.raw", "LOCAL"), "LOCAL"),
    (lambda h: h + "garbage line without equals\n", "malformed"),
])
def test_malformed_headers_raise(tmp_path, mutate, needle):
    _write_hand_fixture(tmp_path)
    (tmp_path / "hand.mhd").write_text(mutate(HAND_HEADER), encoding="ascii")
    with pytest.raises(DataError, match=needle):
        read_metaimage(str(tmp_path / "hand.mhd"))


def test_volume_requires_three_dims():
    with pytest.raises(DataError):
        Volume(voxels=np.zeros((3, 3)), spacing=(1.0, 1.0, 1.0))
    with pytest.raises(DataError):
        Volume(voxels=np.zeros((3, 3, 3)), spacing=(1.0, 1.0, 1.0),
               domain="celsius")


# ------------------------------------------------------------- preprocessing

def test_window_endpoints_exact():
    got = window_normalize(np.array([-1024.0, 600.0, -212.0]))
    assert abs(got[0] - (-1.0)) <= 1e-12
    assert abs(got[1] - 1.0) <= 1e-12
    assert abs(got[2] - 0.0) <= 1e-12


def test_window_clips_out_of_range():
    got = window_normalize(np.array([-5000.0, 4000.0]))
    assert got[0] == -1.0
    assert got[1] == 1.0


def test_window_is_affine_inside_range():
    hu = np.linspace(HU_MIN, HU_MAX, 101)
    got = window_normalize(hu)
    expected = 2.0 * (hu - HU_MIN) / (HU_MAX - HU_MIN) - 1.0
    np.testing.assert_allclose(got, expected, rtol=0, atol=1e-15)
    assert np.all(np.diff(got) > 0)


def test_blank_slices_zeroed_before_windowing():
    hu = np.full((4, 3, 3), 100.0)
    hu[1] = -1024.0           # all-air slice
    hu[2, 0, 0] = -1024.0     # partially air: untouched
    out = zero_blank_slices(hu)
    assert np.all(out[1] == 0.0)
    assert out[2, 0, 0] == -1024.0
    assert np.all(out[0] == 100.0)
    # through the full pipeline the blank slice maps to the image of 0 HU,
    # not to -1
    vol = Volume(voxels=hu, spacing=(1.0, 1.0, 1.0))
    res = preprocess(vol, (4, 4, 4), dtype=np.float64)
    mid = window_normalize(np.array([0.0]))[0]
    assert abs(res.voxels[1].mean() - mid) < 1e-6


def test_blank_threshold_is_strict():
    hu = np.full((2, 2, 2), -1000.0)
    out = zero_blank_slices(hu)
    np.testing.assert_array_equal(out, hu)
    out2 = zero_blank_slices(hu - 0.5)
    assert np.all(out2 == 0.0)


def test_trilinear_reproduces_linear_ramp():
    """Linear interpolation of a trilinear function is exact."""
    src_shape, dst_shape = (5, 4, 6), (9, 7, 11)
    z, y, x = np.meshgrid(*[np.arange(s, dtype=np.float64)
                            for s in src_shape], indexing="ij")
    src = 2.0 * z + 3.0 * y + 5.0 * x + 7.0
    got = resize_trilinear(src, dst_shape)

    pos = [np.arange(t, dtype=np.float64) * (s - 1) / (t - 1)
           for s, t in zip(src_shape, dst_shape)]
    zz, yy, xx = np.meshgrid(*pos, indexing="ij")
    expected = 2.0 * zz + 3.0 * yy + 5.0 * xx + 7.0
    np.testing.assert_allclose(got, expected, rtol=0, atol=1e-12)


def test_trilinear_identity_and_corners():
    rng = np.random.default_rng(0)
    src = rng.normal(size=(6, 5, 7))
    np.testing.assert_array_equal(resize_trilinear(src, (6, 5, 7)), src)
    up = resize_trilinear(src, (11, 9, 13))
    # corner alignment pins all eight corners
    for zi, ze in ((0, 0), (-1, -1)):
        for yi, ye in ((0, 0), (-1, -1)):
            for xi, xe in ((0, 0), (-1, -1)):
                assert abs(up[zi, yi, xi] - src[ze, ye, xe]) < 1e-12


def test_trilinear_downsample_stays_in_hull():
    rng = np.random.default_rng(1)
    src = rng.uniform(-1.0, 1.0, size=(16, 16, 16))
    down = resize_trilinear(src, (7, 7, 7))
    assert down.min() >= src.min() - 1e-12
    assert down.max() <= src.max() + 1e-12


def test_trilinear_rejects_bad_targets():
    with pytest.raises(DomainError):
        resize_trilinear(np.zeros((4, 4, 4)), (4, 4, 1))
    with pytest.raises(DataError):
        resize_trilinear(np.zeros((4, 4)), (4, 4, 4))


def test_preprocess_output_domain_and_range():
    rng = np.random.default_rng(2)
    hu = rng.uniform(-1200.0, 800.0, size=(10, 12, 14))
    vol = Volume(voxels=hu, spacing=(2.0, 1.0, 1.0))
    out = preprocess(vol, (8, 8, 8))
    assert out.domain == "normalized"
    assert out.voxels.dtype == np.float32
    assert out.shape == (8, 8, 8)
    assert out.voxels.min() >= -1.0 - 1e-6
    assert out.voxels.max() <= 1.0 + 1e-6


def test_preprocess_rejects_bad_inputs():
    ok = np.zeros((4, 4, 4))
    with pytest.raises(DataError):
        preprocess(Volume(voxels=ok, spacing=(1, 1, 1), domain="normalized"),
                   (4, 4, 4))
    bad = ok.copy()
    bad[0, 0, 0] = np.nan
    with pytest.raises(DataError):
        preprocess(Volume(voxels=bad, spacing=(1, 1, 1)), (4, 4, 4))


# -------------------------------------------------------------------- splits

def test_split_888_gives_800_88():
    train, val = split_dataset(list(range(888)), train_frac=0.9, seed=0)
    assert (len(train), len(val)) == (800, 88)
    assert sorted(train + val) == list(range(888))


def test_split_10_gives_9_1():
    train, val = split_dataset(list(range(10)), train_frac=0.9, seed=0)
    assert (len(train), len(val)) == (9, 1)


def test_split_deterministic_and_seed_sensitive():
    items = list(range(100))
    a1 = split_dataset(items, seed=7)
    a2 = split_dataset(items, seed=7)
    b = split_dataset(items, seed=8)
    assert a1 == a2
    assert a1 != b


def test_split_rejects_degenerate_inputs():
    with pytest.raises(DataError):
        split_dataset([1])
    with pytest.raises(DataError):
        split_dataset(list(range(10)), train_frac=1.0)
    with pytest.raises(DataError):
        split_dataset(list(range(10)), train_frac=0.0)


# ------------------------------------------------------------------ phantoms

def test_phantom_deterministic():
    a = make_phantom(PhantomSpec(seed=3, resolution=16))
    b = make_phantom(PhantomSpec(seed=3, resolution=16))
    c = make_phantom(PhantomSpec(seed=4, resolution=16))
    np.testing.assert_array_equal(a.voxels, b.voxels)
    assert not np.array_equal(a.voxels, c.voxels)


def test_phantom_has_expected_tissue_structure():
    vol = make_phantom(PhantomSpec(seed=0, resolution=32, noise_hu=0.0))
    vox = vol.voxels
    assert vol.domain == "HU"
    assert vox.shape == (32, 32, 32)
    values = set(np.unique(vox))
    assert values <= {AIR_HU, LUNG_HU, 0.0, BACKGROUND_HU}
    assert np.all(vox[0] == AIR_HU)            # air frame
    assert (vox == LUNG_HU).sum() > 0
    assert (vox == 0.0).sum() > 0              # nodules placed
    # nodules live strictly inside lung regions: dilate check via center slice
    assert np.isfinite(vox).all()


def test_phantom_spec_validation():
    with pytest.raises(DomainError):
        PhantomSpec(resolution=4)
    with pytest.raises(DomainError):
        PhantomSpec(lung_centers=((0.1, 0.5, 0.5),),
                    lung_semi_axes=((0.3, 0.3, 0.3),))
    with pytest.raises(DomainError):
        PhantomSpec(nodule_radius_frac=(0.2, 0.1))
    with pytest.raises(DomainError):
        PhantomSpec(nodule_radius_frac=(0.2, 0.5))
    with pytest.raises(DomainError):
        PhantomSpec(nodules=-1)


def test_phantom_batch_shape_and_range():
    x = phantom_batch(3, 16, seed=1)
    assert x.shape == (3, 1, 16, 16, 16)
    assert x.dtype == np.float32
    assert x.min() >= -1.0 and x.max() <= 1.0
    assert not np.array_equal(x[0], x[1])
    y = phantom_batch(3, 16, seed=1)
    np.testing.assert_array_equal(x, y)
