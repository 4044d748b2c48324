import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.signal import correlate2d

from skylands.config import ConfigurationError, OutOfBoundsError
from skylands.grid import (GeneratorStack, LatentCode, LayoutGrid,
                           bilinear_cells, conv2d_same, grid_to_world,
                           interpolate_feature, leaky_relu, mapping_forward,
                           modulated_conv, run_layer, synthesize_layout,
                           upsample_nearest, world_to_grid)
from skylands.rng import keyed_rng

from conftest import tiny_generator


def reference_conv(x, w, boundary):
    """Independent same-size conv via scipy cross-correlation."""
    h, wd, cin = x.shape
    cout = w.shape[3]
    out = np.zeros((h, wd, cout))
    for o in range(cout):
        for c in range(cin):
            out[:, :, o] += correlate2d(
                x[:, :, c].astype(np.float64), w[:, :, c, o].astype(np.float64),
                mode="same", boundary=boundary)
    return out


@pytest.mark.parametrize("padding,boundary", [("zero", "fill"),
                                              ("wrap", "wrap")])
def test_conv2d_matches_reference(padding, boundary):
    rng = keyed_rng("conv-test", 0)
    x = rng.standard_normal((9, 11, 3)).astype(np.float32)
    w = rng.standard_normal((3, 3, 3, 5)).astype(np.float32)
    got = conv2d_same(x, w, padding)
    want = reference_conv(x, w, boundary)
    assert got.shape == (9, 11, 5)
    np.testing.assert_allclose(got, want, atol=1e-5)


def test_conv_wrap_is_shift_equivariant():
    rng = keyed_rng("conv-shift", 0)
    x = rng.standard_normal((12, 12, 2)).astype(np.float32)
    w = rng.standard_normal((3, 3, 2, 2)).astype(np.float32)
    base = conv2d_same(x, w, "wrap")
    rolled = conv2d_same(np.roll(x, (3, 5), axis=(0, 1)), w, "wrap")
    np.testing.assert_allclose(np.roll(base, (3, 5), axis=(0, 1)), rolled,
                               atol=1e-5)


def test_upsample_nearest():
    x = np.arange(8, dtype=np.float32).reshape(2, 2, 2)
    up = upsample_nearest(x, 2)
    assert up.shape == (4, 4, 2)
    assert np.array_equal(up[0:2, 0:2], np.broadcast_to(x[0, 0], (2, 2, 2)))
    assert upsample_nearest(x, 1) is x


def test_leaky_relu_values():
    x = np.array([-2.0, -0.5, 0.0, 3.0], dtype=np.float32)
    np.testing.assert_allclose(leaky_relu(x), [-0.4, -0.1, 0.0, 3.0],
                               atol=1e-7)


def test_mapping_deterministic_and_scale_invariant(tiny_stack):
    z = LatentCode.from_seed(4, dim=tiny_stack.latent_dim)
    a = mapping_forward(tiny_stack, z.values)
    b = mapping_forward(tiny_stack, z.values)
    assert np.array_equal(a, b)
    c = mapping_forward(tiny_stack, 3.0 * z.values)
    np.testing.assert_allclose(a, c, atol=1e-4)


def test_mapping_rejects_wrong_dim(tiny_stack):
    with pytest.raises(ConfigurationError):
        mapping_forward(tiny_stack, np.zeros(tiny_stack.latent_dim + 1,
                                             dtype=np.float32))


def test_modulated_conv_demodulation_normalizes(tiny_stack):
    w, b, aff_w, aff_b = tiny_stack.conv_weights(0)
    style = mapping_forward(tiny_stack,
                            LatentCode.from_seed(1, tiny_stack.latent_dim).values)
    s = style @ aff_w + aff_b
    wmod = w * s[None, None, :, None]
    d = 1.0 / np.sqrt(np.sum(wmod * wmod, axis=(0, 1, 2)) + 1e-8)
    norms = np.sum((wmod * d[None, None, None, :]) ** 2, axis=(0, 1, 2))
    np.testing.assert_allclose(norms, 1.0, atol=1e-4)


def test_default_stack_geometry():
    stack = GeneratorStack()
    assert stack.output_resolution == 256
    assert stack.receptive_radius == 31
    assert stack.constant_input().shape == (16, 16, 64)


def test_tiny_stack_geometry(tiny_stack):
    assert tiny_stack.output_resolution == 32
    assert tiny_stack.receptive_radius == 7


def test_bad_layer_chaining_rejected():
    from skylands.grid import LayerSpec
    with pytest.raises(ConfigurationError):
        GeneratorStack(layers=(LayerSpec(1, 64, 64), LayerSpec(2, 32, 32)))


def test_synthesize_layout_shape_and_determinism(tiny_stack):
    z = LatentCode.from_seed(9, tiny_stack.latent_dim)
    a = synthesize_layout(z, tiny_stack)
    b = synthesize_layout(z, tiny_stack)
    assert a.features.shape == (32, 32, 8)
    assert np.array_equal(a.features, b.features)
    assert a.border_cells == tiny_stack.receptive_radius


def test_padding_only_affects_border(tiny_stack):
    """Interior cells beyond the receptive radius are padding-independent."""
    z = LatentCode.from_seed(2, tiny_stack.latent_dim)
    gz = synthesize_layout(z, tiny_stack, padding="zero").features
    gw = synthesize_layout(z, tiny_stack, padding="wrap").features
    r = tiny_stack.receptive_radius
    np.testing.assert_allclose(gz[r:-r, r:-r], gw[r:-r, r:-r],
                               rtol=1e-5, atol=1e-5)
    assert not np.allclose(gz, gw, atol=1e-5)


def test_different_latents_different_grids(tiny_stack):
    a = synthesize_layout(LatentCode.from_seed(1, 16), tiny_stack).features
    b = synthesize_layout(LatentCode.from_seed(2, 16), tiny_stack).features
    assert not np.allclose(a, b, atol=1e-3)


# --- world <-> grid coordinates ------------------------------------------------

def small_grid():
    feats = np.arange(4 * 6 * 2, dtype=np.float32).reshape(4, 6, 2)
    return LayoutGrid(features=feats, cell_width=0.5, origin=(1.0, -2.0))


@given(st.floats(-10, 10), st.floats(-10, 10))
@settings(max_examples=50)
def test_coordinate_round_trip(x, z):
    g = small_grid()
    row, col = world_to_grid(g, x, z)
    x2, z2 = grid_to_world(g, row, col)
    assert x2 == pytest.approx(x, abs=1e-9)
    assert z2 == pytest.approx(z, abs=1e-9)


def test_cell_centers_map_to_integer_coords():
    g = small_grid()
    x, z = grid_to_world(g, 2, 3)
    row, col = world_to_grid(g, x, z)
    assert row == pytest.approx(2.0)
    assert col == pytest.approx(3.0)


def test_bilinear_exact_at_cells_and_midpoints():
    g = small_grid()
    np.testing.assert_allclose(bilinear_cells(g.features, 1.0, 2.0),
                               g.features[1, 2])
    mid = bilinear_cells(g.features, 1.5, 2.0)
    np.testing.assert_allclose(mid, 0.5 * (g.features[1, 2] + g.features[2, 2]))


def test_bilinear_scalar_field_shape():
    field = np.arange(16, dtype=np.float32).reshape(4, 4)
    out = bilinear_cells(field, np.array([0.5, 1.0]), np.array([0.5, 2.0]))
    assert out.shape == (2,)
    assert out[1] == pytest.approx(field[1, 2])


def test_interpolate_feature_bounds():
    g = small_grid()
    interpolate_feature(g, 1.5, -1.0)
    with pytest.raises(OutOfBoundsError):
        interpolate_feature(g, 100.0, 0.0)


def test_layout_grid_validation():
    with pytest.raises(ConfigurationError):
        LayoutGrid(features=np.zeros((1, 5, 2), dtype=np.float32))
    bad = np.zeros((4, 4, 2), dtype=np.float32)
    bad[0, 0, 0] = np.nan
    with pytest.raises(ConfigurationError):
        LayoutGrid(features=bad)
