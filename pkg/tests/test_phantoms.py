import numpy as np
import pytest

from despeckle import Checker, Circles, Stripes, SynthSpec, synthesize
from despeckle.phantoms import (DEFAULT_PHANTOMS, default_checker_phantom,
                                default_circle_phantom,
                                default_stripes_phantom)


class TestCircles:
    def test_default_phantom_values(self):
        img = synthesize(default_circle_phantom())
        assert (img.width, img.height) == (256, 256)
        # disc centers on the quadrant lattice; smallest disc first
        assert img.data[64, 64] == 90.0
        assert img.data[64, 192] == 140.0
        assert img.data[192, 64] == 190.0
        assert img.data[192, 192] == 240.0
        assert img.data[0, 0] == 40.0

    def test_disc_areas_match_analytic(self):
        img = synthesize(default_circle_phantom())
        for value, r in zip((90, 140, 190, 240), (20, 28, 36, 44)):
            count = int((img.data == value).sum())
            assert abs(count - np.pi * r * r) <= 2 * np.pi * r + 4

    def test_hard_edges(self):
        img = synthesize(default_circle_phantom())
        assert set(np.unique(img.data)) == {40.0, 90.0, 140.0, 190.0, 240.0}

    def test_geometry_outside_canvas(self):
        spec = SynthSpec(kind=Circles(count=1, radii=(40,), intensities=(200,),
                                      background=30), width=64, height=64)
        with pytest.raises(ValueError, match="outside"):
            synthesize(spec)

    def test_count_mismatch(self):
        with pytest.raises(ValueError):
            Circles(count=2, radii=(5,), intensities=(100, 200), background=30)


class TestStripes:
    def test_two_valued_histogram(self):
        img = synthesize(default_stripes_phantom())
        values, counts = np.unique(img.data, return_counts=True)
        assert set(values) == {60.0, 220.0}
        assert counts[0] == counts[1]

    def test_exact_periodicity(self):
        img = synthesize(SynthSpec(kind=Stripes(period=16, low=60, high=220),
                                   width=64, height=8))
        assert np.array_equal(img.data[:, :48], img.data[:, 16:])
        assert np.array_equal(img.data[0], img.data[-1])

    def test_bad_period(self):
        with pytest.raises(ValueError):
            Stripes(period=1, low=10, high=20)


class TestChecker:
    def test_cell_periodicity(self):
        img = synthesize(SynthSpec(kind=Checker(cell=8, low=60, high=220),
                                   width=64, height=64))
        a = img.data
        # full period is two cells per axis; one-cell diagonal shift maps
        # the board onto itself
        assert np.array_equal(a[:, :-16], a[:, 16:])
        assert np.array_equal(a[:-16, :], a[16:, :])
        assert np.array_equal(a[:-8, :-8], a[8:, 8:])
        assert a[0, 0] != a[0, 8]

    def test_two_values(self):
        img = synthesize(default_checker_phantom())
        assert set(np.unique(img.data)) == {60.0, 220.0}


class TestSpecValidation:
    def test_intensity_bounds(self):
        with pytest.raises(ValueError, match="outside"):
            SynthSpec(kind=Stripes(period=4, low=0.5, high=100))
        with pytest.raises(ValueError, match="outside"):
            SynthSpec(kind=Stripes(period=4, low=10, high=300))
        with pytest.raises(ValueError):
            SynthSpec(kind=Checker(cell=2, low=10, high=100), min_intensity=0.2)

    def test_canvas_validation(self):
        with pytest.raises(ValueError):
            SynthSpec(kind=Checker(cell=2, low=10, high=100), width=0)

    def test_deterministic(self):
        for factory in DEFAULT_PHANTOMS.values():
            a = synthesize(factory(64, 64))
            b = synthesize(factory(64, 64))
            assert np.array_equal(a.data, b.data)

    def test_outputs_within_bounds(self):
        for factory in DEFAULT_PHANTOMS.values():
            img = synthesize(factory(96, 64))
            assert img.data.min() >= 1.0
            assert img.data.max() <= 255.0
