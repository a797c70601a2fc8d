import numpy as np
import pytest

from nhgeom import (
    BiorthogonalEigensystem,
    Displacement,
    NormalizationBreakdownError,
    Phase,
    StepsTooLargeError,
    classify_phase,
    eigendecompose,
    fidelity,
    grid_scan,
    polar_sweep,
    straddle_fidelity,
    susceptibility,
)
from nhgeom.geometry import band_index, fidelity_from_systems, unit

Q2_STAR = np.sqrt(17.0 / 8.0)


def hermitian_band0_overlap_sq(family, p, p2):
    """Oracle at q2 = 0: squared overlap of the middle eigenvector pair."""
    _, v1 = np.linalg.eigh(family.matrix(p).real)
    _, v2 = np.linalg.eigh(family.matrix(p2).real)
    # eigh sorts ascending; band 0 (middle of the Re-descending order) is index 1
    return abs(v1[:, 1] @ v2[:, 1]) ** 2


class TestDisplacement:
    def test_unit_direction_enforced(self):
        with pytest.raises(ValueError):
            Displacement((1.0, 1.0), 0.1)
        d = Displacement(unit((1.0, 1.0)), 0.1)
        q = d.applied_to((0.0, 0.0))
        assert q.q1 == pytest.approx(0.1 / np.sqrt(2))

    def test_negative_magnitude_rejected(self):
        with pytest.raises(ValueError):
            Displacement((0.0, 1.0), -0.1)


class TestFidelity:
    def test_zero_step_is_exactly_one(self, family):
        f = fidelity(family, 0, (0.2, 0.5), Displacement((0.0, 1.0), 0.0))
        assert f.value == 1.0 + 0.0j

    def test_hermitian_limit_matches_overlap(self, family):
        # both endpoints on the Hermitian line q2 = 0: F is the ordinary
        # squared overlap, exactly
        d = Displacement((1.0, 0.0), 1e-3)
        f = fidelity(family, 0, (0.0, 0.0), d)
        assert abs(f.value.imag) <= 1e-12
        assert 0.0 < 1.0 - f.value.real < 1e-4
        _, v1 = np.linalg.eigh(family.matrix((0.0, 0.0)).real)
        _, v2 = np.linalg.eigh(family.matrix((1e-3, 0.0)).real)
        oracle = abs(v1[:, 1] @ v2[:, 1]) ** 2
        assert abs(f.value.real - oracle) <= 1e-12

    def test_hermitian_point_nonhermitian_step(self, family):
        # stepping off the Hermitian line along q2 turns on an antisymmetric
        # perturbation: the biorthogonal fidelity exceeds 1 (chi_F < 0),
        # unlike the Hermitian squared overlap
        f = fidelity(family, 0, (0.0, 0.0), Displacement((0.0, 1.0), 1e-3))
        assert abs(f.value.imag) <= 1e-12
        assert 0.0 < f.value.real - 1.0 < 1e-4
        oracle = hermitian_band0_overlap_sq(family, (0.0, 0.0), (0.0, 1e-3))
        assert abs(f.value.real - oracle) <= 3e-6

    def test_straddling_approaches_half(self, family):
        # pair centered on the conventional EP at q2* ~ 1.4577
        f = fidelity(family, 0, (0.0, Q2_STAR - 0.05), Displacement((0.0, 1.0), 0.1))
        assert f.value.real == pytest.approx(0.5, abs=0.02)
        labels = [lab.label for lab in f.phase_labels]
        assert labels == [Phase.UNBROKEN, Phase.BROKEN]

    def test_endpoint_at_ep_raises(self, family):
        with pytest.raises(NormalizationBreakdownError):
            fidelity(family, 0, (0.0, 1.0), Displacement((0.0, 1.0), 1e-3))

    def test_gauge_invariance(self, family, rng):
        ref = eigendecompose(family.matrix((0.3, 0.6)))
        disp = eigendecompose(family.matrix((0.3, 0.601)))
        base = fidelity_from_systems(ref, disp, 1, 1)
        for _ in range(20):
            c = rng.uniform(0.1, 10.0) * np.exp(2j * np.pi * rng.uniform())
            rights = disp.rights.copy()
            lefts = disp.lefts.copy()
            rights[:, 1] = c * rights[:, 1]
            lefts[1] = lefts[1] / c
            scaled = BiorthogonalEigensystem(
                energies=disp.energies,
                rights=rights,
                lefts=lefts,
                residuals=disp.residuals,
                condition_flags=disp.condition_flags,
            )
            assert abs(fidelity_from_systems(ref, scaled, 1, 1) - base) < 1e-12

    def test_reality_in_unbroken_phase(self, family, rng):
        checked = 0
        while checked < 100:
            p = (rng.uniform(-1.5, 1.5), rng.uniform(0.0, 1.2))
            phi = rng.uniform(0.0, 2 * np.pi)
            d = Displacement(unit((np.cos(phi), np.sin(phi))), 1e-3)
            if classify_phase(family, p).label is not Phase.UNBROKEN:
                continue
            if classify_phase(family, d.applied_to(p)).label is not Phase.UNBROKEN:
                continue
            try:
                f = fidelity(family, 0, p, d)
            except NormalizationBreakdownError:
                continue
            assert abs(f.value.imag) <= 1e-8
            checked += 1


class TestSusceptibility:
    def test_hermitian_limit_nonnegative(self, family):
        # along the Hermitian line the fidelity susceptibility is the usual
        # non-negative Hermitian one
        for p in ((0.0, 0.0), (0.3, 0.0), (-0.7, 0.0)):
            r = susceptibility(family, 0, p, (1.0, 0.0))
            assert abs(r.value.imag) <= 1e-10
            assert r.value.real >= -1e-10

    def test_negative_divergence_toward_dirac_ep(self, family):
        values = []
        for eps in (0.1, 0.05, 0.025):
            r = susceptibility(family, 0, (0.0, 1.0 - eps), (0.0, 1.0))
            assert r.value.real < 0.0
            values.append(abs(r.value.real))
        assert values[0] < values[1] < values[2]

    def test_anisotropy_nodes(self, family):
        r = 0.2
        chi_0 = susceptibility(family, 0, (r, 1.0), (-1.0, 0.0))
        chi_90 = susceptibility(family, 0, (0.0, 1.0 + r), (0.0, -1.0))
        assert abs(chi_0.value.real) <= 1e-6 * abs(chi_90.value.real)

    def test_step_crossing_ep_rejected(self, family):
        with pytest.raises(StepsTooLargeError):
            susceptibility(family, 0, (0.0, 0.9995), (0.0, 1.0))

    def test_direction_symmetry(self, family):
        a = susceptibility(family, 0, (0.4, 0.7), (0.0, 1.0))
        b = susceptibility(family, 0, (0.4, 0.7), (0.0, -1.0))
        tol = 10 * max(a.error_estimate, b.error_estimate)
        assert abs(a.value - b.value) <= tol

    def test_expansion_consistency(self, family):
        # (1 - F)/dq^2 = chi + c*dq + O(dq^2): the fitted slope c is stable
        p, n = (0.3, 0.6), (0.0, 1.0)
        res = susceptibility(family, 0, p, n)
        slopes = []
        for dq in res.steps_used[:3]:
            f = fidelity(family, 0, p, Displacement(n, dq))
            g = (1.0 - f.value) / dq**2
            slopes.append(abs(g - res.value) / dq)
        ref = slopes[0]
        assert ref > 0.0
        for s in slopes[1:]:
            assert abs(s - ref) <= 0.3 * ref

    def test_ladder_strictly_decreasing(self, family):
        res = susceptibility(family, 0, (0.3, 0.6), (0.0, 1.0))
        steps = res.steps_used
        assert all(a > b for a, b in zip(steps, steps[1:]))
        assert res.error_estimate >= 0.0


class TestGridScan:
    def test_ep_cell_flagged(self, family):
        cells = grid_scan(family, (-0.1, 0.1, 0.9, 1.1), (3, 3), 0, (0.0, 1.0))
        assert len(cells) == 9
        by_coords = {c.coords: c for c in cells}
        assert by_coords[(0.0, 1.0)].status == "ep_breakdown"
        assert by_coords[(0.0, 1.0)].value is None
        for corner in ((-0.1, 0.9), (0.1, 0.9), (-0.1, 1.1), (0.1, 1.1)):
            c = by_coords[corner]
            assert c.status == "ok"
            assert np.isfinite(c.value)

    def test_hermitian_line(self, family):
        cells = grid_scan(family, (-0.5, 0.5, 0.0, 0.0), (2, 2), 0, (1.0, 0.0))
        for c in cells:
            assert c.status == "ok"
            assert c.value.real >= -1e-10
            assert abs(c.value.imag) <= 1e-10

    def test_row_major_order(self, family):
        cells = grid_scan(family, (0.0, 1.0, 0.0, 0.5), (3, 2), 0, (1.0, 0.0))
        assert [c.coords for c in cells] == [
            (0.0, 0.0), (0.5, 0.0), (1.0, 0.0),
            (0.0, 0.5), (0.5, 0.5), (1.0, 0.5),
        ]

    def test_degenerate_resolution_rejected(self, family):
        with pytest.raises(ValueError):
            grid_scan(family, (-1, 1, 0, 1), (1, 5), 0, (0.0, 1.0))

    def test_worker_count_is_invisible(self, family):
        a = grid_scan(family, (-0.4, 0.4, 0.4, 0.8), (3, 3), 0, (0.0, 1.0), workers=1)
        b = grid_scan(family, (-0.4, 0.4, 0.4, 0.8), (3, 3), 0, (0.0, 1.0), workers=4)
        assert a == b


class TestPolarSweep:
    def test_anisotropy_pattern(self, family):
        angles = [2 * np.pi * k / 16 for k in range(16)]
        cells = polar_sweep(family, (0.0, 1.0), [0.1], angles, 0)
        vals = {c.coords[1]: c.value.real for c in cells if c.status == "ok"}
        peak = max(abs(v) for v in vals.values())
        assert abs(vals[0.0]) <= 1e-6 * peak
        assert abs(vals[angles[8]]) <= 1e-6 * peak
        most_negative = sorted(vals, key=lambda k: vals[k])[:2]
        assert set(most_negative) == {angles[4], angles[12]}

    def test_radial_ordering(self, family):
        cells = polar_sweep(family, (0.0, 1.0), [0.1, 0.3], [np.pi / 2], 0)
        v = {c.coords[0]: abs(c.value.real) for c in cells}
        assert v[0.1] > v[0.3]

    def test_radius_below_step_rejected(self, family):
        with pytest.raises(ValueError):
            polar_sweep(family, (0.0, 1.0), [5e-4], [0.0], 0)


class TestStraddle:
    def test_converges_to_half(self, family):
        q2s = [Q2_STAR - 0.025 - m for m in (0.2, 0.1, 0.05, 0.02, 0.005, 0.0)]
        cells = straddle_fidelity(family, 0, q2s, delta=0.05)
        last = cells[-1]
        assert last.status == "ok"
        assert last.value.real == pytest.approx(0.5, abs=0.02)

    def test_unbroken_pairs_near_one(self, family):
        cells = straddle_fidelity(family, 0, [0.2, 0.4, 0.6], delta=0.01)
        for c in cells:
            assert abs(c.value.real - 1.0) <= 1e-3
            assert abs(c.value.imag) <= 1e-8

    def test_broken_pairs_recorded(self, family):
        cells = straddle_fidelity(family, 0, [1.6], delta=0.05)
        assert cells[0].status == "ok"
        assert np.isfinite(cells[0].value)
