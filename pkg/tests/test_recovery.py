import math

import numpy as np
import pytest

from randers import (BoundaryDistanceData, ConstantField, ConformalMetric,
                     Domain, ExactForm, ExprField, PotentialBump, RandersSpec,
                     RecoveryError, RotationalForm, SumForm, TriplicationError,
                     distance_matrix, herglotz_invert, recover_beta_integrals,
                     recover_boundary_potential, recover_symmetric_data,
                     rigidity_report, verify_gauge)


def analytic_constant_c_data(n=64, c0=1.0, R=1.0):
    """Exact chord travel times for a constant sound speed."""
    ang = 2 * math.pi * np.arange(n) / n
    sep = np.abs((ang[:, None] - ang[None, :] + math.pi) % (2 * math.pi) - math.pi)
    D = 2.0 * R * np.sin(sep / 2.0) / c0
    np.fill_diagonal(D, 0.0)
    return BoundaryDistanceData(angles=ang, radius=R, matrix=D, spec_hash="0" * 12)


@pytest.fixture(scope="module")
def bump_pair(dom, smooth_alpha, smooth_spec, smooth_bump_spec):
    d1 = distance_matrix(smooth_spec, 8)
    d2 = distance_matrix(smooth_bump_spec, 8)
    return d1, d2


class TestBetaIntegrals:
    def test_reversible_zero(self, bump_pair):
        anti = recover_beta_integrals(bump_pair[0])
        assert np.abs(anti).max() <= 2e-8

    def test_wind_diameter_value(self, wind_spec, dom):
        from randers import sample_boundary

        data = distance_matrix(wind_spec, sample_boundary(dom, 2))
        anti = recover_beta_integrals(data)
        # from (-1,0) to (1,0): beta = (-2/3, 0) against displacement (2, 0)
        assert anti[1, 0] == pytest.approx(-4.0 / 3.0, abs=1e-7)

    def test_boundary_vanishing_form_invisible(self, bump_pair):
        anti2 = recover_beta_integrals(bump_pair[1])
        assert np.abs(anti2).max() <= 2e-8


class TestSymmetricData:
    def test_wind_alpha_length(self, wind_spec, dom):
        from randers import sample_boundary

        data = distance_matrix(wind_spec, sample_boundary(dom, 2))
        sym = recover_symmetric_data(data)
        assert sym[0, 1] == pytest.approx(8.0 / 3.0, abs=1e-7)

    def test_reversible_equals_matrix(self, bump_pair):
        sym = recover_symmetric_data(bump_pair[0])
        assert np.array_equal(np.diag(sym), np.zeros(8))
        assert np.abs(sym - bump_pair[0].matrix).max() <= 2e-8

    def test_bump_sym_matches_base_distances(self, bump_pair):
        sym2 = recover_symmetric_data(bump_pair[1])
        assert np.abs(sym2 - bump_pair[0].matrix).max() <= 2e-8


class TestPotentialRecovery:
    def test_identical_data_gives_zero(self, bump_pair):
        pot = recover_boundary_potential(bump_pair[0], bump_pair[0])
        assert np.abs(pot.values).max() == 0.0
        assert pot.constancy_deviation == 0.0

    def test_boundary_vanishing_bump(self, bump_pair):
        pot = recover_boundary_potential(*bump_pair)
        assert np.abs(pot.values).max() <= 1e-6
        assert pot.constancy_deviation <= 1e-6

    def test_linear_potential_recovered(self, dom, smooth_alpha):
        base_beta = ExactForm(PotentialBump(0.2, 1.0))
        s1 = RandersSpec(dom, smooth_alpha, base_beta)
        s2 = RandersSpec(dom, smooth_alpha, SumForm(base_beta, ExactForm(ExprField("0.1*x1"))))
        d1 = distance_matrix(s1, 8)
        d2 = distance_matrix(s2, 8)
        pot = recover_boundary_potential(d1, d2)
        pts = d1.points
        diffs = pot.values[None, :] - pot.values[:, None]
        expect = 0.1 * (pts[None, :, 0] - pts[:, None, 0])
        assert np.abs(diffs - expect).max() <= 1e-6

    def test_mismatched_samples_rejected(self, bump_pair, euclid_spec):
        other = distance_matrix(euclid_spec, 6)
        with pytest.raises(RecoveryError):
            recover_boundary_potential(bump_pair[0], other)


class TestHerglotzInvert:
    def test_constant_speed_analytic(self):
        prof = herglotz_invert(analytic_constant_c_data(c0=1.5))
        mask = prof.r >= 0.05
        assert np.abs(prof.c[mask] - 1.5).max() / 1.5 <= 1e-3
        assert prof.radial_consistent
        assert prof.p_margin <= 1e-10

    def test_nonradial_data_flagged(self, dom):
        # squash the chord pattern anisotropically: same-separation pairs
        # now disagree, which the spread diagnostic must flag
        data = analytic_constant_c_data(n=64)
        ang = data.angles
        mid = 0.5 * (ang[:, None] + ang[None, :])
        data.matrix *= 1.0 + 0.05 * np.cos(2 * mid)
        np.fill_diagonal(data.matrix, 0.0)
        prof = herglotz_invert(data)
        assert not prof.radial_consistent
        assert prof.spread_max_rel > 1e-3

    def test_triplication_raises(self):
        # travel times with an inflection strong enough to fold p(sep)
        n = 64
        ang = 2 * math.pi * np.arange(n) / n
        sep = np.abs((ang[:, None] - ang[None, :] + math.pi) % (2 * math.pi) - math.pi)
        D = 2.0 * np.sin(sep / 2) + 0.35 * np.sin(sep) ** 4
        np.fill_diagonal(D, 0.0)
        data = BoundaryDistanceData(angles=ang, radius=1.0, matrix=D, spec_hash="0" * 12)
        with pytest.raises(TriplicationError):
            herglotz_invert(data)

    def test_small_n_rejected(self):
        with pytest.raises(RecoveryError):
            herglotz_invert(analytic_constant_c_data(n=8))


class TestVerifyGauge:
    def test_exact_gauge(self, dom, smooth_spec, smooth_bump_spec, bump):
        rep = verify_gauge(smooth_spec.beta, smooth_bump_spec.beta, bump, dom)
        assert rep.gauge_residual <= 1e-12
        assert rep.boundary_residual <= 1e-12
        assert rep.psi_identity

    def test_rotational_perturbation_detected(self, dom, smooth_spec, bump):
        eps = 1e-3
        beta2 = SumForm(ExactForm(bump), RotationalForm(eps))
        rep = verify_gauge(smooth_spec.beta, beta2, bump, dom)
        # rotational part of size eps/2 * |x| survives in the residual
        assert rep.gauge_residual == pytest.approx(eps / 2, rel=0.1)

    def test_constant_shift_appears_on_boundary(self, dom, smooth_spec, smooth_bump_spec):
        shifted = ExprField("0.3*(1 - (x1^2 + x2^2)) + 0.25")
        rep = verify_gauge(smooth_spec.beta, smooth_bump_spec.beta, shifted, dom)
        assert rep.gauge_residual <= 1e-12
        assert rep.boundary_residual == pytest.approx(0.25, abs=1e-12)

    def test_profile_deviation(self, dom, smooth_spec, bump, smooth_profile, kink_profile):
        rep = verify_gauge(smooth_spec.beta, smooth_spec.beta, ConstantField(0.0), dom,
                           profile1=smooth_profile, profile2=kink_profile)
        # max |(2 - r) - (2 - r^2)| = max (r - r^2) ... at r = 1/2
        assert rep.profile_deviation == pytest.approx(0.25, abs=1e-3)


class TestRigidityReport:
    def test_gauge_pair_verdicts(self, dom, smooth_spec, smooth_bump_spec, bump, bump_pair):
        rep = rigidity_report(smooth_spec, smooth_bump_spec, n=8,
                              data1=bump_pair[0], data2=bump_pair[1], phi_truth=bump)
        assert rep.verdicts["boundary_data_equal"] is True
        assert rep.verdicts["gauge_equivalent"] is True
        assert rep.hypothesis["admissible"] is True
        assert rep.psi_identity
        assert rep.gauge.gauge_residual <= 1e-12

    def test_different_profiles_fail_clause(self, dom, smooth_spec, kink_profile):
        other = RandersSpec(dom, ConformalMetric(kink_profile))
        d1 = distance_matrix(smooth_spec, 6)
        d2 = distance_matrix(other, 6)
        rep = rigidity_report(smooth_spec, other, n=6, data1=d1, data2=d2)
        assert rep.verdicts["boundary_data_equal"] is False
        assert rep.sym_max_diff > 1e-3

    def test_nonclosed_rejected(self, dom, euclid_spec):
        rot = RandersSpec(dom, euclid_spec.alpha, RotationalForm(0.3))
        with pytest.raises(RecoveryError, match="closed"):
            rigidity_report(euclid_spec, rot, n=4)

    def test_admissibility_failure_poisons_verdict(self, euclid_spec, monkeypatch):
        import randers.recovery as rc
        from randers import NonAdmissibleError

        def explode(spec, n, opts):
            raise NonAdmissibleError("2 geodesic branches for boundary pair (0, 1)")

        monkeypatch.setattr(rc, "distance_matrix", explode)
        rep = rigidity_report(euclid_spec, euclid_spec, n=4)
        assert rep.hypothesis["admissible"] is False
        assert rep.verdicts["boundary_data_equal"] is None
        assert any("admissibility" in note for note in rep.notes)

    def test_report_write(self, tmp_path, dom, smooth_spec, smooth_bump_spec, bump_pair):
        rep = rigidity_report(smooth_spec, smooth_bump_spec, n=8,
                              data1=bump_pair[0], data2=bump_pair[1])
        rep.write(tmp_path / "rec")
        assert (tmp_path / "rec" / "report.txt").exists()
        assert (tmp_path / "rec" / "potential.csv").exists()
        assert "verdict boundary_data_equal: True" in rep.summary()
