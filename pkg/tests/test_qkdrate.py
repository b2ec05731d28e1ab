import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wsqkd import qkdrate as qr

# Values computed independently at 30-digit precision and frozen.
H2_00292 = 0.190363894359032
ETA_724 = 0.037759826981926
ETA_1477 = 0.006668528255265
GAIN_EXAMPLE = 0.022420693543599
QBER_EXAMPLE = 0.014433528069999
VAC_YIELD = 2.7983331897197e-05
DEAD_EXAMPLE = 122630.560928433


def test_binary_entropy_values():
    assert qr.binary_entropy(0.5) == 1.0
    assert qr.binary_entropy(0.0) == 0.0
    assert qr.binary_entropy(1.0) == 0.0
    assert qr.binary_entropy(0.0292) == pytest.approx(H2_00292, abs=1e-12)


def test_binary_entropy_domain():
    with pytest.raises(ValueError):
        qr.binary_entropy(-0.1)
    with pytest.raises(ValueError):
        qr.binary_entropy(1.1)


@given(st.floats(min_value=1e-9, max_value=0.5))
@settings(max_examples=200)
def test_binary_entropy_symmetry(x):
    assert qr.binary_entropy(x) == pytest.approx(qr.binary_entropy(1 - x), rel=1e-12)
    assert 0 < qr.binary_entropy(x) <= 1


def test_eta_total_examples(detector):
    assert qr.eta_total(7.24, detector) == pytest.approx(ETA_724, abs=1e-12)
    assert qr.eta_total(14.77, detector) == pytest.approx(ETA_1477, abs=1e-12)
    perfect = qr.DetectorParams(efficiency=1.0)
    assert qr.eta_total(0.0, perfect) == 1.0
    with pytest.raises(ValueError):
        qr.eta_total(-1.0, detector)


def test_gain_and_qber_example():
    q, e = qr.gain_and_qber(0.6, 0.037759, 2e-5, 0.014)
    assert q == pytest.approx(GAIN_EXAMPLE, abs=1e-12)
    assert e == pytest.approx(QBER_EXAMPLE, abs=1e-12)


def test_gain_and_qber_edges():
    q, e = qr.gain_and_qber(0.0, 0.04, 2e-5, 0.014)
    assert q == pytest.approx(2e-5)
    assert e == pytest.approx(0.5)
    q, e = qr.gain_and_qber(0.6, 0.04, 0.0, 0.0)
    assert e == 0.0
    with pytest.raises(ValueError):
        qr.gain_and_qber(-0.1, 0.04, 0.0, 0.0)


@given(
    eta=st.floats(min_value=1e-5, max_value=0.5),
    y0=st.floats(min_value=0.0, max_value=1e-3),
    e_det=st.floats(min_value=0.0, max_value=0.05),
)
@settings(max_examples=300)
def test_gain_monotone_qber_bounded(eta, y0, e_det):
    q1, e1 = qr.gain_and_qber(0.2, eta, y0, e_det)
    q2, e2 = qr.gain_and_qber(0.6, eta, y0, e_det)
    if y0 > 0 or eta > 0:
        assert q2 > q1
    assert 0 <= e1 <= 0.5 and 0 <= e2 <= 0.5


def test_vacuum_state_yield(source):
    assert qr.vacuum_state_yield(source, 0.0066686, 2e-5) == pytest.approx(
        VAC_YIELD, rel=1e-9
    )
    no_leak = qr.SourceParams(extinction_ratio_db=math.inf)
    assert qr.vacuum_state_yield(no_leak, 0.5, 2e-5) == pytest.approx(2e-5)


def test_vacuum_state_yield_matches_poisson_series(source):
    # Independent oracle: expand the Poisson mixture over photon number with
    # per-n yield y0 + 1 - (1 - eta)^n and sum to convergence.
    eta, y0 = 0.0066686, 2e-5
    mu_v = source.mu * 10 ** (-source.extinction_ratio_db / 10)
    total = 0.0
    pmf = math.exp(-mu_v)
    for n in range(0, 40):
        yield_n = y0 + 1.0 - (1.0 - eta) ** n
        total += pmf * yield_n
        pmf *= mu_v / (n + 1)
    assert qr.vacuum_state_yield(source, eta, y0) == pytest.approx(total, rel=1e-12)


def _sweep_grid():
    etas = [1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2, 1e-1]
    y0s = [0.0, 1e-6, 1e-5, 1e-4]
    e_dets = [0.0, 0.005, 0.014, 0.05]
    for eta in etas:
        for y0 in y0s:
            for e_det in e_dets:
                yield eta, y0, e_det


def test_decoy_bounds_soundness_sweep():
    # Oracle: the true single-photon yield and error of the generating model.
    mu, nu = 0.6, 0.2
    for eta, y0, e_det in _sweep_grid():
        q_mu, e_mu = qr.gain_and_qber(mu, eta, y0, e_det)
        q_nu, e_nu = qr.gain_and_qber(nu, eta, y0, e_det)
        b = qr.decoy_bounds(q_mu, q_nu, e_mu, e_nu, mu, nu, y0)
        y1_true = 1.0 - (1.0 - y0) * (1.0 - eta)
        e1_true = (0.5 * y0 + e_det * eta) / y1_true
        assert b.y1_lower <= y1_true + 1e-12, (eta, y0, e_det)
        assert b.e1_upper >= e1_true - 1e-12, (eta, y0, e_det)
        assert 0 < b.q1_lower < q_mu or b.clamped


def test_decoy_bounds_weak_link_instance():
    # The weakest measured link's operating point, checked against the
    # closed-form true single-photon values.
    mu, nu, eta, y0, e_det = 0.6, 0.2, 0.0066686, 2e-5, 0.01
    q_mu, e_mu = qr.gain_and_qber(mu, eta, y0, e_det)
    q_nu, e_nu = qr.gain_and_qber(nu, eta, y0, e_det)
    b = qr.decoy_bounds(q_mu, q_nu, e_mu, e_nu, mu, nu, y0)
    y1_true = 1.0 - (1.0 - y0) * (1.0 - eta)
    assert 0 < b.y1_lower <= y1_true
    assert b.e1_upper >= (0.5 * y0 + e_det * eta) / y1_true
    assert 0 < b.q1_lower < q_mu
    assert not b.clamped


def test_decoy_bounds_clamping():
    # Observables inconsistent with any decoy model force the safe clamp.
    b = qr.decoy_bounds(0.5, 1e-6, 0.01, 0.01, 0.6, 0.2, 0.0)
    assert b.y1_lower == 0.0
    assert b.e1_upper == 0.5
    assert b.q1_lower == 0.0
    assert b.clamped


def test_decoy_bounds_rejects_bad_intensities():
    with pytest.raises(ValueError):
        qr.decoy_bounds(0.02, 0.007, 0.03, 0.03, 0.2, 0.6, 2e-5)


def test_gllp_rate_edges():
    assert qr.gllp_rate(0.5, 0.02, 0.03, 0.01, 0.5, 1.22) == 0.0
    # Perfect channel: rate equals the single-photon gain.
    assert qr.gllp_rate(1.0, 0.01, 0.0, 0.01, 0.0, 1.0) == pytest.approx(0.01)


def test_gllp_rate_monotone_in_errors():
    prev = math.inf
    for e1 in [0.0, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5]:
        r = qr.gllp_rate(0.5, 0.02, 0.02, 0.011, e1, 1.22)
        assert r <= prev + 1e-15
        prev = r
    prev = math.inf
    for e_mu in [0.0, 0.01, 0.03, 0.1, 0.2]:
        r = qr.gllp_rate(0.5, 0.02, e_mu, 0.011, 0.04, 1.22)
        assert r <= prev + 1e-15
        prev = r


def test_dead_time_throughput():
    assert qr.dead_time_throughput(1234.5, 0.0) == 1234.5
    assert qr.dead_time_throughput(3.17e5, 5.0) == pytest.approx(
        DEAD_EXAMPLE, rel=1e-12
    )
    # Saturation at 1 / tau.
    assert qr.dead_time_throughput(1e12, 5.0) == pytest.approx(2e5, rel=1e-3)


@given(
    rate=st.floats(min_value=0.0, max_value=1e9),
    tau=st.floats(min_value=0.0, max_value=100.0),
)
@settings(max_examples=300)
def test_dead_time_bounds(rate, tau):
    out = qr.dead_time_throughput(rate, tau)
    assert out <= rate + 1e-9
    if tau > 0:
        assert out <= 1e6 / tau + 1e-9


def test_calibrate_e_detector_roundtrip(detector, source):
    eta = qr.eta_total(7.24, detector)
    e_det = qr.calibrate_e_detector(0.0292, eta, detector.dark_per_gate, source.mu)
    _, e_mu = qr.gain_and_qber(source.mu, eta, detector.dark_per_gate, e_det)
    assert e_mu == pytest.approx(0.0292, abs=1e-12)
    # Below the dark floor the calibration clamps at zero.
    assert qr.calibrate_e_detector(1e-9, 1e-4, 1e-3, 0.6) == 0.0


def test_link_performance_echo_and_consistency(source, detector, system):
    report = qr.link_performance(7.24, source, detector, system)
    assert report.source == source and report.detector == detector
    assert report.system == system
    assert report.attenuation_db == 7.24
    assert report.secure_bps <= report.sifted_bps
    assert report.effective_detection_hz <= report.raw_detection_hz
    assert report.r_per_pulse == pytest.approx(
        report.secure_bps / source.pulse_rate_hz
    )


def test_link_performance_opaque_channel(source, detector, system):
    report = qr.link_performance(300.0, source, detector, system)
    assert report.secure_bps == 0.0
    assert report.bounds_clamped


def test_link_performance_monotone_in_attenuation(source, detector, system):
    lo = qr.link_performance(8.78, source, detector, system)
    hi = qr.link_performance(10.79, source, detector, system)
    assert hi.secure_bps < lo.secure_bps


def test_secure_rate_from_observed_requires_rate(source, detector, system):
    with pytest.raises(ValueError):
        qr.secure_rate_from_observed(0.0, 0.03, 7.24, source, detector, system)


def test_secure_rate_from_observed_dead_channel(source, detector, system):
    # A half-error channel carries no secure key.
    assert qr.secure_rate_from_observed(
        31.0e3, 0.5, 7.24, source, detector, system
    ) == 0.0


def test_calibrated_eta_scale_solves(source, system):
    det = qr.DetectorParams(dead_time_us=5.0)
    target = 31.0e3
    scale = qr.calibrated_eta_scale(7.24, source, det, system, target)
    assert 0 < scale < 1
    extra_db = -10 * math.log10(scale)
    achieved = qr.link_performance(7.24 + extra_db, source, det, system).sifted_bps
    assert achieved == pytest.approx(target, rel=1e-6)
