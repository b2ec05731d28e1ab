import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wsqkd import netgraph as ng
from wsqkd import optics as op
from wsqkd import qkdrate as qr
from wsqkd import xtalk

DELTA_EXAMPLE = 0.004515202535407  # chi = 0.01, qber0 = 0.03, frozen


def point(link, db, offset):
    return op.CrosstalkContribution(
        kind="point", band="intraband", source_link=link,
        mechanism="test", power_ratio_db=db, arrival_offset_ns=offset,
    )


def continuous(link, db):
    return op.CrosstalkContribution(
        kind="continuous", band="intraband", source_link=link,
        mechanism="test", power_ratio_db=db,
    )


LINK = ng.build_plan(1).links[0]


@pytest.fixture()
def link():
    return LINK


def test_delta_qber_examples():
    assert xtalk.delta_qber(0.0, 0.2) == 0.0
    assert xtalk.delta_qber(0.01, 0.03) == pytest.approx(DELTA_EXAMPLE, abs=1e-12)


def test_delta_qber_domain():
    with pytest.raises(ValueError):
        xtalk.delta_qber(-0.01, 0.03)
    with pytest.raises(ValueError):
        xtalk.delta_qber(0.01, 0.6)


@given(
    chi=st.floats(min_value=1e-9, max_value=1.0),
    q=st.floats(min_value=0.0, max_value=0.5),
)
@settings(max_examples=500)
def test_delta_qber_below_half_chi(chi, q):
    assert xtalk.delta_qber(chi, q) < chi / 2


@given(q=st.floats(min_value=0.0, max_value=0.5))
@settings(max_examples=200)
def test_delta_qber_monotone_in_chi(q):
    values = [xtalk.delta_qber(c, q) for c in (1e-4, 1e-3, 1e-2, 1e-1, 1.0)]
    assert all(b > a for a, b in zip(values, values[1:])) or q == 0.5


def test_delta_qber_decreasing_in_qber0():
    values = [xtalk.delta_qber(0.01, q) for q in np.linspace(0, 0.5, 26)]
    assert all(b <= a + 1e-15 for a, b in zip(values, values[1:]))


def test_delta_qber_concave_in_chi():
    for q in (0.0, 0.03, 0.2, 0.45):
        for chi in (1e-3, 1e-2, 1e-1, 0.4):
            assert xtalk.delta_qber(2 * chi, q) < 2 * xtalk.delta_qber(chi, q)


def test_chi_from_gains():
    assert xtalk.chi_from_gains(7.98e-6, 1.354e-3) == pytest.approx(
        5.893e-3, rel=1e-3
    )
    assert xtalk.chi_from_gains(0.0, 0.01) == 0.0
    assert xtalk.chi_from_gains(0.01, 0.01) == 1.0
    with pytest.raises(ValueError):
        xtalk.chi_from_gains(1e-6, 0.0)


def test_chi_example_yields_quarter_percent_delta():
    # Worst-case crosstalk gain against the decoy gain of the weakest link.
    det = qr.DetectorParams()
    eta = qr.eta_total(14.77, det)
    e_det = qr.calibrate_e_detector(0.0376, eta, det.dark_per_gate, 0.6)
    q_nu, e_nu = qr.gain_and_qber(0.2, eta, det.dark_per_gate, e_det)
    chi = xtalk.chi_from_gains(7.98e-6, q_nu)
    delta = xtalk.delta_qber(chi, e_nu)
    assert delta == pytest.approx(0.0025, abs=0.0005)


def test_aggregate_chi_empty(link):
    summary = xtalk.aggregate_chi([], 1.0, 50.0, 0.01, 0.6, 0.2)
    assert summary.chi_worst == 0.0 and summary.chi_best == 0.0


def test_aggregate_chi_point_in_gate_equalizes(link):
    summary = xtalk.aggregate_chi(
        [point(link, -50.0, 0.5)], 1.0, 50.0, 0.01, 0.6, 0.2
    )
    assert summary.chi_best == summary.chi_worst > 0


def test_aggregate_chi_point_out_of_gate(link):
    summary = xtalk.aggregate_chi(
        [point(link, -50.0, 10.0)], 1.0, 50.0, 0.01, 0.6, 0.2
    )
    assert summary.chi_best == 0.0
    assert summary.chi_worst > 0
    y = 0.6 * 10 ** (-5.0) * 0.2
    assert summary.crosstalk_gain_worst == pytest.approx(y)


def test_aggregate_chi_continuous_duty_scaled(link):
    summary = xtalk.aggregate_chi(
        [continuous(link, -50.0)], 1.0, 50.0, 0.01, 0.6, 0.2
    )
    y = 0.6 * 10 ** (-5.0) * 0.2 * (1.0 / 50.0)
    assert summary.chi_worst == pytest.approx(y / 0.01)
    assert summary.chi_best == summary.chi_worst


def test_aggregate_chi_interband_excluded_by_default(link):
    inter = op.CrosstalkContribution(
        kind="point", band="interband", source_link=link,
        mechanism="test", power_ratio_db=-40.0, arrival_offset_ns=0.2,
    )
    without = xtalk.aggregate_chi([inter], 1.0, 50.0, 0.01, 0.6, 0.2)
    assert without.chi_worst == 0.0
    with_band = xtalk.aggregate_chi(
        [inter], 1.0, 50.0, 0.01, 0.6, 0.2, include_interband=True
    )
    assert with_band.chi_worst > 0
    # Including interband never lowers either ratio.
    assert with_band.chi_worst >= without.chi_worst
    assert with_band.chi_best >= without.chi_best


def test_aggregate_chi_best_not_above_worst(link):
    contributions = [
        point(link, -45.0, 0.3),
        point(link, -50.0, 20.0),
        continuous(link, -60.0),
    ]
    summary = xtalk.aggregate_chi(contributions, 1.0, 50.0, 0.01, 0.6, 0.2)
    assert 0 <= summary.chi_best <= summary.chi_worst


def test_leakage_floor_check():
    check = xtalk.leakage_floor_check(-34.62, 14.77, 27.0)
    assert check.above_floor
    assert check.floor_db == pytest.approx(-41.77)
    assert check.margin_db == pytest.approx(7.15, abs=1e-9)
    assert not xtalk.leakage_floor_check(-60.0, 14.77, 27.0).above_floor
    boundary = xtalk.leakage_floor_check(-41.77, 14.77, 27.0)
    assert not boundary.above_floor
    assert boundary.margin_db == pytest.approx(0.0, abs=1e-12)


def test_recommend_delay_empty():
    assert xtalk.recommend_delay([], 1.0, 50.0) == 0.0


def test_recommend_delay_single_offset(link):
    delay = xtalk.recommend_delay([point(link, -50.0, 0.5)], 1.0, 50.0)
    assert delay == pytest.approx(0.75)


def test_recommend_delay_infeasible(link):
    dense = [point(link, -50.0, o) for o in np.arange(0.0, 50.0, 0.5)]
    assert xtalk.recommend_delay(dense, 1.0, 50.0) is None


def test_recommend_delay_clears_gate(link):
    contributions = [
        point(link, -45.0, 0.3),
        point(link, -50.0, 0.9),
        point(link, -55.0, 26.0),
        continuous(link, -60.0),
    ]
    delay = xtalk.recommend_delay(contributions, 1.0, 50.0)
    assert delay is not None
    shifted = [
        op.CrosstalkContribution(
            kind=c.kind, band=c.band, source_link=c.source_link,
            mechanism=c.mechanism, power_ratio_db=c.power_ratio_db,
            arrival_offset_ns=None if c.arrival_offset_ns is None
            else (c.arrival_offset_ns + delay) % 50.0,
        )
        for c in contributions
    ]
    summary = xtalk.aggregate_chi(shifted, 1.0, 50.0, 0.01, 0.6, 0.2)
    continuous_only = xtalk.aggregate_chi(
        [c for c in shifted if c.kind == "continuous"], 1.0, 50.0, 0.01, 0.6, 0.2
    )
    assert summary.chi_best == pytest.approx(continuous_only.chi_worst)


@given(
    offsets=st.lists(st.floats(min_value=0.0, max_value=50.0), max_size=6),
)
@settings(max_examples=200)
def test_recommend_delay_result_is_feasible(offsets):
    contributions = [point(LINK, -50.0, o) for o in offsets]
    delay = xtalk.recommend_delay(contributions, 1.0, 50.0)
    if delay is not None:
        for o in offsets:
            shifted = (o + delay) % 50.0
            # Clear of the gate [0, 1) by the 0.25 ns guard on both sides.
            assert 1.25 <= shifted <= 49.75


def test_calibrate_contributions(link):
    contributions = [point(link, -45.0, 0.3), continuous(link, -60.0)]
    target = 7.98e-6
    scaled, shift = xtalk.calibrate_contributions(
        contributions, target, 0.6, 0.2, 1.0, 50.0
    )
    summary = xtalk.aggregate_chi(scaled, 1.0, 50.0, 0.01, 0.6, 0.2)
    assert summary.crosstalk_gain_worst == pytest.approx(target, rel=1e-9)
    assert all(c.power_ratio_db <= 0 for c in scaled)
    assert math.isfinite(shift)


def test_apply_crosstalk_zero_is_identity(link):
    src = qr.SourceParams()
    det = qr.DetectorParams(dead_time_us=50.0)
    sysp = qr.SystemParams(e_detector=0.0352840183)
    report = qr.link_performance(14.77, src, det, sysp)
    empty = xtalk.aggregate_chi([], 1.0, 50.0, report.observables.q_mu, 0.6, 0.2)
    assert xtalk.apply_crosstalk_to_link(report, empty) == report


def test_apply_crosstalk_worst_case_small_damage():
    # Calibrated worst case on the weakest link: both QBER shifts must stay
    # within a tenth of their baselines and the secure rate must dip, not die.
    src = qr.SourceParams()
    det = qr.DetectorParams(dead_time_us=50.0)
    eta = qr.eta_total(14.77, det)
    e_det = qr.calibrate_e_detector(0.0376, eta, det.dark_per_gate, src.mu)
    sysp = qr.SystemParams(e_detector=e_det)
    report = qr.link_performance(14.77, src, det, sysp)
    plan = ng.build_plan(2)
    summary = xtalk.aggregate_chi(
        [point(plan.links[0], -10.0, 0.5)],
        1.0, 50.0, report.observables.q_mu, src.mu, det.efficiency,
    )
    # Rescale the single path so the worst-case gain equals the reference.
    scaled, _ = xtalk.calibrate_contributions(
        [point(plan.links[0], -10.0, 0.5)], 7.98e-6, src.mu, det.efficiency,
        1.0, 50.0,
    )
    summary = xtalk.aggregate_chi(
        scaled, 1.0, 50.0, report.observables.q_mu, src.mu, det.efficiency
    )
    adjusted = xtalk.apply_crosstalk_to_link(report, summary, use="worst")
    d_mu = adjusted.observables.e_mu - report.observables.e_mu
    d_nu = adjusted.observables.e_nu - report.observables.e_nu
    assert 0 < d_mu <= report.observables.e_mu / 10
    assert 0 < d_nu <= report.observables.e_nu / 10
    assert adjusted.observables.q_mu > report.observables.q_mu
    assert 0 < adjusted.secure_bps < report.secure_bps


def test_link_observables_validation():
    obs = xtalk.LinkObservables(sifted_rate_bps=31000.0, qber0=0.0292)
    assert obs.qber0 == 0.0292
    with pytest.raises(ValueError):
        xtalk.LinkObservables(sifted_rate_bps=1.0, qber0=0.6)


def test_crosstalk_negligible_flag():
    assert xtalk.crosstalk_negligible(
        (0.001, 0.002), (0.03, 0.04), 7.98e-6, 2e-5
    )
    assert not xtalk.crosstalk_negligible(
        (0.004, 0.002), (0.03, 0.04), 7.98e-6, 2e-5
    )
    assert not xtalk.crosstalk_negligible(
        (0.001, 0.002), (0.03, 0.04), 3e-5, 2e-5
    )
