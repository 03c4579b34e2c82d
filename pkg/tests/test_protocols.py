import pytest

from handover.delay import Linear, canonical_form, equivalent, evaluate, parse
from handover.protocols import (
    PROTOCOLS,
    ProtocolId,
    ProtocolSpec,
    TimelineEvent,
    check_chain_consistency,
    derive_handover_delay,
    derive_packet_loss_window,
    handover_delay,
    packet_loss,
    signaling_delay,
    smipv6_rerouting_margin,
    timeline,
)

M, FM, SM, EF, HM = PROTOCOLS


def test_protocol_ids_parse_case_insensitively():
    assert ProtocolId.parse("efmipv6") is EF
    assert str(HM) == "HMIPv6"
    with pytest.raises(ValueError):
        ProtocolId.parse("PMIPv6")


@pytest.mark.parametrize("pid, rows", [(M, 9), (FM, 16), (SM, 9), (EF, 14), (HM, 16)])
def test_row_counts(pid, rows):
    assert len(timeline(pid).events) == rows


def test_timeline_examples():
    assert timeline(SM).events[-1].name == "Packets sent by CNs are received"
    assert timeline(SM).events[-1].timestamp == parse("6f+2F+2d+12T")
    first = timeline(M).events[0]
    assert first.name == "L2 Trigger" and first.timestamp == Linear()
    assert timeline(FM).event("BUs are received by CNs").timestamp == parse("11f+7d+F+h+28T")


def test_event_lookup_unknown():
    with pytest.raises(KeyError):
        timeline(M).event("nope")


def test_handover_delay_examples(scenario_a):
    assert evaluate(handover_delay(SM), scenario_a) == pytest.approx(0.0100004, abs=1e-6)
    assert evaluate(handover_delay(HM), scenario_a) == pytest.approx(0.015005, abs=1e-6)
    p = scenario_a.replace(h_s=10e-3)
    left = evaluate(parse("2d+h+6T"), p)
    right = evaluate(parse("4f+7T+d"), p)
    assert left > right
    assert evaluate(handover_delay(FM), p) == pytest.approx(0.0250050, abs=1e-6) == left


def test_signaling_delay_examples(scenario_a):
    assert evaluate(signaling_delay(EF), scenario_a) == pytest.approx(0.0525155, abs=1e-6)
    assert evaluate(signaling_delay(SM), scenario_a) == pytest.approx(1.0125095, abs=1e-6)


@pytest.mark.parametrize("pid", PROTOCOLS)
def test_signaling_is_linear_in_dad(pid, scenario_a):
    e = signaling_delay(pid)
    drop = evaluate(e, scenario_a) - evaluate(e, scenario_a.replace(D_s=0.0))
    assert drop == pytest.approx(e.coefficient("D") * 1.0, abs=1e-12)
    assert e.coefficient("D") == (0 if pid is EF else 1)


def test_packet_loss_examples(scenario_a):
    window, lost = packet_loss(M, scenario_a.replace(throughput_pkt_per_s=100))
    assert window == pytest.approx(0.0875310, abs=1e-6)
    assert lost == pytest.approx(8.753, abs=1e-3)
    assert packet_loss(FM, scenario_a.replace(throughput_pkt_per_s=100)) == (0.0, 0.0)
    window, lost = packet_loss(M, scenario_a)
    assert window == pytest.approx(0.0875310, abs=1e-6) and lost == 0.0


def test_smipv6_margin(scenario_a):
    assert smipv6_rerouting_margin(scenario_a) > 0
    assert smipv6_rerouting_margin(scenario_a.replace(h_s=1.0)) < 0


def test_table_canonical_forms():
    assert canonical_form(handover_delay(SM)) == "4T+4f"
    assert canonical_form(handover_delay(EF)) == "max(5T+3f+F+h, 3T+4f)"
    assert canonical_form(timeline(M).packet_loss_window) == "35T+22f+2F+6d+h"


@pytest.mark.parametrize("pid, agrees", [(M, True), (FM, False), (SM, True), (EF, True), (HM, False)])
def test_handover_derivations(pid, agrees):
    d = derive_handover_delay(pid)
    assert d.agrees is agrees


def test_mipv6_derivation_detail():
    d = derive_handover_delay(M)
    assert d.derived == parse("12T+6f+2d+h+2F")
    assert d.structurally_equal


def test_fmipv6_derivation_differs_from_listed():
    d = derive_handover_delay(FM)
    assert equivalent(d.derived, parse("max(2d+h+4T, 4f+5T)"))


def test_loss_window_derivation():
    d = derive_packet_loss_window()
    assert d.agrees and d.derived == parse("35T+22f+6d+h+2F")


def test_chain_rs_ra_discrepancy():
    report = check_chain_consistency(timeline(M))
    bad = {x.event: x for x in report.discrepancies}
    assert "RA" in bad
    assert bad["RA"].expected == parse("7T+4f+d")
    assert bad["RA"].listed == parse("6T+4f+d")
    assert "RA" in str(bad["RA"])


def test_chain_first_rows_consistent():
    report = check_chain_consistency(timeline(SM))
    assert "FBU" not in {x.event for x in report.discrepancies}
    assert "L2 Trigger" in report.unchecked


EXPECTED_DISCREPANCIES = {
    M: {"RA"},
    FM: {"PrRtAdv"},
    SM: {"Packets sent by CNs@NCOA"},
    EF: {"nCoA-REQ-PAR", "Rerouted packets are received"},
    HM: {"PrRtAdv", "Packets are received by MN"},
}


@pytest.mark.parametrize("pid", PROTOCOLS)
def test_chain_audit_findings(pid):
    report = check_chain_consistency(timeline(pid))
    assert {x.event for x in report.discrepancies} == EXPECTED_DISCREPANCIES[pid]
    assert report.checked + len(report.unchecked) == len(timeline(pid).events)


def test_synthetic_consistent_chain():
    events = (
        TimelineEvent("a", parse("2T"), parse("0"), ()),
        TimelineEvent("b", None, parse("2T"), ("a",)),
    )
    spec = ProtocolSpec(None, events, None, 0.0, parse("0"), parse("0"), parse("0"), (), "a")
    report = check_chain_consistency(spec)
    assert report.consistent and report.checked == 1
