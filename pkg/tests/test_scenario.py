import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from handover.errors import InvalidParameterError, ScenarioError
from handover.protocols import PROTOCOLS, ProtocolId
from handover.scenario import (
    CRITERIA,
    load_pairwise,
    load_scenario,
    load_weights,
    propagation_delay,
    shipped_path,
    shipped_scenario,
)

BASE = shipped_path("scenario_b.ini").read_text()


def edit(text, old, new):
    assert old in text
    return text.replace(old, new, 1)


def test_propagation_delay():
    assert propagation_delay(500, 2e8) == 2.5e-6
    assert propagation_delay(0, 3e8) == 0.0
    assert propagation_delay(2000, 3e8) == pytest.approx(6.667e-6, abs=1e-9)
    with pytest.raises(InvalidParameterError):
        propagation_delay(1, 0)
    with pytest.raises(InvalidParameterError):
        propagation_delay(-1, 1)


def test_shipped_scenarios():
    a, b = shipped_scenario("a"), shipped_scenario("b")
    assert a.params.T_s == 2.5e-3 and b.params.T_s == 2.5e-6
    for s in (a, b):
        assert s.params.d_s == 500 / 2e8
        assert s.params.f_s == 35 / 3e8
        assert s.params.F_s == 2000 / 3e8
        assert s.params.h_s == 0.0 and s.params.D_s == 1.0
        assert s.protocols == PROTOCOLS
        assert s.cell.channels_total == 10 and s.cell.guard_channels == 3
        assert set(s.provenance) >= {"T", "f", "F", "d", "h", "D", "eta_dwell", "mu_call"}
        assert len(s.digest) == 64
    assert a.reference == "table8" and b.reference == "table9"
    assert a.digest != b.digest


def test_guard_equal_to_channels_rejected():
    text = edit(BASE, "guard_channels = 3", "guard_channels = 10")
    with pytest.raises(ScenarioError) as e:
        load_scenario(text)
    assert e.value.key == "cell.guard_channels"
    assert e.value.line == text.splitlines().index("guard_channels = 10") + 1
    assert e.value.column == 18


def test_unknown_key_rejected_with_location():
    text = edit(BASE, "[traffic]\n", "[traffic]\nbitrate_kbps = 32\n")
    with pytest.raises(ScenarioError) as e:
        load_scenario(text)
    assert e.value.key == "traffic.bitrate_kbps"
    assert e.value.line is not None
    assert "line" in str(e.value)


def test_unknown_section_rejected():
    with pytest.raises(ScenarioError, match="radio"):
        load_scenario(BASE + "\n[radio]\nx = 1\n")


def test_missing_key_reports_path():
    text = edit(BASE, "holding_time_s = 300\n", "")
    with pytest.raises(ScenarioError) as e:
        load_scenario(text)
    assert e.value.key == "cell.holding_time_s"


@pytest.mark.parametrize("old, new, key", [
    ("wireless_speed_m_per_s = 2e8", "wireless_speed_m_per_s = 0", "links.wireless_speed_m_per_s"),
    ("wireless_length_m = 500", "wireless_length_m = -5", "links.wireless_length_m"),
    ("processing_T_s = 2.5e-6", "processing_T_s = fast", "delays.processing_T_s"),
    ("processing_T_s = 2.5e-6", "processing_T_s = nan", "delays.processing_T_s"),
    ("channels_total = 10", "channels_total = 9.5", "cell.channels_total"),
    ("new_call_rate_per_s = 0.0055", "new_call_rate_per_s = -1", "cell.new_call_rate_per_s"),
])
def test_invalid_values_name_the_key(old, new, key):
    with pytest.raises(ScenarioError) as e:
        load_scenario(edit(BASE, old, new))
    assert e.value.key == key


def test_parse_error_has_line():
    with pytest.raises(ScenarioError) as e:
        load_scenario("[links]\nthis line has no separator\n")
    assert e.value.line == 2


def test_duplicate_key_rejected():
    with pytest.raises(ScenarioError):
        load_scenario(edit(BASE, "[traffic]\n", "[traffic]\nthroughput_pkt_per_s = 1\n"))


def test_defaults_for_optional_delays():
    text = edit(edit(BASE, "l2_handover_h_s = 0\n", ""), "dad_D_s = 1\n", "")
    s = load_scenario(text)
    assert s.params.h_s == 0.0 and s.params.D_s == 1.0
    assert "default" in s.provenance["D"]


def test_protocol_subset_and_override():
    text = edit(BASE, "reference = table9", "reference = none\nprotocols = mipv6, EFMIPv6")
    text += "\n[blocking_override]\nMIPv6 = 0.1, 0.01\n"
    s = load_scenario(text)
    assert s.protocols == (ProtocolId.MIPV6, ProtocolId.EFMIPV6)
    assert s.blocking_override[ProtocolId.MIPV6] == (0.1, 0.01)
    with pytest.raises(ScenarioError):
        load_scenario(edit(BASE, "reference = table9", "protocols = MIPv6, PMIPv6"))
    with pytest.raises(ScenarioError):
        load_scenario(BASE + "\n[blocking_override]\nMIPv6 = 1.5, 0\n")


def test_weights_file():
    w = load_weights(shipped_path("signaling_heavy_weights.ini").read_text())
    np.testing.assert_allclose(w, [0.3, 0.1, 0, 0, 0.6, 0])
    with pytest.raises(ScenarioError):
        load_weights("[weights]\nlatency = 1\n")


def test_pairwise_file():
    m, criteria = load_pairwise(shipped_path("voice_pairwise.ini").read_text())
    assert criteria == CRITERIA
    assert m.shape == (6, 6)
    np.testing.assert_allclose(m * m.T, 1.0)
    m2, c2 = load_pairwise("[pairwise]\nrow_1 = 1, 3\nrow_2 = 1/3, 1\n")
    assert c2 is None
    np.testing.assert_allclose(m2, [[1, 3], [1 / 3, 1]])
    with pytest.raises(ScenarioError):
        load_pairwise("[pairwise]\nrow_1 = 1, 3\nrow_2 = 1, 1\n")


def test_pairwise_in_scenario():
    text = edit(BASE, "weights = 1, 1, 1, 1, 1, 1\n", "")
    text += "\n[pairwise]\n" + "\n".join(
        f"row_{i + 1} = " + ", ".join("1" for _ in range(6)) for i in range(6)) + "\n"
    s = load_scenario(text)
    assert s.mcdm.weights is None and s.mcdm.pairwise.shape == (6, 6)


finite_pos = st.floats(0, 1e4, allow_nan=False, allow_infinity=False)


@settings(max_examples=100, deadline=None)
@given(length=finite_pos, speed=st.floats(1, 3e8), T=st.floats(0, 1), tp=finite_pos)
def test_accepted_files_resolve_to_finite_params(length, speed, T, tp):
    text = edit(edit(edit(BASE, "wireless_length_m = 500", f"wireless_length_m = {length!r}"),
                     "wireless_speed_m_per_s = 2e8", f"wireless_speed_m_per_s = {speed!r}"),
                "processing_T_s = 2.5e-6", f"processing_T_s = {T!r}")
    text = edit(text, "throughput_pkt_per_s = 50", f"throughput_pkt_per_s = {tp!r}")
    s = load_scenario(text)
    assert all(math.isfinite(v) for v in s.params.delays().values())
    assert s.params.d_s == length / speed
