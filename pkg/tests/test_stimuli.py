"""Stimulus program construction and the exponential synapse."""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rfneuron import (
    CircuitParams,
    ConfigError,
    Polarity,
    StimulusProgram,
    SynapseModel,
    pulse,
    spiking_chirp,
    step,
    synapse_current,
)

# mpmath oracle: sum of 10/f over 13 geometric frequencies 131 -> 262 Hz
CHIRP_TOTAL_DURATION = 0.718211975004037
LAST_BLOCK_PERIOD = 3.81679389312977e-3


def assert_tiles(prog: StimulusProgram):
    segs = prog.segments
    assert segs[0].t_start == 0.0
    assert math.isinf(segs[-1].t_end)
    for a, b in zip(segs, segs[1:]):
        assert a.t_end == b.t_start


class TestPulse:
    def test_breakpoints_match_figure_setup(self):
        prog = pulse(1e-3, 100e-6, 0.5, Polarity.INH)
        assert prog.breakpoints == pytest.approx([0.0, 1e-3, 1.1e-3])
        assert_tiles(prog)

    def test_zero_amplitude_equals_zero_stimulus(self):
        prog = pulse(1e-3, 100e-6, 0.0, Polarity.INH)
        for seg in prog.segments:
            assert seg.V_exc == 0.0 and seg.V_inh == 0.0

    def test_pulse_at_origin_collapses_to_two_segments(self):
        prog = pulse(0.0, 100e-6, 0.5, Polarity.INH)
        assert len(prog.segments) == 2
        assert prog.breakpoints == pytest.approx([0.0, 100e-6])

    def test_polarity_routes_to_the_right_drive(self):
        inh = pulse(1e-3, 1e-4, 0.5, Polarity.INH)
        exc = pulse(1e-3, 1e-4, 0.5, Polarity.EXC)
        assert inh.segments[1].V_inh == 0.5 and inh.segments[1].V_exc == 0.0
        assert exc.segments[1].V_exc == 0.5 and exc.segments[1].V_inh == 0.0

    def test_bounds_violations(self):
        with pytest.raises(ConfigError):
            pulse(1e-3, -1e-6, 0.5)
        with pytest.raises(ConfigError):
            pulse(1e-3, 1e-4, 2.0)


class TestStep:
    def test_two_segments(self):
        prog = step(2e-3, 0.0, 0.5, Polarity.EXC)
        assert len(prog.segments) == 2
        assert prog.drives_at(1e-3) == (0.0, 0.0)
        assert prog.drives_at(3e-3) == (0.5, 0.0)

    def test_step_at_origin_is_single_constant_segment(self):
        prog = step(0.0, 0.0, 0.5, Polarity.EXC)
        assert prog.is_constant
        assert prog.drives_at(0.0) == (0.5, 0.0)

    def test_equal_levels_collapse_to_constant(self):
        prog = step(5e-3, 0.3, 0.3, Polarity.EXC)
        assert prog.is_constant


class TestSpikingChirp:
    def test_figure_chirp_pulse_count_and_periods(self):
        prog = spiking_chirp(131.0, 262.0, 13, 10, 100e-6, 0.5, Polarity.INH)
        on = [s for s in prog.segments if s.V_inh > 0.0]
        assert len(on) == 130
        assert prog.freq_blocks is not None
        assert len(prog.freq_blocks) == 13
        assert prog.freq_blocks[0].frequency == pytest.approx(131.0)
        assert prog.freq_blocks[-1].frequency == pytest.approx(262.0)
        assert 1.0 / prog.freq_blocks[-1].frequency == pytest.approx(
            LAST_BLOCK_PERIOD, rel=1e-12
        )

    def test_total_duration_is_sum_of_block_lengths(self):
        prog = spiking_chirp(131.0, 262.0, 13, 10, 100e-6, 0.5, Polarity.INH)
        assert prog.freq_blocks[-1].t_end == pytest.approx(
            CHIRP_TOTAL_DURATION, rel=1e-12
        )

    def test_single_frequency_is_constant_rate_train(self):
        prog = spiking_chirp(100.0, 200.0, 1, 5, 1e-3, 0.5, Polarity.INH)
        on = [s for s in prog.segments if s.V_inh > 0.0]
        assert len(on) == 5
        starts = [s.t_start for s in on]
        gaps = [b - a for a, b in zip(starts, starts[1:])]
        assert all(g == pytest.approx(1.0 / 100.0, rel=1e-12) for g in gaps)

    def test_pulse_width_must_fit_in_the_fastest_period(self):
        with pytest.raises(ConfigError):
            spiking_chirp(131.0, 262.0, 13, 10, 4e-3, 0.5, Polarity.INH)

    def test_geometric_versus_linear_spacing(self):
        geo = spiking_chirp(100.0, 400.0, 3, 1, 1e-4, 0.5, geometric=True)
        lin = spiking_chirp(100.0, 400.0, 3, 1, 1e-4, 0.5, geometric=False)
        assert geo.freq_blocks[1].frequency == pytest.approx(200.0)
        assert lin.freq_blocks[1].frequency == pytest.approx(250.0)

    @given(st.integers(min_value=1, max_value=8),
           st.integers(min_value=1, max_value=6))
    @settings(max_examples=25, deadline=None)
    def test_pulse_count_property(self, n_freqs, spikes):
        prog = spiking_chirp(50.0, 300.0, n_freqs, spikes, 1e-4, 0.4, Polarity.INH)
        on = [s for s in prog.segments if s.V_inh > 0.0]
        assert len(on) == n_freqs * spikes
        assert_tiles(prog)

    def test_block_lookup(self):
        prog = spiking_chirp(131.0, 262.0, 13, 10, 100e-6, 0.5, Polarity.INH)
        blk = prog.block_at(0.0)
        assert blk.frequency == pytest.approx(131.0)
        assert prog.block_at(1e9) is None


class TestSynapseCurrent:
    def test_zero_inputs_give_zero_current(self, default_params):
        m = SynapseModel.from_params(default_params)
        assert synapse_current(0.0, 0.0, m, default_params) == 0.0

    def test_clamped_gates_the_synapse_off(self, default_params):
        m = SynapseModel.from_params(default_params)
        assert synapse_current(0.5, 0.2, m, default_params, clamped=True) == 0.0

    def test_antisymmetry_with_equal_scales(self, default_params):
        m = SynapseModel(I_s0_exc=1e-15, I_s0_inh=1e-15, kappa=0.7)
        a = synapse_current(0.4, 0.1, m, default_params)
        b = synapse_current(0.1, 0.4, m, default_params)
        assert a == pytest.approx(-b, rel=1e-12)

    def test_calibrated_pulse_displaces_at_least_5mV(self, default_params):
        # the standard 0.5 V / 100 us inhibitory pulse must move U visibly
        p = default_params
        m = SynapseModel.from_params(p)
        I = synapse_current(0.0, 0.5, m, p)
        assert I < 0.0
        assert abs(I) * 100e-6 / p.C1 >= 5e-3

    def test_excitatory_current_is_positive(self, default_params):
        m = SynapseModel.from_params(default_params)
        assert synapse_current(0.5, 0.0, m, default_params) > 0.0


class TestProgramFromCsv(object):
    def test_round_trip(self, tmp_path):
        path = tmp_path / "prog.csv"
        path.write_text(
            "t_start,t_end,V_exc,V_inh\n"
            "0.0,0.001,0.0,0.0\n"
            "0.001,0.002,0.3,0.0\n"
            "0.002,inf,0.0,0.0\n"
        )
        prog = StimulusProgram.from_csv(path)
        assert len(prog.segments) == 3
        assert prog.drives_at(0.0015) == (0.3, 0.0)
        assert_tiles(prog)

    def test_appends_trailing_zero_segment(self, tmp_path):
        path = tmp_path / "prog.csv"
        path.write_text("0.0,0.001,0.2,0.0\n")
        prog = StimulusProgram.from_csv(path)
        assert math.isinf(prog.segments[-1].t_end)
        assert prog.drives_at(0.5) == (0.0, 0.0)

    def test_gap_rejected(self, tmp_path):
        path = tmp_path / "prog.csv"
        path.write_text("0.0,0.001,0.2,0.0\n0.002,inf,0.0,0.0\n")
        with pytest.raises(ConfigError):
            StimulusProgram.from_csv(path)
