"""
End-to-end checks of the bundled platform data against the expected PDN trade-offs
"""
import pytest

from cost_model import estimate_cost_area, icc_max_profile, normalize_costs
from etee import eval_power_state_mix, evaluate
from pdn_core import Architecture, FlexMode, PackagePowerState, WorkloadType
from perf_budget import average_gain, compare_performance

MT = WorkloadType.MULTI_THREAD
ARS = (0.4, 0.56, 0.8)
VIDEO = [(PackagePowerState.C0_MIN, 0.10, 2.5), (PackagePowerState.C2, 0.05, 1.2), (PackagePowerState.C8, 0.85, 0.13)]


def _etees(presets, loads_model, curves, tdp, wl_type, ar):
    return {name: evaluate(t, loads_model.loads(tdp, wl_type, ar), curves=curves).etee
            for name, t in presets.items()}


@pytest.mark.acceptance
@pytest.mark.slow
class TestEfficiencyTradeoffs:
    """Test the architecture orderings across TDP"""

    @pytest.mark.parametrize("wl_type", [WorkloadType.MULTI_THREAD, WorkloadType.SINGLE_THREAD])
    @pytest.mark.parametrize("ar", ARS)
    def test_crossover(self, presets, loads_model, curves, ar, wl_type):
        """Test IVR trails MBVR and LDO at 4 W and leads them at 50 W"""
        low = _etees(presets, loads_model, curves, 4, wl_type, ar)
        high = _etees(presets, loads_model, curves, 50, wl_type, ar)
        for other in (Architecture.MBVR, Architecture.LDO):
            assert low[Architecture.IVR] < low[other]
            assert high[Architecture.IVR] > high[other]

    @pytest.mark.parametrize("wl_type", [WorkloadType.MULTI_THREAD, WorkloadType.SINGLE_THREAD])
    @pytest.mark.parametrize("tdp", [4, 18, 50])
    def test_flexwatts_tracks_the_best(self, presets, loads_model, curves, tdp, wl_type):
        """Test FlexWatts stays within 0.5% of MBVR, IVR and LDO and within 1% of I+MBVR"""
        for ar in ARS:
            etee = _etees(presets, loads_model, curves, tdp, wl_type, ar)
            fw = etee[Architecture.FLEXWATTS]
            best_single = max(etee[a] for a in (Architecture.MBVR, Architecture.IVR, Architecture.LDO))
            assert fw >= best_single * (1 - 0.005)
            assert fw >= etee[Architecture.I_MBVR] * (1 - 0.01)

    @pytest.mark.parametrize("tdp", [18, 50])
    def test_single_stage_improves_with_ar(self, presets, loads_model, curves, tdp):
        """Test MBVR and LDO ETEE climb as the workload gets more active"""
        for name in (Architecture.MBVR, Architecture.LDO):
            etee = [evaluate(presets[name], loads_model.loads(tdp, MT, ar), curves=curves).etee
                    for ar in (0.2, 0.4, 0.6, 0.8, 1.0)]
            assert etee == sorted(etee)
            assert len(set(etee)) == len(etee)

    def test_video_playback(self, presets, state_model, curves):
        """Test single-stage PDNs save 8-13% over IVR and FlexWatts LdoMode is within 1% of MBVR"""
        power = {name: eval_power_state_mix(t, VIDEO, state_model=state_model, curves=curves,
                                            mode=FlexMode.LDO if name == Architecture.FLEXWATTS else None)
                 for name, t in presets.items()}
        ivr = power[Architecture.IVR]
        assert 0.08 <= 1 - power[Architecture.MBVR] / ivr <= 0.13
        assert 0.08 <= 1 - power[Architecture.LDO] / ivr <= 0.13
        assert abs(power[Architecture.FLEXWATTS] / power[Architecture.MBVR] - 1) < 0.01


@pytest.mark.acceptance
@pytest.mark.slow
class TestPerformanceAndCost:
    """Test what the efficiency differences buy and what they cost"""

    def test_low_tdp_performance(self, presets, inputs, curves):
        """Test the 4 W budget FlexWatts frees over IVR buys at least 15% performance"""
        results = [compare_performance(list(presets.values()), inputs.loads, 4, w, inputs.pf_curves, curves=curves)
                   for w in inputs.workloads]
        assert average_gain(results, "FlexWatts") >= 0.15

    @pytest.mark.parametrize("tdp", [4, 18, 50])
    def test_flexwatts_performance_near_the_best(self, presets, inputs, curves, tdp):
        """Test FlexWatts is within 2% of the best PDN on every CPU and graphics workload"""
        for w in inputs.workloads:
            results = compare_performance(list(presets.values()), inputs.loads, tdp, w, inputs.pf_curves,
                                          curves=curves)
            perf = {r.topology: r.performance for r in results}
            assert perf["FlexWatts"] >= max(perf.values()) * 0.98, w.name

    @pytest.mark.parametrize("tdp", [4, 18, 50])
    def test_cost_ratios(self, presets, inputs, curves, tdp):
        """Test MBVR and LDO cost and area bands, and FlexWatts within 1.1x of IVR"""
        estimates = [estimate_cost_area(icc_max_profile(t, tdp, inputs.loads, curves), inputs.cost_table)
                     for t in presets.values()]
        ratios = {r.topology: r for r in normalize_costs(estimates, Architecture.IVR)}
        assert 2.1 <= ratios["MBVR"].bom_ratio <= 4.2
        assert 1.5 <= ratios["MBVR"].area_ratio <= 4.5
        assert 1.6 <= ratios["LDO"].bom_ratio <= 3.1
        assert 1.1 <= ratios["LDO"].area_ratio <= 3.3
        for r in (ratios["FlexWatts"].bom_ratio, ratios["FlexWatts"].area_ratio):
            assert max(r, 1 / r) <= 1.1
