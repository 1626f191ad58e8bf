"""
Unit tests for VR sizing, binning and cost/area normalization
"""
import pytest

from cost_model import (CostAreaTable, IccMaxProfile, RailCurrent, RegulatorClass, estimate_cost_area,
                        icc_max_profile, normalize_costs, rail_currents, regulator_class)
from errors import CurrentExceedsTable
from pdn_core import Architecture, FlexMode, WorkloadType

TDPS = (4, 6, 8, 10, 15, 18, 25, 35, 44, 50)


@pytest.fixture
def small_table():
    return CostAreaTable.from_rows([
        ("PMIC", 1.0, 0.10, 1.0), ("PMIC", 2.0, 0.20, 2.0), ("PMIC", 4.0, 0.35, 3.0),
        ("VRM", 10.0, 1.0, 20.0), ("VRM", 40.0, 3.0, 60.0),
    ])


def _estimates(presets, inputs, curves, tdp):
    return [estimate_cost_area(icc_max_profile(t, tdp, inputs.loads, curves), inputs.cost_table)
            for t in presets.values()]


@pytest.mark.unit
class TestRegulatorClass:
    """Test the PMIC/VRM boundary"""

    def test_eighteen_watts_is_pmic(self):
        """Test the boundary is inclusive"""
        assert regulator_class(18) == RegulatorClass.PMIC

    def test_above_eighteen_is_vrm(self):
        """Test 18.1 W"""
        assert regulator_class(18.1) == RegulatorClass.VRM


@pytest.mark.unit
class TestCostAreaTable:
    """Test threshold binning"""

    def test_exact_threshold_bins_to_itself(self, small_table):
        """Test icc_max equal to a threshold"""
        assert small_table.bin(RegulatorClass.PMIC, 2.0).icc_max == 2.0

    def test_rounds_up(self, small_table):
        """Test the smallest threshold above the current"""
        row = small_table.bin(RegulatorClass.PMIC, 2.0001)
        assert (row.icc_max, row.cost, row.area) == (4.0, 0.35, 3.0)

    def test_current_beyond_table(self, small_table):
        """Test CurrentExceedsTable past the largest threshold"""
        with pytest.raises(CurrentExceedsTable) as exc_info:
            small_table.bin(RegulatorClass.VRM, 41.0)
        assert exc_info.value.code == "CurrentExceedsTable"

    def test_duplicate_threshold_rejected(self):
        """Test two rows with one threshold"""
        with pytest.raises(ValueError):
            CostAreaTable.from_rows([("PMIC", 1.0, 0.1, 1.0), ("PMIC", 1.0, 0.2, 2.0)])

    def test_falling_cost_rejected(self):
        """Test cost must grow with the threshold"""
        with pytest.raises(ValueError):
            CostAreaTable.from_rows([("PMIC", 1.0, 0.3, 1.0), ("PMIC", 2.0, 0.2, 2.0)])

    def test_estimate_sums_rails(self, small_table):
        """Test BOM and area add up over the rails of the class picked by TDP"""
        profile = IccMaxProfile("MBVR", 10, (RailCurrent("CPU", "vcc_cpu", 3.0), RailCurrent("SA", "vcc_sa", 0.5)))
        estimate = estimate_cost_area(profile, small_table)
        assert estimate.vr_class == RegulatorClass.PMIC
        assert estimate.bom == pytest.approx(0.45)
        assert estimate.area == pytest.approx(4.0)
        assert estimate_cost_area(profile, small_table, tdp=25).vr_class == RegulatorClass.VRM


@pytest.mark.unit
class TestIccMax:
    """Test worst-case rail currents"""

    def test_worst_case_over_workload_types(self, mbvr, loads_model, curves):
        """Test each rail takes the largest current over the workload types at AR 1"""
        profile = icc_max_profile(mbvr, 18, loads_model, curves)
        for wl_type in WorkloadType:
            currents = rail_currents(mbvr, loads_model.loads(18, wl_type, 1.0), curves)
            for group, current in currents.items():
                assert profile.rail(group).icc_max >= current
        assert [r.group for r in profile.rails] == ["CPU", "GFX", "SA", "IO"]

    def test_flexwatts_sized_in_ivr_mode(self, flexwatts, loads_model, curves):
        """Test FlexWatts rails are the IvrMode currents"""
        loads = loads_model.loads(50, WorkloadType.MULTI_THREAD, 1.0)
        assert rail_currents(flexwatts, loads, curves) == rail_currents(flexwatts, loads, curves, mode=FlexMode.IVR)
        profile = icc_max_profile(flexwatts, 50, loads_model, curves, [WorkloadType.MULTI_THREAD])
        assert profile.rail("IN").icc_max == pytest.approx(rail_currents(flexwatts, loads, curves)["IN"])

    def test_higher_input_voltage_halves_current(self, mbvr, ivr, loads_model, curves):
        """Test the 1.8 V input rail carries well under the summed MBVR currents"""
        a = icc_max_profile(mbvr, 50, loads_model, curves).total
        b = icc_max_profile(ivr, 50, loads_model, curves).total
        assert 0.25 < b / a < 0.75


@pytest.mark.unit
class TestNormalization:
    """Test cost and area relative to IVR"""

    def test_reference_is_one(self, presets, inputs, curves):
        """Test the reference normalizes to itself"""
        ratios = normalize_costs(_estimates(presets, inputs, curves, 15), Architecture.IVR)
        ivr = next(r for r in ratios if r.topology == "IVR")
        assert ivr.bom_ratio == 1.0
        assert ivr.area_ratio == 1.0

    def test_missing_reference(self, presets, inputs, curves):
        """Test normalizing without the reference estimate"""
        estimates = [e for e in _estimates(presets, inputs, curves, 15) if e.topology != "IVR"]
        with pytest.raises(ValueError):
            normalize_costs(estimates, Architecture.IVR)

    def test_bundled_ratios(self, presets, inputs, curves):
        """Test MBVR and LDO cost several times IVR while FlexWatts stays close to it"""
        for tdp in TDPS:
            ratios = {r.topology: r for r in normalize_costs(_estimates(presets, inputs, curves, tdp),
                                                             Architecture.IVR)}
            assert 2.1 <= ratios["MBVR"].bom_ratio <= 4.2
            assert 1.5 <= ratios["MBVR"].area_ratio <= 4.5
            assert 1.6 <= ratios["LDO"].bom_ratio <= 3.1
            assert 1.1 <= ratios["LDO"].area_ratio <= 3.3
            assert 1 / 1.1 <= ratios["FlexWatts"].bom_ratio <= 1.1
            assert 1 / 1.1 <= ratios["FlexWatts"].area_ratio <= 1.1
            assert ratios["MBVR"].vr_class == regulator_class(tdp)
