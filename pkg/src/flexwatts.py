"""
FlexWatts runtime model
ETEE tables for both hybrid modes, the mode predictor that reads them, and a trace-driven
simulation of mode switching with its transition cost.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from efficiency_curves import CurvePack
from errors import EmptyTrace
from etee import check_residencies, eval_flexwatts, eval_power_state_mix, power_state_etee
from parallel_sweep import ParallelEvaluator
from pdn_core import Architecture, DomainLoad, FlexMode, PackagePowerState, PdnTopology, WorkloadType
from platform_model import LoadsModel, PowerStateModel

logger = logging.getLogger("pdnspot.flexwatts")

DEFAULT_TDP_AXIS: Tuple[float, ...] = (4, 6, 8, 10, 15, 18, 25, 35, 44, 50)
DEFAULT_AR_AXIS: Tuple[float, ...] = tuple(round(0.05 * k, 2) for k in range(1, 21))
MODES: Tuple[FlexMode, ...] = (FlexMode.IVR, FlexMode.LDO)
DEEP_IDLE_STATES = (PackagePowerState.C6, PackagePowerState.C7, PackagePowerState.C8)
RESIDENCY_COLUMNS: Dict[PackagePowerState, str] = {
    PackagePowerState.C0: "c0_res",
    PackagePowerState.C0_MIN: "c0min_res",
    PackagePowerState.C2: "c2_res",
    PackagePowerState.C3: "c3_res",
    PackagePowerState.C6: "c6_res",
    PackagePowerState.C7: "c7_res",
    PackagePowerState.C8: "c8_res",
}


def _strictly_increasing(axis: Sequence[float]) -> bool:
    return all(b > a for a, b in zip(axis, axis[1:]))


@dataclass(frozen=True)
class GridSpec:
    tdp: Tuple[float, ...] = DEFAULT_TDP_AXIS
    ar: Tuple[float, ...] = DEFAULT_AR_AXIS
    workload_types: Tuple[WorkloadType, ...] = tuple(WorkloadType)

    def __post_init__(self):
        for name in ("tdp", "ar", "workload_types"):
            axis = tuple(getattr(self, name))
            if not axis:
                raise ValueError(f"grid axis {name} is empty")
            object.__setattr__(self, name, axis)
        if not _strictly_increasing(self.tdp) or not _strictly_increasing(self.ar):
            raise ValueError("grid axes must be strictly increasing")
        if any(not 0.0 < ar <= 1.0 for ar in self.ar):
            raise ValueError("AR grid points must be within (0, 1]")
        object.__setattr__(self, "workload_types", tuple(WorkloadType(w) for w in self.workload_types))

    @property
    def size(self) -> int:
        return len(self.tdp) * len(self.ar) * len(self.workload_types)


@dataclass(frozen=True)
class TableLookup:
    etee: float
    clamped: bool = False


class EteeTable:
    """Per-mode ETEE over (workload type, TDP, AR) plus one value per package power state.

    Lookups are linear in TDP and AR and exact in workload type and power state.
    """

    def __init__(self, grid: GridSpec, active: Mapping[Tuple[FlexMode, WorkloadType], np.ndarray],
                 states: Mapping[Tuple[FlexMode, PackagePowerState], float],
                 state_power: Mapping[PackagePowerState, float]):
        shape = (len(grid.tdp), len(grid.ar))
        self.grid = grid
        self._tdp = np.asarray(grid.tdp, dtype=float)
        self._ar = np.asarray(grid.ar, dtype=float)
        self._active: Dict[Tuple[FlexMode, WorkloadType], np.ndarray] = {}
        for (mode, wl_type), values in active.items():
            values = np.asarray(values, dtype=float)
            where = f"{FlexMode(mode).value}/{WorkloadType(wl_type).value}"
            if values.shape != shape:
                raise ValueError(f"{where}: table shape {values.shape}, expected {shape}")
            if np.any(values <= 0) or np.any(values > 1):
                raise ValueError(f"{where}: stored ETEE outside (0, 1]")
            self._active[(FlexMode(mode), WorkloadType(wl_type))] = values
        for key, value in states.items():
            if not 0.0 < value <= 1.0:
                raise ValueError(f"{key}: stored ETEE {value} outside (0, 1]")
        self._states = {(FlexMode(m), PackagePowerState(s)): v for (m, s), v in states.items()}
        self._state_power = {PackagePowerState(s): p for s, p in state_power.items()}

    @property
    def power_states(self) -> List[PackagePowerState]:
        return [s for s in PackagePowerState if s in self._state_power]

    def values(self, mode: FlexMode, workload_type: WorkloadType) -> np.ndarray:
        return self._active[(FlexMode(mode), WorkloadType(workload_type))]

    def lookup(self, mode: FlexMode, tdp: float, ar: float, workload_type: WorkloadType) -> TableLookup:
        values = self.values(mode, workload_type)
        clamped = (tdp < self._tdp[0] or tdp > self._tdp[-1] or ar < self._ar[0] or ar > self._ar[-1])
        along_ar = np.array([np.interp(ar, self._ar, row) for row in values])
        etee = float(np.interp(tdp, self._tdp, along_ar))
        if clamped:
            logger.debug("table lookup clamped at tdp=%s ar=%s", tdp, ar)
        return TableLookup(etee, clamped)

    def etee(self, mode: FlexMode, tdp: float, ar: float, workload_type: WorkloadType) -> float:
        return self.lookup(mode, tdp, ar, workload_type).etee

    def state_etee(self, mode: FlexMode, state: PackagePowerState) -> float:
        return self._states[(FlexMode(mode), PackagePowerState(state))]

    def state_power(self, state: PackagePowerState) -> float:
        return self._state_power[PackagePowerState(state)]

    def map_values(self, fn) -> "EteeTable":
        """A copy with fn applied to every stored ETEE"""
        return EteeTable(
            self.grid,
            {k: np.vectorize(fn)(v) for k, v in self._active.items()},
            {k: fn(v) for k, v in self._states.items()},
            self._state_power,
        )


def build_etee_table(t: PdnTopology, loads: LoadsModel, grid: GridSpec = GridSpec(),
                     state_model: Optional[PowerStateModel] = None, curves: Optional[CurvePack] = None,
                     evaluator: Optional[ParallelEvaluator] = None) -> EteeTable:
    """Fill the table by evaluating the FlexWatts topology in both modes at every grid point"""
    if t.name != Architecture.FLEXWATTS:
        raise ValueError(f"{t.display_name} is not a FlexWatts topology")
    evaluator = evaluator or ParallelEvaluator(max_workers=1)
    cells = [(mode, wl_type, tdp, ar)
             for mode in MODES for wl_type in grid.workload_types for tdp in grid.tdp for ar in grid.ar]

    def cell_etee(cell) -> float:
        mode, wl_type, tdp, ar = cell
        return eval_flexwatts(t, loads.loads(tdp, wl_type, ar, t.domains), mode, curves).etee

    flat = evaluator.map_ordered(cell_etee, cells)
    shape = (len(grid.tdp), len(grid.ar))
    per_block = shape[0] * shape[1]
    active = {}
    for n, (mode, wl_type) in enumerate((m, w) for m in MODES for w in grid.workload_types):
        active[(mode, wl_type)] = np.array(flat[n * per_block:(n + 1) * per_block]).reshape(shape)

    states: Dict[Tuple[FlexMode, PackagePowerState], float] = {}
    state_power: Dict[PackagePowerState, float] = {}
    if state_model is not None:
        for state in state_model.states:
            state_power[state] = state_model.default_power(state)
            for mode in MODES:
                states[(mode, state)] = power_state_etee(t, state, state_power[state], state_model,
                                                         mode, curves).etee

    logger.debug("built ETEE table with %d grid points and %d power states", len(cells), len(state_power))
    return EteeTable(grid, active, states, state_power)


@dataclass(frozen=True)
class ModePrediction:
    mode: FlexMode
    ivr_etee: float
    ldo_etee: float
    clamped: bool = False


def mode_prediction(table: EteeTable, tdp: float, ar: float, workload_type: WorkloadType,
                    power_state: PackagePowerState = PackagePowerState.C0) -> ModePrediction:
    """IvrMode when its ETEE is at least LdoMode's, otherwise LdoMode.

    Active-state queries outside the table grid are clamped to its edge and flagged.
    """
    clamped = False
    if PackagePowerState(power_state) == PackagePowerState.C0:
        ivr_lookup = table.lookup(FlexMode.IVR, tdp, ar, workload_type)
        ldo_lookup = table.lookup(FlexMode.LDO, tdp, ar, workload_type)
        ivr, ldo = ivr_lookup.etee, ldo_lookup.etee
        clamped = ivr_lookup.clamped or ldo_lookup.clamped
    else:
        ivr = table.state_etee(FlexMode.IVR, power_state)
        ldo = table.state_etee(FlexMode.LDO, power_state)
    mode = FlexMode.IVR if ivr >= ldo else FlexMode.LDO
    if clamped:
        logger.debug("mode %s predicted from clamped table at tdp=%s ar=%s", mode.value, tdp, ar)
    return ModePrediction(mode, ivr, ldo, clamped)


def predict_mode(table: EteeTable, tdp: float, ar: float, workload_type: WorkloadType,
                 power_state: PackagePowerState = PackagePowerState.C0) -> FlexMode:
    return mode_prediction(table, tdp, ar, workload_type, power_state).mode


@dataclass(frozen=True)
class SwitchLatency:
    enter_c6: float = 45e-6
    vr_adjust: float = 19e-6
    exit_c6: float = 30e-6

    def __post_init__(self):
        if min(self.enter_c6, self.vr_adjust, self.exit_c6) < 0:
            raise ValueError("switch latencies must be >= 0")

    @property
    def total(self) -> float:
        return self.enter_c6 + self.vr_adjust + self.exit_c6


@dataclass(frozen=True)
class TracePhase:
    duration: float
    workload_type: WorkloadType
    ar: float
    residencies: Mapping[PackagePowerState, float] = field(
        default_factory=lambda: {PackagePowerState.C0: 1.0})
    tdp: Optional[float] = None
    loads: Optional[Tuple[DomainLoad, ...]] = None

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError(f"phase duration must be > 0, got {self.duration}")
        if not 0.0 < self.ar <= 1.0:
            raise ValueError(f"phase AR must be within (0, 1], got {self.ar}")
        object.__setattr__(self, "workload_type", WorkloadType(self.workload_type))
        object.__setattr__(self, "residencies",
                           {PackagePowerState(s): r for s, r in self.residencies.items()})
        check_residencies(self.residencies.values(), "trace phase")

    @property
    def deep_idle(self) -> float:
        return sum(self.residencies.get(s, 0.0) for s in DEEP_IDLE_STATES)

    def active_loads(self, loads: LoadsModel, tdp: float, domains: Sequence[str]) -> List[DomainLoad]:
        if self.loads is not None:
            return list(self.loads)
        return loads.loads(tdp, self.workload_type, self.ar, domains)


def estimate_phase_supply(table: EteeTable, phase: TracePhase, mode: FlexMode, tdp: float,
                          p_active: float) -> float:
    """Residency-weighted supply power of a phase as the table sees it"""
    total = 0.0
    for state, residency in phase.residencies.items():
        if residency == 0:
            continue
        if state == PackagePowerState.C0:
            total += residency * p_active / table.etee(mode, tdp, phase.ar, phase.workload_type)
        else:
            total += residency * table.state_power(state) / table.state_etee(mode, state)
    return total


def predict_phase_mode(table: EteeTable, phase: TracePhase, tdp: float, p_active: float) -> FlexMode:
    ivr = estimate_phase_supply(table, phase, FlexMode.IVR, tdp, p_active)
    ldo = estimate_phase_supply(table, phase, FlexMode.LDO, tdp, p_active)
    return FlexMode.IVR if ivr <= ldo else FlexMode.LDO


@dataclass(frozen=True)
class SimulationPolicy:
    interval_s: float = 0.01
    hysteresis: bool = True
    min_dwell_s: float = 0.0
    absorb_into_idle: bool = False
    initial_mode: Optional[FlexMode] = None

    def __post_init__(self):
        if self.interval_s <= 0:
            raise ValueError(f"evaluation interval must be > 0, got {self.interval_s}")
        if self.min_dwell_s < 0:
            raise ValueError(f"min_dwell_s must be >= 0, got {self.min_dwell_s}")


@dataclass(frozen=True)
class IntervalRecord:
    start: float
    end: float
    phase: int
    mode: FlexMode
    oracle_mode: FlexMode
    energy: float
    switched: bool


@dataclass(frozen=True)
class SimulationReport:
    intervals: Tuple[IntervalRecord, ...]
    energy: float
    switches: int
    switch_energy: float
    stalled_time: float
    oracle_energy: float
    fixed_energy: Mapping[FlexMode, float]
    elapsed: float

    @property
    def regret(self) -> float:
        return self.energy - self.oracle_energy

    @property
    def average_power(self) -> float:
        return self.energy / self.elapsed

    def summary(self) -> Dict[str, float]:
        return {
            "energy_J": self.energy,
            "switches": self.switches,
            "switch_energy_J": self.switch_energy,
            "stalled_s": self.stalled_time,
            "oracle_energy_J": self.oracle_energy,
            "regret_J": self.regret,
            "ivr_mode_energy_J": self.fixed_energy[FlexMode.IVR],
            "ldo_mode_energy_J": self.fixed_energy[FlexMode.LDO],
            "elapsed_s": self.elapsed,
            "average_power_W": self.average_power,
        }


class _PhaseEvaluator:
    """Full-evaluator supply power per phase and mode, with power-state results shared"""

    def __init__(self, t: PdnTopology, loads: LoadsModel, state_model: PowerStateModel,
                 curves: Optional[CurvePack], default_tdp: float):
        self.t = t
        self.loads = loads
        self.state_model = state_model
        self.curves = curves
        self.default_tdp = default_tdp
        self._state_etee: Dict[Tuple[FlexMode, PackagePowerState, float], float] = {}

    def tdp(self, phase: TracePhase) -> float:
        return phase.tdp if phase.tdp is not None else self.default_tdp

    def state_etee(self, mode: FlexMode, state: PackagePowerState, p_state: float) -> float:
        key = (mode, state, p_state)
        if key not in self._state_etee:
            self._state_etee[key] = power_state_etee(self.t, state, p_state, self.state_model,
                                                     mode, self.curves).etee
        return self._state_etee[key]

    def supply(self, phase: TracePhase, mode: FlexMode) -> Tuple[float, float]:
        """(supply power, active nominal power) of a phase in one mode"""
        active = phase.active_loads(self.loads, self.tdp(phase), self.t.domains)
        p_active = sum(load.p_nom for load in active)
        mix = []
        for state, residency in phase.residencies.items():
            p = p_active if state == PackagePowerState.C0 else self.state_model.default_power(state)
            mix.append((state, residency, p))

        def etee_of(state: PackagePowerState, p_state: float) -> float:
            if state == PackagePowerState.C0:
                return eval_flexwatts(self.t, active, mode, self.curves).etee
            return self.state_etee(mode, state, p_state)

        return eval_power_state_mix(None, mix, etee_source=etee_of), p_active

    def switch_energy(self, latency: SwitchLatency) -> float:
        """Energy of one transition: the switch is spent in package C6"""
        if PackagePowerState.C6 not in self.state_model.states:
            raise ValueError("the power-state model has no C6 operating point to charge switches at")
        p_c6 = self.state_model.default_power(PackagePowerState.C6)
        return latency.total * p_c6 / self.state_etee(FlexMode.IVR, PackagePowerState.C6, p_c6)


def _interval_lengths(duration: float, interval: float) -> List[float]:
    count = max(1, math.ceil(duration / interval - 1e-9))
    lengths = [interval] * (count - 1)
    lengths.append(duration - interval * (count - 1))
    return lengths


def simulate_trace(trace: Sequence[TracePhase], table: EteeTable, t: PdnTopology, loads: LoadsModel,
                   state_model: PowerStateModel, latency: SwitchLatency = SwitchLatency(),
                   policy: SimulationPolicy = SimulationPolicy(), curves: Optional[CurvePack] = None,
                   default_tdp: float = 4.0) -> SimulationReport:
    """Walk a trace in evaluation intervals, switching modes the way the controller would.

    The predicted mode comes from the table; energy comes from the full evaluator in the
    active mode. The oracle picks the cheaper mode every interval and never pays to switch.
    """
    if not trace:
        raise EmptyTrace("trace has no phases")

    phases = _PhaseEvaluator(t, loads, state_model, curves, default_tdp)
    e_switch = phases.switch_energy(latency)
    supply: List[Dict[FlexMode, float]] = []
    estimate: List[Dict[FlexMode, float]] = []
    predicted: List[FlexMode] = []
    for phase in trace:
        per_mode = {}
        p_active = 0.0
        for mode in MODES:
            per_mode[mode], p_active = phases.supply(phase, mode)
        supply.append(per_mode)
        tdp = phases.tdp(phase)
        estimate.append({mode: estimate_phase_supply(table, phase, mode, tdp, p_active) for mode in MODES})
        predicted.append(predict_phase_mode(table, phase, tdp, p_active))

    current = FlexMode(policy.initial_mode) if policy.initial_mode is not None else predicted[0]
    clock = 0.0
    last_switch = -math.inf
    energy = oracle_energy = switch_energy = stalled = 0.0
    switches = 0
    fixed = {mode: 0.0 for mode in MODES}
    records: List[IntervalRecord] = []

    for index, phase in enumerate(trace):
        want = predicted[index]
        for length in _interval_lengths(phase.duration, policy.interval_s):
            switched = False
            if want != current and clock - last_switch >= policy.min_dwell_s:
                saving = length * (estimate[index][current] - estimate[index][want])
                if not policy.hysteresis or saving > e_switch:
                    stall = latency.total
                    if policy.absorb_into_idle and phase.deep_idle * length >= latency.total:
                        stall = 0.0
                    logger.info("t=%.4fs phase %d: %s -> %s", clock, index, current.value, want.value)
                    current = want
                    switched = True
                    switches += 1
                    switch_energy += e_switch
                    stalled += stall
                    clock += stall
                    last_switch = clock

            oracle = FlexMode.IVR if supply[index][FlexMode.IVR] <= supply[index][FlexMode.LDO] else FlexMode.LDO
            spent = supply[index][current] * length
            energy += spent
            oracle_energy += supply[index][oracle] * length
            for mode in MODES:
                fixed[mode] += supply[index][mode] * length
            records.append(IntervalRecord(clock, clock + length, index, current, oracle,
                                          spent + (e_switch if switched else 0.0), switched))
            clock += length

    return SimulationReport(
        intervals=tuple(records),
        energy=energy + switch_energy,
        switches=switches,
        switch_energy=switch_energy,
        stalled_time=stalled,
        oracle_energy=oracle_energy,
        fixed_energy=fixed,
        elapsed=clock,
    )

