"""
Performance from power budget
A TDP budget is split into SA/IO, PDN losses and compute; extra compute budget buys
frequency in 1% steps along a power-frequency curve, and performance follows the
workload's scalability.
"""

import logging
from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from errors import BudgetUnderflow, UnknownTdp
from etee import evaluate
from efficiency_curves import CurvePack
from pdn_core import Architecture, PdnTopology, WorkloadType
from platform_model import LoadsModel

logger = logging.getLogger("pdnspot.perf")

STEP_FRACTION = 0.01
GRAPHICS_CORE_SHARE = 0.15
FREQUENCY_BOUNDS_GHZ: Dict[str, Tuple[float, float]] = {
    "cores": (0.8, 4.0),
    "gfx": (0.1, 1.2),
}
_EPS = 1e-12


@dataclass(frozen=True)
class CurveSegment:
    """From freq_ghz upwards each 1% step costs w_per_step watts"""
    freq_ghz: float
    w_per_step: float


class PowerFrequencyCurve:
    """Incremental power per 1% frequency step for one domain, indexed by TDP"""

    def __init__(self, domain: str, segments: Mapping[float, Sequence[CurveSegment]],
                 bounds: Optional[Tuple[float, float]] = None):
        self.domain = domain
        self.bounds = bounds or FREQUENCY_BOUNDS_GHZ.get(domain, (0.0, float("inf")))
        self._segments: Dict[float, Tuple[CurveSegment, ...]] = {}
        for tdp, rows in segments.items():
            ordered = tuple(sorted(rows, key=lambda s: s.freq_ghz))
            if not ordered:
                raise ValueError(f"{domain} curve at {tdp} W has no segments")
            for a, b in zip(ordered, ordered[1:]):
                if b.freq_ghz == a.freq_ghz:
                    raise ValueError(f"{domain} curve at {tdp} W repeats {a.freq_ghz} GHz")
                if b.w_per_step < a.w_per_step:
                    raise ValueError(f"{domain} curve at {tdp} W: step power falls with frequency")
            if any(s.w_per_step <= 0 for s in ordered):
                raise ValueError(f"{domain} curve at {tdp} W: step power must be > 0")
            self._segments[float(tdp)] = ordered

    @classmethod
    def flat(cls, domain: str, tdp: float, base_ghz: float, w_per_step: float,
             bounds: Optional[Tuple[float, float]] = None) -> "PowerFrequencyCurve":
        return cls(domain, {tdp: [CurveSegment(base_ghz, w_per_step)]}, bounds)

    @property
    def tdps(self) -> List[float]:
        return sorted(self._segments)

    def segments(self, tdp: float) -> Tuple[CurveSegment, ...]:
        try:
            return self._segments[float(tdp)]
        except KeyError:
            raise UnknownTdp(f"{self.domain} power-frequency curve has no {tdp} W entry",
                             {"domain": self.domain, "tdp": tdp, "known": self.tdps}) from None

    def base_frequency(self, tdp: float) -> float:
        return self.segments(tdp)[0].freq_ghz

    def step_cost(self, tdp: float, freq_ghz: float) -> float:
        """Power of the step that starts at freq_ghz"""
        segments = self.segments(tdp)
        cost = segments[0].w_per_step
        for segment in segments:
            if freq_ghz + _EPS >= segment.freq_ghz:
                cost = segment.w_per_step
        return cost


@dataclass(frozen=True)
class FrequencySteps:
    steps: int
    frequency_delta: float
    ghz_delta: float
    spent: float
    unspent: float
    saturated: bool


def frequency_steps(extra_budget: float, curve: PowerFrequencyCurve, tdp: float,
                    downward: bool = False) -> FrequencySteps:
    """Spend a budget in 1% frequency steps from the TDP's base frequency.

    Stops when the next step costs more than what is left or would cross the domain's
    frequency bound; a bound stop is reported as saturated. downward walks the curve the
    other way and gives back a budget deficit.
    """
    if extra_budget < 0:
        raise ValueError(f"extra budget must be >= 0, got {extra_budget}")
    base = curve.base_frequency(tdp)
    step_ghz = base * STEP_FRACTION
    lower, upper = curve.bounds
    remaining = extra_budget
    steps = 0
    saturated = False
    while True:
        freq = base * (1.0 + (-steps if downward else steps) * STEP_FRACTION)
        target = freq - step_ghz if downward else freq + step_ghz
        if target > upper + _EPS or target < lower - _EPS:
            saturated = True
            break
        cost = curve.step_cost(tdp, target if downward else freq)
        if remaining + _EPS < cost:
            break
        remaining -= cost
        steps += 1

    return FrequencySteps(
        steps=steps,
        frequency_delta=steps * STEP_FRACTION,
        ghz_delta=steps * step_ghz,
        spent=extra_budget - remaining,
        unspent=remaining,
        saturated=saturated,
    )


def perf_gain(extra_budget: float, curve: PowerFrequencyCurve, tdp: float, scalability: float = 1.0) -> float:
    if not 0.0 <= scalability <= 1.0:
        raise ValueError(f"scalability must be within [0, 1], got {scalability}")
    return frequency_steps(extra_budget, curve, tdp).frequency_delta * scalability


def budget_differential(p_nominal: float, etee_a: float, etee_b: float) -> float:
    """Supply power a nominal load needs at etee_a minus what it needs at etee_b"""
    for etee in (etee_a, etee_b):
        if not 0.0 < etee <= 1.0:
            raise ValueError(f"ETEE must be within (0, 1], got {etee}")
    return p_nominal / etee_a - p_nominal / etee_b


@dataclass(frozen=True)
class BudgetSplit:
    tdp: float
    sa_io_budget: float
    compute_budget: float
    pdn_loss: float
    core_share: float
    gfx_share: float

    @property
    def core_budget(self) -> float:
        return self.compute_budget * self.core_share

    @property
    def gfx_budget(self) -> float:
        return self.compute_budget * self.gfx_share


def split_budget(tdp: float, etee: float, workload_type: WorkloadType, sa_io_budget: float,
                 graphics_core_share: float = GRAPHICS_CORE_SHARE) -> BudgetSplit:
    if not 0.0 < etee <= 1.0:
        raise ValueError(f"ETEE must be within (0, 1], got {etee}")
    pdn_loss = tdp * (1.0 - etee)
    if sa_io_budget + pdn_loss > tdp:
        raise BudgetUnderflow(f"{tdp} W TDP cannot cover SA/IO {sa_io_budget:.3f} W plus "
                              f"PDN loss {pdn_loss:.3f} W",
                              {"tdp": tdp, "sa_io_budget": sa_io_budget, "pdn_loss": pdn_loss})
    core_share = graphics_core_share if WorkloadType(workload_type) == WorkloadType.GRAPHICS else 1.0
    return BudgetSplit(
        tdp=tdp,
        sa_io_budget=sa_io_budget,
        compute_budget=tdp - sa_io_budget - pdn_loss,
        pdn_loss=pdn_loss,
        core_share=core_share,
        gfx_share=1.0 - core_share,
    )


@dataclass(frozen=True)
class WorkloadDescriptor:
    name: str
    workload_type: WorkloadType
    ar: float
    scalability: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.ar <= 1.0:
            raise ValueError(f"{self.name}: AR must be within (0, 1], got {self.ar}")
        if not 0.0 <= self.scalability <= 1.0:
            raise ValueError(f"{self.name}: scalability must be within [0, 1], got {self.scalability}")
        object.__setattr__(self, "workload_type", WorkloadType(self.workload_type))


@dataclass(frozen=True)
class PerformanceResult:
    topology: str
    etee: float
    budget_delta: float
    frequency_delta: float
    performance: float
    mode: Optional[str] = None


def _domain_budget(split: BudgetSplit, workload_type: WorkloadType) -> Tuple[str, float]:
    if WorkloadType(workload_type) == WorkloadType.GRAPHICS:
        return "gfx", split.gfx_budget
    return "cores", split.core_budget


def performance_from_etee(etees: Mapping[str, float], reference: str, tdp: float,
                          workload: WorkloadDescriptor, pf_curves: Mapping[str, PowerFrequencyCurve],
                          sa_io_budget: float,
                          graphics_core_share: float = GRAPHICS_CORE_SHARE) -> List[PerformanceResult]:
    """Turn per-topology ETEEs into performance normalized to the reference topology"""
    if reference not in etees:
        raise ValueError(f"reference topology {reference!r} is not among {list(etees)}")

    splits = {name: split_budget(tdp, etee, workload.workload_type, sa_io_budget, graphics_core_share)
              for name, etee in etees.items()}
    domain, ref_budget = _domain_budget(splits[reference], workload.workload_type)
    if domain not in pf_curves:
        raise ValueError(f"no {domain} power-frequency curve")
    curve = pf_curves[domain]

    results = []
    for name, etee in etees.items():
        _, budget = _domain_budget(splits[name], workload.workload_type)
        delta = budget - ref_budget
        if delta >= 0:
            moved = frequency_steps(delta, curve, tdp).frequency_delta
        else:
            moved = -frequency_steps(-delta, curve, tdp, downward=True).frequency_delta
        results.append(PerformanceResult(name, etee, delta, moved, 1.0 + moved * workload.scalability))
    return results


def compare_performance(topologies: Iterable[PdnTopology], loads: LoadsModel, tdp: float,
                        workload: WorkloadDescriptor, pf_curves: Mapping[str, PowerFrequencyCurve],
                        reference: Union[str, Architecture] = Architecture.IVR,
                        curves: Optional[CurvePack] = None) -> List[PerformanceResult]:
    """Evaluate each topology at the workload's operating point and normalize to reference.

    FlexWatts runs whichever mode is better at that point.
    """
    topologies = list(topologies)
    ref = reference_name(topologies, reference)
    etees: Dict[str, float] = {}
    modes: Dict[str, Optional[str]] = {}
    for t in topologies:
        report = evaluate(t, loads.loads(tdp, workload.workload_type, workload.ar, t.domains), curves=curves)
        etees[t.display_name] = report.etee
        modes[t.display_name] = report.mode

    results = performance_from_etee(etees, ref, tdp, workload, pf_curves,
                                    loads.sa_io_budget(tdp, workload.workload_type))
    logger.debug("%s at %s W: %s", workload.name, tdp,
                 ", ".join(f"{r.topology}={r.performance:.4f}" for r in results))
    return [PerformanceResult(r.topology, r.etee, r.budget_delta, r.frequency_delta, r.performance,
                              modes[r.topology]) for r in results]


def reference_name(topologies: Sequence[PdnTopology], reference: Union[str, Architecture]) -> str:
    wanted = reference.value if isinstance(reference, Architecture) else str(reference)
    names = [t.display_name for t in topologies]
    if wanted in names:
        return wanted
    for t in topologies:
        if t.name.value == wanted:
            return t.display_name
    raise ValueError(f"reference topology {reference!r} is not among {names}")


def pf_curves_from_rows(rows: Iterable[Tuple[float, str, float, float]]) -> Dict[str, PowerFrequencyCurve]:
    """Build per-domain curves from (tdp_W, domain, freq_GHz, mW per 1%) rows"""
    grouped: Dict[str, Dict[float, List[CurveSegment]]] = defaultdict(lambda: defaultdict(list))
    for tdp, domain, freq_ghz, mw_per_percent in rows:
        grouped[domain][float(tdp)].append(CurveSegment(freq_ghz, mw_per_percent / 1000.0))
    return {domain: PowerFrequencyCurve(domain, by_tdp) for domain, by_tdp in grouped.items()}


def average_gain(results: Iterable[Sequence[PerformanceResult]], topology: str) -> float:
    """Mean performance gain of one topology over several workloads"""
    gains = [r.performance - 1.0 for per_workload in results for r in per_workload if r.topology == topology]
    if not gains:
        raise ValueError(f"no results for {topology}")
    return sum(gains) / len(gains)
