"""
VR bill-of-materials and board-area model
Each off-chip VR is sized for the worst-case current at its output and binned into a
vendor table of (Icc_max threshold, cost, area) rows per regulator class.
"""

import logging
from collections import defaultdict
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from efficiency_curves import CurvePack
from errors import CurrentExceedsTable
from etee import evaluate
from pdn_core import Architecture, DomainLoad, FlexMode, PdnTopology, WorkloadType
from platform_model import LoadsModel

logger = logging.getLogger("pdnspot.cost")

PMIC_MAX_TDP = 18.0


class RegulatorClass(str, Enum):
    PMIC = "PMIC"
    VRM = "VRM"


def regulator_class(tdp: float) -> RegulatorClass:
    return RegulatorClass.PMIC if tdp <= PMIC_MAX_TDP else RegulatorClass.VRM


@dataclass(frozen=True)
class RailCurrent:
    group: str
    stage: str
    icc_max: float


@dataclass(frozen=True)
class IccMaxProfile:
    topology: str
    tdp: float
    rails: Tuple[RailCurrent, ...]

    @property
    def total(self) -> float:
        return sum(r.icc_max for r in self.rails)

    def rail(self, group: str) -> RailCurrent:
        for r in self.rails:
            if r.group == group:
                return r
        raise KeyError(group)


@dataclass(frozen=True)
class CostAreaRow:
    icc_max: float
    cost: float
    area: float


class CostAreaTable:
    """Icc_max thresholds with their cost and area, one ascending list per regulator class"""

    def __init__(self, rows: Mapping[RegulatorClass, Sequence[CostAreaRow]]):
        self._rows: Dict[RegulatorClass, Tuple[CostAreaRow, ...]] = {}
        for cls, entries in rows.items():
            ordered = tuple(sorted(entries, key=lambda r: r.icc_max))
            for a, b in zip(ordered, ordered[1:]):
                if b.icc_max == a.icc_max:
                    raise ValueError(f"{cls.value}: duplicate threshold {a.icc_max} A")
                if b.cost < a.cost or b.area < a.area:
                    raise ValueError(f"{cls.value}: cost and area must not fall as Icc_max grows "
                                     f"({a.icc_max} A -> {b.icc_max} A)")
            self._rows[RegulatorClass(cls)] = ordered

    @classmethod
    def from_rows(cls, rows: Iterable[Tuple[str, float, float, float]]) -> "CostAreaTable":
        grouped: Dict[RegulatorClass, List[CostAreaRow]] = defaultdict(list)
        for vr_class, icc_max, cost, area in rows:
            grouped[RegulatorClass(vr_class)].append(CostAreaRow(icc_max, cost, area))
        return cls(grouped)

    @property
    def classes(self) -> List[RegulatorClass]:
        return [c for c in RegulatorClass if c in self._rows]

    def bin(self, vr_class: RegulatorClass, icc_max: float) -> CostAreaRow:
        """Smallest row whose threshold covers icc_max"""
        rows = self._rows.get(RegulatorClass(vr_class), ())
        for row in rows:
            if row.icc_max >= icc_max:
                return row
        largest = rows[-1].icc_max if rows else None
        raise CurrentExceedsTable(f"{icc_max:.3f} A exceeds the largest {RegulatorClass(vr_class).value} "
                                  f"threshold ({largest} A)",
                                  {"icc_max": icc_max, "class": RegulatorClass(vr_class).value,
                                   "largest": largest})


def rail_currents(t: PdnTopology, loads: Iterable[DomainLoad], curves: Optional[CurvePack] = None,
                  mode: Optional[FlexMode] = None) -> Dict[str, float]:
    """Peak output current of every off-chip VR for one set of loads"""
    if t.name == Architecture.FLEXWATTS and mode is None:
        mode = FlexMode.IVR
    report = evaluate(t, loads, mode=mode, curves=curves)
    return {r.group: r.p_peak / r.v_d for r in report.rails}


def icc_max_profile(t: PdnTopology, tdp: float, loads: LoadsModel, curves: Optional[CurvePack] = None,
                    workload_types: Optional[Sequence[WorkloadType]] = None) -> IccMaxProfile:
    """Per-rail worst case over every workload type at AR = 1.

    FlexWatts is sized in IvrMode, the mode it runs under peak load.
    """
    worst: Dict[str, float] = {}
    for wl_type in workload_types or loads.workload_types:
        scenario = loads.loads(tdp, wl_type, 1.0, t.domains)
        for group, current in rail_currents(t, scenario, curves).items():
            worst[group] = max(worst.get(group, 0.0), current)

    rails = tuple(RailCurrent(g.name, g.rail.name, worst[g.name]) for g in t.groups)
    logger.debug("%s at %s W: %s", t.display_name, tdp, ", ".join(f"{r.group}={r.icc_max:.3f}A" for r in rails))
    return IccMaxProfile(t.display_name, tdp, rails)


@dataclass(frozen=True)
class CostItem:
    group: str
    stage: str
    icc_max: float
    threshold: float
    cost: float
    area: float


@dataclass(frozen=True)
class CostEstimate:
    topology: str
    tdp: float
    vr_class: RegulatorClass
    items: Tuple[CostItem, ...]

    @property
    def bom(self) -> float:
        return sum(i.cost for i in self.items)

    @property
    def area(self) -> float:
        return sum(i.area for i in self.items)


def estimate_cost_area(profile: IccMaxProfile, table: CostAreaTable,
                       tdp: Optional[float] = None) -> CostEstimate:
    tdp = profile.tdp if tdp is None else tdp
    vr_class = regulator_class(tdp)
    items = []
    for rail in profile.rails:
        row = table.bin(vr_class, rail.icc_max)
        items.append(CostItem(rail.group, rail.stage, rail.icc_max, row.icc_max, row.cost, row.area))
    return CostEstimate(profile.topology, tdp, vr_class, tuple(items))


@dataclass(frozen=True)
class CostRatio:
    topology: str
    tdp: float
    vr_class: RegulatorClass
    bom: float
    area: float
    bom_ratio: float
    area_ratio: float


def normalize_costs(estimates: Sequence[CostEstimate], reference: Union[str, Architecture]) -> List[CostRatio]:
    """BOM and area of each estimate relative to the reference topology at the same TDP"""
    wanted = reference.value if isinstance(reference, Architecture) else str(reference)
    references = {e.tdp: e for e in estimates if e.topology == wanted}
    ratios = []
    for e in estimates:
        ref = references.get(e.tdp)
        if ref is None:
            raise ValueError(f"no {wanted} estimate at {e.tdp} W to normalize against")
        ratios.append(CostRatio(e.topology, e.tdp, e.vr_class, e.bom, e.area,
                                e.bom / ref.bom, e.area / ref.area))
    return ratios
