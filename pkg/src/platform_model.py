"""
Platform operating points
Per-domain loads as a function of TDP and workload type, and the package power-state
operating points used for idle-state evaluation.
"""

from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from pdn_core import DomainLoad, PackagePowerState, UNCORE_DOMAINS, WorkloadType

SHARE_TOLERANCE = 1e-9


@dataclass(frozen=True)
class LoadPoint:
    workload_type: WorkloadType
    tdp: float
    domain: str
    p_nom: float
    v_nom: float


class LoadsModel:
    """Domain operating points anchored at a few TDPs, linear in TDP between anchors"""

    def __init__(self, points: Iterable[LoadPoint]):
        table: Dict[WorkloadType, Dict[str, List[Tuple[float, float, float]]]] = defaultdict(lambda: defaultdict(list))
        for p in points:
            table[WorkloadType(p.workload_type)][p.domain].append((p.tdp, p.p_nom, p.v_nom))
        if not table:
            raise ValueError("loads table is empty")
        self._domains: Tuple[str, ...] = tuple(next(iter(table.values())).keys())
        self._table: Dict[WorkloadType, Dict[str, np.ndarray]] = {}
        for wl_type, by_domain in table.items():
            if set(by_domain) != set(self._domains):
                raise ValueError(f"loads table: {wl_type.value} covers {sorted(by_domain)}, "
                                 f"expected {sorted(self._domains)}")
            self._table[wl_type] = {d: np.array(sorted(rows)) for d, rows in by_domain.items()}

    @property
    def domains(self) -> Tuple[str, ...]:
        return self._domains

    @property
    def workload_types(self) -> List[WorkloadType]:
        return [t for t in WorkloadType if t in self._table]

    def operating_point(self, tdp: float, workload_type: WorkloadType, domain: str) -> Tuple[float, float]:
        rows = self._table[WorkloadType(workload_type)][domain]
        return float(np.interp(tdp, rows[:, 0], rows[:, 1])), float(np.interp(tdp, rows[:, 0], rows[:, 2]))

    def loads(self, tdp: float, workload_type: WorkloadType, ar: float,
              domains: Optional[Sequence[str]] = None) -> List[DomainLoad]:
        found = []
        for domain in domains or self._domains:
            p_nom, v_nom = self.operating_point(tdp, workload_type, domain)
            found.append(DomainLoad(domain, p_nom, v_nom, ar=ar))
        return found

    def sa_io_budget(self, tdp: float, workload_type: WorkloadType = WorkloadType.MULTI_THREAD) -> float:
        return sum(self.operating_point(tdp, workload_type, d)[0] for d in UNCORE_DOMAINS if d in self._domains)

    def nominal_power(self, tdp: float, workload_type: WorkloadType) -> float:
        return sum(self.operating_point(tdp, workload_type, d)[0] for d in self._domains)


@dataclass(frozen=True)
class StateShare:
    state: PackagePowerState
    p_state: float
    domain: str
    share: float
    v_nom: float
    ar: float = 1.0


class PowerStateModel:
    """How a package power state's nominal power splits across domains"""

    def __init__(self, rows: Iterable[StateShare]):
        self._shares: Dict[PackagePowerState, Dict[str, StateShare]] = defaultdict(dict)
        self._default_power: Dict[PackagePowerState, float] = {}
        for row in rows:
            state = PackagePowerState(row.state)
            if state == PackagePowerState.C0:
                raise ValueError("C0 operating points come from the loads model, not the power-state table")
            known = self._default_power.setdefault(state, row.p_state)
            if known != row.p_state:
                raise ValueError(f"{state.value}: inconsistent default power {known} vs {row.p_state}")
            self._shares[state][row.domain] = row
        for state, shares in self._shares.items():
            total = sum(s.share for s in shares.values())
            if abs(total - 1.0) > SHARE_TOLERANCE:
                raise ValueError(f"{state.value}: domain shares sum to {total}, expected 1")

    @property
    def states(self) -> List[PackagePowerState]:
        return [s for s in PackagePowerState if s in self._shares]

    def default_power(self, state: PackagePowerState) -> float:
        return self._default_power[PackagePowerState(state)]

    def state_loads(self, state: PackagePowerState, p_state: float, domains: Sequence[str]) -> List[DomainLoad]:
        state = PackagePowerState(state)
        if state not in self._shares:
            raise KeyError(f"no operating point for {state.value}")
        shares = self._shares[state]
        found = []
        for domain in domains:
            row = shares.get(domain)
            if row is None:
                raise KeyError(f"{state.value} has no operating point for {domain}")
            p_nom = 0.0 if state.gates_compute and domain not in UNCORE_DOMAINS else p_state * row.share
            found.append(DomainLoad(domain, p_nom, row.v_nom, ar=row.ar))
        return found
