"""
PDN core types
Domains, VR stages, groups and topologies shared by every model, plus topology validation.
Units are fixed: W, V, A, Ohm, seconds.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

from errors import TopologyError

DEFAULT_DELTA = 2.8
GFX_LEAKAGE_FRACTION = 0.45
DEFAULT_LEAKAGE_FRACTION = 0.22
DEFAULT_SUPPLY_VOLTAGE = 7.2


class DomainId(str, Enum):
    CORE0 = "Core0"
    CORE1 = "Core1"
    LLC = "LLC"
    GFX = "GFX"
    SA = "SA"
    IO = "IO"


COMPUTE_DOMAINS: Tuple[str, ...] = ("Core0", "Core1", "LLC", "GFX")
UNCORE_DOMAINS: Tuple[str, ...] = ("SA", "IO")
CPU_GROUP: Tuple[str, ...] = ("Core0", "Core1", "LLC")


class Architecture(str, Enum):
    MBVR = "MBVR"
    IVR = "IVR"
    LDO = "LDO"
    I_MBVR = "I_MBVR"
    FLEXWATTS = "FlexWatts"


class VrKind(str, Enum):
    OFF_CHIP = "OffChipSwitching"
    IVR = "OnChipIVR"
    LDO = "OnChipLDO"
    POWER_GATE = "PowerGateOnly"
    HYBRID = "HybridIvrLdo"


REGULATING_KINDS = (VrKind.IVR, VrKind.LDO, VrKind.HYBRID)


class VrPowerState(str, Enum):
    PS0 = "PS0"
    PS1 = "PS1"
    PS2 = "PS2"
    PS3 = "PS3"
    PS4 = "PS4"

    @property
    def level(self) -> int:
        return int(self.value[2:])


class PackagePowerState(str, Enum):
    C0 = "C0"
    C0_MIN = "C0_MIN"
    C2 = "C2"
    C3 = "C3"
    C6 = "C6"
    C7 = "C7"
    C8 = "C8"

    @property
    def gates_compute(self) -> bool:
        """Compute domains are power-gated in every state deeper than C0_MIN"""
        return self not in (PackagePowerState.C0, PackagePowerState.C0_MIN)


IDLE_STATES: Tuple[PackagePowerState, ...] = (
    PackagePowerState.C0_MIN, PackagePowerState.C2, PackagePowerState.C3,
    PackagePowerState.C6, PackagePowerState.C7, PackagePowerState.C8,
)


class WorkloadType(str, Enum):
    SINGLE_THREAD = "single_thread"
    MULTI_THREAD = "multi_thread"
    GRAPHICS = "graphics"


class FlexMode(str, Enum):
    IVR = "IvrMode"
    LDO = "LdoMode"


def default_leakage_fraction(domain: str) -> float:
    return GFX_LEAKAGE_FRACTION if domain == DomainId.GFX.value else DEFAULT_LEAKAGE_FRACTION


def infer_workload_type(active_cores: int, gfx_active: bool) -> WorkloadType:
    """Classify a workload the way the PMU does from activity counters"""
    if gfx_active:
        return WorkloadType.GRAPHICS
    if active_cores > 1:
        return WorkloadType.MULTI_THREAD
    return WorkloadType.SINGLE_THREAD


@dataclass(frozen=True)
class DomainLoad:
    """Nominal operating point of one processor domain"""
    domain: str
    p_nom: float
    v_nom: float
    f_leak: Optional[float] = None
    delta: float = DEFAULT_DELTA
    ar: float = 1.0

    def __post_init__(self):
        if self.f_leak is None:
            object.__setattr__(self, "f_leak", default_leakage_fraction(self.domain))
        if self.p_nom < 0:
            raise ValueError(f"{self.domain}: p_nom must be >= 0, got {self.p_nom}")
        if self.v_nom <= 0:
            raise ValueError(f"{self.domain}: v_nom must be > 0, got {self.v_nom}")
        if not 0.0 <= self.f_leak <= 1.0:
            raise ValueError(f"{self.domain}: f_leak must be within [0, 1], got {self.f_leak}")
        if self.delta <= 0:
            raise ValueError(f"{self.domain}: delta must be > 0, got {self.delta}")
        if not 0.0 < self.ar <= 1.0:
            raise ValueError(f"{self.domain}: ar must be within (0, 1], got {self.ar}")


@dataclass(frozen=True)
class VrStage:
    """One regulator (or power gate) in a domain's delivery chain.

    Parameters are not checked here; validate_topology reports every bad value at once.
    """
    name: str
    kind: VrKind
    curve: Optional[str] = None
    v_tob: float = 0.0
    r_ll: float = 0.0
    r_pg: float = 0.0
    icc_max: float = 100.0
    i_effi: Optional[float] = None
    ldo_v_tob: Optional[float] = None

    @property
    def regulates(self) -> bool:
        return self.kind in REGULATING_KINDS


@dataclass(frozen=True)
class GroupMember:
    domain: str
    stage: Optional[VrStage] = None

    @property
    def r_pg(self) -> float:
        return self.stage.r_pg if self.stage is not None else 0.0

    @property
    def on_chip(self) -> Optional[VrStage]:
        if self.stage is not None and self.stage.regulates:
            return self.stage
        return None


@dataclass(frozen=True)
class VrGroup:
    """An off-chip rail and the domains it feeds, directly or through on-chip stages"""
    name: str
    rail: VrStage
    members: Tuple[GroupMember, ...]

    @property
    def domains(self) -> Tuple[str, ...]:
        return tuple(m.domain for m in self.members)

    @property
    def feeds_on_chip(self) -> bool:
        return any(m.on_chip is not None for m in self.members)


@dataclass(frozen=True)
class PdnTopology:
    name: Architecture
    groups: Tuple[VrGroup, ...]
    v_in: Optional[float] = None
    v_supply: float = DEFAULT_SUPPLY_VOLTAGE
    declared_domains: Tuple[str, ...] = ()
    t_junction: Optional[float] = None
    label: str = ""

    @property
    def display_name(self) -> str:
        return self.label or self.name.value

    @property
    def domains(self) -> Tuple[str, ...]:
        return tuple(d for g in self.groups for d in g.domains)

    def first_stage_group(self) -> Optional[VrGroup]:
        shared = [g for g in self.groups if g.feeds_on_chip]
        return shared[0] if len(shared) == 1 else None

    def group_of(self, domain: str) -> VrGroup:
        for group in self.groups:
            if domain in group.domains:
                return group
        raise KeyError(domain)

    def stages(self) -> List[VrStage]:
        found: List[VrStage] = []
        for group in self.groups:
            found.append(group.rail)
            found.extend(m.stage for m in group.members if m.stage is not None)
        return found


@dataclass(frozen=True)
class Violation:
    code: str
    message: str

    def __str__(self) -> str:
        return f"{self.code}: {self.message}"


_FIRST_STAGE_KIND: Dict[Architecture, VrKind] = {
    Architecture.IVR: VrKind.IVR,
    Architecture.I_MBVR: VrKind.IVR,
    Architecture.LDO: VrKind.LDO,
    Architecture.FLEXWATTS: VrKind.HYBRID,
}


def _stage_violations(stage: VrStage, where: str) -> List[Violation]:
    found = []
    for attr in ("v_tob", "r_ll", "r_pg"):
        value = getattr(stage, attr)
        if value < 0:
            found.append(Violation("NonPositiveParameter", f"{where}: {attr} = {value} must be >= 0"))
    if stage.icc_max <= 0:
        found.append(Violation("NonPositiveParameter", f"{where}: icc_max = {stage.icc_max} must be > 0"))
    if stage.kind in (VrKind.LDO, VrKind.HYBRID):
        if stage.i_effi is None or not 0.9 < stage.i_effi <= 1.0:
            found.append(Violation("NonPositiveParameter",
                                   f"{where}: i_effi = {stage.i_effi} must be within (0.9, 1]"))
    if stage.kind == VrKind.HYBRID and stage.ldo_v_tob is not None and stage.ldo_v_tob < 0:
        found.append(Violation("NonPositiveParameter", f"{where}: ldo_v_tob = {stage.ldo_v_tob} must be >= 0"))
    if stage.kind in (VrKind.OFF_CHIP, VrKind.IVR, VrKind.HYBRID) and not stage.curve:
        found.append(Violation("MissingCurve", f"{where}: {stage.kind.value} stage needs an efficiency curve"))
    return found


def _grouping_violations(t: PdnTopology) -> List[Violation]:
    found = []
    domains = set(t.domains)
    if t.name == Architecture.MBVR:
        for group in t.groups:
            if group.feeds_on_chip:
                found.append(Violation("GroupingViolation", f"MBVR group {group.name} has an on-chip regulator"))
        cpu = [d for d in CPU_GROUP if d in domains]
        if cpu and len({t.group_of(d).name for d in cpu}) != 1:
            found.append(Violation("GroupingViolation", "MBVR must place Core0, Core1 and LLC on one off-chip VR"))
    if t.name == Architecture.IVR:
        for group in t.groups:
            for member in group.members:
                if member.on_chip is None or member.on_chip.kind != VrKind.IVR:
                    found.append(Violation("GroupingViolation", f"IVR domain {member.domain} lacks an on-chip IVR"))
    if t.name in (Architecture.LDO, Architecture.FLEXWATTS, Architecture.I_MBVR):
        for domain in UNCORE_DOMAINS:
            if domain not in domains:
                continue
            group = t.group_of(domain)
            if len(group.members) != 1 or group.feeds_on_chip:
                found.append(Violation("GroupingViolation",
                                       f"{t.name.value} must place {domain} on a dedicated off-chip VR"))
    return found


def topology_violations(t: PdnTopology) -> List[Violation]:
    """Every invariant violation of a topology, in a stable order"""
    found: List[Violation] = []

    seen: Dict[str, str] = {}
    for group in t.groups:
        for domain in group.domains:
            if domain in seen:
                found.append(Violation("DuplicateDomain",
                                       f"{domain} appears in {seen[domain]} and {group.name}"))
            else:
                seen[domain] = group.name
    for domain in t.declared_domains:
        if domain not in seen:
            found.append(Violation("OrphanDomain", f"{domain} is declared but belongs to no group"))
    for group in t.groups:
        if not group.members:
            found.append(Violation("OrphanDomain", f"group {group.name} feeds no domain"))

    expected = _FIRST_STAGE_KIND.get(t.name)
    if expected is not None:
        shared = [g for g in t.groups if g.feeds_on_chip]
        if len(shared) != 1:
            found.append(Violation("MissingFirstStage",
                                   f"{t.name.value} needs exactly one shared first-stage VR, found {len(shared)}"))
        elif not any(m.on_chip is not None and m.on_chip.kind == expected for m in shared[0].members):
            found.append(Violation("MissingFirstStage",
                                   f"first stage {shared[0].name} feeds no {expected.value} stage"))
        if t.name != Architecture.LDO and (t.v_in is None or t.v_in <= 0):
            found.append(Violation("MissingFirstStage", f"{t.name.value} needs a positive first-stage v_in"))

    for group in t.groups:
        if group.rail.kind != VrKind.OFF_CHIP:
            found.append(Violation("GroupingViolation", f"group {group.name} rail must be an off-chip VR"))
        found.extend(_stage_violations(group.rail, f"group {group.name} rail {group.rail.name}"))
        for member in group.members:
            if member.stage is not None:
                found.extend(_stage_violations(member.stage, f"{member.domain} stage {member.stage.name}"))
    if t.v_supply <= 0:
        found.append(Violation("NonPositiveParameter", f"v_supply = {t.v_supply} must be > 0"))
    if t.v_in is not None and t.v_in <= 0 and expected is None:
        found.append(Violation("NonPositiveParameter", f"v_in = {t.v_in} must be > 0"))

    found.extend(_grouping_violations(t) if not any(v.code == "DuplicateDomain" for v in found) else [])
    return found


def validate_topology(t: PdnTopology) -> PdnTopology:
    """Return the topology unchanged if it is valid, otherwise raise TopologyError with all violations"""
    violations = topology_violations(t)
    if violations:
        raise TopologyError(t.display_name, violations)
    return t
