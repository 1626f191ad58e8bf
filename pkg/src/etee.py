"""
End-to-end power-conversion efficiency (ETEE)
One walker over a topology's VR groups implements every architecture:
  - direct groups: guardband -> power gate -> load-line -> off-chip VR
  - first-stage groups: guardband -> power gate -> on-chip IVR/LDO -> shared load-line -> off-chip VR
"""

import logging
from dataclasses import asdict, dataclass
from typing import Any, Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from efficiency_curves import CurvePack, require_curve, select_vr_power_state
from errors import ResidencyMismatch, ZeroPower
from pdn_core import (Architecture, DomainLoad, FlexMode, GroupMember, PackagePowerState, PdnTopology,
                      VrGroup, VrKind)
from vr_models import guardband_power, ldo_efficiency, load_line_position, power_gate_drop

logger = logging.getLogger("pdnspot.etee")

RESIDENCY_TOLERANCE = 1e-9

LOSS_CATEGORIES = ("guardband", "power_gate", "load_line_i2r", "on_chip_vr", "off_chip_vr")


@dataclass(frozen=True)
class DomainChain:
    domain: str
    p_nom: float
    p_gb: float
    p_pg: float
    p_after_on_chip_vr: float
    v_eff: float
    on_chip_eta: float = 1.0
    on_chip_power_state: Optional[str] = None


@dataclass(frozen=True)
class RailReport:
    """One off-chip VR. For the shared first stage p_d/v_d_ll/p_d_ll are p_in/v_in_ll/p_in_ll."""
    group: str
    stage: str
    shared: bool
    p_d: float
    p_peak: float
    v_d: float
    v_d_ll: float
    p_d_ll: float
    i_out: float
    eta: float
    power_state: Optional[str]
    supply_power: float


@dataclass(frozen=True)
class LossBreakdown:
    guardband: float = 0.0
    power_gate: float = 0.0
    load_line_i2r: float = 0.0
    on_chip_vr: float = 0.0
    off_chip_vr: float = 0.0

    @property
    def total(self) -> float:
        return self.guardband + self.power_gate + self.load_line_i2r + self.on_chip_vr + self.off_chip_vr

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


@dataclass(frozen=True)
class EteeReport:
    topology: str
    architecture: str
    mode: Optional[str]
    package_state: str
    domains: Tuple[DomainChain, ...]
    rails: Tuple[RailReport, ...]
    nominal_power: float
    supply_power: float
    etee: float
    losses: LossBreakdown
    extrapolated: Tuple[str, ...] = ()
    t_junction: Optional[float] = None

    @property
    def first_stage(self) -> Optional[RailReport]:
        shared = [r for r in self.rails if r.shared]
        return shared[0] if shared else None

    def rail(self, group: str) -> RailReport:
        for r in self.rails:
            if r.group == group:
                return r
        raise KeyError(group)

    def domain(self, name: str) -> DomainChain:
        for d in self.domains:
            if d.domain == name:
                return d
        raise KeyError(name)

    def largest_loss(self) -> str:
        values = self.losses.to_dict()
        return max(LOSS_CATEGORIES, key=lambda k: values[k])

    def loss_fractions(self) -> Dict[str, float]:
        """Each loss category as a share of supply power"""
        return {k: v / self.supply_power for k, v in self.losses.to_dict().items()}

    def to_dict(self) -> Dict[str, Any]:
        return {
            "topology": self.topology,
            "architecture": self.architecture,
            "mode": self.mode,
            "package_state": self.package_state,
            "nominal_power": self.nominal_power,
            "supply_power": self.supply_power,
            "etee": self.etee,
            "losses": self.losses.to_dict(),
            "domains": [asdict(d) for d in self.domains],
            "rails": [asdict(r) for r in self.rails],
            "extrapolated": list(self.extrapolated),
            "t_junction": self.t_junction,
        }


LoadsArg = Union[Mapping[str, DomainLoad], Iterable[DomainLoad]]


def _default_curves() -> CurvePack:
    from data_io import default_curve_pack
    return default_curve_pack()


def _loads_by_domain(t: PdnTopology, loads: LoadsArg) -> Dict[str, DomainLoad]:
    if isinstance(loads, Mapping):
        by_domain = dict(loads)
    else:
        by_domain = {load.domain: load for load in loads}
    missing = [d for d in t.domains if d not in by_domain]
    extra = [d for d in by_domain if d not in t.domains]
    if missing or extra:
        raise ValueError(f"{t.display_name}: loads do not match topology domains "
                         f"(missing {missing}, unknown {extra})")
    return by_domain


def _group_ar(loads: Sequence[DomainLoad]) -> float:
    total = sum(load.p_nom for load in loads)
    if total == 0:
        return sum(load.ar for load in loads) / len(loads)
    return sum(load.p_nom * load.ar for load in loads) / total


class _Walker:
    """Accumulates one evaluation; discarded afterwards"""

    def __init__(self, t: PdnTopology, curves: CurvePack, mode: Optional[FlexMode],
                 package_state: PackagePowerState):
        self.t = t
        self.curves = curves
        self.mode = mode
        self.package_state = package_state
        self.domains: List[DomainChain] = []
        self.rails: List[RailReport] = []
        self.losses = {k: 0.0 for k in LOSS_CATEGORIES}
        self.extrapolated: List[str] = []

    def _on_chip_kind(self, member: GroupMember) -> Optional[VrKind]:
        stage = member.on_chip
        if stage is None:
            return None
        if stage.kind == VrKind.HYBRID:
            if self.mode is None:
                raise ValueError(f"{self.t.display_name}: a hybrid stage needs a FlexWatts mode")
            return VrKind.IVR if self.mode == FlexMode.IVR else VrKind.LDO
        return stage.kind

    def _guardband(self, member: GroupMember, load: DomainLoad, rail_tob: float):
        stage = member.on_chip
        v_gb = rail_tob
        if stage is not None:
            v_gb = stage.v_tob
            if stage.kind == VrKind.HYBRID and self.mode == FlexMode.LDO and stage.ldo_v_tob is not None:
                v_gb = stage.ldo_v_tob
        gb = guardband_power(load, v_gb)
        pg = power_gate_drop(gb, member.r_pg)
        self.losses["guardband"] += gb.p_gb - load.p_nom
        self.losses["power_gate"] += pg.p_gb - gb.p_gb
        return gb, pg

    def _off_chip(self, group: VrGroup, p_d: float, v_d: float, ar: float, shared: bool) -> float:
        rail = group.rail
        v_ll, p_ll = load_line_position(p_d, v_d, ar, rail.r_ll)
        i_out = p_d / v_d
        eta, ps = 1.0, None
        if p_d > 0:
            curve = require_curve(self.curves, rail.curve)
            state = select_vr_power_state(curve, self.package_state, self.t.v_supply, v_ll, i_out)
            found = curve.lookup(self.t.v_supply, v_ll, i_out, state)
            eta, ps = found.eta, state.value
            if found.extrapolated:
                self.extrapolated.append(f"{group.name}:{rail.name}")
        supply = p_ll / eta
        self.losses["load_line_i2r"] += p_ll - p_d
        self.losses["off_chip_vr"] += supply - p_ll
        self.rails.append(RailReport(group.name, rail.name, shared, p_d, p_d / ar, v_d, v_ll, p_ll,
                                     i_out, eta, ps, supply))
        return supply

    def direct_group(self, group: VrGroup, loads: Dict[str, DomainLoad]) -> float:
        members = [loads[m.domain] for m in group.members]
        p_d, v_d = 0.0, 0.0
        for member, load in zip(group.members, members):
            gb, pg = self._guardband(member, load, group.rail.v_tob)
            self.domains.append(DomainChain(load.domain, load.p_nom, gb.p_gb, pg.p_gb, pg.p_gb, pg.v_eff))
            p_d += pg.p_gb
            v_d = max(v_d, pg.v_eff)
        return self._off_chip(group, p_d, v_d, _group_ar(members), shared=False)

    def first_stage_group(self, group: VrGroup, loads: Dict[str, DomainLoad]) -> float:
        members = [loads[m.domain] for m in group.members]
        staged = [(m, load, self._guardband(m, load, group.rail.v_tob)) for m, load in zip(group.members, members)]

        ldo_fed = [pg.v_eff for m, _, (_, pg) in staged if self._on_chip_kind(m) == VrKind.LDO]
        if ldo_fed:
            v_rail = max(ldo_fed)
        else:
            v_rail = self.t.v_in

        p_in = 0.0
        for member, load, (gb, pg) in staged:
            kind = self._on_chip_kind(member)
            eta, ps = 1.0, None
            if kind == VrKind.LDO:
                eta = ldo_efficiency(pg.v_eff, v_rail, member.on_chip.i_effi)
            elif kind == VrKind.IVR and pg.p_gb > 0:
                stage = member.on_chip
                curve = require_curve(self.curves, stage.curve)
                i_out = pg.p_gb / pg.v_eff
                state = select_vr_power_state(curve, self.package_state, v_rail, pg.v_eff, i_out)
                found = curve.lookup(v_rail, pg.v_eff, i_out, state)
                eta, ps = found.eta, state.value
                if found.extrapolated:
                    self.extrapolated.append(f"{member.domain}:{stage.name}")
            p_after = pg.p_gb / eta
            self.losses["on_chip_vr"] += p_after - pg.p_gb
            self.domains.append(DomainChain(load.domain, load.p_nom, gb.p_gb, pg.p_gb, p_after, pg.v_eff, eta, ps))
            p_in += p_after
        return self._off_chip(group, p_in, v_rail, _group_ar(members), shared=True)


def _walk(t: PdnTopology, loads: LoadsArg, curves: Optional[CurvePack], mode: Optional[FlexMode],
          package_state: PackagePowerState) -> EteeReport:
    by_domain = _loads_by_domain(t, loads)
    walker = _Walker(t, curves if curves is not None else _default_curves(), mode,
                     PackagePowerState(package_state))
    supply = 0.0
    for group in t.groups:
        if group.feeds_on_chip:
            supply += walker.first_stage_group(group, by_domain)
        else:
            supply += walker.direct_group(group, by_domain)

    nominal = sum(load.p_nom for load in by_domain.values())
    if supply <= 0 or nominal <= 0:
        raise ZeroPower(f"{t.display_name}: no power delivered, ETEE is undefined")
    report = EteeReport(
        topology=t.display_name,
        architecture=t.name.value,
        mode=mode.value if mode is not None else None,
        package_state=walker.package_state.value,
        domains=tuple(walker.domains),
        rails=tuple(walker.rails),
        nominal_power=nominal,
        supply_power=supply,
        etee=nominal / supply,
        losses=LossBreakdown(**walker.losses),
        extrapolated=tuple(walker.extrapolated),
        t_junction=t.t_junction,
    )
    logger.debug("%s %s etee=%.6f supply=%.6f W", report.topology, report.mode or "", report.etee, supply)
    return report


def _require(t: PdnTopology, *names: Architecture) -> None:
    if t.name not in names:
        raise ValueError(f"{t.display_name} is a {t.name.value} topology, expected "
                         f"{' or '.join(n.value for n in names)}")


def eval_mbvr(t: PdnTopology, loads: LoadsArg, curves: Optional[CurvePack] = None,
              package_state: PackagePowerState = PackagePowerState.C0) -> EteeReport:
    _require(t, Architecture.MBVR)
    return _walk(t, loads, curves, None, package_state)


def eval_ivr(t: PdnTopology, loads: LoadsArg, curves: Optional[CurvePack] = None,
             package_state: PackagePowerState = PackagePowerState.C0) -> EteeReport:
    _require(t, Architecture.IVR)
    return _walk(t, loads, curves, None, package_state)


def eval_ldo(t: PdnTopology, loads: LoadsArg, curves: Optional[CurvePack] = None,
             package_state: PackagePowerState = PackagePowerState.C0) -> EteeReport:
    _require(t, Architecture.LDO)
    return _walk(t, loads, curves, None, package_state)


def eval_i_mbvr(t: PdnTopology, loads: LoadsArg, curves: Optional[CurvePack] = None,
                package_state: PackagePowerState = PackagePowerState.C0) -> EteeReport:
    _require(t, Architecture.I_MBVR)
    return _walk(t, loads, curves, None, package_state)


def eval_flexwatts(t: PdnTopology, loads: LoadsArg, mode: FlexMode, curves: Optional[CurvePack] = None,
                   package_state: PackagePowerState = PackagePowerState.C0) -> EteeReport:
    _require(t, Architecture.FLEXWATTS)
    return _walk(t, loads, curves, FlexMode(mode), package_state)


def best_flexwatts_mode(t: PdnTopology, loads: LoadsArg, curves: Optional[CurvePack] = None,
                        package_state: PackagePowerState = PackagePowerState.C0) -> EteeReport:
    """Evaluate both modes and keep the better one; ties go to IvrMode"""
    ivr = eval_flexwatts(t, loads, FlexMode.IVR, curves, package_state)
    ldo = eval_flexwatts(t, loads, FlexMode.LDO, curves, package_state)
    return ivr if ivr.etee >= ldo.etee else ldo


def evaluate(t: PdnTopology, loads: LoadsArg, mode: Optional[FlexMode] = None,
             curves: Optional[CurvePack] = None,
             package_state: PackagePowerState = PackagePowerState.C0) -> EteeReport:
    """Evaluate any topology; FlexWatts without an explicit mode runs its better mode"""
    if t.name == Architecture.FLEXWATTS:
        if mode is None:
            return best_flexwatts_mode(t, loads, curves, package_state)
        return eval_flexwatts(t, loads, mode, curves, package_state)
    return _walk(t, loads, curves, None, package_state)


PowerStatePhase = Tuple[PackagePowerState, float, float]
EteeSource = Union[Mapping[PackagePowerState, float], Callable[[PackagePowerState, float], float]]


def check_residencies(residencies: Iterable[float], where: str = "phase") -> None:
    values = list(residencies)
    if any(r < 0 for r in values):
        raise ResidencyMismatch(f"{where}: negative residency in {values}")
    total = sum(values)
    if abs(total - 1.0) > RESIDENCY_TOLERANCE:
        raise ResidencyMismatch(f"{where}: residencies sum to {total:.9f}, expected 1",
                                {"sum": total})


def power_state_etee(t: PdnTopology, state: PackagePowerState, p_state: float, state_model,
                     mode: Optional[FlexMode] = None, curves: Optional[CurvePack] = None) -> EteeReport:
    """Evaluate a topology at the operating point of a package power state"""
    loads = state_model.state_loads(PackagePowerState(state), p_state, t.domains)
    return evaluate(t, loads, mode, curves, package_state=state)


def eval_power_state_mix(t: Optional[PdnTopology], phases: Sequence[PowerStatePhase],
                         etee_source: Optional[EteeSource] = None, state_model=None,
                         mode: Optional[FlexMode] = None, curves: Optional[CurvePack] = None) -> float:
    """Average supply power of a residency mix: sum of p * r / etee over the states.

    The per-state ETEE comes from etee_source when given, otherwise from evaluating t at
    each state's operating point via state_model.
    """
    check_residencies((r for _, r, _ in phases), "power-state mix")
    total = 0.0
    for state, residency, p_state in phases:
        if residency == 0 or p_state == 0:
            continue
        state = PackagePowerState(state)
        if etee_source is None:
            if t is None or state_model is None:
                raise ValueError("a topology and a power-state model are needed without an ETEE source")
            eta = power_state_etee(t, state, p_state, state_model, mode, curves).etee
        elif isinstance(etee_source, Mapping):
            eta = etee_source[state]
        else:
            eta = etee_source(state, p_state)
        total += p_state * residency / eta
    return total
