"""
Topology presets and topology files
The five architectures are presets over the common group/stage schema; TOML files with
[topology], [stage.<name>], [group.<name>] and [domain.<name>] sections describe variants.
"""

import logging
import sys

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Union

from pydantic import ValidationError

from errors import InputFormatError
from pdn_core import (Architecture, DomainId, GroupMember, PdnTopology, VrGroup, VrKind, VrStage,
                      validate_topology)
from schemas import TopologyFile

logger = logging.getLogger("pdnspot.io")

ALL_DOMAINS = tuple(d.value for d in DomainId)


@dataclass(frozen=True)
class PlatformParameters:
    """Regulator parameters for the bundled client platform (volts, ohms, amps)"""
    offchip_curve: str = "offchip"
    ivr_curve: str = "ivr"
    v_supply: float = 7.2
    ivr_v_in: float = 1.8
    mbvr_v_tob: float = 0.019
    ivr_v_tob: float = 0.022
    ldo_v_tob: float = 0.017
    r_ll: Dict[str, float] = field(default_factory=lambda: {
        "Core0": 0.0025, "Core1": 0.0025, "LLC": 0.0025, "GFX": 0.0025, "SA": 0.007, "IO": 0.004,
    })
    r_ll_ivr_in: float = 0.001
    r_ll_ldo_in: float = 0.00125
    r_ll_flexwatts_in: float = 0.00125
    r_pg: Dict[str, float] = field(default_factory=lambda: {"Core0": 0.001, "Core1": 0.001, "LLC": 0.002})
    i_effi: float = 0.991
    icc_max: float = 100.0


DEFAULT_PLATFORM = PlatformParameters()


def _off_chip(name: str, p: PlatformParameters, v_tob: float = 0.0, r_ll: float = 0.0) -> VrStage:
    return VrStage(name, VrKind.OFF_CHIP, curve=p.offchip_curve, v_tob=v_tob, r_ll=r_ll, icc_max=p.icc_max)


def _uncore_groups(p: PlatformParameters, v_tob: float) -> List[VrGroup]:
    return [VrGroup(d, _off_chip(f"vcc_{d.lower()}", p, v_tob, p.r_ll[d]), (GroupMember(d),))
            for d in ("SA", "IO")]


def mbvr_topology(p: PlatformParameters = DEFAULT_PLATFORM) -> PdnTopology:
    def gated(domain: str) -> GroupMember:
        r_pg = p.r_pg.get(domain, 0.0)
        if not r_pg:
            return GroupMember(domain)
        return GroupMember(domain, VrStage(f"pg_{domain.lower()}", VrKind.POWER_GATE, r_pg=r_pg, icc_max=p.icc_max))

    groups = [
        VrGroup("CPU", _off_chip("vcc_cpu", p, p.mbvr_v_tob, p.r_ll["Core0"]),
                tuple(gated(d) for d in ("Core0", "Core1", "LLC"))),
        VrGroup("GFX", _off_chip("vcc_gfx", p, p.mbvr_v_tob, p.r_ll["GFX"]), (gated("GFX"),)),
    ] + _uncore_groups(p, p.mbvr_v_tob)
    return validate_topology(PdnTopology(Architecture.MBVR, tuple(groups), v_supply=p.v_supply,
                                         declared_domains=ALL_DOMAINS))


def _ivr_stage(p: PlatformParameters) -> VrStage:
    return VrStage("ivr", VrKind.IVR, curve=p.ivr_curve, v_tob=p.ivr_v_tob, icc_max=p.icc_max)


def ivr_topology(p: PlatformParameters = DEFAULT_PLATFORM) -> PdnTopology:
    stage = _ivr_stage(p)
    group = VrGroup("IN", _off_chip("vin", p, r_ll=p.r_ll_ivr_in),
                    tuple(GroupMember(d, stage) for d in ALL_DOMAINS))
    return validate_topology(PdnTopology(Architecture.IVR, (group,), v_in=p.ivr_v_in, v_supply=p.v_supply,
                                         declared_domains=ALL_DOMAINS))


def ldo_topology(p: PlatformParameters = DEFAULT_PLATFORM) -> PdnTopology:
    stage = VrStage("ldo", VrKind.LDO, v_tob=p.ldo_v_tob, i_effi=p.i_effi, icc_max=p.icc_max)
    group = VrGroup("IN", _off_chip("vin", p, r_ll=p.r_ll_ldo_in),
                    tuple(GroupMember(d, stage) for d in ("Core0", "Core1", "LLC", "GFX")))
    groups = (group, *_uncore_groups(p, p.ldo_v_tob))
    return validate_topology(PdnTopology(Architecture.LDO, groups, v_supply=p.v_supply,
                                         declared_domains=ALL_DOMAINS))


def i_mbvr_topology(p: PlatformParameters = DEFAULT_PLATFORM) -> PdnTopology:
    stage = _ivr_stage(p)
    group = VrGroup("IN", _off_chip("vin", p, r_ll=p.r_ll_ivr_in),
                    tuple(GroupMember(d, stage) for d in ("Core0", "Core1", "LLC", "GFX")))
    groups = (group, *_uncore_groups(p, p.mbvr_v_tob))
    return validate_topology(PdnTopology(Architecture.I_MBVR, groups, v_in=p.ivr_v_in, v_supply=p.v_supply,
                                         declared_domains=ALL_DOMAINS))


def flexwatts_topology(p: PlatformParameters = DEFAULT_PLATFORM) -> PdnTopology:
    stage = VrStage("hybrid", VrKind.HYBRID, curve=p.ivr_curve, v_tob=p.ivr_v_tob, ldo_v_tob=p.ldo_v_tob,
                    i_effi=p.i_effi, icc_max=p.icc_max)
    group = VrGroup("IN", _off_chip("vin", p, r_ll=p.r_ll_flexwatts_in),
                    tuple(GroupMember(d, stage) for d in ("Core0", "Core1", "LLC", "GFX")))
    groups = (group, *_uncore_groups(p, p.mbvr_v_tob))
    return validate_topology(PdnTopology(Architecture.FLEXWATTS, groups, v_in=p.ivr_v_in, v_supply=p.v_supply,
                                         declared_domains=ALL_DOMAINS))


PRESETS = {
    Architecture.MBVR: mbvr_topology,
    Architecture.IVR: ivr_topology,
    Architecture.LDO: ldo_topology,
    Architecture.I_MBVR: i_mbvr_topology,
    Architecture.FLEXWATTS: flexwatts_topology,
}


def preset(name: Union[str, Architecture], p: PlatformParameters = DEFAULT_PLATFORM) -> PdnTopology:
    return PRESETS[Architecture(name)](p)


def all_presets(p: PlatformParameters = DEFAULT_PLATFORM) -> List[PdnTopology]:
    return [build(p) for build in PRESETS.values()]


def parse_topology(document: dict, source: str = "<memory>") -> PdnTopology:
    """Build a topology from a parsed TOML document; invariants are left to validate_topology"""
    try:
        parsed = TopologyFile.model_validate(document)
    except ValidationError as exc:
        first = exc.errors()[0]
        where = ".".join(str(part) for part in first["loc"])
        raise InputFormatError(f"{where}: {first['msg']}", file=source) from exc

    stages: Dict[str, VrStage] = {
        name: VrStage(name, VrKind(s.kind), curve=s.curve, v_tob=s.v_tob, r_ll=s.r_ll, r_pg=s.r_pg,
                      icc_max=s.icc_max, i_effi=s.i_effi, ldo_v_tob=s.ldo_v_tob)
        for name, s in parsed.stage.items()
    }

    def stage_ref(name: Optional[str], where: str) -> Optional[VrStage]:
        if name is None:
            return None
        if name not in stages:
            raise InputFormatError(f"{where} refers to unknown stage {name!r}", file=source)
        return stages[name]

    groups = []
    for group_name, g in parsed.group.items():
        rail = stage_ref(g.rail, f"group.{group_name}.rail")
        members = []
        for domain in g.members:
            binding = parsed.domain.get(domain)
            member_stage = stage_ref(binding.stage, f"domain.{domain}.stage") if binding else None
            members.append(GroupMember(domain, member_stage))
        groups.append(VrGroup(group_name, rail, tuple(members)))

    header = parsed.topology
    return PdnTopology(
        name=Architecture(header.name),
        groups=tuple(groups),
        v_in=header.v_in,
        v_supply=header.v_supply,
        declared_domains=tuple(parsed.domain),
        t_junction=header.t_junction,
        label=header.label or "",
    )


def load_topology(path: Union[str, Path]) -> PdnTopology:
    path = Path(path)
    try:
        with open(path, "rb") as f:
            document = tomllib.load(f)
    except tomllib.TOMLDecodeError as exc:
        raise InputFormatError(f"malformed TOML: {exc}", file=str(path)) from exc
    except OSError as exc:
        raise InputFormatError(f"cannot read topology: {exc.strerror}", file=str(path)) from exc
    topology = parse_topology(document, str(path))
    logger.debug("loaded topology %s from %s", topology.display_name, path)
    return topology


def load_topologies(paths: Iterable[Union[str, Path]]) -> List[PdnTopology]:
    return [load_topology(p) for p in paths]


def with_label(t: PdnTopology, label: str) -> PdnTopology:
    return replace(t, label=label)
