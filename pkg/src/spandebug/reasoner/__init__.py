"""Reasoning over span graphs: rules, strategies, open-world queries."""
from .openworld import (
    ConsecutiveQuery,
    DomainAxiom,
    OpenWorldResult,
    check_open_world,
)
from .rules import (
    BuiltinAtom,
    ClassAtom,
    PropAtom,
    Rule,
    forward_chain,
    load_rules,
    parse_rules,
)
from .strategies import (
    PropertySpec,
    STRATEGIES,
    Verdict,
    check_inter,
    check_intra,
    inter_classes,
    intra_classes,
    parse_property,
)

__all__ = [
    "BuiltinAtom",
    "ClassAtom",
    "ConsecutiveQuery",
    "DomainAxiom",
    "OpenWorldResult",
    "PropAtom",
    "PropertySpec",
    "Rule",
    "STRATEGIES",
    "Verdict",
    "check_inter",
    "check_intra",
    "check_open_world",
    "forward_chain",
    "inter_classes",
    "intra_classes",
    "load_rules",
    "parse_property",
    "parse_rules",
]
