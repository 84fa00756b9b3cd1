"""Quantum information splitting over linear cluster channels.

Simulates the locking/unlocking protocol that splits a two-qubit secret
among Alice, a chain of Bobs and Charlie, synthesizes Charlie's correction
tables by brute force, and audits closed-form decoders against them.
"""
from .cluster import ChannelSource, build_channel, build_circuit_form, build_product_form, reference_state
from .protocol import (
    ClassicalTranscript,
    GateSequence,
    LockingVariant,
    ProtocolConfig,
    SecretState,
    assign_parties,
    enumerate_protocol_branches,
)
from .sim import DensityMatrix, GateSpec, StateVector
from .synthesis import CorrectionTable, accepted_configuration, synthesize_escalating, variant_sweep

__all__ = [
    "ChannelSource",
    "ClassicalTranscript",
    "CorrectionTable",
    "DensityMatrix",
    "GateSequence",
    "GateSpec",
    "LockingVariant",
    "ProtocolConfig",
    "SecretState",
    "StateVector",
    "accepted_configuration",
    "assign_parties",
    "build_channel",
    "build_circuit_form",
    "build_product_form",
    "enumerate_protocol_branches",
    "reference_state",
    "synthesize_escalating",
    "variant_sweep",
]
