"""CSMA scheduling over Markov time-varying channels.

Exact analysis of the joint (schedule, channel) chain, design of
channel-aware CSMA parameters, and an event-driven simulator.
"""

from .channel import ChannelModel, ChannelStateSpace, channel_stationary, sample_channel_path, varying_speed
from .graph import InterferenceGraph, chromatic_number, enumerate_independent_sets, two_hop_conflict_graph
from .policy import CsmaPolicy, make_exp_policy, make_expk_policy, make_ucsma_policy

__version__ = "0.1.0"
