"""Delayed two-photon correlations of a two-emitter antenna as a sensing resource."""
from .antenna import AntennaParams, couplings, pair_correlator, upsilon
from .inference import crb, fisher_matrix, fisher_rare_event
from .schemes import MeasurementSetting, g2_probability, time_averaged_probability

__all__ = [
    "AntennaParams", "couplings", "pair_correlator", "upsilon",
    "crb", "fisher_matrix", "fisher_rare_event",
    "MeasurementSetting", "g2_probability", "time_averaged_probability",
]
