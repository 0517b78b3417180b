from .noma import UplinkSet, build_uplink_set, noma_rate, offload_energy, offload_time, uplink_rates

__all__ = ["UplinkSet", "build_uplink_set", "noma_rate", "offload_energy", "offload_time", "uplink_rates"]
