__all__ = ["simulate_actions", "semiwave_actions", "threshold_actions", "sweep_actions"]
