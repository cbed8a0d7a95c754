"""Advisor-in-the-loop actor-critic training: backbones, the ask/advise
mechanism, environments, scripted and remote advisors, and the experiment
harness."""

__version__ = "0.1.0"
