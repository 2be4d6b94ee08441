"""Deep-RL basal insulin and glucagon delivery on a simulated type 1 diabetes cohort."""

__version__ = "0.1.0"
