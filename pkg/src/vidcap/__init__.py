"""vidcap: desk-scale end-to-end multitask reinforcement video captioning engine."""

__version__ = "0.1.0"
