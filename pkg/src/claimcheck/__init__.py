"""claimcheck: evidence-retrieval and reasoning pipeline for multimodal
misinformation detection, with dataset curation and a human-review loop."""

__version__ = "0.1.0"
