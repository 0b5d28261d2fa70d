"""Remote health monitoring platform: device time-series ingestion,
declarative questionnaires with Likert scoring, a visualization plugin
portfolio, a from-scratch MLP toolkit, and an authenticated HTTP API with
field-level encryption for PHI at rest."""

__version__ = "0.1.0"
