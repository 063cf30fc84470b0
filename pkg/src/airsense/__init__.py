"""Pollution-aware POI recommendation toolkit.

Subpackages cover the full pipeline: sensor ingestion and AQI computation,
spatial AQI interpolation, pollutant forecasting and anomaly detection, a
matrix-factorization recommender with air-quality re-ranking, a simulated
federated training protocol, file-backed storage, an HTTP service, and a CLI.
"""

__version__ = "0.1.0"
