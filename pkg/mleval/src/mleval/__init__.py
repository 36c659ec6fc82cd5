"""mleval: evaluation harness over h3forge feature CSVs — shallow
classifiers, DNN classifiers, and autoencoder anomaly detection."""

__version__ = "0.1.0"
