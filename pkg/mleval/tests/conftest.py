import numpy as np
import pandas as pd
import pytest


def blob_csvs(tmp_path, n=6000, d=24, seed=0):
    """Two separated clusters as train/test feature CSVs.

    Values come from small per-class pools, like the heavily repeating
    3-decimal cells of real preprocessed traffic CSVs; that also gives the
    embedding-based model dense token reuse.
    """
    rng = np.random.default_rng(seed)
    n_a = n // 2
    a = rng.choice(np.array([0.05, 0.1, 0.15, 0.2]), size=(n_a, d))
    b = rng.choice(np.array([0.8, 0.85, 0.9, 0.95]), size=(n - n_a, d))
    X = np.vstack([a, b]).round(3)
    labels = np.array(["Normal"] * n_a + ["DDoS-flooding"] * (n - n_a))
    order = rng.permutation(n)
    X, labels = X[order], labels[order]
    split = int(n * 0.6)
    columns = [f"f{i:02d}" for i in range(d)]
    paths = []
    for name, lo, hi in (("train", 0, split), ("test", split, n)):
        frame = pd.DataFrame(X[lo:hi], columns=columns)
        frame["Label"] = labels[lo:hi]
        path = tmp_path / f"features_{name}.csv"
        frame.to_csv(path, index=False)
        paths.append(path)
    return paths


def shifted_anomaly_csv(tmp_path, n_normal=1400, n_malicious=600, d=46, seed=0):
    """Normal cluster plus a Malicious cluster shifted +0.5 in 10 features."""
    rng = np.random.default_rng(seed)
    normal = rng.random((n_normal, d)) * 0.2
    malicious = rng.random((n_malicious, d)) * 0.2
    malicious[:, :10] += 0.5
    X = np.vstack([normal, malicious]).round(3)
    labels = np.array(["Normal"] * n_normal + ["DDoS-flooding"] * n_malicious)
    order = rng.permutation(len(X))
    frame = pd.DataFrame(X[order], columns=[f"f{i:02d}" for i in range(d)])
    frame["Label"] = labels[order]
    path = tmp_path / "features_all.csv"
    frame.to_csv(path, index=False)
    return path


@pytest.fixture(scope="session")
def separable_csvs(tmp_path_factory):
    return blob_csvs(tmp_path_factory.mktemp("blobs"))


@pytest.fixture(scope="session")
def anomaly_csv(tmp_path_factory):
    return shifted_anomaly_csv(tmp_path_factory.mktemp("anomaly"))
