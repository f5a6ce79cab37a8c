import numpy as np
import pytest

from policyprog.features import FeatureMatrix


def make_matrix(X, prefix="c", group="text", row_prefix="r"):
    """FeatureMatrix around a raw array with generated names."""
    X = np.asarray(X, dtype=float)
    return FeatureMatrix(
        row_ids=tuple(f"{row_prefix}{i}" for i in range(X.shape[0])),
        names=tuple(f"{prefix}{j}" for j in range(X.shape[1])),
        groups=(group,) * X.shape[1],
        values=X,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def corpus_line(pid="p1", stage="Tabled", text="climate policy text here", **over):
    obj = {
        "id": pid,
        "title": f"Title {pid}",
        "text": text,
        "stage": stage,
        "month": 3,
        "year": 2021,
        "legislative": True,
    }
    obj.update(over)
    return obj
