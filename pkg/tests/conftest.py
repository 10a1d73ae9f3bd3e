import json

import pytest

from tweetcheck.corpus import SCHEMA_VERSION, Dataset, TweetRecord
from tweetcheck.synthetic import make_synthetic


def make_record(i: int, lang: str = "en", label: int = 0, **kwargs) -> TweetRecord:
    return TweetRecord(
        id=kwargs.pop("id", f"{lang}-{i:04d}"),
        text=kwargs.pop("text", f"sample tweet number {i}"),
        lang=lang,
        label=label,
        **kwargs,
    )


def write_lines(path, rows, stamp_schema=True):
    """Write raw dicts as a dataset file, stamping the schema field."""
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            if stamp_schema and "schema" not in row:
                row = {"schema": SCHEMA_VERSION, **row}
            fh.write(json.dumps(row, ensure_ascii=False))
            fh.write("\n")
    return path


def simple_row(i: int, lang: str = "en", label: int = 0, **extra) -> dict:
    row = {
        "id": f"{lang}-{i:04d}",
        "text": f"sample tweet number {i}",
        "lang": lang,
        "label": label,
    }
    row.update(extra)
    return row


@pytest.fixture(scope="session")
def synth():
    """Default synthetic trilingual fixture: 3 languages x 100 rows, dim 16."""
    return make_synthetic()


@pytest.fixture()
def blobs():
    """2-D linearly separable blobs (200 points, seeded)."""
    import numpy as np

    rng = np.random.default_rng(11)
    n = 100
    neg = rng.normal(loc=(-2.0, 0.0), scale=0.4, size=(n, 2))
    pos = rng.normal(loc=(2.0, 0.0), scale=0.4, size=(n, 2))
    X = np.vstack([neg, pos])
    y = np.array([0] * n + [1] * n)
    order = rng.permutation(2 * n)
    return X[order], y[order]


def assert_separable(X, y):
    """Brute-force oracle: the class-mean direction strictly separates."""
    import numpy as np

    w = X[y == 1].mean(axis=0) - X[y == 0].mean(axis=0)
    proj = X @ w
    assert proj[y == 1].min() > proj[y == 0].max()
