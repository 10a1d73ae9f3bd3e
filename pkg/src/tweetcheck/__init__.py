"""Multilingual fake-tweet detection engine."""

__version__ = "0.1.0"

from .corpus import (  # noqa: F401
    Dataset,
    TweetRecord,
    UserProfile,
    load_dataset,
    preprocess_text,
    save_dataset,
    split_dataset,
)
from .exceptions import TweetcheckError  # noqa: F401
