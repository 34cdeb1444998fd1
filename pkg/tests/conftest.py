from pathlib import Path

import pytest
from hypothesis import settings

settings.register_profile("ci", max_examples=60, deadline=None)
settings.load_profile("ci")

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def english_bytes() -> bytes:
    return (DATA / "english_sample.txt").read_bytes()


@pytest.fixture
def text_corpus(tmp_path, english_bytes):
    """Ten plain-text files of 2-3 KiB cut from the bundled sample."""
    root = tmp_path / "corpus"
    root.mkdir()
    n = len(english_bytes)
    for i in range(10):
        start = (i * 397) % (n - 3000)
        (root / f"doc{i:02d}.txt").write_bytes(english_bytes[start : start + 2048 + 100 * i])
    return root
