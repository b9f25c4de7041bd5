"""Files shipped with the package: the bundled example domain and its config."""
import os


def data_path(name: str) -> str:
    return os.path.join(os.path.dirname(__file__), name)


def read_text(name: str) -> str:
    with open(data_path(name)) as f:
        return f.read()
