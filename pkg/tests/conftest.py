import pytest

from qilc import benchmarks_dir, frontend

BENCHMARK_NAMES = [
    "count",
    "cross_join",
    "equi_join",
    "identity",
    "join_select_project",
    "max_value",
    "min_value",
    "projection",
    "select_project",
    "selection",
    "sum",
    "top_k",
]


def load_benchmark(name: str):
    path = benchmarks_dir() / f"{name}.qil"
    return frontend.typecheck(frontend.parse(path.read_text(encoding="utf-8")))


@pytest.fixture(scope="session")
def benchmarks():
    return {name: load_benchmark(name) for name in BENCHMARK_NAMES}
