import numpy as np
import pytest

from conftest import grid_text, make_grid
from fireline.errors import (
    CellCountMismatch,
    GridMisalignment,
    MalformedHeader,
    NonIntegerValue,
    ValueOutOfDomain,
)
from fireline.rasters import (
    load_scenario_set,
    parse_ascii_grid,
    remap_special_indices,
    serialize_ascii_grid,
)


def test_parse_simple_2x2():
    grid = parse_ascii_grid(grid_text([[10, 20], [30, 40]]))
    assert grid.ncols == 2 and grid.nrows == 2
    assert grid.cell_size == 1.0
    assert grid.values.tolist() == [[10, 20], [30, 40]]


def test_parse_header_fields():
    grid = parse_ascii_grid(grid_text([[1]], x0=-120.5, y0=33.25, cell_size=0.01, nodata=-1))
    assert grid.x_origin == -120.5
    assert grid.y_origin == 33.25
    assert grid.cell_size == 0.01
    assert grid.nodata_value == -1


def test_parse_case_insensitive_keys():
    text = grid_text([[7]]).replace("ncols", "NCOLS").replace("NODATA_value", "nodata_VALUE")
    assert parse_ascii_grid(text).values.tolist() == [[7]]


def test_parse_count_mismatch():
    text = "ncols 3\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\nNODATA_value -9999\n"
    text += "1 2 3 4 5 6 7 8\n"
    with pytest.raises(CellCountMismatch):
        parse_ascii_grid(text)


def test_parse_missing_key():
    text = grid_text([[1]]).replace("yllcorner", "xllcorner")  # duplicate x, missing y
    with pytest.raises(MalformedHeader):
        parse_ascii_grid(text)


def test_parse_bad_header_value():
    with pytest.raises(MalformedHeader):
        parse_ascii_grid(grid_text([[1]]).replace("ncols 1", "ncols one"))


def test_parse_non_integer_value():
    with pytest.raises(NonIntegerValue):
        parse_ascii_grid(grid_text([[1]]).replace("\n1\n", "\n1.5\n"))


def test_parse_truncated():
    with pytest.raises(MalformedHeader):
        parse_ascii_grid("ncols 2\nnrows 2\n")


def test_round_trip_random_grid():
    # serialize -> parse must reproduce the grid bit for bit
    rng = np.random.default_rng(0)
    grid = make_grid(
        rng.integers(0, 151, size=(100, 100)),
        x0=-117.25, y0=32.5, cell_size=0.0125,
    )
    assert parse_ascii_grid(serialize_ascii_grid(grid)) == grid


def test_remap_special_indices():
    grid = make_grid([[0, 150, 248, 254]])
    assert remap_special_indices(grid).values.tolist() == [[0, 150, 0, 0]]


def test_remap_identity_in_range():
    grid = make_grid([[5, 5, 5]])
    assert remap_special_indices(grid).values.tolist() == [[5, 5, 5]]


def test_remap_nodata_becomes_zero():
    grid = make_grid([[-9999, 3]], nodata=-9999)
    assert remap_special_indices(grid).values.tolist() == [[0, 3]]


def test_remap_rejects_undefined_values():
    with pytest.raises(ValueOutOfDomain):
        remap_special_indices(make_grid([[200]]))
    with pytest.raises(ValueOutOfDomain):
        remap_special_indices(make_grid([[255]]))
    with pytest.raises(ValueOutOfDomain):
        remap_special_indices(make_grid([[-5]]))


def test_remap_idempotent_and_preserves_georeference():
    rng = np.random.default_rng(1)
    values = rng.choice([0, 10, 75, 150, 248, 254, -9999], size=(20, 30))
    grid = make_grid(values, x0=4.5, y0=-2.0, cell_size=0.5)
    once = remap_special_indices(grid)
    twice = remap_special_indices(once)
    assert once == twice
    assert once.georeference == grid.georeference
    assert once.values.min() >= 0 and once.values.max() <= 150


def test_load_scenario_set(tmp_path):
    rng = np.random.default_rng(2)
    for name in ("a", "b"):
        (tmp_path / f"{name}.asc").write_text(
            grid_text(rng.integers(0, 151, size=(10, 10)))
        )
    scen = load_scenario_set(
        [tmp_path / "a.asc", tmp_path / "b.asc"], ["2021-07-01", "2021-07-02"]
    )
    assert scen.labels == ("2021-07-01", "2021-07-02")
    assert len(scen) == 2


def test_load_scenario_set_misaligned(tmp_path):
    (tmp_path / "a.asc").write_text(grid_text([[1]], cell_size=1.0))
    (tmp_path / "b.asc").write_text(grid_text([[1]], cell_size=2.0))
    with pytest.raises(GridMisalignment):
        load_scenario_set([tmp_path / "a.asc", tmp_path / "b.asc"], ["a", "b"])


def test_load_scenario_set_two_months_of_days(tmp_path):
    rng = np.random.default_rng(3)
    paths, labels = [], []
    for day in range(62):
        path = tmp_path / f"day{day:02d}.asc"
        path.write_text(grid_text(rng.integers(0, 151, size=(5, 5))))
        paths.append(path)
        labels.append(f"day{day:02d}")
    scen = load_scenario_set(paths, labels)
    assert len(scen) == 62
    assert scen.labels == tuple(labels)


def test_load_scenario_set_validates_lengths(tmp_path):
    (tmp_path / "a.asc").write_text(grid_text([[1]]))
    with pytest.raises(ValueError):
        load_scenario_set([tmp_path / "a.asc"], ["a", "b"])
    with pytest.raises(ValueError):
        load_scenario_set([], [])
