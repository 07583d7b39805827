"""Tests for grid, scan, PSF, key=value and table file formats."""

import numpy as np
import pydantic
import pytest

from lineprobe.encoding import (
    MAGIC,
    format_float,
    model_from_key_values,
    read_grid,
    read_image,
    read_key_values,
    read_model,
    read_psf_box,
    read_psf_params,
    read_scanset,
    read_sparse_map,
    write_grid,
    write_key_values,
    write_model,
    write_psf_box,
    write_psf_params,
    write_scanset,
    write_sparse_map,
    write_table,
)
from lineprobe.enums import AngleMode, ExperimentMode, PlacementMode
from lineprobe.exceptions import ParseError
from lineprobe.models import (
    CampaignConfig,
    LineScanSet,
    PsfBox,
    PsfParams,
    SampleSpec,
    ScanGeometry,
    SolverConfig,
    SparseMap,
)

SHAPE = (1.0, 2.0, 3.0, 2.0, 3.0, 0.5)


class TestFloatFormatting:
    def test_format_float(self):
        assert format_float(0.0) == "0"
        assert format_float(0.25) == "0.25"
        assert float(format_float(0.1)) == 0.1

    def test_full_precision(self):
        value = 1.0 / 3.0
        assert float(format_float(value)) == value


class TestGrids:
    """CSV and LSCS1 grids."""

    def test_csv_grid(self, tmp_path):
        data = np.arange(9, dtype=float).reshape(3, 3) / 7.0
        path = tmp_path / "g.csv"
        write_grid(path, data)
        np.testing.assert_array_equal(read_grid(path), data)

    def test_binary_grid(self, tmp_path):
        data = np.random.default_rng(0).random((5, 5))
        path = tmp_path / "g.lscs"
        write_grid(path, data)
        blob = path.read_bytes()
        assert blob.startswith(MAGIC)
        assert len(blob) == 9 + 8 * 25
        np.testing.assert_array_equal(read_grid(path), data)

    def test_binary_bad_magic(self, tmp_path):
        path = tmp_path / "g.bin"
        path.write_bytes(b"XXXXX" + b"\x02\x00\x00\x00" + b"\x00" * 32)
        with pytest.raises(ParseError, match="bad magic"):
            read_grid(path)

    def test_binary_truncated_payload(self, tmp_path):
        path = tmp_path / "g.bin"
        path.write_bytes(MAGIC + b"\x02\x00\x00\x00" + b"\x00" * 8)
        with pytest.raises(ParseError):
            read_grid(path)

    def test_ragged_row_reports_line(self, tmp_path):
        path = tmp_path / "g.csv"
        path.write_text("1,2\n3\n")
        with pytest.raises(ParseError) as excinfo:
            read_grid(path)
        assert excinfo.value.line == 2
        assert "row 2: expected 2 columns, got 1" in str(excinfo.value)

    def test_non_numeric_cell(self, tmp_path):
        path = tmp_path / "g.csv"
        path.write_text("1,2\n3,x\n")
        with pytest.raises(ParseError, match="column 2 is not a number"):
            read_grid(path)

    def test_comments_and_blank_lines_skipped(self, tmp_path):
        path = tmp_path / "g.csv"
        path.write_text("# header\n1,2\n\n3,4\n")
        np.testing.assert_array_equal(read_grid(path), [[1, 2], [3, 4]])

    def test_empty_file(self, tmp_path):
        path = tmp_path / "g.csv"
        path.write_text("")
        with pytest.raises(ParseError):
            read_grid(path)

    def test_sparse_map_and_image(self, tmp_path):
        x = SparseMap.from_centers(6, [(1, 2), (4, 4)], [1.0, 2.5])
        path = tmp_path / "X.csv"
        write_sparse_map(path, x)
        assert read_sparse_map(path).support() == [(1, 2), (4, 4)]
        img = read_image(path, pixel_size=0.5)
        assert img.pixel_size == 0.5

    def test_negative_sparse_map_rejected(self, tmp_path):
        path = tmp_path / "X.csv"
        path.write_text("0,-1\n0,0\n")
        with pytest.raises(pydantic.ValidationError):
            read_sparse_map(path)


class TestScanSets:
    """Scan CSVs with an angle header row."""

    def _scans(self, n=4, stride=1):
        geometry = ScanGeometry(angles=(0.0, 60.0, -30.0), n=n, stride=stride)
        data = np.arange(geometry.samples * 3, dtype=float).reshape(-1, 3)
        return LineScanSet(data=data / 3.0, geometry=geometry)

    def test_round_trip(self, tmp_path):
        scans = self._scans()
        path = tmp_path / "R.csv"
        write_scanset(path, scans)
        back = read_scanset(path)
        assert back.geometry.angles == scans.geometry.angles
        np.testing.assert_array_equal(back.data, scans.data)

    def test_strided_needs_n(self, tmp_path):
        scans = self._scans(n=5, stride=2)
        path = tmp_path / "R.csv"
        write_scanset(path, scans)
        with pytest.raises(ParseError, match="required"):
            read_scanset(path, stride=2)
        back = read_scanset(path, n=5, stride=2)
        assert back.geometry.samples == 3

    def test_wrong_row_count(self, tmp_path):
        path = tmp_path / "R.csv"
        write_scanset(path, self._scans(n=4))
        with pytest.raises(ParseError, match="sample rows"):
            read_scanset(path, n=6)

    def test_ragged_sample_row(self, tmp_path):
        path = tmp_path / "R.csv"
        path.write_text("0,90\n1,2\n3,4,5\n")
        with pytest.raises(ParseError) as excinfo:
            read_scanset(path)
        assert excinfo.value.line == 3

    def test_duplicate_angles(self, tmp_path):
        path = tmp_path / "R.csv"
        path.write_text("0,0\n1,2\n3,4\n")
        with pytest.raises(ParseError, match="distinct"):
            read_scanset(path)

    def test_header_only(self, tmp_path):
        path = tmp_path / "R.csv"
        path.write_text("0,90\n")
        with pytest.raises(ParseError):
            read_scanset(path)


class TestPsfFiles:
    """Per-line PSF rows and box files."""

    def test_params_round_trip(self, tmp_path):
        box = PsfBox(lower=(0.1, *SHAPE[1:]), upper=(10.0, *SHAPE[1:]))
        p = PsfParams.uniform(SHAPE, 3, box).with_amplitudes([1, 2, 3])
        ppath = tmp_path / "p.csv"
        bpath = tmp_path / "box.csv"
        write_psf_params(ppath, p)
        write_psf_box(bpath, box)
        back_box = read_psf_box(bpath)
        back = read_psf_params(ppath, back_box, m=3)
        np.testing.assert_array_equal(back.values, p.values)
        np.testing.assert_array_equal(back_box.upper, box.upper)

    def test_single_row_broadcasts(self, tmp_path):
        path = tmp_path / "p.csv"
        path.write_text(",".join(str(v) for v in SHAPE) + "\n")
        p = read_psf_params(path, m=4)
        assert p.m == 4
        assert p.box.collapsed

    def test_row_count_mismatch(self, tmp_path):
        path = tmp_path / "p.csv"
        row = ",".join(str(v) for v in SHAPE)
        path.write_text(f"{row}\n{row}\n")
        with pytest.raises(ParseError, match="expected 3 PSF rows"):
            read_psf_params(path, m=3)

    def test_box_needs_two_rows(self, tmp_path):
        path = tmp_path / "box.csv"
        path.write_text(",".join(str(v) for v in SHAPE) + "\n")
        with pytest.raises(ParseError, match="exactly 2 rows"):
            read_psf_box(path)

    def test_wrong_width(self, tmp_path):
        path = tmp_path / "p.csv"
        path.write_text("1,2,3\n")
        with pytest.raises(ParseError, match="expected 6 columns"):
            read_psf_params(path)


class TestKeyValues:
    """key=value configuration files."""

    def test_read(self, tmp_path):
        path = tmp_path / "cfg.txt"
        path.write_text("# comment\nn = 64\n\nk=8\n")
        assert read_key_values(path) == {"n": "64", "k": "8"}

    def test_duplicate_key(self, tmp_path):
        path = tmp_path / "cfg.txt"
        path.write_text("n=1\nn=2\n")
        with pytest.raises(ParseError) as excinfo:
            read_key_values(path)
        assert excinfo.value.line == 2

    def test_missing_equals(self, tmp_path):
        path = tmp_path / "cfg.txt"
        path.write_text("n 64\n")
        with pytest.raises(ParseError, match="key=value"):
            read_key_values(path)

    def test_write_formats_values(self, tmp_path):
        path = tmp_path / "out.txt"
        write_key_values(
            path, {"flag": True, "x": 0.5, "pairs": ((1, 2), (3, 4))}
        )
        assert path.read_text() == "flag=true\nx=0.5\npairs=1:2,3:4\n"

    def test_sample_spec_from_key_values(self):
        spec = model_from_key_values(
            SampleSpec,
            {
                "n": "32",
                "k": "2",
                "r": "2",
                "placement": "explicit",
                "centers": "5:6,20:21",
            },
        )
        assert spec.placement is PlacementMode.EXPLICIT
        assert spec.centers == ((5, 6), (20, 21))

    def test_campaign_ranges(self):
        campaign = model_from_key_values(
            CampaignConfig,
            {"mode": "fixed-density", "lines": "2..5", "discs": "1,3"},
        )
        assert campaign.mode is ExperimentMode.FIXED_DENSITY
        assert campaign.lines == (2, 3, 4, 5)
        assert campaign.discs == (1, 3)

    def test_unknown_key_rejected(self):
        with pytest.raises(pydantic.ValidationError):
            model_from_key_values(SolverConfig, {"bogus": "1"})

    def test_model_round_trip(self, tmp_path):
        campaign = CampaignConfig(
            lines=(2, 4), discs=(1,), angle_mode=AngleMode.EQUISPACED
        )
        path = tmp_path / "campaign.txt"
        write_model(path, campaign)
        text = path.read_text()
        assert "angle_mode=equispaced" in text
        assert "K=6" in text
        assert read_model(CampaignConfig, path) == campaign


class TestTables:
    def test_write_table(self, tmp_path):
        path = tmp_path / "t.csv"
        write_table(path, ["a", "b"], [{"a": 1, "b": 0.5}, {"a": 2, "b": 0.0}])
        assert path.read_text().splitlines() == ["a,b", "1,0.5", "2,0"]
