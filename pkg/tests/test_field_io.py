"""
Tests for snapshot files and run manifests.
"""
import numpy as np
import pytest

from field_io import (RunManifest, read_field_csv, read_pgm, snapshot_basename, write_field_csv, write_pgm,
                      write_snapshot, write_table_csv)
from model import builtin
from model_parser import ModelFileParser
from pattern_profile import Field2D
from utils import UsageError


class TestFieldFiles:
    """Test cases for CSV, PGM and sidecar output"""

    def test_csv_full_precision(self, tmp_path):
        values = np.random.default_rng(1).normal(size=(5, 7))
        path = write_field_csv(str(tmp_path / 'u.csv'), values)
        assert np.array_equal(read_field_csv(path), values)

    def test_pgm_scaling(self, tmp_path):
        values = np.array([[0.0, 1.0], [2.0, 4.0]])
        lo, hi = write_pgm(str(tmp_path / 'u.pgm'), values)
        assert (lo, hi) == (0.0, 4.0)
        pixels = read_pgm(str(tmp_path / 'u.pgm'))
        assert pixels.tolist() == [[0, 64], [128, 255]]

    def test_pgm_constant_field(self, tmp_path):
        write_pgm(str(tmp_path / 'c.pgm'), np.full((3, 3), 2.5))
        assert read_pgm(str(tmp_path / 'c.pgm')).max() == 0

    def test_snapshot_files(self, tmp_path):
        field = Field2D.uniform(8, 1.0, 0.5, 1.5)
        written = write_snapshot(str(tmp_path), 100.0, field)
        assert len(written) == 6
        assert snapshot_basename('u', 100.0) == 'u_t100'
        sidecar = (tmp_path / 'v_t100.scale.txt').read_text()
        assert 'min = 1.5' in sidecar
        assert 'component = v' in sidecar

    def test_table_csv(self, tmp_path):
        path = write_table_csv(str(tmp_path / 't.csv'), ('name', 'value'), [('P1', 0.1), ('m', 6)])
        assert (tmp_path / 't.csv').read_text().splitlines() == ['name,value', 'P1,0.1', 'm,6']
        assert path.endswith('t.csv')


class TestRunManifest:
    """Test cases for RunManifest"""

    def setup_method(self):
        sections = ModelFileParser.model_sections(builtin('kgs').to_definition())
        sections['pattern'] = {'kind': 'spotA', 'coeffs': [0.3, 0.2, 0.1], 'eps': 0.005}
        sections['simulation'] = {'n_grid': 64.0, 'snapshot_times': [1.0, 2.0]}
        self.manifest = RunManifest(sections=sections)

    def test_save_and_load(self, tmp_path):
        path = self.manifest.save(str(tmp_path / 'manifest.txt'))
        loaded = RunManifest.load(path)
        assert loaded.get('pattern', 'coeffs') == [0.3, 0.2, 0.1]
        assert loaded.get('pattern', 'kind') == 'spotA'
        assert loaded.get('simulation', 'n_grid') == 64.0
        assert loaded.to_text() == self.manifest.to_text()

    def test_section_order(self):
        text = self.manifest.to_text()
        assert text.index('[model]') < text.index('[pattern]') < text.index('[simulation]')

    def test_missing_key(self):
        with pytest.raises(UsageError):
            self.manifest.get('pattern', 'amplitude')
        assert self.manifest.get('pattern', 'amplitude', 1.0) == 1.0

    def test_missing_section(self):
        with pytest.raises(UsageError):
            self.manifest.section('analysis')

    def test_invalid_model_section(self):
        with pytest.raises(UsageError):
            RunManifest.from_text('[model]\nfhat = "u"\n')
