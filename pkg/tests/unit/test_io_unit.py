import numpy as np
import pytest

from src.datasets.dataset import LabeledDataset
from src.datasets.errors import DatasetError
from src.datasets.generate import gen_pattern_classes
from src.datasets.io import MAGIC, export_csv, load_dataset, save_dataset
from src.numerics.rng import Rng


@pytest.fixture
def images():
    return gen_pattern_classes(3, (1, 8, 8), 5, 0.1, Rng(0), dataset_seed=0, split="test")


@pytest.mark.unit
class TestDatasetFilesUnit:

    def test_round_trip(self, tmp_path, images):
        path = str(tmp_path / "test.bin")
        save_dataset(images, path)
        loaded = load_dataset(path)
        assert np.array_equal(loaded.samples, images.samples)
        assert np.array_equal(loaded.y_c, images.y_c)
        assert np.array_equal(loaded.y_s, images.y_s)
        assert loaded.channel_shape == (1, 8, 8)
        assert loaded.num_classes == 3
        assert loaded.split == "test"
        assert loaded.provenance == images.provenance

    def test_split_override(self, tmp_path, images):
        path = str(tmp_path / "data.bin")
        save_dataset(images, path)
        assert load_dataset(path, split="train").split == "train"

    def test_plain_features(self, tmp_path):
        ds = LabeledDataset(samples=[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]], y_c=[0, 1], y_s=[1, -1])
        path = str(tmp_path / "plain.bin")
        save_dataset(ds, path)
        loaded = load_dataset(path)
        assert loaded.channel_shape is None
        assert loaded.samples.tolist() == [[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]
        assert loaded.y_s.tolist() == [1, -1]

    def test_header_layout(self, tmp_path, images):
        path = tmp_path / "data.bin"
        save_dataset(images, str(path))
        blob = path.read_bytes()
        assert blob.startswith(MAGIC)
        assert len(blob) == 8 + 20 + 15 * 64 * 8 + 15 * 4 + 15
        assert (tmp_path / "data.bin.meta.json").exists()

    def test_corrupt_files(self, tmp_path, images):
        path = tmp_path / "data.bin"
        save_dataset(images, str(path))
        blob = path.read_bytes()
        path.write_bytes(blob[:-1])
        with pytest.raises(DatasetError, match="truncated"):
            load_dataset(str(path))
        path.write_bytes(b"XXXXXXXX" + blob[8:])
        with pytest.raises(DatasetError, match="bad magic"):
            load_dataset(str(path))

    @pytest.mark.parametrize("keep", [len(MAGIC), len(MAGIC) + 7])
    def test_header_cut_short(self, tmp_path, images, keep):
        path = tmp_path / "data.bin"
        save_dataset(images, str(path))
        path.write_bytes(path.read_bytes()[:keep])
        with pytest.raises(DatasetError, match="truncated"):
            load_dataset(str(path))

    def test_csv_export(self, tmp_path):
        ds = LabeledDataset(samples=[[0.5, 0.25], [1.0, 0.0]], y_c=[2, 0], y_s=[1, -1], num_classes=3)
        path = tmp_path / "data.csv"
        export_csv(ds, str(path))
        lines = path.read_text().splitlines()
        assert lines[0] == "x0,x1,y_c,y_s"
        assert lines[1] == "0.5,0.25,2,1"
        assert lines[2] == "1.0,0.0,0,-1"
