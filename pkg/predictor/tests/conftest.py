"""Session fixtures: one shared small training run over a toy dataset."""
import pytest

from mda_predictor import PredictorConfig, train

from dataset_builders import write_dataset


@pytest.fixture(scope="session")
def toy_config():
    return PredictorConfig(k=2, w=32, h=8, d=16, heads=2, epochs=5,
                           batch_size=16)


@pytest.fixture(scope="session")
def toy_dataset(tmp_path_factory):
    """50 files x 4 offsets = 200 windows once sliced at w=32, h=8."""
    return write_dataset(tmp_path_factory.mktemp("toyset"), n_files=50, seed=3)


@pytest.fixture(scope="session")
def toy_run(toy_dataset, toy_config, tmp_path_factory):
    out_dir = tmp_path_factory.mktemp("toyrun")
    result = train(toy_dataset, toy_config, out_dir, seed=11)
    return {"result": result, "out_dir": out_dir, "config": toy_config,
            "data_dir": toy_dataset, "seed": 11}
