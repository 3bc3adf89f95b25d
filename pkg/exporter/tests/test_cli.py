"""Console entry point behavior."""

import pytest

from neuroidbench_export.cli import main

import sourcegen

CHANNELS = ("Cz", "Pz")


@pytest.fixture()
def small_cache(tmp_path):
    sourcegen.build_edf_cache(tmp_path, "BrainInvaders2015a", n_subjects=3, n_sessions=1,
                              rate_hz=512.0, seconds=1, channel_names=CHANNELS)
    return tmp_path


def test_export_two_subjects(small_cache, tmp_path, capsys):
    code = main(["--dataset", "BrainInvaders2015a", "--out", str(tmp_path / "out"),
                 "--cache", str(small_cache), "--subjects", "001", "002"])
    out = capsys.readouterr().out
    assert code == 0
    assert "exported 2 subjects, 2 recordings, 20 events" in out
    assert "subset export: 2 of 50" in out


def test_unknown_dataset_is_a_usage_error(capsys):
    with pytest.raises(SystemExit) as excinfo:
        main(["--dataset", "NoSuch", "--out", "x"])
    assert excinfo.value.code == 2
    assert "supported:" in capsys.readouterr().err


def test_missing_cache_exits_nonzero(tmp_path, capsys):
    code = main(["--dataset", "Won2022", "--out", str(tmp_path / "out"),
                 "--cache", str(tmp_path / "empty")])
    assert code == 1
    assert "error: no local cache" in capsys.readouterr().err
