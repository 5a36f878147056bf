import importlib.util
import shutil
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def load_validate():
    spec = importlib.util.spec_from_file_location("validate", ROOT / "tools" / "validate.py")
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


def test_repository_passes(capsys):
    assert load_validate().main(ROOT) == 0
    assert "[OK]" in capsys.readouterr().out


def test_missing_files_fail(tmp_path, capsys):
    shutil.copy(ROOT / "experiment.sample.json", tmp_path / "experiment.sample.json")
    assert load_validate().main(tmp_path) == 1
    out = capsys.readouterr().out
    assert "[FAIL]" in out
    assert "README.md" in out


def test_broken_local_experiment_fails(tmp_path, capsys):
    for name in ("README.md", "DESIGN.md", "requirements.txt", "pytest.ini",
                 "experiment.sample.json"):
        shutil.copy(ROOT / name, tmp_path / name)
    (tmp_path / "tools" / "swarm_sacrifice").mkdir(parents=True)
    (tmp_path / "tools" / "swarm_sacrifice" / "main.py").write_text("")
    (tmp_path / "tests").mkdir()
    (tmp_path / "experiment.local.json").write_text('{"layer": "quantum"}')
    assert load_validate().main(tmp_path) == 1
    assert "experiment.local.json does not load" in capsys.readouterr().out
