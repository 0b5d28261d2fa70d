import csv
import io

import pytest

from sierra.cli import main
from sierra.store import Store

from conftest import FIXTURES, MASTER_KEY, MASTER_KEY_HEX


@pytest.fixture(autouse=True)
def master_key_env(monkeypatch):
    monkeypatch.setenv("SIERRA_MASTER_KEY", MASTER_KEY_HEX)


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_help_exits_zero(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--help"])
    assert exc.value.code == 0
    assert "usage" in capsys.readouterr().out.lower()


def test_unknown_subcommand_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_quest_validate_fixture(capsys):
    code, out, err = run(capsys, "quest", "validate", str(FIXTURES / "oxford.quest"))
    assert code == 0
    assert "oxford_happiness" in out
    assert "29 items" in out


def test_quest_validate_bad_file(tmp_path, capsys):
    bad = tmp_path / "bad.quest"
    bad.write_text(
        'questionnaire "dup" version 1\nscale s likert 1..6\nitem q1 "a"\nitem q1 "b"\n'
    )
    code, out, err = run(capsys, "quest", "validate", str(bad))
    assert code == 1
    assert f"{bad}:4" in err
    assert "duplicate item id" in err


def test_quest_validate_missing_file(tmp_path, capsys):
    code, _, err = run(capsys, "quest", "validate", str(tmp_path / "nope.quest"))
    assert code == 1
    assert err


def test_quest_load_persists(tmp_path, capsys):
    data_dir = tmp_path / "data"
    code, out, _ = run(
        capsys, "quest", "load", str(FIXTURES / "oxford.quest"), "--data-dir", str(data_dir)
    )
    assert code == 0
    store = Store(data_dir, master_key=MASTER_KEY)
    assert store.get_questionnaire("oxford_happiness").version == 1


def test_useradd(tmp_path, capsys):
    data_dir = str(tmp_path / "data")
    code, out, _ = run(
        capsys, "useradd", "clin1", "--role", "expert", "--password", "a strong password",
        "--data-dir", data_dir,
    )
    assert code == 0
    assert "clin1" in out
    code, _, err = run(
        capsys, "useradd", "clin1", "--role", "expert", "--password", "another password!",
        "--data-dir", data_dir,
    )
    assert code == 1

    code, _, err = run(
        capsys, "useradd", "weakling", "--role", "expert", "--password", "short",
        "--data-dir", data_dir,
    )
    assert code == 1
    assert "10 characters" in err


def test_ingest_export_round_trip(tmp_path, capsys):
    data_dir = str(tmp_path / "data")
    fixture = FIXTURES / "knee_exercise.csv"
    code, out, err = run(
        capsys, "ingest", "--file", str(fixture), "--subject", "s1", "--device", "dev1",
        "--data-dir", data_dir,
    )
    assert code == 0, err
    rows = [r for r in csv.reader(fixture.read_text().splitlines()[1:])]
    expected = sorted(
        (int(t), float(v)) for ch, t, v in rows if ch == "knee_flex"
    )
    code, out, err = run(
        capsys, "export", "--subject", "s1", "--channel", "knee_flex",
        "--t0", "0", "--t1", str(2**52), "--data-dir", data_dir,
    )
    assert code == 0
    got_rows = list(csv.reader(io.StringIO(out)))
    assert got_rows[0] == ["channel", "t_ms", "value"]
    got = [(int(t), float(v)) for ch, t, v in got_rows[1:]]
    assert got == expected


def test_ingest_replay_is_noop(tmp_path, capsys):
    data_dir = str(tmp_path / "data")
    fixture = str(FIXTURES / "knee_exercise.csv")
    run(capsys, "ingest", "--file", fixture, "--subject", "s1", "--device", "dev1", "--data-dir", data_dir)
    code, out, _ = run(
        capsys, "ingest", "--file", fixture, "--subject", "s1", "--device", "dev1", "--data-dir", data_dir
    )
    assert code == 0
    assert "accepted 0" in out
    assert "duplicate batches 1" in out


def test_ingest_rejects_bad_rows(tmp_path, capsys):
    data_dir = str(tmp_path / "data")
    bad = tmp_path / "bad.csv"
    bad.write_text("channel,t_ms,value\nknee_flex,1000,1.5\nknee_flex,2000,nan\n")
    code, out, err = run(
        capsys, "ingest", "--file", str(bad), "--subject", "s1", "--device", "d", "--data-dir", data_dir
    )
    assert code == 1
    assert "NonFiniteValue" in err
    assert "accepted 1" in out


def test_ingest_requires_proper_header(tmp_path, capsys):
    data_dir = str(tmp_path / "data")
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b,c\n1,2,3\n")
    code, _, err = run(
        capsys, "ingest", "--file", str(bad), "--subject", "s1", "--device", "d", "--data-dir", data_dir
    )
    assert code == 1
    assert "header" in err


def test_export_unknown_subject(tmp_path, capsys):
    code, _, err = run(
        capsys, "export", "--subject", "ghost", "--channel", "c", "--t0", "0", "--t1", "1",
        "--data-dir", str(tmp_path / "data"),
    )
    assert code == 1


def make_xor_csv(tmp_path):
    path = tmp_path / "xor.csv"
    path.write_text("x0,x1,label\n0,0,0\n0,1,1\n1,0,1\n1,1,0\n")
    return str(path)


def test_train_deterministic_final_loss_line(tmp_path, capsys):
    dataset = make_xor_csv(tmp_path)
    args = ["train", "--dataset", dataset, "--layers", "2,8,2", "--epochs", "200",
            "--lr", "0.1", "--seed", "7", "--batch-size", "4"]
    code1, out1, _ = run(capsys, *args)
    code2, out2, _ = run(capsys, *args)
    assert code1 == code2 == 0
    line1 = [l for l in out1.splitlines() if l.startswith("final_loss=")]
    line2 = [l for l in out2.splitlines() if l.startswith("final_loss=")]
    assert line1 == line2
    assert line1


def test_train_layer_mismatch_fails_validation(tmp_path, capsys):
    dataset = make_xor_csv(tmp_path)
    code, _, err = run(capsys, "train", "--dataset", dataset, "--layers", "3,8,2")
    assert code == 1
    assert "features" in err


def test_train_bad_layers_is_usage_error(tmp_path, capsys):
    dataset = make_xor_csv(tmp_path)
    code, _, err = run(capsys, "train", "--dataset", dataset, "--layers", "a,b")
    assert code == 2
