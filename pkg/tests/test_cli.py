import subprocess
import sys

import pytest

from memlogic.cli import main


def cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_help_lists_subcommands(capsys):
    with pytest.raises(SystemExit) as e:
        main(["--help"])
    assert e.value.code == 0
    out = capsys.readouterr().out
    for name in ("validate", "run", "compile", "truth-table", "fault-sweep", "fabric-run"):
        assert name in out


def test_entry_point_installed():
    r = subprocess.run([sys.executable, "-m", "memlogic.cli", "validate", "--help"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "usage:" in r.stdout


def test_validate(capsys, corpus):
    assert cli(capsys, "validate", str(corpus / "nested.psys"))[0] == 0
    assert cli(capsys, "validate", str(corpus / "xor.net"))[0] == 0
    code, _, err = cli(capsys, "validate", str(corpus / "bad_label.psys"))
    assert code == 1
    assert err.startswith(f"{corpus / 'bad_label.psys'}:2:")
    code, _, err = cli(capsys, "validate", str(corpus / "loop.net"))
    assert code == 1 and err.startswith(f"{corpus / 'loop.net'}:2:1: combinational loop")


def test_validate_missing_file(capsys, tmp_path):
    code, _, err = cli(capsys, "validate", str(tmp_path / "nope.psys"))
    assert code == 1 and "nope.psys" in err


def test_run_trace(capsys, corpus):
    code, out, err = cli(capsys, "run", str(corpus / "nested.psys"), "--seed", "3")
    assert code == 0 and "halted at attempt" in err
    lines = out.splitlines()
    assert lines[0] == f"# seed=3 command=run {corpus / 'nested.psys'} --seed 3"
    assert lines[1].startswith("attempt,")
    assert lines[-1].split(",")[0] != "0"


def test_run_disturbance_and_bad_argument(capsys, corpus, tmp_path):
    trace = tmp_path / "t.csv"
    code, _, _ = cli(capsys, "run", str(corpus / "holder.psys"), "--max-attempts", "50",
                     "--disturb", "10:1:+a^5", "--trace", str(trace))
    assert code == 0 and trace.exists()
    code, _, err = cli(capsys, "run", str(corpus / "holder.psys"), "--disturb", "x")
    assert code == 1 and "--disturb" in err


def test_run_require_halt(capsys, corpus):
    code, _, _ = cli(capsys, "run", str(corpus / "holder.psys"), "--max-attempts", "20",
                     "--require-halt")
    assert code == 3


def test_run_compiled_with_inputs(capsys, corpus, tmp_path):
    psys = tmp_path / "nand.psys"
    assert cli(capsys, "compile", str(corpus / "nand.net"), "-o", str(psys))[0] == 0
    emitted = tmp_path / "e.csv"
    code, _, _ = cli(capsys, "run", str(psys), "--input", "a=1", "--input", "b=1",
                     "--emitted", str(emitted))
    assert code == 0
    assert emitted.read_text().splitlines()[-1].endswith(",z_0")
    code, _, err = cli(capsys, "run", str(psys), "--input", "q=1")
    assert code == 1 and "q" in err


def test_compile_backends(capsys, corpus):
    code, out, _ = cli(capsys, "compile", str(corpus / "tree3.net"), "--backend", "tree")
    assert code == 0 and "structure" in out
    code, _, err = cli(capsys, "compile", str(corpus / "xor.net"), "--backend", "tree")
    assert code == 1 and "fan" in err.lower()
    code, out, _ = cli(capsys, "compile", str(corpus / "nand.net"), "--redundancy", "3,5",
                       "--factor", "100")
    assert code == 0
    code, _, err = cli(capsys, "compile", str(corpus / "nand.net"), "--redundancy", "3,5",
                       "--token")
    assert code == 1
    code, _, err = cli(capsys, "compile", str(corpus / "nand.net"), "--redundancy", "5,3")
    assert code == 1 and "exceed" in err


def test_truth_table_exit_codes(capsys, corpus):
    code, out, _ = cli(capsys, "truth-table", str(corpus / "tree3.net"), "--backend", "tree",
                       "--seeds", "5")
    assert code == 0
    assert out.splitlines()[1] == "assignment,expected,observed,pass,attempts"
    code, _, err = cli(capsys, "truth-table", str(corpus / "xor.net"), "--seeds", "2",
                       "--budget", "10")
    assert code == 3 and "timed out" in err


def test_fault_sweep(capsys):
    code, out, _ = cli(capsys, "fault-sweep", "--gate", "not", "--h", "1,2", "--loss", "0",
                       "--seeds", "3", "--factor", "1000")
    assert code == 0
    lines = out.splitlines()
    assert lines[1] == "h,loss_rate,seed,correct,attempts_to_output"
    assert len(lines) == 2 + 6
    assert all(line.split(",")[3] == "1" for line in lines[2:])


def test_fabric_run(capsys):
    code, out, _ = cli(capsys, "fabric-run", "--topology", "cycle:4", "--seeds", "2")
    assert code == 0
    lines = out.splitlines()
    assert lines[1] == "nodes,edges,p_move,failures,correct,attempts_to_output"
    assert len(lines) == 2 + 8
    code, _, err = cli(capsys, "fabric-run", "--topology", "ring:4")
    assert code == 1 and "topology" in err
    code, _, _ = cli(capsys, "fabric-run", "--inputs", "1")
    assert code == 1


def test_repeat_invocations_identical(capsys, corpus, tmp_path):
    argv = ["truth-table", str(corpus / "nand.net"), "--seeds", "3"]
    assert cli(capsys, *argv)[1] == cli(capsys, *argv)[1]
