"""Subcommand plumbing and the exit-code contract."""

import re

import pytest

from dsod.cli import main


def run(argv, capsys):
    try:
        code = main(argv)
    except SystemExit as e:
        code = e.code
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """Dataset plus a 2-iteration checkpoint shared by the read-only tests."""
    root = tmp_path_factory.mktemp("cli")
    assert main(["gen-data", "--n", "8", "--size", "128", "--seed", "2",
                 "--out", str(root / "data")]) == 0
    cfg = root / "run.cfg"
    cfg.write_text(
        "arch = DS/8-16-4-1\nblock_layers = 2,2,2,2\nnum_scales = 4\n"
        "scale_channels = 16\nnum_classes = 4\ninput_size = 128\n"
        "dataset = data\nout_dir = run\ntotal_iters = 20\nbatch_size = 2\n"
        "accum_steps = 1\nbase_lr = 0.01\nseed = 4\n"
    )
    assert main(["train", "--config", str(cfg), "--total-iters", "2"]) == 0
    return root


class TestHelp:
    @pytest.mark.parametrize("cmd", [[], ["describe"], ["gradcheck"], ["gen-data"],
                                     ["train"], ["eval"], ["detect"]])
    def test_help_exits_zero(self, cmd, capsys):
        code, out, _ = run(cmd + ["--help"], capsys)
        assert code == 0
        assert "usage" in out

    def test_unknown_flag_exits_one(self, capsys):
        code, _, err = run(["describe", "--arch", "DS/8-16-4-1", "--frobnicate"], capsys)
        assert code == 1
        assert "error" in err

    def test_no_command_exits_one(self, capsys):
        code, _, _ = run([], capsys)
        assert code == 1


class TestDescribe:
    def test_trace_output(self, capsys):
        code, out, _ = run(["describe", "--arch", "DS/64-192-48-1", "--blocks",
                            "6,8,8,8", "--input", "300", "--pred", "dense",
                            "--classes", "21"], capsys)
        assert code == 0
        lines = out.splitlines()
        assert lines[0] == "name,channels,h,w,params"
        assert lines[-1] == "total_params,15475182"

    def test_wrong_block_count_exits_one(self, capsys):
        code, _, err = run(["describe", "--arch", "DS/64-192-48-1",
                            "--blocks", "6,8"], capsys)
        assert code == 1
        assert "block_layers" in err

    def test_bad_arch_exits_one(self, capsys):
        code, _, _ = run(["describe", "--arch", "banana"], capsys)
        assert code == 1


class TestGradcheckCmd:
    def test_single_op(self, capsys):
        code, out, _ = run(["gradcheck", "--op", "relu", "--seed", "7"], capsys)
        assert code == 0
        assert "relu" in out and "ok" in out

    def test_unknown_op_exits_one(self, capsys):
        code, _, err = run(["gradcheck", "--op", "warp"], capsys)
        assert code == 1
        assert "unknown" in err

    def test_report_deterministic(self, capsys):
        _, out1, _ = run(["gradcheck", "--op", "add", "--seed", "3"], capsys)
        _, out2, _ = run(["gradcheck", "--op", "add", "--seed", "3"], capsys)
        assert out1 == out2


class TestGenData:
    def test_rerun_identical(self, tmp_path, capsys):
        args = ["gen-data", "--n", "3", "--size", "64", "--seed", "9",
                "--out", str(tmp_path / "d")]
        assert run(args, capsys)[0] == 0
        first = {p.name: p.read_bytes() for p in (tmp_path / "d").rglob("*") if p.is_file()}
        assert run(args, capsys)[0] == 0
        second = {p.name: p.read_bytes() for p in (tmp_path / "d").rglob("*") if p.is_file()}
        assert first == second
        assert len(first) == 3 + 2  # images + manifest + annotations

    def test_wrong_class_count_exits_one(self, capsys, tmp_path):
        code, _, err = run(["gen-data", "--n", "2", "--classes", "4",
                            "--out", str(tmp_path / "d")], capsys)
        assert code == 1
        assert "3" in err


class TestTrain:
    def test_flag_overrides_config(self, workspace):
        log = (workspace / "run" / "loss_log.csv").read_text().splitlines()
        # config said 20 iterations; the flag cut it to 2
        assert len(log) == 3
        total = float(log[1].rsplit(",", 1)[1])
        assert total > 0

    def test_missing_config_exits_two(self, capsys):
        code, _, _ = run(["train", "--config", "/nonexistent.cfg"], capsys)
        assert code == 2

    def test_bad_key_exits_one(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("arch = DS/8-16-4-1\ndataset = d\nout_dir = o\nwarp = 9\n")
        code, _, err = run(["train", "--config", str(cfg)], capsys)
        assert code == 1
        assert "warp" in err


class TestEvalCmd:
    def test_csv_shape(self, workspace, capsys):
        code, out, _ = run(["eval", "--ckpt", str(workspace / "run" / "checkpoint.bin"),
                            "--data", str(workspace / "data")], capsys)
        assert code == 0
        lines = out.splitlines()
        assert lines[0] == "class,ap"
        assert [l.split(",")[0] for l in lines[1:]] == ["rectangle", "disc", "triangle", "mAP"]

    def test_out_file_matches_stdout(self, workspace, tmp_path, capsys):
        dest = tmp_path / "eval.csv"
        code, out, _ = run(["eval", "--ckpt", str(workspace / "run" / "checkpoint.bin"),
                            "--data", str(workspace / "data"), "--out", str(dest)], capsys)
        assert code == 0
        assert dest.read_text() == out

    def test_missing_ckpt_exits_two(self, workspace, capsys):
        code, _, _ = run(["eval", "--ckpt", str(workspace / "nope.bin"),
                          "--data", str(workspace / "data")], capsys)
        assert code == 2


class TestDetect:
    def test_output_lines(self, workspace, capsys):
        code, out, _ = run(["detect", "--image", str(workspace / "data" / "images" / "000000.ppm"),
                            "--ckpt", str(workspace / "run" / "checkpoint.bin"),
                            "--conf", "0.05"], capsys)
        assert code == 0
        pat = re.compile(r"^[123] [01]\.\d{4}( [01]\.\d{4}){4}$")
        for line in out.splitlines():
            assert pat.match(line), line

    def test_size_mismatch_exits_one(self, workspace, tmp_path, capsys):
        import numpy as np
        from dsod import data as D
        small = tmp_path / "small.ppm"
        D.write_ppm(small, np.zeros((64, 64, 3), np.uint8))
        code, _, err = run(["detect", "--image", str(small),
                            "--ckpt", str(workspace / "run" / "checkpoint.bin")], capsys)
        assert code == 1
        assert "64" in err

    def test_missing_image_exits_two(self, workspace, capsys):
        code, _, _ = run(["detect", "--image", str(workspace / "nope.ppm"),
                          "--ckpt", str(workspace / "run" / "checkpoint.bin")], capsys)
        assert code == 2
