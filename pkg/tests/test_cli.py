"""End-to-end tests of the ``splatlab`` command line.

"""

import json

import numpy as np
import pytest

from splatlab.cli import main
from splatlab.datasets import read_image
from splatlab.scenegen import OccluderSpecification, SceneSpecification
from splatlab.training import WildGaussianModel


CONFIG = (
    "iterations=2\n"
    "warmup_iters=1\n"
    "triplane_resolution=8\n"
    "triplane_channels=4\n"
    "log_interval=1\n"
)


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """A generated dataset and a briefly trained checkpoint, shared by the module."""
    root = tmp_path_factory.mktemp("cli")
    spec = SceneSpecification(width=16, height=16, views=4, points=150, occluders=OccluderSpecification(fraction=0.5))
    (root / "scene.json").write_text(spec.to_json(), encoding="utf-8")
    (root / "config.txt").write_text(CONFIG, encoding="utf-8")
    assert main(["gen", "--spec", str(root / "scene.json"), "--out", str(root / "data")]) == 0
    assert main([
        "train", "--data", str(root / "data"), "--config", str(root / "config.txt"),
        "--out", str(root / "run"), "--test-views", "3", "--plot", "--dump-masks",
    ]) == 0
    return root


class TestUsage:
    @pytest.mark.parametrize("argv", [
        [],
        ["fly"],
        ["gen"],
        ["transfer", "--ckpt", "m", "--data", "d", "--view", "0", "--ref-a", "0", "--ref-b", "1", "--alpha", "1.5", "--out", "o"],
        ["render", "--ckpt", "m", "--data", "d", "--view", "-1", "--ref", "0", "--out", "o"],
    ])
    def test_bad_arguments_exit_with_one(self, argv, capsys):
        assert main(argv) == 1
        assert "error" in capsys.readouterr().err

    def test_missing_checkpoint_is_a_usage_error(self, workspace, tmp_path):
        argv = [
            "render", "--ckpt", str(tmp_path / "absent.wgs"), "--data", str(workspace / "data"),
            "--view", "0", "--ref", "1", "--out", str(tmp_path / "out.png"),
        ]
        assert main(argv) == 1

    def test_missing_dataset_is_a_usage_error(self, tmp_path):
        argv = ["train", "--data", str(tmp_path / "nowhere"), "--out", str(tmp_path / "run")]
        assert main(argv) == 1

    def test_render_needs_exactly_one_reference(self, workspace, tmp_path):
        argv = [
            "render", "--ckpt", str(workspace / "run" / "model.wgs"), "--data", str(workspace / "data"),
            "--view", "0", "--out", str(tmp_path / "out.png"),
        ]
        assert main(argv) == 1


class TestGenAndTrain:
    def test_dataset_layout(self, workspace):
        data = workspace / "data"
        assert len(list((data / "images").glob("*.png"))) == 4
        assert json.loads((data / "spec.json").read_text(encoding="utf-8"))["views"] == 4

    def test_training_artifacts(self, workspace):
        run = workspace / "run"
        lines = (run / "metrics.tsv").read_text(encoding="utf-8").splitlines()
        assert lines[0].split("\t") == ["iteration", "loss_image", "loss_mask", "loss_depth", "lambda_mask", "psnr"]
        assert [line.split("\t")[0] for line in lines[1:]] == ["0", "1"]
        assert (run / "config.txt").is_file()
        assert (run / "model.wgs").is_file()
        assert (run / "train.log").stat().st_size > 0
        assert (run / "curves.png").stat().st_size > 0
        assert sorted(p.name for p in (run / "masks").iterdir()) == ["000.png", "001.png", "002.png"]

    def test_unknown_variant_is_a_runtime_fault(self, workspace, tmp_path):
        argv = [
            "train", "--data", str(workspace / "data"), "--config", str(workspace / "config.txt"),
            "--variant", "no_such_variant", "--out", str(tmp_path / "run"),
        ]
        assert main(argv) == 2

    def test_zero_iterations(self, workspace, tmp_path):
        config = tmp_path / "config.txt"
        config.write_text("iterations=0\ntriplane_resolution=8\n", encoding="utf-8")
        argv = [
            "train", "--data", str(workspace / "data"), "--config", str(config),
            "--variant", "baseline", "--out", str(tmp_path / "run"),
        ]
        assert main(argv) == 0
        assert len((tmp_path / "run" / "metrics.tsv").read_text(encoding="utf-8").splitlines()) == 1


class TestRenderAndTransfer:
    def _render(self, workspace, out, *reference):
        argv = [
            "render", "--ckpt", str(workspace / "run" / "model.wgs"), "--data", str(workspace / "data"),
            "--view", "3", *reference, "--out", str(out),
        ]
        return main(argv)

    def test_render_writes_an_image(self, workspace, tmp_path):
        assert self._render(workspace, tmp_path / "out.png", "--ref", "1") == 0
        assert read_image(tmp_path / "out.png").shape == (16, 16, 3)

    def test_external_reference_image(self, workspace, tmp_path):
        reference = workspace / "data" / "images" / "001.png"
        assert self._render(workspace, tmp_path / "out.png", "--ref-image", str(reference)) == 0

    def test_reference_view_out_of_range(self, workspace, tmp_path):
        assert self._render(workspace, tmp_path / "out.png", "--ref", "9") == 2

    def test_transfer_at_zero_matches_render(self, workspace, tmp_path):
        assert self._render(workspace, tmp_path / "render.png", "--ref", "0") == 0
        argv = [
            "transfer", "--ckpt", str(workspace / "run" / "model.wgs"), "--data", str(workspace / "data"),
            "--view", "3", "--ref-a", "0", "--ref-b", "2", "--alpha", "0", "--out", str(tmp_path / "blend.png"),
        ]
        assert main(argv) == 0
        assert (tmp_path / "blend.png").read_bytes() == (tmp_path / "render.png").read_bytes()

    def test_alpha_sweep_writes_one_file_per_weight(self, workspace, tmp_path):
        argv = [
            "transfer", "--ckpt", str(workspace / "run" / "model.wgs"), "--data", str(workspace / "data"),
            "--view", "3", "--ref-a", "0", "--ref-b", "2", "--alpha", "0", "--alpha", "0.5",
            "--out", str(tmp_path / "blend.png"),
        ]
        assert main(argv) == 0
        assert sorted(p.name for p in tmp_path.iterdir()) == ["blend_a0.000.png", "blend_a0.500.png"]


class TestEval:
    def test_report_lists_the_test_views(self, workspace, tmp_path):
        argv = [
            "eval", "--ckpt", str(workspace / "run" / "model.wgs"), "--data", str(workspace / "data"),
            "--test-views", "3", "--report", str(tmp_path / "report.tsv"), "--plot", str(tmp_path / "masks.png"),
        ]
        assert main(argv) == 0
        lines = (tmp_path / "report.tsv").read_text(encoding="utf-8").splitlines()
        assert lines[0] == "view\tpsnr\tssim"
        assert [line.split("\t")[0] for line in lines[1:]] == ["003", "mean"]
        assert np.isfinite(float(lines[1].split("\t")[1]))
        assert (tmp_path / "masks.png").stat().st_size > 0

    def test_views_are_rendered_without_the_alpha_floor(self, workspace, tmp_path, monkeypatch):
        requested = []
        original = WildGaussianModel.render

        def recording(self, camera, context, **kwargs):
            requested.append(kwargs.get("exact", False))
            return original(self, camera, context, **kwargs)

        monkeypatch.setattr(WildGaussianModel, "render", recording)
        argv = [
            "eval", "--ckpt", str(workspace / "run" / "model.wgs"), "--data", str(workspace / "data"),
            "--test-views", "3", "--report", str(tmp_path / "report.tsv"),
        ]
        assert main(argv) == 0
        assert requested == [True]

    def test_empty_split_writes_only_the_header(self, workspace, tmp_path):
        argv = [
            "eval", "--ckpt", str(workspace / "run" / "model.wgs"), "--data", str(workspace / "data"),
            "--test-fraction", "0", "--report", str(tmp_path / "report.tsv"),
        ]
        assert main(argv) == 0
        assert (tmp_path / "report.tsv").read_text(encoding="utf-8") == "view\tpsnr\tssim\n"

    def test_corrupt_checkpoint_is_a_runtime_fault(self, workspace, tmp_path):
        broken = tmp_path / "broken.wgs"
        broken.write_bytes((workspace / "run" / "model.wgs").read_bytes()[:100])
        argv = [
            "eval", "--ckpt", str(broken), "--data", str(workspace / "data"),
            "--report", str(tmp_path / "report.tsv"),
        ]
        assert main(argv) == 2


@pytest.mark.slow
def test_longer_run_improves_the_fit(tmp_path):
    spec = SceneSpecification(width=24, height=24, views=8, points=400, occluders=OccluderSpecification(fraction=0.0))
    (tmp_path / "scene.json").write_text(spec.to_json(), encoding="utf-8")
    (tmp_path / "config.txt").write_text(
        "iterations=200\nwarmup_iters=20\ntriplane_resolution=16\nlog_interval=50\n"
        "lr_networks=0.005\nlr_opacity=0.05\n",
        encoding="utf-8",
    )
    assert main(["gen", "--spec", str(tmp_path / "scene.json"), "--out", str(tmp_path / "data")]) == 0
    assert main([
        "train", "--data", str(tmp_path / "data"), "--config", str(tmp_path / "config.txt"),
        "--out", str(tmp_path / "run"),
    ]) == 0
    rows = [line.split("\t") for line in (tmp_path / "run" / "metrics.tsv").read_text(encoding="utf-8").splitlines()[1:]]
    psnr = [float(row[-1]) for row in rows]
    assert psnr[-1] > psnr[0]
