"""Loaders, synthetic world generation, checkpoint persistence, fuzzing."""

import numpy as np
import pytest

from guidedvo.checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from guidedvo.datasets import (
    DataError,
    SequenceSample,
    load_image,
    load_kitti_poses,
    load_kitti_sequence,
    load_tum_trajectory,
    save_image,
    save_kitti_poses,
)
from guidedvo.geometry import SE3, euler_to_rotation, relatives_of, accumulate
from guidedvo.optim import AdamState
from guidedvo.params import ParamSet, make_rng
from guidedvo.synthetic import ConfigError, SyntheticWorldConfig, generate_synthetic
from guidedvo.tensor import Tensor


class TestKittiPoses:
    def test_identity_line(self, tmp_path):
        f = tmp_path / "poses.txt"
        f.write_text("1 0 0 0 0 1 0 0 0 0 1 0\n")
        poses = load_kitti_poses(f)
        assert len(poses) == 1
        np.testing.assert_allclose(poses[0].rotation, np.eye(3))
        np.testing.assert_allclose(poses[0].translation, 0.0)

    def test_eleven_numbers_rejected_with_line(self, tmp_path):
        f = tmp_path / "poses.txt"
        f.write_text("1 0 0 0 0 1 0 0 0 0 1 0\n1 0 0 0 0 1 0 0 0 0 1\n")
        with pytest.raises(DataError, match=r":2"):
            load_kitti_poses(f)

    def test_non_numeric_rejected_with_line(self, tmp_path):
        f = tmp_path / "poses.txt"
        f.write_text("1 0 0 0 0 x 0 0 0 0 1 0\n")
        with pytest.raises(DataError, match=r":1"):
            load_kitti_poses(f)

    def test_write_read_round_trip(self, tmp_path):
        rng = make_rng(5)
        poses = [
            SE3(
                euler_to_rotation(rng.uniform(-1, 1, 3)),
                rng.normal(size=3) * 10,
            )
            for _ in range(20)
        ]
        f = tmp_path / "poses.txt"
        save_kitti_poses(poses, f)
        back = load_kitti_poses(f)
        for a, b in zip(poses, back):
            np.testing.assert_allclose(a.rotation, b.rotation, atol=1e-9)
            np.testing.assert_allclose(a.translation, b.translation, atol=1e-9)

    def test_skewed_rotation_rejected(self, tmp_path):
        f = tmp_path / "poses.txt"
        f.write_text("1 0.5 0 0 0 1 0 0 0 0 1 0\n")
        with pytest.raises(DataError, match="orthonormal"):
            load_kitti_poses(f)

    def test_empty_file_rejected(self, tmp_path):
        f = tmp_path / "poses.txt"
        f.write_text("")
        with pytest.raises(DataError):
            load_kitti_poses(f)


class TestKittiSequence:
    def test_load_sequence_with_resize(self, tmp_path, rng):
        d = tmp_path / "seq"
        d.mkdir()
        for i in range(3):
            save_image(rng.integers(0, 256, size=(32, 32, 3)).astype(np.uint8), d / f"{i:03d}.png")
        save_kitti_poses([SE3.identity()] * 3, d / "poses.txt")
        sample = load_kitti_sequence(d, d / "poses.txt", resize_to=(64, 64))
        assert len(sample) == 3
        assert sample.frames[0].shape == (64, 64, 3)

    def test_count_mismatch_rejected(self, tmp_path, rng):
        d = tmp_path / "seq"
        d.mkdir()
        for i in range(2):
            save_image(rng.integers(0, 256, size=(16, 16, 3)).astype(np.uint8), d / f"{i}.png")
        save_kitti_poses([SE3.identity()] * 3, d / "poses.txt")
        with pytest.raises(DataError, match="2 frames"):
            load_kitti_sequence(d, d / "poses.txt")

    def test_png_round_trip(self, tmp_path, rng):
        frame = rng.integers(0, 256, size=(17, 23, 3)).astype(np.uint8)
        save_image(frame, tmp_path / "f.png")
        np.testing.assert_array_equal(load_image(tmp_path / "f.png"), frame)


class TestTumTrajectory:
    def test_identity_quaternion(self, tmp_path):
        f = tmp_path / "traj.txt"
        f.write_text("# comment line\n0.0 0 0 0 0 0 0 1\n")
        traj = load_tum_trajectory(f)
        assert len(traj) == 1
        np.testing.assert_allclose(traj[0].rotation, np.eye(3))

    def test_quarter_yaw_quaternion(self, tmp_path):
        f = tmp_path / "traj.txt"
        q = np.sin(np.pi / 4), np.cos(np.pi / 4)
        f.write_text(f"0.0 1 2 3 0 0 {q[0]:.17g} {q[1]:.17g}\n")
        traj = load_tum_trajectory(f)
        np.testing.assert_allclose(traj[0].rotation, euler_to_rotation([0, 0, np.pi / 2]), atol=1e-12)
        np.testing.assert_allclose(traj[0].translation, [1, 2, 3])

    def test_comment_only_file_rejected(self, tmp_path):
        f = tmp_path / "traj.txt"
        f.write_text("# nothing\n# here\n")
        with pytest.raises(DataError, match="no trajectory"):
            load_tum_trajectory(f)

    def test_non_unit_quaternion_rejected(self, tmp_path):
        f = tmp_path / "traj.txt"
        f.write_text("0.0 0 0 0 0 0 0 1.5\n")
        with pytest.raises(DataError, match="quaternion"):
            load_tum_trajectory(f)

    def test_slightly_off_quaternion_normalized(self, tmp_path):
        f = tmp_path / "traj.txt"
        f.write_text(f"0.0 0 0 0 0 0 0 {1 + 5e-4}\n")
        traj = load_tum_trajectory(f)
        traj[0].validate(tol=1e-9)

    def test_wrong_field_count_rejected(self, tmp_path):
        f = tmp_path / "traj.txt"
        f.write_text("0.0 0 0 0 0 0 1\n")
        with pytest.raises(DataError, match="8 fields"):
            load_tum_trajectory(f)


class TestFuzzLoaders:
    @pytest.mark.parametrize("loader", [load_kitti_poses, load_tum_trajectory])
    def test_random_bytes_never_crash(self, tmp_path, loader):
        rng = make_rng(2024)
        f = tmp_path / "fuzz.bin"
        for trial in range(40):
            n = int(rng.integers(0, 65536)) if trial < 39 else 1 << 20
            f.write_bytes(rng.bytes(n))
            try:
                loader(f)
            except DataError:
                pass  # the only acceptable failure mode

    @pytest.mark.parametrize("loader", [load_kitti_poses, load_tum_trajectory])
    def test_random_text_never_crashes(self, tmp_path, loader):
        rng = make_rng(77)
        f = tmp_path / "fuzz.txt"
        alphabet = "0123456789.eE+- #\tabcxyz\n"
        for _ in range(40):
            text = "".join(alphabet[i] for i in rng.integers(0, len(alphabet), size=2000))
            f.write_text(text)
            try:
                loader(f)
            except DataError:
                pass

    def test_checkpoint_fuzz_errors_carry_offset(self, tmp_path):
        rng = make_rng(31337)
        f = tmp_path / "fuzz.ckpt"
        for _ in range(40):
            f.write_bytes(rng.bytes(int(rng.integers(0, 4096))))
            try:
                load_checkpoint(f)
            except CheckpointError as exc:
                assert "byte" in str(exc) or "magic" in str(exc)


class TestSynthetic:
    def test_zero_motion_gives_identical_frames(self):
        cfg = SyntheticWorldConfig(
            n_sequences=1, seq_len=4, max_step_yaw=0.0, step_translation=(0.0, 0.0), seed=3
        )
        (sample,) = generate_synthetic(cfg)
        for f in sample.frames[1:]:
            np.testing.assert_array_equal(f, sample.frames[0])
        for rel in relatives_of(sample.poses):
            np.testing.assert_allclose(rel.euler, 0.0, atol=1e-15)
            np.testing.assert_allclose(rel.translation, 0.0, atol=1e-15)

    def test_same_seed_bit_identical(self):
        cfg = SyntheticWorldConfig(n_sequences=2, seed=11)
        a = generate_synthetic(cfg)
        b = generate_synthetic(cfg)
        for sa, sb in zip(a, b):
            for fa, fb in zip(sa.frames, sb.frames):
                np.testing.assert_array_equal(fa, fb)
            for pa, pb in zip(sa.poses, sb.poses):
                np.testing.assert_array_equal(pa.rotation, pb.rotation)
                np.testing.assert_array_equal(pa.translation, pb.translation)

    def test_unit_x_translation_shifts_one_pixel(self):
        # fixed unit step, no yaw: consecutive frames are exact one-pixel
        # shifts of each other in the overlapping interior
        cfg = SyntheticWorldConfig(
            n_sequences=1,
            seq_len=3,
            max_step_yaw=0.0,
            step_translation=(1.0, 1.0),
            start_jitter=0.0,
            seed=9,
        )
        (sample,) = generate_synthetic(cfg)
        prev, curr = sample.frames[0], sample.frames[1]
        np.testing.assert_array_equal(curr[:, :-1, :], prev[:, 1:, :])

    def test_ground_truth_self_consistent(self):
        cfg = SyntheticWorldConfig(n_sequences=3, seed=21)
        for sample in generate_synthetic(cfg):
            rebuilt = accumulate(relatives_of(sample.poses), sample.poses[0])
            for a, b in zip(sample.poses, rebuilt):
                np.testing.assert_allclose(a.rotation, b.rotation, atol=1e-12)
                np.testing.assert_allclose(a.translation, b.translation, atol=1e-12)

    def test_motion_exceeding_texture_rejected(self):
        with pytest.raises(ConfigError):
            SyntheticWorldConfig(texture_size=128, image_size=64, step_translation=(5.0, 10.0), seq_len=10)

    def test_bad_image_size_rejected(self):
        with pytest.raises(ConfigError):
            SyntheticWorldConfig(image_size=60)


class TestCheckpoint:
    def make_params(self, rng, dtype=np.float32):
        params = ParamSet()
        params.add("enc/w", Tensor(rng.normal(size=(3, 2, 2)).astype(dtype)))
        params.add("enc/b", Tensor(rng.normal(size=3).astype(dtype)))
        params.add("frozen/stats", Tensor(rng.normal(size=4).astype(dtype)), trainable=False)
        return params

    def test_round_trip_bit_exact(self, tmp_path, rng):
        params = self.make_params(rng)
        state = AdamState.zeros_like(params)
        state.m["enc/w"] += 0.25
        state.step = 7
        path = tmp_path / "model.ckpt"
        save_checkpoint(params, state, path)
        loaded, loaded_state = load_checkpoint(path)
        assert loaded.names() == params.names()
        for name, tensor in params.items():
            np.testing.assert_array_equal(loaded[name].data, tensor.data)
            assert loaded[name].dtype == tensor.dtype
            assert loaded.is_trainable(name) == params.is_trainable(name)
        assert loaded_state.step == 7
        np.testing.assert_array_equal(loaded_state.m["enc/w"], state.m["enc/w"])
        np.testing.assert_array_equal(loaded_state.v["enc/b"], state.v["enc/b"])

    def test_round_trip_without_state(self, tmp_path, rng):
        params = self.make_params(rng, dtype=np.float64)
        path = tmp_path / "model.ckpt"
        save_checkpoint(params, None, path)
        loaded, state = load_checkpoint(path)
        assert state is None
        np.testing.assert_array_equal(loaded["enc/w"].data, params["enc/w"].data)

    def test_empty_paramset_valid(self, tmp_path):
        path = tmp_path / "empty.ckpt"
        save_checkpoint(ParamSet(), None, path)
        loaded, state = load_checkpoint(path)
        assert len(loaded) == 0 and state is None

    def test_truncated_file_rejected_with_offset(self, tmp_path, rng):
        params = self.make_params(rng)
        path = tmp_path / "model.ckpt"
        save_checkpoint(params, None, path)
        blob = path.read_bytes()
        path.write_bytes(blob[: len(blob) - 5])
        with pytest.raises(CheckpointError, match="byte"):
            load_checkpoint(path)

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "bad.ckpt"
        path.write_bytes(b"NOTMAGIC" + b"\x00" * 16)
        with pytest.raises(CheckpointError, match="magic"):
            load_checkpoint(path)

    def test_no_partial_state_on_error(self, tmp_path, rng):
        params = self.make_params(rng)
        path = tmp_path / "model.ckpt"
        save_checkpoint(params, None, path)
        blob = path.read_bytes()
        path.write_bytes(blob[:20])
        with pytest.raises(CheckpointError):
            load_checkpoint(path)


class TestSequenceSample:
    def test_length_mismatch_rejected(self, rng):
        frames = [rng.integers(0, 256, size=(64, 64, 3)).astype(np.uint8)] * 3
        with pytest.raises(DataError):
            SequenceSample(frames, [SE3.identity()] * 2)

    def test_single_frame_rejected(self, rng):
        frames = [rng.integers(0, 256, size=(64, 64, 3)).astype(np.uint8)]
        with pytest.raises(DataError):
            SequenceSample(frames, [SE3.identity()])
