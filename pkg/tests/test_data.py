import numpy as np
import pytest

from v2c.data import (AnnotationSet, FeatureFile, load_feature_file,
                      parse_annotations, prepare_sample, sample_frames, split,
                      write_feature_file)
from v2c.errors import DataError
from v2c.vocab import build_vocab


def random_feature_file(rng, dim=8, count=5):
    return FeatureFile(
        pad_vector=rng.normal(size=dim).astype(np.float32).astype(np.float64),
        frames=rng.normal(size=(count, dim)).astype(np.float32).astype(np.float64),
    )


class TestFeatureFileIO:
    def test_roundtrip_bit_identical(self, tmp_path):
        ff = random_feature_file(np.random.default_rng(0))
        p1, p2 = tmp_path / "a.v2cf", tmp_path / "b.v2cf"
        write_feature_file(ff, p1)
        loaded = load_feature_file(p1)
        write_feature_file(loaded, p2)
        assert p1.read_bytes() == p2.read_bytes()
        assert loaded.frames.dtype == np.float64

    def test_bad_magic_names_bytes(self, tmp_path):
        path = tmp_path / "bad.v2cf"
        ff = random_feature_file(np.random.default_rng(1))
        write_feature_file(ff, path)
        raw = bytearray(path.read_bytes())
        raw[:4] = b"XXXX"
        path.write_bytes(bytes(raw))
        with pytest.raises(DataError, match="XXXX"):
            load_feature_file(path)

    def test_truncated_payload(self, tmp_path):
        path = tmp_path / "short.v2cf"
        ff = random_feature_file(np.random.default_rng(2))
        write_feature_file(ff, path)
        path.write_bytes(path.read_bytes()[:-3])
        with pytest.raises(DataError, match="expected"):
            load_feature_file(path)

    def test_zero_dim_rejected(self, tmp_path):
        import struct
        path = tmp_path / "dim0.v2cf"
        path.write_bytes(struct.pack("<4sIII", b"V2CF", 1, 0, 0))
        with pytest.raises(DataError, match="feature_dim"):
            load_feature_file(path)

    def test_unsupported_version(self, tmp_path):
        path = tmp_path / "v9.v2cf"
        ff = random_feature_file(np.random.default_rng(3))
        write_feature_file(ff, path)
        raw = bytearray(path.read_bytes())
        raw[4] = 9
        path.write_bytes(bytes(raw))
        with pytest.raises(DataError, match="version"):
            load_feature_file(path)

    def test_non_finite_rejected(self):
        with pytest.raises(DataError):
            FeatureFile(pad_vector=np.array([np.inf]), frames=np.zeros((1, 1)))


class TestSampleFrames:
    def test_even_selection(self):
        frames = np.arange(60, dtype=np.float64)[:, None]
        out, mask = sample_frames(frames, 30, np.zeros(1))
        np.testing.assert_array_equal(out[:, 0], np.arange(0, 60, 2))
        assert mask.all()

    def test_identity_when_exact(self):
        rng = np.random.default_rng(4)
        frames = rng.normal(size=(30, 3))
        out, mask = sample_frames(frames, 30, np.zeros(3))
        np.testing.assert_array_equal(out, frames)
        assert mask.all()

    def test_padding_when_short(self):
        rng = np.random.default_rng(5)
        frames = rng.normal(size=(20, 3))
        pad = rng.normal(size=3)
        out, mask = sample_frames(frames, 30, pad)
        np.testing.assert_array_equal(out[:20], frames)
        np.testing.assert_array_equal(out[20:], np.tile(pad, (10, 1)))
        assert list(mask) == [True] * 20 + [False] * 10

    def test_idempotent(self):
        rng = np.random.default_rng(6)
        frames = rng.normal(size=(45, 2))
        out1, _ = sample_frames(frames, 30, np.zeros(2))
        out2, _ = sample_frames(out1, 30, np.zeros(2))
        np.testing.assert_array_equal(out1, out2)

    def test_empty_rejected(self):
        with pytest.raises(DataError):
            sample_frames(np.zeros((0, 3)), 30, np.zeros(3))


class TestParseAnnotations:
    def test_basic_parse(self):
        a = parse_annotations("v001\trighthand grasp bottle\n")
        assert len(a) == 1
        assert a.records[0].video_id == "v001"
        assert a.records[0].command == ("righthand", "grasp", "bottle")

    def test_comments_and_blanks_skipped(self):
        text = "# header\n\nv001\tgo left\n   \n# mid\nv002\tgo right\n"
        assert len(parse_annotations(text)) == 2

    def test_lowercases_tokens(self):
        a = parse_annotations("v001\tRighthand Grasp BOTTLE\n")
        assert a.records[0].command == ("righthand", "grasp", "bottle")

    def test_duplicate_id_cites_line(self):
        text = "v001\tgo left\nv001\tgo right\n"
        with pytest.raises(DataError, match="line 2"):
            parse_annotations(text)

    def test_missing_tab_cites_line(self):
        with pytest.raises(DataError, match="line 1"):
            parse_annotations("v001 go left\n")

    def test_empty_command_rejected(self):
        with pytest.raises(DataError, match="empty command"):
            parse_annotations("v001\t   \n")

    def test_double_space_rejected(self):
        with pytest.raises(DataError, match="line 1"):
            parse_annotations("v001\tgo  left\n")


def _annotations(n):
    return parse_annotations("".join(f"v{i:03d}\tgo w{i:03d}\n" for i in range(n)))


class TestSplit:
    def test_seventy_thirty(self):
        train, test = split(_annotations(10), 0.7, seed=1)
        assert len(train) == 7 and len(test) == 3
        t1, s1 = split(_annotations(10), 0.7, seed=1)
        assert t1.video_ids() == train.video_ids()

    def test_partition(self):
        ann = _annotations(23)
        train, test = split(ann, 0.7, seed=2)
        all_ids = set(ann.video_ids())
        assert set(train.video_ids()) | set(test.video_ids()) == all_ids
        assert set(train.video_ids()) & set(test.video_ids()) == set()

    def test_input_order_irrelevant(self):
        ann = _annotations(12)
        rng = np.random.default_rng(3)
        train1, test1 = split(ann, 0.5, seed=9)
        for _ in range(5):
            perm = [ann.records[i] for i in rng.permutation(len(ann))]
            train2, test2 = split(AnnotationSet(tuple(perm)), 0.5, seed=9)
            assert set(train2.video_ids()) == set(train1.video_ids())
            assert set(test2.video_ids()) == set(test1.video_ids())

    def test_grouped_split_keeps_groups_whole(self):
        lines = []
        for person in range(4):
            for clip in range(5):
                lines.append(f"p{person:02d}_c{clip}\tgo w{person:02d}{clip}")
        ann = parse_annotations("\n".join(lines))
        train, test = split(ann, 0.5, seed=4, group_key=lambda vid: vid.split("_")[0])
        train_groups = {v.split("_")[0] for v in train.video_ids()}
        test_groups = {v.split("_")[0] for v in test.video_ids()}
        assert train_groups & test_groups == set()

    def test_empty_and_bad_fraction(self):
        with pytest.raises(DataError):
            split(AnnotationSet(()), 0.5, seed=0)
        with pytest.raises(DataError):
            split(_annotations(3), 1.0, seed=0)


class TestPrepareSample:
    def test_shapes(self):
        rng = np.random.default_rng(7)
        ff = random_feature_file(rng, dim=4, count=9)
        vocabulary = build_vocab([("go", "left")])
        s = prepare_sample("v1", ff, ("go", "left"), vocabulary, n=12)
        assert s.features.shape == (12, 4)
        assert s.target.shape == (12,) and s.target_mask.shape == (12,)
        assert int(s.target_mask.sum()) == 3
        assert list(s.frame_mask) == [True] * 9 + [False] * 3
