"""Keyframe-conditional assembly, clip chaining, and the cost model."""

from fractions import Fraction

import numpy as np
import pytest

from vividforge.core import FrameSequence, MaskSequence
from vividforge.errors import (
    LengthMismatchError,
    NonPositiveAttemptsError,
    ResolutionMismatchError,
)
from vividforge.kive import (
    CostModel,
    assemble_kive_conditional,
    chain_long_video,
    editing_cost,
)


def clip(rng, n=3, h=16, w=16) -> FrameSequence:
    return FrameSequence(
        rng.integers(0, 256, (n, h, w, 3)).astype(np.uint8), Fraction(30), "clip"
    )


def masks_for(seq: FrameSequence, full=False) -> MaskSequence:
    masks = np.zeros((len(seq), seq.height, seq.width), np.uint8)
    if full:
        masks[:, 4:10, 4:10] = 255
    return MaskSequence(masks)


class TestAssemble:
    def test_training_mode_uses_source_frame0(self, rng):
        source = clip(rng)
        masks = masks_for(source, full=True)
        conditional = assemble_kive_conditional(source, masks, source.frames[0], "a cat")
        assert np.array_equal(conditional.frames.frames[0], source.frames[0])
        assert not conditional.masks.masks[0].any()
        # later frames satisfy the masked-video identity
        for i in range(1, len(source)):
            expected = np.where(
                masks.masks[i][..., None] == 0, source.frames[i], np.uint8(0)
            )
            assert np.array_equal(conditional.frames.frames[i], expected)

    def test_zero_masks_pass_through(self, rng):
        source = clip(rng)
        masks = masks_for(source, full=False)
        keyframe = rng.integers(0, 256, (16, 16, 3)).astype(np.uint8)
        conditional = assemble_kive_conditional(source, masks, keyframe, "x")
        assert np.array_equal(conditional.frames.frames[0], keyframe)
        assert np.array_equal(conditional.frames.frames[1:], source.frames[1:])

    def test_wrong_keyframe_resolution(self, rng):
        source = clip(rng)
        masks = masks_for(source)
        bad = rng.integers(0, 256, (8, 8, 3)).astype(np.uint8)
        with pytest.raises(ResolutionMismatchError):
            assemble_kive_conditional(source, masks, bad, "x")

    def test_idempotent_in_slot0(self, rng):
        source = clip(rng)
        masks = masks_for(source, full=True)
        keyframe = rng.integers(0, 256, (16, 16, 3)).astype(np.uint8)
        first = assemble_kive_conditional(source, masks, keyframe, "x")
        again = assemble_kive_conditional(source, masks, keyframe, "x")
        assert np.array_equal(first.frames.frames, again.frames.frames)
        assert np.array_equal(first.masks.masks, again.masks.masks)


class TestChain:
    def test_145_frames(self):
        chain = chain_long_video(145, 49)
        assert chain.boundaries == ((0, 48), (48, 96), (96, 144))
        assert chain.covers(145)

    def test_exactly_one_clip(self):
        assert chain_long_video(49, 49).boundaries == ((0, 48),)

    def test_remainder_clip(self):
        assert chain_long_video(50, 49).boundaries == ((0, 48), (48, 49))

    def test_single_frame(self):
        assert chain_long_video(1, 49).boundaries == ((0, 0),)

    def test_interior_boundaries_shared_exactly(self):
        chain = chain_long_video(200, 49)
        counts = {}
        for start, end in chain.boundaries:
            for frame in range(start, end + 1):
                counts[frame] = counts.get(frame, 0) + 1
        assert all(v >= 1 for v in counts.values())
        interior = [b[0] for b in chain.boundaries[1:]]
        for frame, count in counts.items():
            assert count == (2 if frame in interior else 1)

    def test_zero_frames_rejected(self):
        with pytest.raises(LengthMismatchError):
            chain_long_video(0)


class TestCost:
    def test_paper_constants_n5(self):
        cm = CostModel()
        assert editing_cost(5, "direct", cm) == pytest.approx(85.5, abs=1e-9)
        assert editing_cost(5, "kive", cm) == pytest.approx(24.6, abs=1e-9)

    def test_single_attempt_kive_costs_more(self):
        cm = CostModel()
        assert editing_cost(1, "direct", cm) == pytest.approx(17.1, abs=1e-9)
        assert editing_cost(1, "kive", cm) == pytest.approx(18.6, abs=1e-9)

    def test_breakeven_at_two(self):
        cm = CostModel()
        for n in range(2, 50):
            assert editing_cost(n, "kive", cm) < editing_cost(n, "direct", cm)

    def test_nonpositive_attempts(self):
        with pytest.raises(NonPositiveAttemptsError):
            editing_cost(0, "direct")

    def test_bad_cost_model(self):
        with pytest.raises(ValueError):
            CostModel(c_im=0)
