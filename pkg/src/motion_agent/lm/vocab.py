"""Word-level vocabulary with a motion-token extension block.

Base ids are assigned once at pre-training and never change; the K motion tokens
plus the two span markers occupy the contiguous range [B, B+K+2).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..data.synth import normalize_caption
from ..errors import ValidationError, VocabularyError

PAD, BOS, EOS, UNK = "<pad>", "<bos>", "<eos>", "<unk>"
CONTROL = (PAD, BOS, EOS, UNK)


@dataclass(frozen=True)
class Vocabulary:
    base_tokens: tuple[str, ...]
    motion_count: int = 0          # K; 0 before extension

    _index: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if tuple(self.base_tokens[:4]) != CONTROL:
            raise ValidationError("base vocabulary must start with the control tokens")
        if len(set(self.base_tokens)) != len(self.base_tokens):
            raise ValidationError("duplicate base tokens")
        object.__setattr__(self, "_index", {w: i for i, w in enumerate(self.base_tokens)})

    @property
    def base_size(self) -> int:
        return len(self.base_tokens)

    @property
    def size(self) -> int:
        return self.base_size + (self.motion_count + 2 if self.motion_count else 0)

    @property
    def pad_id(self) -> int:
        return 0

    @property
    def bos_id(self) -> int:
        return 1

    @property
    def eos_id(self) -> int:
        return 2

    @property
    def unk_id(self) -> int:
        return 3

    @property
    def motion_open_id(self) -> int:
        self._require_extended()
        return self.base_size + self.motion_count

    @property
    def motion_close_id(self) -> int:
        return self.motion_open_id + 1

    def _require_extended(self):
        if not self.motion_count:
            raise VocabularyError("vocabulary has no motion extension")

    def motion_token_id(self, code: int) -> int:
        self._require_extended()
        if not (0 <= code < self.motion_count):
            raise VocabularyError(f"motion code {code} outside [0, {self.motion_count})")
        return self.base_size + code

    def motion_code(self, token_id: int) -> int:
        """Inverse of motion_token_id; raises for ids outside the motion block."""
        self._require_extended()
        code = token_id - self.base_size
        if not (0 <= code < self.motion_count):
            raise VocabularyError(f"token id {token_id} is not a motion token")
        return code

    def is_motion_token(self, token_id: int) -> bool:
        return bool(self.motion_count) and self.base_size <= token_id < self.base_size + self.motion_count

    def encode_word(self, word: str) -> int:
        return self._index.get(word, self.unk_id)

    def encode_text(self, text: str) -> list[int]:
        return [self.encode_word(w) for w in normalize_caption(text)]

    def decode(self, ids: list[int]) -> list[str]:
        out = []
        for i in ids:
            if i < self.base_size:
                out.append(self.base_tokens[i])
            elif self.is_motion_token(i):
                out.append(f"<Motion_{i - self.base_size}>")
            elif self.motion_count and i == self.motion_open_id:
                out.append("<Motion>")
            elif self.motion_count and i == self.motion_close_id:
                out.append("</Motion>")
            else:
                raise VocabularyError(f"token id {i} outside vocabulary of size {self.size}")
        return out

    def extend(self, motion_count: int) -> "Vocabulary":
        if self.motion_count:
            raise VocabularyError("vocabulary already extended")
        return Vocabulary(self.base_tokens, motion_count)


def build_base_vocabulary(texts: list[str]) -> Vocabulary:
    """Deterministic word-level vocabulary: control tokens then sorted unique words."""
    words = set()
    for text in texts:
        words.update(normalize_caption(text))
    return Vocabulary(CONTROL + tuple(sorted(words)))
