"""Template prompt corpora.

Prompts follow the fixed four-slot template subject/verb/preposition/object,
rendered as bare words joined by single spaces. The shipped default word
lists (9 subjects, 21 verbs, 8 prepositions, 21 objects) enumerate to
31,752 prompts; filtering on one subject leaves 3,528.

All corpora are deterministic: enumeration is lexicographic over slot
indices and evaluation sampling is driven entirely by an explicit seed, so
a corpus file regenerates byte-for-byte and line i of the file stays in
lockstep with row i of any embedding matrix encoded from it.
"""

from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterator, Mapping, Sequence

import numpy as np

from .errors import ConfigError


class TemplateSlot(Enum):
    """The four template slots, in rendering order."""

    SUBJECT = "subject"
    VERB = "verb"
    PREPOSITION = "preposition"
    OBJECT = "object"


SLOT_ORDER = (
    TemplateSlot.SUBJECT,
    TemplateSlot.VERB,
    TemplateSlot.PREPOSITION,
    TemplateSlot.OBJECT,
)


@dataclass(frozen=True)
class ConceptSpec:
    """A concept: one word pinned in one template slot."""

    slot: TemplateSlot
    word: str


@dataclass(frozen=True)
class WordList:
    """Ordered vocabulary per template slot; no duplicates within a slot."""

    words: Mapping[TemplateSlot, tuple[str, ...]]

    def __post_init__(self):
        missing = [s.value for s in SLOT_ORDER if s not in self.words]
        if missing:
            raise ConfigError(f"word list missing slots: {missing}")
        for slot in SLOT_ORDER:
            entries = self.words[slot]
            if len(set(entries)) != len(entries):
                raise ConfigError(f"duplicate words in slot {slot.value!r}")

    def __getitem__(self, slot: TemplateSlot) -> tuple[str, ...]:
        return self.words[slot]

    def size(self, slot: TemplateSlot) -> int:
        return len(self.words[slot])

    @classmethod
    def from_dict(cls, doc: Mapping[str, Sequence[str]]) -> "WordList":
        unknown = set(doc) - {s.value for s in SLOT_ORDER}
        if unknown:
            raise ConfigError(f"unknown word-list keys: {sorted(unknown)}")
        words = {
            slot: tuple(str(w) for w in doc.get(slot.value, ()))
            for slot in SLOT_ORDER
        }
        return cls(words)

    @classmethod
    def from_file(cls, path: str | Path) -> "WordList":
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot load word list {path}: {exc}") from exc
        return cls.from_dict(doc)

    @classmethod
    def default(cls) -> "WordList":
        text = resources.files("editioner.data").joinpath("wordlists.json").read_text("utf-8")
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class PromptRecord:
    """One rendered prompt with per-slot provenance.

    ``index`` is the prompt's position in the canonical enumeration of the
    full corpus (lexicographic over slot indices) and is preserved by
    filtering and sampling.
    """

    text: str
    slots: Mapping[TemplateSlot, str]
    index: int

    @staticmethod
    def render(slots: Mapping[TemplateSlot, str]) -> str:
        return " ".join(slots[s] for s in SLOT_ORDER)


@dataclass
class PromptCorpus:
    """An ordered list of prompt records plus the vocabulary they came from."""

    records: list[PromptRecord]
    word_list: WordList

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[PromptRecord]:
        return iter(self.records)

    def lines(self) -> list[str]:
        return [r.text for r in self.records]

    def write_text(self, path: str | Path) -> None:
        """One prompt per line, UTF-8, LF endings."""
        Path(path).write_bytes(("\n".join(self.lines()) + "\n").encode("utf-8"))

    def content_hash(self) -> str:
        payload = ("\n".join(self.lines()) + "\n").encode("utf-8")
        return hashlib.sha256(payload).hexdigest()


def generate_all(words: WordList) -> PromptCorpus:
    """Enumerate every slot combination in canonical order.

    The corpus size is the product of the four slot sizes; with the default
    vocabulary that is 9*21*8*21 = 31,752 prompts.
    """
    for slot in SLOT_ORDER:
        if words.size(slot) == 0:
            raise ConfigError(f"slot {slot.value!r} has no words")
    records = []
    combos = itertools.product(*(words[s] for s in SLOT_ORDER))
    for index, combo in enumerate(combos):
        slots = dict(zip(SLOT_ORDER, combo))
        records.append(PromptRecord(PromptRecord.render(slots), slots, index))
    return PromptCorpus(records, words)


def _require_known_word(words: WordList, concept: ConceptSpec) -> None:
    if concept.word not in words[concept.slot]:
        raise ConfigError(
            f"word {concept.word!r} not in slot {concept.slot.value!r} word list"
        )


def filter_concept(corpus: PromptCorpus, concept: ConceptSpec) -> PromptCorpus:
    """Keep exactly the prompts whose concept slot carries the concept word."""
    _require_known_word(corpus.word_list, concept)
    kept = [r for r in corpus.records if r.slots[concept.slot] == concept.word]
    return PromptCorpus(kept, corpus.word_list)


def evaluation_set(
    corpus: PromptCorpus,
    concept: ConceptSpec,
    per_category: int,
    seed: int,
) -> PromptCorpus:
    """Sample the complement of a concept dataset, per complement category.

    For each other word in the concept's slot (in word-list order), draws
    ``per_category`` prompts uniformly without replacement with a seeded
    generator; within each category the draw is emitted in corpus order.
    No sampled prompt carries the concept word in the concept slot.
    """
    _require_known_word(corpus.word_list, concept)
    if per_category < 1:
        raise ConfigError("per_category must be >= 1")
    rng = np.random.default_rng(seed)
    sampled: list[PromptRecord] = []
    for word in corpus.word_list[concept.slot]:
        if word == concept.word:
            continue
        category = [r for r in corpus.records if r.slots[concept.slot] == word]
        if per_category > len(category):
            raise ConfigError(
                f"per_category={per_category} exceeds category {word!r} "
                f"size {len(category)}"
            )
        picks = rng.choice(len(category), size=per_category, replace=False)
        sampled.extend(category[i] for i in sorted(picks.tolist()))
    return PromptCorpus(sampled, corpus.word_list)


def replaced_prompt(record: PromptRecord, concept: ConceptSpec) -> PromptRecord:
    """Swap the concept slot's word in, leaving every other slot unchanged.

    This is the ground-truth counterpart of a prompt under a given edition
    (e.g. "dog sleeping on grass" becomes "cat sleeping on grass" for the
    cat edition). The record keeps its source index.
    """
    slots = {s: record.slots[s] for s in SLOT_ORDER}
    slots[concept.slot] = concept.word
    return PromptRecord(PromptRecord.render(slots), slots, record.index)


def parse_concept(spec: str, words: WordList | None = None) -> ConceptSpec:
    """Parse 'slot=word' (e.g. 'subject=cat'); validates against a word list if given."""
    if "=" not in spec:
        raise ConfigError(f"concept must look like slot=word, got {spec!r}")
    slot_name, _, word = spec.partition("=")
    try:
        slot = TemplateSlot(slot_name.strip())
    except ValueError as exc:
        valid = [s.value for s in SLOT_ORDER]
        raise ConfigError(f"unknown slot {slot_name!r}; expected one of {valid}") from exc
    concept = ConceptSpec(slot, word.strip())
    if words is not None:
        _require_known_word(words, concept)
    return concept
