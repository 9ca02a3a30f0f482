"""Walk through the prompt corpora: full enumeration, concept filters,
and seeded evaluation sampling.

Run:  python demos/01_prompt_corpora.py
"""

from editioner import (
    ConceptSpec,
    TemplateSlot,
    WordList,
    evaluation_set,
    filter_concept,
    generate_all,
    replaced_prompt,
)

# The template has four slots: subject, verb, preposition, object.
# The shipped vocabulary has 9 / 21 / 8 / 21 words per slot.
words = WordList.default()
for slot in TemplateSlot:
    print(f"{slot.value:>12}: {words.size(slot):2d} words, e.g. {words[slot][:4]}")

# Enumerating every combination gives the base corpus.
corpus = generate_all(words)
print(f"\nfull corpus: {len(corpus)} prompts  (= 9 * 21 * 8 * 21)")
print("first three:", corpus.lines()[:3])

# A concept dataset keeps only the prompts carrying one word in one slot.
cat = ConceptSpec(TemplateSlot.SUBJECT, "cat")
cat_corpus = filter_concept(corpus, cat)
print(f"\ncat concept dataset: {len(cat_corpus)} prompts (= 21 * 8 * 21)")

# The concept slot is a parameter, not hard-coded: verbs and objects work too.
racing = filter_concept(corpus, ConceptSpec(TemplateSlot.VERB, "racing"))
print(f"racing concept dataset: {len(racing)} prompts (= 9 * 8 * 21)")

# Evaluation sets sample the complement: for the cat edition, 1,000 prompts
# from each of the 8 other subjects. Everything flows from one seed.
eval_set = evaluation_set(corpus, cat, per_category=1000, seed=7)
print(f"\nevaluation set for the cat edition: {len(eval_set)} prompts")
counts = {}
for record in eval_set:
    counts[record.slots[TemplateSlot.SUBJECT]] = counts.get(record.slots[TemplateSlot.SUBJECT], 0) + 1
print("per complement subject:", counts)

# The ground-truth counterpart of an evaluation prompt swaps the concept in.
sample = eval_set.records[0]
print(f"\nevaluation prompt : {sample.text!r}")
print(f"replaced prompt   : {replaced_prompt(sample, cat).text!r}")

# Same seed, same bytes: corpora regenerate exactly.
again = evaluation_set(corpus, cat, per_category=1000, seed=7)
assert again.lines() == eval_set.lines()
print("\nre-sampling with seed 7 reproduces the set exactly:", True)
