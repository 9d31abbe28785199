"""Builds the tiny demo vocabulary from the fixture corpus.

Words seen at least twice are whole entries; everything else falls back to
suffix pieces and single characters, so non-ASCII text is the only source of
[UNK]. Run from the repository root; the output is committed.
"""
import collections
import json
import pathlib
import re
import string

FIXTURES = pathlib.Path("tests/fixtures")
FIELDS = ["text", "document", "reference", "context", "question", "problem"]
SUFFIXES = ["s", "es", "ed", "ing", "ly", "er", "est", "ion", "ment", "ful", "ness"]

counts = collections.Counter()
for name in ["cls.jsonl", "sum.jsonl", "qa.jsonl", "rsn.jsonl"]:
    for line in (FIXTURES / name).read_text().splitlines():
        rec = json.loads(line)
        parts = [rec.get(f, "") for f in FIELDS] + rec.get("choices", [])
        for w in re.findall(r"[a-z]+", " ".join(parts).lower()):
            counts[w] += 1

entries = ["[PAD]", "[UNK]", "[CLS]", "[SEP]"]
entries += list(string.ascii_lowercase) + list(string.digits) + list(string.punctuation)
entries += ["##" + c for c in string.ascii_lowercase + string.digits]
entries += ["##" + s for s in SUFFIXES]
entries += sorted(w for w, c in counts.items() if c >= 2 and len(w) > 1)

seen = set()
unique = [e for e in entries if not (e in seen or seen.add(e))]
pathlib.Path("data/tiny/vocab.txt").write_text("#lowercase=true\n" + "\n".join(unique) + "\n")
print(len(unique))
