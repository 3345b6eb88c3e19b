#!/usr/bin/env python3
"""Build a synonym TSV (`headword<TAB>syn1, syn2`) from WordNet 3.0 data files.

usage: wordnet_synonyms.py WORDNET_DICT_DIR > synonyms.tsv

WORDNET_DICT_DIR holds data.noun, data.verb, data.adj and data.adv.
"""

import sys
from collections import defaultdict
from pathlib import Path


def synsets(path):
    with open(path, encoding="latin-1") as f:
        for line in f:
            if line.startswith("  "):
                continue
            fields = line.split()
            count = int(fields[3], 16)
            words = fields[4 : 4 + 2 * count : 2]
            # adjective markers like "(a)" are attached to the lemma
            yield [w.split("(")[0].lower() for w in words]


def main():
    if len(sys.argv) != 2:
        sys.exit(__doc__.strip())
    root = Path(sys.argv[1])
    table = defaultdict(set)
    for pos in ("noun", "verb", "adj", "adv"):
        for words in synsets(root / f"data.{pos}"):
            for w in words:
                table[w].update(x for x in words if x != w)
    out = sys.stdout
    out.write("# headword\tsynonyms\n")
    for head in sorted(table):
        syns = sorted(s.replace("_", " ") for s in table[head])
        if syns and "_" not in head:
            out.write(f"{head}\t{', '.join(syns)}\n")


if __name__ == "__main__":
    main()
