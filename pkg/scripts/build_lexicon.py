#!/usr/bin/env python3
"""Regenerate src/faqforge/data/lemmas.tsv from the synthetic vocabulary.

The shipped lexicon is a versioned data file; rerun this script after editing
the synthetic vocabulary tables and commit the result.
"""

from pathlib import Path

from faqforge import synthetic

# hand-curated entries beyond the generated vocabulary
BASE = {
    "threats": "threat",
    "attackers": "attacker",
    "merged": "merge",
    "questions": "question",
    "answers": "answer",
    "users": "user",
    "apps": "app",
    "conversations": "conversation",
    "splitting": "split",
}


def main() -> None:
    pairs = dict(BASE)
    pairs.update(synthetic.lexicon_pairs())
    drop = [s for s, l in pairs.items() if s == l]
    for s in drop:
        del pairs[s]
    out = Path(__file__).resolve().parent.parent / "src" / "faqforge" / "data" / "lemmas.tsv"
    lines = ["# surface\tlemma"]
    lines += [f"{surface}\t{pairs[surface]}" for surface in sorted(pairs)]
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {len(pairs)} entries to {out}")


if __name__ == "__main__":
    main()
