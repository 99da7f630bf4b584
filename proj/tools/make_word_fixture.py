"""Builds the word-corpus test fixture from English text shipped with the OS.

The corpus is a stand-in for a crawled word list: the 686 most frequent
lowercase words (a-z only, at most 8 letters) in the license texts under
/usr/share/common-licenses, each repeated in proportion to its
frequency. Output is deterministic for a given set of source files.
"""
import collections
import gzip
import pathlib
import re
import sys

DISTINCT = 686
TOKENS = 65568
SOURCES = ["/usr/share/common-licenses"]


def texts():
    for root in SOURCES:
        for path in sorted(pathlib.Path(root).rglob("*")):
            if not path.is_file():
                continue
            name = path.name.lower()
            try:
                raw = path.read_bytes()
                if name.endswith(".gz"):
                    raw = gzip.decompress(raw)
                yield raw.decode("utf-8", errors="ignore")
            except (OSError, EOFError, gzip.BadGzipFile):
                continue


def main(out_dir):
    counts = collections.Counter()
    for text in texts():
        for token in re.findall(r"[A-Za-z]+", text):
            word = token.lower()
            if len(word) <= 8 and (len(word) > 1 or word in ("a", "i")):
                counts[word] += 1
    top = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:DISTINCT]
    total = sum(c for _, c in top)
    lines = []
    for word, c in top:
        lines += [word] * max(1, round(c * TOKENS / total))
    out = pathlib.Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "words_corpus.txt").write_text("\n".join(lines) + "\n")
    print(f"{len(top)} distinct words, {len(lines)} tokens")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "tests/data")
