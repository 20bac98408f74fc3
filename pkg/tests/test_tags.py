import re
from pathlib import Path

from gaugechain import tags, testing

SRC = Path(tags.__file__).parent
TAG_PATTERN = re.compile(r"\b(?:eq|thm|lemma|prop|sec)_\d")


class TestTags:
    def test_unique(self):
        assert len(set(tags.TAGS.values())) == len(tags.TAGS)

    def test_exponent_tags_cover_variants(self):
        assert set(tags.EXPONENT_TAGS) == set(testing.VARIANTS)

    def test_lookup(self):
        key = next(iter(tags.TAGS))
        assert tags.tag(key) == tags.TAGS[key]

    def test_tags_only_in_table(self):
        offenders = []
        for path in sorted(SRC.glob("*.py")) + sorted(SRC.glob("*.pyx")):
            if path.name == "tags.py":
                continue
            if TAG_PATTERN.search(path.read_text()):
                offenders.append(path.name)
        assert offenders == []
