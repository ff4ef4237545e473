import pytest

from probekit.corpus import Sentence, Token
from probekit.minicorpus import build_sentences


def make_sentence(forms, heads=None, deprels=None, upos=None, feats=None, sid="s"):
    tokens = []
    for i, form in enumerate(forms):
        tokens.append(
            Token(
                form=form,
                head=heads[i] if heads else None,
                deprel=deprels[i] if deprels else None,
                upos=upos[i] if upos else None,
                feats=(feats or {}).get(i, {}),
            )
        )
    return Sentence(id=sid, tokens=tokens)


@pytest.fixture(scope="session")
def small_corpus():
    """3k synthetic annotated sentences shared across unit tests."""
    return build_sentences(3000, seed=13)
