import numpy as np
import pytest

from lexipivot.caption import generate_caption
from lexipivot.corpus.vocab import BOS, EOS, PAD, UNK
from lexipivot.errors import InputError

from conftest import build_corpus, build_model


@pytest.fixture(scope="module")
def setup():
    bundle = build_corpus()
    model = build_model(bundle)
    lang = bundle.config.languages[0]
    feats = [bundle.features[s.scene_id] for s in bundle.scenes[lang][:8]]
    return model, lang, feats


def test_beam_width_one_equals_greedy(setup):
    model, lang, feats = setup
    for f in feats:
        greedy = generate_caption(model, lang, f, mode="greedy")
        beam = generate_caption(model, lang, f, mode="beam", beam_width=1)
        assert greedy == beam


def test_terminates_within_max_len(setup):
    model, lang, feats = setup
    for f in feats:
        tokens = generate_caption(model, lang, f)
        assert 1 <= len(tokens) <= model.dims.max_len - 1
        assert all(t not in (PAD, BOS, UNK) for t in tokens)


def test_wider_beam_never_worse_logprob(setup):
    model, lang, feats = setup

    def logprob(tokens, f):
        import numpy as np
        from lexipivot.numerics import no_grad
        total = 0.0
        with no_grad():
            regions = model.encode(np.asarray(f)[None])
            part = model.attention_precompute(regions)
            state = model.initial_state(1)
            prev = BOS
            for t in tokens:
                logits, state, _, _ = model.step(lang, state, np.array([prev]),
                                                 regions, part)
                row = logits.data[0]
                row = row - row.max()
                total += float(row[t] - np.log(np.exp(row).sum()))
                prev = t
        return total

    for f in feats[:4]:
        g = generate_caption(model, lang, f, mode="greedy")
        b = generate_caption(model, lang, f, mode="beam", beam_width=4)
        assert logprob(b, f) >= logprob(g, f) - 1e-9


def test_deterministic(setup):
    model, lang, feats = setup
    a = generate_caption(model, lang, feats[0], mode="beam", beam_width=3)
    b = generate_caption(model, lang, feats[0], mode="beam", beam_width=3)
    assert a == b


def test_bad_mode_and_width():
    bundle = build_corpus()
    model = build_model(bundle)
    lang = bundle.config.languages[0]
    feats = bundle.features[bundle.scenes[lang][0].scene_id]
    with pytest.raises(InputError):
        generate_caption(model, lang, feats, mode="sampled")
    with pytest.raises(InputError):
        generate_caption(model, lang, feats, mode="beam", beam_width=0)
