"""Parameter container: shapes, initialization, mode-dependent activity."""

import numpy as np
import pytest

from tabletext.model import Model, ModelConfig


def cfg(**kw):
    base = dict(n_words=11, n_fields=5, d_word=4, d_field=3, d_hidden=6, d_decoder=5)
    base.update(kw)
    return ModelConfig(**base)


def test_parameter_shapes():
    m = Model(cfg())
    c = m.config
    assert m["emb_word"].shape == (11, 4)
    assert m["emb_field"].shape == (5, 3)
    assert m["enc_Wg"].shape == (3 * 6, 3 + 4)
    assert m["enc_Ug"].shape == (18, 6)
    assert m["att_Wf"].shape == (3, 4)
    assert m["att_Wc"].shape == (6, 4)
    assert m["link_L"].shape == (5, 5)
    assert m["gate_w"].shape == (5 + 3 + 4,)
    assert m["dec_Win"].shape == (5, 6 + 4)
    assert m["out_Ws"].shape == (11, 5)
    assert m["copy_Wc"].shape == (6, 5)
    assert c.max_decode_len == 40


def test_initialization_details():
    m = Model(cfg(seed=3))
    # link matrix starts with no transition preferences at all
    assert np.all(m["link_L"].data == 0.0)
    # forget gate bias opens the gate; other gate biases stay zero
    bg = m["enc_bg"].data
    assert np.all(bg[6:12] == 1.0)
    assert np.all(bg[:6] == 0.0) and np.all(bg[12:] == 0.0)
    assert np.all(np.abs(m["enc_Wg"].data) <= m.config.init_scale)
    # same seed, same weights; different seed, different weights
    again = Model(cfg(seed=3))
    assert all(np.array_equal(p.data, q.data)
               for p, q in zip(m.parameters(), again.parameters()))
    other = Model(cfg(seed=4))
    assert not np.array_equal(m["enc_Wg"].data, other["enc_Wg"].data)


def test_config_validation():
    with pytest.raises(ValueError, match="attention_mode"):
        Model(cfg(attention_mode="both"))
    with pytest.raises(ValueError, match="gate_mode"):
        Model(cfg(gate_mode="loose"))
    with pytest.raises(ValueError, match="copy_score"):
        Model(cfg(copy_score="softmax"))
    with pytest.raises(ValueError, match="fixed_gate"):
        Model(cfg(gate_mode="fixed", fixed_gate=1.5))
    with pytest.raises(ValueError, match="hybrid"):
        Model(cfg(attention_mode="content", gate_mode="fixed"))
    with pytest.raises(ValueError, match="positive"):
        Model(cfg(d_hidden=0))


def test_active_parameters_by_mode():
    names = lambda m: {p.name for p in m.active_parameters()}

    hybrid = names(Model(cfg()))
    assert {"att_Wf", "link_L", "gate_w", "copy_Wc"} <= hybrid

    content = names(Model(cfg(attention_mode="content")))
    assert "link_L" not in content and "gate_w" not in content
    assert "att_Wf" in content

    link = names(Model(cfg(attention_mode="link")))
    assert "att_Wf" not in link and "att_Wc" not in link and "gate_w" not in link
    assert "link_L" in link

    fixed = names(Model(cfg(gate_mode="fixed", fixed_gate=0.3)))
    assert "gate_w" not in fixed and "link_L" in fixed and "att_Wf" in fixed

    nocopy = names(Model(cfg(copy_enabled=False)))
    assert "copy_Wc" not in nocopy


def test_l2_parameters_are_active_weight_matrices():
    m = Model(cfg(attention_mode="link", copy_enabled=False))
    l2 = {p.name for p in m.l2_parameters()}
    assert "att_Wf" not in l2 and "copy_Wc" not in l2
    assert "link_L" not in l2               # the link matrix is never shrunk
    assert "emb_word" not in l2 and "enc_bg" not in l2
    assert {"enc_Wg", "enc_Ug", "dec_Win", "out_Ws"} <= l2


def test_config_json_roundtrip_and_hash():
    c = cfg(attention_mode="link", copy_enabled=False, seed=9)
    again = ModelConfig.from_json(c.to_json())
    assert again == c
    assert c.canonical_hash() == again.canonical_hash()
    assert c.canonical_hash() != cfg(seed=10).canonical_hash()
    with pytest.raises(ValueError, match="unknown config keys"):
        ModelConfig.from_json({**c.to_json(), "dropout": 0.5})


def test_zero_grad_clears_everything():
    m = Model(cfg())
    for p in m.parameters():
        p.grad[...] = 1.0
    m.zero_grad()
    assert all(np.all(p.grad == 0.0) for p in m.parameters())
