import pytest

from oracle_bridge.config import (
    BridgeConfig,
    load_config,
    parse_flat_file,
    resolve_loader,
)


def write(path, text):
    path.write_text(text)
    return path


class TestFlatFile:
    def test_parse_basic(self, tmp_path):
        cfg = write(
            tmp_path / "b.cfg",
            "# bridge\nmodel = oracle_bridge.stubs:fixed_vector\n"
            "port = 0\nmode = full\nstub_probs = 0.7,0.2,0.1\n",
        )
        config = load_config(cfg)
        assert config.model == "oracle_bridge.stubs:fixed_vector"
        assert config.port == 0
        assert config.extra("stub_probs") == "0.7,0.2,0.1"

    def test_unknown_key_rejected(self, tmp_path):
        cfg = write(tmp_path / "b.cfg", "model = a:b\ngpu = yes\n")
        with pytest.raises(ValueError, match="unknown key"):
            parse_flat_file(cfg)

    def test_model_required(self, tmp_path):
        cfg = write(tmp_path / "b.cfg", "port = 0\n")
        with pytest.raises(ValueError, match="model"):
            load_config(cfg)


class TestBridgeConfig:
    def test_bad_mode(self):
        with pytest.raises(ValueError):
            BridgeConfig(model="a:b", mode="logits")

    def test_topk_needs_headroom(self):
        with pytest.raises(ValueError):
            BridgeConfig(model="a:b", mode="topk", k=10, n_c=10)

    def test_positive_dims(self):
        with pytest.raises(ValueError):
            BridgeConfig(model="a:b", frame_count=0)


class TestLoaderResolution:
    def test_resolves(self):
        loader = resolve_loader("oracle_bridge.stubs:brightness_probe")
        assert callable(loader)

    def test_bad_spec(self):
        with pytest.raises(ValueError):
            resolve_loader("no_colon_here")

    def test_missing_attr(self):
        with pytest.raises(ValueError):
            resolve_loader("oracle_bridge.stubs:transformer_xxl")
