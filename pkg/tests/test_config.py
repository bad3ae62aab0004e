import pytest

from slicetrl.config import ScenarioConfig, load_config, save_config
from slicetrl.errors import ConfigError


def test_defaults_reproduce_reference_scenario():
    cfg = ScenarioConfig()
    assert cfg.n_bs == 3
    assert cfg.isd_m == 500.0
    assert cfg.n_urllc_ue == 10
    assert cfg.n_embb_ue == 5
    assert cfg.n_tti == 3000
    assert cfg.explore_tti == 1000
    assert cfg.n_runs == 10
    assert cfg.urllc_load_mbps == 2.0


def test_counts_must_be_at_least_one():
    with pytest.raises(ConfigError) as ei:
        ScenarioConfig(n_urllc_ue=0)
    assert "n_urllc_ue" in str(ei.value)


def test_explore_cannot_exceed_total_ttis():
    with pytest.raises(ConfigError) as ei:
        ScenarioConfig(n_tti=100, explore_tti=200)
    assert "explore_tti" in str(ei.value)


def test_physical_quantities_positive():
    with pytest.raises(ConfigError):
        ScenarioConfig(mec_capacity_gcps=0.0)
    with pytest.raises(ConfigError):
        ScenarioConfig(tti_ms=-1.0)
    # offered loads may be zero, though
    assert ScenarioConfig(urllc_load_mbps=0.0).urllc_load_mbps == 0.0


def test_net_kind_validated():
    with pytest.raises(ConfigError):
        ScenarioConfig(net_kind="transformer")


def test_file_roundtrip(tmp_path):
    cfg = ScenarioConfig(urllc_load_mbps=3.0, rng_seed=42)
    path = tmp_path / "scenario.cfg"
    save_config(cfg, path)
    assert load_config(path) == cfg


def test_unknown_key_rejected(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("n_tti=100\nwarp_factor=9\n")
    with pytest.raises(ConfigError) as ei:
        load_config(path)
    assert "warp_factor" in str(ei.value)


def test_unparseable_value_names_field(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("n_tti=lots\n")
    with pytest.raises(ConfigError) as ei:
        load_config(path)
    assert "n_tti" in str(ei.value)


def test_comments_and_blanks_ignored(tmp_path):
    path = tmp_path / "ok.cfg"
    path.write_text("# scenario\n\nn_tti=500  # short run\nexplore_tti=100\n")
    cfg = load_config(path)
    assert cfg.n_tti == 500 and cfg.explore_tti == 100


def test_digest_stable_and_sensitive():
    a, b = ScenarioConfig(), ScenarioConfig()
    assert a.digest() == b.digest()
    assert a.digest() != ScenarioConfig(rng_seed=1).digest()
