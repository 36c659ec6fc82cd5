from mleval.configs import DnnConfig, ShallowConfig


def test_shallow_defaults_are_the_published_values():
    config = ShallowConfig()
    assert config.dt == {
        "max_depth": 200,
        "max_leaf_nodes": 1000,
        "min_samples_leaf": 2,
        "min_samples_split": 10,
        "ccp_alpha": 0.0001,
    }
    assert config.lightgbm == {
        "max_depth": 1000,
        "max_bin": 2000,
        "min_child_samples": 30,
        "min_data_in_bin": 50,
        "min_split_gain": 0.1,
        "n_estimators": 1000,
        "num_leaves": 3000,
        "learning_rate": 0.01,
        "reg_alpha": 0.001,
        "reg_lambda": 0.001,
        "n_jobs": 1,
    }
    assert config.bagging == {"n_estimators": 500, "max_samples": 100_000}


def test_dnn_defaults_match_published_architectures():
    config = DnnConfig()
    assert config.learning_rate == 0.01
    assert config.momentum == 0.9
    assert config.batch_size == 256
    assert config.early_stop_patience == 2
    assert config.mlp_layers == (300, 200, 160, 120, 60, 30, 10)
    assert config.mlp_dropout == (0.25, 0.25, 0.25, 0.2, 0.2, 0.2, 0.2)
    assert config.mlp_initializer == "he_uniform"
    assert config.ae_layers == (300, 200, 160, 120, 60, 30, 10, 30, 60, 120, 160, 200, 300)
    assert config.ae_layers == tuple(reversed(config.ae_layers))  # symmetric stack
    assert config.cnn_filters == ((64, 12), (128, 10), (256, 12))
    assert config.cnn_dense == 200
