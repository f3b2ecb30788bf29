"""Published CNN importance results used as rendering and correlation fixtures."""

from nrrelief.engine import EngineParams, ImportanceReport, PairWeight

CNN_WEIGHTS = {
    "num_conv_layers": 0.385284,
    "lr": 0.227982,
    "dropout_rate": 0.130576,
    "optimizer": 0.042302,
    "epoch": 0.042060,
    "stride": 0.042030,
    "in_channel_num": 0.034890,
    "padding": 0.032672,
    "kernel": 0.028568,
    "num_fc_units": 0.018513,
    "batch_size": 0.015124,
}
CNN_RANKS = {name: r for r, name in enumerate(CNN_WEIGHTS, start=1)}

# top ten pairs as published; all involve num_conv_layers
CNN_PAIRS = [
    ("num_conv_layers", "dropout_rate", 0.679271),
    ("num_conv_layers", "optimizer", 0.616227),
    ("num_conv_layers", "epoch", 0.564162),
    ("num_conv_layers", "stride", 0.564025),
    ("num_conv_layers", "in_channel_num", 0.564008),
    ("num_conv_layers", "padding", 0.559995),
    ("num_conv_layers", "lr", 0.558755),
    ("num_conv_layers", "kernel", 0.556466),
    ("num_conv_layers", "batch_size", 0.550899),
    ("num_conv_layers", "num_fc_units", 0.549035),
]

# ranks from the FANOVA comparison; kernel/num_fc_units ranks disagree with their weights as printed
FANOVA_RANKS = dict(CNN_RANKS)

TWO_LAYER_WEIGHTS = {"filters_1": 0.510872, "filters_2": 0.489128}
THREE_LAYER_WEIGHTS = {"filters_1": 0.627518, "filters_2": 0.366161, "filters_3": 0.006321}

# names in declaration order of the bundled space
SPACE_ORDER = [
    "batch_size", "dropout_rate", "epoch", "in_channel_num", "kernel", "lr",
    "num_conv_layers", "num_fc_units", "optimizer", "padding", "stride",
]


def cnn_report() -> ImportanceReport:
    names = tuple(SPACE_ORDER)
    return ImportanceReport(
        names=names,
        weights=tuple(CNN_WEIGHTS[n] for n in names),
        ranks=tuple(CNN_RANKS[n] for n in names),
        pairs=tuple(PairWeight(a, b, w) for a, b, w in CNN_PAIRS),
        params=EngineParams(neighbors=30),
        n_records=10000,
        iterations=10000,
        neighbors_used=30,
    )


def layer_report(depth: int) -> ImportanceReport:
    weights = TWO_LAYER_WEIGHTS if depth == 2 else THREE_LAYER_WEIGHTS
    names = tuple(weights)
    return ImportanceReport(
        names=names,
        weights=tuple(weights.values()),
        ranks=tuple(range(1, len(names) + 1)),
        params=EngineParams(neighbors=30),
        raw_weights=tuple(weights.values()),
        fixed={"num_conv_layers": float(depth)},
    )
