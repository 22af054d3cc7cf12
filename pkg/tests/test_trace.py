import pytest

from traindyn import (
    ActivationTrace,
    AnalysisConfig,
    DomainError,
    EpochRecord,
    ParseError,
    SchemaError,
    load_trace,
    save_trace,
    validate_trace,
)


def write(tmp_path, text, name="trace.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def make_trace(n_epochs=25, n_layers=4, with_acc=True):
    epochs = []
    for t in range(1, n_epochs + 1):
        epochs.append(
            EpochRecord(
                epoch=t,
                signals=[0.1 * t + 0.01 * l for l in range(n_layers)],
                val_accuracy=min(0.5 + 0.01 * t, 1.0) if with_acc else None,
            )
        )
    return ActivationTrace("run", [f"layer{l + 1}" for l in range(n_layers)], epochs)


class TestLoadCsv:
    def test_25_row_csv(self, tmp_path):
        lines = ["epoch,acc,layer1,layer2,layer3,layer4"]
        for t in range(1, 26):
            lines.append(f"{t},0.5,{0.1 * t},{0.2 * t},{0.3 * t},{0.4 * t}")
        trace = load_trace(write(tmp_path, "\n".join(lines) + "\n"), "csv")
        assert trace.n_epochs == 25
        assert trace.layer_names == ["layer1", "layer2", "layer3", "layer4"]
        assert trace.epochs[0].val_accuracy == 0.5

    def test_row_with_wrong_signal_count(self, tmp_path):
        text = "epoch,acc,layer1,layer2,layer3,layer4\n1,0.5,1.0,2.0,3.0\n"
        with pytest.raises(SchemaError, match="line 2"):
            load_trace(write(tmp_path, text), "csv")

    def test_accuracy_out_of_range(self, tmp_path):
        text = "epoch,acc,l1,l2\n1,1.2,1.0,2.0\n"
        with pytest.raises(DomainError):
            load_trace(write(tmp_path, text), "csv")

    def test_non_finite_signal(self, tmp_path):
        text = "epoch,acc,l1,l2\n1,0.5,nan,2.0\n"
        with pytest.raises(DomainError):
            load_trace(write(tmp_path, text), "csv")

    def test_unparseable_cell_has_line_number(self, tmp_path):
        text = "epoch,acc,l1,l2\n1,0.5,1.0,2.0\n2,0.5,oops,2.0\n"
        with pytest.raises(ParseError, match="line 3"):
            load_trace(write(tmp_path, text), "csv")

    def test_duplicate_epoch_rejected(self, tmp_path):
        text = "epoch,acc,l1,l2\n1,0.5,1,2\n1,0.5,1,2\n"
        with pytest.raises(SchemaError):
            load_trace(write(tmp_path, text), "csv")

    def test_acc_column_optional(self, tmp_path):
        text = "epoch,l1,l2\n1,1.0,2.0\n2,1.5,2.5\n"
        trace = load_trace(write(tmp_path, text), "csv")
        assert not trace.has_accuracy()
        assert trace.layer_names == ["l1", "l2"]

    def test_blank_acc_cell_means_missing(self, tmp_path):
        text = "epoch,acc,l1,l2\n1,,1.0,2.0\n2,0.6,1.5,2.5\n"
        trace = load_trace(write(tmp_path, text), "csv")
        assert trace.epochs[0].val_accuracy is None
        assert trace.epochs[1].val_accuracy == 0.6

    def test_leading_comment_lines_skipped(self, tmp_path):
        text = "# reduction=mean_all, batch=fixed, seed=3\nepoch,acc,l1,l2\n1,0.5,1,2\n"
        trace = load_trace(write(tmp_path, text), "csv")
        assert trace.n_epochs == 1

    def test_single_layer_rejected(self, tmp_path):
        text = "epoch,acc,l1\n1,0.5,1.0\n"
        with pytest.raises(SchemaError):
            load_trace(write(tmp_path, text), "csv")

    def test_epoch_gap_allowed(self, tmp_path):
        text = "epoch,acc,l1,l2\n1,0.5,1,2\n3,0.6,1,2\n"
        trace = load_trace(write(tmp_path, text), "csv")
        assert trace.epoch_indices == [1, 3]


class TestLoadJsonl:
    def test_round_trip_jsonl(self, tmp_path):
        trace = make_trace(10)
        path = tmp_path / "t.jsonl"
        save_trace(trace, path, "jsonl")
        again = load_trace(path, "jsonl")
        assert again.layer_names == trace.layer_names
        assert again.epochs == trace.epochs

    def test_layer_set_must_match_first_record(self, tmp_path):
        text = (
            '{"epoch": 1, "signals": {"a": 1.0, "b": 2.0}}\n'
            '{"epoch": 2, "signals": {"a": 1.0, "c": 2.0}}\n'
        )
        with pytest.raises(SchemaError, match="line 2"):
            load_trace(write(tmp_path, text, "t.jsonl"), "jsonl")

    def test_invalid_json_line(self, tmp_path):
        with pytest.raises(ParseError, match="line 1"):
            load_trace(write(tmp_path, "{nope\n", "t.jsonl"), "jsonl")


class TestRoundTrip:
    @pytest.mark.parametrize("fmt", ["csv", "jsonl"])
    @pytest.mark.parametrize("with_acc", [True, False])
    def test_serialize_then_load_is_identical(self, tmp_path, fmt, with_acc):
        trace = make_trace(25, 4, with_acc=with_acc)
        path = tmp_path / f"trace.{fmt}"
        save_trace(trace, path, fmt)
        again = load_trace(path, fmt)
        assert again.layer_names == trace.layer_names
        assert again.epochs == trace.epochs

    def test_no_rows_silently_dropped(self, tmp_path):
        trace = make_trace(17)
        path = tmp_path / "trace.csv"
        save_trace(trace, path, "csv")
        data_rows = [
            line for line in path.read_text().splitlines()[1:] if line.strip()
        ]
        assert len(data_rows) == load_trace(path, "csv").n_epochs == 17


class TestInvariants:
    def test_two_layers_minimum(self):
        with pytest.raises(SchemaError):
            ActivationTrace("r", ["only"], [EpochRecord(1, [1.0])])

    def test_signal_count_must_match_layers(self):
        with pytest.raises(SchemaError):
            ActivationTrace("r", ["a", "b"], [EpochRecord(1, [1.0])])

    def test_epoch_must_be_positive(self):
        with pytest.raises(DomainError):
            EpochRecord(0, [1.0, 2.0])


class TestValidateTrace:
    def test_short_series_warning(self):
        warnings = validate_trace(make_trace(10), AnalysisConfig())
        assert any("before epoch 16" in w for w in warnings)

    def test_constant_layer_named(self):
        epochs = [EpochRecord(t, [1.0, 0.1 * t], val_accuracy=0.5) for t in range(1, 21)]
        trace = ActivationTrace("r", ["layer1", "layer2"], epochs)
        warnings = validate_trace(trace, AnalysisConfig())
        assert any("layer1" in w for w in warnings)
        assert not any("layer2" in w for w in warnings)

    def test_missing_accuracy_warning(self):
        warnings = validate_trace(make_trace(20, with_acc=False), AnalysisConfig())
        assert any("accuracy-dependent diagnostics disabled" in w for w in warnings)

    def test_clean_long_trace_has_no_warnings(self):
        assert validate_trace(make_trace(30), AnalysisConfig()) == []


class TestAnalysisConfig:
    def test_weights_sum_to_one_exactly(self):
        cfg = AnalysisConfig(w_h=0.3)
        assert cfg.w_h + cfg.w_m == 1.0

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"w_h": 1.2},
            {"sigma_h": 0.0},
            {"rolling_window": 1},
            {"dfa_min_scale": 3},
            {"plateau_fraction": 0.0},
            {"phase_mode": "psychic"},
        ],
    )
    def test_invalid_configs_rejected(self, kwargs):
        with pytest.raises(DomainError):
            AnalysisConfig(**kwargs)
