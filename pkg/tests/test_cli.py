"""Command-line surface: exit codes, report shape, determinism."""

import json

import pytest

from qsproc import cli, fixtures, serialize
from qsproc.words import enumerate_words


def write(tmp_path, name, data):
    path = tmp_path / name
    path.write_text(serialize.dumps(data) if isinstance(data, dict) else data)
    return str(path)


@pytest.fixture
def qubit_files(tmp_path):
    model, site = fixtures.qubit_zx()
    return (
        write(tmp_path, "model.json", serialize.model_to_json(model)),
        write(tmp_path, "site.json", serialize.site_to_json(site)),
    )


class TestCheck:
    def test_valid_model_exits_zero(self, qubit_files, capsys):
        model_file, site_file = qubit_files
        assert cli.main(["check", model_file, site_file]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["ok"] is True
        assert "config" in report and "version" in report

    def test_corrupted_json_exits_two(self, tmp_path, qubit_files):
        bad = write(tmp_path, "bad.json", "{ not json")
        assert cli.main(["check", bad, qubit_files[1]]) == 2

    def test_missing_file_exits_two(self, qubit_files):
        assert cli.main(["check", "/nonexistent.json", qubit_files[1]]) == 2

    def test_projector_defect_exits_one(self, tmp_path, qubit_files, capsys):
        model, site = fixtures.qubit_zx()
        data = serialize.model_to_json(model)
        data["projectors"]["t2"]["+"] = [[[1.0, 0.0], [1.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]]
        bad_model = write(tmp_path, "bad_model.json", data)
        assert cli.main(["check", bad_model, qubit_files[1]]) == 1
        report = json.loads(capsys.readouterr().out)
        assert report["ok"] is False

    def test_text_format(self, qubit_files, capsys):
        model_file, site_file = qubit_files
        assert cli.main(["--format", "text", "check", model_file, site_file]) == 0
        out = capsys.readouterr().out
        assert "ok: True" in out


class TestKernels:
    def test_emits_table(self, qubit_files, capsys):
        model_file, site_file = qubit_files
        assert cli.main(["--policy", "atoms", "kernels", model_file, site_file]) == 0
        data = json.loads(capsys.readouterr().out)
        assert len(data["words"]) == 9
        assert "0,0" in data["values"]


class TestReconstruct:
    def test_from_model(self, qubit_files, capsys):
        model_file, site_file = qubit_files
        code = cli.main(
            ["reconstruct", model_file, "--site", site_file, "--verify"]
        )
        assert code == 0
        report = json.loads(capsys.readouterr().out)
        assert report["model"]["dim"] == 2
        assert report["provenance"]["rank"] == 2
        assert report["verification"]["ok"] is True

    def test_from_table_file(self, tmp_path, capsys):
        model, site = fixtures.qubit_zx()
        words = enumerate_words(site, model.spaces)
        oracle = model.kernel_table(site, words)
        table_file = write(tmp_path, "table.json", serialize.oracle_to_json(oracle))
        assert cli.main(["reconstruct", table_file]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["model"]["dim"] == 2

    def test_unit_only_table(self, tmp_path, capsys):
        from qsproc.kernels import KernelOracle
        from qsproc.sites import chain_site
        from qsproc.words import OutcomeSpaces, unit_word

        site = chain_site(("t",))
        spaces = OutcomeSpaces({"t": ("0",)})
        oracle = KernelOracle.from_values(site, spaces, [unit_word()], {(0, 0): 1.0})
        table_file = write(tmp_path, "unit.json", serialize.oracle_to_json(oracle))
        assert cli.main(["reconstruct", table_file]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["model"]["dim"] == 1

    def test_non_psd_table_exits_one(self, tmp_path, capsys):
        model, site = fixtures.qubit_zx()
        words = enumerate_words(site, model.spaces, policy="atoms_plus_unit")
        oracle = model.kernel_table(site, words)
        oracle.table[3, 3] = -1.0
        table_file = write(tmp_path, "bad.json", serialize.oracle_to_json(oracle))
        assert cli.main(["reconstruct", table_file]) == 1

    def test_byte_identical_reports(self, qubit_files, capsys):
        model_file, site_file = qubit_files
        cli.main(["reconstruct", model_file, "--site", site_file])
        first = capsys.readouterr().out
        cli.main(["reconstruct", model_file, "--site", site_file])
        second = capsys.readouterr().out
        assert first == second


class TestRoundtrip:
    def test_qubit(self, qubit_files, capsys):
        model_file, site_file = qubit_files
        assert cli.main(["roundtrip", model_file, site_file]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["roundtrip"]["ok"] is True
        assert report["dimensions"]["minimal_dimension"] == 2


class TestEquiv:
    def test_padded_model_pair(self, tmp_path, qubit_files, capsys):
        model, site = fixtures.qubit_zx()
        padded = fixtures.with_untouched_ancilla(model, 3)
        padded_file = write(tmp_path, "padded.json", serialize.model_to_json(padded))
        model_file, site_file = qubit_files
        assert cli.main(["equiv", "check", model_file, padded_file, site_file]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["equivalence"]["equivalent"] is True

        assert cli.main(["equiv", "unitary", model_file, padded_file, site_file]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["morphism"]["ok"] is True
        assert report["dimensions"] == {"first_minimal": 2, "second_minimal": 2}

    def test_inequivalent_pair(self, tmp_path, qubit_files, capsys):
        model, site = fixtures.qubit_zx()
        other = fixtures.commuting_diagonal(trivial_order=False)[0]
        data = serialize.model_to_json(model)
        data["projectors"]["t1"] = {
            "0": serialize.matrix_to_json(fixtures.X_ATOMS["+"]),
            "1": serialize.matrix_to_json(fixtures.X_ATOMS["-"]),
        }
        other_file = write(tmp_path, "other.json", data)
        model_file, site_file = qubit_files
        assert cli.main(["equiv", "check", model_file, other_file, site_file]) == 1


class TestMarkov:
    def test_qubit_fails_dynamicity(self, qubit_files, capsys):
        model_file, site_file = qubit_files
        assert cli.main(["markov", "check", model_file, site_file]) == 1
        report = json.loads(capsys.readouterr().out)
        assert report["dynamicity"]["ok"] is False

    def test_tensor_chain_passes(self, tmp_path, capsys):
        model, site = fixtures.tensor_chain(2)
        model_file = write(tmp_path, "chain.json", serialize.model_to_json(model))
        site_file = write(tmp_path, "chain_site.json", serialize.site_to_json(site))
        assert cli.main(["markov", "check", model_file, site_file]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["dynamicity"]["ok"] is True
        assert report["regression"]["ok"] is True


class TestLift:
    def test_two_point_field(self, tmp_path, capsys):
        atoms, xi, spaces = fixtures.two_point_field()
        data = {
            "depth": 2,
            "initial": serialize.matrix_to_json(xi[:, None]),
            "devices": {
                x: {o: serialize.matrix_to_json(m) for o, m in fam.items()}
                for x, fam in atoms.items()
            },
            "spaces": {x: list(v) for x, v in spaces.items()},
        }
        field_file = write(tmp_path, "field.json", data)
        assert cli.main(["lift", field_file]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["lift"]["ok"] is True

    def test_malformed_field_exits_two(self, tmp_path):
        field_file = write(tmp_path, "field.json", {"depth": 2})
        assert cli.main(["lift", field_file]) == 2


class TestClassical:
    def test_commuting_model(self, tmp_path, capsys):
        model, site = fixtures.commuting_diagonal()
        model_file = write(tmp_path, "cm.json", serialize.model_to_json(model))
        site_file = write(tmp_path, "cs.json", serialize.site_to_json(site))
        assert cli.main(["classical", model_file, site_file]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["classical"]["total_mass"] == pytest.approx(1.0)

    def test_noncommuting_refused(self, tmp_path, qubit_files, capsys):
        model_file, site_file = qubit_files
        assert cli.main(["classical", model_file, site_file]) == 1
        assert "refused" in capsys.readouterr().err


class TestConfig:
    def test_config_file_override(self, tmp_path, qubit_files, capsys):
        cfg = write(tmp_path, "cfg.json", {"cap": 50, "policy": "atoms_plus_unit"})
        model_file, site_file = qubit_files
        assert cli.main(["--config", cfg, "check", model_file, site_file]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["config"]["cap"] == 50
        assert report["words"] == 9

    def test_unknown_config_key_exits_two(self, tmp_path, qubit_files):
        cfg = write(tmp_path, "cfg.json", {"zzz": 1})
        assert cli.main(["--config", cfg, "check", *qubit_files]) == 2

    def test_cap_enforced(self, qubit_files):
        assert cli.main(["--cap", "3", "check", *qubit_files]) == 2
