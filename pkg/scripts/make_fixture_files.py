#!/usr/bin/env python3
"""Write the reference fixtures as JSON files for driving the CLI."""

import argparse
import pathlib

from qsproc import fixtures, serialize


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("outdir", nargs="?", default="fixtures_json")
    args = parser.parse_args()
    out = pathlib.Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)

    model, site = fixtures.qubit_zx()
    (out / "qubit_model.json").write_text(
        serialize.dumps(serialize.model_to_json(model))
    )
    (out / "qubit_site.json").write_text(serialize.dumps(serialize.site_to_json(site)))

    chain, chain_site_ = fixtures.tensor_chain(2)
    (out / "chain_model.json").write_text(
        serialize.dumps(serialize.model_to_json(chain))
    )
    (out / "chain_site.json").write_text(
        serialize.dumps(serialize.site_to_json(chain_site_))
    )

    commuting, trivial_site = fixtures.commuting_diagonal()
    (out / "commuting_model.json").write_text(
        serialize.dumps(serialize.model_to_json(commuting))
    )
    (out / "commuting_site.json").write_text(
        serialize.dumps(serialize.site_to_json(trivial_site))
    )

    atoms, xi, spaces = fixtures.two_point_field()
    field = {
        "depth": 3,
        "initial": serialize.matrix_to_json(xi[:, None]),
        "devices": {
            x: {o: serialize.matrix_to_json(m) for o, m in fam.items()}
            for x, fam in atoms.items()
        },
        "spaces": {x: list(v) for x, v in spaces.items()},
    }
    (out / "field.json").write_text(serialize.dumps(field))
    print(f"wrote fixture files to {out}/")


if __name__ == "__main__":
    main()
